//! Named check suites: each bundles a family of identities from one part
//! of the library into a [`CheckReport`]. The CLI dispatches here, and the
//! randomized probes all draw from one seeded generator so reports are
//! byte-stable for a fixed seed.

use std::sync::Arc;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::algebra::{regular_rep, right_convolve, ArrowFunction};
use crate::amenability::{
    amenability_witness_check, coefficient_of_regular, rho_operator, xi_from_pd, UnitField,
};
use crate::fixtures;
use crate::gns::{coefficient, gns, validate_representation};
use crate::groupoid::{bisection_partition, measures, singleton_partition, FiniteGroupoid};
use crate::gspec;
use crate::posdef::{
    is_cnd, is_positive_definite, properness_profile, schoenberg, ProfileQuery,
};
use crate::report::{CheckReport, Status};
use crate::sample;
use crate::treeing::{
    cayley_consistency, graphing_from_ids, haagerup_from_treeing, is_treeing, orient,
    sublevel_ball_bound, tree_metric, Graphing, TreeingError,
};
use crate::vnalg::{
    a_inner, complete_positivity_probe, cond_expectation, cp_from_pd, e_a, modular_conjugation,
    modular_flow, module_gram_schmidt, mult_operator, pd_from_cp, rank_one, state_phi, trace,
    verify_stinespring, VnElement,
};
use crate::Tolerances;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("unknown suite {0:?} (expected pd|cnd|treeing|vn|amen|haagerup)")]
    UnknownSuite(String),
    #[error("suite {0} requires at least one input file")]
    MissingInput(&'static str),
    #[error(transparent)]
    Treeing(#[from] TreeingError),
    #[error(transparent)]
    Gspec(#[from] gspec::GspecError),
}

/// Inputs a suite may receive from files.
pub enum SuiteInput {
    Function(String, ArrowFunction),
    ArrowIds(String, Vec<String>),
}

fn pd_witness(report: &crate::posdef::PdReport, g: &FiniteGroupoid) -> serde_json::Value {
    json!({
        "min_eig": report.min_eig(),
        "hermitian_defect": report.hermitian_defect,
        "units": report
            .units
            .iter()
            .map(|u| json!({"unit": g.unit_id(u.unit), "dim": u.dim, "min_eig": u.min_eig}))
            .collect::<Vec<_>>(),
    })
}

/// Positive-definiteness of each provided function.
pub fn pd_suite(
    g: &Arc<FiniteGroupoid>,
    subject: &str,
    inputs: &[(String, ArrowFunction)],
    tol: Tolerances,
) -> CheckReport {
    let mut report = CheckReport::new("pd", subject, None);
    for (label, f) in inputs {
        let pd = is_positive_definite(f, tol.algebraic);
        report.require(
            format!("pd.{label}"),
            pd.is_pd,
            (-pd.min_eig()).max(pd.hermitian_defect).max(0.0),
            pd_witness(&pd, g),
        );
    }
    report
}

/// Conditional-negative-definiteness of each provided function.
pub fn cnd_suite(
    g: &Arc<FiniteGroupoid>,
    subject: &str,
    inputs: &[(String, ArrowFunction)],
    tol: Tolerances,
) -> CheckReport {
    let _ = g;
    let mut report = CheckReport::new("cnd", subject, None);
    for (label, f) in inputs {
        match is_cnd(f, tol.algebraic) {
            Ok(cnd) => {
                let max_eig = cnd.units.iter().map(|u| u.min_eig).fold(0.0_f64, f64::max);
                report.require(
                    format!("cnd.{label}"),
                    cnd.is_cnd,
                    cnd.unit_defect.max(cnd.symmetry_defect).max(max_eig),
                    json!({
                        "unit_defect": cnd.unit_defect,
                        "symmetry_defect": cnd.symmetry_defect,
                        "max_compressed_eig": max_eig,
                    }),
                );
                report.require(
                    format!("cnd.{label}.nonnegative"),
                    cnd.min_value >= -tol.algebraic,
                    (-cnd.min_value).max(0.0),
                    json!({"min_value": cnd.min_value}),
                );
            }
            Err(e) => report.push(format!("cnd.{label}"), Status::Fail, f64::NAN, json!(e.to_string())),
        }
    }
    report
}

/// Graphing invariants, the tree test with cycle diagnostics, the induced
/// length function, and its exponential damping.
pub fn treeing_suite(
    g: &Arc<FiniteGroupoid>,
    subject: &str,
    inputs: &[(String, Vec<String>)],
    tol: Tolerances,
) -> CheckReport {
    let mut report = CheckReport::new("treeing", subject, None);
    for (label, ids) in inputs {
        let q = match graphing_from_ids(g, ids) {
            Ok(q) => q,
            Err(e) => {
                report.push(format!("treeing.{label}.graphing"), Status::Fail, f64::NAN, json!(e.to_string()));
                continue;
            }
        };
        report.push(format!("treeing.{label}.graphing"), Status::Pass, 0.0, serde_json::Value::Null);
        let tree = is_treeing(&q);
        let cycles: Vec<_> = tree
            .fibres
            .iter()
            .filter_map(|f| {
                f.cycle.as_ref().map(|c| json!({"unit": g.unit_id(f.unit), "cycle": c}))
            })
            .collect();
        report.require(
            format!("treeing.{label}.is_treeing"),
            tree.is_treeing,
            0.0,
            json!({
                "fibres": tree.fibres.iter().map(|f| json!({
                    "unit": g.unit_id(f.unit),
                    "vertices": f.n_vertices,
                    "edges": f.n_edges,
                    "connected": f.connected,
                })).collect::<Vec<_>>(),
                "cycles": cycles,
            }),
        );
        if !tree.is_treeing {
            continue;
        }
        let metric = tree_metric(&q).expect("treeing fibres are connected");
        let cnd = is_cnd(&metric.psi, tol.algebraic).expect("length function is real");
        report.require(format!("treeing.{label}.psi_cnd"), cnd.is_cnd, cnd.unit_defect, serde_json::Value::Null);
        for t in [0.25, 0.5, 1.0, 2.0] {
            let f = schoenberg(&metric.psi, t, tol.algebraic).expect("psi is cnd");
            let pd = is_positive_definite(&f, tol.algebraic);
            report.require(
                format!("treeing.{label}.schoenberg_t_{t}"),
                pd.is_pd,
                (-pd.min_eig()).max(0.0),
                serde_json::Value::Null,
            );
        }
        match orient(&q) {
            Ok(o) => report.push(
                format!("treeing.{label}.orientable"),
                Status::Pass,
                0.0,
                json!({
                    "q_plus": o.q_plus.iter().map(|&a| g.arrow_id(a)).collect::<Vec<_>>(),
                    "action_invariance_observed": o.action_invariance_observed,
                }),
            ),
            Err(e) => report.push(
                format!("treeing.{label}.orientable"),
                Status::Warn,
                0.0,
                json!(e.to_string()),
            ),
        }
        if g.n_units() == 1 {
            // Group case: relate the tree test to free generation.
            let gens: Vec<_> = q.arrows().to_vec();
            if let Ok(cayley) = cayley_consistency(g, &gens) {
                report.push(
                    format!("treeing.{label}.cayley_free"),
                    Status::Pass,
                    0.0,
                    json!({"free": cayley.free(), "generates": cayley.generates}),
                );
            }
        }
    }
    report
}

/// Algebra, modular, module/trace and round-trip identities on one
/// groupoid, driven by seeded random data.
pub fn vn_suite(
    g: &Arc<FiniteGroupoid>,
    subject: &str,
    seed: u64,
    tol: Tolerances,
    rounds: usize,
) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("vn", subject, Some(seed));
    let meas = measures(g);

    // Convolution algebra identities.
    let mut assoc: f64 = 0.0;
    let mut invol: f64 = 0.0;
    let mut inorm_gap: f64 = 0.0;
    let mut rep_mult: f64 = 0.0;
    let mut opnorm_gap: f64 = 0.0;
    let mut right_bound_gap: f64 = 0.0;
    for _ in 0..rounds {
        let f = sample::random_function(g, &mut rng);
        let h = sample::random_function(g, &mut rng);
        let k = sample::random_function(g, &mut rng);
        let fh = f.convolve(&h).unwrap();
        assoc = assoc.max(
            fh.convolve(&k).unwrap().max_deviation(&f.convolve(&h.convolve(&k).unwrap()).unwrap()),
        );
        invol = invol.max(fh.involute().max_deviation(&h.involute().convolve(&f.involute()).unwrap()));
        inorm_gap = inorm_gap.max(fh.i_norm() - f.i_norm() * h.i_norm());
        rep_mult = rep_mult.max(regular_rep(&fh).max_deviation(&regular_rep(&f).mul(&regular_rep(&h))));
        opnorm_gap = opnorm_gap.max(regular_rep(&f).op_norm() - f.i_norm());
        let (_, bound) = right_convolve(&f, &h).unwrap();
        right_bound_gap = right_bound_gap.max(bound.norm - bound.bound);
    }
    report.check("algebra.assoc", assoc, tol.algebraic);
    report.check("algebra.involution_antimult", invol, tol.algebraic);
    report.check("algebra.i_norm_submult", inorm_gap.max(0.0), tol.algebraic);
    report.check("algebra.regular_rep_mult", rep_mult, tol.algebraic);
    report.check("algebra.op_norm_le_i_norm", opnorm_gap.max(0.0), tol.algebraic);
    report.check("algebra.right_convolve_bound", right_bound_gap.max(0.0), tol.algebraic);

    // Modular identities.
    let mut j_iso: f64 = 0.0;
    let mut j_invol: f64 = 0.0;
    let mut jlj: f64 = 0.0;
    let mut flow_mult: f64 = 0.0;
    let mut flow_fixes_a: f64 = 0.0;
    let mut faithful: f64 = 0.0;
    for _ in 0..rounds {
        let f = sample::random_function(g, &mut rng);
        let xi = sample::random_function(g, &mut rng);
        j_iso = j_iso.max((modular_conjugation(&xi).l2_norm() - xi.l2_norm()).abs());
        j_invol = j_invol.max(modular_conjugation(&modular_conjugation(&xi)).max_deviation(&xi));
        let lhs = modular_conjugation(&regular_rep(&f).apply(&modular_conjugation(&xi)));
        let gfun = ArrowFunction::from_values(
            g,
            g.arrows().map(|a| f.involute().value(a) * meas.delta_f64(a).sqrt()).collect(),
        );
        jlj = jlj.max(lhs.max_deviation(&xi.convolve(&gfun).unwrap()));

        let m = VnElement::from_function(f.clone());
        let n = VnElement::from_function(xi.clone());
        let t = 0.37;
        flow_mult = flow_mult.max(
            modular_flow(&m.mul(&n).unwrap(), t)
                .coefficient()
                .max_deviation(modular_flow(&m, t).mul(&modular_flow(&n, t)).unwrap().coefficient()),
        );
        let diag = cond_expectation(&m);
        flow_fixes_a =
            flow_fixes_a.max(modular_flow(&diag, t).coefficient().max_deviation(diag.coefficient()));
        let phi = state_phi(&m.adjoint().mul(&m).unwrap());
        faithful = faithful.max((phi.re - f.l2_norm_sq()).abs().max(phi.im.abs()));
    }
    report.check("modular.j_isometry", j_iso, tol.algebraic);
    report.check("modular.j_involution", j_invol, tol.algebraic);
    report.check("modular.jlj_right_convolution", jlj, tol.algebraic);
    report.check("modular.flow_multiplicative", flow_mult, tol.algebraic);
    report.check("modular.flow_fixes_a", flow_fixes_a, tol.algebraic);
    report.check("modular.phi_faithful", faithful, tol.algebraic);

    // Module basis and trace.
    let parts = bisection_partition(g);
    let indicators: Vec<ArrowFunction> =
        parts.iter().map(|p| ArrowFunction::indicator(g, &p.arrows)).collect();
    let gs = module_gram_schmidt(&indicators, tol.algebraic).unwrap();
    let unchanged = indicators
        .iter()
        .zip(&gs.family)
        .map(|(a, b)| a.max_deviation(b))
        .fold(0.0_f64, f64::max);
    report.check("module.bisection_basis_orthonormal", gs.defect.max(unchanged), tol.algebraic);

    let mut scal: f64 = 0.0;
    for _ in 0..rounds.min(32) {
        let xi = sample::random_function(g, &mut rng);
        let lhs = a_inner(&xi, &xi).unwrap();
        let mut rhs = vec![Complex64::ZERO; g.n_units()];
        for basis in &indicators {
            let c = a_inner(basis, &xi).unwrap();
            for x in g.units() {
                rhs[x] += c[x].conj() * c[x];
            }
        }
        for x in g.units() {
            scal = scal.max((lhs[x] - rhs[x]).norm());
        }
    }
    report.check("module.inner_product_expansion", scal, tol.algebraic);

    let tr_ea = trace(&e_a(g), &parts).unwrap();
    report.check("trace.e_a_is_one", (tr_ea - Complex64::ONE).norm(), tol.algebraic);
    let ones = ArrowFunction::from_values(g, vec![Complex64::ONE; g.n_arrows()]);
    let total = meas.total_mass().to_f64().unwrap();
    let tr_m = trace(&mult_operator(&ones), &parts).unwrap();
    report.check("trace.mult_total_mass", (tr_m - Complex64::new(total, 0.0)).norm(), tol.algebraic);
    let mut partition_gap: f64 = 0.0;
    let mut rank_one_gap: f64 = 0.0;
    for _ in 0..rounds.min(32) {
        let xi = sample::random_function(g, &mut rng);
        let eta = sample::random_function(g, &mut rng);
        let op = rank_one(&xi, &eta).unwrap();
        let t1 = trace(&op, &parts).unwrap();
        let t2 = trace(&op, &singleton_partition(g)).unwrap();
        partition_gap = partition_gap.max((t1 - t2).norm());
        let inner = a_inner(&eta, &xi).unwrap();
        let tau: Complex64 = g.units().map(|x| inner[x] * g.mass_f64(x)).sum();
        rank_one_gap = rank_one_gap.max((t1 - tau).norm());
    }
    report.check("trace.partition_independent", partition_gap, tol.algebraic);
    report.check("trace.rank_one_formula", rank_one_gap, tol.algebraic);

    // Positive definite round trips.
    let mut cp_rt: f64 = 0.0;
    let mut stinespring_res: f64 = 0.0;
    let mut gns_rt: f64 = 0.0;
    let mut rep_defect: f64 = 0.0;
    let mut contraction_gap: f64 = 0.0;
    for _ in 0..rounds.min(16) {
        let f = sample::random_pd(g, &mut rng);
        let phi = cp_from_pd(&f, tol.algebraic).unwrap();
        for partition in [&parts, &singleton_partition(g)] {
            let back = pd_from_cp(&phi, partition, tol.algebraic).unwrap();
            cp_rt = cp_rt.max(back.max_deviation(&f));
        }
        let st = verify_stinespring(&f, tol.algebraic).unwrap();
        stinespring_res = stinespring_res.max(st.residual).max(st.isometry_defect);
        let out = gns(&f, tol.algebraic).unwrap();
        rep_defect = rep_defect.max(validate_representation(&out.rep).max_defect());
        gns_rt = gns_rt.max(coefficient(&out.rep, &out.section).unwrap().max_deviation(&f));
        let m = VnElement::from_function(sample::random_function(g, &mut rng));
        contraction_gap = contraction_gap.max(phi.apply(&m).unwrap().l2_norm() - m.l2_norm());
    }
    report.check("roundtrip.pd_cp_pd", cp_rt, tol.algebraic);
    report.check("roundtrip.stinespring_residual", stinespring_res, tol.spectral);
    report.check("roundtrip.gns_coefficient", gns_rt, tol.spectral);
    report.check("roundtrip.gns_representation_axioms", rep_defect, tol.algebraic);
    report.check("roundtrip.cp_l2_contraction", contraction_gap.max(0.0), tol.algebraic);

    // Complete positivity probe with its designed negative control.
    let f = sample::random_pd(g, &mut rng);
    let phi = cp_from_pd(&f, tol.algebraic).unwrap();
    let probe = complete_positivity_probe(&phi, 2, 8, &mut rng, 1e-9).unwrap();
    report.require("probe.cp_accepted", probe.positive, (-probe.min_eig).max(0.0), serde_json::Value::Null);
    if let Some(bad) = sample::random_non_pd(g, &mut rng) {
        let bad_phi = crate::vnalg::CpMap::from_multiplier(&bad);
        let probe = complete_positivity_probe(&bad_phi, 2, 8, &mut rng, 1e-9).unwrap();
        report.require(
            "probe.non_pd_rejected",
            !probe.positive,
            0.0,
            json!({"min_eig": probe.min_eig, "failing_sample": probe.failing_sample}),
        );
    }
    report
}

/// Amenability identities: coefficients of unit fields are positive
/// definite, every positive definite function is such a coefficient, and
/// the Gram blocks detect failure.
pub fn amen_suite(
    g: &Arc<FiniteGroupoid>,
    subject: &str,
    extra: &[(String, ArrowFunction)],
    seed: u64,
    tol: Tolerances,
    rounds: usize,
) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("amen", subject, Some(seed));

    let mut coeff_pd: f64 = 0.0;
    let mut round_trip: f64 = 0.0;
    let mut rho_psd: f64 = 0.0;
    for _ in 0..rounds {
        let field = UnitField::new(sample::random_unit_field(g, &mut rng)).unwrap();
        let f = coefficient_of_regular(&field);
        let pd = is_positive_definite(&f, tol.algebraic);
        coeff_pd = coeff_pd.max((-pd.min_eig()).max(0.0)).max(pd.hermitian_defect);

        let f2 = sample::random_pd(g, &mut rng);
        let back = coefficient_of_regular(&xi_from_pd(&f2, tol.algebraic).unwrap());
        round_trip = round_trip.max(back.max_deviation(&f2));
        rho_psd = rho_psd.max((-rho_operator(&f2).min_eigenvalue()).max(0.0));
    }
    report.check("amen.coefficient_is_pd", coeff_pd, tol.algebraic);
    report.check("amen.pd_is_coefficient", round_trip, tol.spectral);
    report.check("amen.rho_psd_on_pd", rho_psd, tol.algebraic);

    for (label, f) in extra {
        match xi_from_pd(f, tol.algebraic) {
            Ok(field) => {
                let dev = coefficient_of_regular(&field).max_deviation(f);
                report.check(format!("amen.{label}.round_trip"), dev, tol.spectral);
            }
            Err(e) => report.push(
                format!("amen.{label}.round_trip"),
                Status::Fail,
                f64::NAN,
                json!(e.to_string()),
            ),
        }
    }

    if let Some(bad) = sample::random_non_pd(g, &mut rng) {
        let min_eig = rho_operator(&bad).min_eigenvalue();
        report.require(
            "amen.rho_detects_non_pd",
            min_eig < -tol.algebraic && xi_from_pd(&bad, tol.algebraic).is_err(),
            0.0,
            json!({"min_eig": min_eig}),
        );
    }

    let stages = amenability_witness_check(&interpolated_fields(g, 4), 1e-12);
    let monotone = stages.windows(2).all(|w| w[1].max_deviation <= w[0].max_deviation + 1e-12);
    let final_dev = stages.last().map(|s| s.max_deviation).unwrap_or(0.0);
    report.require(
        "amen.witness_sequence_converges",
        monotone && final_dev <= tol.spectral,
        final_dev,
        json!({
            "deviations": stages.iter().map(|s| s.max_deviation).collect::<Vec<_>>(),
            "range_support_bounds": stages.iter().map(|s| s.range_support_bound).collect::<Vec<_>>(),
        }),
    );
    report
}

/// The canonical finite amenability witness: fields interpolating from the
/// unit-arrow indicator to the fibrewise uniform vector.
pub fn interpolated_fields(g: &Arc<FiniteGroupoid>, stages: usize) -> Vec<UnitField> {
    let mut out = Vec::new();
    for step in 1..=stages {
        let t = step as f64 / stages as f64;
        let mut xi = ArrowFunction::zero(g);
        for x in g.units() {
            let fibre = g.range_fibre(x);
            let n = fibre.len() as f64;
            for &a in fibre {
                let from_units = if a == g.unit_arrow(x) { 1.0 } else { 0.0 };
                xi.set(a, Complex64::new((1.0 - t) * from_units + t / n.sqrt(), 0.0));
            }
            let norm: f64 = fibre.iter().map(|&a| xi.value(a).norm_sqr()).sum::<f64>().sqrt();
            for &a in fibre {
                xi.set(a, xi.value(a) / norm);
            }
        }
        out.push(UnitField::new(xi).expect("normalized by construction"));
    }
    out
}

/// Treeing-derived Haagerup witnesses with the full clause-by-clause
/// validation.
pub fn haagerup_suite(
    g: &Arc<FiniteGroupoid>,
    subject: &str,
    ids: &[String],
    stages: usize,
    tol: Tolerances,
) -> Result<CheckReport, SuiteError> {
    let mut report = CheckReport::new("haagerup", subject, None);
    let q = graphing_from_ids(g, ids)?;
    let tree = is_treeing(&q);
    report.require("haagerup.is_treeing", tree.is_treeing, 0.0, serde_json::Value::Null);
    if !tree.is_treeing {
        return Ok(report);
    }
    let metric = tree_metric(&q)?;
    let cnd = is_cnd(&metric.psi, tol.algebraic).expect("length function is real");
    report.require("haagerup.psi_cnd", cnd.is_cnd, cnd.unit_defect, serde_json::Value::Null);

    let witness = haagerup_from_treeing(&q, stages, None)?;
    validate_treeing_witness(g, &q, &witness, tol, &mut report);
    Ok(report)
}

/// Shared clause validation for treeing witnesses.
pub fn validate_treeing_witness(
    g: &Arc<FiniteGroupoid>,
    q: &Graphing,
    witness: &[crate::treeing::WitnessStage],
    tol: Tolerances,
    report: &mut CheckReport,
) {
    for stage in witness {
        let k = stage.k;
        let pd = is_positive_definite(&stage.f, tol.algebraic);
        report.require(
            format!("haagerup.stage_{k}.pd"),
            pd.is_pd,
            (-pd.min_eig()).max(0.0),
            serde_json::Value::Null,
        );
        let unit_dev = g
            .units()
            .map(|x| (stage.f.value(g.unit_arrow(x)) - Complex64::ONE).norm())
            .fold(0.0_f64, f64::max);
        report.check(format!("haagerup.stage_{k}.unit_restriction"), unit_dev, tol.algebraic);
        report.require(
            format!("haagerup.stage_{k}.sup_rule"),
            stage.sup_deviation <= 1.0 / k as f64 + 1e-12,
            stage.sup_deviation,
            json!({"n_k": stage.n_k, "bound": 1.0 / k as f64}),
        );
        let profile = properness_profile(
            &stage.f,
            &[ProfileQuery::AbsAbove(0.5), ProfileQuery::AbsAbove(0.25)],
        );
        report.push(
            format!("haagerup.stage_{k}.properness_profile"),
            Status::Pass,
            0.0,
            json!(profile
                .iter()
                .map(|e| json!({
                    "threshold": e.threshold,
                    "mass": e.mass.to_string(),
                    "count": e.count,
                }))
                .collect::<Vec<_>>()),
        );
    }
    // Ball-count bound for the full treeing at the stage radii.
    if let Ok(metric) = tree_metric(q) {
        for stage in witness {
            let check = sublevel_ball_bound(q, &metric, stage.k);
            report.require(
                format!("haagerup.ball_bound_c_{}", stage.k),
                check.ball_bound_holds,
                0.0,
                json!({
                    "mass": check.mass.to_string(),
                    "ball_bound": check.ball_bound.to_string(),
                    "single_term_bound": check.crude_bound,
                    "single_term_bound_holds": check.crude_bound_holds,
                }),
            );
        }
    }
}

/// Run a named suite against file-loaded inputs.
pub fn run_named_suite(
    name: &str,
    g: &Arc<FiniteGroupoid>,
    subject: &str,
    inputs: Vec<SuiteInput>,
    seed: u64,
    tol: Tolerances,
) -> Result<CheckReport, SuiteError> {
    let functions: Vec<(String, ArrowFunction)> = inputs
        .iter()
        .filter_map(|i| match i {
            SuiteInput::Function(label, f) => Some((label.clone(), f.clone())),
            SuiteInput::ArrowIds(..) => None,
        })
        .collect();
    let id_lists: Vec<(String, Vec<String>)> = inputs
        .iter()
        .filter_map(|i| match i {
            SuiteInput::ArrowIds(label, ids) => Some((label.clone(), ids.clone())),
            SuiteInput::Function(..) => None,
        })
        .collect();

    match name {
        "pd" => {
            if functions.is_empty() {
                return Err(SuiteError::MissingInput("pd"));
            }
            Ok(pd_suite(g, subject, &functions, tol))
        }
        "cnd" => {
            if functions.is_empty() {
                return Err(SuiteError::MissingInput("cnd"));
            }
            Ok(cnd_suite(g, subject, &functions, tol))
        }
        "treeing" => {
            if id_lists.is_empty() {
                return Err(SuiteError::MissingInput("treeing"));
            }
            Ok(treeing_suite(g, subject, &id_lists, tol))
        }
        "vn" => Ok(vn_suite(g, subject, seed, tol, 50)),
        "amen" => Ok(amen_suite(g, subject, &functions, seed, tol, 25)),
        "haagerup" => {
            let (_, ids) = id_lists
                .first()
                .ok_or(SuiteError::MissingInput("haagerup"))?;
            haagerup_suite(g, subject, ids, 3, tol)
        }
        other => Err(SuiteError::UnknownSuite(other.to_string())),
    }
}

/// Materialized witness files plus their validation report.
pub struct WitnessBundle {
    /// (file name, JSON contents)
    pub files: Vec<(String, String)>,
    pub report: CheckReport,
}

/// Build and validate a treeing witness sequence, serializing each stage.
pub fn witness_treeing(
    g: &Arc<FiniteGroupoid>,
    subject: &str,
    ids: &[String],
    stages: usize,
    tol: Tolerances,
) -> Result<WitnessBundle, SuiteError> {
    let q = graphing_from_ids(g, ids)?;
    let tree = is_treeing(&q);
    if !tree.is_treeing {
        let cycles: Vec<_> = tree
            .fibres
            .iter()
            .filter_map(|f| f.cycle.as_ref().map(|c| json!({"unit": g.unit_id(f.unit), "cycle": c})))
            .collect();
        let mut report = CheckReport::new("witness-treeing", subject, None);
        report.require("haagerup.is_treeing", false, 0.0, json!({ "cycles": cycles }));
        return Ok(WitnessBundle { files: Vec::new(), report });
    }
    let witness = haagerup_from_treeing(&q, stages, None)?;
    let mut report = CheckReport::new("witness-treeing", subject, None);
    report.require("haagerup.is_treeing", true, 0.0, serde_json::Value::Null);
    validate_treeing_witness(g, &q, &witness, tol, &mut report);
    let files = witness
        .iter()
        .map(|stage| {
            (format!("f_{}.json", stage.k), gspec::function_to_json(&stage.f))
        })
        .collect();
    Ok(WitnessBundle { files, report })
}

/// Build the canonical amenability witness sequence and its report.
pub fn witness_amen(
    g: &Arc<FiniteGroupoid>,
    subject: &str,
    stages: usize,
    tol: Tolerances,
) -> WitnessBundle {
    let fields = interpolated_fields(g, stages);
    let summary = amenability_witness_check(&fields, 1e-12);
    let mut report = CheckReport::new("witness-amen", subject, None);
    for (i, stage) in summary.iter().enumerate() {
        report.push(
            format!("amen.stage_{}.deviation", i + 1),
            Status::Pass,
            stage.max_deviation,
            json!({
                "range_support_bound": stage.range_support_bound,
                "source_support_bound": stage.source_support_bound,
            }),
        );
    }
    let final_dev = summary.last().map(|s| s.max_deviation).unwrap_or(0.0);
    report.require("amen.final_deviation", final_dev <= tol.spectral, final_dev, serde_json::Value::Null);
    let files = fields
        .iter()
        .enumerate()
        .map(|(i, field)| (format!("xi_{}.json", i + 1), gspec::function_to_json(field.function())))
        .collect();
    WitnessBundle { files, report }
}

/// Run every suite that needs no extra inputs over the standard fixture
/// family; the CLI's whole-corpus mode and the determinism check.
pub fn run_fixture_corpus(seed: u64, tol: Tolerances) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for (name, g) in fixtures::named() {
        out.push(vn_suite(&g, name, seed, tol, 25));
        out.push(amen_suite(&g, name, &[], seed, tol, 15));
    }
    // Treeing suites on the fixtures with canonical treeings.
    let r2 = fixtures::r2();
    out.push(treeing_suite(
        &r2,
        "r2",
        &[("q".into(), vec!["ab".into(), "ba".into()])],
        tol,
    ));
    let r3 = fixtures::r3();
    out.push(treeing_suite(
        &r3,
        "r3",
        &[("q".into(), vec!["ab".into(), "ba".into(), "bc".into(), "cb".into()])],
        tol,
    ));
    let z2 = fixtures::z2();
    out.push(treeing_suite(&z2, "z2", &[("q".into(), vec!["g".into()])], tol));
    out
}
