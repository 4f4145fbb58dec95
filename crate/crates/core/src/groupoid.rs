//! Finite groupoid data model: arrows with range/source/compose/inverse
//! tables, a full-support unit weight, axiom validation, measures, bisection
//! partitions, orbits and reductions.
//!
//! Weights and the Radon-Nikodym cocycle are kept as exact rationals;
//! analytic modules convert to `f64` at the boundary.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Index of a unit in input order.
pub type UnitIx = usize;
/// Index of an arrow in input order.
pub type ArrowIx = usize;

/// Raw description of a groupoid, before any axiom has been checked.
///
/// The generator constructors ([`build_group`], [`build_equivalence`],
/// [`build_action_groupoid`]) fill the composition table explicitly and then
/// go through the same [`GroupoidSpec::build`] path as hand-written input.
#[derive(Debug, Clone, Default)]
pub struct GroupoidSpec {
    pub units: Vec<(String, Rational64)>,
    /// (id, src, dst)
    pub arrows: Vec<(String, String, String)>,
    /// (lhs, rhs, product) for every composable pair
    pub compose: Vec<(String, String, String)>,
    pub inverse: Vec<(String, String)>,
    pub unit_arrows: Vec<(String, String)>,
}

/// One violated groupoid axiom, with enough context to name the witnesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomViolation {
    DuplicateUnitId(String),
    DuplicateArrowId(String),
    UnknownUnit { context: String, id: String },
    UnknownArrow { context: String, id: String },
    NonPositiveMass { unit: String },
    MassSum { sum: Rational64 },
    CompositionOutOfDomain { lhs: String, rhs: String },
    DuplicateComposition { lhs: String, rhs: String },
    MissingComposition { lhs: String, rhs: String },
    CompositionEndpoints { lhs: String, rhs: String, product: String },
    NonAssociative { a: String, b: String, c: String },
    UnitLaw { arrow: String },
    InverseLaw { arrow: String },
    InverseEndpoints { arrow: String },
    UnitArrowEndpoints { unit: String, arrow: String },
    MissingUnitArrow { unit: String },
    NoUnits,
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use AxiomViolation::*;
        match self {
            DuplicateUnitId(id) => write!(f, "duplicate unit id {id:?}"),
            DuplicateArrowId(id) => write!(f, "duplicate arrow id {id:?}"),
            UnknownUnit { context, id } => write!(f, "unknown unit {id:?} in {context}"),
            UnknownArrow { context, id } => write!(f, "unknown arrow {id:?} in {context}"),
            NonPositiveMass { unit } => {
                write!(f, "full support required: unit {unit:?} has mass <= 0")
            }
            MassSum { sum } => write!(f, "unit masses sum to {sum}, expected 1"),
            CompositionOutOfDomain { lhs, rhs } => {
                write!(f, "pair ({lhs}, {rhs}) listed but src({lhs}) != dst({rhs})")
            }
            DuplicateComposition { lhs, rhs } => {
                write!(f, "pair ({lhs}, {rhs}) listed twice in composition table")
            }
            MissingComposition { lhs, rhs } => {
                write!(f, "composable pair ({lhs}, {rhs}) missing from composition table")
            }
            CompositionEndpoints { lhs, rhs, product } => {
                write!(f, "product {product} of ({lhs}, {rhs}) has wrong endpoints")
            }
            NonAssociative { a, b, c } => {
                write!(f, "associativity fails on triple ({a}, {b}, {c})")
            }
            UnitLaw { arrow } => write!(f, "unit law fails at arrow {arrow}"),
            InverseLaw { arrow } => write!(f, "inverse law fails at arrow {arrow}"),
            InverseEndpoints { arrow } => {
                write!(f, "inverse of {arrow} has wrong endpoints")
            }
            UnitArrowEndpoints { unit, arrow } => {
                write!(f, "unit arrow {arrow} at {unit} is not an endomorphism of {unit}")
            }
            MissingUnitArrow { unit } => write!(f, "no unit arrow declared for unit {unit:?}"),
            NoUnits => write!(f, "groupoid has no units"),
        }
    }
}

/// Axiom validation failed; every recorded violation is listed.
#[derive(Debug, Clone, Error)]
#[error("invalid groupoid: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct BuildError {
    pub violations: Vec<AxiomViolation>,
}

/// A validated finite groupoid with a full-support probability weight on
/// its units.
///
/// Immutable after construction; all tables are dense and indexed in input
/// order.
#[derive(Debug)]
pub struct FiniteGroupoid {
    unit_ids: Vec<String>,
    arrow_ids: Vec<String>,
    unit_index: HashMap<String, UnitIx>,
    arrow_index: HashMap<String, ArrowIx>,
    src: Vec<UnitIx>,
    dst: Vec<UnitIx>,
    compose: Vec<Option<ArrowIx>>,
    inverse: Vec<ArrowIx>,
    unit_arrow: Vec<ArrowIx>,
    mass: Vec<Rational64>,
    mass_f64: Vec<f64>,
    /// G_x = s^{-1}(x), in input arrow order.
    source_fibres: Vec<Vec<ArrowIx>>,
    /// G^x = r^{-1}(x), in input arrow order.
    range_fibres: Vec<Vec<ArrowIx>>,
}

impl FiniteGroupoid {
    pub fn n_units(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn n_arrows(&self) -> usize {
        self.arrow_ids.len()
    }

    pub fn unit_id(&self, x: UnitIx) -> &str {
        &self.unit_ids[x]
    }

    pub fn arrow_id(&self, a: ArrowIx) -> &str {
        &self.arrow_ids[a]
    }

    pub fn unit_ix(&self, id: &str) -> Option<UnitIx> {
        self.unit_index.get(id).copied()
    }

    pub fn arrow_ix(&self, id: &str) -> Option<ArrowIx> {
        self.arrow_index.get(id).copied()
    }

    /// Source map s.
    pub fn source(&self, a: ArrowIx) -> UnitIx {
        self.src[a]
    }

    /// Range map r.
    pub fn range(&self, a: ArrowIx) -> UnitIx {
        self.dst[a]
    }

    /// The product ab, defined exactly when s(a) = r(b).
    pub fn compose(&self, a: ArrowIx, b: ArrowIx) -> Option<ArrowIx> {
        self.compose[a * self.arrow_ids.len() + b]
    }

    pub fn inverse(&self, a: ArrowIx) -> ArrowIx {
        self.inverse[a]
    }

    pub fn unit_arrow(&self, x: UnitIx) -> ArrowIx {
        self.unit_arrow[x]
    }

    pub fn is_unit_arrow(&self, a: ArrowIx) -> bool {
        self.unit_arrow[self.src[a]] == a
    }

    pub fn mass(&self, x: UnitIx) -> Rational64 {
        self.mass[x]
    }

    pub fn mass_f64(&self, x: UnitIx) -> f64 {
        self.mass_f64[x]
    }

    /// s-fibre G_x, in input arrow order.
    pub fn source_fibre(&self, x: UnitIx) -> &[ArrowIx] {
        &self.source_fibres[x]
    }

    /// r-fibre G^x, in input arrow order.
    pub fn range_fibre(&self, x: UnitIx) -> &[ArrowIx] {
        &self.range_fibres[x]
    }

    pub fn units(&self) -> impl Iterator<Item = UnitIx> {
        0..self.unit_ids.len()
    }

    pub fn arrows(&self) -> impl Iterator<Item = ArrowIx> {
        0..self.arrow_ids.len()
    }

    /// All composable pairs (a, b), i.e. s(a) = r(b), with their product.
    pub fn composable_pairs(&self) -> impl Iterator<Item = (ArrowIx, ArrowIx, ArrowIx)> + '_ {
        let n = self.n_arrows();
        (0..n).flat_map(move |a| {
            (0..n).filter_map(move |b| self.compose(a, b).map(|ab| (a, b, ab)))
        })
    }

    /// Structural equality on identifiers and tables; weights included.
    pub fn same_as(&self, other: &FiniteGroupoid) -> bool {
        std::ptr::eq(self, other)
            || (self.unit_ids == other.unit_ids
                && self.arrow_ids == other.arrow_ids
                && self.src == other.src
                && self.dst == other.dst
                && self.compose == other.compose
                && self.inverse == other.inverse
                && self.unit_arrow == other.unit_arrow
                && self.mass == other.mass)
    }

    /// Dump back into a raw spec (used by serialization and fixtures).
    pub fn to_spec(&self) -> GroupoidSpec {
        GroupoidSpec {
            units: self
                .units()
                .map(|x| (self.unit_ids[x].clone(), self.mass[x]))
                .collect(),
            arrows: self
                .arrows()
                .map(|a| {
                    (
                        self.arrow_ids[a].clone(),
                        self.unit_ids[self.src[a]].clone(),
                        self.unit_ids[self.dst[a]].clone(),
                    )
                })
                .collect(),
            compose: self
                .composable_pairs()
                .map(|(a, b, ab)| {
                    (
                        self.arrow_ids[a].clone(),
                        self.arrow_ids[b].clone(),
                        self.arrow_ids[ab].clone(),
                    )
                })
                .collect(),
            inverse: self
                .arrows()
                .map(|a| (self.arrow_ids[a].clone(), self.arrow_ids[self.inverse[a]].clone()))
                .collect(),
            unit_arrows: self
                .units()
                .map(|x| (self.unit_ids[x].clone(), self.arrow_ids[self.unit_arrow[x]].clone()))
                .collect(),
        }
    }
}

impl GroupoidSpec {
    /// Validate every groupoid axiom and freeze the tables.
    ///
    /// All violations are collected (up to an internal cap) so reports can
    /// name the offending triple or unit.
    pub fn build(self) -> Result<Arc<FiniteGroupoid>, BuildError> {
        const CAP: usize = 64;
        let mut violations = Vec::new();
        let push = |violations: &mut Vec<AxiomViolation>, v: AxiomViolation| {
            if violations.len() < CAP {
                violations.push(v);
            }
        };

        if self.units.is_empty() {
            return Err(BuildError { violations: vec![AxiomViolation::NoUnits] });
        }

        let mut unit_index = HashMap::new();
        for (i, (id, _)) in self.units.iter().enumerate() {
            if unit_index.insert(id.clone(), i).is_some() {
                push(&mut violations, AxiomViolation::DuplicateUnitId(id.clone()));
            }
        }
        let mut arrow_index = HashMap::new();
        for (i, (id, _, _)) in self.arrows.iter().enumerate() {
            if arrow_index.insert(id.clone(), i).is_some() {
                push(&mut violations, AxiomViolation::DuplicateArrowId(id.clone()));
            }
        }

        // Weights: strictly positive, total mass one.
        let mut sum = Rational64::zero();
        for (id, m) in &self.units {
            if !m.is_positive() {
                push(&mut violations, AxiomViolation::NonPositiveMass { unit: id.clone() });
            }
            sum += m;
        }
        if sum != Rational64::one() {
            push(&mut violations, AxiomViolation::MassSum { sum });
        }

        let lookup_unit = |id: &str| unit_index.get(id).copied();
        let lookup_arrow = |id: &str| arrow_index.get(id).copied();

        let n = self.arrows.len();
        let mut src = vec![0usize; n];
        let mut dst = vec![0usize; n];
        let mut endpoints_ok = true;
        for (i, (id, s, r)) in self.arrows.iter().enumerate() {
            match lookup_unit(s) {
                Some(u) => src[i] = u,
                None => {
                    endpoints_ok = false;
                    push(
                        &mut violations,
                        AxiomViolation::UnknownUnit { context: format!("src of {id}"), id: s.clone() },
                    );
                }
            }
            match lookup_unit(r) {
                Some(u) => dst[i] = u,
                None => {
                    endpoints_ok = false;
                    push(
                        &mut violations,
                        AxiomViolation::UnknownUnit { context: format!("dst of {id}"), id: r.clone() },
                    );
                }
            }
        }
        if !endpoints_ok || !violations.is_empty() {
            // Unknown ids or duplicates poison every later table check.
            if !violations.is_empty() {
                return Err(BuildError { violations });
            }
        }

        // Composition table.
        let mut compose = vec![None; n * n];
        for (l, r, p) in &self.compose {
            let (Some(a), Some(b), Some(ab)) = (lookup_arrow(l), lookup_arrow(r), lookup_arrow(p))
            else {
                for (id, what) in [(l, "lhs"), (r, "rhs"), (p, "product")] {
                    if lookup_arrow(id).is_none() {
                        push(
                            &mut violations,
                            AxiomViolation::UnknownArrow {
                                context: format!("composition {what}"),
                                id: id.to_string(),
                            },
                        );
                    }
                }
                continue;
            };
            if src[a] != dst[b] {
                push(
                    &mut violations,
                    AxiomViolation::CompositionOutOfDomain { lhs: l.clone(), rhs: r.clone() },
                );
                continue;
            }
            if compose[a * n + b].is_some() {
                push(
                    &mut violations,
                    AxiomViolation::DuplicateComposition { lhs: l.clone(), rhs: r.clone() },
                );
            }
            if src[ab] != src[b] || dst[ab] != dst[a] {
                push(
                    &mut violations,
                    AxiomViolation::CompositionEndpoints {
                        lhs: l.clone(),
                        rhs: r.clone(),
                        product: p.clone(),
                    },
                );
            }
            compose[a * n + b] = Some(ab);
        }
        // Totality on the composable domain.
        for a in 0..n {
            for b in 0..n {
                if src[a] == dst[b] && compose[a * n + b].is_none() {
                    push(
                        &mut violations,
                        AxiomViolation::MissingComposition {
                            lhs: self.arrows[a].0.clone(),
                            rhs: self.arrows[b].0.clone(),
                        },
                    );
                }
            }
        }

        // Inverses.
        let mut inverse = vec![usize::MAX; n];
        for (a_id, inv_id) in &self.inverse {
            match (lookup_arrow(a_id), lookup_arrow(inv_id)) {
                (Some(a), Some(ai)) => inverse[a] = ai,
                _ => {
                    push(
                        &mut violations,
                        AxiomViolation::UnknownArrow {
                            context: "inverse table".into(),
                            id: format!("({a_id}, {inv_id})"),
                        },
                    );
                }
            }
        }
        for a in 0..n {
            if inverse[a] == usize::MAX {
                push(
                    &mut violations,
                    AxiomViolation::UnknownArrow {
                        context: "inverse table (missing entry)".into(),
                        id: self.arrows[a].0.clone(),
                    },
                );
            }
        }

        // Unit arrows.
        let m = self.units.len();
        let mut unit_arrow = vec![usize::MAX; m];
        for (u_id, a_id) in &self.unit_arrows {
            match (lookup_unit(u_id), lookup_arrow(a_id)) {
                (Some(x), Some(a)) => {
                    unit_arrow[x] = a;
                    if src[a] != x || dst[a] != x {
                        push(
                            &mut violations,
                            AxiomViolation::UnitArrowEndpoints {
                                unit: u_id.clone(),
                                arrow: a_id.clone(),
                            },
                        );
                    }
                }
                _ => push(
                    &mut violations,
                    AxiomViolation::UnknownUnit {
                        context: "unit_arrows table".into(),
                        id: format!("({u_id}, {a_id})"),
                    },
                ),
            }
        }
        for x in 0..m {
            if unit_arrow[x] == usize::MAX {
                push(
                    &mut violations,
                    AxiomViolation::MissingUnitArrow { unit: self.units[x].0.clone() },
                );
            }
        }

        if !violations.is_empty() {
            return Err(BuildError { violations });
        }

        let comp = |a: usize, b: usize| compose[a * n + b];

        // Unit and inverse laws.
        for a in 0..n {
            let ul = comp(unit_arrow[dst[a]], a);
            let ur = comp(a, unit_arrow[src[a]]);
            if ul != Some(a) || ur != Some(a) {
                push(&mut violations, AxiomViolation::UnitLaw { arrow: self.arrows[a].0.clone() });
            }
            let ai = inverse[a];
            if src[ai] != dst[a] || dst[ai] != src[a] {
                push(
                    &mut violations,
                    AxiomViolation::InverseEndpoints { arrow: self.arrows[a].0.clone() },
                );
                continue;
            }
            if comp(a, ai) != Some(unit_arrow[dst[a]]) || comp(ai, a) != Some(unit_arrow[src[a]]) {
                push(
                    &mut violations,
                    AxiomViolation::InverseLaw { arrow: self.arrows[a].0.clone() },
                );
            }
        }

        // Associativity over every composable triple.
        'outer: for a in 0..n {
            for b in 0..n {
                let Some(ab) = comp(a, b) else { continue };
                for c in 0..n {
                    let Some(bc) = comp(b, c) else { continue };
                    if comp(ab, c) != comp(a, bc) {
                        push(
                            &mut violations,
                            AxiomViolation::NonAssociative {
                                a: self.arrows[a].0.clone(),
                                b: self.arrows[b].0.clone(),
                                c: self.arrows[c].0.clone(),
                            },
                        );
                        if violations.len() >= CAP {
                            break 'outer;
                        }
                    }
                }
            }
        }

        if !violations.is_empty() {
            return Err(BuildError { violations });
        }

        let mut source_fibres = vec![Vec::new(); m];
        let mut range_fibres = vec![Vec::new(); m];
        for a in 0..n {
            source_fibres[src[a]].push(a);
            range_fibres[dst[a]].push(a);
        }

        let mass: Vec<Rational64> = self.units.iter().map(|(_, w)| *w).collect();
        let mass_f64 = mass.iter().map(|w| w.to_f64().unwrap()).collect();

        Ok(Arc::new(FiniteGroupoid {
            unit_ids: self.units.into_iter().map(|(id, _)| id).collect(),
            arrow_ids: self.arrows.into_iter().map(|(id, _, _)| id).collect(),
            unit_index,
            arrow_index,
            src,
            dst,
            compose,
            inverse,
            unit_arrow,
            mass,
            mass_f64,
            source_fibres,
            range_fibres,
        }))
    }
}

/// The lift nu of the unit weight to arrows via source fibres, its image
/// nu_inv under inversion, and the Radon-Nikodym cocycle delta = nu_inv/nu.
#[derive(Debug, Clone)]
pub struct ArrowMeasure {
    pub nu: Vec<Rational64>,
    pub nu_inv: Vec<Rational64>,
    pub delta: Vec<Rational64>,
}

impl ArrowMeasure {
    /// Total mass nu(G).
    pub fn total_mass(&self) -> Rational64 {
        self.nu.iter().sum()
    }

    pub fn delta_f64(&self, a: ArrowIx) -> f64 {
        self.delta[a].to_f64().unwrap()
    }
}

/// nu({a}) = mass(s(a)), nu_inv({a}) = mass(r(a)), delta = nu_inv/nu.
pub fn measures(g: &FiniteGroupoid) -> ArrowMeasure {
    let nu: Vec<Rational64> = g.arrows().map(|a| g.mass(g.source(a))).collect();
    let nu_inv: Vec<Rational64> = g.arrows().map(|a| g.mass(g.range(a))).collect();
    let delta = nu.iter().zip(&nu_inv).map(|(n, ni)| ni / n).collect();
    ArrowMeasure { nu, nu_inv, delta }
}

/// An arrow set on which both the range and the source map are injective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bisection {
    pub arrows: Vec<ArrowIx>,
}

impl Bisection {
    pub fn is_valid(&self, g: &FiniteGroupoid) -> bool {
        let mut seen_src = HashSet::new();
        let mut seen_dst = HashSet::new();
        self.arrows
            .iter()
            .all(|&a| seen_src.insert(g.source(a)) && seen_dst.insert(g.range(a)))
    }
}

/// Greedy partition of the arrows into bisections: scan in the given order,
/// place each arrow into the first piece that keeps src/dst injective, else
/// open a new piece. Deterministic; not required to be minimal.
pub fn bisection_partition_in_order(g: &FiniteGroupoid, order: &[ArrowIx]) -> Vec<Bisection> {
    let mut pieces: Vec<(HashSet<UnitIx>, HashSet<UnitIx>, Vec<ArrowIx>)> = Vec::new();
    for &a in order {
        let (s, r) = (g.source(a), g.range(a));
        match pieces.iter_mut().find(|(ss, rs, _)| !ss.contains(&s) && !rs.contains(&r)) {
            Some((ss, rs, arrows)) => {
                ss.insert(s);
                rs.insert(r);
                arrows.push(a);
            }
            None => pieces.push((HashSet::from([s]), HashSet::from([r]), vec![a])),
        }
    }
    pieces.into_iter().map(|(_, _, arrows)| Bisection { arrows }).collect()
}

/// Greedy bisection partition in input arrow order.
pub fn bisection_partition(g: &FiniteGroupoid) -> Vec<Bisection> {
    let order: Vec<ArrowIx> = g.arrows().collect();
    bisection_partition_in_order(g, &order)
}

/// Every singleton is a bisection; useful as an independent second partition.
pub fn singleton_partition(g: &FiniteGroupoid) -> Vec<Bisection> {
    g.arrows().map(|a| Bisection { arrows: vec![a] }).collect()
}

/// The isotropy group G(x) = arrows from x to x, closed under the ambient
/// composition.
#[derive(Debug, Clone)]
pub struct IsotropyGroup {
    pub unit: UnitIx,
    pub arrows: Vec<ArrowIx>,
}

/// Orbit equivalence relation of the groupoid together with the isotropy
/// bundle.
#[derive(Debug, Clone)]
pub struct Orbits {
    /// Orbit classes as sorted unit sets, ordered by least member.
    pub classes: Vec<Vec<UnitIx>>,
    /// The pairs (r(a), s(a)) realized by arrows, sorted.
    pub relation: Vec<(UnitIx, UnitIx)>,
    pub isotropy: Vec<IsotropyGroup>,
}

/// Image of a -> (r(a), s(a)) plus the per-unit isotropy groups.
pub fn orbit_and_isotropy(g: &FiniteGroupoid) -> Orbits {
    let mut relation: Vec<(UnitIx, UnitIx)> =
        g.arrows().map(|a| (g.range(a), g.source(a))).collect::<HashSet<_>>().into_iter().collect();
    relation.sort_unstable();

    let mut class_of: Vec<Option<usize>> = vec![None; g.n_units()];
    let mut classes: Vec<Vec<UnitIx>> = Vec::new();
    for x in g.units() {
        if class_of[x].is_some() {
            continue;
        }
        let k = classes.len();
        let mut class: Vec<UnitIx> = relation
            .iter()
            .filter(|(r, s)| *r == x || *s == x)
            .flat_map(|&(r, s)| [r, s])
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        class.sort_unstable();
        for &y in &class {
            class_of[y] = Some(k);
        }
        classes.push(class);
    }

    let isotropy = g
        .units()
        .map(|x| IsotropyGroup {
            unit: x,
            arrows: g.source_fibre(x).iter().copied().filter(|&a| g.range(a) == x).collect(),
        })
        .collect();

    Orbits { classes, relation, isotropy }
}

/// Errors of the derived constructors.
#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("group table: {0}")]
    GroupTable(String),
    #[error("partition: {0}")]
    Partition(String),
    #[error("action: {0}")]
    Action(String),
    #[error("reduction to an empty unit set")]
    EmptyReduction,
    #[error(transparent)]
    Axioms(#[from] BuildError),
}

/// A finite group presented by its multiplication table.
#[derive(Debug, Clone)]
pub struct GroupTable {
    pub elements: Vec<String>,
    pub identity: String,
    /// table[i][j] = elements[i] * elements[j]
    pub table: Vec<Vec<String>>,
}

impl GroupTable {
    fn index(&self) -> Result<HashMap<&str, usize>, ConstructError> {
        let mut ix = HashMap::new();
        for (i, e) in self.elements.iter().enumerate() {
            if ix.insert(e.as_str(), i).is_some() {
                return Err(ConstructError::GroupTable(format!("duplicate element {e:?}")));
            }
        }
        if !ix.contains_key(self.identity.as_str()) {
            return Err(ConstructError::GroupTable(format!(
                "identity {:?} is not an element",
                self.identity
            )));
        }
        Ok(ix)
    }

    /// Product as indices, with closure checking.
    fn product_table(&self) -> Result<Vec<Vec<usize>>, ConstructError> {
        let ix = self.index()?;
        let k = self.elements.len();
        if self.table.len() != k || self.table.iter().any(|row| row.len() != k) {
            return Err(ConstructError::GroupTable(format!("table is not {k}x{k}")));
        }
        self.table
            .iter()
            .map(|row| {
                row.iter()
                    .map(|p| {
                        ix.get(p.as_str()).copied().ok_or_else(|| {
                            ConstructError::GroupTable(format!("product {p:?} is not an element"))
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// One-unit groupoid from a group multiplication table. Inverses are read
/// off the table; a row without the identity is reported as a missing
/// inverse. Associativity is caught by the shared validation path.
pub fn build_group(table: &GroupTable) -> Result<Arc<FiniteGroupoid>, ConstructError> {
    let prod = table.product_table()?;
    let ix = table.index()?;
    let e = ix[table.identity.as_str()];
    let k = table.elements.len();

    let mut inv = vec![usize::MAX; k];
    for (i, row) in prod.iter().enumerate() {
        match row.iter().position(|&p| p == e) {
            Some(j) if prod[j][i] == e => inv[i] = j,
            _ => {
                return Err(ConstructError::GroupTable(format!(
                    "element {:?} has no two-sided inverse",
                    table.elements[i]
                )))
            }
        }
    }

    let unit = table.identity.clone();
    let spec = GroupoidSpec {
        units: vec![(unit.clone(), Rational64::one())],
        arrows: table.elements.iter().map(|g| (g.clone(), unit.clone(), unit.clone())).collect(),
        compose: (0..k)
            .flat_map(|i| {
                let prod = &prod;
                let els = &table.elements;
                (0..k).map(move |j| (els[i].clone(), els[j].clone(), els[prod[i][j]].clone()))
            })
            .collect(),
        inverse: (0..k)
            .map(|i| (table.elements[i].clone(), table.elements[inv[i]].clone()))
            .collect(),
        unit_arrows: vec![(unit, table.identity.clone())],
    };
    Ok(spec.build()?)
}

/// Equivalence-relation groupoid of a partition of the units: arrows are the
/// ordered pairs (x, y) within a block, with r(x,y) = x and s(x,y) = y, and
/// the arrow id is the concatenation of the two unit ids.
pub fn build_equivalence(
    units: &[(String, Rational64)],
    blocks: &[Vec<String>],
    ) -> Result<Arc<FiniteGroupoid>, ConstructError> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (b, block) in blocks.iter().enumerate() {
        for u in block {
            if units.iter().all(|(id, _)| id != u) {
                return Err(ConstructError::Partition(format!("block member {u:?} is not a unit")));
            }
            if seen.insert(u.as_str(), b).is_some() {
                return Err(ConstructError::Partition(format!("unit {u:?} lies in two blocks")));
            }
        }
    }
    for (id, _) in units {
        if !seen.contains_key(id.as_str()) {
            return Err(ConstructError::Partition(format!("unit {id:?} not covered by a block")));
        }
    }

    let pair_id = |x: &str, y: &str| format!("{x}{y}");
    let mut arrows = Vec::new();
    let mut compose = Vec::new();
    let mut inverse = Vec::new();
    // Pairs in unit input order within each block, blocks in input order.
    let ordered_block = |block: &Vec<String>| -> Vec<String> {
        units.iter().map(|(id, _)| id.clone()).filter(|id| block.contains(id)).collect()
    };
    for block in blocks {
        let bl = ordered_block(block);
        for x in &bl {
            for y in &bl {
                arrows.push((pair_id(x, y), y.clone(), x.clone()));
                inverse.push((pair_id(x, y), pair_id(y, x)));
                for z in &bl {
                    compose.push((pair_id(x, y), pair_id(y, z), pair_id(x, z)));
                }
            }
        }
    }
    let spec = GroupoidSpec {
        units: units.to_vec(),
        arrows,
        compose,
        inverse,
        unit_arrows: units.iter().map(|(id, _)| (id.clone(), pair_id(id, id))).collect(),
    };
    Ok(spec.build()?)
}

/// Semi-direct product groupoid of a right action of a finite group on the
/// units: arrows are pairs (x, t) with r(x,t) = x and s(x,t) = x.t, realized
/// with id the concatenation of the unit and element ids.
///
/// `action` lists triples (x, t, x.t); it must be total and a genuine right
/// action.
pub fn build_action_groupoid(
    group: &GroupTable,
    units: &[(String, Rational64)],
    action: &[(String, String, String)],
) -> Result<Arc<FiniteGroupoid>, ConstructError> {
    let prod = group.product_table()?;
    let gix = group.index()?;
    let e = gix[group.identity.as_str()];
    let uix: HashMap<&str, usize> = units.iter().enumerate().map(|(i, (id, _))| (id.as_str(), i)).collect();

    let k = group.elements.len();
    let m = units.len();
    let mut act = vec![usize::MAX; m * k];
    for (x, t, y) in action {
        let (Some(&xu), Some(&tg), Some(&yu)) =
            (uix.get(x.as_str()), gix.get(t.as_str()), uix.get(y.as_str()))
        else {
            return Err(ConstructError::Action(format!("unknown id in triple ({x}, {t}, {y})")));
        };
        if act[xu * k + tg] != usize::MAX {
            return Err(ConstructError::Action(format!("duplicate action entry for ({x}, {t})")));
        }
        act[xu * k + tg] = yu;
    }
    for x in 0..m {
        for t in 0..k {
            if act[x * k + t] == usize::MAX {
                return Err(ConstructError::Action(format!(
                    "action is missing ({}, {})",
                    units[x].0, group.elements[t]
                )));
            }
        }
    }
    // Right action axioms: x.e = x and (x.s).t = x.(st).
    for x in 0..m {
        if act[x * k + e] != x {
            return Err(ConstructError::Action(format!("{}.identity != {}", units[x].0, units[x].0)));
        }
        for s in 0..k {
            for t in 0..k {
                if act[act[x * k + s] * k + t] != act[x * k + prod[s][t]] {
                    return Err(ConstructError::Action(format!(
                        "({}.{}).{} != {}.({}{})",
                        units[x].0,
                        group.elements[s],
                        group.elements[t],
                        units[x].0,
                        group.elements[s],
                        group.elements[t],
                    )));
                }
            }
        }
    }

    let aid = |x: usize, t: usize| format!("{}{}", units[x].0, group.elements[t]);
    let mut arrows = Vec::new();
    let mut compose = Vec::new();
    let mut inverse = Vec::new();
    for x in 0..m {
        for t in 0..k {
            // (x, t): r = x, s = x.t
            arrows.push((aid(x, t), units[act[x * k + t]].0.clone(), units[x].0.clone()));
            // (x, t)^{-1} = (x.t, t^{-1})
            let tinv = (0..k).find(|&j| prod[t][j] == e).unwrap();
            inverse.push((aid(x, t), aid(act[x * k + t], tinv)));
            // (x, s)(x.s, t) = (x, st)
            for t2 in 0..k {
                compose.push((aid(x, t), aid(act[x * k + t], t2), aid(x, prod[t][t2])));
            }
        }
    }
    let spec = GroupoidSpec {
        units: units.to_vec(),
        arrows,
        compose,
        inverse,
        unit_arrows: (0..m).map(|x| (units[x].0.clone(), aid(x, e))).collect(),
    };
    Ok(spec.build()?)
}

/// Reduction of the groupoid to a nonempty unit subset, with weights
/// renormalized to total mass one.
pub fn reduction(
    g: &FiniteGroupoid,
    keep: &[UnitIx],
) -> Result<Arc<FiniteGroupoid>, ConstructError> {
    let keep: HashSet<UnitIx> = keep.iter().copied().collect();
    if keep.is_empty() {
        return Err(ConstructError::EmptyReduction);
    }
    let total: Rational64 = g.units().filter(|x| keep.contains(x)).map(|x| g.mass(x)).sum();
    let surviving: HashSet<ArrowIx> = g
        .arrows()
        .filter(|&a| keep.contains(&g.source(a)) && keep.contains(&g.range(a)))
        .collect();

    let spec = GroupoidSpec {
        units: g
            .units()
            .filter(|x| keep.contains(x))
            .map(|x| (g.unit_id(x).to_string(), g.mass(x) / total))
            .collect(),
        arrows: g
            .arrows()
            .filter(|a| surviving.contains(a))
            .map(|a| {
                (
                    g.arrow_id(a).to_string(),
                    g.unit_id(g.source(a)).to_string(),
                    g.unit_id(g.range(a)).to_string(),
                )
            })
            .collect(),
        compose: g
            .composable_pairs()
            .filter(|(a, b, _)| surviving.contains(a) && surviving.contains(b))
            .map(|(a, b, ab)| {
                (
                    g.arrow_id(a).to_string(),
                    g.arrow_id(b).to_string(),
                    g.arrow_id(ab).to_string(),
                )
            })
            .collect(),
        inverse: g
            .arrows()
            .filter(|a| surviving.contains(a))
            .map(|a| (g.arrow_id(a).to_string(), g.arrow_id(g.inverse(a)).to_string()))
            .collect(),
        unit_arrows: g
            .units()
            .filter(|x| keep.contains(x))
            .map(|x| (g.unit_id(x).to_string(), g.arrow_id(g.unit_arrow(x)).to_string()))
            .collect(),
    };
    Ok(spec.build()?)
}

/// Parse a rational written as `p/q` or as a plain integer.
pub fn parse_mass(s: &str) -> Option<Rational64> {
    s.trim().parse::<Rational64>().ok()
}

/// BTreeMap of unit id -> mass string, canonical for reports.
pub fn mass_table(g: &FiniteGroupoid) -> BTreeMap<String, String> {
    g.units().map(|x| (g.unit_id(x).to_string(), g.mass(x).to_string())).collect()
}
