use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use groupoidkit::groupoid::{
    bisection_partition, measures, orbit_and_isotropy, FiniteGroupoid,
};
use groupoidkit::gspec;
use groupoidkit::report::{CheckReport, Status};
use groupoidkit::suites::{self, SuiteInput};
use groupoidkit::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(
    name = "groupoidkit",
    version,
    about = "Finite measured groupoids: build, validate, and verify their operator-algebra identities"
)]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for the randomized probes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for algebraic identities.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_algebraic: f64,
    /// Tolerance for spectral assertions.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_spectral: f64,
    /// Directory for emitted witness files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load a GSPEC file and check every groupoid axiom.
    Validate { gspec: PathBuf },
    /// Run a named check suite: pd|cnd|treeing|vn|amen|haagerup.
    ///
    /// pd/cnd take arrow-function files, treeing/haagerup take a treeing
    /// file (JSON array of arrow ids); vn and amen need no extra inputs.
    Check {
        suite: String,
        gspec: PathBuf,
        /// Function or treeing files, distinguished by their JSON shape.
        inputs: Vec<PathBuf>,
    },
    /// Construct a witness sequence and write it to --out.
    ///
    /// `witness treeing <gspec> <treeing.json> <stages>` or
    /// `witness amen <gspec> <stages>`.
    Witness {
        source: String,
        gspec: PathBuf,
        args: Vec<String>,
    },
}

fn emit(report: &CheckReport, format: Format) {
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => println!("{}", report.to_json()),
    }
}

fn fail_usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

/// Load a groupoid, mapping parse errors to exit 2 and axiom failures to a
/// failing report with exit 1.
fn load_groupoid_or_exit(
    path: &Path,
    format: Format,
) -> Result<Arc<FiniteGroupoid>, ExitCode> {
    match gspec::load_groupoid(path) {
        Ok(g) => Ok(g),
        Err(e) if e.is_parse_error() => Err(fail_usage(&e.to_string())),
        Err(e) => {
            let mut report = CheckReport::new("validate", subject_of(path), None);
            report.push("groupoid.axioms", Status::Fail, f64::NAN, json!(e.to_string()));
            emit(&report, format);
            Err(ExitCode::from(1))
        }
    }
}

fn subject_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

fn cmd_validate(path: &Path, format: Format) -> ExitCode {
    let g = match load_groupoid_or_exit(path, format) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let mut report = CheckReport::new("validate", subject_of(path), None);
    report.push(
        "groupoid.axioms",
        Status::Pass,
        0.0,
        json!({"units": g.n_units(), "arrows": g.n_arrows()}),
    );

    let m = measures(&g);
    let cocycle_exact = g
        .composable_pairs()
        .all(|(a, b, ab)| m.delta[ab] == m.delta[a] * m.delta[b]);
    report.require(
        "measures.delta_cocycle",
        cocycle_exact,
        0.0,
        json!({"total_mass": m.total_mass().to_string()}),
    );

    let parts = bisection_partition(&g);
    let covers: usize = parts.iter().map(|p| p.arrows.len()).sum();
    report.require(
        "bisections.partition",
        covers == g.n_arrows() && parts.iter().all(|p| p.is_valid(&g)),
        0.0,
        json!({"pieces": parts.len()}),
    );

    let orbits = orbit_and_isotropy(&g);
    report.push(
        "orbits.summary",
        Status::Pass,
        0.0,
        json!({
            "classes": orbits.classes.len(),
            "isotropy_orders": orbits.isotropy.iter().map(|i| i.arrows.len()).collect::<Vec<_>>(),
        }),
    );
    emit(&report, format);
    ExitCode::from(report.exit_code() as u8)
}

/// A function file is a JSON object; a treeing file is a JSON array.
fn classify_input(path: &Path, g: &Arc<FiniteGroupoid>) -> Result<SuiteInput, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let label = subject_of(path);
    match value {
        serde_json::Value::Array(_) => gspec::parse_arrow_ids(&text)
            .map(|ids| SuiteInput::ArrowIds(label, ids))
            .map_err(|e| e.to_string()),
        serde_json::Value::Object(_) => gspec::parse_function(&text, g)
            .map(|f| SuiteInput::Function(label, f))
            .map_err(|e| e.to_string()),
        _ => Err(format!("{}: expected a JSON object or array", path.display())),
    }
}

fn cmd_check(
    suite: &str,
    gspec_path: &Path,
    inputs: &[PathBuf],
    seed: u64,
    tol: Tolerances,
    format: Format,
) -> ExitCode {
    let g = match load_groupoid_or_exit(gspec_path, format) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let mut suite_inputs = Vec::new();
    for path in inputs {
        match classify_input(path, &g) {
            Ok(i) => suite_inputs.push(i),
            Err(msg) => return fail_usage(&msg),
        }
    }
    match suites::run_named_suite(suite, &g, &subject_of(gspec_path), suite_inputs, seed, tol) {
        Ok(report) => {
            emit(&report, format);
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => fail_usage(&e.to_string()),
    }
}

fn write_witness_files(
    out_dir: &Path,
    files: &[(String, String)],
) -> Result<Vec<String>, String> {
    if files.is_empty() {
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

fn cmd_witness(
    source: &str,
    gspec_path: &Path,
    args: &[String],
    out_dir: &Path,
    tol: Tolerances,
    format: Format,
) -> ExitCode {
    let g = match load_groupoid_or_exit(gspec_path, format) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let subject = subject_of(gspec_path);
    let bundle = match source {
        "treeing" => {
            let [treeing_path, stages] = args else {
                return fail_usage("usage: witness treeing <gspec> <treeing.json> <stages>");
            };
            let Ok(stages) = stages.parse::<usize>() else {
                return fail_usage("stages must be a positive integer");
            };
            let ids = match gspec::load_arrow_ids(Path::new(treeing_path)) {
                Ok(ids) => ids,
                Err(e) => return fail_usage(&e.to_string()),
            };
            match suites::witness_treeing(&g, &subject, &ids, stages, tol) {
                Ok(bundle) => bundle,
                Err(e) => return fail_usage(&e.to_string()),
            }
        }
        "amen" => {
            let [stages] = args else {
                return fail_usage("usage: witness amen <gspec> <stages>");
            };
            let Ok(stages) = stages.parse::<usize>() else {
                return fail_usage("stages must be a positive integer");
            };
            suites::witness_amen(&g, &subject, stages, tol)
        }
        other => return fail_usage(&format!("unknown witness source {other:?}")),
    };

    match write_witness_files(out_dir, &bundle.files) {
        Ok(written) => {
            if format == Format::Text {
                for path in written {
                    println!("wrote {path}");
                }
            }
        }
        Err(msg) => return fail_usage(&msg),
    }
    emit(&bundle.report, format);
    ExitCode::from(bundle.report.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = Tolerances { algebraic: cli.tol_algebraic, spectral: cli.tol_spectral };
    match &cli.cmd {
        Cmd::Validate { gspec } => cmd_validate(gspec, cli.format),
        Cmd::Check { suite, gspec, inputs } => {
            cmd_check(suite, gspec, inputs, cli.seed, tol, cli.format)
        }
        Cmd::Witness { source, gspec, args } => {
            cmd_witness(source, gspec, args, &cli.out, tol, cli.format)
        }
    }
}
