//! Batch front end for the verification suites: parse a scenario file,
//! build the metric family it describes, run checks or field scans, and
//! emit plain-text reports.
//!
//! Exit codes: 0 when every requested check passes, 1 when any check
//! fails, 2 on configuration errors (bad scenario, bad flag, bad field).

mod report;
mod scenario;

use clap::{Parser, Subcommand};
use kahlerlab::curvature::kahler::{
    bach_tensor, cotton_data, kappa_via_wminus, ricci_form_data, RicciFormData,
};
use kahlerlab::curvature::{
    curvature_bundle, lagrangian_sectional_range, nijenhuis_norm, weyl_half_norm,
    CurvatureBundle, Frame,
};
use kahlerlab::families::{hirzebruch, FamilyInstance};
use kahlerlab::tensor::TwoForm;
use kahlerlab::verify::{sample_points, verify_instance, ToleranceConfig, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scenario::{ConfigError, Scenario};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "kahlerlab",
    about = "Identity-suite driver for explicit Kähler and almost-Kähler 4-manifold families"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the check suites over a scenario and write the report.
    Verify {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// Override the identity tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Override the number of sample points per box.
        #[arg(long)]
        samples: Option<usize>,
        /// Override the sampling seed (beats KAHLERLAB_SEED and the file).
        #[arg(long)]
        seed: Option<u64>,
        /// Report destination (default: scenario [output].report or stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate curvature fields over the sample grid into a table.
    Scan {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// Comma-separated field list (default: scenario [scan].fields).
        #[arg(long, value_delimiter = ',')]
        fields: Vec<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Table destination (default: scenario [output].scan or stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Jet truncation order used for the field evaluation (2..=4).
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
    /// Print the ruled-surface pencil coefficients and structure flags.
    Table {
        /// Lower momentum endpoint (0 < a < b).
        #[arg(long)]
        a: f64,
        /// Upper momentum endpoint.
        #[arg(long)]
        b: f64,
        /// Twist degree (positive integer).
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Base orientation sign (+1 or -1).
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the structure classification of the sampled instance.
    Classify {
        /// Scenario file (TOML).
        scenario: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum CliError {
    /// Configuration problem: exit 2, message on stderr.
    Config(String),
    /// At least one check failed: exit 1 (the report already says which).
    Failures,
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> CliError {
        CliError::Config(e.0)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failures) => ExitCode::from(1),
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Verify {
            scenario,
            tol,
            samples,
            seed,
            out,
        } => cmd_verify(&scenario, tol, samples, seed, out),
        Cmd::Scan {
            scenario,
            fields,
            tol,
            samples,
            seed,
            out,
            order,
        } => cmd_scan(&scenario, fields, tol, samples, seed, out, order),
        Cmd::Table { a, b, k, eps, out } => cmd_table(a, b, k, eps, out),
        Cmd::Classify {
            scenario,
            tol,
            samples,
            seed,
        } => cmd_classify(&scenario, tol, samples, seed),
    }
}

/// Default tolerances with the environment seed applied; flag values are
/// layered on after the scenario file so the precedence is
/// flag > file > environment > built-in.
fn env_base() -> Result<ToleranceConfig, CliError> {
    let mut cfg = ToleranceConfig::default();
    if let Ok(text) = std::env::var("KAHLERLAB_SEED") {
        cfg.rng_seed = text.parse().map_err(|_| {
            CliError::Config(format!(
                "KAHLERLAB_SEED: expected an unsigned integer, got '{text}'"
            ))
        })?;
    }
    Ok(cfg)
}

fn resolve_cfg(
    sc: &Scenario,
    tol: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
) -> Result<ToleranceConfig, CliError> {
    let mut cfg = sc.tolerances(env_base()?)?;
    if let Some(v) = tol {
        cfg.identity_tol = v;
    }
    if let Some(v) = samples {
        cfg.samples_per_box = v;
    }
    if let Some(v) = seed {
        cfg.rng_seed = v;
    }
    cfg.validate()
        .map_err(|e| CliError::Config(format!("--tol/--samples: {e}")))?;
    Ok(cfg)
}

fn write_out(dest: Option<&Path>, text: &str) -> Result<(), CliError> {
    match dest {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
    }
}

fn cmd_verify(
    path: &Path,
    tol: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let sc = Scenario::load(path)?;
    let inst = sc.build()?;
    let cfg = resolve_cfg(&sc, tol, samples, seed)?;
    let suites = sc.suites()?;

    let mut rep = verify_instance(&inst, &cfg)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(list) = suites {
        let prefixes: Vec<String> = list.iter().map(|s| format!("{}/", s.prefix())).collect();
        rep.checks
            .retain(|c| prefixes.iter().any(|p| c.name.starts_with(p.as_str())));
        rep.passed = rep.checks.iter().all(|c| c.verdict != Verdict::Fail);
    }

    let name = sc.name.as_deref().unwrap_or("scenario");
    let text = report::render_report(name, &rep, cfg.samples_per_box, cfg.rng_seed);
    let dest = out.or_else(|| {
        sc.output
            .as_ref()
            .and_then(|o| o.report.as_ref())
            .map(PathBuf::from)
    });
    write_out(dest.as_deref(), &text)?;
    if rep.passed {
        Ok(())
    } else {
        Err(CliError::Failures)
    }
}

/// Per-field minimum jet order: the Cotton-York block needs one more
/// metric derivative than the curvature, the Bach tensor two more.
fn field_min_order(field: &str) -> Result<usize, CliError> {
    Ok(match field {
        "s" | "p" | "mu" | "kappa" | "lambda" | "Wminus_norm" | "nijenhuis_norm"
        | "lagrangian_spread" | "psi" => 2,
        "Cminus_norm" => 3,
        "bach_norm" => 4,
        other => {
            return Err(CliError::Config(format!(
                "--fields: unknown field '{other}'"
            )))
        }
    })
}

struct ScanStack {
    frame: Frame,
    bundle: CurvatureBundle,
    omega_i: Option<TwoForm>,
    rfd: RicciFormData,
}

fn scan_field(
    inst: &FamilyInstance,
    st: &ScanStack,
    field: &str,
    p: &[f64; 4],
    idx: usize,
    cfg: &ToleranceConfig,
) -> f64 {
    match field {
        "s" => st.bundle.s.value(),
        "p" => st.rfd.p.value(),
        "mu" => st.rfd.mu.as_ref().map_or(f64::NAN, |j| j.value()),
        "lambda" => st.rfd.lambda.as_ref().map_or(f64::NAN, |j| j.value()),
        "kappa" => {
            let omega_i = st.omega_i.as_ref().or(st.rfd.omega_i.as_ref());
            omega_i.map_or(f64::NAN, |oi| {
                kappa_via_wminus(&st.frame, &st.bundle, oi)
            })
        }
        "Wminus_norm" => weyl_half_norm(&st.frame.metric, &st.bundle.weyl_minus),
        "Cminus_norm" => cotton_data(&st.frame, &st.bundle)
            .map_or(f64::NAN, |cd| cd.c_minus_norm),
        "bach_norm" => cotton_data(&st.frame, &st.bundle)
            .and_then(|cd| bach_tensor(&st.frame, &st.bundle, &cd))
            .map_or(f64::NAN, |bd| bd.norm),
        "nijenhuis_norm" => nijenhuis_norm(&st.frame),
        "lagrangian_spread" => {
            let mut rng = ChaCha8Rng::seed_from_u64(
                cfg.rng_seed ^ (idx as u64).wrapping_mul(0x9E3779B97F4A7C15),
            );
            let (lo, hi) = lagrangian_sectional_range(&st.frame, &st.bundle, &mut rng, 32);
            hi - lo
        }
        "psi" => inst
            .refs
            .sigma
            .as_ref()
            .map_or(f64::NAN, |sigma| 0.5 * sigma(p)),
        _ => f64::NAN,
    }
}

fn cmd_scan(
    path: &Path,
    flag_fields: Vec<String>,
    tol: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    order: usize,
) -> Result<(), CliError> {
    let sc = Scenario::load(path)?;
    let inst = sc.build()?;
    let cfg = resolve_cfg(&sc, tol, samples, seed)?;

    let fields = if flag_fields.is_empty() {
        sc.scan.as_ref().map(|s| s.fields.clone()).unwrap_or_default()
    } else {
        flag_fields
    };
    if fields.is_empty() {
        return Err(CliError::Config(
            "scan.fields: no fields requested (pass --fields or a [scan] block)".into(),
        ));
    }
    if !(2..=4).contains(&order) {
        return Err(CliError::Config(format!(
            "--order: jet order must be between 2 and 4, got {order}"
        )));
    }
    for f in &fields {
        let min = field_min_order(f)?;
        if order < min {
            return Err(CliError::Config(format!(
                "--order: field '{f}' needs jet order {min}, got {order}"
            )));
        }
        if f == "psi" && inst.refs.sigma.is_none() {
            return Err(CliError::Config(
                "--fields: psi is not defined for this family".into(),
            ));
        }
    }

    let pts = sample_points(&inst, &cfg);
    let mut rows = Vec::with_capacity(pts.len());
    for (idx, p) in pts.iter().enumerate() {
        let (frame, omega_i, _) = inst
            .frame_at(p, order)
            .map_err(|e| CliError::Config(format!("sample {p:?}: {e}")))?;
        let bundle = curvature_bundle(&frame)
            .map_err(|e| CliError::Config(format!("sample {p:?}: {e}")))?;
        let rfd = ricci_form_data(&frame, &bundle, f64::INFINITY, 1e-6)
            .map_err(|e| CliError::Config(format!("sample {p:?}: {e}")))?;
        let st = ScanStack {
            frame,
            bundle,
            omega_i,
            rfd,
        };
        let vals: Vec<f64> = fields
            .iter()
            .map(|f| scan_field(&inst, &st, f, p, idx, &cfg))
            .collect();
        rows.push((*p, vals));
    }

    let text = report::render_scan(&inst.name, &inst.coords, &fields, &rows);
    let dest = out.or_else(|| {
        sc.output
            .as_ref()
            .and_then(|o| o.scan.as_ref())
            .map(PathBuf::from)
    });
    write_out(dest.as_deref(), &text)
}

fn cmd_table(a: f64, b: f64, k: f64, eps: f64, out: Option<PathBuf>) -> Result<(), CliError> {
    let params = hirzebruch::pencil_coefficients(a, b, k, eps)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let text = report::render_table(a, b, k, eps, [params.a1, params.a2, params.a3, params.a4]);
    write_out(out.as_deref(), &text)
}

fn cmd_classify(
    path: &Path,
    tol: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let sc = Scenario::load(path)?;
    let inst = sc.build()?;
    let cfg = resolve_cfg(&sc, tol, samples, seed)?;
    let report = verify_instance(&inst, &cfg)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    println!("classification {}", report.classification);
    Ok(())
}
