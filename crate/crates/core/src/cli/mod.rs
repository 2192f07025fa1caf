//! Batch front end: loads a matrix, runs one analysis and renders the
//! result as text or a single JSON document. The binary is a thin clap
//! wrapper around [`run`].

mod reproduce;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub use reproduce::{reproduce_paper, CheckGroup, CheckLine, ReproduceOptions, ReproduceReport};

use crate::classify::{classify_kernel, ClassifyConfig, KernelReport};
use crate::error::Error;
use crate::matcore::io::read_matrix;
use crate::matcore::{SquareMatrix, Tolerance};
use crate::mcverify::{
    closed_form_laplace, empirical_laplace, sample_squared_gaussian, verify_conditioning,
    ConditioningCheck, LtEstimate,
};
use crate::permanent::{
    cycle_polynomial, default_gamma_grid, per_b, vere_jones_check, Exponent, GammaOutcome,
    VjReport, MAX_SEARCH_ORDER,
};
use crate::reduce::{reduce_scan, ReduceScan};
use crate::serde_util::format_set;

/// Exit code for a completed analysis, whatever the verdicts.
pub const EXIT_OK: i32 = 0;
/// Exit code for unreadable input or invalid parameters.
pub const EXIT_INPUT: i32 = 1;
/// Exit code when the numerical work failed everywhere (for example a
/// singular resolvent at every grid point).
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classify,
    VereJones,
    Permanent,
    ReduceScan,
    McVerify,
    ReproducePaper,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::VereJones => "vere-jones",
            Command::Permanent => "permanent",
            Command::ReduceScan => "reduce-scan",
            Command::McVerify => "mc-verify",
            Command::ReproducePaper => "reproduce-paper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    pub b: f64,
    pub gamma_grid: Option<Vec<f64>>,
    pub max_order: usize,
    pub sigma_grid: Option<Vec<f64>>,
    /// 0-based; defaults to the last index.
    pub pivot: Option<usize>,
    pub seed: u64,
    pub samples: usize,
    pub format: OutputFormat,
    /// Omit the timestamp so identical runs give identical bytes.
    pub deterministic: bool,
    pub tol: Tolerance,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            input_path: None,
            b: 0.5,
            gamma_grid: None,
            max_order: 5,
            sigma_grid: None,
            pivot: None,
            seed: 7,
            samples: 200_000,
            format: OutputFormat::Text,
            deterministic: false,
            tol: Tolerance::default(),
        }
    }

    fn validate(&self) -> Result<(), String> {
        if !(2..=MAX_SEARCH_ORDER).contains(&self.max_order) {
            return Err(format!(
                "--max-order must be in [2, {MAX_SEARCH_ORDER}], got {}",
                self.max_order
            ));
        }
        for (name, grid) in [
            ("--gamma-grid", &self.gamma_grid),
            ("--sigma-grid", &self.sigma_grid),
        ] {
            if let Some(g) = grid {
                if g.is_empty() {
                    return Err(format!("{name} must not be empty"));
                }
                if let Some(x) = g.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                    return Err(format!("{name} values must be positive, got {x}"));
                }
            }
        }
        if self.samples == 0 {
            return Err("--samples must be at least 1".into());
        }
        Ok(())
    }
}

/// Exit code plus the rendered report (for stdout) or diagnostic (for
/// stderr).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl RunOutput {
    fn failure(exit_code: i32, op: &str, msg: impl std::fmt::Display) -> Self {
        RunOutput {
            exit_code,
            stdout: String::new(),
            stderr: format!("error in {op}: {msg}\n"),
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::SingularMatrix { .. }
        | Error::SingularBlock { .. }
        | Error::PoleAtSigma { .. }
        | Error::NonpositiveDeterminant { .. } => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermanentReport {
    pub n: usize,
    pub exponent: f64,
    pub value: f64,
    /// Coefficient `k` multiplies `b^k`.
    pub cycle_polynomial: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplacePoint {
    pub alphas: Vec<f64>,
    pub estimate: LtEstimate,
    pub closed_form: f64,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditioningPoint {
    pub sigma: f64,
    #[serde(flatten)]
    pub check: ConditioningCheck,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub exponent: f64,
    pub samples: usize,
    pub seed: u64,
    pub laplace: Vec<LaplacePoint>,
    pub conditioning: Vec<ConditioningPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ReportBody {
    Classify(KernelReport),
    VereJones(VjReport),
    Permanent(PermanentReport),
    ReduceScan(ReduceScan),
    McVerify(McReport),
    ReproducePaper(ReproduceReport),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub report: ReportBody,
}

/// Loads input, runs the command and renders the report.
pub fn run(cfg: &RunConfig) -> RunOutput {
    let op = cfg.command.name();
    if let Err(msg) = cfg.validate() {
        return RunOutput::failure(EXIT_INPUT, op, msg);
    }
    let b = match Exponent::new(cfg.b) {
        Ok(b) => b,
        Err(e) => return RunOutput::failure(EXIT_INPUT, op, e),
    };
    let matrix = if cfg.command == Command::ReproducePaper {
        None
    } else {
        let Some(path) = &cfg.input_path else {
            return RunOutput::failure(EXIT_INPUT, op, "--input is required");
        };
        match read_matrix(path) {
            Ok(m) => Some(m),
            Err(e) => return RunOutput::failure(EXIT_INPUT, "input", e),
        }
    };

    let body = match execute(cfg, b, matrix.as_ref()) {
        Ok(body) => body,
        Err(e) => return RunOutput::failure(exit_code_for(&e), op, e),
    };
    let exit_code = match &body {
        ReportBody::VereJones(r) if r.evaluated_points() == 0 => EXIT_NUMERICAL,
        ReportBody::Classify(r) if r.vere_jones.evaluated_points() == 0 => EXIT_NUMERICAL,
        ReportBody::ReduceScan(r) if r.evaluated_points() == 0 => EXIT_NUMERICAL,
        _ => EXIT_OK,
    };
    let stderr = if exit_code == EXIT_NUMERICAL {
        format!("error in {op}: singular at every grid point\n")
    } else {
        String::new()
    };

    let report = Report {
        command: op,
        generated_at_unix: if cfg.deterministic {
            None
        } else {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs())
        },
        input: cfg.input_path.as_ref().map(|p| p.display().to_string()),
        report: body,
    };
    let stdout = match cfg.format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        OutputFormat::Text => render_text(&report),
    };
    RunOutput {
        exit_code,
        stdout,
        stderr,
    }
}

fn execute(cfg: &RunConfig, b: Exponent, g: Option<&SquareMatrix>) -> crate::Result<ReportBody> {
    let tol = &cfg.tol;
    let gamma_grid = cfg.gamma_grid.clone().unwrap_or_else(default_gamma_grid);
    let sigma_grid = cfg.sigma_grid.clone();
    let g = match (cfg.command, g) {
        (Command::ReproducePaper, _) => {
            let opts = ReproduceOptions {
                seed: cfg.seed,
                mc_exponent: cfg.b,
                mc_samples: cfg.samples,
                max_order: cfg.max_order,
                tol: *tol,
            };
            return Ok(ReportBody::ReproducePaper(reproduce_paper(&opts)));
        }
        (_, Some(g)) => g,
        (_, None) => return Err(Error::InvalidParameter("missing input matrix".into())),
    };
    Ok(match cfg.command {
        Command::Classify => {
            let ccfg = ClassifyConfig {
                gamma_grid,
                max_order: cfg.max_order,
            };
            ReportBody::Classify(classify_kernel(g, b, &ccfg, tol)?)
        }
        Command::VereJones => {
            ReportBody::VereJones(vere_jones_check(g, b, &gamma_grid, cfg.max_order, tol)?)
        }
        Command::Permanent => ReportBody::Permanent(PermanentReport {
            n: g.n(),
            exponent: b.value(),
            value: per_b(g, b.value())?,
            cycle_polynomial: cycle_polynomial(g)?,
        }),
        Command::ReduceScan => {
            let pivot = cfg.pivot.unwrap_or(g.n().saturating_sub(1));
            let grid = sigma_grid.unwrap_or_else(default_gamma_grid);
            ReportBody::ReduceScan(reduce_scan(g, pivot, &grid, tol)?)
        }
        Command::McVerify => ReportBody::McVerify(mc_verify(cfg, b, g, sigma_grid)?),
        Command::ReproducePaper => unreachable!("handled above"),
    })
}

fn mc_verify(
    cfg: &RunConfig,
    b: Exponent,
    g: &SquareMatrix,
    sigma_grid: Option<Vec<f64>>,
) -> crate::Result<McReport> {
    let n = g.n();
    let batch = sample_squared_gaussian(g, cfg.samples, cfg.seed, &cfg.tol)?;
    let mut laplace = Vec::new();
    for level in [0.25, 0.5, 1.0, 2.0] {
        let alphas = vec![level; n];
        let estimate = empirical_laplace(&batch, &alphas)?;
        let closed_form = closed_form_laplace(g, &alphas, b)?;
        laplace.push(LaplacePoint {
            within_3se: estimate.agrees_with(closed_form, 3.0),
            alphas,
            estimate,
            closed_form,
        });
    }
    let mut conditioning = Vec::new();
    if n >= 2 {
        for (i, &sigma) in sigma_grid.unwrap_or_else(|| vec![1.0]).iter().enumerate() {
            let alphas = vec![0.5; n - 1];
            let seed = cfg.seed.wrapping_add((i as u64 + 1) << 32);
            let check = verify_conditioning(g, sigma, &alphas, cfg.samples, seed, &cfg.tol)?;
            conditioning.push(ConditioningPoint {
                sigma,
                within_3se: check.agrees(3.0),
                check,
            });
        }
    }
    Ok(McReport {
        exponent: b.value(),
        samples: cfg.samples,
        seed: cfg.seed,
        laplace,
        conditioning,
    })
}

/// Serialized name of a unit enum variant, shared by both output formats.
fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => "?".into(),
    }
}

fn sets_text(sets: &[Vec<usize>]) -> String {
    if sets.is_empty() {
        "none".into()
    } else {
        sets.iter()
            .map(|s| format_set(s))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn vj_text(out: &mut String, r: &VjReport) {
    let _ = writeln!(out, "Vere-Jones verdict: {}", label(&r.verdict));
    let _ = writeln!(
        out,
        "  condition (I): {} (real eigenvalues {:?}, complex pairs {})",
        if r.condition_i.passed { "pass" } else { "fail" },
        r.condition_i.real_eigenvalues,
        r.condition_i.complex_pairs
    );
    let _ = writeln!(
        out,
        "  condition (II): {}/{} grid points evaluated, order <= {}, b = {}",
        r.evaluated_points(),
        r.condition_ii.len(),
        r.max_order,
        r.exponent
    );
    for c in &r.condition_ii {
        match &c.outcome {
            GammaOutcome::Pass => {}
            GammaOutcome::Fail { witness, value } => {
                let _ = writeln!(
                    out,
                    "    gamma = {:.6e}: violation at {} (value {:.6e})",
                    c.gamma,
                    format_set(witness.indices()),
                    value
                );
            }
            GammaOutcome::Skipped { note } => {
                let _ = writeln!(out, "    gamma = {:.6e}: skipped ({note})", c.gamma);
            }
        }
    }
    let _ = writeln!(
        out,
        "  certificate: {}",
        r.certificate
            .as_ref()
            .map(label)
            .unwrap_or_else(|| "none".into())
    );
}

fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "permkernel {}", report.command);
    if let Some(input) = &report.input {
        let _ = writeln!(out, "input: {input}");
    }
    if let Some(t) = report.generated_at_unix {
        let _ = writeln!(out, "generated at (unix): {t}");
    }
    match &report.report {
        ReportBody::Classify(r) => {
            let _ = writeln!(out, "dimension: {}", r.n);
            let zeros: Vec<String> = r
                .zero_pattern
                .iter()
                .map(|(i, j)| format!("({},{})", i + 1, j + 1))
                .collect();
            let _ = writeln!(
                out,
                "zero entries: {}",
                if zeros.is_empty() {
                    "none".into()
                } else {
                    zeros.join(" ")
                }
            );
            let _ = writeln!(
                out,
                "positivity signature: {}",
                r.signature
                    .as_ref()
                    .map(label)
                    .unwrap_or_else(|| "none".into())
            );
            let _ = writeln!(
                out,
                "symmetrizable 3-subsets: {}",
                sets_text(&r.sym3_subsets)
            );
            let _ = writeln!(out, "M-class: {}", r.m_class);
            let _ = writeln!(out, "theorem1: {}", r.theorem1);
            vj_text(&mut out, &r.vere_jones);
            let _ = writeln!(out, "witnesses:");
            for w in &r.witnesses {
                let _ = writeln!(out, "  {}", serde_json::to_string(w).unwrap_or_default());
            }
        }
        ReportBody::VereJones(r) => vj_text(&mut out, r),
        ReportBody::Permanent(r) => {
            let _ = writeln!(
                out,
                "per_b with b = {} (n = {}): {}",
                r.exponent, r.n, r.value
            );
            let _ = writeln!(
                out,
                "cycle polynomial coefficients (b^0, b^1, ...): {:?}",
                r.cycle_polynomial
            );
        }
        ReportBody::ReduceScan(r) => {
            let _ = writeln!(out, "pivot: {}", r.pivot + 1);
            let _ = writeln!(
                out,
                "normalizing signature: {}",
                r.normalizing_signature
                    .as_ref()
                    .map(label)
                    .unwrap_or_else(|| "none".into())
            );
            for note in &r.notes {
                let _ = writeln!(out, "note: {note}");
            }
            for t in &r.triples {
                let bp = if t.breakpoints.degenerate {
                    "symmetrizable for every sigma".to_string()
                } else {
                    format!("sigma breakpoints {:?}", t.sigma_values)
                };
                let _ = writeln!(out, "triple {}: {}", format_set(&t.triple), bp);
            }
            for p in &r.points {
                let _ = write!(
                    out,
                    "sigma = {:.6e} (c = {:.6e}): symmetrizable {}; resolvent signature {}",
                    p.sigma,
                    p.c,
                    sets_text(&p.conditioned_sym3),
                    p.resolvent_signature
                        .as_ref()
                        .map(label)
                        .unwrap_or_else(|| "none".into())
                );
                if let Some(n) = &p.note {
                    let _ = write!(out, " [{n}]");
                }
                out.push('\n');
            }
        }
        ReportBody::McVerify(r) => {
            let _ = writeln!(
                out,
                "samples: {} (seed {}), closed form with b = {}",
                r.samples, r.seed, r.exponent
            );
            for p in &r.laplace {
                let _ = writeln!(
                    out,
                    "alpha = {:?}: empirical {:.6} +- {:.6}, closed form {:.6}: {}",
                    p.alphas,
                    p.estimate.point_estimate,
                    p.estimate.std_error,
                    p.closed_form,
                    if p.within_3se { "agree" } else { "disagree" }
                );
            }
            for p in &r.conditioning {
                let _ = writeln!(
                    out,
                    "conditioning at sigma = {}: empirical {:.6} +- {:.6}, closed form {:.6}: {}",
                    p.sigma,
                    p.check.lhs.point_estimate,
                    p.check.lhs.std_error,
                    p.check.rhs,
                    if p.within_3se { "agree" } else { "disagree" }
                );
            }
        }
        ReportBody::ReproducePaper(r) => {
            for g in &r.groups {
                let _ = writeln!(
                    out,
                    "[{}] {}",
                    if g.passed { "PASS" } else { "FAIL" },
                    g.name
                );
                for l in &g.lines {
                    let _ = write!(
                        out,
                        "    {} {}",
                        if l.passed { "ok  " } else { "FAIL" },
                        l.description
                    );
                    if !l.detail.is_empty() {
                        let _ = write!(out, " ({})", l.detail);
                    }
                    out.push('\n');
                }
            }
            let passed = r.groups.iter().filter(|g| g.passed).count();
            let _ = writeln!(
                out,
                "suite: {} ({passed}/{} groups passed)",
                if r.passed { "PASS" } else { "FAIL" },
                r.groups.len()
            );
        }
    }
    out
}
