use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use permkernel::cli::{run, Command, OutputFormat, RunConfig, EXIT_INPUT};
use permkernel::Tolerance;

/// Classification and diagnostics for permanental kernels.
#[derive(Parser, Debug)]
#[command(name = "permkernel", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Full classification report for a kernel.
    Classify(Opts),
    /// Eigenvalue condition and b-positivity of resolvents on a grid.
    VereJones(Opts),
    /// The b-permanent and its cycle polynomial.
    Permanent(Opts),
    /// Breakpoints and conditioning kernels for one pivot over a sigma grid.
    ReduceScan(Opts),
    /// Monte Carlo check of the squared-Gaussian Laplace transform.
    McVerify(Opts),
    /// Run the built-in worked examples and print a pass/fail table.
    ReproducePaper(Opts),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct Opts {
    /// Matrix file (JSON object or headerless CSV).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Laplace-transform exponent b in det(I + alpha G)^(-b).
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    b: f64,
    /// Comma-separated resolvent parameters.
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    /// Largest multiset size searched for positivity violations.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u8).range(2..=8))]
    max_order: u8,
    /// Comma-separated tilting parameters.
    #[arg(long, value_delimiter = ',')]
    sigma_grid: Option<Vec<f64>>,
    /// Pivot index for reduce-scan (1-based, default: last).
    #[arg(long)]
    pivot: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Omit the timestamp from reports.
    #[arg(long)]
    deterministic: bool,
    #[arg(long, default_value_t = 1e-9)]
    zero_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("PERMKERNEL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("PERMKERNEL_THREADS must be a nonnegative integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_INPUT as u8);
    }
    let (command, opts) = match cli.command {
        Cmd::Classify(o) => (Command::Classify, o),
        Cmd::VereJones(o) => (Command::VereJones, o),
        Cmd::Permanent(o) => (Command::Permanent, o),
        Cmd::ReduceScan(o) => (Command::ReduceScan, o),
        Cmd::McVerify(o) => (Command::McVerify, o),
        Cmd::ReproducePaper(o) => (Command::ReproducePaper, o),
    };
    let tol = match Tolerance::new(opts.zero_tol, opts.rel_tol) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    let pivot = match opts.pivot {
        Some(0) => {
            eprintln!("error: --pivot is 1-based");
            return ExitCode::from(EXIT_INPUT as u8);
        }
        p => p.map(|p| p - 1),
    };
    let cfg = RunConfig {
        command,
        input_path: opts.input,
        b: opts.b,
        gamma_grid: opts.gamma_grid,
        max_order: opts.max_order as usize,
        sigma_grid: opts.sigma_grid,
        pivot,
        seed: opts.seed,
        samples: opts.samples,
        format: match opts.format {
            Format::Text => OutputFormat::Text,
            Format::Json => OutputFormat::Json,
        },
        deterministic: opts.deterministic,
        tol,
    };
    let out = run(&cfg);
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.exit_code as u8)
}
