//! Argument definitions and dispatch.

use crate::commands::{self, Report};
use crate::{CliError, Exit};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

/// Default output directory for files written by `phase-diagram`.
pub const OUT_DIR_ENV: &str = "GRUSHIN_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
    /// Aligned plain-text columns.
    Table,
}

/// Spectral analysis of curvature Laplacians on alpha-Grushin manifolds.
#[derive(Debug, Parser)]
#[command(name = "grushin", version, about, allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the main output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tolerance of the check a subcommand performs.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify essential self-adjointness over a parameter grid.
    Classify(ClassifyArgs),
    /// Regime map over (alpha, c) with the critical curve c0(alpha).
    PhaseDiagram(PhaseArgs),
    /// Per-mode deficiency counts and their aggregate.
    Deficiency(DeficiencyArgs),
    /// Frobenius series at the singular set.
    Frobenius(FrobeniusArgs),
    /// Build and check self-adjoint extensions.
    Extension {
        #[command(subcommand)]
        action: ExtensionCommand,
    },
    /// Evaluate an index-set expression.
    Indexset(IndexsetArgs),
    /// Scalar curvature closed forms and the x -> 0 limit of x^2 S.
    Curvature(CurvatureArgs),
    /// Modified Bessel functions and model-operator kernels.
    Bessel {
        #[command(subcommand)]
        action: BesselCommand,
    },
}

/// Grid syntax: `start:stop:step` (inclusive), `a,b,c` or a single value.
#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value = "1")]
    pub n: String,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub c: String,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// Alpha grid, e.g. `0.05:3:0.05`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    /// c grid, e.g. `-1:1:0.02`.
    #[arg(long, allow_hyphen_values = true)]
    pub c: String,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Directory for the SVG and CSV (default: $GRUSHIN_OUT_DIR, then `.`).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// File name stem.
    #[arg(long, default_value = "phase_diagram")]
    pub stem: String,
    /// Pixels per grid cell.
    #[arg(long, default_value_t = 8)]
    pub scale: u32,
}

#[derive(Debug, Args)]
pub struct DeficiencyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value = "1")]
    pub n: String,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub c: String,
    /// Largest Fourier mode |k| sampled.
    #[arg(long, default_value_t = 8)]
    pub kmax: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RootArg {
    Plus,
    Minus,
}

#[derive(Debug, Args)]
pub struct FrobeniusArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub c: f64,
    /// Torus modes with |k| <= kmax form the basis.
    #[arg(long, default_value_t = 3)]
    pub kmax: u32,
    /// Seed mode, comma separated (default: the first unit vector).
    #[arg(long, allow_hyphen_values = true)]
    pub mode: Option<String>,
    #[arg(long, value_enum, default_value_t = RootArg::Plus)]
    pub root: RootArg,
    /// Highest grade kept.
    #[arg(long, default_value_t = 10.0)]
    pub cutoff: f64,
    /// Fit the residual decay and compare with Re(lambda) + theta_next.
    #[arg(long)]
    pub certificate: bool,
}

#[derive(Debug, Subcommand)]
pub enum ExtensionCommand {
    /// Unitary U of a named family (1 Friedrichs, 2 right Robin, 3 left Robin,
    /// 4 transmission, 5 Cayley).
    Build(BuildArgs),
    /// Randomised checks of an extension spec file.
    Verify(VerifyArgs),
    /// Green's identity on |x| = eps against the closed-form asymmetry form.
    GreensCheck(GreensArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub family: u8,
    /// Robin or transmission parameter.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub gamma: f64,
    /// Transmission coupling, e.g. `0.5-1i`.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub b: String,
    /// Hermitian 2x2 matrix, row major, e.g. `0,0,0,0` or `1,1+2i,1-2i,0`.
    #[arg(long = "Gamma", allow_hyphen_values = true)]
    pub big_gamma: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Extension spec JSON written by `extension build`.
    #[arg(long)]
    pub spec: PathBuf,
    /// Parameters to check the regime against and to scale the form.
    #[arg(long, allow_hyphen_values = true, requires = "n")]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fourier modes per random jet.
    #[arg(long, default_value_t = 3)]
    pub modes: usize,
}

#[derive(Debug, Args)]
pub struct GreensArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub c: f64,
    /// Jet of u: `a+ right, a+ left, a- right, a- left`.
    #[arg(long, allow_hyphen_values = true)]
    pub u: String,
    /// Jet of v, same layout.
    #[arg(long, allow_hyphen_values = true)]
    pub v: String,
    /// Fourier mode, comma separated.
    #[arg(long, allow_hyphen_values = true, default_value = "1")]
    pub mode: String,
}

#[derive(Debug, Args)]
pub struct IndexsetArgs {
    /// Expression, e.g. `eu({(0,0)};{(0,0)})`.
    #[arg(allow_hyphen_values = true)]
    pub expr: String,
    /// Default alpha for `compose`.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub alpha: f64,
    /// Default n for `compose`.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Enumeration height for results that are not exact.
    #[arg(long, default_value_t = grushin_core::indexset::DEFAULT_HEIGHT)]
    pub height: f64,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Metric file (JSON) for g_{x,Z}; the flat torus if absent.
    #[arg(long)]
    pub metric: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    pub x_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub x_max: f64,
    #[arg(long, default_value_t = 12)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BesselKindArg {
    I,
    K,
    Itilde,
    Ktilde,
}

#[derive(Debug, Subcommand)]
pub enum BesselCommand {
    /// Evaluate I, K or their imaginary-order versions.
    Eval(EvalArgs),
    /// Kernel of x^2 d^2 + a x d + b - h x^(2 beta) and its weighted L^2 membership.
    Kernel(KernelArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub kind: BesselKindArg,
    #[arg(long)]
    pub nu: f64,
    /// Argument grid.
    #[arg(long)]
    pub x: String,
    /// Multiply by exp(-x) (I) or exp(x) (K).
    #[arg(long, conflicts_with = "derivative")]
    pub scaled: bool,
    /// Also print the derivative.
    #[arg(long)]
    pub derivative: bool,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long)]
    pub h: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub delta: f64,
    /// Also run the quadrature membership oracle.
    #[arg(long)]
    pub oracle: bool,
}

/// Run-wide settings shared by the subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub format: Format,
    pub threads: usize,
    pub tol: Option<f64>,
    /// Command line recorded in generated files.
    pub command_line: String,
}

/// Executes a parsed command line.
pub fn run(cli: &Cli, command_line: &str) -> Result<Report, CliError> {
    let threads = match cli.threads {
        Some(0) => return Err(CliError::usage("--threads must be at least 1")),
        Some(t) => t,
        None => crate::sweep::default_threads(),
    };
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::usage("--tol must be positive"));
        }
    }
    let cfg = RunConfig { format: cli.format, threads, tol: cli.tol, command_line: command_line.to_string() };
    match &cli.command {
        Command::Classify(a) => commands::classify(a, &cfg),
        Command::PhaseDiagram(a) => commands::phase_diagram(a, &cfg),
        Command::Deficiency(a) => commands::deficiency(a, &cfg),
        Command::Frobenius(a) => commands::frobenius(a, &cfg),
        Command::Extension { action } => match action {
            ExtensionCommand::Build(a) => commands::extension_build(a, &cfg),
            ExtensionCommand::Verify(a) => commands::extension_verify(a, &cfg),
            ExtensionCommand::GreensCheck(a) => commands::greens_check(a, &cfg),
        },
        Command::Indexset(a) => commands::indexset(a, &cfg),
        Command::Curvature(a) => commands::curvature(a, &cfg),
        Command::Bessel { action } => match action {
            BesselCommand::Eval(a) => commands::bessel_eval(a, &cfg),
            BesselCommand::Kernel(a) => commands::bessel_kernel(a, &cfg),
        },
    }
}

/// Shell-style rendering of an argument list.
pub fn quote_command_line(args: &[OsString]) -> String {
    args.iter()
        .map(|a| {
            let s = a.to_string_lossy();
            if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_.,:/=+@%".contains(c)) {
                s.into_owned()
            } else {
                format!("'{}'", s.replace('\'', r"'\''"))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses `args`, runs, writes the output and returns the exit status.
pub fn main_with(args: Vec<OsString>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Exit {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Usage } else { Exit::Ok };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = run(&cli, &quote_command_line(&args)).and_then(|report| {
        let text = report.render(cli.format)?;
        match &cli.out {
            Some(path) => std::fs::write(path, text)?,
            None => stdout.write_all(text.as_bytes())?,
        }
        for note in &report.notes {
            let _ = writeln!(stderr, "{note}");
        }
        Ok(report.status)
    });
    match result {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit
        }
    }
}
