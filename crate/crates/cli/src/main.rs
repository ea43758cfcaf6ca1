//! `fockmult`: batch driver for classification, commutation checks, counterexample
//! diagnostics and matrix export on the truncated Fock space.
//!
//! Reports go to `--out` (written atomically) or stdout; a one-line summary per
//! result goes to stderr. Exit codes depend only on the report contents.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fockmult::FockError;

use commands::{CliError, Outcome};
use config::{parse_config_file, RunConfig};

#[derive(Parser)]
#[command(name = "fockmult", version, about = "Multiplication operators on the Fock space of entire functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Growth classification of a symbol against F and Λ.
    Classify { spec: String },
    /// Run one commutation check; exit 0 iff it passes.
    Verify {
        #[arg(value_parser = ["thm4a", "thm4b", "thm4d", "thm4f", "remark5", "remark6", "commute"])]
        condition: String,
        spec: Option<String>,
        /// Ψ for remark6.
        spec2: Option<String>,
    },
    /// Domain pathology diagnostics; exit 0 iff the observed verdicts match the predicted ones.
    Counterexample {
        #[arg(value_parser = ["borderline", "shifted", "gaussian", "sigma", "sigma-over-p"])]
        name: String,
    },
    /// Export a truncated operator with an independent quadrature check of its entries.
    Matrix {
        #[arg(value_parser = ["creation", "annihilation", "q", "p", "mult", "harmonic"])]
        kind: String,
        spec: Option<String>,
        /// Ψ for harmonic.
        spec2: Option<String>,
    },
}

/// Every flag is also a config-file key; flags win.
#[derive(Args)]
struct Flags {
    /// Gaussian weight parameter.
    #[arg(long = "r", global = true)]
    r: Option<String>,
    /// Truncation degree.
    #[arg(long = "N", global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    tol: Option<String>,
    /// Comma-separated complex points, e.g. `0,0.5,-0.5i,0.7+0.3i`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long = "pk-powers", global = true)]
    pk_powers: Option<String>,
    #[arg(long = "radial-nodes", global = true)]
    radial_nodes: Option<String>,
    #[arg(long, global = true)]
    angles: Option<String>,
    /// Coefficients inspected by classify.
    #[arg(long, global = true)]
    depth: Option<String>,
    /// json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    /// Test family for `verify commute`: k or pk.
    #[arg(long, global = true)]
    family: Option<String>,
    /// Operator: creation, annihilation, q, p, identity, or a symbol spec.
    #[arg(long = "A", global = true, allow_hyphen_values = true)]
    op_a: Option<String>,
    #[arg(long = "B", global = true, allow_hyphen_values = true)]
    op_b: Option<String>,
    /// Series length for borderline and shifted.
    #[arg(long = "M", global = true)]
    m: Option<String>,
    #[arg(long, global = true)]
    k: Option<String>,
    #[arg(long, global = true)]
    j: Option<String>,
    /// Gaussian exponent `w` in `exp(w z²)`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    w: Option<String>,
    /// Split parameter for the Gaussian demo.
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<String>,
    /// Comma-separated outer radii for the annulus diagnostics.
    #[arg(long = "R", global = true)]
    radii: Option<String>,
    /// `key = value` file with the same keys as the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let all = [
            ("r", &self.r),
            ("N", &self.n),
            ("tol", &self.tol),
            ("grid", &self.grid),
            ("pk-powers", &self.pk_powers),
            ("radial-nodes", &self.radial_nodes),
            ("angles", &self.angles),
            ("depth", &self.depth),
            ("format", &self.format),
            ("out", &self.out),
            ("family", &self.family),
            ("A", &self.op_a),
            ("B", &self.op_b),
            ("M", &self.m),
            ("k", &self.k),
            ("j", &self.j),
            ("w", &self.w),
            ("a", &self.a),
            ("R", &self.radii),
        ];
        all.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect()
    }
}

fn resolve(flags: &Flags) -> Result<RunConfig, CliError> {
    let file = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
            parse_config_file(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => Vec::new(),
    };
    RunConfig::resolve(&file, &flags.pairs()).map_err(CliError::Input)
}

fn run(cli: &Cli) -> Result<(RunConfig, Outcome), CliError> {
    let cfg = resolve(&cli.flags)?;
    let outcome = match &cli.command {
        Command::Classify { spec } => commands::classify(spec, &cfg)?,
        Command::Verify { condition, spec, spec2 } => {
            commands::verify(condition, spec.as_deref(), spec2.as_deref(), &cfg)?
        }
        Command::Counterexample { name } => commands::counterexample(name, &cfg)?,
        Command::Matrix { kind, spec, spec2 } => commands::matrix(kind, spec.as_deref(), spec2.as_deref(), &cfg)?,
    };
    Ok((cfg, outcome))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; usage errors share the config-error code
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok((cfg, outcome)) => {
            if let Err(e) = output::emit(cfg.out.as_deref(), &outcome.body) {
                eprintln!("error: writing report: {e}");
                return ExitCode::from(1);
            }
            eprintln!("{}", outcome.summary);
            ExitCode::from(outcome.code as u8)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Core(e @ FockError::EmptyWindow { .. })) => {
            eprintln!("error: {e}; the exactness window needs room inside the truncation, rerun with a larger --N");
            ExitCode::from(3)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
