//! `lpvar`: seeded experiments and the verification suite for L^p-valued
//! random variables.
//!
//! Every command writes one report (CSV or JSON) to `--out`, or to standard
//! output when no path is given. Identical flags give byte-identical reports.

mod commands;
mod config;
mod error;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lpvar_core::verify::DEFAULT_SEED;

use config::{
    CommandKind, Format, RunConfig, DEFAULT_EPSILON, DEFAULT_K, DEFAULT_NODES, DEFAULT_P,
    DEFAULT_SAMPLES,
};
use error::CliError;

#[derive(Parser)]
#[command(name = "lpvar", version, about = "Experiments with L^p(0,1)-valued random variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// P(‖χ‖_p < ε) for the indicator process: exact value and Monte Carlo estimate
    Problem2 {
        #[command(flatten)]
        p: ExponentArg,
        /// Ball radius ε, in (0, 1)
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[command(flatten)]
        mc: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Quadrature expectation of the indicator process against 1 − t
    Expectation {
        #[command(flatten)]
        p: ExponentArg,
        /// Midpoint quadrature nodes
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sup-error of the dyadic approximations of levels 1..=k against 2^(-k/p)
    Approx {
        #[command(flatten)]
        p: ExponentArg,
        /// Finest dyadic level
        #[arg(long, default_value_t = DEFAULT_K)]
        k: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Norm-as-supremum bounds, norming functionals and the weak modulus check
    Duality {
        #[command(flatten)]
        p: ExponentArg,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the full acceptance suite; exits with status 1 if any criterion fails
    Verify {
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct ExponentArg {
    /// Integrability exponent p, in (1, ∞)
    #[arg(long, default_value_t = DEFAULT_P)]
    p: f64,
}

#[derive(Args)]
struct SeedArg {
    /// Random seed
    #[arg(long, env = "LPVAR_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct SamplingArgs {
    /// Monte Carlo sample count
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct OutputArgs {
    /// Report path; standard output when omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl From<Command> for RunConfig {
    fn from(cmd: Command) -> Self {
        let blank = |command, output: OutputArgs| RunConfig {
            command,
            p: None,
            epsilon: None,
            k: None,
            nodes: None,
            samples: None,
            seed: None,
            output_path: output.out,
            format: output.format,
        };
        match cmd {
            Command::Problem2 { p, epsilon, mc, output } => RunConfig {
                p: Some(p.p),
                epsilon: Some(epsilon),
                samples: Some(mc.samples),
                seed: Some(mc.seed.seed),
                ..blank(CommandKind::Problem2, output)
            },
            Command::Expectation { p, nodes, output } => RunConfig {
                p: Some(p.p),
                nodes: Some(nodes),
                ..blank(CommandKind::Expectation, output)
            },
            Command::Approx { p, k, output } => RunConfig {
                p: Some(p.p),
                k: Some(k),
                ..blank(CommandKind::Approx, output)
            },
            Command::Duality { p, seed, output } => RunConfig {
                p: Some(p.p),
                seed: Some(seed.seed),
                ..blank(CommandKind::Duality, output)
            },
            Command::Verify { seed, output } => RunConfig {
                seed: Some(seed.seed),
                ..blank(CommandKind::Verify, output)
            },
        }
    }
}

fn execute(config: &RunConfig) -> Result<bool, CliError> {
    let outcome = commands::run(config)?;
    let text = outcome.report.render();
    match &config.output_path {
        Some(path) => {
            std::fs::write(path, text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let mut stdout = std::io::stdout().lock();
            for line in &outcome.console {
                let _ = writeln!(stdout, "{line}");
            }
        }
        None => {
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            let mut stderr = std::io::stderr().lock();
            for line in &outcome.console {
                let _ = writeln!(stderr, "{line}");
            }
        }
    }
    Ok(outcome.success)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = RunConfig::from(cli.command);
    match execute(&config) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
