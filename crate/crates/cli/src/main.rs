//! `vnd` — batch front end for quantum divergences on matrix algebras.
//!
//! Three verbs:
//! - `compute`: run one named task from a JSON problem file;
//! - `verify`: run a verification suite (exit 0 iff all hard checks pass);
//! - `experiment`: emit the CSV of a packaged experiment.
//!
//! Exit codes: 0 success, 2 unresolved names / malformed input / unknown
//! verbs, 3 numeric failure (a diagnostic row is still emitted).

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod problem;
mod report;
mod run;

#[derive(Debug)]
pub enum CliError {
    User(String),
    Numeric(String),
}

impl CliError {
    pub fn user(msg: impl Into<String>) -> Self {
        CliError::User(msg.into())
    }

    pub fn user_from(e: vnd_core::Error) -> Self {
        CliError::User(e.to_string())
    }

    pub fn numeric(e: vnd_core::Error) -> Self {
        Self::numeric_from(e)
    }

    /// Input-shaped failures stay exit 2; everything numerical is exit 3.
    pub fn numeric_from(e: vnd_core::Error) -> Self {
        match e {
            vnd_core::Error::InvalidInput(_) | vnd_core::Error::Unsupported(_) => {
                CliError::User(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::User(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) | CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Lower end of the logarithmic integration window.
    #[arg(long = "t-min", default_value_t = 1e-6)]
    pub t_min: f64,
    /// Upper end of the logarithmic integration window.
    #[arg(long = "t-max", default_value_t = 1e6)]
    pub t_max: f64,
    /// Number of log-uniform quadrature nodes.
    #[arg(long = "grid-points", default_value_t = 2048)]
    pub grid_points: usize,
}

#[derive(Parser, Debug)]
#[command(
    name = "vnd",
    version,
    about = "Quantum divergences on matrix algebras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute one named task from a problem file and emit a CSV row.
    Compute {
        /// Problem file (JSON, format "vnd-1").
        #[arg(long)]
        file: PathBuf,
        /// Task name inside the problem file.
        #[arg(long)]
        task: String,
        #[command(flatten)]
        grid: GridArgs,
        /// Write CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite: dpi, certainty, phi_bounds,
    /// kosaki_vs_umegaki, or quadrature_selftest.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Sample count (suite-specific default).
        #[arg(long)]
        samples: Option<usize>,
        /// Hard tolerance override (suite-specific default).
        #[arg(long)]
        tol: Option<f64>,
        /// Restrict the DPI suite to the identity channel.
        #[arg(long, default_value_t = false)]
        identity_only: bool,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the CSV of a packaged experiment: bell_orbifold,
    /// diagonal_closed_form, or certainty_sweep.
    Experiment {
        #[arg(long)]
        name: String,
        /// Divergence order; repeatable (default 0.6 0.75 0.9).
        #[arg(long = "s")]
        s: Vec<f64>,
        /// Site dimension override for group experiments.
        #[arg(long)]
        n: Option<usize>,
        /// Group family: Z2_pauli, Zn_clock, pauli_group, trivial, or all.
        #[arg(long, default_value = "all")]
        group: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_output(text: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::user(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn grid_flags(grid: &GridArgs) -> String {
    format!(
        "t_min={:e};t_max={:e};grid_points={}",
        grid.t_min, grid.t_max, grid.grid_points
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Compute {
            file,
            task,
            grid,
            out,
        } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| CliError::user(format!("cannot read {}: {e}", file.display())))?;
            let flags = format!(
                "cmd=compute;file={};task={};{}",
                file.display(),
                task,
                grid_flags(&grid)
            );
            match run::compute(&text, &task, &grid, &flags) {
                Ok(csv) => {
                    write_output(&csv, &out)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err((Some(csv), err)) => {
                    // Numeric failure: the diagnostic row still goes out.
                    write_output(&csv, &out)?;
                    eprintln!("error: {err}");
                    Ok(ExitCode::from(err.exit_code()))
                }
                Err((None, err)) => Err(err),
            }
        }
        Command::Verify {
            suite,
            seed,
            samples,
            tol,
            identity_only,
            grid,
            out,
        } => {
            let flags = format!(
                "cmd=verify;suite={};seed={};samples={};tol={};identity_only={};{}",
                suite,
                seed,
                samples
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| "default".into()),
                tol.map(|t| format!("{t:e}"))
                    .unwrap_or_else(|| "default".into()),
                identity_only,
                grid_flags(&grid)
            );
            let (csv, failures) =
                run::verify(&suite, seed, samples, tol, identity_only, &grid, &flags)?;
            write_output(&csv, &out)?;
            if failures == 0 {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: {failures} hard assertion(s) failed in suite {suite}");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Experiment {
            name,
            s,
            n,
            group,
            seed,
            samples,
            grid,
            out,
        } => {
            let flags = format!(
                "cmd=experiment;name={};s={};n={};group={};seed={};samples={};{}",
                name,
                if s.is_empty() {
                    "default".into()
                } else {
                    s.iter()
                        .map(|x| format!("{x}"))
                        .collect::<Vec<_>>()
                        .join(",")
                },
                n.map(|v| v.to_string()).unwrap_or_else(|| "default".into()),
                group,
                seed,
                samples
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "default".into()),
                grid_flags(&grid)
            );
            let csv = run::experiment(&name, &s, n, &group, seed, samples, &grid, &flags)?;
            write_output(&csv, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
