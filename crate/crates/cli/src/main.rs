use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rieszsym::config::RunConfig;
use rieszsym::{commands, CliError, Outcome, Status};

#[derive(Parser, Debug)]
#[command(
    name = "rieszsym",
    version,
    about = "Solve, verify and inspect Riesz-type integral equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Number of worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Run configuration (`section.key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the integral equation by damped Picard iteration.
    Solve(Common),
    /// Run the moving-spheres and symmetry checks on a stored solution.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Solution CSV written by `solve`.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Search for violations of the comparison condition on f.
    Checkf(Common),
    /// Print the GJMS multiplier table as CSV.
    Gjms {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        max_degree: i64,
        /// Also write `gjms.csv` into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = RunConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Solve(common) => {
            let (cfg, out) = load(&common)?;
            commands::solve(&cfg, &out)
        }
        Command::Verify { common, solution } => {
            let (cfg, out) = load(&common)?;
            commands::verify(&cfg, &solution, &out)
        }
        Command::Checkf(common) => {
            let (cfg, out) = load(&common)?;
            commands::checkf(&cfg, &out)
        }
        Command::Gjms { s, n, max_degree, out } => {
            let (outcome, csv) = commands::gjms(s, n, max_degree, out.as_deref())?;
            std::io::stdout().write_all(&csv)?;
            Ok(outcome)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Status::Usage.into()
            } else {
                Status::Pass.into()
            };
        }
    };
    match run(cli) {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            for a in &outcome.artifacts {
                eprintln!("wrote {}", a.display());
            }
            outcome.status.into()
        }
        Err(e) => {
            eprintln!("error: {e}");
            Status::Usage.into()
        }
    }
}
