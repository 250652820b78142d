//! Command-line frontend: runs experiment grids from JSON configs and dumps
//! penalty weight sequences for inspection.
//!
//! Exit codes: 0 on success, 1 on configuration/validation errors, 2 on I/O
//! failures.

use clap::{Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use stepdown_slope::harness::{emit_kfwer_heatmap, emit_report, run_experiment, ExperimentConfig};
use stepdown_slope::{
    lambda_bh, lambda_fdp, lambda_kfwer, LambdaSequence, SequenceSpec, SlopeError,
};

#[derive(Parser)]
#[command(
    name = "stepdown-slope",
    version,
    about = "Sorted-L1 penalized selection with FDR / k-FWER / FDP calibrated weights"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid from a JSON config and write CSV reports
    Run {
        /// Path to the JSON experiment config
        #[arg(long)]
        config: PathBuf,
        /// Output directory for report.csv and kfwer_heatmap.csv
        #[arg(long)]
        out: PathBuf,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's replication count
        #[arg(long)]
        reps: Option<usize>,
        /// Worker threads (default: all cores; env STEPDOWN_SLOPE_JOBS)
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print a penalty weight sequence as CSV (index,weight)
    Lambda {
        #[arg(long, value_enum)]
        kind: LambdaKind,
        /// Number of weights
        #[arg(long)]
        m: usize,
        /// Target FDR level (bh)
        #[arg(long, default_value_t = 0.1)]
        q: f64,
        /// Target level for k-FWER / FDP control
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// FDP exceedance level (fdp)
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        /// Tolerated false rejections (kfwer)
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Noise scale multiplying the bh weights
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LambdaKind {
    Bh,
    Kfwer,
    Fdp,
}

fn jobs_from_env() -> Option<usize> {
    std::env::var("STEPDOWN_SLOPE_JOBS")
        .ok()
        .and_then(|v| v.parse().ok())
}

fn run(cli: Cli) -> Result<(), SlopeError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            reps,
            jobs,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(reps) = reps {
                cfg.replications = reps;
            }
            cfg.validate()?;

            let rows = match jobs.or_else(jobs_from_env) {
                Some(threads) if threads > 0 => rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| SlopeError::Domain(format!("thread pool: {e}")))?
                    .install(|| run_experiment(&cfg)),
                _ => run_experiment(&cfg),
            }?;

            std::fs::create_dir_all(&out)?;
            let report_path = out.join("report.csv");
            let heatmap_path = out.join("kfwer_heatmap.csv");
            emit_report(&rows, &report_path)?;
            emit_kfwer_heatmap(&rows, &heatmap_path)?;
            println!(
                "wrote {} rows to {} (heatmap: {})",
                rows.len(),
                report_path.display(),
                heatmap_path.display()
            );
            Ok(())
        }
        Command::Lambda {
            kind,
            m,
            q,
            alpha,
            gamma,
            k,
            sigma,
            out,
        } => {
            let spec = SequenceSpec::new(m)
                .with_q(q)
                .with_alpha(alpha)
                .with_gamma(gamma)
                .with_k(k)
                .with_sigma(sigma);
            let seq: LambdaSequence<f64> = match kind {
                LambdaKind::Bh => lambda_bh(&spec)?,
                LambdaKind::Kfwer => lambda_kfwer(&spec)?,
                LambdaKind::Fdp => lambda_fdp(&spec)?,
            };
            match out {
                Some(path) => {
                    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
                    seq.write_csv(&mut file)?;
                    file.flush()?;
                }
                None => {
                    let stdout = std::io::stdout();
                    seq.write_csv(stdout.lock())?;
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                SlopeError::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
