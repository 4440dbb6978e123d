//! Thin CLI over the library: `run`, `ablate`, and `sweep` subcommands.
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hardpinn::config::RunConfig;
use hardpinn::run::{ablate, run, sweep, RunError};

#[derive(Parser)]
#[command(
    name = "hardpinn",
    version,
    about = "Mesh-free PDE solving with hard-constrained physics-informed networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one model per the config and write metrics plus checkpoints.
    Run { config: PathBuf },
    /// Train both soft arms (plain vs auxiliary fields) and emit the
    /// gradient moving-variance ratio series.
    Ablate { config: PathBuf },
    /// Grid of full runs over the hardness parameters, one row per cell.
    Sweep {
        config: PathBuf,
        /// Spatial hardness values, comma separated.
        #[arg(long = "beta-s", value_delimiter = ',', required = true)]
        beta_s: Vec<f64>,
        /// Temporal hardness values, comma separated.
        #[arg(long = "beta-t", value_delimiter = ',', required = true)]
        beta_t: Vec<f64>,
    },
}

fn dispatch(cmd: Cmd) -> Result<(), RunError> {
    match cmd {
        Cmd::Run { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let art = run(&cfg)?;
            println!(
                "run finished: {} iterations, final loss {:e}, artifacts in {}",
                art.total_iterations,
                art.final_loss,
                art.out_dir.display()
            );
            if let Some(metrics) = &art.metrics {
                for f in &metrics.fields {
                    for s in &f.slices {
                        println!(
                            "  {} [{}]: MAE {:e}  MAPE {:.4}%  WMAPE {:.4}%",
                            f.field,
                            s.label,
                            s.mae,
                            100.0 * s.mape,
                            100.0 * s.wmape
                        );
                    }
                }
            }
            Ok(())
        }
        Cmd::Ablate { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let art = ablate(&cfg)?;
            println!(
                "ablation finished: {} ratio samples after {}-iteration warmup, {:.1}% above 1, artifacts in {}",
                art.ratio.len(),
                art.warmup,
                100.0 * art.share_above_one,
                art.out_dir.display()
            );
            println!(
                "  CV of mean|grad|: {:.4} without auxiliary fields, {:.4} with",
                art.cv_no_extra, art.cv_extra
            );
            Ok(())
        }
        Cmd::Sweep { config, beta_s, beta_t } => {
            let cfg = RunConfig::from_path(&config)?;
            let art = sweep(&cfg, &beta_s, &beta_t)?;
            println!("sweep finished: {} cells, table in {}", art.cells.len(), art.out_dir.display());
            for c in &art.cells {
                println!(
                    "  beta_s={} beta_t={}: MAE {:e}  final loss {:e}",
                    c.beta_s, c.beta_t, c.mae, c.final_loss
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
