use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shotlink::embed::{run_grad_check, LossKind};
use shotlink::{io, synth};
use shotlink_cli::config::PipelineConfig;
use shotlink_cli::error::CliError;
use shotlink_cli::evaluate::{evaluate, load_run, render_report, render_report_csv};
use shotlink_cli::pipeline::{
    self, run_track, with_thread_cap, DETECTIONS_FILE, GROUND_TRUTH_FILE, SHOTS_FILE,
};

/// Sequence-adaptive multi-shot tracking over precomputed detections.
#[derive(Parser)]
#[command(name = "shotlink", version, about)]
struct Cli {
    /// Path to the pipeline config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global seed override (also: SHOTLINK_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread cap, 0 = all cores (also: SHOTLINK_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario: detections, shots, ground truth.
    Simulate {
        /// Output directory.
        out_dir: PathBuf,
    },
    /// Run the full tracking pipeline on an input directory.
    Track {
        /// Directory with detections.txt and shots.txt.
        in_dir: PathBuf,
        /// Output directory for trajectories and the run manifest.
        out_dir: PathBuf,
        /// Loss selection override: contrastive | triplet | symtriplet.
        #[arg(long)]
        loss: Option<String>,
    },
    /// Score a finished run against ground truth.
    Evaluate {
        /// Directory with detections.txt, shots.txt, ground_truth.txt.
        in_dir: PathBuf,
        /// Directory written by `track`.
        results_dir: PathBuf,
        /// Output directory for reports.
        out_dir: PathBuf,
        /// IoU threshold for box matching.
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
    },
    /// Check analytic gradients against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Emit the purity-versus-cluster-count curve for a finished run.
    PurityCurve {
        in_dir: PathBuf,
        results_dir: PathBuf,
        /// Output CSV path.
        out: PathBuf,
    },
}

fn load_config(cli: &Cli, loss: Option<LossKind>) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.apply_overrides(cli.seed, cli.threads, loss)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate { out_dir } => {
            let cfg = load_config(&cli, None)?;
            let scenario = synth::generate(&cfg.scenario_with_seed())
                .map_err(|e| CliError::Validation(e.to_string()))?;
            std::fs::create_dir_all(out_dir).map_err(|e| {
                CliError::Validation(format!("cannot create {}: {e}", out_dir.display()))
            })?;
            let write = || -> shotlink::Result<()> {
                io::write_detections(out_dir.join(DETECTIONS_FILE), &scenario.detections)?;
                io::write_shots(out_dir.join(SHOTS_FILE), &scenario.shots)?;
                io::write_labels(
                    out_dir.join(GROUND_TRUTH_FILE),
                    scenario.oracle_labels().iter().map(|(&k, &v)| (k, v)),
                )?;
                Ok(())
            };
            write().map_err(|e| CliError::stage(0, "write-scenario", e))?;
            println!(
                "simulated {} detections over {} shots into {}",
                scenario.detections.len(),
                scenario.shots.len(),
                out_dir.display()
            );
            Ok(())
        }
        Command::Track {
            in_dir,
            out_dir,
            loss,
        } => {
            let loss = loss
                .as_deref()
                .map(|s| s.parse::<LossKind>())
                .transpose()
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let cfg = load_config(&cli, loss)?;
            let outcome =
                with_thread_cap(cfg.threads, || run_track(&cfg, in_dir, out_dir))??;
            println!(
                "tracked: {} tracklets -> {} shot-level -> {} trajectories; manifest at {}",
                outcome.tracklets.len(),
                outcome.shot_tracklets.len(),
                outcome.trajectories.len(),
                out_dir.join(pipeline::MANIFEST_FILE).display()
            );
            Ok(())
        }
        Command::Evaluate {
            in_dir,
            results_dir,
            out_dir,
            iou,
        } => {
            let cfg = load_config(&cli, None)?;
            let data = load_run(in_dir, results_dir)?;
            let eval = with_thread_cap(cfg.threads, || evaluate(&data, *iou))??;
            std::fs::create_dir_all(out_dir).map_err(|e| {
                CliError::Validation(format!("cannot create {}: {e}", out_dir.display()))
            })?;
            let table = render_report(&eval);
            std::fs::write(out_dir.join("mot_report.txt"), &table)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            std::fs::write(out_dir.join("mot_report.csv"), render_report_csv(&eval))
                .map_err(|e| CliError::Validation(e.to_string()))?;
            io::write_purity_curve(out_dir.join("purity_curve.csv"), &eval.purity_curve)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            print!("{table}");
            Ok(())
        }
        Command::Gradcheck {
            samples,
            epsilon,
            tolerance,
        } => {
            let cfg = load_config(&cli, None)?;
            let mut all_pass = true;
            println!("loss          samples  max_rel_err  tolerance  status");
            for kind in [LossKind::Contrastive, LossKind::Triplet, LossKind::SymTriplet] {
                let summary = run_grad_check(kind, *samples, cfg.seed, *epsilon, *tolerance)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                all_pass &= summary.pass;
                println!(
                    "{:<13} {:>7}  {:>11.3e}  {:>9.1e}  {}",
                    summary.kind.as_str(),
                    summary.samples,
                    summary.max_rel_err,
                    summary.tolerance,
                    if summary.pass { "pass" } else { "FAIL" }
                );
            }
            if all_pass {
                Ok(())
            } else {
                Err(CliError::Acceptance(
                    "analytic gradients exceed tolerance".into(),
                ))
            }
        }
        Command::PurityCurve {
            in_dir,
            results_dir,
            out,
        } => {
            let cfg = load_config(&cli, None)?;
            let data = load_run(in_dir, results_dir)?;
            let eval = with_thread_cap(cfg.threads, || evaluate(&data, 0.5))??;
            io::write_purity_curve(out, &eval.purity_curve)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            println!(
                "purity curve over {} cluster counts written",
                eval.purity_curve.len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
