//! `streameval`: generate label-correlated streams, calibrate the evaluation
//! shift, and benchmark budgeted online learners.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use streameval::blind::{calibrate_shift, default_k_grid, default_shift_grid};
use streameval::harness::{run_experiment, run_sweep};
use streameval::io::{load_stream, save_stream};
use streameval::synth::{generate, BurstSpec};
use streameval::Result;

use streameval_cli::config::{
    config_echo, parse_axis, parse_burst, parse_config, parse_usize_grid,
};
use streameval_cli::reports::{
    emit_calibration, emit_config_echo, emit_reports, emit_sweep, render_report,
};

#[derive(Parser)]
#[command(
    name = "streameval",
    about = "Streaming evaluation of budgeted online learners on label-correlated streams",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic bursty stream and write it in the on-disk format.
    Gen(GenArgs),
    /// Sweep blind accuracy over shifts and select the smallest decorrelating one.
    Calibrate(CalibrateArgs),
    /// Run one experiment described by a JSON config.
    Run(RunArgs),
    /// Run a one-dimensional hyperparameter sweep around a base config.
    Sweep(SweepArgs),
    /// Summarize a finished run directory as plain text.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, short = 'c')]
    num_classes: usize,
    #[arg(long, short = 'd')]
    feature_dim: usize,
    #[arg(long, short = 'n')]
    length: usize,
    /// Burst law: fixed:L or geometric:MEAN.
    #[arg(long)]
    burst: String,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    drift_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the binary feature file.
    #[arg(long)]
    features: PathBuf,
    /// Output path for the JSON Lines label file.
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Context windows to search, e.g. 1,2,4,8. Default: 1..128 powers of two.
    #[arg(long)]
    k_grid: Option<String>,
    /// Shifts to probe, e.g. 0,1,2,4. Default: 0 plus powers of two up to N/4.
    #[arg(long)]
    shift_grid: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Axis spec: lr=0.0005,0.005,0.05 or wd=0,1e-4,1e-2.
    #[arg(long)]
    axis: String,
    /// Overrides the config's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    run_dir: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(args) => {
            let spec = BurstSpec {
                num_classes: args.num_classes,
                feature_dim: args.feature_dim,
                length: args.length,
                burst: parse_burst(&args.burst)?,
                noise_sigma: args.noise_sigma,
                drift_rate: args.drift_rate,
                seed: args.seed,
            };
            let stream = generate::<f32>(&spec)?;
            save_stream(&stream, &args.features, &args.labels)?;
            println!(
                "wrote {} samples ({} classes, dim {}) to {} + {}",
                stream.len(),
                stream.num_classes(),
                stream.feature_dim(),
                args.features.display(),
                args.labels.display()
            );
            Ok(())
        }
        Command::Calibrate(args) => {
            let stream = load_stream(&args.features, &args.labels)?;
            let k_grid = match &args.k_grid {
                Some(s) => parse_usize_grid(s)?,
                None => default_k_grid(),
            };
            let shift_grid = match &args.shift_grid {
                Some(s) => parse_usize_grid(s)?,
                None => default_shift_grid(stream.len()),
            };
            let result = calibrate_shift(&stream, &k_grid, &shift_grid, args.epsilon)?;
            let files = emit_calibration(&result, &args.out_dir)?;
            if result.degenerate {
                eprintln!("warning: single-class stream; every shift looks identical");
            }
            println!(
                "s_star {}  plateau {:.6}  ({} curve points) -> {}",
                result.s_star,
                result.plateau_level,
                result.curve.len(),
                files[0].parent().unwrap_or(&args.out_dir).display()
            );
            Ok(())
        }
        Command::Run(args) => {
            let mut cfg = parse_config(&args.config)?;
            if let Some(dir) = args.out_dir {
                cfg.output = dir;
            }
            let echo = config_echo(&cfg);
            let out = run_experiment(&cfg)?;
            emit_config_echo(&echo, &cfg.output)?;
            emit_reports(&out, &cfg.output)?;
            let acc = out
                .summary
                .final_accuracy
                .map_or("n/a".to_string(), |a| format!("{a:.6}"));
            let bwt = out
                .summary
                .bwt_at_t
                .map_or("n/a".to_string(), |a| format!("{a:.6}"));
            println!(
                "{} steps, accuracy {acc}, bwt {bwt}, {} updates -> {}",
                out.summary.steps,
                out.summary.total_updates,
                cfg.output.display()
            );
            Ok(())
        }
        Command::Sweep(args) => {
            let mut cfg = parse_config(&args.config)?;
            if let Some(dir) = args.out_dir {
                cfg.output = dir;
            }
            let axis = parse_axis(&args.axis)?;
            let points = run_sweep(&cfg, &axis)?;
            emit_config_echo(&config_echo(&cfg), &cfg.output)?;
            let path = emit_sweep(&points, &cfg.output)?;
            let failures = points.iter().filter(|p| p.error.is_some()).count();
            println!(
                "{} grid points ({failures} failed) -> {}",
                points.len(),
                path.display()
            );
            Ok(())
        }
        Command::Report(args) => {
            let text = render_report(&args.run_dir)?;
            match args.out {
                Some(path) => {
                    std::fs::write(&path, &text).map_err(|e| streameval::Error::Io {
                        path: path.display().to_string(),
                        source: e,
                    })?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
