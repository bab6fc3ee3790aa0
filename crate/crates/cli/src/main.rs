//! `thibeam`: pulse-inversion tissue-harmonic imaging pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thibeam_cli::config::RunConfig;
use thibeam_cli::pipeline::{run_beamform, run_metrics, run_render, run_simulate};
use thibeam_cli::sweep::{run_compare, run_sweep, FamilyFilter};
use thibeam_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "thibeam",
    version,
    about = "Pulse-inversion tissue-harmonic imaging: simulation, adaptive beamforming, and image-quality studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; reference defaults apply when omitted.
    #[arg(long, global = true, value_name = "path")]
    config: Option<PathBuf>,
    /// Override the configured base seed.
    #[arg(long, global = true, value_name = "u64")]
    seed: Option<u64>,
    /// Directory for all run artifacts.
    #[arg(long, global = true, value_name = "dir")]
    out: Option<PathBuf>,
    /// Worker threads (defaults to the logical CPU count).
    #[arg(long, global = true, value_name = "n")]
    threads: Option<usize>,
    /// Override the display dynamic range in dB.
    #[arg(long = "dynamic-range", global = true, value_name = "db")]
    dynamic_range: Option<f64>,
    /// Skip the harmonic band-pass after pulse inversion.
    #[arg(long = "no-bandpass", global = true)]
    no_bandpass: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the pulse-inversion channel data for every scanline.
    Simulate,
    /// Combine stored RF pairs and beamform the harmonic image.
    Beamform,
    /// Measure image quality from the stored dB map.
    Metrics,
    /// Run the beamformer parameter study and baseline comparison.
    Sweep {
        /// Parameter family to sweep.
        #[arg(long, value_enum, default_value = "all")]
        family: FamilyArg,
    },
    /// Re-render the PGM from the stored dB map.
    Render,
    /// Compute best-over-baseline gains from a sweep's baselines.
    Compare,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(name = "K", alias = "k")]
    K,
    #[value(name = "L", alias = "l")]
    L,
    Loading,
    Delta,
    All,
}

impl From<FamilyArg> for FamilyFilter {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::K => FamilyFilter::K,
            FamilyArg::L => FamilyFilter::L,
            FamilyArg::Loading => FamilyFilter::Loading,
            FamilyArg::Delta => FamilyFilter::Delta,
            FamilyArg::All => FamilyFilter::All,
        }
    }
}

fn run() -> CliResult<()> {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply_overrides(cli.seed, cli.dynamic_range, cli.no_bandpass);
    config.validate()?;
    let threads = match cli.threads {
        Some(0) => return Err(CliError::invalid("--threads must be at least 1")),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::invalid(format!("--threads: {e}")))?;
            n
        }
        None => rayon::current_num_threads(),
    };
    let out = cli
        .out
        .clone()
        .ok_or_else(|| CliError::invalid("--out <dir> is required"))?;
    match cli.command {
        Command::Simulate => {
            run_simulate(&config, &out, threads)?;
            println!(
                "simulated {} pulse-inversion scanline pairs -> {}",
                config.n_scanlines,
                out.join("rf").display()
            );
            Ok(())
        }
        Command::Beamform => {
            let image = run_beamform(&config, &out, threads)?;
            println!(
                "beamformed {} scanlines x {} depth samples -> {}",
                image.n_scanlines,
                image.n_depth,
                out.join("image.pgm").display()
            );
            Ok(())
        }
        Command::Metrics => {
            let row = run_metrics(&config, &out, threads)?;
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
            println!(
                "FWHM {} mm | CR {} dB | CNR {} | radius err {} mm",
                fmt(row.mean_fwhm_mm),
                fmt(row.mean_cr_db),
                fmt(row.mean_cnr),
                fmt(row.mean_radius_err_mm)
            );
            Ok(())
        }
        Command::Sweep { family } => {
            let outcome = run_sweep(&config, &out, family.into(), threads)?;
            println!(
                "sweep \"{}\": {} rows ({} unique runs), wall {:.1} s -> {}",
                FamilyFilter::from(family).as_str(),
                outcome.rows.len(),
                outcome.unique_runs,
                outcome.wall_time_s,
                out.join("sweep.csv").display()
            );
            Ok(())
        }
        Command::Render => {
            run_render(&config, &out, threads)?;
            println!("rendered {}", out.join("image.pgm").display());
            Ok(())
        }
        Command::Compare => {
            let rows = run_compare(&out)?;
            for r in &rows {
                println!(
                    "best vs {:<11} CR gain {:+.3} dB | CNR gain {:+.2} %",
                    r.baseline, r.cr_gain_db, r.cnr_gain_pct
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("thibeam: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
