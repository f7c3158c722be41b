use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;

use gridsched_cli::{emit_report, run_experiment, ExperimentConfig, Overrides};

/// Simulate online generator scheduling policies over a demand trace and
/// emit plot-ready cost and bound tables.
#[derive(Parser, Debug)]
#[command(name = "gridsched", version, about)]
struct Cli {
    /// TOML config file; defaults apply for every key it omits.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated policies to run (chase, chaselk, chaselk_plus,
    /// chasepp, chasepp_plus, rhc).
    #[arg(long)]
    algo: Option<String>,
    /// Comma-separated prediction window sizes in slots.
    #[arg(long)]
    window: Option<String>,
    /// Comma-separated demand-error standard deviations, as fractions of
    /// the wind capacity.
    #[arg(long)]
    noise_std: Option<String>,
    /// Comma-separated noise seeds.
    #[arg(long)]
    seed: Option<String>,
    /// CSV trace to load instead of a synthetic input.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Output base path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: csv or json.
    #[arg(long)]
    format: Option<String>,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.apply(&Overrides {
        algo: cli.algo,
        window: cli.window,
        noise_std: cli.noise_std,
        seed: cli.seed,
        trace: cli.trace,
        out: cli.out,
        format: cli.format,
    })?;
    let report = run_experiment(&config).context("experiment failed")?;
    let written = emit_report(&report, &config.out, &config.format)?;
    println!(
        "benchmark {} opt {} ({} runs, {} bound rows)",
        report.benchmark_cost,
        report.opt_cost,
        report.runs.len(),
        report.bounds.rows.len()
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
