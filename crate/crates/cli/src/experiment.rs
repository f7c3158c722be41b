//! Batch simulation runner: offline optimum, the configured policies over
//! the (window, noise, seed) matrix, and the closed-form bound table.

use serde::Serialize;
use thiserror::Error;

use gridsched::{
    ratio_report, schedule_fleet, total_cost, FleetMode, ModelError, RatioReport, Trace,
};

use crate::config::{ConfigError, ExperimentConfig};
use crate::synth::{synthesize_trace, TraceKind};
use crate::trace_io::{load_trace, TraceIoError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trace(#[from] TraceIoError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot write {path}: {source}")]
    Write { path: std::path::PathBuf, source: std::io::Error },
}

/// One simulated run. `cost_reduction` is relative to serving everything
/// externally; `ratio_vs_opt` compares against the offline optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub algo: String,
    pub w: u32,
    pub seed: u64,
    pub noise_frac: f64,
    pub total_cost: f64,
    pub benchmark_cost: f64,
    pub cost_reduction: f64,
    pub ratio_vs_opt: f64,
    pub startup_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub price_cap: f64,
    pub benchmark_cost: f64,
    pub opt_cost: f64,
    pub opt_cost_reduction: f64,
    pub runs: Vec<RunRow>,
    pub bounds: RatioReport,
}

/// Loads or synthesizes the input trace and applies the horizon cap.
pub fn prepare_trace(config: &ExperimentConfig) -> Result<Trace, CliError> {
    let params = config.shared_params();
    match &config.trace {
        Some(path) => {
            let mut trace = load_trace(path, &params)?;
            if config.horizon > trace.len() {
                return Err(CliError::Config(ConfigError::Invalid(format!(
                    "horizon {} exceeds trace length {}",
                    config.horizon,
                    trace.len()
                ))));
            }
            if config.horizon > 0 {
                trace.slots.truncate(config.horizon);
            }
            Ok(trace)
        }
        None => {
            let kind = TraceKind::parse(&config.synthetic).map_err(ConfigError::Invalid)?;
            let total = config.capacities_kw.iter().sum();
            Ok(synthesize_trace(kind, &params, total, config.horizon, config.trace_seed))
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, CliError> {
    config.validate()?;
    let fleet = config.fleet()?;
    let params = config.shared_params();
    let trace = prepare_trace(config)?;

    let benchmark = total_cost(&vec![false; trace.len()], &trace, &params)?.total_cost;
    let opt = schedule_fleet(&trace, &fleet, FleetMode::Offline, 0, &gridsched::NoiseModel::none());

    let mut runs = Vec::new();
    for kind in config.policy_kinds()? {
        for &w in &config.windows {
            for &frac in &config.noise_std {
                for &seed in &config.seeds {
                    let noise = config.noise_model(frac, seed);
                    let sched =
                        schedule_fleet(&trace, &fleet, FleetMode::Online(kind), w as usize, &noise);
                    debug_assert!(sched.total_cost >= opt.total_cost - 1e-6 * opt.total_cost);
                    runs.push(RunRow {
                        algo: kind.name().to_string(),
                        w,
                        seed,
                        noise_frac: frac,
                        total_cost: sched.total_cost,
                        benchmark_cost: benchmark,
                        cost_reduction: (benchmark - sched.total_cost) / benchmark,
                        ratio_vs_opt: sched.total_cost / opt.total_cost,
                        startup_count: sched.startup_count,
                    });
                }
            }
        }
    }

    let bounds = ratio_report(&config.windows, &params, config.epsilon);
    Ok(Report {
        price_cap: params.price_max,
        benchmark_cost: benchmark,
        opt_cost: opt.total_cost,
        opt_cost_reduction: (benchmark - opt.total_cost) / benchmark,
        runs,
        bounds,
    })
}
