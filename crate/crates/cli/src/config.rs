//! Flat TOML experiment configuration with command-line overrides.
//!
//! The default profile is a 30 MW microgrid: ten co-generators (three 5 MW,
//! four 3 MW, three 1 MW) with $0.051/kWh output cost, $110/h running cost,
//! $1400 startup cost, $0.0179/kWh gas, and heat efficiency 1.8. The spot
//! price cap defaults to $0.35/kWh; it is a free knob, and every report
//! labels its bound table with the cap used.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use gridsched::{
    GeneratorFleet, HyperbolicParams, MultigenError, NoiseKind, NoiseModel, PolicyKind,
    SystemParams,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid fleet: {0}")]
    Fleet(#[from] MultigenError),
}

const ALL_POLICIES: [PolicyKind; 6] = [
    PolicyKind::Chase,
    PolicyKind::ChaseLk,
    PolicyKind::ChaseLkPlus,
    PolicyKind::ChasePp,
    PolicyKind::ChasePpPlus,
    PolicyKind::Rhc,
];

pub(crate) fn parse_policy(name: &str) -> Result<PolicyKind, ConfigError> {
    ALL_POLICIES
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| {
            let known: Vec<&str> = ALL_POLICIES.iter().map(|k| k.name()).collect();
            ConfigError::Invalid(format!(
                "unknown algorithm {name:?}; expected one of {}",
                known.join(", ")
            ))
        })
}

/// Everything one experiment needs: economics, input selection, the run
/// matrix, and output routing. Units are kW, hours, and dollars; one slot
/// is one hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub startup_cost: f64,
    pub running_cost: f64,
    pub output_cost: f64,
    pub gas_price: f64,
    pub heat_efficiency: f64,
    pub price_min: f64,
    pub price_max: f64,
    pub capacities_kw: Vec<f64>,

    /// CSV trace to load; when unset a synthetic trace is generated.
    pub trace: Option<PathBuf>,
    /// Synthetic generator: square | staircase | adversary | random.
    pub synthetic: String,
    /// Slots to simulate. Synthetic traces are generated at this length;
    /// a loaded trace must be at least this long and is truncated to it.
    /// 0 means the full loaded trace.
    pub horizon: usize,
    /// Seed for the random synthetic generator.
    pub trace_seed: u64,

    pub algorithms: Vec<String>,
    pub windows: Vec<u32>,
    pub seeds: Vec<u64>,
    /// Prediction error model: none | gaussian | hyperbolic.
    pub noise: String,
    /// Demand-error standard deviations, as fractions of wind_capacity_kw;
    /// the run matrix sweeps over them.
    pub noise_std: Vec<f64>,
    /// Heat-error standard deviation, as a fraction of the trace's peak
    /// heat demand; applied at every sweep point.
    pub heat_noise_std: f64,
    /// Tail weight of the hyperbolic error density (smaller = heavier).
    pub hyperbolic_tail: f64,
    /// Wind farm nameplate; prediction noise scales against it, not
    /// against generator capacity.
    pub wind_capacity_kw: f64,

    /// Initial sub-slot resolution for the lower-bound refinement.
    pub epsilon: f64,

    /// Output base path; files get .runs.csv/.bounds.csv or .json suffixes.
    pub out: PathBuf,
    /// csv | json
    pub format: String,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            startup_cost: 1400.0,
            running_cost: 110.0,
            output_cost: 0.051,
            gas_price: 0.0179,
            heat_efficiency: 1.8,
            price_min: 0.0,
            price_max: 0.35,
            capacities_kw: vec![
                5000.0, 5000.0, 5000.0, 3000.0, 3000.0, 3000.0, 3000.0, 1000.0, 1000.0, 1000.0,
            ],
            trace: None,
            synthetic: "square".to_string(),
            horizon: 168,
            trace_seed: 7,
            algorithms: vec![
                "chase".to_string(),
                "chaselk_plus".to_string(),
                "chasepp_plus".to_string(),
                "rhc".to_string(),
            ],
            windows: vec![0, 1, 2, 3, 4, 5, 6, 8, 10, 12, 15],
            seeds: vec![1],
            noise: "none".to_string(),
            noise_std: vec![0.0],
            heat_noise_std: 0.0,
            hyperbolic_tail: 1.0,
            wind_capacity_kw: 400.0,
            epsilon: 0.25,
            out: PathBuf::from("report"),
            format: "csv".to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source: Box::new(source) })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.algorithms.is_empty() {
            return Err(ConfigError::Invalid("at least one algorithm is required".into()));
        }
        for name in &self.algorithms {
            parse_policy(name)?;
        }
        if self.windows.is_empty() {
            return Err(ConfigError::Invalid("at least one window is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("at least one seed is required".into()));
        }
        if self.noise_std.is_empty() {
            return Err(ConfigError::Invalid("noise_std needs at least one entry".into()));
        }
        if self.noise_std.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(ConfigError::Invalid("noise_std entries must be >= 0".into()));
        }
        if !(self.heat_noise_std.is_finite() && self.heat_noise_std >= 0.0) {
            return Err(ConfigError::Invalid("heat_noise_std must be >= 0".into()));
        }
        match self.noise.as_str() {
            "none" | "gaussian" | "hyperbolic" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown noise model {other:?}; expected none, gaussian, or hyperbolic"
                )))
            }
        }
        match self.format.as_str() {
            "csv" | "json" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown format {other:?}; expected csv or json"
                )))
            }
        }
        if self.trace.is_none() {
            crate::synth::TraceKind::parse(&self.synthetic)
                .map_err(ConfigError::Invalid)?;
            if self.horizon == 0 {
                return Err(ConfigError::Invalid(
                    "a synthetic trace needs a nonzero horizon".into(),
                ));
            }
        }
        if !(self.wind_capacity_kw.is_finite() && self.wind_capacity_kw >= 0.0) {
            return Err(ConfigError::Invalid("wind_capacity_kw must be >= 0".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ConfigError::Invalid("epsilon must be > 0".into()));
        }
        self.fleet()?;
        Ok(())
    }

    /// Economics shared by every unit; capacity is the largest unit's, so
    /// these params also drive the closed-form bound table.
    pub fn shared_params(&self) -> SystemParams {
        let largest = self.capacities_kw.iter().copied().fold(0.0, f64::max);
        SystemParams {
            startup_cost: self.startup_cost,
            running_cost: self.running_cost,
            output_cost: self.output_cost,
            capacity: largest,
            heat_efficiency: self.heat_efficiency,
            gas_price: self.gas_price,
            price_min: self.price_min,
            price_max: self.price_max,
        }
    }

    pub fn fleet(&self) -> Result<GeneratorFleet, ConfigError> {
        Ok(GeneratorFleet::new(self.shared_params(), &self.capacities_kw)?)
    }

    pub fn policy_kinds(&self) -> Result<Vec<PolicyKind>, ConfigError> {
        self.algorithms.iter().map(|n| parse_policy(n)).collect()
    }

    /// Noise model for one sweep point. A zero std with no heat noise is
    /// exact regardless of the configured kind.
    pub fn noise_model(&self, frac: f64, seed: u64) -> NoiseModel {
        let kind = if frac == 0.0 && self.heat_noise_std == 0.0 {
            NoiseKind::None
        } else {
            match self.noise.as_str() {
                "gaussian" => NoiseKind::Gaussian,
                "hyperbolic" => NoiseKind::Hyperbolic,
                _ => NoiseKind::None,
            }
        };
        NoiseModel {
            kind,
            wind_std_frac: frac,
            heat_std_frac: self.heat_noise_std,
            hyperbolic: HyperbolicParams { tail: self.hyperbolic_tail, ..Default::default() },
            seed,
            wind_capacity: self.wind_capacity_kw,
        }
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<(), ConfigError> {
        if let Some(algo) = &overrides.algo {
            self.algorithms = split_list(algo);
        }
        if let Some(window) = &overrides.window {
            self.windows = parse_list(window, "window")?;
        }
        if let Some(noise_std) = &overrides.noise_std {
            self.noise_std = parse_list(noise_std, "noise-std")?;
            if self.noise == "none" && self.noise_std.iter().any(|f| *f > 0.0) {
                self.noise = "gaussian".to_string();
            }
        }
        if let Some(seed) = &overrides.seed {
            self.seeds = parse_list(seed, "seed")?;
        }
        if let Some(trace) = &overrides.trace {
            self.trace = Some(trace.clone());
        }
        if let Some(out) = &overrides.out {
            self.out = out.clone();
        }
        if let Some(format) = &overrides.format {
            self.format = format.clone();
        }
        self.validate()
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub algo: Option<String>,
    pub window: Option<String>,
    pub noise_std: Option<String>,
    pub seed: Option<String>,
    pub trace: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

fn split_list(raw: &str) -> Vec<String> {
    raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse_list<T: std::str::FromStr>(raw: &str, flag: &str) -> Result<Vec<T>, ConfigError> {
    split_list(raw)
        .iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| ConfigError::Invalid(format!("--{flag}: cannot parse {s:?}")))
        })
        .collect()
}
