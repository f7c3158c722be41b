//! Online decision rules and the prediction plumbing that feeds them.
//!
//! Every policy sees only the current slot, an optional prediction window,
//! and its own committed state. Decisions may use noisy predictions; the
//! running benefit state and all reported costs use realized inputs only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::{
    dispatch_given_status, total_cost, DispatchSlot, InputSlot, Schedule, SystemParams, Trace,
};
use crate::ratio::{alpha, cr_chaselk, cr_chasepp, optimal_threshold};
use crate::segments::{advance_capped, delta, dp_plan};

fn at_zero(x: f64, startup_cost: f64) -> bool {
    x.abs() <= 1e-9 * startup_cost
}

fn at_floor(x: f64, startup_cost: f64) -> bool {
    (x + startup_cost).abs() <= 1e-9 * startup_cost
}

/// Committed knowledge of a running policy: last status and the clipped
/// benefit sum over realized slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyState {
    pub y_prev: bool,
    pub t: usize,
    pub capped_prefix: f64,
}

impl PolicyState {
    pub fn new(params: &SystemParams) -> PolicyState {
        PolicyState { y_prev: false, t: 0, capped_prefix: -params.startup_cost }
    }

    /// Records the decision for the next slot and folds the realized input
    /// into the benefit state.
    pub fn commit(&mut self, on: bool, realized: &InputSlot, params: &SystemParams) {
        self.capped_prefix =
            advance_capped(self.capped_prefix, delta(realized, params), params.startup_cost);
        self.y_prev = on;
        self.t += 1;
    }
}

/// Inputs for slots t..=t+w as seen at time t. The first slot is always the
/// exact current input; later slots may be noisy forecasts, and the window
/// is shorter than w+1 near the end of the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionWindow {
    pub slots: Vec<InputSlot>,
    pub w: usize,
}

/// Boundary-chasing rule with no prediction: switch on when the benefit sum
/// fills up, off when it drains, hold otherwise.
pub fn chase_step(state: &PolicyState, slot: &InputSlot, params: &SystemParams) -> bool {
    let beta = params.startup_cost;
    let next = advance_capped(state.capped_prefix, delta(slot, params), beta);
    if at_zero(next, beta) {
        true
    } else if at_floor(next, beta) {
        false
    } else {
        state.y_prev
    }
}

/// Boundary chasing with lookahead: act now on the first boundary the
/// predicted benefit sum will reach inside the window.
pub fn chaselk_step(state: &PolicyState, window: &PredictionWindow, params: &SystemParams) -> bool {
    let beta = params.startup_cost;
    let mut cur = state.capped_prefix;
    for slot in &window.slots {
        cur = advance_capped(cur, delta(slot, params), beta);
        if at_zero(cur, beta) {
            return true;
        }
        if at_floor(cur, beta) {
            return false;
        }
    }
    state.y_prev
}

/// Threshold rule: besides chasing boundaries, turning on requires either a
/// window benefit of at least lambda (when no drain is in sight) or enough
/// benefit before the coming drain to cover the startup.
pub fn chasepp_step(
    state: &PolicyState,
    window: &PredictionWindow,
    lambda: f64,
    params: &SystemParams,
) -> bool {
    let beta = params.startup_cost;
    let deltas: Vec<f64> = window.slots.iter().map(|s| delta(s, params)).collect();
    let mut capped = Vec::with_capacity(deltas.len());
    let mut cur = state.capped_prefix;
    for &d in &deltas {
        cur = advance_capped(cur, d, beta);
        capped.push(cur);
    }
    let first_hit = capped.iter().position(|&x| at_zero(x, beta) || at_floor(x, beta));
    let Some(hit) = first_hit else {
        return state.y_prev;
    };
    if at_floor(capped[hit], beta) {
        return false;
    }
    match capped.iter().position(|&x| at_floor(x, beta)) {
        None => {
            if deltas.iter().sum::<f64>() >= lambda {
                true
            } else {
                state.y_prev
            }
        }
        Some(drain) => {
            if deltas[..=drain].iter().sum::<f64>() >= 0.0 {
                true
            } else {
                state.y_prev
            }
        }
    }
}

/// Threshold rule with the all-external guard: when never generating has
/// the better guarantee, serve everything externally, which is exactly the
/// off-status dispatch.
pub fn chasepp_plus_step(
    state: &PolicyState,
    window: &PredictionWindow,
    lambda: f64,
    cr_chasepp: f64,
    params: &SystemParams,
) -> DispatchSlot {
    let on = if 1.0 / alpha(params) < cr_chasepp {
        false
    } else {
        chasepp_step(state, window, lambda, params)
    };
    dispatch_given_status(&window.slots[0], on, params)
}

/// Receding horizon: plan optimally over the window with the committed
/// status as the starting point and no value beyond the window, then keep
/// only the first decision.
pub fn rhc_step(state: &PolicyState, window: &PredictionWindow, params: &SystemParams) -> bool {
    let (_, plan) = dp_plan(&window.slots, params, state.y_prev);
    plan[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    None,
    Gaussian,
    Hyperbolic,
}

/// Shape controls for the heavy-tailed error distribution. With scale unset
/// the samples are rescaled so their standard deviation matches the one
/// implied by the configured fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicParams {
    pub location: f64,
    pub scale: Option<f64>,
    pub tail: f64,
}

impl Default for HyperbolicParams {
    fn default() -> HyperbolicParams {
        HyperbolicParams { location: 0.0, scale: None, tail: 1.0 }
    }
}

/// Forecast error model. Error standard deviations are fractions of the
/// installed wind capacity (demand) and of the trace's peak heat (heat);
/// the current slot is never perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub wind_std_frac: f64,
    pub heat_std_frac: f64,
    pub hyperbolic: HyperbolicParams,
    pub seed: u64,
    pub wind_capacity: f64,
}

impl NoiseModel {
    pub fn none() -> NoiseModel {
        NoiseModel {
            kind: NoiseKind::None,
            wind_std_frac: 0.0,
            heat_std_frac: 0.0,
            hyperbolic: HyperbolicParams::default(),
            seed: 0,
            wind_capacity: 0.0,
        }
    }
}

fn mix(seed: u64, t: u64) -> u64 {
    let mut z = seed.wrapping_add(t.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Symmetric density proportional to exp(-tail * sqrt(1 + x^2)), tabulated
/// for inverse-transform sampling. The tails fall like a Laplace's, so the
/// half-range covers everything above machine precision.
struct HyperbolicShape {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    std: f64,
}

impl HyperbolicShape {
    fn new(tail: f64) -> HyperbolicShape {
        let n = 8192;
        let half = 45.0 / tail;
        let mut xs = Vec::with_capacity(n);
        let mut pdf = Vec::with_capacity(n);
        for i in 0..n {
            let x = -half + 2.0 * half * i as f64 / (n - 1) as f64;
            xs.push(x);
            pdf.push((-tail * (1.0 + x * x).sqrt()).exp());
        }
        let mut cdf = vec![0.0; n];
        let mut second = 0.0;
        for i in 1..n {
            let step = xs[i] - xs[i - 1];
            cdf[i] = cdf[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * step;
            let xm = 0.5 * (xs[i] + xs[i - 1]);
            second += xm * xm * 0.5 * (pdf[i] + pdf[i - 1]) * step;
        }
        let total = cdf[n - 1];
        for c in cdf.iter_mut() {
            *c /= total;
        }
        HyperbolicShape { xs, cdf, std: (second / total).sqrt() }
    }

    fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.xs[i - 1] + frac * (self.xs[i] - self.xs[i - 1])
    }
}

enum Sampler {
    Silent,
    Gaussian { demand: Normal<f64>, heat: Normal<f64> },
    Hyperbolic { shape: HyperbolicShape, location: f64, demand_scale: f64, heat_scale: f64 },
}

impl Sampler {
    fn new(noise: &NoiseModel, std_demand: f64, std_heat: f64) -> Sampler {
        match noise.kind {
            NoiseKind::None => Sampler::Silent,
            NoiseKind::Gaussian => Sampler::Gaussian {
                demand: Normal::new(0.0, std_demand).expect("std is finite and nonnegative"),
                heat: Normal::new(0.0, std_heat).expect("std is finite and nonnegative"),
            },
            NoiseKind::Hyperbolic => {
                let shape = HyperbolicShape::new(noise.hyperbolic.tail);
                let unit = noise.hyperbolic.scale;
                let demand_scale = unit.unwrap_or(std_demand / shape.std);
                let heat_scale = unit.unwrap_or(std_heat / shape.std);
                Sampler::Hyperbolic {
                    shape,
                    location: noise.hyperbolic.location,
                    demand_scale,
                    heat_scale,
                }
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        match self {
            Sampler::Silent => (0.0, 0.0),
            Sampler::Gaussian { demand, heat } => (demand.sample(rng), heat.sample(rng)),
            Sampler::Hyperbolic { shape, location, demand_scale, heat_scale } => {
                let a = location + shape.sample(rng.gen::<f64>()) * demand_scale;
                let h = location + shape.sample(rng.gen::<f64>()) * heat_scale;
                (a, h)
            }
        }
    }
}

/// Prediction for slots t..=t+w: the current slot exactly, later slots with
/// seeded forecast errors, demand and heat clamped at zero, prices exact.
/// Deterministic in (trace, t, w, noise) alone.
pub fn noisy_window(trace: &Trace, t: usize, w: usize, noise: &NoiseModel) -> PredictionWindow {
    let end = (t + w).min(trace.len());
    let mut slots = Vec::with_capacity(end - t + 1);
    slots.push(trace.slots[t - 1]);
    if end > t && noise.kind != NoiseKind::None {
        let peak_heat = trace.slots.iter().map(|s| s.heat).fold(0.0, f64::max);
        let sampler = Sampler::new(
            noise,
            noise.wind_std_frac * noise.wind_capacity,
            noise.heat_std_frac * peak_heat,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(mix(noise.seed, t as u64));
        for tau in (t + 1)..=end {
            let truth = trace.slots[tau - 1];
            let (ea, eh) = sampler.draw(&mut rng);
            slots.push(InputSlot::new(
                (truth.demand + ea).max(0.0),
                (truth.heat + eh).max(0.0),
                truth.price,
            ));
        }
    } else {
        slots.extend_from_slice(&trace.slots[t..end]);
    }
    PredictionWindow { slots, w }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    Chase,
    ChaseLk,
    ChaseLkPlus,
    ChasePp,
    ChasePpPlus,
    Rhc,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Chase => "chase",
            PolicyKind::ChaseLk => "chaselk",
            PolicyKind::ChaseLkPlus => "chaselk_plus",
            PolicyKind::ChasePp => "chasepp",
            PolicyKind::ChasePpPlus => "chasepp_plus",
            PolicyKind::Rhc => "rhc",
        }
    }
}

/// A decision rule bound to a window length, with the threshold and the
/// all-external guard resolved up front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    pub w: usize,
    lambda: f64,
    all_external: bool,
}

impl Policy {
    pub fn prepare(kind: PolicyKind, w: usize, params: &SystemParams) -> Policy {
        let lambda = match kind {
            PolicyKind::ChasePp | PolicyKind::ChasePpPlus => {
                optimal_threshold(w as u32, params).lambda_star
            }
            _ => 0.0,
        };
        let all_external = match kind {
            PolicyKind::ChasePpPlus => 1.0 / alpha(params) < cr_chasepp(w as u32, params),
            PolicyKind::ChaseLkPlus => 1.0 / alpha(params) < cr_chaselk(w as u32, params),
            _ => false,
        };
        Policy { kind, w, lambda, all_external }
    }

    /// The effective window length: boundary-only rules ignore predictions.
    pub fn window(&self) -> usize {
        match self.kind {
            PolicyKind::Chase => 0,
            _ => self.w,
        }
    }

    pub fn decide(
        &self,
        state: &PolicyState,
        window: &PredictionWindow,
        params: &SystemParams,
    ) -> bool {
        if self.all_external {
            return false;
        }
        match self.kind {
            PolicyKind::Chase => chase_step(state, &window.slots[0], params),
            PolicyKind::ChaseLk | PolicyKind::ChaseLkPlus => chaselk_step(state, window, params),
            PolicyKind::ChasePp | PolicyKind::ChasePpPlus => {
                chasepp_step(state, window, self.lambda, params)
            }
            PolicyKind::Rhc => rhc_step(state, window, params),
        }
    }
}

/// Drives a policy over a whole trace: predictions feed the decisions, the
/// realized inputs feed the state and the bill.
pub fn run_online(
    policy: &Policy,
    trace: &Trace,
    noise: &NoiseModel,
    params: &SystemParams,
) -> Schedule {
    let mut state = PolicyState::new(params);
    let mut statuses = Vec::with_capacity(trace.len());
    for t in 1..=trace.len() {
        let window = noisy_window(trace, t, policy.window(), noise);
        let on = policy.decide(&state, &window, params);
        state.commit(on, &trace.slots[t - 1], params);
        statuses.push(on);
    }
    total_cost(&statuses, trace, params).expect("one status per slot")
}
