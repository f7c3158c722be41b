//! Scheduling a heterogeneous fleet by slicing demand into capacity layers.
//!
//! Layer n takes the demand band between the combined capacity of the
//! larger units and its own cap, heat mirrored at eta times the caps, and
//! is then scheduled as an independent single-generator problem. Whatever
//! exceeds the fleet's combined capacity is served externally.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{total_cost, InputSlot, ModelError, Schedule, SystemParams, Trace};
use crate::online::{noisy_window, NoiseModel, Policy, PolicyKind, PolicyState, PredictionWindow};
use crate::ratio::cr_chasepp;
use crate::segments::offline_optimal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MultigenError {
    #[error("a fleet needs at least one generator")]
    EmptyFleet,
    #[error("generator {index} is uneconomic at its capacity: {source}")]
    InvalidUnit { index: usize, source: ModelError },
}

/// Generators sharing all economics except capacity, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorFleet {
    units: Vec<SystemParams>,
}

impl GeneratorFleet {
    /// Sorts capacities nonincreasing (ties keep input order) and validates
    /// every unit, since a capacity that is too small for the shared idle
    /// cost can never pay for itself.
    pub fn new(shared: SystemParams, capacities: &[f64]) -> Result<GeneratorFleet, MultigenError> {
        if capacities.is_empty() {
            return Err(MultigenError::EmptyFleet);
        }
        let mut caps = capacities.to_vec();
        caps.sort_by(|a, b| b.partial_cmp(a).expect("capacities are comparable"));
        let units: Vec<SystemParams> = caps.iter().map(|&l| shared.with_capacity(l)).collect();
        for (index, unit) in units.iter().enumerate() {
            crate::model::validate_params(unit)
                .map_err(|source| MultigenError::InvalidUnit { index, source })?;
        }
        Ok(GeneratorFleet { units })
    }

    pub fn units(&self) -> &[SystemParams] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_capacity(&self) -> f64 {
        self.units.iter().map(|u| u.capacity).sum()
    }

    /// Combined capacity of the units above layer n.
    fn prior_capacity(&self, n: usize) -> f64 {
        self.units[..n].iter().map(|u| u.capacity).sum()
    }
}

/// The demand band seen by layer n at one slot; the top band has no cap.
fn slice_slot(slot: &InputSlot, prior: f64, cap: Option<f64>, eta: f64) -> InputSlot {
    let a = (slot.demand - prior).max(0.0);
    let h = (slot.heat - eta * prior).max(0.0);
    match cap {
        Some(l) => InputSlot::new(a.min(l), h.min(eta * l), slot.price),
        None => InputSlot::new(a, h, slot.price),
    }
}

/// Per-layer traces plus the residual above the fleet's capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredTrace {
    pub layers: Vec<Trace>,
    pub top: Trace,
}

/// Bottom-up slicing; layer sums plus the top reconstruct the input.
pub fn layer_demand(trace: &Trace, fleet: &GeneratorFleet) -> LayeredTrace {
    let eta = fleet.units[0].heat_efficiency;
    let layers = fleet
        .units
        .iter()
        .enumerate()
        .map(|(n, unit)| {
            let prior = fleet.prior_capacity(n);
            let slots = trace
                .slots
                .iter()
                .map(|s| slice_slot(s, prior, Some(unit.capacity), eta))
                .collect();
            Trace { slots, slot_hours: trace.slot_hours }
        })
        .collect();
    let total = fleet.total_capacity();
    let top_slots = trace.slots.iter().map(|s| slice_slot(s, total, None, eta)).collect();
    LayeredTrace { layers, top: Trace { slots: top_slots, slot_hours: trace.slot_hours } }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FleetMode {
    Offline,
    Online(PolicyKind),
}

/// Aggregate result: one schedule per layer plus the external cost of the
/// residual band.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetSchedule {
    pub per_layer: Vec<Schedule>,
    pub top_cost: f64,
    pub total_cost: f64,
    pub startup_count: usize,
}

/// Schedules every layer independently. Online modes slice one prediction
/// window of the aggregate trace per slot, so all layers see the same
/// forecast errors; each layer runs its own threshold and guard.
pub fn schedule_fleet(
    trace: &Trace,
    fleet: &GeneratorFleet,
    mode: FleetMode,
    w: usize,
    noise: &NoiseModel,
) -> FleetSchedule {
    let layered = layer_demand(trace, fleet);
    let per_layer: Vec<Schedule> = match mode {
        FleetMode::Offline => fleet
            .units
            .iter()
            .zip(&layered.layers)
            .map(|(unit, layer)| offline_optimal(layer, unit))
            .collect(),
        FleetMode::Online(kind) => {
            let policies: Vec<Policy> =
                fleet.units.iter().map(|u| Policy::prepare(kind, w, u)).collect();
            let mut states: Vec<PolicyState> =
                fleet.units.iter().map(PolicyState::new).collect();
            let mut statuses: Vec<Vec<bool>> = vec![Vec::with_capacity(trace.len()); fleet.len()];
            let eta = fleet.units[0].heat_efficiency;
            for t in 1..=trace.len() {
                let total_window = noisy_window(trace, t, policies[0].window(), noise);
                for (n, unit) in fleet.units.iter().enumerate() {
                    let prior = fleet.prior_capacity(n);
                    let window = PredictionWindow {
                        slots: total_window
                            .slots
                            .iter()
                            .map(|s| slice_slot(s, prior, Some(unit.capacity), eta))
                            .collect(),
                        w: total_window.w,
                    };
                    let on = policies[n].decide(&states[n], &window, unit);
                    states[n].commit(on, &layered.layers[n].slots[t - 1], unit);
                    statuses[n].push(on);
                }
            }
            fleet
                .units
                .iter()
                .zip(&layered.layers)
                .zip(statuses)
                .map(|((unit, layer), status)| {
                    total_cost(&status, layer, unit).expect("one status per slot")
                })
                .collect()
        }
    };
    let top = total_cost(&vec![false; trace.len()], &layered.top, &fleet.units[0])
        .expect("one status per slot");
    let total = per_layer.iter().map(|s| s.total_cost).sum::<f64>() + top.total_cost;
    let startups = per_layer.iter().map(|s| s.startup_count).sum();
    FleetSchedule {
        per_layer,
        top_cost: top.total_cost,
        total_cost: total,
        startup_count: startups,
    }
}

/// Fleet-wide guarantee: the worst per-unit bound, attained by the largest
/// unit since slimmer capacity only improves the per-layer ratio.
pub fn cr_fleet(fleet: &GeneratorFleet, w: u32) -> f64 {
    fleet
        .units
        .iter()
        .map(|u| cr_chasepp(w, u))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dispatch_given_status;
    use crate::online::NoiseKind;
    use crate::ratio::realize_delta_trace;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shared_small() -> SystemParams {
        SystemParams {
            startup_cost: 10.0,
            running_cost: 1.0,
            output_cost: 0.1,
            capacity: 0.0,
            heat_efficiency: 1.0,
            gas_price: 0.1,
            price_min: 0.0,
            price_max: 2.0,
        }
    }

    fn base_params() -> SystemParams {
        SystemParams {
            startup_cost: 100.0,
            running_cost: 10.0,
            output_cost: 1.0,
            capacity: 100.0,
            heat_efficiency: 1.0,
            gas_price: 0.5,
            price_min: 0.0,
            price_max: 2.0,
        }
    }

    #[test]
    fn construction_sorts_and_rejects_empty() {
        let fleet = GeneratorFleet::new(shared_small(), &[1.0, 5.0, 3.0]).unwrap();
        let caps: Vec<f64> = fleet.units().iter().map(|u| u.capacity).collect();
        assert_eq!(caps, vec![5.0, 3.0, 1.0]);
        assert_eq!(GeneratorFleet::new(shared_small(), &[]), Err(MultigenError::EmptyFleet));
        // An idle cost no tiny unit can recoup is rejected up front.
        let heavy = SystemParams { running_cost: 10.0, ..shared_small() };
        assert!(matches!(
            GeneratorFleet::new(heavy, &[100.0, 1.0]),
            Err(MultigenError::InvalidUnit { index: 1, .. })
        ));
    }

    #[test]
    fn slicing_matches_hand_examples() {
        let fleet = GeneratorFleet::new(shared_small(), &[5.0, 3.0, 1.0]).unwrap();
        let t7 = Trace::hourly(vec![InputSlot::new(7.0, 7.0, 1.0)]);
        let layered = layer_demand(&t7, &fleet);
        let a: Vec<f64> = layered.layers.iter().map(|l| l.slots[0].demand).collect();
        assert_eq!(a, vec![5.0, 2.0, 0.0]);
        assert_eq!(layered.top.slots[0].demand, 0.0);

        let t95 = Trace::hourly(vec![InputSlot::new(9.5, 9.5, 1.0)]);
        let layered = layer_demand(&t95, &fleet);
        let a: Vec<f64> = layered.layers.iter().map(|l| l.slots[0].demand).collect();
        assert_eq!(a, vec![5.0, 3.0, 1.0]);
        assert_eq!(layered.top.slots[0].demand, 0.5);
        assert_eq!(layered.top.slots[0].heat, 0.5);

        let idle = Trace::hourly(vec![InputSlot::new(0.0, 0.0, 1.0)]);
        let layered = layer_demand(&idle, &fleet);
        assert!(layered.layers.iter().all(|l| l.slots[0].demand == 0.0));
    }

    #[test]
    fn single_unit_fleet_matches_the_single_generator_pipeline() {
        let p = base_params();
        let fleet = GeneratorFleet::new(p, &[p.capacity]).unwrap();
        let mut deltas = vec![65.0, 65.0, 140.0];
        deltas.extend([-10.0; 8]);
        deltas.extend([65.0, 65.0]);
        let trace = realize_delta_trace(&deltas, &p).unwrap();

        let offline = schedule_fleet(&trace, &fleet, FleetMode::Offline, 0, &NoiseModel::none());
        let single = offline_optimal(&trace, &p);
        assert_eq!(offline.per_layer[0].statuses(), single.statuses());
        assert_eq!(offline.total_cost, single.total_cost);
        assert_eq!(offline.top_cost, 0.0);

        let noise = NoiseModel::none();
        let online = schedule_fleet(
            &trace,
            &fleet,
            FleetMode::Online(PolicyKind::ChasePp),
            3,
            &noise,
        );
        let policy = Policy::prepare(PolicyKind::ChasePp, 3, &p);
        let direct = crate::online::run_online(&policy, &trace, &noise, &p);
        assert_eq!(online.per_layer[0].statuses(), direct.statuses());
        assert_eq!(online.total_cost, direct.total_cost);
    }

    /// Joint slot cost at a given pair of statuses: the units pool their
    /// capacity, so only the combined cap and the number of running units
    /// matter.
    fn joint_slot_cost(slot: &InputSlot, on: [bool; 2], shared: &SystemParams, caps: [f64; 2]) -> f64 {
        let cap = caps[0] * on[0] as u8 as f64 + caps[1] * on[1] as u8 as f64;
        let pooled = SystemParams { capacity: cap, ..*shared };
        let d = dispatch_given_status(slot, cap > 0.0, &pooled);
        slot.price * d.grid
            + shared.gas_price * d.gas_heat
            + shared.output_cost * d.generator
            + shared.running_cost * (on[0] as u8 + on[1] as u8) as f64
    }

    /// Exhaustive minimum over all joint on/off sequences of two units.
    fn joint_optimal(trace: &Trace, shared: &SystemParams, caps: [f64; 2]) -> f64 {
        let n = trace.len();
        let mut best = f64::INFINITY;
        for mask1 in 0u32..1 << n {
            for mask2 in 0u32..1 << n {
                let mut cost = 0.0;
                let mut prev = [false, false];
                for (t, slot) in trace.slots.iter().enumerate() {
                    let on = [mask1 & (1 << t) != 0, mask2 & (1 << t) != 0];
                    for k in 0..2 {
                        if on[k] && !prev[k] {
                            cost += shared.startup_cost;
                        }
                    }
                    cost += joint_slot_cost(slot, on, shared, caps);
                    prev = on;
                }
                best = best.min(cost);
            }
        }
        best
    }

    #[test]
    fn layered_offline_equals_joint_brute_force() {
        let shared = SystemParams { capacity: 0.0, ..base_params() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..30 {
            let caps = if case % 3 == 0 { [60.0, 60.0] } else { [80.0, 40.0] };
            let fleet = GeneratorFleet::new(shared, &caps).unwrap();
            let n = 4 + case % 4;
            let total = caps[0] + caps[1];
            let slots: Vec<InputSlot> = (0..n)
                .map(|_| {
                    InputSlot::new(
                        rng.gen::<f64>() * total * 1.3,
                        rng.gen::<f64>() * total * 1.3,
                        rng.gen::<f64>() * 2.0,
                    )
                })
                .collect();
            let trace = Trace::hourly(slots);
            let layered =
                schedule_fleet(&trace, &fleet, FleetMode::Offline, 0, &NoiseModel::none());
            let joint = joint_optimal(&trace, &shared, caps);
            assert!(
                (layered.total_cost - joint).abs() <= 1e-9 * (1.0 + joint),
                "case {case}: layered {} vs joint {}",
                layered.total_cost,
                joint
            );
        }
    }

    #[test]
    fn offline_activation_is_nested_across_layers() {
        let shared = SystemParams { capacity: 0.0, ..base_params() };
        let fleet = GeneratorFleet::new(shared, &[70.0, 50.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let slots: Vec<InputSlot> = (0..40)
                .map(|_| {
                    InputSlot::new(rng.gen::<f64>() * 160.0, rng.gen::<f64>() * 160.0, 2.0)
                })
                .collect();
            let trace = Trace::hourly(slots);
            let sched = schedule_fleet(&trace, &fleet, FleetMode::Offline, 0, &NoiseModel::none());
            let top = sched.per_layer[0].statuses();
            let low = sched.per_layer[1].statuses();
            for (t, (&a, &b)) in top.iter().zip(low.iter()).enumerate() {
                assert!(a || !b, "layer 2 on without layer 1 at t={t}");
            }
        }
    }

    #[test]
    fn fleet_bound_is_set_by_the_largest_unit() {
        let shared = SystemParams { capacity: 0.0, ..base_params() };
        let same = GeneratorFleet::new(shared, &[100.0, 100.0]).unwrap();
        assert_eq!(cr_fleet(&same, 3), cr_chasepp(3, &same.units()[0]));
        let mixed = GeneratorFleet::new(shared, &[1000.0, 100.0]).unwrap();
        let big_only = GeneratorFleet::new(shared, &[1000.0]).unwrap();
        assert_eq!(cr_fleet(&mixed, 3), cr_fleet(&big_only, 3));
        assert!(cr_fleet(&mixed, 3) > cr_chasepp(3, &mixed.units()[1]));
    }

    #[test]
    fn online_fleet_with_noise_is_reproducible() {
        let shared = SystemParams { capacity: 0.0, ..base_params() };
        let fleet = GeneratorFleet::new(shared, &[70.0, 50.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let slots: Vec<InputSlot> = (0..60)
            .map(|_| InputSlot::new(rng.gen::<f64>() * 150.0, rng.gen::<f64>() * 150.0, 2.0))
            .collect();
        let trace = Trace::hourly(slots);
        let noise = NoiseModel {
            kind: NoiseKind::Gaussian,
            wind_std_frac: 0.3,
            heat_std_frac: 0.3,
            hyperbolic: Default::default(),
            seed: 17,
            wind_capacity: 120.0,
        };
        let mode = FleetMode::Online(PolicyKind::ChasePpPlus);
        let a = schedule_fleet(&trace, &fleet, mode, 4, &noise);
        let b = schedule_fleet(&trace, &fleet, mode, 4, &noise);
        assert_eq!(a.total_cost, b.total_cost);
        assert_eq!(a.per_layer[0].statuses(), b.per_layer[0].statuses());
    }

    proptest! {
        #[test]
        fn layers_reconstruct_the_input(
            raw in proptest::collection::vec((0.0..200.0f64, 0.0..200.0f64), 1..30),
        ) {
            let fleet = GeneratorFleet::new(shared_small(), &[5.0, 3.0, 1.0]).unwrap();
            let slots: Vec<InputSlot> =
                raw.iter().map(|&(a, h)| InputSlot::new(a, h, 1.0)).collect();
            let trace = Trace::hourly(slots);
            let layered = layer_demand(&trace, &fleet);
            for (i, slot) in trace.slots.iter().enumerate() {
                let a: f64 = layered.layers.iter().map(|l| l.slots[i].demand).sum::<f64>()
                    + layered.top.slots[i].demand;
                let h: f64 = layered.layers.iter().map(|l| l.slots[i].heat).sum::<f64>()
                    + layered.top.slots[i].heat;
                prop_assert!((a - slot.demand).abs() <= 1e-9);
                prop_assert!((h - slot.heat).abs() <= 1e-9);
                for (n, layer) in layered.layers.iter().enumerate() {
                    let unit = &fleet.units()[n];
                    prop_assert!(layer.slots[i].demand <= unit.capacity + 1e-12);
                    prop_assert!(
                        layer.slots[i].heat
                            <= unit.heat_efficiency * unit.capacity + 1e-12
                    );
                }
            }
        }
    }
}
