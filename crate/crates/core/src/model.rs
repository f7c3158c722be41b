//! Single-generator cost model.
//!
//! A time slot presents a net electricity demand `a` (kW), a heat demand `h`
//! (kW thermal) and a spot price `p` ($/kWh). The controller decides whether
//! the local co-generation unit runs during the slot; its output offsets grid
//! purchases and, scaled by the heat efficiency, gas heating. All formulas
//! work in per-slot quantities, so a 1 kW demand over one slot is 1 kWh.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Economic and physical parameters of one generator plus its market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// One-time cost of switching the generator on ($).
    pub startup_cost: f64,
    /// Sunk cost of keeping the generator on for one slot ($/slot).
    pub running_cost: f64,
    /// Incremental generation cost ($/kWh).
    pub output_cost: f64,
    /// Maximum generator output over one slot (kW).
    pub capacity: f64,
    /// Heat recovered per unit of electricity generated.
    pub heat_efficiency: f64,
    /// Price of externally produced heat ($/kWh thermal).
    pub gas_price: f64,
    /// Lower bound of the electricity spot price ($/kWh).
    pub price_min: f64,
    /// Upper bound of the electricity spot price ($/kWh).
    pub price_max: f64,
}

impl SystemParams {
    /// Highest cost of serving one kWh of demand and its co-generated heat
    /// externally: `price_max + heat_efficiency * gas_price`.
    pub fn max_external_rate(&self) -> f64 {
        self.price_max + self.heat_efficiency * self.gas_price
    }

    /// Largest one-slot saving the generator can produce over external
    /// supply: `capacity * (max_external_rate - output_cost) - running_cost`.
    pub fn max_slot_benefit(&self) -> f64 {
        self.capacity * (self.max_external_rate() - self.output_cost) - self.running_cost
    }

    /// Absolute tolerance for feasibility checks, scaled by capacity.
    pub fn feasibility_tol(&self) -> f64 {
        1e-9 * self.capacity.max(1.0)
    }

    /// Same generator economics with a different capacity.
    pub fn with_capacity(&self, capacity: f64) -> SystemParams {
        SystemParams { capacity, ..*self }
    }
}

/// Joint input of one slot: net electricity demand, heat demand, spot price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSlot {
    /// Net electricity demand (kW), non-negative.
    pub demand: f64,
    /// Heat demand (kW thermal), non-negative.
    pub heat: f64,
    /// Electricity spot price ($/kWh).
    pub price: f64,
}

impl InputSlot {
    pub fn new(demand: f64, heat: f64, price: f64) -> InputSlot {
        InputSlot { demand, heat, price }
    }
}

/// An input sequence over the whole horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub slots: Vec<InputSlot>,
    /// Duration of one slot in hours. A scale factor for trace preparation
    /// only; all cost formulas already work in per-slot quantities.
    pub slot_hours: f64,
}

impl Trace {
    /// Trace with one-hour slots.
    pub fn hourly(slots: Vec<InputSlot>) -> Trace {
        Trace { slots, slot_hours: 1.0 }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Cost-minimal within-slot operation for a fixed on/off status.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispatchSlot {
    /// Generator status during the slot.
    pub on: bool,
    /// Generator output (kW).
    pub generator: f64,
    /// Grid purchase (kW).
    pub grid: f64,
    /// Externally produced heat (kW thermal).
    pub gas_heat: f64,
}

/// A full horizon plan with its cost accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub dispatch: Vec<DispatchSlot>,
    /// Total of per-slot costs plus startup costs, with the generator off
    /// before the first slot.
    pub total_cost: f64,
    /// Number of off-to-on transitions.
    pub startup_count: usize,
}

impl Schedule {
    /// The on/off sequence of this plan.
    pub fn statuses(&self) -> Vec<bool> {
        self.dispatch.iter().map(|d| d.on).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("parameter assumption violated: {0}")]
    AssumptionViolated(&'static str),
    #[error("status sequence has length {got}, trace has length {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Checks sign constraints and the two economic assumptions: heat from gas
/// is never more expensive than heat from extra generation
/// (`output_cost >= heat_efficiency * gas_price`), and co-generation at full
/// load beats the worst-case external rate
/// (`output_cost + running_cost / capacity <= max_external_rate`).
pub fn validate_params(params: &SystemParams) -> Result<(), ModelError> {
    let p = params;
    if !(p.startup_cost >= 0.0) {
        return Err(ModelError::AssumptionViolated("startup_cost >= 0"));
    }
    if !(p.running_cost >= 0.0) {
        return Err(ModelError::AssumptionViolated("running_cost >= 0"));
    }
    if !(p.output_cost >= 0.0) {
        return Err(ModelError::AssumptionViolated("output_cost >= 0"));
    }
    if !(p.capacity > 0.0) {
        return Err(ModelError::AssumptionViolated("capacity > 0"));
    }
    if !(p.heat_efficiency >= 0.0) {
        return Err(ModelError::AssumptionViolated("heat_efficiency >= 0"));
    }
    if !(p.gas_price >= 0.0) {
        return Err(ModelError::AssumptionViolated("gas_price >= 0"));
    }
    if !(0.0 <= p.price_min && p.price_min <= p.price_max) {
        return Err(ModelError::AssumptionViolated("0 <= price_min <= price_max"));
    }
    if !(p.output_cost >= p.heat_efficiency * p.gas_price) {
        return Err(ModelError::AssumptionViolated(
            "output_cost >= heat_efficiency * gas_price",
        ));
    }
    if !(p.output_cost + p.running_cost / p.capacity <= p.max_external_rate()) {
        return Err(ModelError::AssumptionViolated(
            "output_cost + running_cost / capacity <= price_max + heat_efficiency * gas_price",
        ));
    }
    Ok(())
}

/// Cost-minimal dispatch of one slot for a fixed status.
///
/// The generator output is set by a three-case comparison of the price
/// against the incremental cost; grid and gas then cover the remainders.
/// With the generator off every case collapses to zero output.
pub fn dispatch_given_status(slot: &InputSlot, on: bool, params: &SystemParams) -> DispatchSlot {
    let cap = if on { params.capacity } else { 0.0 };
    let u = if slot.price + params.heat_efficiency * params.gas_price <= params.output_cost {
        // Even with co-generated heat credited, generation loses money.
        0.0
    } else if slot.price < params.output_cost {
        // Worth running only for the heat credit; the middle case requires
        // heat_efficiency > 0, so the division is safe.
        (slot.heat / params.heat_efficiency).min(slot.demand).min(cap)
    } else {
        slot.demand.min(cap)
    };
    DispatchSlot {
        on,
        generator: u,
        grid: (slot.demand - u).max(0.0),
        gas_heat: (slot.heat - params.heat_efficiency * u).max(0.0),
    }
}

/// Per-slot operating cost for a fixed status:
/// `p*grid + gas_price*gas_heat + output_cost*generator + running_cost*on`.
pub fn slot_cost(slot: &InputSlot, on: bool, params: &SystemParams) -> f64 {
    let d = dispatch_given_status(slot, on, params);
    slot.price * d.grid
        + params.gas_price * d.gas_heat
        + params.output_cost * d.generator
        + params.running_cost * if on { 1.0 } else { 0.0 }
}

/// Evaluates a status sequence over a trace: per-slot costs plus one startup
/// cost for every off-to-on transition, starting from off.
pub fn total_cost(
    statuses: &[bool],
    trace: &Trace,
    params: &SystemParams,
) -> Result<Schedule, ModelError> {
    if statuses.len() != trace.len() {
        return Err(ModelError::LengthMismatch {
            expected: trace.len(),
            got: statuses.len(),
        });
    }
    let mut dispatch = Vec::with_capacity(trace.len());
    let mut cost = 0.0;
    let mut startups = 0;
    let mut prev = false;
    for (slot, &on) in trace.slots.iter().zip(statuses) {
        if on && !prev {
            cost += params.startup_cost;
            startups += 1;
        }
        cost += slot_cost(slot, on, params);
        dispatch.push(dispatch_given_status(slot, on, params));
        prev = on;
    }
    Ok(Schedule {
        dispatch,
        total_cost: cost,
        startup_count: startups,
    })
}
