//! The per-slot benefit process and the exact offline optimum.
//!
//! `delta` measures how much one slot saves when the generator is on. Its
//! running sum, clipped to stay inside `[-startup_cost, 0]`, tells the
//! offline solution when a startup pays for itself: every maximal stretch in
//! which the clipped process runs from the floor up to zero is served with
//! the generator on, everything else with it off.
//!
//! Time indices are 1-based throughout this module; `capped[0]` is the state
//! before the first slot.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{slot_cost, total_cost, InputSlot, Schedule, SystemParams, Trace};

/// Hard cap on the exhaustive-enumeration horizon.
pub const MAX_ENUMERATION_HORIZON: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentError {
    #[error("horizon {len} exceeds enumeration limit {max}")]
    HorizonTooLarge { len: usize, max: usize },
}

/// One-slot saving of running the generator: cost(off) minus cost(on).
pub fn delta(slot: &InputSlot, params: &SystemParams) -> f64 {
    slot_cost(slot, false, params) - slot_cost(slot, true, params)
}

/// One step of the clipped running sum. The clip assigns the boundary value
/// exactly, so later boundary tests can compare against it.
pub fn advance_capped(prev: f64, delta: f64, startup_cost: f64) -> f64 {
    (prev + delta).clamp(-startup_cost, 0.0)
}

/// The benefit series of a trace together with its clipped running sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSeries {
    /// delta[t-1] is the slot-t saving, t = 1..T.
    pub delta: Vec<f64>,
    /// capped[t] is the clipped sum after slot t; capped[0] = -startup_cost.
    pub capped: Vec<f64>,
}

impl DeltaSeries {
    /// Builds the clipped running sum from raw per-slot savings.
    pub fn from_deltas(delta: Vec<f64>, startup_cost: f64) -> DeltaSeries {
        let mut capped = Vec::with_capacity(delta.len() + 1);
        capped.push(-startup_cost);
        let mut cur = -startup_cost;
        for &d in &delta {
            cur = advance_capped(cur, d, startup_cost);
            capped.push(cur);
        }
        DeltaSeries { delta, capped }
    }

    pub fn horizon(&self) -> usize {
        self.delta.len()
    }

    /// The startup cost the series was built with.
    pub fn startup_cost(&self) -> f64 {
        -self.capped[0]
    }

    /// Uncapped cumulative saving over slots t..=tau (1-based, inclusive).
    /// Additive: `window_sum(t, tau) = window_sum(t, m) + window_sum(m+1, tau)`.
    pub fn window_sum(&self, t: usize, tau: usize) -> f64 {
        self.delta[t - 1..tau].iter().sum()
    }
}

/// Per-slot savings and their clipped sum for a whole trace.
pub fn capped_series(trace: &Trace, params: &SystemParams) -> DeltaSeries {
    let deltas = trace.slots.iter().map(|s| delta(s, params)).collect();
    DeltaSeries::from_deltas(deltas, params.startup_cost)
}

/// Which side of the plan a segment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    /// Leading stretch before the first completed run-up; generator off.
    Start,
    /// The clipped sum ran from the floor to zero; generator on.
    On,
    /// The clipped sum ran from zero back to the floor; generator off.
    Off,
    /// Trailing stretch after the last switch point; generator off.
    End,
}

/// A maximal stretch of slots between two consecutive switch points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalSegment {
    /// First slot of the segment (1-based, inclusive).
    pub start: usize,
    /// Last slot of the segment (inclusive).
    pub end: usize,
    pub kind: SegmentKind,
    /// First slot inside the segment at which the clipped sum reaches the
    /// arriving boundary; absent when the segment contains no completed
    /// transit.
    pub transit_end: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Boundary {
    Floor,
    Zero,
    Interior,
}

/// Splits the horizon at the switch points of the clipped sum.
///
/// A switch point is the last index at a boundary before the process crosses
/// to the opposite boundary. Excursions that return to the boundary they
/// left are part of the dwell. A trailing departure from zero that never
/// completes still closes the on-segment at its departure index; a trailing
/// dwell at zero that reaches the horizon stays an on-segment.
pub fn decompose(series: &DeltaSeries) -> Vec<CriticalSegment> {
    let horizon = series.horizon();
    let startup = series.startup_cost();
    let tol = 1e-9 * startup;
    let classify = |x: f64| {
        if (x + startup).abs() <= tol {
            Boundary::Floor
        } else if x.abs() <= tol {
            Boundary::Zero
        } else {
            Boundary::Interior
        }
    };

    // Completed transits as (departure index, arrival index).
    let mut transits: Vec<(usize, usize)> = Vec::new();
    let mut dwell = Boundary::Floor;
    let mut last_at = 0usize;
    for t in 1..=horizon {
        let b = classify(series.capped[t]);
        if b == Boundary::Interior {
            continue;
        }
        if b == dwell {
            last_at = t;
        } else {
            transits.push((last_at, t));
            dwell = b;
            last_at = t;
        }
    }

    let mut switch_points: Vec<usize> = transits.iter().map(|&(d, _)| d).collect();
    let closed_by_tail = dwell == Boundary::Zero && last_at < horizon;
    if closed_by_tail {
        switch_points.push(last_at);
    }

    let mut segments = Vec::new();
    if switch_points.is_empty() {
        if horizon >= 1 {
            segments.push(CriticalSegment {
                start: 1,
                end: horizon,
                kind: SegmentKind::Start,
                transit_end: None,
            });
        }
        return segments;
    }

    if switch_points[0] >= 1 {
        segments.push(CriticalSegment {
            start: 1,
            end: switch_points[0],
            kind: SegmentKind::Start,
            transit_end: None,
        });
    }
    for m in 1..switch_points.len() {
        let end = switch_points[m];
        let kind = match classify(series.capped[end]) {
            Boundary::Zero => SegmentKind::On,
            _ => SegmentKind::Off,
        };
        segments.push(CriticalSegment {
            start: switch_points[m - 1] + 1,
            end,
            kind,
            transit_end: Some(transits[m - 1].1),
        });
    }
    let last = *switch_points.last().unwrap();
    if last < horizon {
        let (kind, transit_end) = if closed_by_tail {
            (SegmentKind::End, None)
        } else if dwell == Boundary::Zero {
            (SegmentKind::On, Some(transits.last().unwrap().1))
        } else {
            (SegmentKind::End, Some(transits.last().unwrap().1))
        };
        segments.push(CriticalSegment {
            start: last + 1,
            end: horizon,
            kind,
            transit_end,
        });
    }
    segments
}

/// The exact offline optimum: on during on-segments, off elsewhere.
pub fn offline_optimal(trace: &Trace, params: &SystemParams) -> Schedule {
    let series = capped_series(trace, params);
    let segments = decompose(&series);
    let mut statuses = vec![false; trace.len()];
    for seg in &segments {
        if seg.kind == SegmentKind::On {
            for s in statuses.iter_mut().take(seg.end).skip(seg.start - 1) {
                *s = true;
            }
        }
    }
    total_cost(&statuses, trace, params).expect("statuses built to trace length")
}

/// Minimum-cost plan over a slice of slots by dynamic programming on the
/// on/off state. Startup is charged on every off-to-on step, including the
/// first slot when `start_on` is false. No terminal value. Cost ties prefer
/// the on state.
pub fn dp_plan(slots: &[InputSlot], params: &SystemParams, start_on: bool) -> (f64, Vec<bool>) {
    let n = slots.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    // cost_to_go[y] after deciding slots t.., entering with status y.
    let mut go_off = 0.0f64;
    let mut go_on = 0.0f64;
    // choice[t][y]: status picked at slot t when entering with status y.
    let mut choice = vec![(false, false); n];
    for t in (0..n).rev() {
        let off = slot_cost(&slots[t], false, params);
        let on = slot_cost(&slots[t], true, params);
        let from_off_stay = off + go_off;
        let from_off_start = params.startup_cost + on + go_on;
        let from_on_stop = off + go_off;
        let from_on_stay = on + go_on;
        let pick_on_from_off = from_off_start <= from_off_stay;
        let pick_on_from_on = from_on_stay <= from_on_stop;
        choice[t] = (pick_on_from_off, pick_on_from_on);
        let new_off = if pick_on_from_off { from_off_start } else { from_off_stay };
        let new_on = if pick_on_from_on { from_on_stay } else { from_on_stop };
        go_off = new_off;
        go_on = new_on;
    }
    let total = if start_on { go_on } else { go_off };
    let mut plan = Vec::with_capacity(n);
    let mut state = start_on;
    for c in choice.iter() {
        state = if state { c.1 } else { c.0 };
        plan.push(state);
    }
    (total, plan)
}

/// Exact optimum via the on/off dynamic program. Works for any horizon.
pub fn dp_optimal(trace: &Trace, params: &SystemParams) -> Schedule {
    let (_, plan) = dp_plan(&trace.slots, params, false);
    total_cost(&plan, trace, params).expect("plan built to trace length")
}

/// Exhaustive minimum over all on/off sequences. Exponential; guarded.
pub fn brute_force_optimal(trace: &Trace, params: &SystemParams) -> Result<Schedule, SegmentError> {
    let n = trace.len();
    if n > MAX_ENUMERATION_HORIZON {
        return Err(SegmentError::HorizonTooLarge { len: n, max: MAX_ENUMERATION_HORIZON });
    }
    let mut best: Option<Schedule> = None;
    let mut statuses = vec![false; n];
    for mask in 0u32..(1u32 << n) {
        for (i, s) in statuses.iter_mut().enumerate() {
            *s = mask & (1 << i) != 0;
        }
        let sched = total_cost(&statuses, trace, params).expect("lengths match");
        if best.as_ref().map_or(true, |b| sched.total_cost < b.total_cost) {
            best = Some(sched);
        }
    }
    Ok(best.expect("horizon is at least 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_params;
    use proptest::prelude::*;

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
    fn delta_matches_hand_values() {
        let p = base_params();
        assert_eq!(delta(&InputSlot::new(50.0, 50.0, 2.0), &p), 65.0);
        assert_eq!(delta(&InputSlot::new(0.0, 0.0, 2.0), &p), -p.running_cost);
        let steepest = InputSlot::new(p.capacity, p.heat_efficiency * p.capacity, p.price_max);
        assert!((delta(&steepest, &p) - p.max_slot_benefit()).abs() < 1e-12);
    }

    #[test]
    fn capped_series_clips_at_zero() {
        let s = DeltaSeries::from_deltas(vec![65.0, 65.0], 100.0);
        assert_eq!(s.capped, vec![-100.0, -35.0, 0.0]);
    }

    #[test]
    fn capped_series_clips_at_floor() {
        let s = DeltaSeries::from_deltas(vec![65.0, 65.0, -10.0, -10.0, -90.0, -10.0], 100.0);
        assert_eq!(s.capped, vec![-100.0, -35.0, 0.0, -10.0, -20.0, -100.0, -100.0]);
    }

    #[test]
    fn capped_series_stays_at_floor_without_demand() {
        let p = base_params();
        let trace = Trace::hourly(vec![InputSlot::new(0.0, 0.0, 1.0); 4]);
        let s = capped_series(&trace, &p);
        assert!(s.capped.iter().all(|&x| x == -100.0));
    }

    #[test]
    fn window_sum_is_additive() {
        let s = DeltaSeries::from_deltas(vec![1.0, -2.0, 3.0, -4.0, 5.0], 10.0);
        let whole = s.window_sum(1, 5);
        for m in 1..5 {
            let split = s.window_sum(1, m) + s.window_sum(m + 1, 5);
            assert!((whole - split).abs() < 1e-12);
        }
    }

    #[test]
    fn decompose_run_up_with_dwell_is_one_on_segment() {
        let s = DeltaSeries::from_deltas(vec![65.0, 35.0, 0.0], 100.0);
        assert_eq!(s.capped, vec![-100.0, -35.0, 0.0, 0.0]);
        let segs = decompose(&s);
        assert_eq!(
            segs,
            vec![CriticalSegment { start: 1, end: 3, kind: SegmentKind::On, transit_end: Some(2) }]
        );
    }

    #[test]
    fn decompose_all_floor_is_one_start_segment() {
        let s = DeltaSeries::from_deltas(vec![-10.0, 5.0, -5.0], 100.0);
        let segs = decompose(&s);
        assert_eq!(
            segs,
            vec![CriticalSegment { start: 1, end: 3, kind: SegmentKind::Start, transit_end: None }]
        );
    }

    #[test]
    fn decompose_trailing_departure_from_zero_closes_the_on_segment() {
        let s = DeltaSeries::from_deltas(vec![65.0, 65.0, -10.0, -10.0], 100.0);
        let segs = decompose(&s);
        assert_eq!(
            segs,
            vec![
                CriticalSegment { start: 1, end: 2, kind: SegmentKind::On, transit_end: Some(2) },
                CriticalSegment { start: 3, end: 4, kind: SegmentKind::End, transit_end: None },
            ]
        );
    }

    #[test]
    fn decompose_round_trip_counts_balance() {
        // Floor dwell, up, zero dwell with excursion, down, floor dwell with
        // excursion, up again, trailing interior tail.
        let caps = vec![
            -100.0, -100.0, -50.0, 0.0, 0.0, -50.0, -100.0, -30.0, -100.0, -10.0, 0.0, -20.0,
        ];
        let mut deltas = Vec::new();
        for i in 1..caps.len() {
            deltas.push(caps[i] - caps[i - 1]);
        }
        let s = DeltaSeries::from_deltas(deltas, 100.0);
        assert_eq!(s.capped, caps);
        let segs = decompose(&s);
        assert_eq!(
            segs,
            vec![
                CriticalSegment { start: 1, end: 1, kind: SegmentKind::Start, transit_end: None },
                CriticalSegment { start: 2, end: 4, kind: SegmentKind::On, transit_end: Some(3) },
                CriticalSegment { start: 5, end: 8, kind: SegmentKind::Off, transit_end: Some(6) },
                CriticalSegment { start: 9, end: 10, kind: SegmentKind::On, transit_end: Some(10) },
                CriticalSegment { start: 11, end: 11, kind: SegmentKind::End, transit_end: None },
            ]
        );
        let ups = segs.iter().filter(|s| s.kind == SegmentKind::On).count();
        let downs = segs.iter().filter(|s| s.kind == SegmentKind::Off).count();
        let ends = segs.iter().filter(|s| s.kind == SegmentKind::End).count();
        assert_eq!(ups, downs + ends);
    }

    #[test]
    fn offline_matches_hand_examples() {
        let p = base_params();
        let slot = InputSlot::new(50.0, 50.0, 2.0);

        let four = Trace::hourly(vec![slot; 4]);
        let s = offline_optimal(&four, &p);
        assert_eq!(s.statuses(), vec![true; 4]);
        assert_eq!(s.total_cost, 340.0);

        let idle = Trace::hourly(vec![InputSlot::new(0.0, 0.0, 1.0); 4]);
        let s = offline_optimal(&idle, &p);
        assert_eq!(s.statuses(), vec![false; 4]);
        assert_eq!(s.total_cost, 0.0);

        let one = Trace::hourly(vec![slot]);
        let s = offline_optimal(&one, &p);
        assert_eq!(s.statuses(), vec![false]);
        assert_eq!(s.total_cost, 125.0);
    }

    #[test]
    fn brute_force_agrees_on_examples() {
        let p = base_params();
        let slot = InputSlot::new(50.0, 50.0, 2.0);
        let four = Trace::hourly(vec![slot; 4]);
        assert_eq!(brute_force_optimal(&four, &p).unwrap().total_cost, 340.0);
        let idle = Trace::hourly(vec![InputSlot::new(0.0, 0.0, 1.0); 2]);
        assert_eq!(brute_force_optimal(&idle, &p).unwrap().total_cost, 0.0);
    }

    #[test]
    fn brute_force_rejects_long_horizons() {
        let p = base_params();
        let trace = Trace::hourly(vec![InputSlot::new(0.0, 0.0, 1.0); 21]);
        assert_eq!(
            brute_force_optimal(&trace, &p),
            Err(SegmentError::HorizonTooLarge { len: 21, max: 20 })
        );
    }

    /// A compact pool of valid parameter sets exercising distinct regimes.
    fn param_pool() -> Vec<SystemParams> {
        let base = base_params();
        let mut pool = vec![
            base,
            SystemParams { startup_cost: 10.0, ..base },
            SystemParams { startup_cost: 400.0, ..base },
            SystemParams { heat_efficiency: 0.0, gas_price: 0.7, ..base },
            SystemParams { running_cost: 0.0, ..base },
            SystemParams { output_cost: 2.4, price_max: 2.5, ..base },
        ];
        pool.retain(|p| validate_params(p).is_ok());
        assert_eq!(pool.len(), 6);
        pool
    }

    proptest! {
        #[test]
        fn capped_stays_clipped(
            deltas in proptest::collection::vec(-200.0..200.0f64, 1..40),
            beta in 1.0..300.0f64,
        ) {
            let s = DeltaSeries::from_deltas(deltas, beta);
            prop_assert!(s.capped.iter().all(|&x| (-beta..=0.0).contains(&x)));
        }

        #[test]
        fn segments_partition_and_alternate(
            deltas in proptest::collection::vec(-150.0..150.0f64, 1..60),
            beta in 1.0..300.0f64,
        ) {
            let horizon = deltas.len();
            let s = DeltaSeries::from_deltas(deltas, beta);
            let segs = decompose(&s);
            prop_assert!(!segs.is_empty());
            prop_assert_eq!(segs[0].start, 1);
            prop_assert_eq!(segs.last().unwrap().end, horizon);
            for w in segs.windows(2) {
                prop_assert_eq!(w[1].start, w[0].end + 1);
            }
            let core: Vec<_> = segs
                .iter()
                .filter(|s| matches!(s.kind, SegmentKind::On | SegmentKind::Off))
                .collect();
            for w in core.windows(2) {
                prop_assert!(w[0].kind != w[1].kind);
            }
            for seg in &segs {
                prop_assert!(seg.start <= seg.end);
                if let Some(te) = seg.transit_end {
                    prop_assert!(seg.start <= te && te <= seg.end);
                }
            }
        }

        #[test]
        fn offline_equals_brute_force(
            pool_idx in 0..6usize,
            raw in proptest::collection::vec((0.0..1.5f64, 0.0..1.5f64, 0.0..1.0f64), 1..9),
        ) {
            let p = param_pool()[pool_idx];
            let slots: Vec<InputSlot> = raw
                .iter()
                .map(|&(af, hf, pf)| InputSlot::new(
                    af * p.capacity,
                    hf * p.capacity,
                    p.price_min + pf * (p.price_max - p.price_min),
                ))
                .collect();
            let trace = Trace::hourly(slots);
            let opt = offline_optimal(&trace, &p);
            let brute = brute_force_optimal(&trace, &p).unwrap();
            let dp = dp_optimal(&trace, &p);
            let scale = 1.0 + brute.total_cost.abs();
            prop_assert!((opt.total_cost - brute.total_cost).abs() <= 1e-9 * scale,
                "offline {} vs brute {}", opt.total_cost, brute.total_cost);
            prop_assert!((dp.total_cost - brute.total_cost).abs() <= 1e-9 * scale);
        }
    }
}
