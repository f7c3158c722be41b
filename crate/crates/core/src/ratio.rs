//! Worst-case performance guarantees and the inputs that attain them.
//!
//! `alpha` compares the generator's full-load rate against the external
//! supply rate; every guarantee in this module is a function of it. The
//! upper bounds come in closed form (`cr_chase`, `cr_chaselk`, `cr_chasepp`
//! and the `_plus` variants); the lower bound is computed by optimizing over
//! a two-level worst-case input. `realize_delta_trace` and `adversary_chase`
//! turn abstract benefit sequences into concrete traces for simulation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{InputSlot, SystemParams, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RatioError {
    #[error("turn-off ratio is undefined for a zero-length window with a positive threshold")]
    DegenerateWindow,
    #[error("turn-on time {s} outside the valid range [1, {max}]")]
    DomainError { s: u64, max: f64 },
    #[error("benefit {delta} not realizable; valid range is [{min}, {max}]")]
    RangeError { delta: f64, min: f64, max: f64 },
}

/// Cost of full-load generation relative to the external supply rate.
pub fn alpha(params: &SystemParams) -> f64 {
    (params.output_cost + params.running_cost / params.capacity) / params.max_external_rate()
}

/// Prediction-free bound: 3 - 2*alpha.
pub fn cr_chase(params: &SystemParams) -> f64 {
    3.0 - 2.0 * alpha(params)
}

/// The lookahead gain of switching w slots early. f(alpha, 0) = alpha and
/// f(1, w) = 1; grows toward 1 as w grows.
pub fn f_chaselk(alpha: f64, w: u32, params: &SystemParams) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let l = params.capacity;
    let co = params.output_cost;
    let cm = params.running_cost;
    let drive = w as f64 * cm * (l * co + cm);
    if drive <= 0.0 {
        return alpha;
    }
    alpha + (1.0 - alpha) / (1.0 + params.startup_cost * (l * co + cm / (1.0 - alpha)) / drive)
}

pub fn cr_chaselk(w: u32, params: &SystemParams) -> f64 {
    3.0 - 2.0 * f_chaselk(alpha(params), w, params)
}

pub fn cr_chaselk_plus(w: u32, params: &SystemParams) -> f64 {
    cr_chaselk(w, params).min(1.0 / alpha(params))
}

/// Worst-case ratio when the threshold rule turns the generator on. The two
/// candidate values of q cover the extremes of the benefit left unseen at
/// the switch; the bound takes the worse one.
pub fn r_on(lambda: f64, w: u32, params: &SystemParams) -> f64 {
    let a = alpha(params);
    if a >= 1.0 {
        return 1.0;
    }
    let beta = params.startup_cost;
    let cm = params.running_cost;
    let rate = params.max_external_rate();
    let shrink = 1.0 - cm / (params.capacity * (rate - params.output_cost));
    let wcm = w as f64 * cm;
    let best = [0.0, wcm]
        .iter()
        .map(|&q| {
            (2.0 * beta - q)
                / (beta + (2.0 * wcm - q + params.output_cost / rate * lambda) * shrink)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    1.0 + (1.0 - a) * best
}

/// Worst-case ratio when the threshold rule keeps the generator off.
pub fn r_off(lambda: f64, w: u32, params: &SystemParams) -> Result<f64, RatioError> {
    if lambda <= 0.0 {
        return Ok(1.0);
    }
    if w == 0 {
        return Err(RatioError::DegenerateWindow);
    }
    let wcm = w as f64 * params.running_cost;
    Ok((wcm + lambda) / (wcm + params.output_cost / params.max_external_rate() * lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub lambda_star: f64,
    pub r_on_at: f64,
    pub r_off_at: f64,
    pub cr: f64,
}

/// Largest threshold for which turning on is still the binding worst case.
/// r_on decreases and r_off increases in lambda, so bisection applies; the
/// search box caps lambda at the startup cost and at the largest benefit a
/// window can carry.
pub fn optimal_threshold(w: u32, params: &SystemParams) -> ThresholdResult {
    let beta = params.startup_cost;
    let hi = beta.min(params.max_slot_benefit() * w as f64).max(0.0);
    let diff = |l: f64| r_on(l, w, params) - r_off(l, w, params).expect("w >= 1 when lambda > 0");
    let lambda = if diff(hi) >= 0.0 {
        hi
    } else {
        let (mut lo, mut up) = (0.0, hi);
        for _ in 0..200 {
            if up - lo <= 1e-9 * beta {
                break;
            }
            let mid = 0.5 * (lo + up);
            if diff(mid) >= 0.0 {
                lo = mid;
            } else {
                up = mid;
            }
        }
        lo
    };
    let r_on_at = r_on(lambda, w, params);
    let r_off_at = r_off(lambda, w, params).expect("lambda is 0 whenever w is 0");
    ThresholdResult { lambda_star: lambda, r_on_at, r_off_at, cr: r_on_at }
}

/// Threshold-rule bound 3 - 2g(alpha, w), evaluated both through the g
/// formula and as r_on at the optimal threshold; the two routes are one
/// identity and are cross-checked here.
pub fn cr_chasepp(w: u32, params: &SystemParams) -> f64 {
    let a = alpha(params);
    let th = optimal_threshold(w, params);
    if a >= 1.0 {
        return th.cr;
    }
    let l = params.capacity;
    let co = params.output_cost;
    let cm = params.running_cost;
    let beta = params.startup_cost;
    let scale = l * co + cm / (1.0 - a);
    let wcm = w as f64 * cm;
    let best = [0.0, wcm]
        .iter()
        .map(|&q| {
            (2.0 * beta - q)
                / (beta + ((2.0 * wcm - q) * (l * co + cm) + a * l * co * th.lambda_star) / scale)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let g = a + (1.0 - a) * (1.0 - 0.5 * best);
    let closed = 3.0 - 2.0 * g;
    assert!(
        (closed - th.cr).abs() <= 1e-6 * closed.abs().max(1.0),
        "bound routes disagree: g form {closed}, threshold form {}",
        th.cr
    );
    closed
}

pub fn cr_chasepp_plus(w: u32, params: &SystemParams) -> f64 {
    cr_chasepp(w, params).min(1.0 / alpha(params))
}

/// Demand that always runs against the current status: full load while the
/// generator is off, nothing while it is on, at the price cap throughout.
pub fn adversary_chase<F>(mut policy: F, params: &SystemParams, horizon: usize) -> Trace
where
    F: FnMut(&InputSlot) -> bool,
{
    let mut slots = Vec::with_capacity(horizon);
    let mut on = false;
    for _ in 0..horizon {
        let a = if on { 0.0 } else { params.capacity };
        let slot = InputSlot::new(a, params.heat_efficiency * a, params.price_max);
        on = policy(&slot);
        slots.push(slot);
    }
    Trace::hourly(slots)
}

/// Cumulative benefit of the two-level worst-case input after t slots,
/// clipped at the startup cost. Level delta1 runs while the counter is
/// below its cap, delta2 afterwards.
fn two_level_q(t: u64, delta1: f64, delta2: f64, switch: f64, beta: f64) -> f64 {
    let t = t as f64;
    let raw = if t <= switch { t * delta1 } else { switch * delta1 + (t - switch) * delta2 };
    raw.min(beta)
}

/// Online-over-offline cost ratio when the online algorithm first turns on
/// at slot s of the two-level worst-case input.
pub fn pr_s(s: u64, delta1: f64, delta2: f64, w: u32, params: &SystemParams) -> Result<f64, RatioError> {
    let beta = params.startup_cost;
    let cm = params.running_cost;
    let wf = w as f64;
    let s_cap = (beta - wf * delta2) / delta1;
    if s < 1 || s as f64 > s_cap {
        return Err(RatioError::DomainError { s, max: s_cap });
    }
    let switch = s_cap.floor();
    let qs = two_level_q(s, delta1, delta2, switch, beta);
    let qsw = two_level_q(s + w as u64, delta1, delta2, switch, beta);
    let rate = params.max_external_rate();
    let off_cost = rate / (rate - params.output_cost) * ((s + w as u64) as f64 * cm + qsw);
    Ok(1.0 + (beta - (qsw - qs) + (qsw - wf * cm).max(0.0)) / off_cost)
}

/// Minimum of pr_s over its whole domain. Between its kinks pr_s is a ratio
/// of two affine functions of s, hence monotone, so the minimum sits at a
/// kink or an endpoint; only those candidates are evaluated.
fn min_pr_over_s(delta1: f64, delta2: f64, w: u32, params: &SystemParams) -> f64 {
    let beta = params.startup_cost;
    let cm = params.running_cost;
    let wf = w as f64;
    let s_cap = (beta - wf * delta2) / delta1;
    let s_max = s_cap.floor().min(1e15).max(1.0);
    let switch = s_cap.floor().min(1e15);

    let mut candidates = vec![1.0, s_max];
    let mut near = |x: f64| {
        if x.is_finite() {
            candidates.push(x.floor() - 1.0);
            candidates.push(x.floor());
            candidates.push(x.floor() + 1.0);
        }
    };
    near(switch - wf);
    if delta1 > 0.0 {
        near(beta / delta1 - wf);
        near(wf * cm / delta1 - wf);
    }
    if delta2 > 0.0 {
        near(switch - wf + (beta - switch * delta1) / delta2);
        near(switch - wf + (wf * cm - switch * delta1) / delta2);
    }

    let mut best = f64::INFINITY;
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    for c in candidates {
        let s = c.clamp(1.0, s_max) as u64;
        if let Ok(v) = pr_s(s, delta1, delta2, w, params) {
            best = best.min(v);
        }
    }
    best
}

/// Golden-section maximum of a unimodal function on [lo, hi].
fn golden_max(mut lo: f64, mut hi: f64, rel_tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    if hi <= lo {
        let v = f(lo);
        return (lo, v);
    }
    let span = hi - lo;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > rel_tol * span {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundResult {
    /// Steep benefit level, in per-slot units of the original horizon.
    pub delta1_star: Option<f64>,
    /// Shallow benefit level, same units.
    pub delta2_star: Option<f64>,
    pub cr_lower: f64,
    /// Sub-slots per original slot at which the value converged.
    pub refinement: u32,
}

/// Worst-case input optimization at a fixed slot subdivision k. Returns the
/// two benefit levels and the bound value in sub-slot units.
fn lower_bound_at(w: f64, params: &SystemParams, k: u32) -> (f64, f64, f64) {
    let kf = k as f64;
    let sub = SystemParams {
        capacity: params.capacity / kf,
        running_cost: params.running_cost / kf,
        ..*params
    };
    let wk = (w * kf).round().max(1.0) as u32;
    let wkf = wk as f64;
    let beta = sub.startup_cost;
    let dmax = sub.max_slot_benefit();
    let a = alpha(&sub);
    let cm = sub.running_cost;
    let lco = sub.capacity * sub.output_cost;

    let r_off_level = |d2: f64| {
        if d2 <= 0.0 {
            return 1.0;
        }
        (cm + d2) / (cm + lco * a / (lco + cm) * d2)
    };
    let best_on = |d2: f64| -> (f64, f64) {
        let lo = d2;
        let hi = ((beta - wkf * d2) / wkf).min(dmax);
        if hi <= lo {
            return (lo, min_pr_over_s(lo, d2, wk, &sub));
        }
        golden_max(lo, hi, 1e-6, |d1| min_pr_over_s(d1, d2, wk, &sub))
    };

    let hi2 = (beta / (2.0 * wkf)).min(dmax);
    let steps = 1000;
    let mut bracket = None;
    let mut prev = 0.0;
    for i in 1..=steps {
        let d2 = hi2 * i as f64 / steps as f64;
        if best_on(d2).1 < r_off_level(d2) {
            bracket = Some((prev, d2));
            break;
        }
        prev = d2;
    }
    let d2_star = match bracket {
        None => hi2,
        Some((mut lo, mut hi)) => {
            for _ in 0..100 {
                if hi - lo <= 1e-12 * hi2.max(1e-12) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if best_on(mid).1 >= r_off_level(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    let (d1_star, _) = best_on(d2_star);
    (d1_star, d2_star, r_off_level(d2_star))
}

/// Best provable lower bound on any deterministic algorithm's ratio at
/// window w (in original slots). Slots are subdivided until the value
/// settles; epsilon sets the initial sub-slot length as a fraction of a
/// slot. w = 0 falls back to the prediction-free limit.
pub fn lower_bound(w: f64, params: &SystemParams, epsilon: f64) -> LowerBoundResult {
    if w <= 0.0 {
        return LowerBoundResult {
            delta1_star: None,
            delta2_star: None,
            cr_lower: cr_chase(params),
            refinement: 0,
        };
    }
    let mut k = ((1.0 / epsilon).round().max(1.0) as u32).max((1.0 / w).ceil() as u32);
    let (_, _, mut cr) = lower_bound_at(w, params, k);
    let (mut d1, mut d2);
    loop {
        k *= 2;
        let (nd1, nd2, ncr) = lower_bound_at(w, params, k);
        let settled = (ncr - cr).abs() < 1e-4 || k >= 1 << 14;
        d1 = nd1;
        d2 = nd2;
        cr = ncr;
        if settled {
            break;
        }
    }
    LowerBoundResult {
        delta1_star: Some(d1 * k as f64),
        delta2_star: Some(d2 * k as f64),
        cr_lower: cr,
        refinement: k,
    }
}

/// Concrete trace whose per-slot benefits equal the given sequence: price
/// at the cap, heat matched to the generator's output, demand solved from
/// the benefit.
pub fn realize_delta_trace(deltas: &[f64], params: &SystemParams) -> Result<Trace, RatioError> {
    let min = -params.running_cost;
    let max = params.max_slot_benefit();
    let tol = 1e-9 * (max - min).max(1.0);
    let gap = params.max_external_rate() - params.output_cost;
    let mut slots = Vec::with_capacity(deltas.len());
    for &d in deltas {
        if d < min - tol || d > max + tol {
            return Err(RatioError::RangeError { delta: d, min, max });
        }
        let a = ((d - min) / gap).clamp(0.0, params.capacity);
        slots.push(InputSlot::new(a, params.heat_efficiency * a, params.price_max));
    }
    Ok(Trace::hourly(slots))
}

/// One row of the bound table at a fixed window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub w: u32,
    pub lambda_star: f64,
    pub cr_chase: f64,
    pub cr_chaselk: f64,
    pub cr_chaselk_plus: f64,
    pub cr_chasepp: f64,
    pub cr_chasepp_plus: f64,
    pub cr_lower: f64,
    pub delta1_star: Option<f64>,
    pub delta2_star: Option<f64>,
}

/// Closed-form bound table plus the scalar quantities the bounds hinge on.
/// one_over_alpha and r_off_limit are both reported: the former is the
/// all-external ratio, the latter the unconstrained limit of r_off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub alpha: f64,
    pub one_over_alpha: f64,
    pub r_off_limit: f64,
    pub price_cap: f64,
    pub rows: Vec<RatioRow>,
}

pub fn ratio_report(windows: &[u32], params: &SystemParams, epsilon: f64) -> RatioReport {
    let a = alpha(params);
    let rows = windows
        .iter()
        .map(|&w| {
            let th = optimal_threshold(w, params);
            let lb = lower_bound(w as f64, params, epsilon);
            RatioRow {
                w,
                lambda_star: th.lambda_star,
                cr_chase: cr_chase(params),
                cr_chaselk: cr_chaselk(w, params),
                cr_chaselk_plus: cr_chaselk_plus(w, params),
                cr_chasepp: cr_chasepp(w, params),
                cr_chasepp_plus: cr_chasepp_plus(w, params),
                cr_lower: lb.cr_lower,
                delta1_star: lb.delta1_star,
                delta2_star: lb.delta2_star,
            }
        })
        .collect();
    RatioReport {
        alpha: a,
        one_over_alpha: 1.0 / a,
        r_off_limit: params.max_external_rate() / params.output_cost,
        price_cap: params.price_max,
        rows,
    }
}
