//! Synthetic demand traces exercising distinct scheduling regimes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridsched::{adversary_chase, chase_step, InputSlot, PolicyState, SystemParams, Trace};

/// Which synthetic trace to generate.
///
/// - `Square`: demand alternates between 0 and the full capacity of one
///   unit, heat in proportion, price pinned at the cap. Long idle valleys
///   drain the benefit state completely; full-load phases rebuild it.
/// - `Staircase`: adds a long quarter-load shelf as its own excursion,
///   separated from the full-load peak by idle spans. The shelf climbs the
///   benefit state slowly and is barely worth a startup in hindsight, so
///   boundary-watching turn-on wastes a startup there while the
///   threshold rule keeps holding.
/// - `Adversary`: the worst-case input for the no-lookahead policy,
///   generated by playing against it.
/// - `Random`: independent uniform draws across the whole fleet range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Square,
    Staircase,
    Adversary,
    Random,
}

impl TraceKind {
    pub fn parse(name: &str) -> Result<TraceKind, String> {
        match name {
            "square" => Ok(TraceKind::Square),
            "staircase" => Ok(TraceKind::Staircase),
            "adversary" => Ok(TraceKind::Adversary),
            "random" => Ok(TraceKind::Random),
            other => Err(format!(
                "unknown synthetic trace {other:?}; expected square, staircase, adversary, or random"
            )),
        }
    }
}

const IDLE_LEN: usize = 17;
const SHELF_LEN: usize = 30;
const PEAK_LEN: usize = 12;

fn patterned(levels: &[(usize, f64)], params: &SystemParams, t_len: usize) -> Trace {
    let period: usize = levels.iter().map(|(n, _)| n).sum();
    let slots = (0..t_len)
        .map(|i| {
            let mut phase = i % period;
            let mut level = 0.0;
            for &(n, a) in levels {
                if phase < n {
                    level = a;
                    break;
                }
                phase -= n;
            }
            InputSlot::new(level, params.heat_efficiency * level, params.price_max)
        })
        .collect();
    Trace::hourly(slots)
}

/// Generates `t_len` hourly slots. `total_capacity` scales the random
/// kind's ranges (the whole fleet can be loaded); the patterned kinds use
/// `params.capacity`, a single unit. Only `Random` consumes the seed.
pub fn synthesize_trace(
    kind: TraceKind,
    params: &SystemParams,
    total_capacity: f64,
    t_len: usize,
    seed: u64,
) -> Trace {
    let l = params.capacity;
    match kind {
        TraceKind::Square => {
            patterned(&[(IDLE_LEN, 0.0), (PEAK_LEN, l)], params, t_len)
        }
        TraceKind::Staircase => {
            patterned(
                &[(IDLE_LEN, 0.0), (SHELF_LEN, l / 4.0), (IDLE_LEN, 0.0), (PEAK_LEN, l)],
                params,
                t_len,
            )
        }
        TraceKind::Adversary => {
            let mut state = PolicyState::new(params);
            adversary_chase(
                |slot| {
                    let on = chase_step(&state, slot, params);
                    state.commit(on, slot, params);
                    on
                },
                params,
                t_len,
            )
        }
        TraceKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let slots = (0..t_len)
                .map(|_| {
                    InputSlot::new(
                        rng.gen::<f64>() * total_capacity,
                        rng.gen::<f64>() * params.heat_efficiency * total_capacity,
                        params.price_min + rng.gen::<f64>() * (params.price_max - params.price_min),
                    )
                })
                .collect();
            Trace::hourly(slots)
        }
    }
}
