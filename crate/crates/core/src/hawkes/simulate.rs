//! Exact simulation of the controlled bid/ask Hawkes flows by thinning.
//!
//! Between events every `c_i` decays, so `Φ(Σ c_i)` is nonincreasing and its
//! value at the last candidate dominates the intensity until the next one.
//! Quoting a spread can only lower the rate (`e^{-(k/σ)δ} ≤ 1`), so the same
//! bound dominates the controlled flow.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{fmt17, Scalar};

use super::{IntensitySpec, MarketState, Side};

pub const DEFAULT_MAX_EVENTS: usize = 10_000_000;

/// Feedback policy: spreads as a function of time and the current state.
///
/// `observe` lets a policy keep private state (e.g. a believed intensity
/// memory under its own kernel) in sync with the realized order flow.
pub trait Controller<S: Scalar> {
    fn quote(&mut self, t: S, state: &MarketState<S>) -> (S, S);

    fn observe(&mut self, _t: S, _side: Side) {}
}

impl<S, F> Controller<S> for F
where
    S: Scalar,
    F: FnMut(S, &MarketState<S>) -> (S, S),
{
    fn quote(&mut self, t: S, state: &MarketState<S>) -> (S, S) {
        self(t, state)
    }
}

/// Same spreads everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSpread<S> {
    pub ask: S,
    pub bid: S,
}

impl<S: Scalar> Controller<S> for ConstantSpread<S> {
    fn quote(&mut self, _t: S, _state: &MarketState<S>) -> (S, S) {
        (self.ask, self.bid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct Event<S> {
    pub time: S,
    pub side: Side,
    pub spread: S,
}

/// Fills in time order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct EventLog<S> {
    pub events: Vec<Event<S>>,
}

impl<S: Scalar> EventLog<S> {
    pub const CSV_HEADER: &'static str = "time,side,spread";

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, side: Side) -> usize {
        self.events.iter().filter(|e| e.side == side).count()
    }

    pub fn times(&self, side: Side) -> Vec<S> {
        self.events.iter().filter(|e| e.side == side).map(|e| e.time).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for e in &self.events {
            writeln!(w, "{},{},{}", fmt17(e.time), e.side, fmt17(e.spread))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != Self::CSV_HEADER {
            return Err(Error::config(format!("event log must start with `{}`", Self::CSV_HEADER)));
        }
        let mut events = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::config(format!("malformed event row {line:?}")));
            }
            let parse = |s: &str| -> Result<S> {
                s.parse::<f64>()
                    .map(S::lit)
                    .map_err(|_| Error::config(format!("bad number {s:?}")))
            };
            events.push(Event {
                time: parse(cols[0])?,
                side: cols[1].parse()?,
                spread: parse(cols[2])?,
            });
        }
        Ok(Self { events })
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig<S> {
    pub horizon: S,
    pub seed: u64,
    pub max_events: usize,
    pub initial: MarketState<S>,
}

impl<S: Scalar> SimConfig<S> {
    pub fn new(horizon: S, seed: u64, initial: MarketState<S>) -> Self {
        Self {
            horizon,
            seed,
            max_events: DEFAULT_MAX_EVENTS,
            initial,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput<S> {
    pub log: EventLog<S>,
    pub final_state: MarketState<S>,
    pub candidates: usize,
}

/// Simulates both flows on `[clock, horizon]` by Ogata thinning.
pub fn simulate<S, C>(spec: &IntensitySpec<S>, control: &mut C, cfg: &SimConfig<S>) -> Result<SimOutput<S>>
where
    S: Scalar,
    C: Controller<S> + ?Sized,
{
    if !(cfg.horizon > S::zero()) {
        return Err(Error::domain(format!("horizon must be positive, got {}", cfg.horizon)));
    }
    if cfg.initial.dim() != spec.kernel.len() {
        return Err(Error::domain(format!(
            "state has {} memory coordinates but the kernel has {} terms",
            cfg.initial.dim(),
            spec.kernel.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = cfg.initial.clone();
    let mut log = EventLog { events: Vec::new() };
    let mut candidates = 0usize;
    let slack = S::one() + S::lit(1e-12);
    loop {
        let bound_ask = spec.base_intensity(&state, Side::Ask);
        let bound_bid = spec.base_intensity(&state, Side::Bid);
        let total = bound_ask + bound_bid;
        if !(total > S::zero()) {
            break;
        }
        let u: f64 = rng.random();
        let wait = S::lit(-(1.0 - u).ln()) / total;
        if state.clock + wait > cfg.horizon {
            break;
        }
        state.advance(&spec.kernel, wait);
        candidates += 1;
        let t = state.clock;
        let (ask, bid) = control.quote(t, &state);
        let rate_ask = spec.controlled_intensity(&state, Side::Ask, ask)?;
        let rate_bid = spec.controlled_intensity(&state, Side::Bid, bid)?;
        if rate_ask > bound_ask * slack || rate_bid > bound_bid * slack {
            return Err(Error::numerical(format!(
                "thinning bound violated at t = {t}: rates ({rate_ask}, {rate_bid}) exceed ({bound_ask}, {bound_bid}); is the rate map nondecreasing?"
            )));
        }
        let pick = S::lit(rng.random::<f64>()) * total;
        let side = if pick < rate_ask {
            Side::Ask
        } else if pick < rate_ask + rate_bid {
            Side::Bid
        } else {
            continue;
        };
        if log.events.len() >= cfg.max_events {
            return Err(Error::Explosion {
                max_events: cfg.max_events,
                time: t.as_f64(),
            });
        }
        let spread = match side {
            Side::Ask => ask,
            Side::Bid => bid,
        };
        log.events.push(Event { time: t, side, spread });
        state.apply_event(&spec.kernel, side);
        control.observe(t, side);
    }
    let rest = cfg.horizon - state.clock;
    if rest > S::zero() {
        state.advance(&spec.kernel, rest);
    }
    Ok(SimOutput {
        log,
        final_state: state,
        candidates,
    })
}
