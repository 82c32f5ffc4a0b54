use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branching::tree_rng;
use crate::error::{Error, Result};
use crate::hawkes::{simulate, Controller, EventLog, IntensitySpec, MarketState, SimConfig, Side};
use crate::hjb::Policy;
use crate::kernels::ExpSumKernel;
use crate::scalar::Scalar;

/// One closed-loop run: fills, spread revenue and the inventory penalty.
#[derive(Debug, Clone)]
pub struct Episode<S> {
    pub log: EventLog<S>,
    pub spread_revenue: S,
    pub penalty: S,
    pub total: S,
    pub seed: u64,
}

/// Runs `control` against the true market on `[initial.clock, horizon]`.
///
/// Revenue is the spread quoted at each fill; the penalty `−μ ∫ i² ds` is
/// exact since the inventory is constant between fills.
pub fn run_episode<S, C>(
    truth: &IntensitySpec<S>,
    penalty: S,
    control: &mut C,
    horizon: S,
    initial: &MarketState<S>,
    seed: u64,
) -> Result<Episode<S>>
where
    S: Scalar,
    C: Controller<S> + ?Sized,
{
    let cfg = SimConfig::new(horizon, seed, initial.clone());
    let out = simulate(truth, control, &cfg)?;
    let mut revenue = S::zero();
    let mut cost = S::zero();
    let mut inventory = initial.inventory;
    let mut last = initial.clock;
    for e in &out.log.events {
        let i = S::from_i64_lossy(inventory);
        cost = cost + i * i * (e.time - last);
        revenue = revenue + e.spread;
        inventory += e.side.inventory_step();
        last = e.time;
    }
    let i = S::from_i64_lossy(inventory);
    cost = cost + i * i * (horizon - last);
    let pen = -penalty * cost;
    Ok(Episode {
        log: out.log,
        spread_revenue: revenue,
        penalty: pen,
        total: revenue + pen,
        seed,
    })
}

/// Applies a policy to the true state.
pub struct PolicyController<'a, P: ?Sized> {
    pub policy: &'a P,
}

impl<S: Scalar, P: Policy<S> + ?Sized> Controller<S> for PolicyController<'_, P> {
    fn quote(&mut self, t: S, state: &MarketState<S>) -> (S, S) {
        self.policy.spreads(t, state.inventory, &state.c_ask, &state.c_bid)
    }
}

/// A trader who believes in another kernel: it runs its own memory filter,
/// fed by the realized fills, and quotes its policy on that belief.
pub struct BeliefController<'a, S, P: ?Sized> {
    pub policy: &'a P,
    pub kernel: ExpSumKernel<S>,
    pub belief: MarketState<S>,
}

impl<'a, S: Scalar, P: Policy<S> + ?Sized> BeliefController<'a, S, P> {
    pub fn new(policy: &'a P, kernel: ExpSumKernel<S>, c_ask: Vec<S>, c_bid: Vec<S>, clock: S) -> Result<Self> {
        if c_ask.len() != kernel.len() {
            return Err(Error::domain("belief memory does not match the believed kernel"));
        }
        Ok(Self {
            policy,
            kernel,
            belief: MarketState::new(0, c_ask, c_bid, clock)?,
        })
    }
}

impl<S: Scalar, P: Policy<S> + ?Sized> Controller<S> for BeliefController<'_, S, P> {
    fn quote(&mut self, t: S, state: &MarketState<S>) -> (S, S) {
        let dt = t - self.belief.clock;
        if dt > S::zero() {
            self.belief.advance(&self.kernel, dt);
        }
        self.belief.inventory = state.inventory;
        self.policy
            .spreads(t, state.inventory, &self.belief.c_ask, &self.belief.c_bid)
    }

    fn observe(&mut self, _t: S, side: Side) {
        self.belief.apply_event(&self.kernel, side);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyValueEstimate {
    pub strategy: String,
    pub model: String,
    pub mean: f64,
    pub stderr: f64,
    pub n_episodes: usize,
}

/// Seed of episode `k` under a master seed.
pub fn episode_seed(master: u64, k: u64) -> u64 {
    tree_rng(master, k).next_u64()
}

/// Totals of `n_episodes` independent episodes, in episode order.
/// `make` builds a fresh controller per episode.
pub fn episode_totals<S, C, F>(
    truth: &IntensitySpec<S>,
    penalty: S,
    make: F,
    horizon: S,
    initial: &MarketState<S>,
    n_episodes: usize,
    master_seed: u64,
) -> Result<Vec<f64>>
where
    S: Scalar,
    C: Controller<S>,
    F: Fn() -> Result<C> + Sync,
{
    (0..n_episodes as u64)
        .into_par_iter()
        .map(|k| {
            let mut c = make()?;
            run_episode(truth, penalty, &mut c, horizon, initial, episode_seed(master_seed, k)).map(|e| e.total.as_f64())
        })
        .collect()
}

/// Mean and standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard error of `a_k − b_k` (paired by episode).
pub fn paired_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_stderr(&d)
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_value<S, C, F>(
    truth: &IntensitySpec<S>,
    penalty: S,
    make: F,
    horizon: S,
    initial: &MarketState<S>,
    n_episodes: usize,
    master_seed: u64,
    strategy: &str,
    model: &str,
) -> Result<StrategyValueEstimate>
where
    S: Scalar,
    C: Controller<S>,
    F: Fn() -> Result<C> + Sync,
{
    if n_episodes < 2 {
        return Err(Error::precondition("need at least two episodes"));
    }
    let totals = episode_totals(truth, penalty, make, horizon, initial, n_episodes, master_seed)?;
    let (mean, stderr) = mean_stderr(&totals);
    Ok(StrategyValueEstimate {
        strategy: strategy.to_string(),
        model: model.to_string(),
        mean,
        stderr,
        n_episodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hawkes::ConstantSpread;

    fn quiet() -> IntensitySpec<f64> {
        IntensitySpec::new(0.0, ExpSumKernel::zero(), 20.0).unwrap()
    }

    #[test]
    fn no_events_flat_inventory() {
        let e = run_episode(&quiet(), 0.1, &mut ConstantSpread { ask: 0.0, bid: 0.0 }, 1.0, &MarketState::flat(0, 0), 1).unwrap();
        assert_eq!((e.total, e.spread_revenue, e.penalty), (0.0, 0.0, 0.0));
    }

    #[test]
    fn no_events_short_inventory() {
        let e = run_episode(&quiet(), 0.1, &mut ConstantSpread { ask: 0.0, bid: 0.0 }, 1.0, &MarketState::flat(0, -10), 1).unwrap();
        assert!((e.penalty + 10.0).abs() < 1e-12);
        assert!((e.total + 10.0).abs() < 1e-12);
    }

    #[test]
    fn penalty_is_piecewise_exact() {
        let spec = IntensitySpec::new(1.0, ExpSumKernel::zero(), 20.0).unwrap();
        let e = run_episode(&spec, 0.1, &mut ConstantSpread { ask: 0.02, bid: 0.03 }, 20.0, &MarketState::flat(0, 2), 5).unwrap();
        let mut i = 2i64;
        let mut last = 0.0;
        let mut cost = 0.0;
        let mut rev = 0.0;
        for ev in &e.log.events {
            cost += (i * i) as f64 * (ev.time - last);
            rev += if ev.side == Side::Ask { 0.02 } else { 0.03 };
            i += ev.side.inventory_step();
            last = ev.time;
        }
        cost += (i * i) as f64 * (20.0 - last);
        assert!((e.penalty + 0.1 * cost).abs() < 1e-9);
        assert!((e.spread_revenue - rev).abs() < 1e-12);
        assert!(e.penalty <= 0.0 && e.spread_revenue >= 0.0);
    }

    #[test]
    fn belief_filter_tracks_projected_truth() {
        use crate::hjb::{BeliefMap, ConstantPolicy};
        let truth_k = ExpSumKernel::<f64>::new(vec![0.45, 0.45], vec![1.0, 1.0]).unwrap();
        let truth = IntensitySpec::new(0.1, truth_k.clone(), 20.0).unwrap();
        let belief_k = ExpSumKernel::single(0.9, 1.0).unwrap();
        let map = BeliefMap::new(&truth_k, &belief_k).unwrap();
        let init = MarketState::new(0, vec![0.0, 3.0], vec![1.0, 0.0], 0.0).unwrap();
        let policy = ConstantPolicy { ask: 0.0, bid: 0.0 };
        let mut ctl = BeliefController::new(&policy, belief_k, map.project(&init.c_ask), map.project(&init.c_bid), 0.0).unwrap();
        let out = simulate(&truth, &mut ctl, &SimConfig::new(30.0, 8, init)).unwrap();
        let mut b = ctl.belief.clone();
        b.advance(&ctl.kernel, 30.0 - b.clock);
        let want_a = map.project(&out.final_state.c_ask);
        let want_b = map.project(&out.final_state.c_bid);
        assert!((b.c_ask[0] - want_a[0]).abs() < 1e-10);
        assert!((b.c_bid[0] - want_b[0]).abs() < 1e-10);
    }
}
