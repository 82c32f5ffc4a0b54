use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::{IntensitySpec, MarketState};
use crate::hjb::{evaluate_fixed_control, solve, BeliefMap, FeedbackTable, GridSpec, Policy, ProjectedPolicy, ValueGrid};
use crate::kernels::ExpSumKernel;
use crate::scalar::{fmt17, Scalar};

use super::episode::{episode_totals, mean_stderr, paired_difference, BeliefController, PolicyController};

/// A market model a trader may believe in, with the grid used to solve it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "S: Scalar"))]
pub struct BeliefModel<S> {
    pub name: String,
    pub mu: S,
    pub kernel: ExpSumKernel<S>,
    /// Upper bound of every memory coordinate on the grid.
    pub c_max: S,
    /// Nodes per memory coordinate.
    pub m_c: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "S: Scalar"))]
pub struct ProbeState<S> {
    pub inventory: i64,
    pub c_ask: Vec<S>,
    pub c_bid: Vec<S>,
}

impl<S: Scalar> ProbeState<S> {
    pub fn state(&self) -> Result<MarketState<S>> {
        MarketState::new(self.inventory, self.c_ask.clone(), self.c_bid.clone(), S::zero())
    }
}

/// Section of the value-difference surfaces: the ask memory and all bid
/// coordinates but the last are fixed; inventory and the last bid
/// coordinate vary over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "S: Scalar"))]
pub struct DiffSection<S> {
    pub c_ask: Vec<S>,
    pub c_bid_fixed: Vec<S>,
}

fn default_horizon<S: Scalar>() -> S {
    S::one()
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "S: Scalar"))]
pub struct ComparisonConfig<S> {
    #[serde(default = "default_horizon")]
    pub horizon: S,
    pub mu_penalty: S,
    pub k_over_sigma: S,
    /// Inventory grid is `[-i_bound, i_bound]` for every model.
    pub i_bound: i64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Believed models; the last one is the true market.
    pub strategies: Vec<BeliefModel<S>>,
    pub probe: ProbeState<S>,
    pub diff_section: DiffSection<S>,
    /// States where closed-loop Monte Carlo is compared with the PDE value.
    pub mc_probes: Vec<ProbeState<S>>,
    pub n_episodes: usize,
    #[serde(default)]
    pub seed: u64,
}

impl<S: Scalar> ComparisonConfig<S> {
    /// Poisson, one-exponential and two-exponential traders in a
    /// two-exponential market, unit horizon, the inventory `−10` probe.
    pub fn desk_scale() -> Self {
        let model = |name: &str, mu: f64, w: Vec<f64>, r: Vec<f64>, c_max: f64, m_c: usize| BeliefModel {
            name: name.to_string(),
            mu: S::lit(mu),
            kernel: ExpSumKernel::new(w.into_iter().map(S::lit).collect(), r.into_iter().map(S::lit).collect())
                .expect("valid kernel"),
            c_max: S::lit(c_max),
            m_c,
        };
        let v = |xs: &[f64]| xs.iter().map(|&x| S::lit(x)).collect::<Vec<S>>();
        Self {
            horizon: S::one(),
            mu_penalty: S::lit(0.1),
            k_over_sigma: S::lit(20.0),
            i_bound: 16,
            snapshot_stride: 5,
            strategies: vec![
                model("V0", 1.0, vec![], vec![], 1.0, 2),
                model("V1", 0.1, vec![0.9], vec![1.0], 12.0, 49),
                model("V2", 0.1, vec![0.45, 0.45], vec![1.0, 1.0], 12.0, 13),
            ],
            probe: ProbeState {
                inventory: -10,
                c_ask: v(&[0.0, 10.0]),
                c_bid: v(&[0.0, 10.0]),
            },
            diff_section: DiffSection {
                c_ask: v(&[10.0, 0.0]),
                c_bid_fixed: v(&[10.0]),
            },
            mc_probes: vec![
                ProbeState {
                    inventory: -10,
                    c_ask: v(&[0.0, 10.0]),
                    c_bid: v(&[0.0, 10.0]),
                },
                ProbeState {
                    inventory: 0,
                    c_ask: v(&[0.0, 0.0]),
                    c_bid: v(&[0.0, 0.0]),
                },
                ProbeState {
                    inventory: 5,
                    c_ask: v(&[5.0, 0.0]),
                    c_bid: v(&[0.0, 5.0]),
                },
            ],
            n_episodes: 100_000,
            seed: 2024,
        }
    }

    pub fn truth(&self) -> &BeliefModel<S> {
        self.strategies.last().expect("validated: at least one strategy")
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::config("at least one strategy (the true model) is required"));
        }
        let n = self.truth().kernel.len();
        let probes = std::iter::once(&self.probe).chain(&self.mc_probes);
        for p in probes {
            if p.c_ask.len() != n || p.c_bid.len() != n {
                return Err(Error::config(format!("probe memories must have {n} coordinates")));
            }
        }
        if n == 0 || self.diff_section.c_ask.len() != n || self.diff_section.c_bid_fixed.len() + 1 != n {
            return Err(Error::config(format!(
                "difference section needs {n} ask and {} fixed bid coordinates",
                n.saturating_sub(1)
            )));
        }
        if self.n_episodes < 2 {
            return Err(Error::config("n_episodes must be at least 2"));
        }
        Ok(())
    }

    pub fn grid_for(&self, m: &BeliefModel<S>) -> Result<GridSpec<S>> {
        let n = m.kernel.len();
        let spec = GridSpec::new(
            self.i_bound,
            vec![m.c_max; n],
            m.m_c,
            self.horizon,
            self.mu_penalty,
            self.k_over_sigma,
            m.mu,
            m.kernel.clone(),
        )?;
        Ok(spec.with_snapshot_stride(self.snapshot_stride))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeComparison {
    pub inventory: i64,
    /// Per strategy: value of the applied policy by the linear PDE.
    pub pde: Vec<f64>,
    pub mc_mean: Vec<f64>,
    pub mc_stderr: Vec<f64>,
    /// Paired (same episode seeds) difference truth − strategy.
    pub gap_mean: Vec<f64>,
    pub gap_stderr: Vec<f64>,
    /// Paired difference strategy `k+1` − strategy `k`.
    pub step_gap_mean: Vec<f64>,
    pub step_gap_stderr: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport<S: Scalar> {
    pub names: Vec<String>,
    /// Value grids of every strategy applied in the true market; the last
    /// entry is the optimal value.
    pub values: Vec<ValueGrid<S>>,
    pub fig1: Vec<(f64, Vec<f64>)>,
    /// For each non-true strategy: rows `(i, c_b_last, V_truth − V_s)`.
    pub diffs: Vec<Vec<(i64, f64, f64)>>,
    pub probes: Vec<ProbeComparison>,
}

/// Solves every believed model, evaluates each resulting strategy in the
/// true market by the linear PDE and by closed-loop Monte Carlo.
pub fn compare_strategies<S: Scalar>(cfg: &ComparisonConfig<S>) -> Result<ComparisonReport<S>> {
    cfg.validate()?;
    let truth = cfg.truth();
    let true_grid = cfg.grid_for(truth)?;
    let true_spec = IntensitySpec::new(truth.mu, truth.kernel.clone(), cfg.k_over_sigma)?;

    let mut tables: Vec<FeedbackTable<S>> = Vec::with_capacity(cfg.strategies.len());
    let mut optimal = None;
    for (k, m) in cfg.strategies.iter().enumerate() {
        let grid = if k + 1 == cfg.strategies.len() {
            true_grid.clone()
        } else {
            cfg.grid_for(m)?
        };
        let (v, fb) = solve(&grid)?;
        if k + 1 == cfg.strategies.len() {
            optimal = Some(v);
        }
        tables.push(fb);
    }
    let optimal = optimal.expect("the true model is solved");

    let mut values = Vec::with_capacity(cfg.strategies.len());
    let mut maps = Vec::with_capacity(cfg.strategies.len());
    for (m, fb) in cfg.strategies.iter().zip(&tables) {
        let map = if m.kernel == truth.kernel {
            None
        } else {
            Some(BeliefMap::new(&truth.kernel, &m.kernel)?)
        };
        let applied = match &map {
            None => evaluate_fixed_control(fb, &true_grid)?,
            Some(map) => evaluate_fixed_control(
                &ProjectedPolicy {
                    inner: fb,
                    map: map.clone(),
                },
                &true_grid,
            )?,
        };
        values.push(applied);
        maps.push(map);
    }
    // the optimal value itself for the true strategy
    let last = values.len() - 1;
    let applied_truth = std::mem::replace(&mut values[last], optimal);

    let p = &cfg.probe;
    let mut fig1 = Vec::new();
    for s in &values[last].slices {
        let mut row = Vec::with_capacity(values.len());
        for v in &values {
            row.push(v.value(s.step, p.inventory, &p.c_ask, &p.c_bid)?.as_f64());
        }
        fig1.push((values[last].time(s.step).as_f64(), row));
    }

    let geo = &values[last].geometry;
    let n = truth.kernel.len();
    let mut diffs = Vec::new();
    for v in &values[..last] {
        let mut rows = Vec::new();
        for ii in 0..geo.n_inv {
            let i = geo.inventory(ii);
            for k in 0..geo.m {
                let last_c = S::from_usize_lossy(k) * geo.mesh[n - 1];
                let mut cb = cfg.diff_section.c_bid_fixed.clone();
                cb.push(last_c);
                let a = values[last].value_at_start(i, &cfg.diff_section.c_ask, &cb)?;
                let b = v.value_at_start(i, &cfg.diff_section.c_ask, &cb)?;
                rows.push((i, last_c.as_f64(), (a - b).as_f64()));
            }
        }
        diffs.push(rows);
    }

    let mut probes = Vec::new();
    for probe in &cfg.mc_probes {
        let init = probe.state()?;
        let mut totals = Vec::with_capacity(cfg.strategies.len());
        let mut pde = Vec::with_capacity(cfg.strategies.len());
        for (k, (m, fb)) in cfg.strategies.iter().zip(&tables).enumerate() {
            let grid = if k == last { &applied_truth } else { &values[k] };
            pde.push(grid.value_at_start(probe.inventory, &probe.c_ask, &probe.c_bid)?.as_f64());
            let t = match &maps[k] {
                None => episode_totals(
                    &true_spec,
                    cfg.mu_penalty,
                    || Ok(PolicyController { policy: fb as &dyn Policy<S> }),
                    cfg.horizon,
                    &init,
                    cfg.n_episodes,
                    cfg.seed,
                )?,
                Some(map) => episode_totals(
                    &true_spec,
                    cfg.mu_penalty,
                    || BeliefController::new(fb, m.kernel.clone(), map.project(&probe.c_ask), map.project(&probe.c_bid), S::zero()),
                    cfg.horizon,
                    &init,
                    cfg.n_episodes,
                    cfg.seed,
                )?,
            };
            totals.push(t);
        }
        let stats: Vec<(f64, f64)> = totals.iter().map(|t| mean_stderr(t)).collect();
        let gaps: Vec<(f64, f64)> = totals.iter().map(|t| paired_difference(&totals[last], t)).collect();
        let steps: Vec<(f64, f64)> = totals.windows(2).map(|w| paired_difference(&w[1], &w[0])).collect();
        probes.push(ProbeComparison {
            inventory: probe.inventory,
            pde,
            mc_mean: stats.iter().map(|s| s.0).collect(),
            mc_stderr: stats.iter().map(|s| s.1).collect(),
            gap_mean: gaps.iter().map(|g| g.0).collect(),
            gap_stderr: gaps.iter().map(|g| g.1).collect(),
            step_gap_mean: steps.iter().map(|g| g.0).collect(),
            step_gap_stderr: steps.iter().map(|g| g.1).collect(),
        });
    }

    Ok(ComparisonReport {
        names: cfg.strategies.iter().map(|m| m.name.clone()).collect(),
        values,
        fig1,
        diffs,
        probes,
    })
}

impl<S: Scalar> ComparisonReport<S> {
    /// `t,V0,V1,V2` (one column per strategy, in configuration order).
    pub fn write_fig1<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,{}", self.names.join(","))?;
        for (t, row) in &self.fig1 {
            let cols: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
            writeln!(w, "{},{}", fmt17(*t), cols.join(","))?;
        }
        Ok(())
    }

    /// `i,c_b_last,diff` for strategy `k` (truth minus strategy `k`).
    pub fn write_diff<W: Write>(&self, k: usize, mut w: W) -> Result<()> {
        let rows = self
            .diffs
            .get(k)
            .ok_or_else(|| Error::precondition(format!("no difference surface for strategy {k}")))?;
        writeln!(w, "i,c_b_last,diff")?;
        for (i, c, d) in rows {
            writeln!(w, "{i},{},{}", fmt17(*c), fmt17(*d))?;
        }
        Ok(())
    }

    /// `inventory,strategy,pde,mc_mean,mc_stderr,gap_mean,gap_stderr`.
    pub fn write_probes<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "inventory,strategy,pde,mc_mean,mc_stderr,gap_mean,gap_stderr")?;
        for p in &self.probes {
            for (k, name) in self.names.iter().enumerate() {
                writeln!(
                    w,
                    "{},{name},{},{},{},{},{}",
                    p.inventory,
                    fmt17(p.pde[k]),
                    fmt17(p.mc_mean[k]),
                    fmt17(p.mc_stderr[k]),
                    fmt17(p.gap_mean[k]),
                    fmt17(p.gap_stderr[k])
                )?;
            }
        }
        Ok(())
    }
}
