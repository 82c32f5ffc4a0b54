use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::branching::{estimate_u, taylor_generator, Estimate, DEFAULT_MAX_PARTICLES, Expansion, GridGuide, GuideProjection, ParticleConfig};
use crate::error::{Error, Result};
use crate::hawkes::{IntensitySpec, MarketState};
use crate::hjb::{solve, GridSpec, ValueGrid};
use crate::kernels::{approximate_power_law, ExpSumKernel, InversionMethod, Kernel, PowerLawKernel};
use crate::scalar::{fmt17, Scalar};

/// One-term grid whose increments set the Taylor expansion points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "S: Scalar"))]
pub struct GuideGrid<S> {
    pub i_bound: i64,
    pub c_max: S,
    pub m_c: usize,
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "S: Scalar"))]
pub struct ConvergenceConfig<S> {
    pub target: PowerLawKernel<S>,
    #[serde(default)]
    pub inversion: InversionMethod,
    /// Riemann sizes; the largest one is the reference.
    pub ns: Vec<usize>,
    pub mu: S,
    pub mu_penalty: S,
    pub k_over_sigma: S,
    pub horizon: S,
    /// Probe inventories; the ask memory is `excitation · α` (the lifted
    /// form of `θ^a = excitation · K_n`), the bid memory is empty.
    pub inventories: Vec<i64>,
    pub excitation: S,
    #[serde(default)]
    pub lifetime_rate: Option<S>,
    #[serde(default = "default_max_particles")]
    pub max_particles: usize,
    pub n_trees: usize,
    #[serde(default)]
    pub seed: u64,
    pub guide: GuideGrid<S>,
}

fn default_max_particles() -> usize {
    DEFAULT_MAX_PARTICLES
}

impl<S: Scalar> ConvergenceConfig<S> {
    pub fn reference() -> Self {
        Self {
            target: PowerLawKernel::reference(),
            inversion: InversionMethod::default(),
            ns: vec![8, 16, 32, 64, 128],
            mu: S::lit(0.1),
            mu_penalty: S::lit(0.1),
            k_over_sigma: S::lit(20.0),
            horizon: S::one(),
            inventories: vec![0, 5, -5],
            excitation: S::lit(5.0),
            lifetime_rate: Some(S::one()),
            max_particles: DEFAULT_MAX_PARTICLES,
            n_trees: 100_000,
            seed: 7,
            guide: GuideGrid {
                i_bound: 12,
                c_max: S::lit(40.0),
                m_c: 81,
                snapshot_stride: 10,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.len() < 2 {
            return Err(Error::config("need at least two kernel sizes (one is the reference)"));
        }
        if self.ns.contains(&0) {
            return Err(Error::config("kernel sizes must be positive"));
        }
        if self.inventories.is_empty() {
            return Err(Error::config("no probe inventories"));
        }
        if self.n_trees < 2 {
            return Err(Error::config("n_trees must be at least 2"));
        }
        self.particle_config().validate()
    }

    pub fn particle_config(&self) -> ParticleConfig<S> {
        ParticleConfig {
            lifetime_rate: self.lifetime_rate,
            max_particles: self.max_particles,
            horizon: self.horizon,
            seed: self.seed,
        }
    }

    pub fn reference_n(&self) -> usize {
        *self.ns.iter().max().expect("validated: nonempty")
    }

    /// Surrogate one-term kernel with the target's `K(0)` and `‖K‖₁`,
    /// shared by every `K_n` since all of them match those two numbers.
    pub fn surrogate(&self) -> Result<ExpSumKernel<S>> {
        let k0 = self.target.at_zero();
        ExpSumKernel::single(k0, k0 / self.target.l1_norm()?)
    }

    pub fn solve_guide(&self) -> Result<ValueGrid<S>> {
        let g = &self.guide;
        let spec = GridSpec::new(
            g.i_bound,
            vec![g.c_max],
            g.m_c,
            self.horizon,
            self.mu_penalty,
            self.k_over_sigma,
            self.mu,
            self.surrogate()?,
        )?
        .with_snapshot_stride(g.snapshot_stride);
        Ok(solve(&spec)?.0)
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n: usize,
    pub estimates: Vec<Estimate>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub inventories: Vec<i64>,
    pub reference_n: usize,
    /// One row per `n`, ascending, the reference included.
    pub rows: Vec<ConvergenceRow>,
}

/// Branching estimates of `U^{K_n}` at the probes for every `n`, with common
/// random numbers: tree `k` draws from the same stream for every `n`.
pub fn run_convergence<S: Scalar>(cfg: &ConvergenceConfig<S>) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let guide_grid = cfg.solve_guide()?;
    let mut ns = cfg.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let pcfg = cfg.particle_config();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let kernel = approximate_power_law(&cfg.target, n, cfg.inversion)?.kernel;
        let spec = IntensitySpec::new(cfg.mu, kernel.clone(), cfg.k_over_sigma)?;
        let guide = GridGuide::new(guide_grid.clone(), kernel.clone(), GuideProjection::TotalExcitation)?;
        let poly = taylor_generator(&spec, cfg.mu_penalty, S::zero(), Expansion::Guided(Arc::new(guide)))?;
        let c_ask: Vec<S> = kernel.weights().iter().map(|&w| cfg.excitation * w).collect();
        let mut estimates = Vec::with_capacity(cfg.inventories.len());
        for &i in &cfg.inventories {
            let state = MarketState::new(i, c_ask.clone(), vec![S::zero(); kernel.len()], S::zero())?;
            estimates.push(estimate_u(S::zero(), &state, &poly, &pcfg, cfg.n_trees)?);
        }
        rows.push(ConvergenceRow { n, estimates });
    }
    Ok(ConvergenceReport {
        inventories: cfg.inventories.clone(),
        reference_n: *ns.last().expect("validated"),
        rows,
    })
}

impl ConvergenceReport {
    fn reference(&self) -> &ConvergenceRow {
        self.rows.last().expect("at least two rows")
    }

    /// `ln(|U^{K_n} − U^{K_ref}| / |U^{K_ref}|)` per probe, for every `n`
    /// below the reference.
    pub fn log_relative_differences(&self) -> Vec<(usize, Vec<f64>)> {
        let r = self.reference();
        self.rows
            .iter()
            .filter(|row| row.n != self.reference_n)
            .map(|row| {
                let d = row
                    .estimates
                    .iter()
                    .zip(&r.estimates)
                    .map(|(e, re)| ((e.mean - re.mean).abs() / re.mean.abs()).ln())
                    .collect();
                (row.n, d)
            })
            .collect()
    }

    /// OLS slope of the log relative difference against `n`, per probe.
    pub fn slopes(&self) -> Vec<f64> {
        let d = self.log_relative_differences();
        let xs: Vec<f64> = d.iter().map(|(n, _)| *n as f64).collect();
        (0..self.inventories.len())
            .map(|p| {
                let ys: Vec<f64> = d.iter().map(|(_, v)| v[p]).collect();
                ols_slope(&xs, &ys)
            })
            .collect()
    }

    /// `n,x0,x1,...`: log relative difference per probe.
    pub fn write_fig4<W: Write>(&self, mut w: W) -> Result<()> {
        let cols: Vec<String> = (0..self.inventories.len()).map(|p| format!("x{p}")).collect();
        writeln!(w, "n,{}", cols.join(","))?;
        for (n, d) in self.log_relative_differences() {
            let vals: Vec<String> = d.iter().map(|&x| fmt17(x)).collect();
            writeln!(w, "{n},{}", vals.join(","))?;
        }
        Ok(())
    }

    /// `n,probe,i,mean,stderr,n_trees,mean_tree_size`, the reference included.
    pub fn write_estimates<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,probe,i,{}", Estimate::CSV_HEADER_TAIL)?;
        for row in &self.rows {
            for (p, (e, i)) in row.estimates.iter().zip(&self.inventories).enumerate() {
                writeln!(
                    w,
                    "{},x{p},{i},{},{},{},{}",
                    row.n,
                    fmt17(e.mean),
                    fmt17(e.stderr),
                    e.n_trees,
                    fmt17(e.mean_tree_size)
                )?;
            }
        }
        Ok(())
    }
}

/// Least-squares slope of `ys` against `xs`; NaN for fewer than two points
/// or a degenerate abscissa.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return f64::NAN;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_a_line() {
        let xs = [8.0, 16.0, 32.0, 64.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.25 * x).collect();
        assert!((ols_slope(&xs, &ys) + 0.25).abs() < 1e-12);
        assert!(ols_slope(&[1.0], &[2.0]).is_nan());
    }

    #[test]
    fn log_relative_difference_excludes_reference() {
        let est = |mean: f64| Estimate {
            mean,
            stderr: 0.0,
            n_trees: 2,
            mean_tree_size: 1.0,
            max_tree_size: 1,
        };
        let rep = ConvergenceReport {
            inventories: vec![0],
            reference_n: 4,
            rows: vec![
                ConvergenceRow { n: 1, estimates: vec![est(1.5)] },
                ConvergenceRow { n: 2, estimates: vec![est(1.1)] },
                ConvergenceRow { n: 4, estimates: vec![est(1.0)] },
            ],
        };
        let d = rep.log_relative_differences();
        assert_eq!(d.len(), 2);
        assert!((d[0].1[0] - 0.5f64.ln()).abs() < 1e-12);
        assert!((d[1].1[0] - 0.1f64.ln()).abs() < 1e-9);
        assert!(rep.slopes()[0] < 0.0);
    }
}
