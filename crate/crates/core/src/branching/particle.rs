use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::{MarketState, Side};
use crate::scalar::Scalar;

use super::poly::{Coeffs, GeneratorPoly};

pub const DEFAULT_MAX_PARTICLES: usize = 1_000_000;

/// Branch type of a particle: which term of the polynomial it represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchLabel {
    /// `f0`: no children.
    Constant,
    /// `f1 U`: one child in place.
    Linear,
    /// `f2_{degree} (D_side U)^{degree}` expanded over `ε ∈ {0,1}^degree`:
    /// child `k` jumps iff bit `k` of `eps` is set, and each unset bit
    /// contributes a factor −1.
    Jump { side: Side, degree: u8, eps: u8 },
}

impl BranchLabel {
    pub fn children(&self) -> usize {
        match self {
            Self::Constant => 0,
            Self::Linear => 1,
            Self::Jump { degree, .. } => *degree as usize,
        }
    }

    /// `Π_k (−1)^{1−ε_k}`.
    pub fn sign(&self) -> i32 {
        match self {
            Self::Jump { degree, eps, .. } => {
                let unset = *degree as u32 - eps.count_ones();
                if unset.is_multiple_of(2) {
                    1
                } else {
                    -1
                }
            }
            _ => 1,
        }
    }

    fn coefficient<S: Scalar>(&self, c: &Coeffs<S>) -> S {
        match self {
            Self::Constant => c.f0,
            Self::Linear => c.f1,
            Self::Jump { side, degree: 1, .. } => c.f21[side.index()],
            Self::Jump { side, .. } => c.f22[side.index()],
        }
    }
}

/// Labels of the terms present in `poly`, in a fixed order.
pub fn labels<S: Scalar>(poly: &GeneratorPoly<S>) -> Vec<BranchLabel> {
    let t = poly.terms;
    let mut out = Vec::new();
    if t.constant {
        out.push(BranchLabel::Constant);
    }
    if t.linear {
        out.push(BranchLabel::Linear);
    }
    for side in Side::BOTH {
        if t.first[side.index()] {
            for eps in 0..2 {
                out.push(BranchLabel::Jump { side, degree: 1, eps });
            }
        }
        if t.second[side.index()] {
            for eps in 0..4 {
                out.push(BranchLabel::Jump { side, degree: 2, eps });
            }
        }
    }
    out
}

/// Uniform draw over the label set; returns the label and its probability.
pub fn sample_label<R: Rng + ?Sized>(rng: &mut R, labels: &[BranchLabel]) -> Result<(BranchLabel, f64)> {
    if labels.is_empty() {
        return Err(Error::precondition("the generator has no terms to branch on"));
    }
    let k = rng.random_range(0..labels.len());
    Ok((labels[k], 1.0 / labels.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "S: Scalar"))]
pub struct ParticleConfig<S> {
    /// Rate of the exponential lifetime density; defaults to `1/horizon`.
    #[serde(default)]
    pub lifetime_rate: Option<S>,
    #[serde(default = "default_max_particles")]
    pub max_particles: usize,
    pub horizon: S,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_particles() -> usize {
    DEFAULT_MAX_PARTICLES
}

impl<S: Scalar> ParticleConfig<S> {
    pub fn new(horizon: S, seed: u64) -> Self {
        Self {
            lifetime_rate: None,
            max_particles: DEFAULT_MAX_PARTICLES,
            horizon,
            seed,
        }
    }

    pub fn rate(&self) -> S {
        self.lifetime_rate.unwrap_or_else(|| self.horizon.recip())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > S::zero()) {
            return Err(Error::config("particle horizon must be positive"));
        }
        let r = self.rate();
        if !(r > S::zero()) || !r.is_finite() {
            return Err(Error::config(format!("lifetime rate must be positive, got {r}")));
        }
        if self.max_particles == 0 {
            return Err(Error::config("max_particles must be positive"));
        }
        Ok(())
    }
}

/// Bookkeeping of one tree.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TreeStats {
    pub particles: usize,
    pub branchings: usize,
    /// `Σ ln(1/P(label))` over branchings.
    pub log_inverse_label_prob: f64,
}

struct Tree<'a, S: Scalar> {
    poly: &'a GeneratorPoly<S>,
    labels: &'a [BranchLabel],
    rate: S,
    horizon: S,
    max_particles: usize,
    stats: TreeStats,
}

impl<S: Scalar> Tree<'_, S> {
    fn particle<R: Rng>(&mut self, t: S, state: &MarketState<S>, rng: &mut R) -> Result<S> {
        self.stats.particles += 1;
        if self.stats.particles > self.max_particles {
            return Err(Error::Supercritical {
                max_particles: self.max_particles,
            });
        }
        let u: f64 = rng.random();
        let tau = S::lit(-(1.0 - u).ln()) / self.rate;
        let born = t + tau;
        if born >= self.horizon {
            // terminal condition is zero
            return Ok(S::zero());
        }
        let here = state.advanced(&self.poly.kernel, tau);
        let (label, prob) = sample_label(rng, self.labels)?;
        self.stats.branchings += 1;
        self.stats.log_inverse_label_prob -= prob.ln();
        let coeffs = self.poly.coefficients(born, here.inventory, &here.c_ask, &here.c_bid);
        let coef = label.coefficient(&coeffs);
        let density = self.rate * (-self.rate * tau).exp();
        let mut weight = coef / (S::lit(prob) * density);
        if label.sign() < 0 {
            weight = -weight;
        }
        match label {
            BranchLabel::Constant => Ok(weight),
            BranchLabel::Linear => Ok(weight * self.particle(born, &here, rng)?),
            BranchLabel::Jump { side, degree, eps } => {
                let mut prod = weight;
                for k in 0..degree {
                    let child = if eps >> k & 1 == 1 {
                        here.with_event(&self.poly.kernel, side)
                    } else {
                        here.clone()
                    };
                    prod = prod * self.particle(born, &child, rng)?;
                }
                Ok(prod)
            }
        }
    }
}

/// One tree's estimate of `U(t, state)`; `rng` drives every draw.
pub fn run_particle<S, R>(
    t: S,
    state: &MarketState<S>,
    poly: &GeneratorPoly<S>,
    cfg: &ParticleConfig<S>,
    rng: &mut R,
) -> Result<(S, TreeStats)>
where
    S: Scalar,
    R: Rng,
{
    cfg.validate()?;
    if !(t < cfg.horizon) {
        return Err(Error::domain(format!("t = {t} must be before the horizon {}", cfg.horizon)));
    }
    if state.dim() != poly.kernel.len() {
        return Err(Error::domain("state and generator kernel dimensions differ"));
    }
    let labels = labels(poly);
    if labels.is_empty() {
        return Ok((S::zero(), TreeStats::default()));
    }
    let mut tree = Tree {
        poly,
        labels: &labels,
        rate: cfg.rate(),
        horizon: cfg.horizon,
        max_particles: cfg.max_particles,
        stats: TreeStats::default(),
    };
    let v = tree.particle(t, state, rng)?;
    Ok((v, tree.stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_trees: usize,
    pub mean_tree_size: f64,
    pub max_tree_size: usize,
}

impl Estimate {
    pub const CSV_HEADER_TAIL: &'static str = "mean,stderr,n_trees,mean_tree_size";
}

/// Per-tree generator: tree `k` uses stream `k` of the master seed, so
/// estimates do not depend on the thread count and runs sharing a seed
/// share their random numbers.
pub fn tree_rng(seed: u64, tree: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree);
    rng
}

/// Monte Carlo estimate of `U(t, state)` over `n_trees` independent trees.
pub fn estimate_u<S: Scalar>(
    t: S,
    state: &MarketState<S>,
    poly: &GeneratorPoly<S>,
    cfg: &ParticleConfig<S>,
    n_trees: usize,
) -> Result<Estimate> {
    if n_trees < 2 {
        return Err(Error::precondition("need at least two trees for a standard error"));
    }
    let samples: Vec<(f64, usize)> = (0..n_trees as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = tree_rng(cfg.seed, k);
            run_particle(t, state, poly, cfg, &mut rng).map(|(v, s)| (v.as_f64(), s.particles))
        })
        .collect::<Result<_>>()
        .map_err(|e| match e {
            Error::Supercritical { max_particles } => Error::Numerical(format!(
                "a tree exceeded {max_particles} particles; reduce the horizon or the lifetime rate"
            )),
            other => other,
        })?;
    let n = n_trees as f64;
    let mean = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let var = samples.iter().map(|s| (s.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sizes: usize = samples.iter().map(|s| s.1).sum();
    Ok(Estimate {
        mean,
        stderr: (var / n).sqrt(),
        n_trees,
        mean_tree_size: sizes as f64 / n,
        max_tree_size: samples.iter().map(|s| s.1).max().unwrap_or(0),
    })
}
