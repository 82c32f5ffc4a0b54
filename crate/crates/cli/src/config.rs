use std::fs;
use std::path::{Path, PathBuf};

use hawkes_mm::hawkes::{IntensitySpec, MarketState};
use hawkes_mm::hjb::GridSpec;
use hawkes_mm::kernels::{ExpSumKernel, InversionMethod, KernelSpec};
use hawkes_mm::marketsim::{ComparisonConfig, ConvergenceConfig};
use hawkes_mm::{Error, Result};
use serde::{Deserialize, Serialize};

/// Whole-run configuration; each subcommand reads the sections it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stochastic section runs on it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<IntensitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particle: Option<ConvergenceConfig<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonConfig<f64>>,
}

fn unit() -> f64 {
    1.0
}

fn default_ns() -> Vec<usize> {
    vec![16, 64, 256]
}

fn default_penalty() -> f64 {
    0.1
}

fn default_k_over_sigma() -> f64 {
    20.0
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub target: KernelSpec<f64>,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default)]
    pub inversion: InversionMethod,
    /// Sup-norm errors are measured on `[0, horizon]`.
    #[serde(default = "unit")]
    pub horizon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensitySection {
    pub mu: f64,
    #[serde(default = "default_k_over_sigma")]
    pub k_over_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<ExpSumKernel<f64>>,
    /// A kernel JSON as written by `kernel-approx`; relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub i_bound: i64,
    /// One bound per memory coordinate, or a single bound for all.
    pub c_max: Vec<f64>,
    pub m_c: usize,
    #[serde(default = "unit")]
    pub horizon: f64,
    #[serde(default = "default_penalty")]
    pub mu_penalty: f64,
    #[serde(default)]
    pub discount: f64,
    /// Defaults to 95% of the largest stable step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default)]
    pub inventory: i64,
    #[serde(default)]
    pub c_ask: Option<Vec<f64>>,
    #[serde(default)]
    pub c_bid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSection {
    Constant { ask: f64, bid: f64 },
    /// The feedback of `solve` on the grid section.
    Optimal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "unit")]
    pub horizon: f64,
    #[serde(default = "default_penalty")]
    pub mu_penalty: f64,
    pub initial: Option<InitialState>,
    pub control: ControlSection,
    #[serde(default = "one")]
    pub n_episodes: usize,
}

fn missing(section: &str) -> Error {
    Error::Config(format!("the configuration has no `{section}` section"))
}

impl ExperimentConfig {
    /// Parses a config file, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(file) = cfg.intensity.as_mut().and_then(|s| s.kernel_file.as_mut()) {
            if file.is_relative() {
                *file = base.join(&*file);
            }
        }
        Ok(cfg)
    }

    /// Pushes the master seed into every stochastic section.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let Some(p) = self.particle.as_mut() {
            p.seed = seed;
        }
        if let Some(c) = self.comparison.as_mut() {
            c.seed = seed;
        }
    }

    pub fn kernel_section(&self) -> Result<&KernelSection> {
        self.kernel.as_ref().ok_or_else(|| missing("kernel"))
    }

    pub fn particle_section(&self) -> Result<&ConvergenceConfig<f64>> {
        self.particle.as_ref().ok_or_else(|| missing("particle"))
    }

    pub fn comparison_section(&self) -> Result<&ComparisonConfig<f64>> {
        self.comparison.as_ref().ok_or_else(|| missing("comparison"))
    }

    pub fn simulation_section(&self) -> Result<&SimulationSection> {
        self.simulation.as_ref().ok_or_else(|| missing("simulation"))
    }

    pub fn intensity_spec(&self) -> Result<IntensitySpec<f64>> {
        let s = self.intensity.as_ref().ok_or_else(|| missing("intensity"))?;
        let kernel = match (&s.kernel, &s.kernel_file) {
            (Some(k), None) => k.clone(),
            (None, Some(file)) => read_kernel(file)?,
            _ => return Err(Error::Config("intensity needs exactly one of `kernel` and `kernel_file`".into())),
        };
        IntensitySpec::new(s.mu, kernel, s.k_over_sigma).map_err(as_config)
    }

    pub fn grid_spec(&self) -> Result<GridSpec<f64>> {
        let g = self.grid.as_ref().ok_or_else(|| missing("grid"))?;
        let spec = self.intensity_spec()?;
        let n = spec.kernel.len();
        let c_max = match g.c_max.len() {
            1 => vec![g.c_max[0]; n],
            len if len == n => g.c_max.clone(),
            len => return Err(Error::Config(format!("grid.c_max has {len} entries for {n} memory coordinates"))),
        };
        let mut grid = GridSpec::new(
            g.i_bound,
            c_max,
            g.m_c,
            g.horizon,
            g.mu_penalty,
            spec.k_over_sigma,
            spec.mu,
            spec.kernel,
        )
        .map_err(as_config)?
        .with_snapshot_stride(g.snapshot_stride);
        grid.discount = g.discount;
        if let Some(dt) = g.dt {
            grid.dt = dt;
        }
        grid.validate()?;
        Ok(grid)
    }

    pub fn initial_state(&self, n: usize) -> Result<MarketState<f64>> {
        let s = self.simulation_section()?;
        let Some(init) = &s.initial else {
            return Ok(MarketState::flat(n, 0));
        };
        let c_ask = init.c_ask.clone().unwrap_or_else(|| vec![0.0; n]);
        let c_bid = init.c_bid.clone().unwrap_or_else(|| vec![0.0; n]);
        if c_ask.len() != n || c_bid.len() != n {
            return Err(Error::Config(format!("initial memories must have {n} coordinates")));
        }
        MarketState::new(init.inventory, c_ask, c_bid, 0.0).map_err(as_config)
    }
}

/// Reads an exponential-sum kernel from a JSON file, tagged or bare.
pub fn read_kernel(path: &Path) -> Result<ExpSumKernel<f64>> {
    let text = fs::read_to_string(path)?;
    if let Ok(spec) = serde_json::from_str::<KernelSpec<f64>>(&text) {
        return match spec {
            KernelSpec::ExpSum(k) => Ok(k),
            KernelSpec::PowerLaw(_) => Err(Error::Config(format!(
                "{}: a power-law kernel must be approximated by `kernel-approx` first",
                path.display()
            ))),
        };
    }
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Invalid parameters that reached a constructor are configuration errors.
fn as_config(e: Error) -> Error {
    match e {
        Error::Domain(m) | Error::Precondition(m) => Error::Config(m),
        other => other,
    }
}
