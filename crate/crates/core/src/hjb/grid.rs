use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ExpSumKernel;
use crate::scalar::Scalar;

fn one() -> usize {
    1
}

/// Discretization and model parameters of the finite-dimensional HJB
/// equation for the inventory-penalty problem.
///
/// The state is `(i, c^a, c^b)` with `i ∈ [i_min, i_max]` and each memory
/// coordinate `c_d ∈ [0, c_max[d]]` on `m_c` uniform nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "S: Scalar"))]
pub struct GridSpec<S> {
    pub i_min: i64,
    pub i_max: i64,
    pub c_max: Vec<S>,
    pub m_c: usize,
    pub dt: S,
    pub horizon: S,
    #[serde(default)]
    pub discount: S,
    pub mu_penalty: S,
    pub k_over_sigma: S,
    pub mu_base: S,
    pub kernel: ExpSumKernel<S>,
    /// Store every `snapshot_stride`-th time slice (the initial and terminal
    /// slices are always kept).
    #[serde(default = "one")]
    pub snapshot_stride: usize,
}

impl<S: Scalar> GridSpec<S> {
    /// Builds a spec with the largest stable step (times `safety`) and
    /// snapshots at every step.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        i_bound: i64,
        c_max: Vec<S>,
        m_c: usize,
        horizon: S,
        mu_penalty: S,
        k_over_sigma: S,
        mu_base: S,
        kernel: ExpSumKernel<S>,
    ) -> Result<Self> {
        let mut spec = Self {
            i_min: -i_bound,
            i_max: i_bound,
            c_max,
            m_c,
            dt: horizon,
            horizon,
            discount: S::zero(),
            mu_penalty,
            k_over_sigma,
            mu_base,
            kernel,
            snapshot_stride: 1,
        };
        spec.dt = (spec.stable_dt()? * S::lit(0.95)).min(horizon);
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.kernel.len()
    }

    pub fn inventory_count(&self) -> usize {
        (self.i_max - self.i_min + 1) as usize
    }

    /// Nodes per side: `m_c^n`.
    pub fn side_nodes(&self) -> usize {
        self.m_c.pow(self.dim() as u32)
    }

    pub fn cells(&self) -> usize {
        let p = self.side_nodes();
        self.inventory_count() * p * p
    }

    pub fn steps(&self) -> usize {
        let r = (self.horizon / self.dt).to_f64().unwrap_or(f64::INFINITY);
        ((r - 1e-9).ceil() as usize).max(1)
    }

    /// Step actually used: the horizon split into `steps()` equal pieces.
    pub fn effective_dt(&self) -> S {
        self.horizon / S::from_usize_lossy(self.steps())
    }

    pub fn mesh(&self, d: usize) -> S {
        self.c_max[d] / S::from_usize_lossy(self.m_c - 1)
    }

    /// Largest phi reachable on the grid: `μ + Σ c_max`.
    pub fn max_rate(&self) -> S {
        self.mu_base + self.c_max.iter().copied().sum::<S>()
    }

    /// The explicit scheme is monotone when
    /// `dt (r + Σ_{both sides, d} γ_d c_max_d / Δc_d + 2 sup phi) ≤ 1`.
    pub fn stability_rate(&self) -> S {
        let mut rate = self.discount + S::two() * self.max_rate();
        for d in 0..self.dim() {
            rate = rate + S::two() * self.kernel.rates()[d] * self.c_max[d] / self.mesh(d);
        }
        rate
    }

    pub fn stable_dt(&self) -> Result<S> {
        self.validate_geometry()?;
        Ok(self.stability_rate().recip())
    }

    fn validate_geometry(&self) -> Result<()> {
        let n = self.dim();
        if !(self.i_min < 0 && 0 < self.i_max) {
            return Err(Error::config(format!(
                "inventory bounds must satisfy i_min < 0 < i_max, got [{}, {}]",
                self.i_min, self.i_max
            )));
        }
        if self.c_max.len() != n {
            return Err(Error::config(format!(
                "c_max has {} entries but the kernel has {n} terms",
                self.c_max.len()
            )));
        }
        if n > 0 && self.m_c < 2 {
            return Err(Error::config("m_c must be at least 2"));
        }
        for (d, (&cm, &w)) in self.c_max.iter().zip(self.kernel.weights()).enumerate() {
            if !(cm > w) || !cm.is_finite() {
                return Err(Error::config(format!(
                    "c_max[{d}] = {cm} must exceed the kernel weight {w}"
                )));
            }
        }
        let positive = [
            ("horizon", self.horizon),
            ("dt", self.dt),
            ("k_over_sigma", self.k_over_sigma),
        ];
        for (name, v) in positive {
            if !(v > S::zero()) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("discount", self.discount),
            ("mu_penalty", self.mu_penalty),
            ("mu_base", self.mu_base),
        ];
        for (name, v) in nonneg {
            if !(v >= S::zero()) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.snapshot_stride == 0 {
            return Err(Error::config("snapshot_stride must be at least 1"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_geometry()?;
        let lhs = self.effective_dt() * self.stability_rate();
        if lhs > S::one() + S::lit(1e-12) {
            return Err(Error::Instability(format!(
                "dt (r + Σ γ c_max/Δc + 2 sup phi) = {lhs} > 1; use dt ≤ {}",
                self.stability_rate().recip()
            )));
        }
        Ok(())
    }

    pub fn with_snapshot_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }
}

/// Precomputed index arithmetic for a [`GridSpec`].
///
/// Cells are laid out as `(i - i_min, a, b)` with `a`, `b` the flattened
/// multi-indices of the ask and bid memories (dimension 0 fastest).
#[derive(Debug, Clone)]
pub struct Geometry<S> {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub n_inv: usize,
    pub i_min: i64,
    pub mesh: Vec<S>,
    /// `p × n` node coordinates.
    pub coords: Vec<S>,
    /// `Σ_d c_d` per side node.
    pub excitation: Vec<S>,
    /// Per side node, `2^n` (node, weight) pairs interpolating `c + α`.
    pub jump: Vec<(usize, S)>,
    pub corners: usize,
    /// Per side node and dimension: (lower neighbour, `γ_d c_d / Δc_d`).
    pub drift: Vec<(usize, S)>,
    strides: Vec<usize>,
}

impl<S: Scalar> Geometry<S> {
    pub fn new(spec: &GridSpec<S>) -> Self {
        let n = spec.dim();
        let m = if n == 0 { 1 } else { spec.m_c };
        let p = m.pow(n as u32);
        let strides: Vec<usize> = (0..n).map(|d| m.pow(d as u32)).collect();
        let mesh: Vec<S> = (0..n).map(|d| spec.mesh(d)).collect();
        let mut coords = Vec::with_capacity(p * n);
        let mut excitation = Vec::with_capacity(p);
        let mut drift = Vec::with_capacity(p * n);
        for node in 0..p {
            let mut sum = S::zero();
            for d in 0..n {
                let k = (node / strides[d]) % m;
                let c = S::from_usize_lossy(k) * mesh[d];
                coords.push(c);
                sum = sum + c;
                if k == 0 {
                    drift.push((node, S::zero()));
                } else {
                    drift.push((node - strides[d], spec.kernel.rates()[d] * c / mesh[d]));
                }
            }
            excitation.push(sum);
        }
        let corners = 1usize << n;
        let mut jump = Vec::with_capacity(p * corners);
        let mut scratch = Vec::with_capacity(corners);
        let mut target = vec![S::zero(); n];
        for node in 0..p {
            for d in 0..n {
                target[d] = coords[node * n + d] + spec.kernel.weights()[d];
            }
            interpolate_into(&target, &mesh, m, &strides, spec, &mut scratch);
            jump.extend_from_slice(&scratch);
        }
        Self {
            n,
            m,
            p,
            n_inv: spec.inventory_count(),
            i_min: spec.i_min,
            mesh,
            coords,
            excitation,
            jump,
            corners,
            drift,
            strides,
        }
    }

    pub fn cells(&self) -> usize {
        self.n_inv * self.p * self.p
    }

    #[inline]
    pub fn index(&self, ii: usize, a: usize, b: usize) -> usize {
        (ii * self.p + a) * self.p + b
    }

    pub fn node_coords(&self, node: usize) -> &[S] {
        &self.coords[node * self.n..(node + 1) * self.n]
    }

    pub fn jump_stencil(&self, node: usize) -> &[(usize, S)] {
        &self.jump[node * self.corners..(node + 1) * self.corners]
    }

    pub fn drift_stencil(&self, node: usize) -> &[(usize, S)] {
        &self.drift[node * self.n..(node + 1) * self.n]
    }

    pub fn inventory(&self, ii: usize) -> i64 {
        self.i_min + ii as i64
    }

    /// Row of the inventory, clamped to the grid.
    pub fn inventory_row(&self, i: i64) -> usize {
        (i - self.i_min).clamp(0, self.n_inv as i64 - 1) as usize
    }

    /// Multilinear stencil of an arbitrary memory vector, clamped to the box.
    pub fn side_stencil(&self, spec: &GridSpec<S>, c: &[S], out: &mut Vec<(usize, S)>) {
        interpolate_into(c, &self.mesh, self.m, &self.strides, spec, out);
    }

    /// Stencil of a full off-grid state, reusable across fields.
    pub fn stencil(&self, spec: &GridSpec<S>, inventory: i64, c_ask: &[S], c_bid: &[S]) -> Stencil<S> {
        let mut st = Stencil {
            row: self.inventory_row(inventory),
            ask: StackStencil::new(),
            bid: StackStencil::new(),
        };
        st.ask.fill(c_ask, &self.mesh, self.m, &self.strides, spec);
        st.bid.fill(c_bid, &self.mesh, self.m, &self.strides, spec);
        st
    }

    pub fn apply(&self, st: &Stencil<S>, field: &[S]) -> S {
        let mut acc = S::zero();
        for &(a, wa) in st.ask.as_slice() {
            let mut inner = S::zero();
            for &(b, wb) in st.bid.as_slice() {
                inner = inner + wb * field[self.index(st.row, a, b)];
            }
            acc = acc + wa * inner;
        }
        acc
    }

    /// Multilinear interpolation of a per-cell field at an off-grid state.
    pub fn interpolate(&self, spec: &GridSpec<S>, field: &[S], inventory: i64, c_ask: &[S], c_bid: &[S]) -> S {
        let st = self.stencil(spec, inventory, c_ask, c_bid);
        self.apply(&st, field)
    }

    /// Nearest node of a memory vector (for exact lookups of grid states).
    pub fn nearest_node(&self, spec: &GridSpec<S>, c: &[S]) -> usize {
        let mut node = 0;
        for (d, &cd) in c.iter().enumerate().take(self.n) {
            let x = (cd.min(spec.c_max[d]).max(S::zero()) / self.mesh[d]).round();
            node += x.to_usize().unwrap_or(0).min(self.m - 1) * self.strides[d];
        }
        node
    }
}

/// Largest memory dimension interpolated without allocating.
pub const STACK_DIM: usize = 6;

#[derive(Debug, Clone, Copy)]
pub struct StackStencil<S> {
    len: usize,
    data: [(usize, S); 1 << STACK_DIM],
}

impl<S: Scalar> StackStencil<S> {
    fn new() -> Self {
        Self {
            len: 0,
            data: [(0, S::zero()); 1 << STACK_DIM],
        }
    }

    fn fill(&mut self, c: &[S], mesh: &[S], m: usize, strides: &[usize], spec: &GridSpec<S>) {
        assert!(c.len() <= STACK_DIM, "memory dimension {} exceeds {STACK_DIM}", c.len());
        self.data[0] = (0, S::one());
        self.len = 1;
        for d in 0..c.len() {
            let (lo, w) = locate(c[d], mesh[d], m, spec.c_max[d]);
            for k in 0..self.len {
                let (node, weight) = self.data[k];
                self.data[k] = (node + lo * strides[d], weight * (S::one() - w));
                self.data[k + self.len] = (node + (lo + 1) * strides[d], weight * w);
            }
            self.len *= 2;
        }
    }

    pub fn as_slice(&self) -> &[(usize, S)] {
        &self.data[..self.len]
    }
}

/// Interpolation weights of one off-grid state.
#[derive(Debug, Clone, Copy)]
pub struct Stencil<S> {
    pub row: usize,
    pub ask: StackStencil<S>,
    pub bid: StackStencil<S>,
}

#[inline]
fn locate<S: Scalar>(c: S, mesh: S, m: usize, c_max: S) -> (usize, S) {
    let x = c.max(S::zero()).min(c_max) / mesh;
    let lo = x.floor().to_usize().unwrap_or(0).min(m - 2);
    (lo, x - S::from_usize_lossy(lo))
}

fn interpolate_into<S: Scalar>(
    c: &[S],
    mesh: &[S],
    m: usize,
    strides: &[usize],
    spec: &GridSpec<S>,
    out: &mut Vec<(usize, S)>,
) {
    out.clear();
    out.push((0, S::one()));
    for d in 0..c.len() {
        let (lo, w) = locate(c[d], mesh[d], m, spec.c_max[d]);
        let len = out.len();
        for k in 0..len {
            let (node, weight) = out[k];
            out[k] = (node + lo * strides[d], weight * (S::one() - w));
            out.push((node + (lo + 1) * strides[d], weight * w));
        }
    }
}
