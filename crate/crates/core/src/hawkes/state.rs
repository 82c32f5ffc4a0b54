use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ExpSumKernel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// A buy market order lifting the maker's ask; inventory decreases.
    Ask,
    /// A sell market order hitting the maker's bid; inventory increases.
    Bid,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Ask, Side::Bid];

    pub fn index(self) -> usize {
        match self {
            Side::Ask => 0,
            Side::Bid => 1,
        }
    }

    /// Inventory change when the maker is filled on this side.
    pub fn inventory_step(self) -> i64 {
        match self {
            Side::Ask => -1,
            Side::Bid => 1,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Ask => Side::Bid,
            Side::Bid => Side::Ask,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Ask => "ask",
            Side::Bid => "bid",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ask" => Ok(Side::Ask),
            "bid" => Ok(Side::Bid),
            other => Err(Error::domain(format!("unknown side {other:?}"))),
        }
    }
}

/// Inventory plus the per-exponential intensity memory of both order flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct MarketState<S> {
    pub inventory: i64,
    pub c_ask: Vec<S>,
    pub c_bid: Vec<S>,
    pub clock: S,
}

impl<S: Scalar> MarketState<S> {
    /// Flat state: no excitation, given inventory, clock at zero.
    pub fn flat(n: usize, inventory: i64) -> Self {
        Self {
            inventory,
            c_ask: vec![S::zero(); n],
            c_bid: vec![S::zero(); n],
            clock: S::zero(),
        }
    }

    pub fn new(inventory: i64, c_ask: Vec<S>, c_bid: Vec<S>, clock: S) -> Result<Self> {
        if c_ask.len() != c_bid.len() {
            return Err(Error::domain("ask and bid memories differ in dimension"));
        }
        if c_ask.iter().chain(&c_bid).any(|c| !(*c >= S::zero()) || !c.is_finite()) {
            return Err(Error::domain("intensity memory must be finite and nonnegative"));
        }
        Ok(Self {
            inventory,
            c_ask,
            c_bid,
            clock,
        })
    }

    pub fn dim(&self) -> usize {
        self.c_ask.len()
    }

    pub fn memory(&self, side: Side) -> &[S] {
        match side {
            Side::Ask => &self.c_ask,
            Side::Bid => &self.c_bid,
        }
    }

    fn memory_mut(&mut self, side: Side) -> &mut Vec<S> {
        match side {
            Side::Ask => &mut self.c_ask,
            Side::Bid => &mut self.c_bid,
        }
    }

    /// Total excitation `Σ_i c_i` on one side.
    pub fn excitation(&self, side: Side) -> S {
        self.memory(side).iter().copied().sum()
    }

    /// Exact decay over `dt ≥ 0`: `c_i ← c_i e^{-γ_i dt}`; inventory is unchanged.
    pub fn advance(&mut self, kernel: &ExpSumKernel<S>, dt: S) {
        debug_assert!(dt >= S::zero());
        debug_assert_eq!(kernel.len(), self.dim());
        if dt == S::zero() {
            return;
        }
        for (i, &g) in kernel.rates().iter().enumerate() {
            let f = (-g * dt).exp();
            self.c_ask[i] = self.c_ask[i] * f;
            self.c_bid[i] = self.c_bid[i] * f;
        }
        self.clock = self.clock + dt;
    }

    pub fn advanced(&self, kernel: &ExpSumKernel<S>, dt: S) -> Self {
        let mut s = self.clone();
        s.advance(kernel, dt);
        s
    }

    /// A market order on `side`: memory jumps by the kernel weights and the
    /// inventory moves one unit.
    pub fn apply_event(&mut self, kernel: &ExpSumKernel<S>, side: Side) {
        debug_assert_eq!(kernel.len(), self.dim());
        for (c, &w) in self.memory_mut(side).iter_mut().zip(kernel.weights()) {
            *c = *c + w;
        }
        self.inventory += side.inventory_step();
    }

    pub fn with_event(&self, kernel: &ExpSumKernel<S>, side: Side) -> Self {
        let mut s = self.clone();
        s.apply_event(kernel, side);
        s
    }
}
