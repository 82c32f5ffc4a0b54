//! Controlled bid/ask Hawkes order flows in the exponential-sum Markovian
//! representation.

mod compensator;
mod intensity;
mod price;
mod simulate;
mod state;

pub use compensator::compensator_increments;
pub use intensity::{IntensitySpec, RateMap};
pub use price::simulate_price;
pub use simulate::{
    simulate, ConstantSpread, Controller, Event, EventLog, SimConfig, SimOutput, DEFAULT_MAX_EVENTS,
};
pub use state::{MarketState, Side};
