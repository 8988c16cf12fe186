//! Non-orthogonal multi-beam transmission for massive access with a
//! large uniform linear array: beamspace channel model, angular NOMA
//! clustering, rate evaluation and bounds, WMMSE beam design and an
//! experiment harness.

pub mod beamdesign;
pub mod channel;
pub mod clustering;
pub mod error;
pub mod rates;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
