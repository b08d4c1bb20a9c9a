//! Toolkit for asymmetric MDI-QKD star networks: key-rate modeling,
//! black-box parameter optimization, neural-network parameter prediction and
//! drift calibration, plus a network provisioning simulator.

pub mod config;
pub mod error;
pub mod exec;
pub mod model;
pub mod neural;
pub mod dataset;
pub mod netsim;
pub mod optimize;

pub use error::{Error, Result};
pub use exec::Execution;
