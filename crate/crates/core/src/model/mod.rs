//! Asymmetric weak-coherent-pulse MDI-QKD key-rate model.
//!
//! Every function here is pure and thread-safe.

mod channel;
mod decoy;
mod gains;
mod params;
mod rate;

pub use channel::{binary_entropy, channel_transmittance};
pub use decoy::{decoy_bounds, DecoyEstimate, DecoyIntensities, GainBounds, YieldTable};
pub use gains::{gains_and_errors, intensity, selection_probability, Basis, BasisGains, GainTable, Setting};
pub use params::{
    CharlieConditions, Misalignment, ProtocolParams, UserConditions, UserSettings, PARAM_DIM, PARAM_NAMES,
    USER_DIM,
};
pub use rate::{key_rate, observed_stats, observed_summary, ObservedStats, ObservedSummary};
