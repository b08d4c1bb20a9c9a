//! Discrete-time simulation of a star network: users join and get
//! parameters for every new pair, pair misalignments drift, and pairs are
//! periodically recalibrated from their own statistics.
//!
//! A scenario run is single-threaded apart from estimator training and fully
//! determined by its seed.

mod drift;
mod scenario;
mod state;

pub use drift::{reflect, DriftModel};
pub use scenario::{run_scenario, JoinKind, ScenarioConfig, ScenarioReport, TickMetrics, METRICS_HEADER};
pub use state::{
    pair_key, CalibrationReport, JoinReport, JoinStrategy, NetUser, NetworkState, PairEntry, PairKey, UserId,
};
