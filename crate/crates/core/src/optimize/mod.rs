//! Black-box maximization of the key rate over the protocol parameters.

mod lsa;
mod pair;
mod pso;
mod space;

pub use lsa::{local_improvements, lsa_maximize, LsaConfig, LsaOutcome};
pub use pair::{lsa_optimize, optimize_pair, param_improvements, pso_optimize, rate_objective, search_objective, ParamSearch, Strategy};
pub use pso::{pso_maximize, PsoConfig, PsoOutcome};
pub use space::{default_param_bounds, repair, symmetric_project, Bounds, SearchMode};
