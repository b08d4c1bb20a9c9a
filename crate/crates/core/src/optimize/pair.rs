use super::lsa::{local_improvements, lsa_maximize, LsaConfig};
use super::pso::{pso_maximize, PsoConfig};
use super::space::{repair, Bounds, SearchMode};
use crate::model::{key_rate, observed_stats, CharlieConditions, Misalignment, ProtocolParams, UserConditions};
use crate::Result;

/// Result of a parameter search.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSearch {
    pub params: ProtocolParams,
    pub rate: f64,
    pub evals: usize,
    pub converged: bool,
    /// Step (normalized units) at which local search last completed a sweep
    /// without accepting a move; `None` if no local search ran last.
    pub final_step: Option<f64>,
}

/// Key rate at a fixed operating point, with model errors mapped to zero so
/// searches stay total.
pub fn rate_objective<'a>(
    charlie: &'a CharlieConditions,
    users: &'a UserConditions,
    mis: &'a Misalignment,
) -> impl Fn(&ProtocolParams) -> f64 + Sync + Send + 'a {
    move |p| key_rate(p, charlie, users, mis).unwrap_or(0.0)
}

/// Search objective: the key rate where it is positive, otherwise the
/// (non-positive) secrecy margin, so that points without key are still
/// ranked. Model errors score below every valid point.
pub fn search_objective<'a>(
    charlie: &'a CharlieConditions,
    users: &'a UserConditions,
    mis: &'a Misalignment,
) -> impl Fn(&ProtocolParams) -> f64 + Sync + Send + 'a {
    move |p| match observed_stats(p, charlie, users, mis) {
        Ok(s) if s.signed_rate > 0.0 => s.signed_rate,
        Ok(s) => s.margin.min(0.0),
        Err(_) => -2.0,
    }
}

/// Local search over the parameters of `mode`. `config.bounds` are the
/// sixteen per-field parameter bounds.
pub fn lsa_optimize<F>(objective: F, initial: &ProtocolParams, mode: SearchMode, config: &LsaConfig) -> Result<ParamSearch>
where
    F: Fn(&ProtocolParams) -> f64,
{
    let bounds = mode.bounds(&config.bounds)?;
    let start = match mode {
        SearchMode::Asymmetric => *initial,
        SearchMode::Symmetric => super::space::symmetric_project(initial),
    };
    start.validate()?;
    let inner = LsaConfig {
        bounds,
        ..config.clone()
    };
    let out = lsa_maximize(
        |v| objective(&mode.decode(v)),
        |v| mode.decode(v).is_valid(),
        &mode.encode(&start),
        &inner,
    )?;
    Ok(ParamSearch {
        params: mode.decode(&out.point),
        rate: out.value,
        evals: out.evals,
        converged: out.converged,
        final_step: Some(out.final_step),
    })
}

/// Particle swarm over the parameters of `mode`; positions are repaired into
/// the feasible set before evaluation.
pub fn pso_optimize<F>(objective: F, mode: SearchMode, config: &PsoConfig) -> Result<ParamSearch>
where
    F: Fn(&ProtocolParams) -> f64 + Sync + Send,
{
    let bounds = mode.bounds(&config.bounds)?;
    let inner = PsoConfig {
        bounds: bounds.clone(),
        ..config.clone()
    };
    let out = pso_maximize(
        |v| objective(&mode.decode(v)),
        |v| repair(mode, &bounds, v),
        &inner,
    )?;
    Ok(ParamSearch {
        params: mode.decode(&out.point),
        rate: out.value,
        evals: out.evals,
        converged: true,
        final_step: None,
    })
}

/// Single-coordinate `±step` moves (normalized units, within
/// `param_bounds`) that improve `objective` at `params` by more than
/// `tolerance`, as `(parameter index, direction, gain)`. Empty when `params`
/// is a certified local maximum of the search space of `mode`.
pub fn param_improvements<F>(
    objective: F,
    params: &ProtocolParams,
    mode: SearchMode,
    param_bounds: &Bounds,
    step: f64,
    tolerance: f64,
) -> Result<Vec<(usize, f64, f64)>>
where
    F: Fn(&ProtocolParams) -> f64,
{
    let bounds = mode.bounds(param_bounds)?;
    Ok(local_improvements(
        |v| objective(&mode.decode(v)),
        |v| mode.decode(v).is_valid(),
        &mode.encode(params),
        &bounds,
        step,
        tolerance,
    ))
}

/// How a single operating point is optimized.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Lsa { initial: ProtocolParams, config: LsaConfig },
    Pso(PsoConfig),
    /// Swarm search and local polishing, first in the symmetric subspace
    /// (polishing both the swarm's best and the default parameters) and then,
    /// for asymmetric mode, over all sixteen parameters starting from both the
    /// symmetric optimum and the full-space swarm's best. The asymmetric
    /// result therefore never falls below the symmetric one.
    Hybrid { pso: PsoConfig, lsa: LsaConfig },
}

/// Maximizes the key rate for one user pair.
pub fn optimize_pair(
    charlie: &CharlieConditions,
    users: &UserConditions,
    mis: &Misalignment,
    mode: SearchMode,
    strategy: &Strategy,
) -> Result<ParamSearch> {
    charlie.validate()?;
    users.validate()?;
    mis.validate()?;
    let objective = search_objective(charlie, users, mis);
    let mut found = match strategy {
        Strategy::Lsa { initial, config } => lsa_optimize(&objective, initial, mode, config)?,
        Strategy::Pso(config) => pso_optimize(&objective, mode, config)?,
        Strategy::Hybrid { pso, lsa } => {
            let polish = |starts: &[ProtocolParams], mode: SearchMode, spent: usize| -> Result<ParamSearch> {
                let mut best: Option<ParamSearch> = None;
                let mut evals = spent;
                for start in starts {
                    let run = lsa_optimize(&objective, start, mode, lsa)?;
                    evals += run.evals;
                    if best.as_ref().map_or(true, |b| run.rate > b.rate) {
                        best = Some(run);
                    }
                }
                let mut best = best.expect("at least one start");
                best.evals = evals;
                Ok(best)
            };
            let coarse = pso_optimize(&objective, SearchMode::Symmetric, pso)?;
            let sym = polish(&[coarse.params, ProtocolParams::default()], SearchMode::Symmetric, coarse.evals)?;
            match mode {
                SearchMode::Symmetric => sym,
                SearchMode::Asymmetric => {
                    let wide = pso_optimize(&objective, SearchMode::Asymmetric, pso)?;
                    polish(&[sym.params, wide.params], SearchMode::Asymmetric, sym.evals + wide.evals)?
                }
            }
        }
    };
    found.rate = key_rate(&found.params, charlie, users, mis)?;
    Ok(found)
}
