//! Coordinate local search.
//!
//! Each coordinate in turn is probed at `v ± step` (in box-normalized units);
//! the best of the three points is kept. A sweep over all coordinates that
//! accepts no move halves the step, and the search stops once the step
//! would fall below `min_step`. The returned point is therefore a local
//! maximum with respect to every feasible single-coordinate move of size
//! `final_step`, up to `tolerance`.

use super::space::Bounds;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LsaConfig {
    /// Initial move size in normalized coordinates.
    pub step: f64,
    /// The search stops instead of halving below this step.
    pub min_step: f64,
    /// A move must improve the objective by more than this to be accepted.
    pub tolerance: f64,
    /// Hard cap on objective evaluations.
    pub max_evals: usize,
    pub bounds: Bounds,
}

impl LsaConfig {
    pub fn new(bounds: Bounds) -> Self {
        LsaConfig {
            step: 0.05,
            min_step: 1e-4,
            tolerance: 0.0,
            max_evals: 20_000,
            bounds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::domain(format!("step {} must be positive", self.step)));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.step) {
            return Err(Error::domain("min_step must lie in (0, step]"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::domain("tolerance must be non-negative"));
        }
        if self.max_evals == 0 {
            return Err(Error::domain("max_evals must be at least 1"));
        }
        self.bounds.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsaOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// False when `max_evals` ran out before a clean sweep at `min_step`.
    pub converged: bool,
    /// Step size of the last sweep that accepted no move.
    pub final_step: f64,
    pub accepted_moves: usize,
}

/// Maximizes `objective` over the box in `config`, starting from `initial`.
/// Points rejected by `feasible` are skipped without being evaluated.
pub fn lsa_maximize<F, C>(objective: F, feasible: C, initial: &[f64], config: &LsaConfig) -> Result<LsaOutcome>
where
    F: Fn(&[f64]) -> f64,
    C: Fn(&[f64]) -> bool,
{
    config.validate()?;
    let bounds = &config.bounds;
    if initial.len() != bounds.dim() {
        return Err(Error::domain(format!(
            "initial point has {} coordinates, bounds have {}",
            initial.len(),
            bounds.dim()
        )));
    }
    if !bounds.contains(initial) || !feasible(initial) {
        return Err(Error::domain("initial point is infeasible"));
    }

    let mut point = initial.to_vec();
    let mut value = objective(&point);
    let mut evals = 1;
    let mut accepted_moves = 0;
    let mut step = config.step;
    let mut candidate = point.clone();

    loop {
        let mut moved = false;
        for i in 0..point.len() {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for dir in [1.0, -1.0] {
                let Some(moved_to) = probe(bounds, &point, i, dir * step) else {
                    continue;
                };
                candidate.copy_from_slice(&point);
                candidate[i] = moved_to;
                if !feasible(&candidate) {
                    continue;
                }
                if evals >= config.max_evals {
                    return Ok(LsaOutcome {
                        point,
                        value,
                        evals,
                        converged: false,
                        final_step: step,
                        accepted_moves,
                    });
                }
                let r = objective(&candidate);
                evals += 1;
                // Ties between the two directions keep the + move.
                if best.as_ref().map_or(true, |(b, _)| r > *b) {
                    best = Some((r, candidate.clone()));
                }
            }
            if let Some((r, p)) = best {
                if r > value + config.tolerance {
                    point = p;
                    value = r;
                    moved = true;
                    accepted_moves += 1;
                }
            }
        }
        if !moved {
            if step / 2.0 < config.min_step {
                return Ok(LsaOutcome {
                    point,
                    value,
                    evals,
                    converged: true,
                    final_step: step,
                    accepted_moves,
                });
            }
            step /= 2.0;
        }
    }
}

/// Coordinate `i` of `point` moved by `delta` normalized units, or `None`
/// when the move leaves the box.
fn probe(bounds: &Bounds, point: &[f64], i: usize, delta: f64) -> Option<f64> {
    let width = bounds.hi[i] - bounds.lo[i];
    let u = (point[i] - bounds.lo[i]) / width + delta;
    (0.0..=1.0).contains(&u).then(|| bounds.lo[i] + u * width)
}

/// Probes every feasible single-coordinate move of size `step` around
/// `point` and returns the coordinates (index, direction, gain) whose move
/// improves the objective by more than `tolerance`. Empty for a certified
/// local maximum.
pub fn local_improvements<F, C>(
    objective: F,
    feasible: C,
    point: &[f64],
    bounds: &Bounds,
    step: f64,
    tolerance: f64,
) -> Vec<(usize, f64, f64)>
where
    F: Fn(&[f64]) -> f64,
    C: Fn(&[f64]) -> bool,
{
    let base = objective(point);
    let mut out = Vec::new();
    let mut candidate = point.to_vec();
    for i in 0..point.len() {
        for dir in [1.0, -1.0] {
            let Some(moved_to) = probe(bounds, point, i, dir * step) else {
                continue;
            };
            candidate.copy_from_slice(point);
            candidate[i] = moved_to;
            if !feasible(&candidate) {
                continue;
            }
            let gain = objective(&candidate) - base;
            if gain > tolerance {
                out.push((i, dir, gain));
            }
        }
    }
    out
}
