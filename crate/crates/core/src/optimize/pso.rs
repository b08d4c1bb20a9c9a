//! Particle swarm optimization in box-normalized coordinates.
//!
//! Particles move in `[0, 1]^d`; positions are clipped to the box and passed
//! through a caller-supplied repair before every evaluation. Evaluations of
//! one generation are independent and may run in parallel; the swarm update
//! and the global-best reduction run sequentially in particle order, so a
//! seed fully determines the trajectory.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::space::Bounds;
use crate::exec::Execution;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub swarm_size: usize,
    /// Generations, counting the initial evaluation of the swarm.
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity limit as a fraction of the box width.
    pub velocity_clamp: f64,
    pub bounds: Bounds,
    pub seed: u64,
    pub execution: Execution,
}

impl PsoConfig {
    pub fn new(bounds: Bounds, seed: u64) -> Self {
        PsoConfig {
            swarm_size: 50,
            iterations: 200,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            velocity_clamp: 0.2,
            bounds,
            seed,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::domain("swarm needs at least 2 particles"));
        }
        if self.iterations == 0 {
            return Err(Error::domain("at least one iteration is required"));
        }
        if !(0.0..=1.0).contains(&self.inertia) {
            return Err(Error::domain(format!("inertia {} outside [0, 1]", self.inertia)));
        }
        if !(self.cognitive >= 0.0 && self.social >= 0.0) {
            return Err(Error::domain("acceleration coefficients must be non-negative"));
        }
        if !(self.velocity_clamp > 0.0) {
            return Err(Error::domain("velocity clamp must be positive"));
        }
        self.bounds.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// Best objective value after each generation.
    pub history: Vec<f64>,
}

/// Maximizes `objective` with a seeded swarm. `repair` receives a raw
/// (denormalized, box-clipped) point and may adjust it in place to restore
/// feasibility; the repaired point stays in the box.
pub fn pso_maximize<F, R>(objective: F, repair: R, config: &PsoConfig) -> Result<PsoOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
    R: Fn(&mut [f64]),
{
    config.validate()?;
    let bounds = &config.bounds;
    let dim = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vmax = config.velocity_clamp;

    let place = |u: &mut Vec<f64>| -> Vec<f64> {
        for x in u.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        let mut raw = bounds.denormalize(u);
        repair(&mut raw);
        *u = bounds.normalize(&raw);
        raw
    };

    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(config.swarm_size);
    let mut raw_points: Vec<Vec<f64>> = Vec::with_capacity(config.swarm_size);
    let mut velocities: Vec<Vec<f64>> = Vec::with_capacity(config.swarm_size);
    for _ in 0..config.swarm_size {
        let mut u: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        raw_points.push(place(&mut u));
        positions.push(u);
        velocities.push((0..dim).map(|_| rng.gen_range(-vmax..=vmax)).collect());
    }

    let mut values = config.execution.map(&raw_points, |p| objective(p));
    let mut evals = values.len();
    let mut personal = positions.clone();
    let mut personal_raw = raw_points.clone();
    let mut personal_value = values.clone();

    let mut best_index = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best_index] {
            best_index = i;
        }
    }
    let mut best = personal[best_index].clone();
    let mut best_raw = personal_raw[best_index].clone();
    let mut best_value = values[best_index];
    let mut history = vec![best_value];

    for _ in 1..config.iterations {
        for i in 0..config.swarm_size {
            for d in 0..dim {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let v = config.inertia * velocities[i][d]
                    + config.cognitive * r1 * (personal[i][d] - positions[i][d])
                    + config.social * r2 * (best[d] - positions[i][d]);
                velocities[i][d] = v.clamp(-vmax, vmax);
                positions[i][d] += velocities[i][d];
            }
            raw_points[i] = place(&mut positions[i]);
        }
        values = config.execution.map(&raw_points, |p| objective(p));
        evals += values.len();
        for i in 0..config.swarm_size {
            if values[i] > personal_value[i] {
                personal_value[i] = values[i];
                personal[i].clone_from(&positions[i]);
                personal_raw[i].clone_from(&raw_points[i]);
            }
            if values[i] > best_value {
                best_value = values[i];
                best.clone_from(&positions[i]);
                best_raw.clone_from(&raw_points[i]);
            }
        }
        history.push(best_value);
    }

    Ok(PsoOutcome {
        point: best_raw,
        value: best_value,
        evals,
        history,
    })
}
