use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::model::Misalignment;
use crate::{Error, Result};

/// Independent Gaussian random walks on each pair's phase drift and
/// misalignment, reflected at the range boundaries.
#[derive(Debug, Clone)]
pub struct DriftModel {
    /// Per-tick standard deviation of the phase walk, radians.
    pub sigma_phi: f64,
    /// Per-tick standard deviation of the misalignment walk.
    pub sigma_ed: f64,
    /// Phase drift stays in `[0, phi_max]`.
    pub phi_max: f64,
    /// Misalignment stays between the pair's floor and `ed_max`.
    pub ed_max: f64,
    rng: ChaCha8Rng,
}

impl DriftModel {
    pub fn new(sigma_phi: f64, sigma_ed: f64, phi_max: f64, ed_max: f64, seed: u64) -> Result<Self> {
        for (name, v) in [("sigma_phi", sigma_phi), ("sigma_ed", sigma_ed)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} = {v} must be a non-negative number")));
            }
        }
        Misalignment::new(ed_max, phi_max).validate()?;
        Ok(DriftModel {
            sigma_phi,
            sigma_ed,
            phi_max,
            ed_max,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// One step from `mis` for a pair whose misalignment cannot drop below
    /// `ed_floor`.
    pub fn step(&mut self, mis: Misalignment, ed_floor: f64) -> Misalignment {
        let dphi = gaussian(&mut self.rng, self.sigma_phi);
        let ded = gaussian(&mut self.rng, self.sigma_ed);
        let ed_hi = self.ed_max.max(ed_floor);
        Misalignment::new(
            reflect(mis.e_d + ded, ed_floor, ed_hi),
            reflect(mis.delta_phi + dphi, 0.0, self.phi_max),
        )
    }
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    // Always draw so both walks consume the stream identically.
    let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
    sigma * z
}

/// Folds `x` back into `[lo, hi]` by mirror reflection.
pub fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    if !(w > 0.0) {
        return lo;
    }
    let period = 2.0 * w;
    let r = (x - lo).rem_euclid(period);
    lo + if r <= w { r } else { period - r }
}
