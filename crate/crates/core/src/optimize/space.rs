use crate::model::{ProtocolParams, UserSettings, PARAM_DIM, USER_DIM};
use crate::{Error, Result};

/// Axis-aligned box `[lo, hi]` per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = Bounds { lo, hi };
        b.validate()?;
        Ok(b)
    }

    /// The same interval on every one of `dim` coordinates.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        Bounds {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() || self.lo.is_empty() {
            return Err(Error::domain("bounds need matching, non-empty lo/hi vectors"));
        }
        for (i, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::domain(format!("coordinate {i}: empty interval [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    /// Maps a point into `[0, 1]^d`.
    pub fn normalize(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(x, (lo, hi))| (x - lo) / (hi - lo))
            .collect()
    }

    pub fn denormalize(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(x, (lo, hi))| lo + x * (hi - lo))
            .collect()
    }
}

/// Search-box used for the protocol parameters unless configured otherwise:
/// intensities in `[1e-4, 1]`, probabilities in `[1e-4, 0.99]`.
pub fn default_param_bounds() -> Bounds {
    let user_lo = [1e-4; USER_DIM];
    let mut user_hi = [1.0; USER_DIM];
    user_hi[4..].fill(0.99);
    let lo = user_lo.iter().chain(&user_lo).copied().collect();
    let hi = user_hi.iter().chain(&user_hi).copied().collect();
    Bounds { lo, hi }
}

/// Whether Alice and Bob may choose independent settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchMode {
    /// All sixteen parameters are free.
    Asymmetric,
    /// Bob's settings are tied to Alice's (eight free parameters).
    Symmetric,
}

impl SearchMode {
    pub fn dim(self) -> usize {
        match self {
            SearchMode::Asymmetric => PARAM_DIM,
            SearchMode::Symmetric => USER_DIM,
        }
    }

    pub fn decode(self, v: &[f64]) -> ProtocolParams {
        match self {
            SearchMode::Asymmetric => ProtocolParams::from_slice(v),
            SearchMode::Symmetric => ProtocolParams::symmetric(UserSettings::from_slice(v)),
        }
    }

    pub fn encode(self, p: &ProtocolParams) -> Vec<f64> {
        match self {
            SearchMode::Asymmetric => p.to_array().to_vec(),
            SearchMode::Symmetric => p.alice.to_array().to_vec(),
        }
    }

    /// Restricts 16-dimensional parameter bounds to this mode's coordinates.
    /// Symmetric mode intersects Alice's and Bob's intervals.
    pub fn bounds(self, param_bounds: &Bounds) -> Result<Bounds> {
        if param_bounds.dim() != PARAM_DIM {
            return Err(Error::domain(format!(
                "parameter bounds must have {PARAM_DIM} coordinates, got {}",
                param_bounds.dim()
            )));
        }
        param_bounds.validate()?;
        match self {
            SearchMode::Asymmetric => Ok(param_bounds.clone()),
            SearchMode::Symmetric => {
                let lo = (0..USER_DIM)
                    .map(|i| param_bounds.lo[i].max(param_bounds.lo[i + USER_DIM]))
                    .collect();
                let hi = (0..USER_DIM)
                    .map(|i| param_bounds.hi[i].min(param_bounds.hi[i + USER_DIM]))
                    .collect();
                Bounds::new(lo, hi)
            }
        }
    }
}

/// Overwrites Bob's eight settings with Alice's.
pub fn symmetric_project(params: &ProtocolParams) -> ProtocolParams {
    ProtocolParams::symmetric(params.alice)
}

/// Smallest probability mass the implied vacuum setting keeps after repair,
/// relative to the probability lower bound.
const VACUUM_FLOOR_FACTOR: f64 = 1.0;

/// Makes a raw coordinate vector of `mode` satisfy the box and the
/// protocol invariants: clip to bounds, restore signal > decoy, and
/// rescale selection probabilities proportionally until the vacuum keeps
/// positive weight.
pub fn repair(mode: SearchMode, bounds: &Bounds, v: &mut [f64]) {
    for ((x, lo), hi) in v.iter_mut().zip(&bounds.lo).zip(&bounds.hi) {
        if !x.is_finite() {
            *x = *lo;
        }
        *x = x.clamp(*lo, *hi);
    }
    let users = match mode {
        SearchMode::Asymmetric => 2,
        SearchMode::Symmetric => 1,
    };
    for u in 0..users {
        let off = u * USER_DIM;
        let (lo, hi) = (&bounds.lo[off..off + USER_DIM], &bounds.hi[off..off + USER_DIM]);
        let user = &mut v[off..off + USER_DIM];
        for (mu_i, nu_i) in [(0, 1), (2, 3)] {
            if user[nu_i] > user[mu_i] {
                user.swap(mu_i, nu_i);
                user[mu_i] = user[mu_i].clamp(lo[mu_i], hi[mu_i]);
                user[nu_i] = user[nu_i].clamp(lo[nu_i], hi[nu_i]);
            }
            if user[nu_i] >= user[mu_i] {
                let gap = 1e-3 * (hi[mu_i] - lo[mu_i]);
                if user[mu_i] + gap <= hi[mu_i] {
                    user[mu_i] += gap;
                } else {
                    user[nu_i] = (user[mu_i] - gap).max(0.0);
                }
            }
        }
        let p_lo: f64 = lo[4..].iter().sum();
        let floor = VACUUM_FLOOR_FACTOR * lo[4..].iter().fold(f64::INFINITY, |a, &b| a.min(b)).max(1e-12);
        let cap = 1.0 - floor;
        let sum: f64 = user[4..].iter().sum();
        if sum > cap && sum > p_lo && cap > p_lo {
            let scale = (cap - p_lo) / (sum - p_lo);
            for (p, l) in user[4..].iter_mut().zip(&lo[4..]) {
                *p = l + (*p - l) * scale;
            }
        }
    }
}
