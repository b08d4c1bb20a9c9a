//! Three-intensity decoy-state estimation of the single-photon-pair yield
//! and error rate.
//!
//! With `G(a, b) = e^{a+b} Q(a, b) = sum_{n,m} a^n b^m / (n! m!) Y_nm`, the
//! double difference `D(a, b) = G(a,b) - G(a,0) - G(0,b) + G(0,0)` keeps only
//! terms with `n, m >= 1`. Weighting `D(nu)` by
//! `K = (mu_a/nu_a)(mu_b/nu_b) min(mu_a/nu_a, mu_b/nu_b)` and subtracting
//! `D(mu)` cancels or makes non-positive every term other than `Y_11`, which
//! gives a lower bound valid for any yield table.

use rand::Rng;

use super::gains::{BasisGains, Setting};
use crate::{Error, Result};

/// Signal and decoy intensities of both users in one basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyIntensities {
    pub alice_signal: f64,
    pub alice_decoy: f64,
    pub bob_signal: f64,
    pub bob_decoy: f64,
}

impl DecoyIntensities {
    fn validate(&self) -> Result<()> {
        for (who, mu, nu) in [
            ("alice", self.alice_signal, self.alice_decoy),
            ("bob", self.bob_signal, self.bob_decoy),
        ] {
            if !(nu > 0.0 && mu > nu && mu.is_finite()) {
                return Err(Error::domain(format!(
                    "{who}: decoy estimation needs signal > decoy > 0, got ({mu}, {nu})"
                )));
            }
        }
        Ok(())
    }

    fn value(&self, alice: Setting, bob: Setting) -> (f64, f64) {
        let a = match alice {
            Setting::Signal => self.alice_signal,
            Setting::Decoy => self.alice_decoy,
            Setting::Vacuum => 0.0,
        };
        let b = match bob {
            Setting::Signal => self.bob_signal,
            Setting::Decoy => self.bob_decoy,
            Setting::Vacuum => 0.0,
        };
        (a, b)
    }
}

/// Observed gains together with a confidence interval for each entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBounds {
    pub central: BasisGains,
    pub lower: BasisGains,
    pub upper: BasisGains,
}

impl GainBounds {
    /// Point estimates taken at face value (asymptotic limit).
    pub fn exact(gains: BasisGains) -> Self {
        GainBounds {
            central: gains,
            lower: gains,
            upper: gains,
        }
    }

    /// Widens every entry by `n_sigma` standard deviations of a count
    /// collected over `pulses[a][b]` pulse pairs.
    pub fn with_fluctuation(gains: BasisGains, pulses: [[f64; 3]; 3], n_sigma: f64) -> Self {
        if n_sigma == 0.0 {
            return Self::exact(gains);
        }
        let mut lower = gains;
        let mut upper = gains;
        for i in 0..3 {
            for j in 0..3 {
                let n = pulses[i][j];
                let widen = |v: f64| {
                    if n > 0.0 {
                        n_sigma * (v.max(0.0) / n).sqrt()
                    } else {
                        1.0
                    }
                };
                let q = gains.gain[i][j];
                let eq = gains.error_gain[i][j];
                lower.gain[i][j] = (q - widen(q)).max(0.0);
                upper.gain[i][j] = (q + widen(q)).min(1.0);
                lower.error_gain[i][j] = (eq - widen(eq)).max(0.0);
                upper.error_gain[i][j] = (eq + widen(eq)).min(1.0);
            }
        }
        GainBounds {
            central: gains,
            lower,
            upper,
        }
    }
}

/// Bounds on the single-photon-pair quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyEstimate {
    pub y11_lower: f64,
    pub e11_upper: f64,
}

/// Lower-bounds `Y11` and upper-bounds `e11` from one basis' gains.
pub fn decoy_bounds(gains: &GainBounds, intensities: &DecoyIntensities) -> Result<DecoyEstimate> {
    intensities.validate()?;
    check_physical(gains, intensities)?;

    use Setting::{Decoy as D, Signal as S, Vacuum as O};
    let weight = |a: Setting, b: Setting| {
        let (x, y) = intensities.value(a, b);
        (x + y).exp()
    };
    // Picks the lower or upper end so the combination is conservative.
    let g = |a, b, coeff: f64| {
        let src = if coeff >= 0.0 { &gains.lower } else { &gains.upper };
        coeff * weight(a, b) * src.gain(a, b)
    };
    let t = |a, b, coeff: f64| {
        let src = if coeff >= 0.0 { &gains.upper } else { &gains.lower };
        coeff * weight(a, b) * src.error_gain(a, b)
    };

    let ra = intensities.alice_signal / intensities.alice_decoy;
    let rb = intensities.bob_signal / intensities.bob_decoy;
    let m = ra.min(rb);
    let k = ra * rb * m;

    let numerator = g(D, D, k) + g(D, O, -k) + g(O, D, -k) + g(O, O, k - 1.0)
        + g(S, S, -1.0)
        + g(S, O, 1.0)
        + g(O, S, 1.0);
    let denominator = intensities.alice_signal * intensities.bob_signal * (m - 1.0);
    let y11 = numerator / denominator;

    let err_numerator = t(D, D, 1.0) + t(D, O, -1.0) + t(O, D, -1.0) + t(O, O, 1.0);
    let decoy_product = intensities.alice_decoy * intensities.bob_decoy;

    let y11_lower = y11.clamp(0.0, 1.0);
    let e11_upper = if y11_lower > 0.0 {
        (err_numerator.max(0.0) / (decoy_product * y11_lower)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DecoyEstimate {
        y11_lower,
        e11_upper,
    })
}

/// Rejects gain tables that no photon-number mixture could have produced.
fn check_physical(gains: &GainBounds, intensities: &DecoyIntensities) -> Result<()> {
    let c = &gains.central;
    for a in Setting::ALL {
        for b in Setting::ALL {
            let q = c.gain(a, b);
            let eq = c.error_gain(a, b);
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Infeasible(format!("gain {q} outside [0, 1]")));
            }
            if !(eq >= 0.0 && eq <= q * (1.0 + 1e-9) + 1e-300) {
                return Err(Error::Infeasible(format!("error gain {eq} exceeds gain {q}")));
            }
        }
    }
    let g = |a: Setting, b: Setting| {
        let (x, y) = intensities.value(a, b);
        (x + y).exp() * c.gain(a, b)
    };
    for level in [Setting::Signal, Setting::Decoy] {
        let terms = [g(level, level), g(level, Setting::Vacuum), g(Setting::Vacuum, level), g(Setting::Vacuum, Setting::Vacuum)];
        let scale = terms.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let d = terms[0] - terms[1] - terms[2] + terms[3];
        if d < -1e-9 * scale {
            return Err(Error::Infeasible(format!(
                "gains violate the decoy mixing inequality ({level:?} double difference {d:e})"
            )));
        }
        // Single-sided differences are sums of non-negative yields too.
        if terms[1] < terms[3] * (1.0 - 1e-9) || terms[2] < terms[3] * (1.0 - 1e-9) {
            return Err(Error::Infeasible(format!(
                "gains decrease when one user adds light ({level:?})"
            )));
        }
    }
    Ok(())
}

/// Photon-number-resolved yields and error rates, truncated at `n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldTable {
    n_max: usize,
    yields: Vec<f64>,
    errors: Vec<f64>,
}

impl YieldTable {
    pub fn new(n_max: usize, yields: Vec<f64>, errors: Vec<f64>) -> Result<Self> {
        let side = n_max + 1;
        if yields.len() != side * side || errors.len() != side * side {
            return Err(Error::domain(format!("yield table must be {side}x{side}")));
        }
        if yields.iter().chain(&errors).any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::domain("yields and error rates must lie in [0, 1]"));
        }
        Ok(YieldTable {
            n_max,
            yields,
            errors,
        })
    }

    /// Uniformly random yields and error rates.
    pub fn random(n_max: usize, rng: &mut impl Rng) -> Self {
        let side = n_max + 1;
        let yields = (0..side * side).map(|_| rng.gen::<f64>()).collect();
        let errors = (0..side * side).map(|_| rng.gen::<f64>()).collect();
        YieldTable {
            n_max,
            yields,
            errors,
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn yield_of(&self, n: usize, m: usize) -> f64 {
        self.yields[n * (self.n_max + 1) + m]
    }

    pub fn error_of(&self, n: usize, m: usize) -> f64 {
        self.errors[n * (self.n_max + 1) + m]
    }

    pub fn set(&mut self, n: usize, m: usize, yield_: f64, error: f64) {
        let i = n * (self.n_max + 1) + m;
        self.yields[i] = yield_;
        self.errors[i] = error;
    }

    /// Gains obtained by sending Poisson-distributed photon numbers with the
    /// given intensities through this table.
    pub fn mixed_gains(&self, intensities: &DecoyIntensities) -> BasisGains {
        let mut out = BasisGains {
            gain: [[0.0; 3]; 3],
            error_gain: [[0.0; 3]; 3],
        };
        for a in Setting::ALL {
            for b in Setting::ALL {
                let (ka, kb) = intensities.value(a, b);
                let pa = poisson(ka, self.n_max);
                let pb = poisson(kb, self.n_max);
                let (mut q, mut eq) = (0.0, 0.0);
                for n in 0..=self.n_max {
                    for m in 0..=self.n_max {
                        let w = pa[n] * pb[m] * self.yield_of(n, m);
                        q += w;
                        eq += w * self.error_of(n, m);
                    }
                }
                out.gain[a.index()][b.index()] = q;
                out.error_gain[a.index()][b.index()] = eq;
            }
        }
        out
    }
}

fn poisson(mean: f64, n_max: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n_max + 1);
    let mut term = (-mean).exp();
    for n in 0..=n_max {
        if n > 0 {
            term *= mean / n as f64;
        }
        p.push(term);
    }
    p
}
