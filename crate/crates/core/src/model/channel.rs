use crate::{Error, Result};

/// Overall detection probability of a photon sent over `length_km` of fiber:
/// `eta_d * 10^(-alpha * L / 10)`.
pub fn channel_transmittance(length_km: f64, alpha_db_per_km: f64, eta_d: f64) -> Result<f64> {
    if !(length_km >= 0.0 && length_km.is_finite()) {
        return Err(Error::domain(format!("fiber length {length_km} must be non-negative")));
    }
    if !(alpha_db_per_km > 0.0 && alpha_db_per_km.is_finite()) {
        return Err(Error::domain(format!("attenuation {alpha_db_per_km} must be positive")));
    }
    if !(0.0..=1.0).contains(&eta_d) {
        return Err(Error::domain(format!("detector efficiency {eta_d} outside [0, 1]")));
    }
    Ok(eta_d * 10f64.powf(-alpha_db_per_km * length_km / 10.0))
}

/// Shannon entropy of a Bernoulli(x) variable in bits, with 0 log 0 = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("entropy argument {x} outside [0, 1]")));
    }
    Ok(entropy_term(x) + entropy_term(1.0 - x))
}

fn entropy_term(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// `I0(x) - 1` for the modified Bessel function of the first kind, summed
/// from its power series so small arguments keep full relative precision.
pub(crate) fn bessel_i0_m1(x: f64) -> f64 {
    weighted_bessel_series(x, |_| 1.0)
}

/// `sum_{k>=1} w(k) (x/2)^{2k} / (k!)^2`, the tail of the I0 series with
/// per-term weights. Callers use the weights to fold cancelling terms together.
pub(crate) fn weighted_bessel_series(x: f64, weight: impl Fn(u32) -> f64) -> f64 {
    let q = 0.25 * x * x;
    if q == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut k = 1u32;
    loop {
        term *= q / f64::from(k * k);
        let contribution = weight(k) * term;
        sum += contribution;
        if (contribution.abs() <= 1e-17 * sum.abs() && f64::from(k) > q.sqrt()) || k > 500 {
            break;
        }
        k += 1;
    }
    sum
}

/// `1 - (1 - pd) * exp(-t)` without cancellation for small `pd` and `t`.
pub(crate) fn click_probability(pd: f64, t: f64) -> f64 {
    -((-pd).ln_1p() - t).exp_m1()
}
