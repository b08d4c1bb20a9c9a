use super::channel::binary_entropy;
use super::decoy::{decoy_bounds, DecoyEstimate, DecoyIntensities, GainBounds};
use super::gains::{gains_and_errors, selection_probability, Basis, GainTable, Setting};
use super::params::{CharlieConditions, Misalignment, ProtocolParams, UserConditions};
use crate::Result;

/// The statistics a running link already produces and that calibration
/// consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedSummary {
    /// Upper bound on the single-photon-pair X-basis error rate.
    pub e11_x: f64,
    /// QBER of signal-signal Z-basis rounds.
    pub e_mu_z: f64,
    /// Secure key rate per pulse pair.
    pub rate: f64,
}

/// Everything the model reports for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedStats {
    pub gains: GainTable,
    pub z_estimate: DecoyEstimate,
    pub x_estimate: DecoyEstimate,
    pub summary: ObservedSummary,
    /// Key-rate formula before clamping at zero. Negative values still rank
    /// operating points, which black-box searches use to escape the flat
    /// zero-rate region.
    pub signed_rate: f64,
    /// `(S - C) / (S + C)` for the single-photon secrecy term `S` and the
    /// error-correction cost `C`. Unlike the rate it does not shrink towards
    /// zero with the intensities, so it still points towards key-producing
    /// settings where no key is produced.
    pub margin: f64,
}

/// Secure key rate per pulse pair, clamped at zero.
///
/// Key is distilled from signal-signal Z rounds; the single-photon yield is
/// bounded from the Z decoys and the phase error from the X decoys.
pub fn key_rate(
    params: &ProtocolParams,
    charlie: &CharlieConditions,
    users: &UserConditions,
    mis: &Misalignment,
) -> Result<f64> {
    if params.alice.mu_z == 0.0 || params.bob.mu_z == 0.0 {
        params.validate_physical()?;
        return Ok(0.0);
    }
    Ok(observed_stats(params, charlie, users, mis)?.summary.rate)
}

/// The `(e11_X, E_mu_Z, rate)` triple used by the calibration estimator.
pub fn observed_summary(
    params: &ProtocolParams,
    charlie: &CharlieConditions,
    users: &UserConditions,
    mis: &Misalignment,
) -> Result<ObservedSummary> {
    Ok(observed_stats(params, charlie, users, mis)?.summary)
}

pub fn observed_stats(
    params: &ProtocolParams,
    charlie: &CharlieConditions,
    users: &UserConditions,
    mis: &Misalignment,
) -> Result<ObservedStats> {
    params.validate()?;
    let gains = gains_and_errors(params, charlie, users, mis)?;

    let estimate = |basis: Basis| {
        let mut pulses = [[0.0; 3]; 3];
        for a in Setting::ALL {
            for b in Setting::ALL {
                pulses[a.index()][b.index()] = charlie.n_pulses
                    * selection_probability(&params.alice, basis, a)
                    * selection_probability(&params.bob, basis, b);
            }
        }
        let (alice, bob) = (&params.alice, &params.bob);
        let intensities = match basis {
            Basis::Z => DecoyIntensities {
                alice_signal: alice.mu_z,
                alice_decoy: alice.nu_z,
                bob_signal: bob.mu_z,
                bob_decoy: bob.nu_z,
            },
            Basis::X => DecoyIntensities {
                alice_signal: alice.mu_x,
                alice_decoy: alice.nu_x,
                bob_signal: bob.mu_x,
                bob_decoy: bob.nu_x,
            },
        };
        let bounds = GainBounds::with_fluctuation(*gains.basis(basis), pulses, charlie.n_sigma);
        decoy_bounds(&bounds, &intensities)
    };
    let z_estimate = estimate(Basis::Z)?;
    let x_estimate = estimate(Basis::X)?;

    let (mu_a, mu_b) = (params.alice.mu_z, params.bob.mu_z);
    let single_photon_gain = mu_a * mu_b * (-(mu_a + mu_b)).exp() * z_estimate.y11_lower;
    let phase_error = x_estimate.e11_upper.min(0.5);
    let q_mu = gains.z.gain(Setting::Signal, Setting::Signal);
    let e_mu = gains.z.qber(Setting::Signal, Setting::Signal);

    let secrecy = single_photon_gain * (1.0 - binary_entropy(phase_error)?);
    let cost = charlie.f_ec * q_mu * binary_entropy(e_mu)?;
    let per_round = secrecy - cost;
    let margin = if secrecy + cost > 0.0 { per_round / (secrecy + cost) } else { -1.0 };
    let signed_rate = params.alice.p_z_mu * params.bob.p_z_mu * per_round;

    Ok(ObservedStats {
        gains,
        z_estimate,
        x_estimate,
        summary: ObservedSummary {
            e11_x: x_estimate.e11_upper,
            e_mu_z: e_mu,
            rate: signed_rate.max(0.0),
        },
        signed_rate,
        margin,
    })
}
