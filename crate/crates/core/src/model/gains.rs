//! Gains and error rates of weak-coherent-pulse MDI-QKD with a
//! beamsplitter Bell-state measurement and four threshold detectors.
//!
//! Both users send phase-randomized coherent pulses; a round is announced
//! when exactly one detector on each side of a projection pattern clicks
//! (psi+ or psi-). Closed forms follow the standard analytical model with
//! `mu' = ta*ka + tb*kb` and `x = sqrt(ta*ka*tb*kb) / 2`.

use super::channel::{bessel_i0_m1, channel_transmittance, click_probability, weighted_bessel_series};
use super::params::{CharlieConditions, Misalignment, ProtocolParams, UserConditions, UserSettings};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

/// Intensity setting of one user: signal, decoy or the shared vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    Signal,
    Decoy,
    Vacuum,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::Signal, Setting::Decoy, Setting::Vacuum];

    pub fn index(self) -> usize {
        match self {
            Setting::Signal => 0,
            Setting::Decoy => 1,
            Setting::Vacuum => 2,
        }
    }
}

/// Mean photon number a user emits for a basis and setting.
pub fn intensity(user: &UserSettings, basis: Basis, setting: Setting) -> f64 {
    match (basis, setting) {
        (_, Setting::Vacuum) => 0.0,
        (Basis::Z, Setting::Signal) => user.mu_z,
        (Basis::Z, Setting::Decoy) => user.nu_z,
        (Basis::X, Setting::Signal) => user.mu_x,
        (Basis::X, Setting::Decoy) => user.nu_x,
    }
}

/// Probability that a user picks a basis and setting.
pub fn selection_probability(user: &UserSettings, basis: Basis, setting: Setting) -> f64 {
    match (basis, setting) {
        (_, Setting::Vacuum) => user.vacuum_probability(),
        (Basis::Z, Setting::Signal) => user.p_z_mu,
        (Basis::Z, Setting::Decoy) => user.p_z_nu,
        (Basis::X, Setting::Signal) => user.p_x_mu,
        (Basis::X, Setting::Decoy) => user.p_x_nu,
    }
}

/// Gains `Q` and error gains `E*Q` for one basis, indexed `[alice][bob]` by
/// [`Setting::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisGains {
    pub gain: [[f64; 3]; 3],
    pub error_gain: [[f64; 3]; 3],
}

impl BasisGains {
    pub fn gain(&self, alice: Setting, bob: Setting) -> f64 {
        self.gain[alice.index()][bob.index()]
    }

    pub fn error_gain(&self, alice: Setting, bob: Setting) -> f64 {
        self.error_gain[alice.index()][bob.index()]
    }

    /// QBER of the announced rounds, capped at 1/2. Zero when nothing was announced.
    pub fn qber(&self, alice: Setting, bob: Setting) -> f64 {
        let q = self.gain(alice, bob);
        if q <= 0.0 {
            0.0
        } else {
            (self.error_gain(alice, bob) / q).clamp(0.0, 0.5)
        }
    }

    pub fn transposed(&self) -> BasisGains {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.gain[i][j] = self.gain[j][i];
                out.error_gain[i][j] = self.error_gain[j][i];
            }
        }
        out
    }
}

/// Model gains and error gains for every intensity pair in both bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainTable {
    pub z: BasisGains,
    pub x: BasisGains,
}

impl GainTable {
    pub fn basis(&self, basis: Basis) -> &BasisGains {
        match basis {
            Basis::Z => &self.z,
            Basis::X => &self.x,
        }
    }
}

/// Evaluates the gain model for every intensity pair in both bases.
pub fn gains_and_errors(
    params: &ProtocolParams,
    charlie: &CharlieConditions,
    users: &UserConditions,
    mis: &Misalignment,
) -> Result<GainTable> {
    params.validate_physical()?;
    charlie.validate()?;
    users.validate()?;
    mis.validate()?;

    let ta = channel_transmittance(users.l_a, users.alpha, charlie.eta_d)?;
    let tb = channel_transmittance(users.l_b, users.alpha, charlie.eta_d)?;
    let pd = charlie.dark_count;
    let e_x = mis.x_basis_error();

    let table = |basis: Basis, misalignment: f64| {
        let mut gains = BasisGains {
            gain: [[0.0; 3]; 3],
            error_gain: [[0.0; 3]; 3],
        };
        for a in Setting::ALL {
            for b in Setting::ALL {
                let ka = intensity(&params.alice, basis, a);
                let kb = intensity(&params.bob, basis, b);
                let (q, eq) = pair_gain(basis, ta * ka, tb * kb, pd, misalignment);
                gains.gain[a.index()][b.index()] = q;
                gains.error_gain[a.index()][b.index()] = eq;
            }
        }
        gains
    };

    Ok(GainTable {
        z: table(Basis::Z, mis.e_d),
        x: table(Basis::X, e_x),
    })
}

/// Gain and error gain for received mean photon numbers `ra = ta*ka`,
/// `rb = tb*kb`.
pub(crate) fn pair_gain(basis: Basis, ra: f64, rb: f64, pd: f64, misalignment: f64) -> (f64, f64) {
    let total = ra + rb;
    let x = (ra * rb).sqrt() / 2.0;
    let keep = (1.0 - pd) * (1.0 - pd);
    match basis {
        Basis::Z => {
            let no_click = (-total / 2.0).exp();
            let both = click_probability(pd, ra / 2.0) * click_probability(pd, rb / 2.0);
            let correct = 2.0 * keep * no_click * both;
            // I0(2x) - (1 - pd) e^{-mu'/2}, both pieces non-negative.
            let bracket = bessel_i0_m1(2.0 * x) + click_probability(pd, total / 2.0);
            let wrong = 2.0 * pd * keep * no_click * bracket;
            let q = correct + wrong;
            let eq = misalignment * correct + (1.0 - misalignment) * wrong;
            (q, eq)
        }
        Basis::X => {
            let y = (1.0 - pd) * (-total / 4.0).exp();
            let one_minus_y = click_probability(pd, total / 4.0);
            // 1 + 2y^2 - 4y I0(x) + I0(2x) = 2(1-y)^2 + sum_k x^{2k}/(k!)^2 (1 - y 4^{1-k})
            let cross = weighted_bessel_series(2.0 * x, |k| 1.0 - y * 4f64.powi(1 - k as i32));
            let q = 2.0 * y * y * (2.0 * one_minus_y * one_minus_y + cross);
            // e0 Q - 2(e0 - e) y^2 (I0(2x) - 1) with e0 = 1/2, regrouped.
            let a = bessel_i0_m1(x);
            let b = bessel_i0_m1(2.0 * x);
            let eq = y * y * (2.0 * one_minus_y * one_minus_y - 4.0 * y * a + 2.0 * misalignment * b);
            (q, eq.max(0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1_users(l_a: f64, l_b: f64) -> UserConditions {
        UserConditions::new(l_a, l_b)
    }

    #[test]
    fn dark_vacuum_is_basis_independent() {
        let pd = 6.02e-8;
        let (qz, ez) = pair_gain(Basis::Z, 0.0, 0.0, pd, 0.015);
        let (qx, ex) = pair_gain(Basis::X, 0.0, 0.0, pd, 0.015);
        let want = 4.0 * pd * pd * (1.0 - pd) * (1.0 - pd);
        assert!(((qz - want) / want).abs() < 1e-12);
        assert!(((qx - want) / want).abs() < 1e-9);
        assert!((ez / qz - 0.5).abs() < 1e-9);
        assert!((ex / qx - 0.5).abs() < 1e-6);
    }

    #[test]
    fn x_gain_matches_naive_formula_where_cancellation_is_harmless() {
        let (ra, rb, pd, e) = (0.3, 0.2, 1e-3, 0.02);
        let total: f64 = ra + rb;
        let x = (ra * rb).sqrt() / 2.0;
        let y = (1.0 - pd) * (-total / 4.0).exp();
        let i0 = |z: f64| 1.0 + bessel_i0_m1(z);
        let q = 2.0 * y * y * (1.0 + 2.0 * y * y - 4.0 * y * i0(x) + i0(2.0 * x));
        let eq = 0.5 * q - 2.0 * (0.5 - e) * y * y * (i0(2.0 * x) - 1.0);
        let (got_q, got_eq) = pair_gain(Basis::X, ra, rb, pd, e);
        assert!(((got_q - q) / q).abs() < 1e-10);
        assert!(((got_eq - eq) / eq).abs() < 1e-9);
    }

    #[test]
    fn no_light_no_darks_means_no_gain() {
        let zero = UserSettings {
            mu_z: 0.0,
            nu_z: 0.0,
            mu_x: 0.0,
            nu_x: 0.0,
            p_z_mu: 0.25,
            p_z_nu: 0.25,
            p_x_mu: 0.25,
            p_x_nu: 0.2,
        };
        let charlie = CharlieConditions {
            dark_count: 0.0,
            ..CharlieConditions::standard()
        };
        let g = gains_and_errors(
            &ProtocolParams::symmetric(zero),
            &charlie,
            &table1_users(10.0, 10.0),
            &Misalignment::aligned(0.015),
        )
        .unwrap();
        for basis in [&g.z, &g.x] {
            assert!(basis.gain.iter().flatten().all(|&q| q == 0.0));
        }
    }

    #[test]
    fn swap_transposes_the_table_exactly() {
        let mut p = ProtocolParams::default();
        p.bob.mu_z = 0.55;
        p.bob.nu_x = 0.02;
        let charlie = CharlieConditions::standard();
        let mis = Misalignment::new(0.015, 0.2);
        let users = table1_users(5.0, 42.0);
        let g = gains_and_errors(&p, &charlie, &users, &mis).unwrap();
        let s = gains_and_errors(&p.swapped(), &charlie, &users.swapped(), &mis).unwrap();
        assert_eq!(g.z, s.z.transposed());
        assert_eq!(g.x, s.x.transposed());
    }

    #[test]
    fn table1_signal_gain_positive_near_origin() {
        let g = gains_and_errors(
            &ProtocolParams::default(),
            &CharlieConditions::standard(),
            &table1_users(10.0, 10.0),
            &Misalignment::aligned(0.015),
        )
        .unwrap();
        assert!(g.z.gain(Setting::Signal, Setting::Signal) > 1e-3);
        let e = g.z.qber(Setting::Signal, Setting::Signal);
        assert!(e > 0.01 && e < 0.02, "{e}");
    }

    #[test]
    fn domain_errors() {
        let p = ProtocolParams::default();
        let c = CharlieConditions::standard();
        assert!(gains_and_errors(&p, &c, &table1_users(-1.0, 0.0), &Misalignment::aligned(0.0)).is_err());
        assert!(gains_and_errors(&p, &c, &table1_users(1.0, 0.0), &Misalignment::aligned(0.6)).is_err());
        assert!(gains_and_errors(&p, &c, &table1_users(1.0, 0.0), &Misalignment::new(0.0, 4.0)).is_err());
        let mut bad = p;
        bad.alice.mu_z = -0.1;
        assert!(gains_and_errors(&bad, &c, &table1_users(1.0, 0.0), &Misalignment::aligned(0.0)).is_err());
    }
}
