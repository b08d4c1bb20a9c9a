use crate::{Error, Result};

/// Number of decision variables per user.
pub const USER_DIM: usize = 8;
/// Length of the full decision vector.
pub const PARAM_DIM: usize = 2 * USER_DIM;

/// Column names of the decision vector, in canonical order.
pub const PARAM_NAMES: [&str; PARAM_DIM] = [
    "mu_Za", "nu_Za", "mu_Xa", "nu_Xa", "P_Za_mu", "P_Za_nu", "P_Xa_mu", "P_Xa_nu", "mu_Zb",
    "nu_Zb", "mu_Xb", "nu_Xb", "P_Zb_mu", "P_Zb_nu", "P_Xb_mu", "P_Xb_nu",
];

/// Intensity and selection probabilities chosen by one user.
///
/// The vacuum setting is shared between bases and its probability is implied:
/// `1 - (p_z_mu + p_z_nu + p_x_mu + p_x_nu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserSettings {
    pub mu_z: f64,
    pub nu_z: f64,
    pub mu_x: f64,
    pub nu_x: f64,
    pub p_z_mu: f64,
    pub p_z_nu: f64,
    pub p_x_mu: f64,
    pub p_x_nu: f64,
}

impl UserSettings {
    pub fn to_array(&self) -> [f64; USER_DIM] {
        [
            self.mu_z, self.nu_z, self.mu_x, self.nu_x, self.p_z_mu, self.p_z_nu, self.p_x_mu,
            self.p_x_nu,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), USER_DIM, "user settings need {USER_DIM} values");
        UserSettings {
            mu_z: v[0],
            nu_z: v[1],
            mu_x: v[2],
            nu_x: v[3],
            p_z_mu: v[4],
            p_z_nu: v[5],
            p_x_mu: v[6],
            p_x_nu: v[7],
        }
    }

    pub fn vacuum_probability(&self) -> f64 {
        1.0 - (self.p_z_mu + self.p_z_nu + self.p_x_mu + self.p_x_nu)
    }

    fn check(&self, who: &str) -> Result<()> {
        let v = self.to_array();
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::domain(format!("{who}: field {i} is not finite")));
        }
        for (name, mu, nu) in [("Z", self.mu_z, self.nu_z), ("X", self.mu_x, self.nu_x)] {
            if nu < 0.0 {
                return Err(Error::domain(format!("{who}: negative {name} intensity")));
            }
            if mu <= nu {
                return Err(Error::domain(format!(
                    "{who}: {name} signal intensity {mu} must exceed decoy {nu}"
                )));
            }
        }
        for p in &v[4..] {
            if !(*p > 0.0 && *p < 1.0) {
                return Err(Error::domain(format!("{who}: probability {p} outside (0, 1)")));
            }
        }
        if self.vacuum_probability() <= 0.0 {
            return Err(Error::domain(format!(
                "{who}: selection probabilities leave no vacuum weight"
            )));
        }
        Ok(())
    }

    fn check_physical(&self, who: &str) -> Result<()> {
        let v = self.to_array();
        for x in &v[..4] {
            if !(x.is_finite() && *x >= 0.0) {
                return Err(Error::domain(format!("{who}: intensity {x} is not a mean photon number")));
            }
        }
        for p in &v[4..] {
            if !(p.is_finite() && (0.0..=1.0).contains(p)) {
                return Err(Error::domain(format!("{who}: probability {p} outside [0, 1]")));
            }
        }
        if self.vacuum_probability() < -1e-12 {
            return Err(Error::domain(format!("{who}: selection probabilities exceed 1")));
        }
        Ok(())
    }
}

/// The 16-element decision vector: Alice's eight settings followed by Bob's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub alice: UserSettings,
    pub bob: UserSettings,
}

impl ProtocolParams {
    pub fn to_array(&self) -> [f64; PARAM_DIM] {
        let mut out = [0.0; PARAM_DIM];
        out[..USER_DIM].copy_from_slice(&self.alice.to_array());
        out[USER_DIM..].copy_from_slice(&self.bob.to_array());
        out
    }

    pub fn from_slice(v: &[f64]) -> Self {
        assert_eq!(v.len(), PARAM_DIM, "protocol params need {PARAM_DIM} values");
        ProtocolParams {
            alice: UserSettings::from_slice(&v[..USER_DIM]),
            bob: UserSettings::from_slice(&v[USER_DIM..]),
        }
    }

    /// Both users run the same settings.
    pub fn symmetric(user: UserSettings) -> Self {
        ProtocolParams {
            alice: user,
            bob: user,
        }
    }

    /// Alice's and Bob's settings exchanged.
    pub fn swapped(&self) -> Self {
        ProtocolParams {
            alice: self.bob,
            bob: self.alice,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.alice == self.bob
    }

    /// Full invariant check: signal above decoy, probabilities in (0, 1),
    /// strictly positive vacuum weight.
    pub fn validate(&self) -> Result<()> {
        self.alice.check("alice")?;
        self.bob.check("bob")
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Weaker check used by the gain model: non-negative intensities and
    /// probabilities that form a sub-distribution.
    pub fn validate_physical(&self) -> Result<()> {
        self.alice.check_physical("alice")?;
        self.bob.check_physical("bob")
    }
}

impl Default for ProtocolParams {
    /// A feasible, moderately good starting point for local search.
    fn default() -> Self {
        ProtocolParams::symmetric(UserSettings {
            mu_z: 0.4,
            nu_z: 0.1,
            mu_x: 0.3,
            nu_x: 0.05,
            p_z_mu: 0.5,
            p_z_nu: 0.1,
            p_x_mu: 0.1,
            p_x_nu: 0.1,
        })
    }
}

/// Relay-side constants shared by every user pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharlieConditions {
    /// Dark-count probability per detector per gate.
    pub dark_count: f64,
    /// Detector efficiency.
    pub eta_d: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
    /// Total number of pulse pairs sent.
    pub n_pulses: f64,
    /// Gaussian fluctuation width applied to observed gains before decoy
    /// estimation. Zero selects the asymptotic limit.
    pub n_sigma: f64,
}

impl CharlieConditions {
    /// The relay used throughout: dc = 6.02e-8, eta_d = 70 %, f = 1.16, N = 1e12.
    pub fn standard() -> Self {
        CharlieConditions {
            dark_count: 6.02e-8,
            eta_d: 0.7,
            f_ec: 1.16,
            n_pulses: 1e12,
            n_sigma: 5.0,
        }
    }

    /// Same relay with statistical fluctuations switched off.
    pub fn asymptotic(self) -> Self {
        CharlieConditions {
            n_sigma: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let CharlieConditions {
            dark_count,
            eta_d,
            f_ec,
            n_pulses,
            n_sigma,
        } = *self;
        if !(0.0..1.0).contains(&dark_count) {
            return Err(Error::domain(format!("dark count {dark_count} outside [0, 1)")));
        }
        if !(0.0..=1.0).contains(&eta_d) {
            return Err(Error::domain(format!("detector efficiency {eta_d} outside [0, 1]")));
        }
        if !(f_ec >= 1.0 && f_ec.is_finite()) {
            return Err(Error::domain(format!("error-correction inefficiency {f_ec} below 1")));
        }
        if !(n_pulses >= 1.0) {
            return Err(Error::domain(format!("pulse count {n_pulses} below 1")));
        }
        if !(n_sigma >= 0.0 && n_sigma.is_finite()) {
            return Err(Error::domain(format!("fluctuation width {n_sigma} is negative")));
        }
        Ok(())
    }
}

impl Default for CharlieConditions {
    fn default() -> Self {
        Self::standard()
    }
}

/// Fiber lengths from each user to the relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserConditions {
    /// Alice-Charlie length in km.
    pub l_a: f64,
    /// Bob-Charlie length in km.
    pub l_b: f64,
    /// Fiber attenuation in dB/km.
    pub alpha: f64,
}

impl UserConditions {
    pub const DEFAULT_ALPHA: f64 = 0.2;

    pub fn new(l_a: f64, l_b: f64) -> Self {
        UserConditions {
            l_a,
            l_b,
            alpha: Self::DEFAULT_ALPHA,
        }
    }

    pub fn swapped(&self) -> Self {
        UserConditions {
            l_a: self.l_b,
            l_b: self.l_a,
            alpha: self.alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_a >= 0.0 && self.l_b >= 0.0 && self.l_a.is_finite() && self.l_b.is_finite()) {
            return Err(Error::domain(format!(
                "fiber lengths ({}, {}) must be non-negative",
                self.l_a, self.l_b
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain(format!("attenuation {} must be positive", self.alpha)));
        }
        Ok(())
    }
}

/// State-preparation misalignment and reference-phase drift of a user pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Misalignment {
    pub e_d: f64,
    /// Reference phase difference in radians.
    pub delta_phi: f64,
}

impl Misalignment {
    pub const E_D_MAX: f64 = 0.5;
    pub const PHI_MAX: f64 = std::f64::consts::PI;

    pub fn new(e_d: f64, delta_phi: f64) -> Self {
        Misalignment { e_d, delta_phi }
    }

    /// Misalignment only, no phase drift.
    pub fn aligned(e_d: f64) -> Self {
        Misalignment { e_d, delta_phi: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=Self::E_D_MAX).contains(&self.e_d) {
            return Err(Error::domain(format!("misalignment {} outside [0, 0.5]", self.e_d)));
        }
        if !(0.0..=Self::PHI_MAX).contains(&self.delta_phi) {
            return Err(Error::domain(format!(
                "phase difference {} outside [0, pi]",
                self.delta_phi
            )));
        }
        Ok(())
    }

    /// Effective X-basis misalignment once the phase drift is mixed in.
    pub fn x_basis_error(&self) -> f64 {
        let s = (self.delta_phi / 2.0).sin();
        self.e_d + (1.0 - 2.0 * self.e_d) * s * s
    }
}
