//! Corpus pairing misalignment truths with the statistics they produce.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::param::{charlie_comment, parse_charlie};
use super::table::{fmt_f64, meta_comment, meta_values, parse_err, Table};
use crate::model::{
    observed_summary, CharlieConditions, Misalignment, ObservedSummary, ProtocolParams, UserConditions, PARAM_DIM,
    PARAM_NAMES,
};
use crate::optimize::{default_param_bounds, optimize_pair, LsaConfig, PsoConfig, SearchMode, Strategy};
use crate::{Error, Execution, Result};

pub const CALIB_HEADER: [&str; 5] = ["delta_phi", "e_d", "e11_X", "E_mu_Z", "rate"];

/// Phase-drift range used for calibration data, in radians.
pub const DEFAULT_PHI_RANGE: (f64, f64) = (0.0, 0.5);
/// Misalignment-error range used for calibration data.
pub const DEFAULT_ED_RANGE: (f64, f64) = (0.002, 0.02);

const USERS_TAG: &str = "users";
const PARAMS_TAG: &str = "params";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibRow {
    pub delta_phi: f64,
    pub e_d: f64,
    pub obs: ObservedSummary,
}

/// The fixed link a calibration corpus describes: everything that enters the
/// observed statistics except the misalignment itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibLink {
    pub charlie: CharlieConditions,
    pub users: UserConditions,
    pub params: ProtocolParams,
}

impl CalibLink {
    pub fn observe(&self, delta_phi: f64, e_d: f64) -> Result<ObservedSummary> {
        observed_summary(&self.params, &self.charlie, &self.users, &Misalignment::new(e_d, delta_phi))
    }

    /// A link at `users` running parameters optimized for misalignment `mis`.
    /// Optimizing for the worst state a link is expected to drift into keeps
    /// it producing key, and hence calibratable, over the whole range.
    pub fn optimized(charlie: CharlieConditions, users: UserConditions, mis: Misalignment, seed: u64) -> Result<Self> {
        let strategy = Strategy::Hybrid {
            pso: PsoConfig::new(default_param_bounds(), seed),
            lsa: LsaConfig::new(default_param_bounds()),
        };
        let found = optimize_pair(&charlie, &users, &mis, SearchMode::Asymmetric, &strategy)?;
        Ok(CalibLink {
            charlie,
            users,
            params: found.params,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibDataset {
    pub link: CalibLink,
    pub notes: Vec<String>,
    pub rows: Vec<CalibRow>,
}

impl CalibDataset {
    pub fn new(link: CalibLink) -> Self {
        CalibDataset {
            link,
            notes: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&CALIB_HEADER);
        t.comments.extend(self.notes.iter().cloned());
        t.comments.push(charlie_comment(&self.link.charlie));
        let u = &self.link.users;
        t.comments.push(meta_comment(USERS_TAG, [("L_a", u.l_a), ("L_b", u.l_b), ("alpha", u.alpha)]));
        let p = self.link.params.to_array();
        t.comments.push(meta_comment(PARAMS_TAG, PARAM_NAMES.iter().copied().zip(p)));
        for r in &self.rows {
            t.push(
                [r.delta_phi, r.e_d, r.obs.e11_x, r.obs.e_mu_z, r.obs.rate]
                    .iter()
                    .map(|v| fmt_f64(*v))
                    .collect(),
            );
        }
        t
    }

    /// Parses the table and recomputes every row's statistics from its truth.
    pub fn from_table(t: &Table) -> Result<Self> {
        t.expect_header(&CALIB_HEADER)?;
        let charlie = parse_charlie(t)?;
        let (line, users) = t
            .meta(USERS_TAG)?
            .ok_or_else(|| parse_err(1, 1, "missing `users:` metadata comment"))?;
        let [l_a, l_b, alpha] = meta_values(line, &users, ["L_a", "L_b", "alpha"])?;
        let users = UserConditions { l_a, l_b, alpha };
        users.validate().map_err(|e| parse_err(line, 1, &e.to_string()))?;
        let (line, params) = t
            .meta(PARAMS_TAG)?
            .ok_or_else(|| parse_err(1, 1, "missing `params:` metadata comment"))?;
        let values: [f64; PARAM_DIM] = meta_values(line, &params, PARAM_NAMES)?;
        let params = ProtocolParams::from_slice(&values);
        params.validate().map_err(|e| parse_err(line, 1, &e.to_string()))?;

        let mut ds = CalibDataset::new(CalibLink { charlie, users, params });
        ds.notes = t.notes(&["charlie", USERS_TAG, PARAMS_TAG]);
        for rec in &t.records {
            let mut v = [0.0; 5];
            for (c, slot) in v.iter_mut().enumerate() {
                *slot = rec.f64(c)?;
            }
            let obs = ds.link.observe(v[0], v[1]).map_err(|e| rec.error(1, &e.to_string()))?;
            for (c, (stored, model)) in [(v[2], obs.e11_x), (v[3], obs.e_mu_z), (v[4], obs.rate)]
                .into_iter()
                .enumerate()
            {
                if (stored - model).abs() > 1e-12 {
                    return Err(rec.error(c + 2, &format!("stored {stored} but the model gives {model}")));
                }
            }
            ds.rows.push(CalibRow {
                delta_phi: v[0],
                e_d: v[1],
                obs,
            });
        }
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_table().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_table(&Table::load(path)?)
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), limit: (f64, f64)) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= limit.0 && hi <= limit.1) {
        return Err(Error::domain(format!(
            "{name} range [{lo}, {hi}] must be ordered and inside [{}, {}]",
            limit.0, limit.1
        )));
    }
    Ok(())
}

/// Draws `n` truths uniformly from the ranges and records the statistics the
/// link would report for each.
pub fn gen_calib_dataset(
    n: usize,
    phi_range: (f64, f64),
    ed_range: (f64, f64),
    link: &CalibLink,
    seed: u64,
    execution: Execution,
) -> Result<CalibDataset> {
    check_range("delta_phi", phi_range, (0.0, std::f64::consts::PI))?;
    check_range("e_d", ed_range, (0.0, 0.5))?;
    link.charlie.validate()?;
    link.users.validate()?;
    link.params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..hi) } else { lo };
    let truths: Vec<(f64, f64)> = (0..n).map(|_| (draw(phi_range), draw(ed_range))).collect();
    let obs = execution.map(&truths, |(phi, ed)| link.observe(*phi, *ed));
    let mut ds = CalibDataset::new(*link);
    for ((delta_phi, e_d), obs) in truths.into_iter().zip(obs) {
        ds.rows.push(CalibRow {
            delta_phi,
            e_d,
            obs: obs?,
        });
    }
    Ok(ds)
}
