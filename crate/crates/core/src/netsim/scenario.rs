use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::drift::DriftModel;
use super::state::{JoinStrategy, NetUser, NetworkState, PairKey};
use crate::config::KvConfig;
use crate::dataset::{fmt_f64, gen_calib_dataset, meta_comment, CalibLink, Table};
use crate::model::{CharlieConditions, UserConditions};
use crate::neural::{CalibEstimator, EstimatorConfig, ParamPredictor};
use crate::optimize::{default_param_bounds, LsaConfig, PsoConfig};
use crate::{Error, Execution, Result};

pub const METRICS_HEADER: [&str; 8] = [
    "tick",
    "mean_rate",
    "min_rate",
    "zero_rate_pairs",
    "mean_delta_phi",
    "mean_e_d",
    "recalibrated",
    "calib_infeasible",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    Predictor,
    Lsa,
    Pso,
}

impl FromStr for JoinKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predictor" => Ok(JoinKind::Predictor),
            "lsa" => Ok(JoinKind::Lsa),
            "pso" => Ok(JoinKind::Pso),
            other => Err(Error::Config(format!("unknown join strategy `{other}` (predictor, lsa, pso)"))),
        }
    }
}

impl fmt::Display for JoinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinKind::Predictor => "predictor",
            JoinKind::Lsa => "lsa",
            JoinKind::Pso => "pso",
        })
    }
}

/// Everything a scenario run depends on besides the predictor, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub users: usize,
    /// User lengths (km) and misalignments are drawn uniformly from these.
    pub length_range: (f64, f64),
    pub user_ed_range: (f64, f64),
    pub alpha: f64,
    pub ticks: usize,
    pub sigma_phi: f64,
    pub sigma_ed: f64,
    pub phi_max: f64,
    pub ed_max: f64,
    /// Every pair is recalibrated each `recalibration_period` ticks; 0 never.
    pub recalibration_period: usize,
    pub join: JoinKind,
    pub lsa_max_evals: usize,
    /// Per-pair calibration corpus size and estimator shape.
    pub calib_rows: usize,
    pub calib_hidden: Vec<usize>,
    pub calib_epochs: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(seed: u64) -> Self {
        ScenarioConfig {
            users: 10,
            length_range: (0.0, 30.0),
            user_ed_range: (0.002, 0.008),
            alpha: UserConditions::DEFAULT_ALPHA,
            ticks: 100,
            sigma_phi: 0.02,
            sigma_ed: 3e-4,
            phi_max: 0.5,
            ed_max: 0.02,
            recalibration_period: 10,
            join: JoinKind::Lsa,
            lsa_max_evals: 20_000,
            calib_rows: 600,
            calib_hidden: vec![12, 12],
            calib_epochs: 1500,
            seed,
        }
    }

    /// Takes the scenario keys out of `kv`, leaving any others for the caller.
    pub fn from_kv(kv: &mut KvConfig, seed: u64) -> Result<Self> {
        let d = Self::new(seed);
        let c = ScenarioConfig {
            users: kv.take_or("users", d.users)?,
            length_range: (kv.take_or("length_min", d.length_range.0)?, kv.take_or("length_max", d.length_range.1)?),
            user_ed_range: (
                kv.take_or("user_ed_min", d.user_ed_range.0)?,
                kv.take_or("user_ed_max", d.user_ed_range.1)?,
            ),
            alpha: kv.take_or("alpha", d.alpha)?,
            ticks: kv.take_or("ticks", d.ticks)?,
            sigma_phi: kv.take_or("sigma_phi", d.sigma_phi)?,
            sigma_ed: kv.take_or("sigma_ed", d.sigma_ed)?,
            phi_max: kv.take_or("phi_max", d.phi_max)?,
            ed_max: kv.take_or("ed_max", d.ed_max)?,
            recalibration_period: kv.take_or("recalibration_period", d.recalibration_period)?,
            join: kv.take_or("join_strategy", d.join)?,
            lsa_max_evals: kv.take_or("lsa_max_evals", d.lsa_max_evals)?,
            calib_rows: kv.take_or("calib_rows", d.calib_rows)?,
            calib_hidden: kv.take_list("calib_hidden")?.unwrap_or(d.calib_hidden),
            calib_epochs: kv.take_or("calib_epochs", d.calib_epochs)?,
            seed,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if !ordered(self.length_range) || self.length_range.0 < 0.0 {
            return bad(format!("length range {:?} must be ordered and non-negative", self.length_range));
        }
        if !ordered(self.user_ed_range) || self.user_ed_range.0 < 0.0 || self.user_ed_range.1 > self.ed_max {
            return bad(format!("user e_d range {:?} must lie in [0, ed_max]", self.user_ed_range));
        }
        if !(self.ed_max <= 0.5 && self.phi_max > 0.0 && self.phi_max <= std::f64::consts::PI) {
            return bad("need ed_max <= 0.5 and 0 < phi_max <= pi".into());
        }
        if !(self.sigma_phi >= 0.0 && self.sigma_ed >= 0.0) {
            return bad("drift sigmas must be non-negative".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("attenuation {} must be positive", self.alpha));
        }
        if self.recalibration_period > 0 && (self.calib_rows < 2 || self.calib_epochs == 0) {
            return bad("recalibration needs calib_rows >= 2 and calib_epochs >= 1".into());
        }
        if self.calib_hidden.contains(&0) {
            return bad("calib_hidden widths must be positive".into());
        }
        Ok(())
    }

    /// The users in join order, drawn from the scenario seed.
    pub fn draw_users(&self) -> Vec<NetUser> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x05ce_a710);
        let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..hi) } else { lo };
        (0..self.users)
            .map(|i| NetUser {
                id: i as u32 + 1,
                length: draw(self.length_range),
                e_d: draw(self.user_ed_range),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickMetrics {
    pub tick: usize,
    pub mean_rate: f64,
    pub min_rate: f64,
    pub zero_rate_pairs: usize,
    pub mean_delta_phi: f64,
    pub mean_e_d: f64,
    pub recalibrated: usize,
    pub calib_infeasible: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub users: usize,
    pub pairs: usize,
    pub join: JoinKind,
    /// Key-rate evaluations spent provisioning, summed over pairs.
    pub join_evals: usize,
    /// Wall-clock provisioning time. Not written to the metrics file, which
    /// must not depend on the machine.
    pub join_latency: Duration,
    pub ticks: Vec<TickMetrics>,
    /// `|truth - estimate|` of every feasible recalibration.
    pub phi_errors: Vec<f64>,
    pub ed_errors: Vec<f64>,
    /// Pairs whose estimator could not be trained (no key anywhere in range).
    pub uncalibratable_pairs: usize,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

impl ScenarioReport {
    /// Network-average key rate averaged over all recorded ticks.
    pub fn time_averaged_rate(&self) -> f64 {
        mean(&self.ticks.iter().map(|t| t.mean_rate).collect::<Vec<_>>())
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&METRICS_HEADER);
        t.comments.push(format!("join_strategy: {}", self.join));
        t.comments.push(meta_comment(
            "provisioning",
            [
                ("users", self.users as f64),
                ("pairs", self.pairs as f64),
                ("evals", self.join_evals as f64),
            ],
        ));
        t.comments.push(meta_comment(
            "calibration",
            [
                ("events", self.phi_errors.len() as f64),
                ("uncalibratable_pairs", self.uncalibratable_pairs as f64),
                ("mean_abs_phi_error", mean(&self.phi_errors)),
                ("max_abs_phi_error", max(&self.phi_errors)),
                ("mean_abs_ed_error", mean(&self.ed_errors)),
                ("max_abs_ed_error", max(&self.ed_errors)),
            ],
        ));
        t.comments.push(meta_comment("summary", [("time_averaged_rate", self.time_averaged_rate())]));
        for m in &self.ticks {
            t.push(vec![
                m.tick.to_string(),
                fmt_f64(m.mean_rate),
                fmt_f64(m.min_rate),
                m.zero_rate_pairs.to_string(),
                fmt_f64(m.mean_delta_phi),
                fmt_f64(m.mean_e_d),
                m.recalibrated.to_string(),
                m.calib_infeasible.to_string(),
            ]);
        }
        t
    }
}

/// Trains one estimator per pair on statistics from the pair's own link, over
/// the drift range that pair can reach.
fn estimator_bank(state: &NetworkState, cfg: &ScenarioConfig) -> Result<BTreeMap<PairKey, Option<CalibEstimator>>> {
    let keys: Vec<PairKey> = state.pair_table.keys().copied().collect();
    let trained = Execution::default().map_range(keys.len(), |i| -> Result<Option<CalibEstimator>> {
        let key = keys[i];
        let entry = &state.pair_table[&key];
        let (users, _) = state.pair_conditions(key)?;
        let link = CalibLink {
            charlie: state.charlie,
            users,
            params: entry.params,
        };
        let seed = cfg.seed.wrapping_add(0x1000 + i as u64);
        let ed_range = (entry.e_d_floor, cfg.ed_max.max(entry.e_d_floor));
        let ds = gen_calib_dataset(cfg.calib_rows, (0.0, cfg.phi_max), ed_range, &link, seed, Execution::Sequential)?;
        let mut ec = EstimatorConfig::new(seed);
        ec.hidden = cfg.calib_hidden.clone();
        ec.train.epochs = cfg.calib_epochs;
        ec.execution = Execution::Sequential;
        match CalibEstimator::train(&ds, &ec) {
            Ok((est, _)) => Ok(Some(est)),
            Err(Error::Domain(m)) => {
                debug!("pair {key:?} cannot be calibrated: {m}");
                Ok(None)
            }
            Err(e) => Err(e),
        }
    });
    keys.into_iter().zip(trained).map(|(k, r)| Ok((k, r?))).collect()
}

fn measure(state: &NetworkState, tick: usize) -> Result<TickMetrics> {
    let rates: Vec<f64> = state.rates()?.into_iter().map(|(_, r)| r).collect();
    let phis: Vec<f64> = state.drift_table.values().map(|m| m.delta_phi).collect();
    let eds: Vec<f64> = state.drift_table.values().map(|m| m.e_d).collect();
    Ok(TickMetrics {
        tick,
        mean_rate: mean(&rates),
        min_rate: if rates.is_empty() { 0.0 } else { rates.iter().copied().fold(f64::INFINITY, f64::min) },
        zero_rate_pairs: rates.iter().filter(|r| **r <= 0.0).count(),
        mean_delta_phi: mean(&phis),
        mean_e_d: mean(&eds),
        recalibrated: 0,
        calib_infeasible: 0,
    })
}

/// Joins every user, then lets the network drift for `ticks` ticks with
/// periodic recalibration. Tick 0 is the freshly provisioned network. The
/// drift stream depends only on the seed, so runs that differ only in their
/// recalibration period see the same drift increments.
pub fn run_scenario(cfg: &ScenarioConfig, predictor: Option<&ParamPredictor>) -> Result<ScenarioReport> {
    cfg.validate()?;
    let lsa = LsaConfig {
        max_evals: cfg.lsa_max_evals,
        ..LsaConfig::new(default_param_bounds())
    };
    let pso = PsoConfig::new(default_param_bounds(), cfg.seed.wrapping_add(0x50));
    let strategy = match cfg.join {
        JoinKind::Predictor => JoinStrategy::Predictor(
            predictor.ok_or_else(|| Error::Config("join_strategy = predictor needs a trained predictor".into()))?,
        ),
        JoinKind::Lsa => JoinStrategy::Lsa(&lsa),
        JoinKind::Pso => JoinStrategy::Pso(&pso),
    };

    let mut state = NetworkState::new(CharlieConditions::standard(), cfg.alpha);
    let mut join_evals = 0;
    let mut join_latency = Duration::ZERO;
    for user in cfg.draw_users() {
        let r = state.user_join(user, &strategy)?;
        join_evals += r.evals;
        join_latency += r.latency;
    }
    info!(
        "provisioned {} pairs for {} users with {} in {:.3} s",
        state.pair_table.len(),
        state.users.len(),
        cfg.join,
        join_latency.as_secs_f64()
    );

    let bank = if cfg.recalibration_period > 0 {
        estimator_bank(&state, cfg)?
    } else {
        BTreeMap::new()
    };
    let mut drift = DriftModel::new(cfg.sigma_phi, cfg.sigma_ed, cfg.phi_max, cfg.ed_max, cfg.seed.wrapping_add(1))?;
    let mut report = ScenarioReport {
        users: state.users.len(),
        pairs: state.pair_table.len(),
        join: cfg.join,
        join_evals,
        join_latency,
        ticks: vec![measure(&state, 0)?],
        phi_errors: Vec::new(),
        ed_errors: Vec::new(),
        uncalibratable_pairs: bank.values().filter(|e| e.is_none()).count(),
    };
    for tick in 1..=cfg.ticks {
        state.drift_tick(&mut drift);
        let (mut done, mut infeasible) = (0, 0);
        if cfg.recalibration_period > 0 && tick % cfg.recalibration_period == 0 {
            for (key, est) in &bank {
                let Some(est) = est else {
                    infeasible += 1;
                    continue;
                };
                let r = state.recalibrate_pair(*key, est)?;
                match r.estimate {
                    Some(e) => {
                        done += 1;
                        report.phi_errors.push((r.truth.delta_phi - e.delta_phi).abs());
                        report.ed_errors.push((r.truth.e_d - e.e_d).abs());
                    }
                    None => infeasible += 1,
                }
            }
        }
        let mut m = measure(&state, tick)?;
        m.recalibrated = done;
        m.calib_infeasible = infeasible;
        report.ticks.push(m);
    }
    Ok(report)
}
