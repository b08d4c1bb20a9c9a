use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::model::{key_rate, observed_summary, CharlieConditions, Misalignment, ProtocolParams, UserConditions};
use crate::neural::{CalibEstimator, MisalignmentEstimate, ParamPredictor};
use crate::optimize::{optimize_pair, LsaConfig, PsoConfig, SearchMode, Strategy};
use crate::{Error, Result};

use super::drift::DriftModel;

pub type UserId = u32;

/// Unordered user pair, stored with the smaller id first. The first user
/// plays Alice.
pub type PairKey = (UserId, UserId);

pub fn pair_key(a: UserId, b: UserId) -> PairKey {
    (a.min(b), a.max(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetUser {
    pub id: UserId,
    /// Fiber length to the relay in km.
    pub length: f64,
    /// Intrinsic state-preparation misalignment.
    pub e_d: f64,
}

/// How a joining user's pairs get their parameters.
#[derive(Debug, Clone, Copy)]
pub enum JoinStrategy<'a> {
    Predictor(&'a ParamPredictor),
    /// Local search from the default parameters.
    Lsa(&'a LsaConfig),
    Pso(&'a PsoConfig),
}

impl JoinStrategy<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            JoinStrategy::Predictor(_) => "predictor",
            JoinStrategy::Lsa(_) => "lsa",
            JoinStrategy::Pso(_) => "pso",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairEntry {
    pub params: ProtocolParams,
    pub strategy: &'static str,
    /// Wall-clock time spent producing `params`.
    pub latency: Duration,
    /// Key-rate evaluations spent producing `params`; zero for the predictor.
    pub evals: usize,
    /// Pair misalignment at provisioning time, the floor drift cannot go
    /// below and calibration restores towards.
    pub e_d_floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinReport {
    pub new_pairs: Vec<PairKey>,
    pub latency: Duration,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationReport {
    pub pair: PairKey,
    pub truth: Misalignment,
    /// `None` when the pair produced no key to estimate from; the state is
    /// then left unchanged.
    pub estimate: Option<MisalignmentEstimate>,
    pub pre_rate: f64,
    pub post_rate: f64,
}

impl CalibrationReport {
    pub fn infeasible(&self) -> bool {
        self.estimate.is_none()
    }
}

/// A star network: every user talks to every other through one relay.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub charlie: CharlieConditions,
    /// Fiber attenuation in dB/km shared by all users.
    pub alpha: f64,
    pub users: Vec<NetUser>,
    pub pair_table: BTreeMap<PairKey, PairEntry>,
    /// Current misalignment of each pair.
    pub drift_table: BTreeMap<PairKey, Misalignment>,
    /// Seconds of provisioning work so far.
    pub clock: f64,
}

impl NetworkState {
    pub fn new(charlie: CharlieConditions, alpha: f64) -> Self {
        NetworkState {
            charlie,
            alpha,
            users: Vec::new(),
            pair_table: BTreeMap::new(),
            drift_table: BTreeMap::new(),
            clock: 0.0,
        }
    }

    pub fn user(&self, id: UserId) -> Option<&NetUser> {
        self.users.iter().find(|u| u.id == id)
    }

    fn pair_users(&self, key: PairKey) -> Result<(NetUser, NetUser)> {
        match (self.user(key.0), self.user(key.1)) {
            (Some(a), Some(b)) => Ok((*a, *b)),
            _ => Err(Error::domain(format!("no pair {key:?}"))),
        }
    }

    /// Fiber lengths and intrinsic misalignment of a pair. The pair's
    /// misalignment is the mean of its users'.
    pub fn pair_conditions(&self, key: PairKey) -> Result<(UserConditions, f64)> {
        let (a, b) = self.pair_users(key)?;
        let users = UserConditions {
            l_a: a.length,
            l_b: b.length,
            alpha: self.alpha,
        };
        Ok((users, 0.5 * (a.e_d + b.e_d)))
    }

    /// Adds `user` and provisions one pair with every existing user.
    pub fn user_join(&mut self, user: NetUser, strategy: &JoinStrategy) -> Result<JoinReport> {
        if self.user(user.id).is_some() {
            return Err(Error::domain(format!("user {} already joined", user.id)));
        }
        UserConditions::new(user.length, 0.0).validate()?;
        Misalignment::aligned(user.e_d).validate()?;
        let others: Vec<UserId> = self.users.iter().map(|u| u.id).collect();
        self.users.push(user);

        let mut report = JoinReport {
            new_pairs: Vec::with_capacity(others.len()),
            latency: Duration::ZERO,
            evals: 0,
        };
        for other in others {
            let key = pair_key(user.id, other);
            let (users, e_d) = self.pair_conditions(key)?;
            let mis = Misalignment::aligned(e_d);
            let start = Instant::now();
            let (params, evals) = match strategy {
                JoinStrategy::Predictor(p) => (p.predict(users.l_a, users.l_b, e_d)?, 0),
                JoinStrategy::Lsa(cfg) => {
                    let s = Strategy::Lsa {
                        initial: ProtocolParams::default(),
                        config: (*cfg).clone(),
                    };
                    let found = optimize_pair(&self.charlie, &users, &mis, SearchMode::Asymmetric, &s)?;
                    (found.params, found.evals)
                }
                JoinStrategy::Pso(cfg) => {
                    let s = Strategy::Pso((*cfg).clone());
                    let found = optimize_pair(&self.charlie, &users, &mis, SearchMode::Asymmetric, &s)?;
                    (found.params, found.evals)
                }
            };
            let latency = start.elapsed();
            report.latency += latency;
            report.evals += evals;
            self.pair_table.insert(
                key,
                PairEntry {
                    params,
                    strategy: strategy.name(),
                    latency,
                    evals,
                    e_d_floor: e_d,
                },
            );
            self.drift_table.insert(key, mis);
            report.new_pairs.push(key);
        }
        self.clock += report.latency.as_secs_f64();
        Ok(report)
    }

    /// Key rate a pair currently produces.
    pub fn pair_rate(&self, key: PairKey) -> Result<f64> {
        let entry = self.pair_table.get(&key).ok_or_else(|| Error::domain(format!("no pair {key:?}")))?;
        let (users, _) = self.pair_conditions(key)?;
        key_rate(&entry.params, &self.charlie, &users, &self.drift_table[&key])
    }

    /// Current key rate of every pair, in key order.
    pub fn rates(&self) -> Result<Vec<(PairKey, f64)>> {
        self.pair_table.keys().map(|k| Ok((*k, self.pair_rate(*k)?))).collect()
    }

    /// Advances every pair's misalignment by one step of `model`.
    pub fn drift_tick(&mut self, model: &mut DriftModel) {
        for (key, mis) in self.drift_table.iter_mut() {
            *mis = model.step(*mis, self.pair_table[key].e_d_floor);
        }
    }

    /// Estimates a pair's misalignment from its statistics and subtracts the
    /// estimate: the phase moves to `max(0, phi - phi_est)` and the
    /// misalignment down by the estimated excess over the pair's floor.
    pub fn recalibrate_pair(&mut self, key: PairKey, estimator: &CalibEstimator) -> Result<CalibrationReport> {
        let entry = self.pair_table.get(&key).ok_or_else(|| Error::domain(format!("no pair {key:?}")))?;
        let (users, _) = self.pair_conditions(key)?;
        let truth = self.drift_table[&key];
        let obs = observed_summary(&entry.params, &self.charlie, &users, &truth)?;
        let mut report = CalibrationReport {
            pair: key,
            truth,
            estimate: None,
            pre_rate: obs.rate,
            post_rate: obs.rate,
        };
        let est = match estimator.estimate(&obs) {
            Ok(e) => e,
            Err(Error::Infeasible(_)) => return Ok(report),
            Err(e) => return Err(e),
        };
        let floor = entry.e_d_floor;
        let post = Misalignment::new(
            (truth.e_d - (est.e_d - floor).max(0.0)).max(floor),
            (truth.delta_phi - est.delta_phi).max(0.0),
        );
        report.estimate = Some(est);
        report.post_rate = key_rate(&entry.params, &self.charlie, &users, &post)?;
        self.drift_table.insert(key, post);
        Ok(report)
    }
}
