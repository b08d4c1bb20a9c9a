use mdinet::dataset::{fmt_f64, meta_comment, Table};
use mdinet::model::{CharlieConditions, Misalignment, UserConditions};
use mdinet::optimize::{default_param_bounds, optimize_pair, LsaConfig, PsoConfig, SearchMode, Strategy};
use mdinet::{Error, Execution, Result};

use crate::{Output, RunConfig};

pub const SIMULATE_HEADER: [&str; 4] = ["l_a", "l_b", "rate_asym", "rate_sym"];

#[derive(Debug, Clone)]
pub struct SimSettings {
    /// `(L_a, L_b)` points in km.
    pub points: Vec<(f64, f64)>,
    pub e_d: f64,
    pub charlie: CharlieConditions,
    pub alpha: f64,
    pub pso: PsoConfig,
    pub lsa: LsaConfig,
    pub execution: Execution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRow {
    pub l_a: f64,
    pub l_b: f64,
    pub rate_asym: f64,
    pub rate_sym: f64,
}

/// Keys: `l_a`, `l_b` (lists, full grid) or `l_a` with `l_sum` (scan along
/// `L_a + L_b = l_sum`), `e_d`, `finite`, `alpha`, `pso_swarm`,
/// `pso_iterations`.
pub fn settings(cfg: &mut RunConfig) -> Result<SimSettings> {
    let (charlie, alpha) = cfg.link_constants()?;
    let l_a: Vec<f64> = cfg.take_list("l_a")?.unwrap_or_else(|| vec![0.0, 10.0, 20.0, 30.0, 40.0]);
    let l_sum: Option<f64> = cfg.take("l_sum")?;
    let l_b: Option<Vec<f64>> = cfg.take_list("l_b")?;
    let points: Vec<(f64, f64)> = match (l_sum, l_b) {
        (Some(_), Some(_)) => return Err(Error::Config("set either `l_b` or `l_sum`, not both".into())),
        (Some(s), None) => l_a.iter().map(|a| (*a, s - a)).collect(),
        (None, l_b) => {
            let l_b = l_b.unwrap_or_else(|| l_a.clone());
            l_a.iter().flat_map(|a| l_b.iter().map(move |b| (*a, *b))).collect()
        }
    };
    if points.is_empty() || points.iter().any(|(a, b)| !(*a >= 0.0 && *b >= 0.0 && a.is_finite() && b.is_finite())) {
        return Err(Error::Config("grid lengths must be finite and non-negative".into()));
    }
    let e_d = cfg.take_or("e_d", 0.015)?;
    if Misalignment::aligned(e_d).validate().is_err() {
        return Err(Error::Config(format!("e_d = {e_d} outside [0, 0.5]")));
    }
    let mut pso = PsoConfig::new(default_param_bounds(), cfg.seed);
    pso.swarm_size = cfg.take_or("pso_swarm", pso.swarm_size)?;
    pso.iterations = cfg.take_or("pso_iterations", pso.iterations)?;
    pso.execution = Execution::Sequential;
    pso.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(SimSettings {
        points,
        e_d,
        charlie,
        alpha,
        pso,
        lsa: LsaConfig::new(default_param_bounds()),
        execution: cfg.execution,
    })
}

/// Optimizes both protocol modes at every point, points in parallel.
pub fn simulate(s: &SimSettings) -> Result<Vec<SimRow>> {
    let mis = Misalignment::aligned(s.e_d);
    s.execution
        .map(&s.points, |&(l_a, l_b)| -> Result<SimRow> {
            let users = UserConditions {
                l_a,
                l_b,
                alpha: s.alpha,
            };
            let strategy = Strategy::Hybrid {
                pso: s.pso.clone(),
                lsa: s.lsa.clone(),
            };
            let asym = optimize_pair(&s.charlie, &users, &mis, SearchMode::Asymmetric, &strategy)?;
            let sym = optimize_pair(&s.charlie, &users, &mis, SearchMode::Symmetric, &strategy)?;
            Ok(SimRow {
                l_a,
                l_b,
                rate_asym: asym.rate,
                rate_sym: sym.rate,
            })
        })
        .into_iter()
        .collect()
}

pub fn run(cfg: &mut RunConfig) -> Result<Output> {
    let s = settings(cfg)?;
    cfg.finish()?;
    let rows = simulate(&s)?;
    let mut t = Table::new(&SIMULATE_HEADER);
    t.comments.push(meta_comment(
        "conditions",
        [("e_d", s.e_d), ("alpha", s.alpha), ("n_sigma", s.charlie.n_sigma)],
    ));
    for r in &rows {
        t.push(vec![fmt_f64(r.l_a), fmt_f64(r.l_b), fmt_f64(r.rate_asym), fmt_f64(r.rate_sym)]);
    }
    Ok(Output {
        body: t.to_text(),
        messages: vec![format!("{} grid points", rows.len())],
    })
}
