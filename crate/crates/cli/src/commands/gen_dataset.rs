use mdinet::dataset::{
    gen_calib_dataset, gen_param_dataset, CalibDataset, CalibLink, ConditionGrid, ParamDataset, ParamGenConfig,
    DEFAULT_ED_RANGE, DEFAULT_PHI_RANGE,
};
use mdinet::model::{CharlieConditions, Misalignment, UserConditions};
use mdinet::{Error, Result};

use crate::{Output, RunConfig};

fn axis(cfg: &mut RunConfig, name: &str, default: (f64, f64, usize)) -> Result<(f64, f64, usize)> {
    Ok((
        cfg.take_or(&format!("{name}_start"), default.0)?,
        cfg.take_or(&format!("{name}_step"), default.1)?,
        cfg.take_or(&format!("{name}_count"), default.2)?,
    ))
}

/// Keys: `l_a_start`, `l_a_step`, `l_a_count` (and the same for `l_b`,
/// defaulting to the `l_a` axis), `e_d` (list), `lsa_max_evals`, `finite`,
/// `alpha`.
pub fn param_config(cfg: &mut RunConfig) -> Result<ParamGenConfig> {
    let (charlie, alpha) = cfg.link_constants()?;
    let a = axis(cfg, "l_a", (0.0, 2.0, 21))?;
    let b = axis(cfg, "l_b", a)?;
    let (l_a, l_b) = (ConditionGrid::axis(a.0, a.1, a.2), ConditionGrid::axis(b.0, b.1, b.2));
    let e_d = cfg.take_list("e_d")?.unwrap_or_else(|| vec![0.01, 0.015, 0.02]);
    let grid = ConditionGrid::new(l_a, l_b, e_d).map_err(|e| Error::Config(e.to_string()))?;
    let mut gen = ParamGenConfig::new(grid, cfg.seed);
    gen.charlie = charlie;
    gen.alpha = alpha;
    gen.lsa.max_evals = cfg.take_or("lsa_max_evals", gen.lsa.max_evals)?;
    gen.execution = cfg.execution;
    gen.pso.execution = cfg.execution;
    Ok(gen)
}

#[derive(Debug, Clone)]
pub struct CalibGenSettings {
    pub rows: usize,
    pub users: UserConditions,
    /// Misalignment the link's parameters are optimized for.
    pub design: Misalignment,
    pub phi_range: (f64, f64),
    pub ed_range: (f64, f64),
    /// Seeds the link's parameter search; truths are drawn from the run seed.
    pub link_seed: u64,
}

/// Keys: `rows`, `l_a`, `l_b`, `design_phi`, `design_e_d`, `phi_min`,
/// `phi_max`, `ed_min`, `ed_max`, `link_seed`, `finite`, `alpha`.
pub fn calib_settings(cfg: &mut RunConfig) -> Result<(CalibGenSettings, CharlieConditions)> {
    let (charlie, alpha) = cfg.link_constants()?;
    let phi_range = (cfg.take_or("phi_min", DEFAULT_PHI_RANGE.0)?, cfg.take_or("phi_max", DEFAULT_PHI_RANGE.1)?);
    let ed_range = (cfg.take_or("ed_min", DEFAULT_ED_RANGE.0)?, cfg.take_or("ed_max", DEFAULT_ED_RANGE.1)?);
    let s = CalibGenSettings {
        rows: cfg.take_or("rows", 2000)?,
        users: UserConditions {
            l_a: cfg.take_or("l_a", 10.0)?,
            l_b: cfg.take_or("l_b", 20.0)?,
            alpha,
        },
        // The worst corner of the range by default, so the link keeps
        // producing key wherever it drifts.
        design: Misalignment::new(cfg.take_or("design_e_d", ed_range.1)?, cfg.take_or("design_phi", phi_range.1)?),
        phi_range,
        ed_range,
        link_seed: cfg.take_or("link_seed", cfg.seed)?,
    };
    s.users.validate().map_err(|e| Error::Config(e.to_string()))?;
    s.design.validate().map_err(|e| Error::Config(e.to_string()))?;
    if s.rows == 0 {
        return Err(Error::Config("rows must be at least 1".into()));
    }
    Ok((s, charlie))
}

pub fn calib_dataset(cfg: &RunConfig, s: &CalibGenSettings, charlie: CharlieConditions) -> Result<CalibDataset> {
    let link = CalibLink::optimized(charlie, s.users, s.design, s.link_seed)?;
    gen_calib_dataset(s.rows, s.phi_range, s.ed_range, &link, cfg.seed.wrapping_add(1), cfg.execution).map_err(|e| match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    })
}

/// `kind = param` (default) or `kind = calib`.
pub fn run(cfg: &mut RunConfig) -> Result<Output> {
    let kind = cfg.take_or("kind", "param".to_string())?;
    match kind.as_str() {
        "param" => {
            let gen = param_config(cfg)?;
            cfg.finish()?;
            let ds: ParamDataset = gen_param_dataset(&gen)?;
            let zero = ds.rows.iter().filter(|r| r.rate <= 0.0).count();
            Ok(Output {
                body: ds.to_table().to_text(),
                messages: vec![format!("{} rows, {zero} without key", ds.rows.len())],
            })
        }
        "calib" => {
            let (s, charlie) = calib_settings(cfg)?;
            cfg.finish()?;
            let ds = calib_dataset(cfg, &s, charlie)?;
            let zero = ds.rows.iter().filter(|r| r.obs.rate <= 0.0).count();
            Ok(Output {
                body: ds.to_table().to_text(),
                messages: vec![format!("{} rows, {zero} without key", ds.rows.len())],
            })
        }
        other => Err(Error::Config(format!("unknown dataset kind `{other}` (param, calib)"))),
    }
}
