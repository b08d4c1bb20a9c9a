use mdinet::dataset::{fmt_f64, meta_comment, Table};
use mdinet::model::ObservedSummary;
use mdinet::neural::CalibEstimator;
use mdinet::{Error, Result};

use crate::{Output, RunConfig};

pub const CALIBRATE_HEADER: [&str; 6] = ["e11_X", "E_mu_Z", "rate", "feasible", "delta_phi_est", "e_d_est"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub obs: ObservedSummary,
    /// Known misalignment `(delta_phi, e_d)`, when the file carries it.
    pub truth: Option<(f64, f64)>,
}

/// Reads a table with columns `e11_X`, `E_mu_Z`, `rate` and, optionally,
/// `delta_phi` and `e_d`; any other columns are ignored. Calibration corpora
/// have this layout.
pub fn read_observations(t: &Table) -> Result<Vec<Observation>> {
    let col = |name: &str| t.header.iter().position(|h| h == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| Error::Parse {
            line: t.comments.len() + 1,
            column: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let (cx, cz, cr) = (need("e11_X")?, need("E_mu_Z")?, need("rate")?);
    let truth_cols = col("delta_phi").zip(col("e_d"));
    t.records
        .iter()
        .map(|r| {
            Ok(Observation {
                obs: ObservedSummary {
                    e11_x: r.f64(cx)?,
                    e_mu_z: r.f64(cz)?,
                    rate: r.f64(cr)?,
                },
                truth: match truth_cols {
                    Some((p, e)) => Some((r.f64(p)?, r.f64(e)?)),
                    None => None,
                },
            })
        })
        .collect()
}

/// `model = <estimator>`, `observations = <table>`. Rows without key are
/// marked infeasible and carry no estimate.
pub fn run(cfg: &mut RunConfig) -> Result<Output> {
    let model = cfg.input_path("model")?;
    let input = cfg.input_path("observations")?;
    cfg.finish()?;
    let est = CalibEstimator::load(&model)?;
    let observations = read_observations(&Table::load(&input)?)?;

    let mut t = Table::new(&CALIBRATE_HEADER);
    let (mut phi_err, mut ed_err, mut scored, mut infeasible) = (0.0, 0.0, 0usize, 0usize);
    let mut rows = Vec::with_capacity(observations.len());
    for o in &observations {
        let mut fields = vec![fmt_f64(o.obs.e11_x), fmt_f64(o.obs.e_mu_z), fmt_f64(o.obs.rate)];
        match est.estimate(&o.obs) {
            Ok(e) => {
                fields.extend(["1".to_string(), fmt_f64(e.delta_phi), fmt_f64(e.e_d)]);
                if let Some((phi, ed)) = o.truth {
                    phi_err += (phi - e.delta_phi).abs();
                    ed_err += (ed - e.e_d).abs();
                    scored += 1;
                }
            }
            Err(Error::Infeasible(_)) => {
                infeasible += 1;
                fields.extend(["0".to_string(), "nan".to_string(), "nan".to_string()]);
            }
            Err(e) => return Err(e),
        }
        rows.push(fields);
    }
    let mut messages = vec![format!("{} observations, {infeasible} without key", observations.len())];
    if scored > 0 {
        let (p, e) = (phi_err / scored as f64, ed_err / scored as f64);
        t.comments.push(meta_comment(
            "errors",
            [("scored", scored as f64), ("mean_abs_phi_error", p), ("mean_abs_ed_error", e)],
        ));
        messages.push(format!("mean |dphi error| {p:.5}, mean |e_d error| {e:.3e} over {scored} known truths"));
    }
    for f in rows {
        t.push(f);
    }
    Ok(Output {
        body: t.to_text(),
        messages,
    })
}
