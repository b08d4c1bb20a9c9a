use mdinet::dataset::{fmt_f64, Table};
use mdinet::model::{key_rate, Misalignment, UserConditions, PARAM_NAMES};
use mdinet::neural::ParamPredictor;
use mdinet::{Error, Result};

use super::broadcast;
use crate::{Output, RunConfig};

/// `model = <predictor>`, `l_a`, `l_b`, `e_d` as lists of equal length (a
/// single value is repeated), `finite`, `alpha`. Each row carries the key
/// rate the predicted parameters reach.
pub fn run(cfg: &mut RunConfig) -> Result<Output> {
    let model = cfg.input_path("model")?;
    let (charlie, alpha) = cfg.link_constants()?;
    let mut lists = Vec::new();
    for key in ["l_a", "l_b", "e_d"] {
        lists.push(
            cfg.take_list::<f64>(key)?
                .ok_or_else(|| Error::Config(format!("predict needs `{key}`")))?,
        );
    }
    let n = lists.iter().map(Vec::len).max().unwrap_or(0);
    let lists: Vec<Vec<f64>> = ["l_a", "l_b", "e_d"]
        .iter()
        .zip(lists)
        .map(|(k, v)| broadcast(k, v, n))
        .collect::<Result<_>>()?;
    cfg.finish()?;

    let predictor = ParamPredictor::load(&model)?;
    let mut header = vec!["l_a", "l_b", "e_d"];
    header.extend(PARAM_NAMES);
    header.push("rate");
    let mut t = Table::new(&header);
    for i in 0..n {
        let (l_a, l_b, e_d) = (lists[0][i], lists[1][i], lists[2][i]);
        let params = predictor.predict(l_a, l_b, e_d)?;
        let users = UserConditions { l_a, l_b, alpha };
        let rate = key_rate(&params, &charlie, &users, &Misalignment::aligned(e_d))?;
        let mut fields: Vec<String> = [l_a, l_b, e_d].iter().map(|v| fmt_f64(*v)).collect();
        fields.extend(params.to_array().iter().map(|v| fmt_f64(*v)));
        fields.push(fmt_f64(rate));
        t.push(fields);
    }
    Ok(Output {
        body: t.to_text(),
        messages: vec![format!("{n} predictions")],
    })
}
