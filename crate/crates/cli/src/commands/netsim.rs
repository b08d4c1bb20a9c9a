use mdinet::netsim::{run_scenario, ScenarioConfig};
use mdinet::neural::ParamPredictor;
use mdinet::Result;

use crate::{Output, RunConfig};

/// Scenario keys as in [`ScenarioConfig::from_kv`], plus `predictor = <path>`
/// for `join_strategy = predictor`.
pub fn run(cfg: &mut RunConfig) -> Result<Output> {
    let predictor = cfg.optional_input_path("predictor")?;
    let seed = cfg.seed;
    let scenario = ScenarioConfig::from_kv(cfg.kv_mut(), seed)?;
    cfg.finish()?;
    let predictor = predictor.map(|p| ParamPredictor::load(&p)).transpose()?;
    let report = run_scenario(&scenario, predictor.as_ref())?;
    Ok(Output {
        body: report.to_table().to_text(),
        messages: vec![
            format!("{} users, {} pairs", report.users, report.pairs),
            format!(
                "provisioning with {}: {} key-rate evaluations, {:.3} s",
                report.join,
                report.join_evals,
                report.join_latency.as_secs_f64()
            ),
            format!("time-averaged key rate {:.6e}", report.time_averaged_rate()),
        ],
    })
}
