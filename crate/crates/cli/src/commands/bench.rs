use std::time::{Duration, Instant};

use mdinet::dataset::{fmt_f64, meta_comment, Table};
use mdinet::model::{key_rate, CharlieConditions, Misalignment, ProtocolParams, UserConditions};
use mdinet::neural::ParamPredictor;
use mdinet::optimize::{default_param_bounds, optimize_pair, LsaConfig, SearchMode, Strategy};
use mdinet::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{write_output, Output, RunConfig};

pub const BENCH_HEADER: [&str; 7] = ["l_a", "l_b", "e_d", "rate_lsa", "rate_pred", "rate_ratio", "lsa_evals"];

#[derive(Debug, Clone)]
pub struct BenchSettings {
    pub samples: usize,
    pub length_range: (f64, f64),
    pub ed_range: (f64, f64),
    pub charlie: CharlieConditions,
    pub alpha: f64,
    pub lsa: LsaConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSample {
    pub l_a: f64,
    pub l_b: f64,
    pub e_d: f64,
    pub rate_lsa: f64,
    pub rate_pred: f64,
    pub lsa_evals: usize,
    pub lsa_time: Duration,
    pub pred_time: Duration,
}

impl BenchSample {
    /// Predicted over searched key rate. Where the search finds no key the
    /// ratio is infinite if the prediction does, and 1 otherwise.
    pub fn rate_ratio(&self) -> f64 {
        match (self.rate_lsa > 0.0, self.rate_pred > 0.0) {
            (true, _) => self.rate_pred / self.rate_lsa,
            (false, true) => f64::INFINITY,
            (false, false) => 1.0,
        }
    }

    pub fn time_ratio(&self) -> f64 {
        self.lsa_time.as_secs_f64() / self.pred_time.as_secs_f64().max(1e-9)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub samples: Vec<BenchSample>,
}

impl BenchReport {
    /// Mean rate ratio over samples with a finite ratio.
    pub fn mean_rate_ratio(&self) -> f64 {
        let finite: Vec<f64> = self.samples.iter().map(|s| s.rate_ratio()).filter(|r| r.is_finite()).collect();
        finite.iter().sum::<f64>() / finite.len().max(1) as f64
    }

    pub fn fraction_at_least(&self, ratio: f64) -> f64 {
        let n = self.samples.iter().filter(|s| s.rate_ratio() >= ratio).count();
        n as f64 / self.samples.len().max(1) as f64
    }

    pub fn mean_time_ratio(&self) -> f64 {
        self.samples.iter().map(|s| s.time_ratio()).sum::<f64>() / self.samples.len().max(1) as f64
    }

    /// The machine-independent part of the report.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&BENCH_HEADER);
        t.comments.push(meta_comment(
            "summary",
            [
                ("samples", self.samples.len() as f64),
                ("mean_rate_ratio", self.mean_rate_ratio()),
                ("fraction_ratio_ge_0_8", self.fraction_at_least(0.8)),
            ],
        ));
        for s in &self.samples {
            t.push(vec![
                fmt_f64(s.l_a),
                fmt_f64(s.l_b),
                fmt_f64(s.e_d),
                fmt_f64(s.rate_lsa),
                fmt_f64(s.rate_pred),
                fmt_f64(s.rate_ratio()),
                s.lsa_evals.to_string(),
            ]);
        }
        t
    }

    pub fn timing_table(&self) -> Table {
        let mut t = Table::new(&["lsa_seconds", "predictor_seconds", "time_ratio"]);
        t.comments.push(meta_comment("summary", [("mean_time_ratio", self.mean_time_ratio())]));
        for s in &self.samples {
            t.push(vec![
                fmt_f64(s.lsa_time.as_secs_f64()),
                fmt_f64(s.pred_time.as_secs_f64()),
                fmt_f64(s.time_ratio()),
            ]);
        }
        t
    }
}

/// Keys: `samples`, `l_min`, `l_max`, `e_d_min`, `e_d_max`,
/// `lsa_max_evals`, `finite`, `alpha`.
pub fn settings(cfg: &mut RunConfig) -> Result<BenchSettings> {
    let (charlie, alpha) = cfg.link_constants()?;
    let mut lsa = LsaConfig::new(default_param_bounds());
    lsa.max_evals = cfg.take_or("lsa_max_evals", lsa.max_evals)?;
    let s = BenchSettings {
        samples: cfg.take_or("samples", 100)?,
        length_range: (cfg.take_or("l_min", 0.0)?, cfg.take_or("l_max", 40.0)?),
        ed_range: (cfg.take_or("e_d_min", 0.01)?, cfg.take_or("e_d_max", 0.02)?),
        charlie,
        alpha,
        lsa,
        seed: cfg.seed,
    };
    let (l0, l1) = s.length_range;
    let (e0, e1) = s.ed_range;
    if !(0.0 <= l0 && l0 <= l1 && l1.is_finite() && 0.0 <= e0 && e0 <= e1 && e1 <= 0.5) {
        return Err(Error::Config("bench ranges must be ordered, lengths >= 0, e_d in [0, 0.5]".into()));
    }
    Ok(s)
}

/// Draws conditions and, one sample at a time, times local search from the
/// default parameters against the predictor. Runs sequentially so the
/// timings are not skewed by contention.
pub fn bench(predictor: &ParamPredictor, s: &BenchSettings) -> Result<BenchReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..hi) } else { lo };
    let conditions: Vec<[f64; 3]> = (0..s.samples)
        .map(|_| [draw(s.length_range), draw(s.length_range), draw(s.ed_range)])
        .collect();
    let strategy = Strategy::Lsa {
        initial: ProtocolParams::default(),
        config: s.lsa.clone(),
    };
    let mut samples = Vec::with_capacity(s.samples);
    for [l_a, l_b, e_d] in conditions {
        let users = UserConditions { l_a, l_b, alpha: s.alpha };
        let mis = Misalignment::aligned(e_d);
        let t = Instant::now();
        let searched = optimize_pair(&s.charlie, &users, &mis, SearchMode::Asymmetric, &strategy)?;
        let lsa_time = t.elapsed();
        let t = Instant::now();
        let predicted = predictor.predict(l_a, l_b, e_d)?;
        let pred_time = t.elapsed();
        samples.push(BenchSample {
            l_a,
            l_b,
            e_d,
            rate_lsa: searched.rate,
            rate_pred: key_rate(&predicted, &s.charlie, &users, &mis)?,
            lsa_evals: searched.evals,
            lsa_time,
            pred_time,
        });
    }
    Ok(BenchReport { samples })
}

/// `model = <predictor>`; `timing_out = <path>` additionally writes the
/// per-sample wall times, which vary between runs and machines and are
/// therefore kept out of the main output.
pub fn run(cfg: &mut RunConfig) -> Result<Output> {
    let model = cfg.input_path("model")?;
    let timing_out = cfg.take::<String>("timing_out")?.map(|p| cfg.resolve(&p));
    let s = settings(cfg)?;
    cfg.finish()?;
    let report = bench(&ParamPredictor::load(&model)?, &s)?;
    if let Some(path) = &timing_out {
        write_output(cfg, path, &report.timing_table().to_text())?;
    }
    Ok(Output {
        body: report.to_table().to_text(),
        messages: vec![
            format!("{} samples", report.samples.len()),
            format!("mean key-rate ratio {:.4}", report.mean_rate_ratio()),
            format!("fraction with ratio >= 0.8: {:.3}", report.fraction_at_least(0.8)),
            format!("mean time ratio lsa/predictor {:.1}", report.mean_time_ratio()),
        ],
    })
}
