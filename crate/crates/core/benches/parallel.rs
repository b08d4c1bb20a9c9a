//! Sequential against rayon execution for the batch-parallel hot paths.
//! Without the `parallel` feature both arms run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mdinet::dataset::{gen_calib_dataset, gen_param_dataset, CalibLink, ConditionGrid, ParamGenConfig, DEFAULT_ED_RANGE, DEFAULT_PHI_RANGE};
use mdinet::model::{CharlieConditions, Misalignment, UserConditions};
use mdinet::optimize::{default_param_bounds, optimize_pair, PsoConfig, SearchMode, Strategy};
use mdinet::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn pso(c: &mut Criterion) {
    let charlie = CharlieConditions::standard();
    let users = UserConditions::new(10.0, 30.0);
    let mis = Misalignment::aligned(0.015);
    let mut group = c.benchmark_group("pso");
    group.sample_size(10);
    for (name, execution) in MODES {
        let mut config = PsoConfig::new(default_param_bounds(), 3);
        config.iterations = 40;
        config.execution = execution;
        let strategy = Strategy::Pso(config);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| optimize_pair(&charlie, &users, &mis, SearchMode::Asymmetric, &strategy).unwrap())
        });
    }
    group.finish();
}

fn datasets(c: &mut Criterion) {
    let grid = ConditionGrid::new(ConditionGrid::axis(0.0, 10.0, 3), ConditionGrid::axis(0.0, 10.0, 3), vec![0.01]).unwrap();
    let link = CalibLink::optimized(
        CharlieConditions::standard(),
        UserConditions::new(10.0, 20.0),
        Misalignment::new(DEFAULT_ED_RANGE.1, DEFAULT_PHI_RANGE.1),
        1,
    )
    .unwrap();
    let mut group = c.benchmark_group("datasets");
    group.sample_size(10);
    for (name, execution) in MODES {
        let mut gen = ParamGenConfig::new(grid.clone(), 5);
        gen.execution = execution;
        gen.pso.execution = execution;
        group.bench_function(BenchmarkId::new("param_grid_9", name), |b| b.iter(|| gen_param_dataset(&gen).unwrap()));
        group.bench_function(BenchmarkId::new("calib_rows_500", name), |b| {
            b.iter(|| gen_calib_dataset(500, DEFAULT_PHI_RANGE, DEFAULT_ED_RANGE, &link, 2, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, pso, datasets);
criterion_main!(benches);
