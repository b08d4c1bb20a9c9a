use mdinet::model::*;
use mdinet::optimize::*;
use mdinet::Execution;

fn hybrid(seed: u64, execution: Execution) -> Strategy {
    let mut pso = PsoConfig::new(default_param_bounds(), seed);
    pso.execution = execution;
    Strategy::Hybrid {
        pso,
        lsa: LsaConfig::new(default_param_bounds()),
    }
}

#[test]
fn local_search_result_is_certified() {
    let charlie = CharlieConditions::standard();
    let config = LsaConfig::new(default_param_bounds());
    for (la, lb, e_d) in [(5.0, 15.0, 0.01), (30.0, 10.0, 0.02), (25.0, 25.0, 0.005)] {
        let users = UserConditions::new(la, lb);
        let mis = Misalignment::aligned(e_d);
        let strategy = Strategy::Lsa {
            initial: ProtocolParams::default(),
            config: config.clone(),
        };
        let found = optimize_pair(&charlie, &users, &mis, SearchMode::Asymmetric, &strategy).unwrap();
        assert!(found.converged);
        assert!(found.rate > 0.0);
        found.params.validate().unwrap();
        let step = found.final_step.unwrap();
        let objective = rate_objective(&charlie, &users, &mis);
        let better = param_improvements(
            &objective,
            &found.params,
            SearchMode::Asymmetric,
            &config.bounds,
            step,
            config.tolerance,
        )
        .unwrap();
        assert!(better.is_empty(), "({la}, {lb}): {better:?}");
    }
}

#[test]
fn full_space_dominates_tied_subspace() {
    let charlie = CharlieConditions::standard();
    let mis = Misalignment::aligned(0.015);
    for (la, lb) in [(10.0, 40.0), (30.0, 5.0), (0.0, 30.0)] {
        let users = UserConditions::new(la, lb);
        let strategy = hybrid(11, Execution::default());
        let asym = optimize_pair(&charlie, &users, &mis, SearchMode::Asymmetric, &strategy).unwrap();
        let sym = optimize_pair(&charlie, &users, &mis, SearchMode::Symmetric, &strategy).unwrap();
        assert!(sym.params.is_symmetric());
        assert!(asym.rate >= sym.rate - 1e-12, "({la}, {lb}): {} < {}", asym.rate, sym.rate);
    }
}

#[test]
fn balanced_links_gain_nothing_from_asymmetry() {
    let charlie = CharlieConditions::standard();
    let mis = Misalignment::aligned(0.015);
    let users = UserConditions::new(20.0, 20.0);
    let strategy = hybrid(5, Execution::default());
    let asym = optimize_pair(&charlie, &users, &mis, SearchMode::Asymmetric, &strategy).unwrap();
    let sym = optimize_pair(&charlie, &users, &mis, SearchMode::Symmetric, &strategy).unwrap();
    assert!(sym.rate > 0.0);
    assert!((asym.rate - sym.rate).abs() <= 0.05 * sym.rate);
}

#[test]
fn search_is_reproducible_and_execution_independent() {
    let charlie = CharlieConditions::standard();
    let mis = Misalignment::aligned(0.01);
    let users = UserConditions::new(12.0, 33.0);
    let run = |execution| {
        optimize_pair(&charlie, &users, &mis, SearchMode::Asymmetric, &hybrid(3, execution)).unwrap()
    };
    let first = run(Execution::Sequential);
    assert_eq!(first, run(Execution::Sequential));
    assert_eq!(first, run(Execution::Parallel));
}

#[test]
fn symmetric_projection_copies_alice() {
    let mut p = ProtocolParams::default();
    p.bob.mu_z = 0.7;
    p.bob.p_x_nu = 0.2;
    let q = symmetric_project(&p);
    assert!(q.is_symmetric());
    assert_eq!(q.alice, p.alice);
    q.validate().unwrap();
    assert_eq!(symmetric_project(&q), q);
}
