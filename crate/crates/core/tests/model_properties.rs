use mdinet::model::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn user_settings() -> impl Strategy<Value = UserSettings> {
    (
        0.05f64..0.9,
        0.05f64..0.9,
        0.01f64..0.6,
        0.05f64..0.9,
        prop::array::uniform4(0.02f64..1.0),
    )
        .prop_map(|(mu_z, nu_frac_z, mu_x, nu_frac_x, w)| {
            let total: f64 = w.iter().sum::<f64>() * 1.1;
            UserSettings {
                mu_z,
                nu_z: mu_z * nu_frac_z,
                mu_x,
                nu_x: mu_x * nu_frac_x,
                p_z_mu: w[0] / total,
                p_z_nu: w[1] / total,
                p_x_mu: w[2] / total,
                p_x_nu: w[3] / total,
            }
        })
}

fn params() -> impl Strategy<Value = ProtocolParams> {
    (user_settings(), user_settings()).prop_map(|(alice, bob)| ProtocolParams { alice, bob })
}

/// Parameters close to a good operating point, so most cases have key.
fn keyed_params() -> impl Strategy<Value = ProtocolParams> {
    prop::array::uniform16(0.8f64..1.2).prop_map(|scale| {
        let base = ProtocolParams::default().to_array();
        let v: Vec<f64> = base.iter().zip(scale).map(|(b, s)| b * s).collect();
        ProtocolParams::from_slice(&v)
    })
}

fn charlie(finite: bool) -> CharlieConditions {
    if finite {
        CharlieConditions::standard()
    } else {
        CharlieConditions::standard().asymptotic()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn swap_leaves_rate_unchanged(p in params(), la in 0.0f64..60.0, lb in 0.0f64..60.0,
                                  e_d in 0.0f64..0.1, phi in 0.0f64..1.0, finite: bool) {
        let c = charlie(finite);
        let users = UserConditions::new(la, lb);
        let mis = Misalignment::new(e_d, phi);
        let r = key_rate(&p, &c, &users, &mis).unwrap();
        let s = key_rate(&p.swapped(), &c, &users.swapped(), &mis).unwrap();
        prop_assert!((r - s).abs() <= 1e-12 * r.abs().max(1e-300) || r == s, "{r} vs {s}");
        let g = gains_and_errors(&p, &c, &users, &mis).unwrap();
        let h = gains_and_errors(&p.swapped(), &c, &users.swapped(), &mis).unwrap();
        prop_assert_eq!(g.z.transposed(), h.z);
        prop_assert_eq!(g.x.transposed(), h.x);
    }

    #[test]
    fn phase_drift_never_touches_z(p in params(), la in 0.0f64..60.0, lb in 0.0f64..60.0,
                                   e_d in 0.0f64..0.5, phi1 in 0.0f64..std::f64::consts::PI,
                                   phi2 in 0.0f64..std::f64::consts::PI) {
        let c = CharlieConditions::standard();
        let users = UserConditions::new(la, lb);
        let a = gains_and_errors(&p, &c, &users, &Misalignment::new(e_d, phi1)).unwrap();
        let b = gains_and_errors(&p, &c, &users, &Misalignment::new(e_d, phi2)).unwrap();
        prop_assert_eq!(a.z, b.z);
    }

    #[test]
    fn x_error_grows_with_phase(p in params(), la in 0.0f64..60.0, lb in 0.0f64..60.0,
                                e_d in 0.0f64..0.5, phi in 0.0f64..3.0, dphi in 0.0f64..0.14) {
        let c = CharlieConditions::standard();
        let users = UserConditions::new(la, lb);
        let a = gains_and_errors(&p, &c, &users, &Misalignment::new(e_d, phi)).unwrap();
        let b = gains_and_errors(&p, &c, &users, &Misalignment::new(e_d, phi + dphi)).unwrap();
        for i in Setting::ALL {
            for j in Setting::ALL {
                prop_assert!(b.x.qber(i, j) >= a.x.qber(i, j) - 1e-15);
            }
        }
    }

    #[test]
    fn rate_and_qber_are_clamped(p in params(), la in 0.0f64..150.0, lb in 0.0f64..150.0,
                                 e_d in 0.0f64..0.5, phi in 0.0f64..std::f64::consts::PI, finite: bool) {
        let c = charlie(finite);
        let users = UserConditions::new(la, lb);
        let mis = Misalignment::new(e_d, phi);
        let stats = observed_stats(&p, &c, &users, &mis).unwrap();
        prop_assert!(stats.summary.rate >= 0.0);
        prop_assert_eq!(stats.summary.rate, key_rate(&p, &c, &users, &mis).unwrap());
        for g in [stats.gains.z, stats.gains.x] {
            for i in Setting::ALL {
                for j in Setting::ALL {
                    prop_assert!((0.0..=1.0).contains(&g.gain(i, j)));
                    prop_assert!((0.0..=0.5).contains(&g.qber(i, j)));
                }
            }
        }
    }

    #[test]
    fn rate_falls_with_misalignment(p in keyed_params(), la in 0.0f64..40.0, lb in 0.0f64..40.0,
                                    e_d in 0.0f64..0.05, de in 0.0f64..0.01, finite: bool) {
        let c = charlie(finite);
        let users = UserConditions::new(la, lb);
        let base = key_rate(&p, &c, &users, &Misalignment::aligned(e_d)).unwrap();
        let worse = key_rate(&p, &c, &users, &Misalignment::aligned(e_d + de)).unwrap();
        prop_assert!(worse <= base * (1.0 + 1e-12));
    }

    // Extra loss on the link that already delivers less light cannot help.
    // (On the brighter link it can: attenuating it suppresses double clicks.)
    #[test]
    fn rate_falls_with_loss_on_weaker_link(p in keyed_params(), la in 0.0f64..40.0,
                                           lb in 0.0f64..40.0, e_d in 0.0f64..0.05,
                                           d in 0.0f64..5.0, finite: bool) {
        let c = charlie(finite);
        let mis = Misalignment::aligned(e_d);
        let users = UserConditions::new(la, lb);
        let base = key_rate(&p, &c, &users, &mis).unwrap();
        let t_a = channel_transmittance(la, users.alpha, c.eta_d).unwrap();
        let t_b = channel_transmittance(lb, users.alpha, c.eta_d).unwrap();
        let (a, b) = (p.alice.to_array(), p.bob.to_array());
        let alice_weaker = (0..4).all(|i| t_a * a[i] <= t_b * b[i]);
        let bob_weaker = (0..4).all(|i| t_b * b[i] <= t_a * a[i]);
        if alice_weaker {
            let r = key_rate(&p, &c, &UserConditions::new(la + d, lb), &mis).unwrap();
            prop_assert!(r <= base * (1.0 + 1e-12), "{r} > {base}");
        }
        if bob_weaker {
            let r = key_rate(&p, &c, &UserConditions::new(la, lb + d), &mis).unwrap();
            prop_assert!(r <= base * (1.0 + 1e-12), "{r} > {base}");
        }
        let both = key_rate(&p, &c, &UserConditions::new(la + d, lb + d), &mis).unwrap();
        prop_assert!(both <= base * (1.0 + 1e-12), "{both} > {base}");
    }
}

#[test]
fn monotonicity_sample_mostly_has_key() {
    // Guards the generator above: the property is only meaningful when rates are positive.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c = CharlieConditions::standard();
    let mut keyed = 0;
    for _ in 0..100 {
        let v: Vec<f64> = ProtocolParams::default()
            .to_array()
            .iter()
            .map(|b| b * rng.gen_range(0.8..1.2))
            .collect();
        let p = ProtocolParams::from_slice(&v);
        let users = UserConditions::new(rng.gen_range(0.0..40.0), rng.gen_range(0.0..40.0));
        if key_rate(&p, &c, &users, &Misalignment::aligned(rng.gen_range(0.0..0.05))).unwrap() > 0.0 {
            keyed += 1;
        }
    }
    assert!(keyed >= 50, "only {keyed} of 100 keyed");
}

#[test]
fn decoy_bounds_bracket_random_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let intensities = DecoyIntensities {
        alice_signal: 0.4,
        alice_decoy: 0.05,
        bob_signal: 0.4,
        bob_decoy: 0.05,
    };
    for case in 0..100 {
        let table = YieldTable::random(12, &mut rng);
        let gains = table.mixed_gains(&intensities);
        let est = decoy_bounds(&GainBounds::exact(gains), &intensities).unwrap();
        assert!(est.y11_lower <= table.yield_of(1, 1), "case {case}: yield");
        assert!(est.e11_upper >= table.error_of(1, 1), "case {case}: error");
    }
}

#[test]
fn fully_randomized_preparation_gives_no_key() {
    let c = CharlieConditions::standard().asymptotic();
    let rate = key_rate(
        &ProtocolParams::default(),
        &c,
        &UserConditions::new(10.0, 10.0),
        &Misalignment::aligned(0.5),
    )
    .unwrap();
    assert_eq!(rate, 0.0);
}

#[test]
fn no_signal_gives_no_key() {
    let mut p = ProtocolParams::default();
    p.alice.mu_z = 0.0;
    p.alice.nu_z = 0.0;
    let rate = key_rate(
        &p,
        &CharlieConditions::standard(),
        &UserConditions::new(10.0, 10.0),
        &Misalignment::aligned(0.015),
    )
    .unwrap();
    assert_eq!(rate, 0.0);
}

#[test]
fn phase_error_bound_rises_with_drift() {
    let c = CharlieConditions::standard();
    let users = UserConditions::new(10.0, 20.0);
    let p = ProtocolParams::default();
    let mut last = f64::NEG_INFINITY;
    for k in 0..=50 {
        let phi = 0.5 * k as f64 / 50.0;
        let s = observed_summary(&p, &c, &users, &Misalignment::new(0.01, phi)).unwrap();
        assert!(s.e11_x > last, "phi {phi}: {} <= {last}", s.e11_x);
        last = s.e11_x;
    }
}

#[test]
fn drift_free_phase_error_sits_near_misalignment_floor() {
    let users = UserConditions::new(10.0, 20.0);
    let s = observed_summary(
        &ProtocolParams::default(),
        &CharlieConditions::standard().asymptotic(),
        &users,
        &Misalignment::aligned(0.002),
    )
    .unwrap();
    assert!(s.e11_x >= 0.002 && s.e11_x < 0.03, "{}", s.e11_x);
}

#[test]
fn calibration_conditions_produce_key() {
    let users = UserConditions::new(10.0, 20.0);
    let s = observed_summary(
        &ProtocolParams::default(),
        &CharlieConditions::standard(),
        &users,
        &Misalignment::new(0.005, 0.05),
    )
    .unwrap();
    assert!(s.rate > 0.0 && s.e11_x.is_finite() && s.e_mu_z.is_finite());
}

#[test]
fn attenuating_the_brighter_link_can_raise_rate() {
    let c = CharlieConditions::standard().asymptotic();
    let mis = Misalignment::aligned(0.015);
    let p = ProtocolParams::default();
    let near = key_rate(&p, &c, &UserConditions::new(0.0, 60.0), &mis).unwrap();
    let far = key_rate(&p, &c, &UserConditions::new(10.0, 60.0), &mis).unwrap();
    assert!(far > near, "{near} {far}");
}
