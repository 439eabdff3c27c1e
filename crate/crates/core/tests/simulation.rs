use attrition::simulate::{best_reply_sweep, estimate_payoffs, exit_local_time, sample_outcomes, SimConfig, StopCause};
use attrition::{
    pure_mpe, singular_mpe_single_atom, DiffusionModel, DuopolyParams, EquilibriumProfile, Player, SingularOptions,
};

fn params() -> DuopolyParams {
    let model = DiffusionModel::new(0.02, 0.2, 0.1).unwrap();
    DuopolyParams::new(model, 1.0, 1.02, 5.0).unwrap()
}

fn singular() -> EquilibriumProfile {
    singular_mpe_single_atom(&params(), SingularOptions::default()).unwrap()
}

fn strategies(p: &EquilibriumProfile) -> [&attrition::MarkovStrategy; 2] {
    [p.strategy(Player::One), p.strategy(Player::Two)]
}

#[test]
fn estimates_repeat_exactly_for_a_seed() {
    let profile = singular();
    let cfg = SimConfig::new(0.05, 1e-3, 30.0, 500, 11);
    let a = estimate_payoffs(&profile.params, strategies(&profile), &cfg).unwrap();
    let b = estimate_payoffs(&profile.params, strategies(&profile), &cfg).unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed = 12;
    let c = estimate_payoffs(&profile.params, strategies(&profile), &other).unwrap();
    assert_ne!(a[0].mean, c[0].mean);
}

#[test]
fn antithetic_pairs_count_once() {
    let profile = singular();
    let mut cfg = SimConfig::new(0.05, 1e-3, 30.0, 400, 3);
    cfg.antithetic = true;
    let est = estimate_payoffs(&profile.params, strategies(&profile), &cfg).unwrap();
    assert_eq!(est[0].n_paths, 400);
    assert_eq!(est[0].n_effective, 200);
    cfg.n_paths = 401;
    assert!(estimate_payoffs(&profile.params, strategies(&profile), &cfg).is_err());
}

#[test]
fn cause_breakdown_recovers_the_mean() {
    let profile = singular();
    let cfg = SimConfig::new(0.06, 1e-3, 30.0, 1000, 5);
    for e in estimate_payoffs(&profile.params, strategies(&profile), &cfg).unwrap() {
        let total: u64 = e.causes.iter().map(|c| c.count).sum();
        assert_eq!(total as usize, e.n_paths);
        let mix: f64 = e.causes.iter().map(|c| c.count as f64 * c.mean).sum::<f64>() / e.n_paths as f64;
        assert!((mix - e.mean).abs() < 1e-12 * (1.0 + e.mean.abs()));
    }
}

#[test]
fn pure_profile_values_match_simulation() {
    let profile = pure_mpe(&params()).unwrap();
    let x0 = 0.08;
    let cfg = SimConfig::new(x0, 1e-3, 100.0, 4000, 9);
    let est = estimate_payoffs(&profile.params, strategies(&profile), &cfg).unwrap();
    for p in Player::BOTH {
        let e = &est[p.index()];
        let want = profile.value(p).value(x0);
        let tol = 4.0 * e.se + e.truncation_bias_bound.unwrap();
        assert!((e.mean - want).abs() <= tol, "{p:?}: {} vs {want} (tol {tol})", e.mean);
    }
    // Player 1 never exits, so every path ends with player 2 or the horizon.
    assert_eq!(est[0].count(StopCause::OwnAtom) + est[0].count(StopCause::OwnSet), 0);
}

#[test]
fn outcomes_stop_at_most_once_per_player() {
    let profile = singular();
    let cfg = SimConfig::new(0.05, 1e-3, 20.0, 200, 1);
    for o in sample_outcomes(&profile.params, strategies(&profile), &cfg).unwrap() {
        assert!(o.time <= 20.0 + 1e-12);
        if o.stopped == [false, false] {
            assert!((o.time - 20.0).abs() < 1e-9);
        }
        for i in 0..2 {
            assert!(!o.by_clock[i] || o.stopped[i]);
        }
    }
}

#[test]
fn thresholds_at_or_above_the_start_exit_at_once() {
    let profile = singular();
    let cfg = SimConfig::new(0.04, 1e-3, 20.0, 300, 2);
    let sweep = best_reply_sweep(
        &profile.params,
        Player::Two,
        profile.strategy(Player::One),
        &[0.04, 0.05, 0.01],
        &cfg,
    )
    .unwrap();
    let exit = profile.params.payoffs(Player::Two).exit(0.04);
    for point in &sweep.points[..2] {
        assert_eq!(point.mean, exit);
        assert_eq!(point.se, 0.0);
    }
    assert_eq!(sweep.points.len(), 3);
    assert!(sweep.best().is_some());
    assert!(best_reply_sweep(&profile.params, Player::Two, profile.strategy(Player::One), &[], &cfg).is_err());
}

#[test]
fn coarse_local_time_is_near_two_ln_two() {
    let model = DiffusionModel::new(0.02, 0.2, 0.1).unwrap();
    let mut cfg = SimConfig::new(2.0, 1e-3, 1e3, 4000, 4);
    cfg.tail_bound = false;
    let est = exit_local_time(&model, 1.0, 4.0, 2.0, &cfg).unwrap();
    let exact = 2.0 * 2f64.ln();
    assert!(
        (est.mean - exact).abs() < 4.0 * est.se + 0.05 * exact,
        "{} +- {}",
        est.mean,
        est.se
    );
    assert!(exit_local_time(&model, 1.0, 4.0, 5.0, &cfg).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        SimConfig::new(-1.0, 1e-3, 10.0, 10, 0),
        SimConfig::new(1.0, 0.0, 10.0, 10, 0),
        SimConfig::new(1.0, 1e-3, 0.05, 10, 0),
        SimConfig::new(1.0, 1e-3, 10.0, 1, 0),
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
    let parsed: Result<SimConfig, _> =
        serde_json::from_str(r#"{"x0": 1, "dt": 0.001, "horizon": 1, "n_paths": 2, "speed": 3}"#);
    assert!(parsed.is_err());
}

#[test]
fn halving_the_band_moves_local_time_by_less_than_three_se() {
    let model = DiffusionModel::new(0.02, 0.2, 0.1).unwrap();
    let mut cfg = SimConfig::new(2.0, 1e-3, 1e3, 4000, 6);
    cfg.tail_bound = false;
    let wide = exit_local_time(&model, 1.0, 4.0, 2.0, &cfg).unwrap();
    cfg.c_band = 0.5;
    let narrow = exit_local_time(&model, 1.0, 4.0, 2.0, &cfg).unwrap();
    assert!(
        (wide.mean - narrow.mean).abs() < 3.0 * wide.se.max(narrow.se),
        "{} vs {}",
        wide.mean,
        narrow.mean
    );
}
