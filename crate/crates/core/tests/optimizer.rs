use std::f64::consts::PI;
use std::sync::Mutex;

use proptest::prelude::*;

use ward_ident::optimizer::{
    optimize, sample_initial_population, Algorithm, OptimizerConfig, Parameter, ParameterSpace,
    StopReason,
};
use ward_ident::Error;

fn cube(dim: usize, half: f64) -> ParameterSpace {
    ParameterSpace::new(
        (0..dim)
            .map(|i| Parameter::linear(format!("x{i}"), -half, half))
            .collect(),
    )
    .unwrap()
}

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

/// Asymptotic Kolmogorov survival function P(K > λ).
fn kolmogorov_p(lambda: f64) -> f64 {
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

#[test]
fn pso_solves_the_sphere() {
    let cfg = OptimizerConfig::new(Algorithm::Pso, 50, 200, 7);
    let r = optimize(&cube(5, 5.0), sphere, &cfg).unwrap();
    assert!(r.best_objective <= 1e-3, "{}", r.best_objective);
    assert_eq!(r.best_objective, r.history.last().unwrap().best_objective);
    assert_eq!(sphere(&r.best), r.best_objective);
}

#[test]
fn de_reaches_a_good_rastrigin_basin() {
    let cfg = OptimizerConfig::new(Algorithm::De, 40, 300, 7);
    let r = optimize(&cube(2, 5.12), rastrigin, &cfg).unwrap();
    assert!(r.best_objective <= 1.0, "{}", r.best_objective);
}

#[test]
fn reruns_are_bit_identical() {
    for alg in [Algorithm::Pso, Algorithm::De] {
        let cfg = OptimizerConfig::new(alg, 20, 50, 11);
        let a = optimize(&cube(3, 2.0), rastrigin, &cfg).unwrap();
        let b = optimize(&cube(3, 2.0), rastrigin, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history_csv(), b.history_csv());
        let other = OptimizerConfig::new(alg, 20, 50, 12);
        assert_ne!(
            a.best,
            optimize(&cube(3, 2.0), rastrigin, &other).unwrap().best
        );
    }
}

#[test]
fn log_dimension_samples_are_log_uniform() {
    let space = ParameterSpace::new(vec![Parameter::log("k", 1e-3, 1e1)]).unwrap();
    let cfg = OptimizerConfig::new(Algorithm::Pso, 10_000, 1, 3);
    let mut logs: Vec<f64> = sample_initial_population(&space, &cfg)
        .iter()
        .map(|x| x[0].log10())
        .collect();
    logs.sort_by(f64::total_cmp);
    let n = logs.len() as f64;
    let d = logs
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let cdf = (v + 3.0) / 4.0;
            (cdf - i as f64 / n)
                .abs()
                .max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    let p = kolmogorov_p(d * n.sqrt());
    assert!(p > 0.01, "KS statistic {d}, p = {p}");
    assert!(logs[0] >= -3.0 && *logs.last().unwrap() <= 1.0);
}

#[test]
fn every_evaluation_stays_inside_the_box() {
    let space = ParameterSpace::new(vec![
        Parameter::linear("a", -1.0, 2.0),
        Parameter::log("b", 0.01, 100.0),
        Parameter::linear("c", 5.0, 6.0),
    ])
    .unwrap();
    for alg in [Algorithm::Pso, Algorithm::De] {
        let seen = Mutex::new(Vec::new());
        // optimum outside the box drives particles into the bounds
        let f = |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            (x[0] - 10.0).powi(2) + (x[1] - 1e4).abs() + (x[2] + 3.0).powi(2)
        };
        let cfg = OptimizerConfig::new(alg, 12, 40, 5);
        let r = optimize(&space, f, &cfg).unwrap();
        let seen = seen.into_inner().unwrap();
        assert_eq!(seen.len(), r.evaluations);
        assert!(r.evaluations <= 12 * (40 + 1));
        assert!(seen.iter().all(|x| space.contains(x)));
    }
}

#[test]
fn invalid_configuration_fails_before_evaluating() {
    let calls = Mutex::new(0);
    let f = |_: &[f64]| {
        *calls.lock().unwrap() += 1;
        0.0
    };
    let mut cfg = OptimizerConfig::new(Algorithm::De, 10, 10, 1);
    cfg.de.cr = 1.5;
    assert!(matches!(
        optimize(&cube(2, 1.0), f, &cfg),
        Err(Error::Invalid { .. })
    ));
    assert_eq!(*calls.lock().unwrap(), 0);
    assert!(ParameterSpace::new(vec![Parameter::linear("x", 1.0, 0.0)]).is_err());
    assert!(ParameterSpace::new(vec![Parameter::log("x", 0.0, 1.0)]).is_err());
    assert!(ParameterSpace::new(vec![
        Parameter::linear("x", 0.0, 1.0),
        Parameter::linear("x", 0.0, 2.0)
    ])
    .is_err());
}

#[test]
fn target_and_stagnation_stop_early() {
    let mut cfg = OptimizerConfig::new(Algorithm::Pso, 20, 500, 2);
    cfg.target = Some(1e-2);
    let r = optimize(&cube(2, 1.0), sphere, &cfg).unwrap();
    assert_eq!(r.stop_reason, StopReason::Target);
    assert!(r.best_objective <= 1e-2);

    let cfg = OptimizerConfig::new(Algorithm::De, 20, 500, 2);
    let r = optimize(&cube(2, 1.0), |_: &[f64]| 1.0, &cfg).unwrap();
    assert_eq!(r.stop_reason, StopReason::Stagnation);
    assert_eq!(r.history.len(), cfg.stagnation_window + 1);
}

#[test]
fn nan_objective_never_becomes_best() {
    let cfg = OptimizerConfig::new(Algorithm::Pso, 10, 20, 4);
    let r = optimize(
        &cube(2, 1.0),
        |x: &[f64]| if x[0] > 0.0 { f64::NAN } else { sphere(x) },
        &cfg,
    )
    .unwrap();
    assert!(r.best_objective.is_finite());
    assert!(r.best[0] <= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn best_history_never_increases(seed in any::<u64>(), de in any::<bool>()) {
        let alg = if de { Algorithm::De } else { Algorithm::Pso };
        let cfg = OptimizerConfig::new(alg, 8, 30, seed);
        let r = optimize(&cube(3, 5.12), rastrigin, &cfg).unwrap();
        prop_assert_eq!(r.history[0].iter, 0);
        for w in r.history.windows(2) {
            prop_assert!(w[1].best_objective <= w[0].best_objective);
        }
    }
}
