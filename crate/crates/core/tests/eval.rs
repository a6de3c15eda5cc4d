use cftrain_core::cegen::CounterfactualResult;
use cftrain_core::data::{gen_synthetic, standardize, train_test_split, SyntheticKind};
use cftrain_core::eval::*;
use cftrain_core::nn::{softmax, Matrix, MlpModel};
use cftrain_core::training::{train, Objective, TrainConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn brute_force_mmd(a: &Matrix, b: &Matrix, l: f64) -> f64 {
    let (m, n) = (a.rows(), b.rows());
    let mut xx = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                xx += gaussian_kernel(a.row(i), a.row(j), l);
            }
        }
    }
    let mut yy = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                yy += gaussian_kernel(b.row(i), b.row(j), l);
            }
        }
    }
    let mut xy = 0.0;
    for i in 0..m {
        for j in 0..n {
            xy += gaussian_kernel(a.row(i), b.row(j), l);
        }
    }
    xx / (m * (m - 1)) as f64 + yy / (n * (n - 1)) as f64 - 2.0 * xy / (m * n) as f64
}

fn normal_sample(rng: &mut ChaCha8Rng, n: usize, mean: f64) -> Matrix {
    let d = Normal::new(mean, 1.0).unwrap();
    Matrix::from_vec(n, 1, (0..n).map(|_| d.sample(rng)).collect())
}

fn result(prob: f64) -> CounterfactualResult {
    CounterfactualResult {
        x0: vec![0.0],
        y_factual: 0,
        y_target: 1,
        x_final: vec![1.0],
        mature: prob >= 0.5,
        steps_taken: 1,
        target_prob: prob,
        adversarial: None,
        y_ae: 0,
    }
}

#[test]
fn ip_matches_scalar_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let targets = Matrix::from_vec(50, 3, (0..150).map(|_| rng.gen_range(-2.0..2.0)).collect());
    let x = [0.3, -0.1, 1.0];
    let mut sum = 0.0;
    for r in 0..50 {
        for d in 0..3 {
            sum += (x[d] - targets.get(r, d)).abs();
        }
    }
    assert!((implausibility_ip(&x, &targets).unwrap() - sum / 50.0).abs() < 1e-12);
    let single = Matrix::from_rows(&[x]);
    assert_eq!(implausibility_ip(&x, &single).unwrap(), 0.0);
}

#[test]
fn mmd_matches_double_loop_and_separates_shifted_normals() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = normal_sample(&mut rng, 100, 0.0);
    let b = normal_sample(&mut rng, 100, 3.0);
    let mmd = mmd_unbiased(&a, &b, 0.5).unwrap();
    assert!((mmd - brute_force_mmd(&a, &b, 0.5)).abs() < 1e-12);
    assert!(mmd > 0.5);
    assert_eq!(gaussian_kernel(&[0.3, 0.7], &[0.3, 0.7], 0.5), 1.0);
}

#[test]
fn ipstar_null_on_resampled_targets() {
    let ds = gen_synthetic(SyntheticKind::Circles, 2000, 0.05, 3).unwrap();
    let (ds, _, _) = standardize(&ds);
    let targets = ds.class_samples(1).select_rows(&(0..200).collect::<Vec<_>>());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let idx: Vec<usize> = (0..200).map(|_| rng.gen_range(0..200)).collect();
    let cf = targets.select_rows(&idx);
    assert!(implausibility_ipstar(&cf, &targets).unwrap().abs() < 0.02);
}

#[test]
fn percentile_bounds_follow_sorted_array() {
    let mut v: Vec<f64> = (1..=100).map(f64::from).collect();
    v.reverse();
    let ci = bootstrap_percentile_ci(&v, 0.01).unwrap();
    let mut sorted = v.clone();
    sorted.sort_by(f64::total_cmp);
    // nearest rank: ⌈p·n⌉-th order statistic
    let rank = |p: f64| sorted[((p * 100.0).ceil() as usize).max(1) - 1];
    assert_eq!(ci.lb, rank(0.005));
    assert_eq!(ci.ub, rank(0.995));
    assert_eq!(ci.mean, 50.5);
}

#[test]
fn percentile_interval_coverage() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = Normal::new(5.0, 1.0).unwrap();
    let mut hits = 0;
    for _ in 0..100 {
        let v: Vec<f64> = (0..1000).map(|_| d.sample(&mut rng)).collect();
        let ci = bootstrap_percentile_ci(&v, 0.05).unwrap();
        hits += usize::from(ci.lb <= 5.0 && 5.0 <= ci.ub);
    }
    assert!(hits >= 90);
}

#[test]
fn validity_counts_and_is_monotone_in_threshold() {
    let results: Vec<_> = [0.1, 0.55, 0.96, 0.99, 0.5].into_iter().map(result).collect();
    assert_eq!(validity_rate(&results, 0.95).unwrap(), 0.4);
    assert_eq!(validity_rate(&results, 0.5).unwrap(), 0.8);
    let mut last = 1.0;
    for t in 1..100 {
        let v = validity_rate(&results, t as f64 / 100.0).unwrap();
        assert!(v <= last);
        last = v;
    }
    assert!(validity_rate(&[], 0.5).is_err());
    assert_eq!(cost_l1(&[1.0, -2.0], &[1.0, -2.0]), 0.0);
}

#[test]
fn ig_is_exact_on_linear_logits() {
    let theta = Matrix::from_rows(&[[0.5, -1.0, 2.0], [1.5, 0.25, -0.5]]);
    let model = MlpModel::linear(theta.clone(), vec![0.1, 0.2]).unwrap();
    let x = [0.4, -0.3, 0.9];
    let b = [-0.2, 0.6, 0.1];
    for steps in [1, 7, 64] {
        let g = integrated_gradients(&model, &x, &b, 1, steps, IgOutput::Logit).unwrap();
        for d in 0..3 {
            assert!((g[d] - theta.get(1, d) * (x[d] - b[d])).abs() < 1e-12);
        }
    }
}

fn self_comparison_setup() -> (MlpModel, cftrain_core::data::Dataset) {
    let ds = gen_synthetic(SyntheticKind::LinearlySeparable, 480, 0.5, 6).unwrap();
    let (tr, te) = train_test_split(&ds, 0.25, 7).unwrap();
    let init = MlpModel::new(2, &[8], 2, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let cfg = TrainConfig {
        objective: Objective::Vanilla,
        epochs: 5,
        ..TrainConfig::default()
    };
    (train(&tr, &init, &cfg).unwrap().model, te)
}

fn micro_eval() -> EvalConfig {
    EvalConfig {
        runs: 2,
        individuals: 10,
        ..EvalConfig::default()
    }
}

#[test]
fn self_comparison_is_null() {
    let (model, test) = self_comparison_setup();
    let cfg = EvalConfig {
        runs: 4,
        ..micro_eval()
    };
    let report = evaluate_models(&model, &model, &test, &test.specs, Scenario::Unconstrained, &cfg).unwrap();
    for c in &report.comparisons {
        assert!(!c.significant(), "{:?}", c.metric);
        if let Some(d) = c.difference {
            assert_eq!((d.lb, d.ub), (0.0, 0.0));
        }
    }
    assert_eq!(report.candidate_rounds, report.baseline_rounds);
}

#[test]
fn report_replays_from_round_outcomes() {
    let (model, test) = self_comparison_setup();
    let cfg = micro_eval();
    let report = evaluate_models(&model, &model, &test, &test.specs, Scenario::Unconstrained, &cfg).unwrap();
    for round in &report.candidate_rounds {
        let v = round.validity.unwrap();
        assert!((0.0..=1.0).contains(&v));
        if round.counterfactuals.is_empty() {
            continue;
        }
        let target = model.predict(&round.counterfactuals[0]).unwrap();
        for cf in &round.counterfactuals {
            assert!(softmax(&model.forward(cf).unwrap())[target] >= cfg.threshold);
        }
        let targets = test.class_samples(target);
        let ip: f64 = round
            .counterfactuals
            .iter()
            .map(|cf| implausibility_ip(cf, &targets).unwrap())
            .sum::<f64>()
            / round.counterfactuals.len() as f64;
        assert!((round.ip.unwrap() - ip).abs() < 1e-12);
        if round.counterfactuals.len() >= 2 {
            let cf = Matrix::from_rows(&round.counterfactuals);
            assert!((round.ipstar.unwrap() - brute_force_mmd(&cf, &targets, 0.5)).abs() < 1e-10);
        }
    }
    for metric in Metric::ALL {
        let c = report.comparison(metric);
        let values: Vec<f64> = report.candidate_rounds.iter().filter_map(|r| r.get(metric)).collect();
        if values.len() == c.rounds && c.rounds >= 2 {
            assert_eq!(c.candidate, Some(bootstrap_percentile_ci(&values, cfg.alpha).unwrap()));
        }
    }
}

#[test]
fn sensitivity_of_a_model_against_itself_is_unit_ratio() {
    let (model, test) = self_comparison_setup();
    let cfg = EvalConfig {
        runs: 3,
        ig_samples: 20,
        ig_steps: 16,
        ..micro_eval()
    };
    let s = protected_sensitivity(&model, &model, &test, 0, &cfg).unwrap();
    assert_eq!((s.ratio.lb, s.ratio.ub), (1.0, 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn mmd_matches_double_loop(seed in 0u64..10_000, m in 2usize..15, n in 2usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_vec(m, 2, (0..2 * m).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let b = Matrix::from_vec(n, 2, (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let fast = mmd_unbiased(&a, &b, 0.5).unwrap();
        prop_assert!((fast - brute_force_mmd(&a, &b, 0.5)).abs() <= 1e-12);
        prop_assert!((fast - mmd_unbiased(&b, &a, 0.5).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn ig_completeness(seed in 0u64..10_000, class in 0usize..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = MlpModel::new(3, &[8], 2, &mut rng).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = integrated_gradients(&model, &x, &b, class, 200, IgOutput::Probability).unwrap();
        let f = |p: &[f64]| softmax(&model.forward(p).unwrap())[class];
        prop_assert!((g.iter().sum::<f64>() - (f(&x) - f(&b))).abs() < 1e-2);
    }

    #[test]
    fn minmax_spans_unit_interval(g in prop::collection::vec(-10.0f64..10.0, 2..10)) {
        let s = standardize_ig(&g, IgScaling::MinMax);
        let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = g.iter().copied().fold(f64::INFINITY, f64::min);
        if max > min {
            prop_assert_eq!(s.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
            prop_assert_eq!(s.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
    }

    #[test]
    fn interval_bounds_are_sample_values(v in prop::collection::vec(-100.0f64..100.0, 2..60), alpha in 0.001f64..0.5) {
        let ci = bootstrap_percentile_ci(&v, alpha).unwrap();
        prop_assert!(ci.lb <= ci.ub);
        prop_assert!(v.contains(&ci.lb) && v.contains(&ci.ub));
    }
}
