use cftrain_core::attacks::*;
use cftrain_core::data::{gen_gaussian_classes, train_test_split, Dataset};
use cftrain_core::nn::{grad_input, Matrix, MlpModel};
use cftrain_core::training::{train, Objective, TrainConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mlp(seed: u64, dim: usize) -> MlpModel {
    MlpModel::new(dim, &[8], 2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn gaussian_10d(per_class: usize, seed: u64) -> Dataset {
    let mut m0 = vec![-1.0];
    let mut m1 = vec![1.0];
    let mut s = vec![0.7];
    for _ in 1..10 {
        m0.push(-0.08);
        m1.push(0.08);
        s.push(0.1);
    }
    gen_gaussian_classes(&[m0, m1], &s, per_class, seed).unwrap()
}

#[test]
fn fgsm_moves_every_informative_coordinate_by_epsilon() {
    for seed in 0..20 {
        let model = random_mlp(seed, 4);
        let x = [0.3, -0.5, 1.2, 0.0];
        let (_, g) = grad_input(&model, &x, |_, xv, p| Ok(p.forward(xv).cross_entropy(&[1]).sum())).unwrap();
        let adv = fgsm(&model, &x, 1, 0.07, &[]).unwrap();
        for d in 0..4 {
            let moved = (adv[d] - x[d]).abs();
            if g[d] != 0.0 {
                assert!((moved - 0.07).abs() < 1e-12);
                assert_eq!((adv[d] - x[d]).signum(), g[d].signum());
            } else {
                assert_eq!(moved, 0.0);
            }
        }
    }
}

#[test]
fn pgd_iterates_stay_in_the_ball() {
    let model = random_mlp(3, 3);
    let x = [0.1, 0.2, -0.3];
    let cfg = AttackConfig::pgd(0.05);
    let mut seen = 0;
    let out = pgd_trajectory(&model, &x, 0, &cfg, &[], |it| {
        seen += 1;
        assert!(linf(it, &x) <= 0.05 + 1e-12);
    })
    .unwrap();
    assert_eq!(seen, 40);
    assert!(linf(&out, &x) <= 0.05 + 1e-12);
}

#[test]
fn constant_classifier_has_flat_curve() {
    let ds = gaussian_10d(30, 1);
    let model = MlpModel::linear(Matrix::zeros(2, 10), vec![0.0, 1.0]).unwrap();
    let curve = robust_accuracy(&model, &ds, AttackKind::Fgsm, &[0.0, 0.05, 0.1]).unwrap();
    for (_, acc) in curve {
        assert_eq!(acc, 0.5);
    }
}

#[test]
fn empty_test_set_is_rejected() {
    let ds = gaussian_10d(2, 1);
    let empty = Dataset { x: Matrix::zeros(0, 10), y: vec![], ..ds };
    assert!(robust_accuracy(&random_mlp(0, 10), &empty, AttackKind::Pgd, &[0.1]).is_err());
}

#[test]
fn vanilla_model_loses_accuracy_under_attack() {
    let ds = gaussian_10d(400, 2);
    let (tr, te) = train_test_split(&ds, 0.25, 3).unwrap();
    let init = MlpModel::new(10, &[32], 2, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let cfg = TrainConfig {
        objective: Objective::Vanilla,
        epochs: 30,
        ..TrainConfig::default()
    };
    let model = train(&tr, &init, &cfg).unwrap().model;
    let eps: Vec<f64> = (0..=10).map(|i| i as f64 / 100.0).collect();
    let curve = robust_accuracy(&model, &te, AttackKind::Fgsm, &eps).unwrap();
    assert_eq!(curve[0].1, model.accuracy(&te.x, &te.y).unwrap());
    assert!(curve[10].1 < curve[0].1);
    // sampling noise allowance of one test point per step
    let slack = 1.0 / te.len() as f64;
    for w in curve.windows(2) {
        assert!(w[1].1 <= w[0].1 + slack, "{:?}", curve);
    }
    let pgd = robust_accuracy(&model, &te, AttackKind::Pgd, &[0.0, 0.1]).unwrap();
    assert_eq!(pgd[0].1, curve[0].1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn attacks_respect_budget_and_domain(
        seed in 0u64..10_000,
        eps in 0.0f64..0.5,
        y in 0usize..2,
        pgd_kind in any::<bool>(),
        bounded in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_mlp(seed, 3);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let domain: Vec<Option<(f64, f64)>> = if bounded {
            x.iter().map(|v| Some((v - 0.02, v + 1.0))).collect()
        } else {
            Vec::new()
        };
        let cfg = if pgd_kind { AttackConfig::pgd(eps) } else { AttackConfig::fgsm(eps) };
        let adv = attack(&model, &x, y, &cfg, &domain).unwrap();
        prop_assert!(linf(&adv, &x) <= eps + 1e-12);
        for (v, d) in adv.iter().zip(&domain) {
            let (lb, ub) = d.unwrap();
            prop_assert!(lb <= *v && *v <= ub);
        }
    }
}
