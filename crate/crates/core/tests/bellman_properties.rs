mod common;

use proptest::prelude::*;
use rand::Rng;
use robustq::bench::{build_hard_mdp, build_mixing_mdp};
use robustq::dual::DEFAULT_TOL;
use robustq::rng::{RngStream, Stage};
use robustq::{
    empirical_bellman, exact_bellman, recentered_empirical, sample_empirical_model, DrOperator,
    EmpiricalModel, QFunction,
};

fn random_q(seed: u64, ns: usize, na: usize, scale: f64) -> QFunction {
    let mut rng = common::rng(seed);
    QFunction::from_fn(ns, na, |_, _| (rng.random::<f64>() - 0.3) * scale)
}

#[test]
fn mixing_operator_matches_grid_oracle() {
    let model = build_mixing_mdp(0.6, 2.0, 0.1).unwrap();
    let zero = QFunction::zeros(2, 2);
    let got = exact_bellman(&model, &zero).unwrap();
    assert!(got.sup_distance(&common::grid_bellman(&model, &zero, 200_000)) < 1e-6);
    assert_eq!(got.rows(), vec![vec![1.0, 1.0], vec![0.0, 0.0]]);

    let q = QFunction::from_rows(vec![vec![2.0, 1.5], vec![0.3, 0.7]]).unwrap();
    let got = exact_bellman(&model, &q).unwrap();
    assert!(got.sup_distance(&common::grid_bellman(&model, &q, 200_000)) < 1e-6);
}

#[test]
fn empirical_operator_is_exact_operator_of_frequencies() {
    let model = common::random_model(1, 2, 2, 0.8, 0.1);
    let emp = sample_empirical_model(&model, 4, RngStream::new(1, 0, Stage::Diagnostics, 0, 0)).unwrap();
    let as_model = emp.to_model(0.1).unwrap();
    for seed in 0..20 {
        let q = random_q(seed, 2, 2, 5.0);
        let a = empirical_bellman(&emp, &q, 0.1).unwrap();
        let b = exact_bellman(&as_model, &q).unwrap();
        assert!(a.sup_distance(&b) <= 1e-12);
    }
}

#[test]
fn reference_limit_is_exact_operator() {
    let model = build_hard_mdp(0.6, 0.1).unwrap();
    let emp = EmpiricalModel::from_reference(&model);
    let q = random_q(3, 4, 2, 2.0);
    assert_eq!(
        empirical_bellman(&emp, &q, 0.1).unwrap(),
        exact_bellman(&model, &q).unwrap()
    );
}

#[test]
fn single_draw_gives_point_masses_and_sampling_is_repeatable() {
    let model = common::random_model(2, 3, 2, 0.7, 0.1);
    let stream = RngStream::new(9, 4, Stage::QLearning, 2, 0);
    let emp = sample_empirical_model(&model, 1, stream).unwrap();
    for s in 0..3 {
        for a in 0..2 {
            assert_eq!(emp.reward(s, a).probs().iter().filter(|p| **p > 0.0).count(), 1);
            assert_eq!(emp.transition(s, a).probs().iter().filter(|p| **p > 0.0).count(), 1);
        }
    }
    assert_eq!(emp, sample_empirical_model(&model, 1, stream).unwrap());
}

#[test]
fn large_sample_frequencies_obey_hoeffding() {
    // P(|f - 1/2| > 0.01) <= 2 exp(-2 n 0.01^2) = 2e-8.7 at n = 1e5
    let model = build_mixing_mdp(0.6, 2.0, 0.1).unwrap();
    for trajectory in 0..5 {
        let stream = RngStream::new(17, trajectory, Stage::Diagnostics, 0, 0);
        let emp = sample_empirical_model(&model, 100_000, stream).unwrap();
        for s in 0..2 {
            for a in 0..2 {
                for p in emp.transition(s, a).probs() {
                    assert!((p - 0.5).abs() <= 0.01, "{p}");
                }
            }
        }
    }
}

#[test]
fn recentered_difference_matches_two_calls() {
    let model = common::random_model(5, 3, 2, 0.9, 0.2);
    let emp = sample_empirical_model(&model, 8, RngStream::new(2, 0, Stage::InnerLoop, 0, 0)).unwrap();
    let q = random_q(10, 3, 2, 4.0);
    let q_ref = random_q(11, 3, 2, 4.0);
    let got = recentered_empirical(&emp, &q, &q_ref, 0.2).unwrap();
    let want = &empirical_bellman(&emp, &q, 0.2).unwrap() - &empirical_bellman(&emp, &q_ref, 0.2).unwrap();
    assert_eq!(got, want);
    assert!(got.sup_norm() <= 0.9 * q.sup_distance(&q_ref) + 1e-9);
    assert_eq!(recentered_empirical(&emp, &q, &q, 0.2).unwrap().sup_norm(), 0.0);
}

#[test]
fn zero_q_with_point_mass_rewards_returns_rewards() {
    let model = build_hard_mdp(0.7, 0.3).unwrap();
    let out = exact_bellman(&model, &QFunction::zeros(4, 2)).unwrap();
    assert_eq!(out.rows(), vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn empirical_operator_is_monotone_contraction(
        seed in 0u64..1_000_000,
        ns in 2usize..5,
        na in 1usize..3,
        gamma in 0.3f64..0.99,
        delta in 0.0f64..0.5,
        n in 1usize..30,
    ) {
        let model = common::random_model(seed, ns, na, gamma, delta);
        let emp = sample_empirical_model(&model, n, RngStream::new(seed, 0, Stage::Diagnostics, 0, 0)).unwrap();
        let op = DrOperator::empirical(&emp, delta, DEFAULT_TOL);
        let q1 = random_q(seed ^ 1, ns, na, 10.0);
        let q2 = random_q(seed ^ 2, ns, na, 10.0);
        let t1 = op.apply(&q1);
        let t2 = op.apply(&q2);
        prop_assert!(t1.sup_distance(&t2) <= gamma * q1.sup_distance(&q2) + 1e-9);

        let hi = QFunction::from_fn(ns, na, |s, a| q1.get(s, a).max(q2.get(s, a)));
        let lo = QFunction::from_fn(ns, na, |s, a| q1.get(s, a).min(q2.get(s, a)));
        let (th, tl) = (op.apply(&hi), op.apply(&lo));
        prop_assert!(th.values().iter().zip(tl.values()).all(|(h, l)| *h >= l - 1e-9));

        // probability-one distance to the exact operator
        let exact = DrOperator::exact(&model, DEFAULT_TOL).apply(&q1);
        prop_assert!(t1.sup_distance(&exact) <= 2.0 * (model.r_max() + q1.sup_norm()) + 1e-12);
    }

    #[test]
    fn constant_shift_passes_through_discounted(
        seed in 0u64..1_000_000,
        delta in 0.0f64..0.5,
        c in -20.0f64..20.0,
    ) {
        let model = common::random_model(seed, 3, 2, 0.85, delta);
        let emp = sample_empirical_model(&model, 6, RngStream::new(seed, 1, Stage::Diagnostics, 0, 0)).unwrap();
        let op = DrOperator::empirical(&emp, delta, DEFAULT_TOL);
        let q = random_q(seed, 3, 2, 5.0);
        let a = op.apply(&q.add_scalar(c));
        let b = op.apply(&q).add_scalar(0.85 * c);
        prop_assert!(a.sup_distance(&b) <= 1e-8);
    }
}

#[test]
fn nonrobust_operator_is_classical() {
    for seed in 0..50 {
        let model = common::random_model(seed, 4, 3, 0.9, 0.0);
        let q = random_q(seed + 100, 4, 3, 6.0);
        let got = exact_bellman(&model, &q).unwrap();
        assert!(got.sup_distance(&common::classical_bellman(&model, &q)) <= 1e-10);
    }
}
