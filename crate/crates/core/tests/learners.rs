mod common;

use proptest::prelude::*;
use robustq::bench::{
    build_hard_mdp, build_mixing_mdp, error_curve, fit_loglog_slope, geometric_budgets, Algorithm,
};
use robustq::oracle::DEFAULT_MAX_ITER;
use robustq::q_learning::{default_drql_params, Checkpoints, RecipeConstants, StepSchedule};
use robustq::vr_q_learning::{default_vrql_params, epochs_for};
use robustq::{
    run_drql, run_nonrobust_vrql, run_standard_ql, run_vrql, solve_fixed_point,
    DiscreteDistribution, DrqlParams, QFunction, RunOptions, TabularRmdp, VrqlParams,
};

fn q_star(model: &TabularRmdp) -> QFunction {
    solve_fixed_point(model, 1e-12, DEFAULT_MAX_ITER).unwrap().q_star
}

fn with_reference(q: &QFunction) -> RunOptions<'_> {
    RunOptions {
        q_star: Some(q),
        checkpoints: Checkpoints::Every(1),
        keep_snapshots: true,
        ..RunOptions::default()
    }
}

#[test]
fn stepsize_sums() {
    for gamma in [0.5, 0.9, 0.99] {
        let s = StepSchedule::new(gamma);
        let g = 1.0 - gamma;
        let (mut lin, mut root) = (0.0, 0.0);
        for k in 1..=100_000usize {
            lin += s.step(k);
            root += s.step(k).sqrt();
            assert!(lin <= (1.0 + g * k as f64).ln() / g + 1e-12, "gamma {gamma}, k {k}");
            assert!(root <= 2.0 / (g * s.step(k).sqrt()) + 1e-12, "gamma {gamma}, k {k}");
        }
    }
}

#[test]
fn recipe_fixtures() {
    let hard = build_hard_mdp(0.6, 0.1).unwrap();
    let c = RecipeConstants::default();
    let p = default_drql_params(&hard, 0.1, 0.05, c, 0).unwrap();
    assert_eq!((p.k0, p.n0), (211_772, 2_303_489));

    let v = default_vrql_params(&hard, 0.05, 0.05, c, 0).unwrap();
    assert_eq!((v.l_vr, v.k_vr, v.n_vr), (6, 7, 5_178_096));
    assert_eq!(
        v.m,
        vec![211_685, 846_738, 3_386_949, 13_547_793, 54_191_169, 216_764_674]
    );

    // halving the effective horizon gap at least multiplies k0 by 8
    let longer = build_hard_mdp(0.8, 0.1).unwrap();
    assert!(default_drql_params(&longer, 0.1, 0.05, c, 0).unwrap().k0 >= 8 * p.k0);
    let finer = default_drql_params(&hard, 0.05, 0.05, c, 0).unwrap();
    assert!(finer.k0 >= 2 * p.k0 && finer.n0 >= 2 * p.n0);

    assert_eq!(epochs_for(0.5 / 0.4, 0.6), 1);
    assert!(default_vrql_params(&hard, 2.5, 0.05, c, 0).is_err());
}

#[test]
fn point_mass_model_follows_exact_recursion() {
    let m = TabularRmdp::new(
        2,
        2,
        0.7,
        0.2,
        vec![
            DiscreteDistribution::point_mass(1.0),
            DiscreteDistribution::point_mass(0.2),
            DiscreteDistribution::point_mass(0.0),
            DiscreteDistribution::point_mass(0.5),
        ],
        vec![
            DiscreteDistribution::point_mass(1),
            DiscreteDistribution::point_mass(0),
            DiscreteDistribution::point_mass(0),
            DiscreteDistribution::point_mass(1),
        ],
    )
    .unwrap();
    let q = q_star(&m);
    let out = run_drql(&m, &DrqlParams::new(300, 3, 1).unwrap(), &with_reference(&q)).unwrap();
    let errors: Vec<f64> = out.trace.iter().map(|r| r.error.unwrap()).collect();
    assert!(errors.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    assert!(errors.last().unwrap() < &0.05);
}

#[test]
fn iterates_stay_bounded() {
    for (seed, model) in [
        (1, build_hard_mdp(0.6, 0.1).unwrap()),
        (2, build_mixing_mdp(0.8, 3.0, 0.2).unwrap()),
        (3, common::random_model(9, 4, 3, 0.9, 0.1)),
    ] {
        let bound = model.r_max() / (1.0 - model.gamma()) + 1.0;
        let q = q_star(&model);
        let opts = with_reference(&q);
        let d = run_drql(&model, &DrqlParams::new(400, 4, seed).unwrap(), &opts).unwrap();
        for r in &d.trace {
            assert!(r.q.as_ref().unwrap().sup_norm() <= bound);
        }
        let v = run_vrql(&model, &VrqlParams::geometric(3, 20, 4, 5.0, seed).unwrap(), &opts).unwrap();
        for r in &v.trace {
            assert!(r.q.as_ref().unwrap().sup_norm() <= bound);
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let m = build_mixing_mdp(0.7, 2.0, 0.1).unwrap();
    let q = q_star(&m);
    let opts = RunOptions {
        trajectory: 5,
        ..with_reference(&q)
    };
    let p = DrqlParams::new(120, 6, 99).unwrap();
    assert_eq!(run_drql(&m, &p, &opts).unwrap(), run_drql(&m, &p, &opts).unwrap());
    let v = VrqlParams::geometric(3, 8, 10, 4.0, 99).unwrap();
    assert_eq!(run_vrql(&m, &v, &opts).unwrap(), run_vrql(&m, &v, &opts).unwrap());

    let other = RunOptions {
        trajectory: 6,
        ..with_reference(&q)
    };
    assert_ne!(run_drql(&m, &p, &opts).unwrap().q, run_drql(&m, &p, &other).unwrap().q);
}

#[test]
fn nonrobust_runs_match_zero_radius_runs() {
    let robust = build_mixing_mdp(0.7, 2.0, 0.3).unwrap();
    let plain = robust.with_delta(0.0).unwrap();
    let opts = RunOptions::default();
    let v = VrqlParams::geometric(3, 6, 12, 3.0, 4).unwrap();
    assert_eq!(
        run_nonrobust_vrql(&robust, &v, &opts).unwrap().q,
        run_vrql(&plain, &v, &opts).unwrap().q
    );
    let p = DrqlParams::new(50, 5, 4).unwrap();
    assert_eq!(
        run_standard_ql(&robust, &p, &opts).unwrap().q,
        run_drql(&plain, &p, &opts).unwrap().q
    );
}

#[test]
fn standard_ql_reaches_target_on_mixing() {
    let m = build_mixing_mdp(0.6, 2.0, 0.0).unwrap();
    let q = q_star(&m);
    let out = run_standard_ql(&m, &DrqlParams::new(400, 400, 8).unwrap(), &with_reference(&q)).unwrap();
    assert!(out.q.sup_distance(&q) <= 0.05);
}

#[test]
fn sample_accounting_matches_formula() {
    let m = build_hard_mdp(0.6, 0.1).unwrap();
    let v = VrqlParams::new(3, 4, 7, vec![5, 11, 40], 0).unwrap();
    let out = run_vrql(&m, &v, &RunOptions::default()).unwrap();
    let cells = m.n_cells() as u64;
    for r in &out.trace {
        let l = r.epoch as u64;
        let m_sum: u64 = v.m.iter().take(r.epoch).map(|x| *x as u64).sum();
        let within = r.inner_iter as u64 * 7;
        assert_eq!(r.samples, cells * ((l - 1) * 7 * 4 + within + m_sum));
    }
    assert_eq!(out.samples, cells * (3 * 7 * 4 + 56));
    assert_eq!(out.samples, v.samples_through(&m, 3));
}

#[test]
fn epochs_contract_geometrically() {
    let m = build_mixing_mdp(0.6, 2.0, 0.1).unwrap();
    let q = q_star(&m);
    let params = VrqlParams::geometric(5, 12, 2_000, 2_000.0, 3).unwrap();
    let mut ratios = Vec::new();
    for t in 0..20u64 {
        let opts = RunOptions {
            trajectory: t,
            ..with_reference(&q)
        };
        let e = run_vrql(&m, &params, &opts).unwrap().epoch_errors;
        ratios.extend(e.windows(2).take(3).map(|w| w[0] / w[1]));
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    assert!(median >= 1.5, "median per-epoch contraction {median}");
}

#[test]
fn hard_instance_epochs_halve() {
    let m = build_hard_mdp(0.6, 0.1).unwrap();
    let q = q_star(&m);
    let params = VrqlParams::geometric(5, 10, 500, 500.0, 12).unwrap();
    let h = m.horizon();
    let good = (0..50u64)
        .filter(|t| {
            let opts = RunOptions {
                trajectory: *t,
                checkpoints: Checkpoints::At(Vec::new()),
                ..with_reference(&q)
            };
            run_vrql(&m, &params, &opts)
                .unwrap()
                .epoch_errors
                .iter()
                .enumerate()
                .all(|(l, e)| *e <= h / 2f64.powi(l as i32 + 1))
        })
        .count();
    assert!(good >= 45, "{good}/50");
}

#[test]
fn stop_below_ends_run_early() {
    let m = build_mixing_mdp(0.6, 2.0, 0.1).unwrap();
    let q = q_star(&m);
    let opts = RunOptions {
        stop_below: Some(0.1),
        ..with_reference(&q)
    };
    let out = run_vrql(&m, &VrqlParams::geometric(8, 10, 100, 100.0, 0).unwrap(), &opts).unwrap();
    assert!(out.stopped_early);
    assert!(out.trace.last().unwrap().error.unwrap() <= 0.1);
    let d = run_drql(&m, &DrqlParams::new(10_000, 50, 0).unwrap(), &opts).unwrap();
    assert!(d.iterations < 10_000);
    assert_eq!(d.samples, (m.n_cells() * 50 * d.iterations) as u64);
}

#[test]
fn curves_are_stable_in_trajectory_count() {
    let m = build_hard_mdp(0.6, 0.1).unwrap();
    let q = q_star(&m);
    let algo = Algorithm::Drql(DrqlParams::new(2_000, 40, 3).unwrap());
    let budgets = geometric_budgets(8 * 40 * 10, 8 * 40 * 2_000, 8);
    let a = error_curve(&m, &algo, &q, &budgets, 10).unwrap();
    let b = error_curve(&m, &algo, &q, &budgets, 20).unwrap();
    assert_eq!(a.points.len(), b.points.len());
    for (x, y) in a.points.iter().zip(&b.points) {
        assert_eq!(x.samples, y.samples);
        assert!((x.error - y.error).abs() <= 3.0 * (x.stderr + y.stderr) + 1e-9);
    }
}

#[test]
fn variance_reduction_wins_on_the_tail() {
    let m = build_hard_mdp(0.6, 0.1).unwrap();
    let q = q_star(&m);
    let vr = VrqlParams::geometric(5, 10, 500, 500.0, 1).unwrap();
    let total = vr.samples_through(&m, vr.l_vr);
    let budgets = geometric_budgets(total / 8, total, 4);
    let v = error_curve(&m, &Algorithm::Vrql(vr), &q, &budgets, 10).unwrap();
    let d = error_curve(&m, &Algorithm::BalancedDrql { seed: 1 }, &q, &budgets, 10).unwrap();
    let (vl, dl) = (v.points.last().unwrap(), d.points.last().unwrap());
    assert!(vl.error < dl.error, "{} vs {}", vl.error, dl.error);
    assert!(fit_loglog_slope(&d.xy(), 1.0).unwrap().slope < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn drql_iterates_are_bounded_on_random_models(seed in 0u64..100_000, gamma in 0.5f64..0.95, delta in 0.0f64..0.3) {
        let m = common::random_model(seed, 3, 2, gamma, delta);
        let bound = m.r_max() / (1.0 - gamma) + 1.0;
        let opts = RunOptions { checkpoints: Checkpoints::Every(1), keep_snapshots: true, ..RunOptions::default() };
        let out = run_drql(&m, &DrqlParams::new(60, 3, seed).unwrap(), &opts).unwrap();
        for r in &out.trace {
            prop_assert!(r.q.as_ref().unwrap().sup_norm() <= bound);
        }
    }
}
