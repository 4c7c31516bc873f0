#![allow(dead_code)]

//! Independent reference computations shared by the integration tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustq::{DiscreteDistribution, QFunction, TabularRmdp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector with every entry at least `floor`.
pub fn random_probs(rng: &mut ChaCha8Rng, len: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = raw.iter().sum();
    let slack = 1.0 - floor * len as f64;
    raw.iter().map(|x| floor + slack * x / total).collect()
}

/// Random model with full-support transitions and up to three reward atoms.
pub fn random_model(seed: u64, n_states: usize, n_actions: usize, gamma: f64, delta: f64) -> TabularRmdp {
    let mut rng = rng(seed);
    let cells = n_states * n_actions;
    let mut rewards = Vec::with_capacity(cells);
    let mut transitions = Vec::with_capacity(cells);
    for _ in 0..cells {
        let atoms = rng.random_range(1..=3);
        let mut support: Vec<f64> = (0..atoms).map(|_| rng.random::<f64>()).collect();
        support.sort_by(f64::total_cmp);
        support.dedup();
        let p = random_probs(&mut rng, support.len(), 0.05);
        rewards.push(DiscreteDistribution::new(support, p).unwrap());
        let p = random_probs(&mut rng, n_states, 0.02);
        transitions.push(DiscreteDistribution::new((0..n_states).collect(), p).unwrap());
    }
    TabularRmdp::new(n_states, n_actions, gamma, delta, rewards, transitions).unwrap()
}

/// `−α log Σ μ_i e^{−u_i/α} − αδ`, shifted by the minimum for stability.
pub fn dual_fn(probs: &[f64], values: &[f64], delta: f64, alpha: f64) -> f64 {
    let lo = probs
        .iter()
        .zip(values)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, u)| *u)
        .fold(f64::INFINITY, f64::min);
    if alpha == 0.0 {
        return lo;
    }
    let z: f64 = probs
        .iter()
        .zip(values)
        .map(|(p, u)| p * (-(u - lo) / alpha).exp())
        .sum();
    lo - alpha * z.ln() - alpha * delta
}

/// Brute-force maximum of the dual over `α = 0` and `points − 1` log-spaced
/// multipliers in `[1e-9, 1e5]`.
pub fn grid_dual(probs: &[f64], values: &[f64], delta: f64, points: usize) -> f64 {
    let (lo, hi) = (1e-9f64.ln(), 1e5f64.ln());
    let step = (hi - lo) / (points - 2) as f64;
    let mut best = dual_fn(probs, values, delta, 0.0);
    for i in 0..points - 1 {
        let alpha = (lo + step * i as f64).exp();
        best = best.max(dual_fn(probs, values, delta, alpha));
    }
    best
}

fn tilt_point(probs: &[f64], values: &[f64], theta: f64) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = probs
        .iter()
        .zip(values)
        .map(|(p, u)| p * (-theta * (u - lo)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    let q: Vec<f64> = w.iter().map(|x| x / z).collect();
    let kl = q
        .iter()
        .zip(probs)
        .filter(|(qi, _)| **qi > 0.0)
        .map(|(qi, pi)| qi * (qi / pi).ln())
        .sum();
    (kl, q.iter().zip(values).map(|(qi, u)| qi * u).sum())
}

/// Worst case over a brute-force family of exponential tilts of `μ` that
/// stay inside the KL ball: the primal side of the duality. The scan over
/// `points` tilts is refined by bisection at the first infeasible one.
pub fn primal_tilt_search(probs: &[f64], values: &[f64], delta: f64, points: usize) -> f64 {
    let theta = |i: usize| 1e-3 * (1e7f64).powf(i as f64 / (points - 1) as f64);
    let mut best = tilt_point(probs, values, 0.0).1;
    for i in 0..points {
        let (kl, e) = tilt_point(probs, values, theta(i));
        if kl <= delta {
            best = best.min(e);
            continue;
        }
        let (mut a, mut b) = (if i == 0 { 0.0 } else { theta(i - 1) }, theta(i));
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if tilt_point(probs, values, mid).0 <= delta {
                a = mid;
            } else {
                b = mid;
            }
        }
        best = best.min(tilt_point(probs, values, a).1);
        break;
    }
    best
}

pub fn state_values(q: &QFunction) -> Vec<f64> {
    (0..q.n_states())
        .map(|s| q.row(s).iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// `E[r] + γ Σ P(s'|s,a) max_a' q(s',a')`.
pub fn classical_bellman(model: &TabularRmdp, q: &QFunction) -> QFunction {
    let v = state_values(q);
    QFunction::from_fn(model.n_states(), model.n_actions(), |s, a| {
        let r: f64 = model.reward(s, a).iter().map(|(x, p)| x * p).sum();
        let next: f64 = model.transition(s, a).iter().map(|(j, p)| p * v[j]).sum();
        r + model.gamma() * next
    })
}

/// Robust Bellman operator with every inner problem solved on a grid.
pub fn grid_bellman(model: &TabularRmdp, q: &QFunction, points: usize) -> QFunction {
    let v = state_values(q);
    let d = model.delta();
    QFunction::from_fn(model.n_states(), model.n_actions(), |s, a| {
        let r = model.reward(s, a);
        let t = model.transition(s, a);
        let rv = grid_dual(r.probs(), r.support(), d, points);
        let tv: Vec<f64> = t.support().iter().map(|j| v[*j]).collect();
        rv + model.gamma() * grid_dual(t.probs(), &tv, d, points)
    })
}

/// Value iteration with the grid operator, stopped after `iters` sweeps.
pub fn grid_value_iteration(model: &TabularRmdp, points: usize, iters: usize) -> QFunction {
    let mut q = QFunction::zeros(model.n_states(), model.n_actions());
    for _ in 0..iters {
        q = grid_bellman(model, &q, points);
    }
    q
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
