//! Ground-truth robust q-functions by fixed-point iteration of the exact
//! operator.

use crate::bellman::DrOperator;
use crate::dual::DEFAULT_TOL;
use crate::error::{Error, Result};
use crate::model::{Policy, QFunction, TabularRmdp};

pub const DEFAULT_ORACLE_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub q_star: QFunction,
    pub iterations: usize,
    /// `‖T(q) − q‖_∞` at the returned q.
    pub residual: f64,
    pub converged: bool,
    /// Certified `‖q − q*‖_∞` bound, `γ/(1−γ)` times the last step.
    pub error_bound: f64,
}

/// Iterates `q ← T(q)` from `q ≡ 0` until the last step is at most
/// `tol·(1−γ)/γ`, which certifies `‖q − q*‖_∞ ≤ tol`.
pub fn solve_fixed_point(
    model: &TabularRmdp,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("{tol} must be > 0")));
    }
    let op = DrOperator::exact(model, DEFAULT_TOL);
    iterate(model.gamma(), tol, max_iter, QFunction::zeros(model.n_states(), model.n_actions()), |q| {
        op.apply(q)
    })
}

/// Classical (`δ = 0`) counterpart of [`solve_fixed_point`].
pub fn nonrobust_fixed_point(
    model: &TabularRmdp,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult> {
    solve_fixed_point(&model.with_delta(0.0)?, tol, max_iter)
}

/// Robust q-function of a fixed policy: the fixed point of the DR operator
/// with `v(s) = q(s, π(s))`.
pub fn robust_policy_q(
    model: &TabularRmdp,
    policy: &Policy,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult> {
    if policy.actions.len() != model.n_states()
        || policy.actions.iter().any(|a| *a >= model.n_actions())
    {
        return Err(Error::param("policy", "one valid action per state is required"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("{tol} must be > 0")));
    }
    let op = DrOperator::exact(model, DEFAULT_TOL);
    iterate(model.gamma(), tol, max_iter, QFunction::zeros(model.n_states(), model.n_actions()), |q| {
        let v: Vec<f64> = policy
            .actions
            .iter()
            .enumerate()
            .map(|(s, a)| q.get(s, *a))
            .collect();
        op.apply_to_values(&v)
    })
}

fn iterate(
    gamma: f64,
    tol: f64,
    max_iter: usize,
    mut q: QFunction,
    op: impl Fn(&QFunction) -> QFunction,
) -> Result<FixedPointResult> {
    let step_target = tol * (1.0 - gamma) / gamma;
    let mut step = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let next = op(&q);
        step = next.sup_distance(&q);
        q = next;
        iterations += 1;
        if step <= step_target {
            break;
        }
    }
    let residual = op(&q).sup_distance(&q);
    Ok(FixedPointResult {
        q_star: q,
        iterations,
        residual,
        converged: step <= step_target,
        error_bound: gamma / (1.0 - gamma) * step,
    })
}
