//! KL-robust expectations through their one-dimensional dual.
//!
//! For a reference measure `μ`, an integrand `u` and a radius `δ`,
//!
//! ```text
//! inf { E_P[u] : KL(P ‖ μ) ≤ δ } = sup_{α ≥ 0} f(α),
//! f(α) = −α log E_μ[exp(−u/α)] − αδ,      f(0) = essinf_μ u.
//! ```
//!
//! `f` is concave, and strictly concave on `(0, ∞)` unless `u` is
//! `μ`-a.s. constant. The maximizer is zero exactly when the mass `ρ` of the
//! essential-infimum atoms satisfies `ρ ≥ e^{−δ}`; otherwise it lies in
//! `(0, span(u)/δ]` and is found by golden-section search.
//!
//! All exponentials are taken of `−(u − min u)/α`, which is at most zero, and
//! the shift is added back analytically.

use crate::error::{Error, Result};
use crate::model::DiscreteDistribution;

/// Default search width in `α`.
pub const DEFAULT_TOL: f64 = 1e-10;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq)]
pub struct DualProblem {
    probs: Vec<f64>,
    values: Vec<f64>,
    delta: f64,
}

impl DualProblem {
    pub fn new(probs: Vec<f64>, values: Vec<f64>, delta: f64) -> Result<Self> {
        if probs.len() != values.len() || probs.is_empty() {
            return Err(Error::param(
                "mu",
                format!("{} probabilities for {} values", probs.len(), values.len()),
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::param("mu", "probabilities must be finite and >= 0"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param("mu", format!("probabilities sum to {total}")));
        }
        if values.iter().any(|u| !u.is_finite()) {
            return Err(Error::param("u", "integrand must be finite"));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::param("delta", format!("{delta} must be finite and >= 0")));
        }
        Ok(Self {
            probs,
            values,
            delta,
        })
    }

    pub fn from_distribution<T: Copy + PartialEq>(
        mu: &DiscreteDistribution<T>,
        u: impl Fn(T) -> f64,
        delta: f64,
    ) -> Result<Self> {
        Self::new(
            mu.probs().to_vec(),
            mu.support().iter().map(|x| u(*x)).collect(),
            delta,
        )
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn essinf(&self) -> f64 {
        essinf(&self.probs, &self.values)
    }

    pub fn mean(&self) -> f64 {
        mean(&self.probs, &self.values)
    }
}

/// How the supremum over the multiplier was attained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimumKind {
    /// `α* > 0`, located by search.
    Interior,
    /// `ρ ≥ e^{−δ}`: the adversary moves all mass onto the minimizing atoms.
    ZeroMultiplier,
    /// `u` is `μ`-a.s. constant.
    Constant,
    /// `δ = 0`: plain expectation, `α*` reported as `+∞`.
    Nonrobust,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DualOptimum {
    pub value: f64,
    pub alpha: f64,
    pub kind: OptimumKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub value: f64,
    pub alpha_star: f64,
    /// Worst-case measure over the same atoms as the reference.
    pub worst_case: Vec<f64>,
    pub kl_to_reference: f64,
    pub at_boundary_zero: bool,
    pub nonrobust: bool,
    pub kind: OptimumKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDiagnostics {
    /// `E_{μ*}[u] − value`.
    pub expectation_gap: f64,
    /// `|KL(μ* ‖ μ) − δ|`, reported when `0 < α* < ∞`.
    pub kl_gap: Option<f64>,
    /// For `α* = 0`: whether the value equals the essential infimum.
    pub essinf_confirmed: Option<bool>,
}

impl PrimalDiagnostics {
    pub fn within(&self, tol: f64) -> bool {
        self.expectation_gap.abs() <= tol
            && self.kl_gap.is_none_or(|g| g <= tol)
            && self.essinf_confirmed.unwrap_or(true)
    }
}

fn essinf(probs: &[f64], values: &[f64]) -> f64 {
    probs
        .iter()
        .zip(values)
        .filter(|(p, _)| **p > 0.0)
        .fold(f64::INFINITY, |m, (_, u)| m.min(*u))
}

fn mean(probs: &[f64], values: &[f64]) -> f64 {
    probs
        .iter()
        .zip(values)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, u)| p * u)
        .sum()
}

/// `f(α) − min u` for `α > 0`, with `lo = min u`.
#[inline]
fn shifted_objective(probs: &[f64], values: &[f64], lo: f64, delta: f64, alpha: f64) -> f64 {
    let mut z = 0.0;
    for (p, u) in probs.iter().zip(values) {
        if *p > 0.0 {
            z += p * (-(u - lo) / alpha).exp();
        }
    }
    -alpha * z.ln() - alpha * delta
}

/// Dual functional `f(μ, u, α)`; at `α = 0` this is the continuity limit
/// `essinf_μ u`.
pub fn dual_objective(problem: &DualProblem, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha", format!("{alpha} must be >= 0")));
    }
    let lo = problem.essinf();
    if alpha == 0.0 {
        return Ok(lo);
    }
    Ok(lo + shifted_objective(&problem.probs, &problem.values, lo, problem.delta, alpha))
}

/// Maximizes `f(α)` on `[lo, hi]` by golden-section search down to width `tol`.
pub(crate) fn golden_section_max(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // 300 reductions shrink any finite bracket below f64 resolution.
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `(f'(α), f''(α))` where `f'(α) = KL(μ_α ‖ μ) − δ` and
/// `f''(α) = −Var_{μ_α}(u)/α³` for the tilt `μ_α`.
fn derivatives(probs: &[f64], values: &[f64], lo: f64, delta: f64, alpha: f64) -> (f64, f64) {
    let mut z = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (p, u) in probs.iter().zip(values) {
        if *p > 0.0 {
            let w = u - lo;
            let e = p * (-w / alpha).exp();
            z += e;
            m1 += e * w;
            m2 += e * w * w;
        }
    }
    let (m1, m2) = (m1 / z, m2 / z);
    let kl = -m1 / alpha - z.ln();
    (kl - delta, -(m2 - m1 * m1).max(0.0) / alpha.powi(3))
}

/// A few safeguarded Newton steps on `f'(α) = 0`; golden-section search
/// alone stalls near `sqrt(machine epsilon)` because `f` is flat at its peak.
fn newton_polish(
    probs: &[f64],
    values: &[f64],
    lo: f64,
    delta: f64,
    mut alpha: f64,
    mut g: f64,
    bracket: f64,
) -> (f64, f64) {
    if !(alpha > 0.0) {
        return (alpha, g);
    }
    let (mut d1, mut d2) = derivatives(probs, values, lo, delta, alpha);
    for _ in 0..4 {
        if d1 == 0.0 || !(d2 < 0.0) {
            break;
        }
        let next = alpha - d1 / d2;
        if !(next > 0.0 && next <= bracket) {
            break;
        }
        let (n1, n2) = derivatives(probs, values, lo, delta, next);
        if !(n1.abs() < d1.abs()) {
            break;
        }
        alpha = next;
        (d1, d2) = (n1, n2);
        g = g.max(shifted_objective(probs, values, lo, delta, alpha));
    }
    (alpha, g)
}

/// Allocation-free solver used by the Bellman operators.
pub(crate) fn maximize(probs: &[f64], values: &[f64], delta: f64, tol: f64) -> DualOptimum {
    if delta == 0.0 {
        return DualOptimum {
            value: mean(probs, values),
            alpha: f64::INFINITY,
            kind: OptimumKind::Nonrobust,
        };
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (p, u) in probs.iter().zip(values) {
        if *p > 0.0 {
            lo = lo.min(*u);
            hi = hi.max(*u);
        }
    }
    if lo == hi {
        return DualOptimum {
            value: lo,
            alpha: 0.0,
            kind: OptimumKind::Constant,
        };
    }
    let rho: f64 = probs
        .iter()
        .zip(values)
        .filter(|(p, u)| **p > 0.0 && **u == lo)
        .map(|(p, _)| p)
        .sum();
    if rho >= (-delta).exp() {
        return DualOptimum {
            value: lo,
            alpha: 0.0,
            kind: OptimumKind::ZeroMultiplier,
        };
    }

    let bracket = (hi - lo) / delta;
    let (alpha, g) = golden_section_max(
        |a| shifted_objective(probs, values, lo, delta, a),
        0.0,
        bracket,
        tol,
    );
    let (alpha, g) = newton_polish(probs, values, lo, delta, alpha, g, bracket);
    let value = (lo + g.max(0.0)).min(mean(probs, values));
    DualOptimum {
        value,
        alpha,
        kind: OptimumKind::Interior,
    }
}

/// Probabilities proportional to `μ(y)·exp(−u(y)/α)`.
pub fn worst_case_measure(problem: &DualProblem, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::param(
            "alpha",
            "the exponential tilt needs alpha > 0; use the essential-infimum atoms at alpha = 0",
        ));
    }
    Ok(tilt(&problem.probs, &problem.values, alpha))
}

fn tilt(probs: &[f64], values: &[f64], alpha: f64) -> Vec<f64> {
    let lo = essinf(probs, values);
    let weights: Vec<f64> = probs
        .iter()
        .zip(values)
        .map(|(p, u)| if *p > 0.0 { p * (-(u - lo) / alpha).exp() } else { 0.0 })
        .collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// `KL(q ‖ p)` over a shared finite support.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> f64 {
    q.iter()
        .zip(p)
        .filter(|(qi, _)| **qi > 0.0)
        .map(|(qi, pi)| qi * (qi / pi).ln())
        .sum()
}

/// Solves `sup_{α ≥ 0} f(μ, u, α)` and reports the adversary's measure.
pub fn solve_dual(problem: &DualProblem, tol: f64) -> Result<DualSolution> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("{tol} must be > 0")));
    }
    let opt = maximize(&problem.probs, &problem.values, problem.delta, tol);
    let worst_case = match opt.kind {
        OptimumKind::Interior => tilt(&problem.probs, &problem.values, opt.alpha),
        OptimumKind::ZeroMultiplier => {
            let lo = problem.essinf();
            let mut w: Vec<f64> = problem
                .probs
                .iter()
                .zip(&problem.values)
                .map(|(p, u)| if *u == lo { *p } else { 0.0 })
                .collect();
            let z: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= z);
            w
        }
        OptimumKind::Constant | OptimumKind::Nonrobust => problem.probs.clone(),
    };
    let kl_to_reference = kl_divergence(&worst_case, &problem.probs);
    Ok(DualSolution {
        value: opt.value,
        alpha_star: opt.alpha,
        worst_case,
        kl_to_reference,
        at_boundary_zero: opt.kind == OptimumKind::ZeroMultiplier,
        nonrobust: opt.kind == OptimumKind::Nonrobust,
        kind: opt.kind,
    })
}

/// Checks strong duality and, for an interior multiplier, that the KL
/// constraint binds.
pub fn primal_check(problem: &DualProblem, solution: &DualSolution) -> PrimalDiagnostics {
    let expectation = mean(&solution.worst_case, &problem.values);
    let interior = solution.alpha_star > 0.0 && solution.alpha_star.is_finite();
    PrimalDiagnostics {
        expectation_gap: expectation - solution.value,
        kl_gap: interior.then(|| (solution.kl_to_reference - problem.delta).abs()),
        essinf_confirmed: (solution.alpha_star == 0.0)
            .then(|| solution.value == problem.essinf()),
    }
}

/// Directional derivative of the optimal value with respect to the reference
/// probabilities. Only differences along mass-preserving perturbations are
/// meaningful.
pub(crate) fn value_gradient(probs: &[f64], values: &[f64], opt: &DualOptimum) -> Vec<f64> {
    match opt.kind {
        OptimumKind::Nonrobust => values.to_vec(),
        OptimumKind::Constant | OptimumKind::ZeroMultiplier => vec![0.0; values.len()],
        OptimumKind::Interior => {
            let lo = essinf(probs, values);
            let w: Vec<f64> = values
                .iter()
                .map(|u| (-(u - lo) / opt.alpha).exp())
                .collect();
            let z: f64 = probs.iter().zip(&w).map(|(p, w)| p * w).sum();
            w.into_iter().map(|w| -opt.alpha * w / z).collect()
        }
    }
}
