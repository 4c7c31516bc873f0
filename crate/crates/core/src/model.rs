//! Robust tabular MDPs, q-functions, greedy policies and model-level metrics.
//!
//! Every (state, action) cell carries a finite reward distribution and a
//! transition distribution over state indices. A single KL radius `delta`
//! bounds how far the adversary may move either distribution.

use std::fmt;
use std::ops::{Add, Sub};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution. Distributions within this
/// tolerance are renormalized once at construction.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Finite distribution over distinct atoms.
///
/// Atoms with zero mass are allowed; empirical measures keep the reference
/// support and give unobserved atoms probability zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<T = f64> {
    support: Vec<T>,
    probs: Vec<f64>,
}

impl<T: Copy + PartialEq> DiscreteDistribution<T> {
    /// Builds a distribution, merging duplicate atoms and renormalizing when
    /// the total mass is within [`PROB_TOLERANCE`] of one.
    pub fn new(support: Vec<T>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::Distribution(format!(
                "support has {} atoms but {} probabilities were given",
                support.len(),
                probs.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::Distribution("empty support".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Distribution(format!("invalid probability {p}")));
        }

        let mut atoms: Vec<T> = Vec::with_capacity(support.len());
        let mut mass: Vec<f64> = Vec::with_capacity(support.len());
        for (x, p) in support.into_iter().zip(probs) {
            match atoms.iter().position(|y| *y == x) {
                Some(i) => mass[i] += p,
                None => {
                    atoms.push(x);
                    mass.push(p);
                }
            }
        }

        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::Distribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        mass.iter_mut().for_each(|p| *p /= total);
        Ok(Self {
            support: atoms,
            probs: mass,
        })
    }

    pub fn point_mass(atom: T) -> Self {
        Self {
            support: vec![atom],
            probs: vec![1.0],
        }
    }

    /// Frequencies of `counts` over an already-distinct support.
    pub(crate) fn from_counts(support: Vec<T>, counts: &[u64]) -> Self {
        debug_assert_eq!(support.len(), counts.len());
        let n: u64 = counts.iter().sum();
        let probs = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self { support, probs }
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    /// Smallest strictly positive atom mass.
    pub fn min_positive_prob(&self) -> f64 {
        self.probs
            .iter()
            .copied()
            .filter(|p| *p > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Expectation of `f` over the atoms.
    pub fn expect(&self, f: impl Fn(T) -> f64) -> f64 {
        self.iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(x, p)| p * f(x))
            .sum()
    }
}

/// Finite-state, finite-action MDP with a KL uncertainty radius.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularRmdp {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    delta: f64,
    rewards: Vec<DiscreteDistribution<f64>>,
    transitions: Vec<DiscreteDistribution<usize>>,
}

impl TabularRmdp {
    /// `rewards` and `transitions` are row-major tables indexed by
    /// `s * n_actions + a`. Fails with a validation report when any fatal
    /// invariant is violated.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        delta: f64,
        rewards: Vec<DiscreteDistribution<f64>>,
        transitions: Vec<DiscreteDistribution<usize>>,
    ) -> Result<Self> {
        let model = Self {
            n_states,
            n_actions,
            gamma,
            delta,
            rewards,
            transitions,
        };
        let report = validate(&model);
        if report.is_fatal() {
            return Err(Error::Validation(report));
        }
        Ok(model)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_cells(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn horizon(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    pub fn reward(&self, s: usize, a: usize) -> &DiscreteDistribution<f64> {
        &self.rewards[s * self.n_actions + a]
    }

    pub fn transition(&self, s: usize, a: usize) -> &DiscreteDistribution<usize> {
        &self.transitions[s * self.n_actions + a]
    }

    pub fn rewards(&self) -> &[DiscreteDistribution<f64>] {
        &self.rewards
    }

    pub fn transitions(&self) -> &[DiscreteDistribution<usize>] {
        &self.transitions
    }

    /// Same model with a different uncertainty radius.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(
            self.n_states,
            self.n_actions,
            self.gamma,
            delta,
            self.rewards.clone(),
            self.transitions.clone(),
        )
    }

    /// Largest reward atom carrying positive mass.
    pub fn r_max(&self) -> f64 {
        self.rewards
            .iter()
            .flat_map(|d| d.iter().filter(|(_, p)| *p > 0.0).map(|(r, _)| r))
            .fold(0.0, f64::max)
    }

    /// Number of distinct reward values across the model.
    pub fn reward_alphabet_size(&self) -> usize {
        let mut values: Vec<f64> = self
            .rewards
            .iter()
            .flat_map(|d| d.support().iter().copied())
            .collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        values.len()
    }

    /// `|S||A|(|S| ∨ |R|)`, the union-bound count used in the parameter recipes.
    pub fn union_bound_size(&self) -> f64 {
        (self.n_cells() * self.n_states.max(self.reward_alphabet_size())) as f64
    }

    pub(crate) fn check_dims(&self, q: &QFunction) -> Result<()> {
        if q.dims() != (self.n_states, self.n_actions) {
            return Err(Error::Dimension {
                expected: (self.n_states, self.n_actions),
                found: q.dims(),
            });
        }
        Ok(())
    }
}

/// Real-valued table indexed by (state, action), stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QFunction {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QFunction {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::constant(n_states, n_actions, 0.0)
    }

    pub fn constant(n_states: usize, n_actions: usize, c: f64) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![c; n_states * n_actions],
        }
    }

    pub fn from_vec(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions || n_states == 0 || n_actions == 0 {
            return Err(Error::Dimension {
                expected: (n_states, n_actions),
                found: (values.len() / n_actions.max(1), n_actions),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("q", "entries must be finite"));
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_states = rows.len();
        let n_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_actions) {
            return Err(Error::param("q", "rows have unequal lengths"));
        }
        Self::from_vec(n_states, n_actions, rows.into_iter().flatten().collect())
    }

    /// Fills entries in row-major order.
    pub fn from_fn(
        n_states: usize,
        n_actions: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(n_states * n_actions);
        for s in 0..n_states {
            for a in 0..n_actions {
                values.push(f(s, a));
            }
        }
        Self {
            n_states,
            n_actions,
            values,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_states, self.n_actions)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.n_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.n_actions)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &QFunction) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn add_scalar(&self, c: f64) -> QFunction {
        self.map(|v| v + c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> QFunction {
        QFunction {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    pub(crate) fn zip_map(&self, other: &QFunction, f: impl Fn(f64, f64) -> f64) -> QFunction {
        debug_assert_eq!(self.dims(), other.dims());
        QFunction {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    /// `self ← (1 − step)·self + step·target`.
    pub(crate) fn relax_toward(&mut self, target: &QFunction, step: f64) {
        for (v, t) in self.values.iter_mut().zip(&target.values) {
            *v = (1.0 - step) * *v + step * t;
        }
    }
}

impl Sub for &QFunction {
    type Output = QFunction;

    fn sub(self, rhs: &QFunction) -> QFunction {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Add for &QFunction {
    type Output = QFunction;

    fn add(self, rhs: &QFunction) -> QFunction {
        self.zip_map(rhs, |a, b| a + b)
    }
}

/// Deterministic stationary policy: one action per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub actions: Vec<usize>,
}

/// `v(q)(s) = max_b q(s, b)`.
pub fn value_of_q(q: &QFunction) -> Vec<f64> {
    (0..q.n_states())
        .map(|s| q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Per-state argmax; ties go to the smallest action index.
pub fn greedy_policy(q: &QFunction) -> Policy {
    let actions = (0..q.n_states())
        .map(|s| {
            let row = q.row(s);
            let mut best = 0;
            for (a, v) in row.iter().enumerate().skip(1) {
                if *v > row[best] {
                    best = a;
                }
            }
            best
        })
        .collect();
    Policy { actions }
}

/// Smallest strictly positive mass over every reward and transition
/// distribution of the model.
pub fn min_support_probability(model: &TabularRmdp) -> f64 {
    let rewards = model.rewards.iter().map(|d| d.min_positive_prob());
    let transitions = model.transitions.iter().map(|d| d.min_positive_prob());
    rewards.chain(transitions).fold(f64::INFINITY, f64::min)
}

/// Per-cell minimal support probability.
pub(crate) fn cell_min_support_probability(model: &TabularRmdp, cell: usize) -> f64 {
    model.rewards[cell]
        .min_positive_prob()
        .min(model.transitions[cell].min_positive_prob())
}

pub fn span_seminorm(q: &QFunction) -> f64 {
    let (lo, hi) = q
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    hi - lo
}

/// Largest radius allowed by the limited-adversary condition:
/// `−log(1 − p_∧/48)`.
pub fn assumption1_threshold(p_min: f64) -> f64 {
    -(-p_min / 48.0).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Fatal,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub severity: Severity,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// `p_∧`, present when the model is structurally sound.
    pub min_support_probability: Option<f64>,
    pub assumption1_threshold: Option<f64>,
}

impl ValidationReport {
    pub(crate) fn push(
        &mut self,
        name: &'static str,
        severity: Severity,
        passed: bool,
        detail: impl Into<String>,
    ) {
        self.checks.push(Check {
            name,
            severity,
            passed,
            detail: detail.into(),
        });
    }

    pub fn is_fatal(&self) -> bool {
        self.checks
            .iter()
            .any(|c| !c.passed && c.severity == Severity::Fatal)
    }

    pub fn passed(&self) -> bool {
        !self.is_fatal()
    }

    /// Whether `δ < −log(1 − p_∧/48)` holds. `None` for broken models.
    pub fn assumption1_holds(&self) -> Option<bool> {
        self.checks
            .iter()
            .find(|c| c.name == "assumption_1")
            .map(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match (c.passed, c.severity) {
                (true, _) => "ok",
                (false, Severity::Fatal) => "FATAL",
                (false, Severity::Warning) => "warning",
            };
            writeln!(f, "  [{status}] {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of the model and flags (non-fatally)
/// whether the limited-adversary condition on `delta` holds.
pub fn validate(model: &TabularRmdp) -> ValidationReport {
    let mut report = ValidationReport::default();
    let cells = model.n_states * model.n_actions;

    let dims_ok = model.n_states > 0
        && model.n_actions > 0
        && model.rewards.len() == cells
        && model.transitions.len() == cells;
    report.push(
        "dimensions",
        Severity::Fatal,
        dims_ok,
        format!(
            "{} states, {} actions, {} reward and {} transition tables",
            model.n_states,
            model.n_actions,
            model.rewards.len(),
            model.transitions.len()
        ),
    );

    let gamma_ok = model.gamma > 0.0 && model.gamma < 1.0;
    report.push(
        "gamma",
        Severity::Fatal,
        gamma_ok,
        format!("gamma = {} must lie in (0, 1)", model.gamma),
    );

    let delta_ok = model.delta.is_finite() && model.delta >= 0.0;
    report.push(
        "delta",
        Severity::Fatal,
        delta_ok,
        format!("delta = {} must be finite and >= 0", model.delta),
    );

    let mut bad_states = Vec::new();
    for (cell, d) in model.transitions.iter().enumerate() {
        if let Some(s) = d.support().iter().find(|s| **s >= model.n_states) {
            bad_states.push(format!(
                "transitions[{}][{}] targets state {s}",
                cell / model.n_actions.max(1),
                cell % model.n_actions.max(1)
            ));
        }
    }
    report.push(
        "transition_support",
        Severity::Fatal,
        bad_states.is_empty(),
        if bad_states.is_empty() {
            "all targets are valid state indices".to_string()
        } else {
            bad_states.join("; ")
        },
    );

    let mut bad_rewards = Vec::new();
    for (cell, d) in model.rewards.iter().enumerate() {
        if let Some(r) = d
            .support()
            .iter()
            .find(|r| !r.is_finite() || **r < 0.0 || **r > 1.0)
        {
            bad_rewards.push(format!(
                "rewards[{}][{}] has value {r}",
                cell / model.n_actions.max(1),
                cell % model.n_actions.max(1)
            ));
        }
    }
    report.push(
        "reward_range",
        Severity::Fatal,
        bad_rewards.is_empty(),
        if bad_rewards.is_empty() {
            "all reward values lie in [0, 1]".to_string()
        } else {
            bad_rewards.join("; ")
        },
    );

    if report.is_fatal() {
        return report;
    }

    let p_min = min_support_probability(model);
    let threshold = assumption1_threshold(p_min);
    report.min_support_probability = Some(p_min);
    report.assumption1_threshold = Some(threshold);
    report.push(
        "assumption_1",
        Severity::Warning,
        model.delta < threshold,
        format!(
            "delta = {} vs -log(1 - p_min/48) = {threshold:.6} (p_min = {p_min})",
            model.delta
        ),
    );
    report
}
