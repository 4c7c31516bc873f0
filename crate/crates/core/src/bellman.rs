//! Exact and empirical distributionally robust Bellman operators.
//!
//! Both operators share one formula over per-cell measures:
//!
//! ```text
//! T(q)(s,a) = sup_β f(ν_{s,a}, id, β) + γ · sup_α f(p_{s,a}, v(q), α)
//! ```
//!
//! with `f` the KL dual functional. The exact operator uses the model's
//! reference measures; the empirical one uses frequencies of `n` i.i.d. draws
//! per cell, stored over the reference support.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::dual::{self, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::{value_of_q, DiscreteDistribution, QFunction, TabularRmdp};
use crate::rng::RngStream;

/// Per-cell empirical reward and transition measures.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    rewards: Vec<DiscreteDistribution<f64>>,
    transitions: Vec<DiscreteDistribution<usize>>,
    n: Option<usize>,
    lineage: Option<RngStream>,
}

impl EmpiricalModel {
    /// The `n → ∞` limit: the reference measures themselves.
    pub fn from_reference(model: &TabularRmdp) -> Self {
        Self {
            n_states: model.n_states(),
            n_actions: model.n_actions(),
            gamma: model.gamma(),
            rewards: model.rewards().to_vec(),
            transitions: model.transitions().to_vec(),
            n: None,
            lineage: None,
        }
    }

    /// Samples per cell, `None` for the reference limit.
    pub fn n(&self) -> Option<usize> {
        self.n
    }

    pub fn lineage(&self) -> Option<&RngStream> {
        self.lineage.as_ref()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_states, self.n_actions)
    }

    pub fn reward(&self, s: usize, a: usize) -> &DiscreteDistribution<f64> {
        &self.rewards[s * self.n_actions + a]
    }

    pub fn transition(&self, s: usize, a: usize) -> &DiscreteDistribution<usize> {
        &self.transitions[s * self.n_actions + a]
    }

    /// A model whose reference measures are these empirical frequencies.
    pub fn to_model(&self, delta: f64) -> Result<TabularRmdp> {
        TabularRmdp::new(
            self.n_states,
            self.n_actions,
            self.gamma,
            delta,
            self.rewards.clone(),
            self.transitions.clone(),
        )
    }

    fn check_dims(&self, q: &QFunction) -> Result<()> {
        if q.dims() != self.dims() {
            return Err(Error::Dimension {
                expected: self.dims(),
                found: q.dims(),
            });
        }
        Ok(())
    }
}

/// Multinomial counts of `n` draws, via conditional binomials.
fn multinomial<R: Rng>(probs: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass_left = 1.0f64;
    let last_positive = probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
    for (i, p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if *p <= 0.0 {
            continue;
        }
        if i == last_positive {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass_left).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q)
            .expect("binomial parameters are in range")
            .sample(rng);
        counts[i] = k;
        remaining -= k;
        mass_left -= p;
    }
    counts
}

/// Draws `n` i.i.d. rewards and `n` i.i.d. next states for every cell.
///
/// Cell `c` uses substream `stream.rng(c)`, rewards first, so the result does
/// not depend on evaluation order.
pub fn sample_empirical_model(
    model: &TabularRmdp,
    n: usize,
    stream: RngStream,
) -> Result<EmpiricalModel> {
    if n == 0 {
        return Err(Error::param("n", "sample size must be >= 1"));
    }
    let cells = model.n_cells();
    let mut rewards = Vec::with_capacity(cells);
    let mut transitions = Vec::with_capacity(cells);
    for cell in 0..cells {
        let mut rng = stream.rng(cell as u64);
        let r = &model.rewards()[cell];
        let t = &model.transitions()[cell];
        let rc = multinomial(r.probs(), n as u64, &mut rng);
        let tc = multinomial(t.probs(), n as u64, &mut rng);
        rewards.push(DiscreteDistribution::from_counts(r.support().to_vec(), &rc));
        transitions.push(DiscreteDistribution::from_counts(t.support().to_vec(), &tc));
    }
    Ok(EmpiricalModel {
        n_states: model.n_states(),
        n_actions: model.n_actions(),
        gamma: model.gamma(),
        rewards,
        transitions,
        n: Some(n),
        lineage: Some(stream),
    })
}

/// A DR Bellman operator bound to one set of measures.
///
/// The reward term does not depend on `q` and is solved once at
/// construction, so applying the same operator object to several
/// q-functions shares both the samples and the reward duals.
#[derive(Debug, Clone)]
pub struct DrOperator<'a> {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    delta: f64,
    tol: f64,
    transitions: &'a [DiscreteDistribution<usize>],
    reward_terms: Vec<f64>,
}

impl<'a> DrOperator<'a> {
    pub fn exact(model: &'a TabularRmdp, tol: f64) -> Self {
        Self::build(
            model.n_states(),
            model.n_actions(),
            model.gamma(),
            model.delta(),
            tol,
            model.rewards(),
            model.transitions(),
        )
    }

    pub fn empirical(emp: &'a EmpiricalModel, delta: f64, tol: f64) -> Self {
        Self::build(
            emp.n_states,
            emp.n_actions,
            emp.gamma,
            delta,
            tol,
            &emp.rewards,
            &emp.transitions,
        )
    }

    fn build(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        delta: f64,
        tol: f64,
        rewards: &[DiscreteDistribution<f64>],
        transitions: &'a [DiscreteDistribution<usize>],
    ) -> Self {
        let reward_terms = rewards
            .iter()
            .map(|d| dual::maximize(d.probs(), d.support(), delta, tol).value)
            .collect();
        Self {
            n_states,
            n_actions,
            gamma,
            delta,
            tol,
            transitions,
            reward_terms,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `sup_β f(ν_{s,a}, id, β)` per cell.
    pub fn reward_terms(&self) -> &[f64] {
        &self.reward_terms
    }

    pub fn apply(&self, q: &QFunction) -> QFunction {
        debug_assert_eq!(q.dims(), (self.n_states, self.n_actions));
        self.apply_to_values(&value_of_q(q))
    }

    /// Same operator with an arbitrary next-state value vector in place of
    /// `v(q)`.
    pub fn apply_to_values(&self, v: &[f64]) -> QFunction {
        debug_assert_eq!(v.len(), self.n_states);
        let mut buf = Vec::new();
        let mut out = Vec::with_capacity(self.reward_terms.len());
        for (cell, t) in self.transitions.iter().enumerate() {
            buf.clear();
            buf.extend(t.support().iter().map(|s| v[*s]));
            let next = dual::maximize(t.probs(), &buf, self.delta, self.tol).value;
            out.push(self.reward_terms[cell] + self.gamma * next);
        }
        QFunction::from_vec(self.n_states, self.n_actions, out)
            .expect("operator output has the input's shape")
    }
}

/// Exact DR Bellman operator of `model` (radius `model.delta()`).
pub fn exact_bellman(model: &TabularRmdp, q: &QFunction) -> Result<QFunction> {
    model.check_dims(q)?;
    Ok(DrOperator::exact(model, DEFAULT_TOL).apply(q))
}

/// Empirical DR Bellman operator on the measures of `emp`.
pub fn empirical_bellman(emp: &EmpiricalModel, q: &QFunction, delta: f64) -> Result<QFunction> {
    emp.check_dims(q)?;
    Ok(DrOperator::empirical(emp, delta, DEFAULT_TOL).apply(q))
}

/// `T̂(q) − T̂(q_ref)` with both terms on the same empirical measures.
pub fn recentered_empirical(
    emp: &EmpiricalModel,
    q: &QFunction,
    q_ref: &QFunction,
    delta: f64,
) -> Result<QFunction> {
    emp.check_dims(q)?;
    emp.check_dims(q_ref)?;
    let op = DrOperator::empirical(emp, delta, DEFAULT_TOL);
    Ok(&op.apply(q) - &op.apply(q_ref))
}
