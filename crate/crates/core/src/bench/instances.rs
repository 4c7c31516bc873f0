//! Built-in benchmark instances.

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, TabularRmdp};

/// Self-transition probability `(4γ − 1)/(3γ)` of the hard instance.
pub fn hard_mdp_p(gamma: f64) -> f64 {
    (4.0 * gamma - 1.0) / (3.0 * gamma)
}

/// Four-state, two-action hard instance.
///
/// * state 0 absorbs with reward 0;
/// * states 1 and 2 pay reward 1, stay with probability `p = (4γ−1)/(3γ)`
///   and otherwise fall to state 0;
/// * state 3 absorbs with reward 1.
///
/// Both actions share the dynamics of their state. Requires `γ ∈ (1/4, 1)`.
pub fn build_hard_mdp(gamma: f64, delta: f64) -> Result<TabularRmdp> {
    if !(gamma > 0.25 && gamma < 1.0) {
        return Err(Error::param(
            "gamma",
            format!("{gamma} outside (1/4, 1); the hard instance needs p = (4γ-1)/(3γ) in (0,1)"),
        ));
    }
    let p = hard_mdp_p(gamma);
    let leaky = |s: usize| DiscreteDistribution::new(vec![s, 0], vec![p, 1.0 - p]);
    let per_state = [
        (0.0, DiscreteDistribution::point_mass(0)),
        (1.0, leaky(1)?),
        (1.0, leaky(2)?),
        (1.0, DiscreteDistribution::point_mass(3)),
    ];
    let mut rewards = Vec::with_capacity(8);
    let mut transitions = Vec::with_capacity(8);
    for (r, t) in &per_state {
        for _ in 0..2 {
            rewards.push(DiscreteDistribution::point_mass(*r));
            transitions.push(t.clone());
        }
    }
    TabularRmdp::new(4, 2, gamma, delta, rewards, transitions)
}

/// Two-state mixing instance: both actions move with kernel
/// `[[1−p, p], [p, 1−p]]`, `p = 1/t`; reward 1 in state 0 and 0 in state 1.
pub fn build_mixing_mdp(gamma: f64, t: f64, delta: f64) -> Result<TabularRmdp> {
    if !(t >= 1.0) || !t.is_finite() {
        return Err(Error::param("t", format!("{t} must be a finite value >= 1")));
    }
    let p = 1.0 / t;
    let kernel = |s: usize| DiscreteDistribution::new(vec![s, 1 - s], vec![1.0 - p, p]);
    let mut rewards = Vec::with_capacity(4);
    let mut transitions = Vec::with_capacity(4);
    for s in 0..2 {
        for _ in 0..2 {
            rewards.push(DiscreteDistribution::point_mass(if s == 0 { 1.0 } else { 0.0 }));
            transitions.push(kernel(s)?);
        }
    }
    TabularRmdp::new(2, 2, gamma, delta, rewards, transitions)
}
