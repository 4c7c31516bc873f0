//! JSON model files.
//!
//! ```json
//! {
//!   "n_states": 2, "n_actions": 1, "gamma": 0.6, "delta": 0.1,
//!   "rewards":     [[{"values": [1.0], "probs": [1.0]}], [{"values": [0.0], "probs": [1.0]}]],
//!   "transitions": [[{"states": [0, 1], "probs": [0.5, 0.5]}], [{"states": [0, 1], "probs": [0.5, 0.5]}]]
//! }
//! ```
//!
//! Reals are written with shortest round-trip formatting, so `load ∘ save` is
//! the identity.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, QFunction, Severity, TabularRmdp, ValidationReport};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardEntry {
    values: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionEntry {
    states: Vec<usize>,
    probs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    delta: f64,
    rewards: Vec<Vec<RewardEntry>>,
    transitions: Vec<Vec<TransitionEntry>>,
}

pub fn model_to_string(model: &TabularRmdp) -> String {
    let n_actions = model.n_actions();
    let rewards = model
        .rewards()
        .chunks(n_actions)
        .map(|row| {
            row.iter()
                .map(|d| RewardEntry {
                    values: d.support().to_vec(),
                    probs: d.probs().to_vec(),
                })
                .collect()
        })
        .collect();
    let transitions = model
        .transitions()
        .chunks(n_actions)
        .map(|row| {
            row.iter()
                .map(|d| TransitionEntry {
                    states: d.support().to_vec(),
                    probs: d.probs().to_vec(),
                })
                .collect()
        })
        .collect();
    let file = ModelFile {
        n_states: model.n_states(),
        n_actions,
        gamma: model.gamma(),
        delta: model.delta(),
        rewards,
        transitions,
    };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}

pub fn save_model(model: &TabularRmdp, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_string(model) + "\n")?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TabularRmdp> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    build(file)
}

pub fn model_from_str(text: &str) -> Result<TabularRmdp> {
    build(serde_json::from_str(text)?)
}

fn build(file: ModelFile) -> Result<TabularRmdp> {
    let mut report = ValidationReport::default();
    let shape_ok = file.rewards.len() == file.n_states
        && file.transitions.len() == file.n_states
        && file.rewards.iter().all(|row| row.len() == file.n_actions)
        && file.transitions.iter().all(|row| row.len() == file.n_actions);
    if !shape_ok {
        report.push(
            "dimensions",
            Severity::Fatal,
            false,
            format!(
                "rewards and transitions must be {} x {} tables",
                file.n_states, file.n_actions
            ),
        );
        return Err(Error::Validation(report));
    }

    let mut rewards = Vec::with_capacity(file.n_states * file.n_actions);
    let mut transitions = Vec::with_capacity(file.n_states * file.n_actions);
    let mut problems = Vec::new();
    for (s, (rrow, trow)) in file.rewards.into_iter().zip(file.transitions).enumerate() {
        for (a, (r, t)) in rrow.into_iter().zip(trow).enumerate() {
            match DiscreteDistribution::new(r.values, r.probs) {
                Ok(d) => rewards.push(d),
                Err(e) => problems.push(format!("rewards[{s}][{a}]: {e}")),
            }
            match DiscreteDistribution::new(t.states, t.probs) {
                Ok(d) => transitions.push(d),
                Err(e) => problems.push(format!("transitions[{s}][{a}]: {e}")),
            }
        }
    }
    if !problems.is_empty() {
        report.push(
            "probability_sums",
            Severity::Fatal,
            false,
            problems.join("; "),
        );
        return Err(Error::Validation(report));
    }
    TabularRmdp::new(
        file.n_states,
        file.n_actions,
        file.gamma,
        file.delta,
        rewards,
        transitions,
    )
}

/// Writes a q-function as a JSON array of rows, in the same number format as
/// model files.
pub fn q_to_string(q: &QFunction) -> String {
    serde_json::to_string(&q.rows()).expect("q serialization cannot fail")
}
