//! Synchronous DR Q-learning and its non-robust baseline.
//!
//! Each iteration draws a fresh `n0`-sample empirical model for every cell
//! and moves toward the empirical DR Bellman target:
//!
//! ```text
//! q_{k+1} = (1 − λ_k) q_k + λ_k T_{k+1}(q_k),    λ_k = 1 / (1 + (1 − γ) k)
//! ```

use crate::bellman::{sample_empirical_model, DrOperator};
use crate::dual::DEFAULT_TOL;
use crate::error::{Error, Result};
use crate::model::{min_support_probability, QFunction, TabularRmdp};
use crate::rng::{RngStream, Stage};

/// Rescaled linear stepsize `λ_k = 1/(1 + (1−γ)k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    gamma: f64,
}

impl StepSchedule {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    pub fn step(&self, k: usize) -> f64 {
        1.0 / (1.0 + (1.0 - self.gamma) * k as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrqlParams {
    pub k0: usize,
    pub n0: usize,
    pub seed: u64,
}

impl DrqlParams {
    pub fn new(k0: usize, n0: usize, seed: u64) -> Result<Self> {
        if k0 == 0 {
            return Err(Error::param("k0", "must be >= 1"));
        }
        if n0 == 0 {
            return Err(Error::param("n0", "must be >= 1"));
        }
        Ok(Self { k0, n0, seed })
    }

    /// Samples consumed by a full run.
    pub fn total_samples(&self, model: &TabularRmdp) -> u64 {
        (model.n_cells() * self.n0 * self.k0) as u64
    }
}

/// Absolute constants of the parameter recipes. The analysis leaves them
/// unspecified; `1.0` is the default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecipeConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for RecipeConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        }
    }
}

pub(crate) fn check_eps_eta(epsilon: f64, eta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param("epsilon", format!("{epsilon} must be > 0")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", format!("{eta} must lie in (0, 1)")));
    }
    Ok(())
}

pub(crate) fn ceil_count(x: f64) -> usize {
    (x.ceil() as usize).max(1)
}

/// `k0` and `n0` from the high-probability error bound:
///
/// ```text
/// k0 = c1 (1−γ)^{-3} ε^{-1} log(4d / ((1−γ) η ε))^3
/// n0 = c2 log(4 d k0 / η)^2 / (p_∧^3 (1−γ)^2 ε)
/// ```
pub fn default_drql_params(
    model: &TabularRmdp,
    epsilon: f64,
    eta: f64,
    constants: RecipeConstants,
    seed: u64,
) -> Result<DrqlParams> {
    check_eps_eta(epsilon, eta)?;
    let g = 1.0 - model.gamma();
    let d = model.union_bound_size();
    let p = min_support_probability(model);
    let k0 = ceil_count(
        constants.c1 / (g.powi(3) * epsilon) * (4.0 * d / (g * eta * epsilon)).ln().powi(3),
    );
    let n0 = ceil_count(
        constants.c2 * (4.0 * d * k0 as f64 / eta).ln().powi(2) / (p.powi(3) * g * g * epsilon),
    );
    DrqlParams::new(k0, n0, seed)
}

/// When a run records trace rows.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Checkpoints {
    /// Every `⌈k0/200⌉` iterations.
    #[default]
    Auto,
    Every(usize),
    /// Sorted iteration indices.
    At(Vec<usize>),
}

impl Checkpoints {
    pub(crate) fn stride_for(&self, total: usize) -> Option<usize> {
        match self {
            Checkpoints::Auto => Some(total.div_ceil(200).max(1)),
            Checkpoints::Every(s) => Some((*s).max(1)),
            Checkpoints::At(_) => None,
        }
    }

    pub(crate) fn hits(&self, k: usize, total: usize) -> bool {
        match (self, self.stride_for(total)) {
            (_, Some(stride)) => k.is_multiple_of(stride),
            (Checkpoints::At(list), None) => list.binary_search(&k).is_ok(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions<'a> {
    /// Reference solution for error tracking.
    pub q_star: Option<&'a QFunction>,
    pub checkpoints: Checkpoints,
    pub trajectory: u64,
    pub keep_snapshots: bool,
    /// Stop at the first checkpoint whose error is at most this value.
    pub stop_below: Option<f64>,
    pub operator_tol: f64,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self {
            q_star: None,
            checkpoints: Checkpoints::Auto,
            trajectory: 0,
            keep_snapshots: false,
            stop_below: None,
            operator_tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub trajectory: u64,
    pub iter: usize,
    /// Cumulative samples, `|S||A|·n0·iter`.
    pub samples: u64,
    pub error: Option<f64>,
    pub q: Option<QFunction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerOutput {
    pub q: QFunction,
    pub trace: Vec<TraceRecord>,
    pub samples: u64,
    pub iterations: usize,
}

/// Runs DR Q-learning at the model's radius.
pub fn run_drql(
    model: &TabularRmdp,
    params: &DrqlParams,
    opts: &RunOptions<'_>,
) -> Result<LearnerOutput> {
    q_learning_loop(model, model.delta(), params, opts)
}

/// Standard synchronous Q-learning with `n0`-sample mean targets
/// `r + γ v(q_k)(s')`; ignores the model's radius.
pub fn run_standard_ql(
    model: &TabularRmdp,
    params: &DrqlParams,
    opts: &RunOptions<'_>,
) -> Result<LearnerOutput> {
    q_learning_loop(model, 0.0, params, opts)
}

fn q_learning_loop(
    model: &TabularRmdp,
    delta: f64,
    params: &DrqlParams,
    opts: &RunOptions<'_>,
) -> Result<LearnerOutput> {
    let params = DrqlParams::new(params.k0, params.n0, params.seed)?;
    if let Some(q_star) = opts.q_star {
        model.check_dims(q_star)?;
    }
    let schedule = StepSchedule::new(model.gamma());
    let per_iter = (model.n_cells() * params.n0) as u64;
    let mut q = QFunction::zeros(model.n_states(), model.n_actions());
    let mut trace = Vec::new();
    let mut done = params.k0;

    for k in 1..=params.k0 {
        let stream = RngStream::new(params.seed, opts.trajectory, Stage::QLearning, k as u64, 0);
        let emp = sample_empirical_model(model, params.n0, stream)?;
        let target = DrOperator::empirical(&emp, delta, opts.operator_tol).apply(&q);
        q.relax_toward(&target, schedule.step(k));

        if opts.checkpoints.hits(k, params.k0) || k == params.k0 {
            let error = opts.q_star.map(|s| q.sup_distance(s));
            trace.push(TraceRecord {
                trajectory: opts.trajectory,
                iter: k,
                samples: per_iter * k as u64,
                error,
                q: opts.keep_snapshots.then(|| q.clone()),
            });
            if let (Some(e), Some(stop)) = (error, opts.stop_below) {
                if e <= stop {
                    done = k;
                    break;
                }
            }
        }
    }

    Ok(LearnerOutput {
        q,
        trace,
        samples: per_iter * done as u64,
        iterations: done,
    })
}
