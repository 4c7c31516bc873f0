//! Variance-reduced DR Q-learning.
//!
//! Epoch `l` freezes an anchor `q̂_{l−1}`, estimates `T(q̂_{l−1})` once with a
//! large `m_l`-sample operator, then runs `k_vr` recentered updates
//!
//! ```text
//! q_{l,k+1} = (1 − λ_k) q_{l,k} + λ_k (T_{l,k+1}(q_{l,k}) − T_{l,k+1}(q̂_{l−1}) + T̃_l(q̂_{l−1}))
//! ```
//!
//! where both `T_{l,k+1}` terms share one `n_vr`-sample draw.

use crate::bellman::{sample_empirical_model, DrOperator};
use crate::error::{Error, Result};
use crate::model::{min_support_probability, QFunction, TabularRmdp};
use crate::q_learning::{ceil_count, check_eps_eta, RecipeConstants, RunOptions, StepSchedule};
use crate::rng::{RngStream, Stage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VrqlParams {
    pub l_vr: usize,
    pub k_vr: usize,
    pub n_vr: usize,
    /// Recentering sample sizes `m_1..m_{l_vr}`.
    pub m: Vec<usize>,
    pub seed: u64,
}

impl VrqlParams {
    pub fn new(l_vr: usize, k_vr: usize, n_vr: usize, m: Vec<usize>, seed: u64) -> Result<Self> {
        if l_vr == 0 {
            return Err(Error::param("l_vr", "must be >= 1"));
        }
        if k_vr == 0 {
            return Err(Error::param("k_vr", "must be >= 1"));
        }
        if n_vr == 0 {
            return Err(Error::param("n_vr", "must be >= 1"));
        }
        if m.len() != l_vr || m.contains(&0) {
            return Err(Error::param(
                "m",
                format!("need {l_vr} positive recentering sizes, got {m:?}"),
            ));
        }
        Ok(Self {
            l_vr,
            k_vr,
            n_vr,
            m,
            seed,
        })
    }

    /// `m_l = ⌈m_base · 4^l⌉`.
    pub fn geometric(
        l_vr: usize,
        k_vr: usize,
        n_vr: usize,
        m_base: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(m_base > 0.0) {
            return Err(Error::param("m_base", "must be > 0"));
        }
        let m = (1..=l_vr)
            .map(|l| ceil_count(m_base * 4f64.powi(l as i32)))
            .collect();
        Self::new(l_vr, k_vr, n_vr, m, seed)
    }

    /// Samples used through the end of `epochs` epochs.
    pub fn samples_through(&self, model: &TabularRmdp, epochs: usize) -> u64 {
        let cells = model.n_cells() as u64;
        let inner = (epochs * self.n_vr * self.k_vr) as u64;
        let recenter: u64 = self.m.iter().take(epochs).map(|m| *m as u64).sum();
        cells * (inner + recenter)
    }
}

/// Number of epochs `⌈log2(1/(ε(1−γ)))⌉` needed to reach `ε`.
pub fn epochs_for(epsilon: f64, gamma: f64) -> usize {
    let x = (1.0 / (epsilon * (1.0 - gamma))).log2();
    ((x - 1e-12).ceil() as usize).max(1)
}

/// Parameter recipe:
///
/// ```text
/// k_vr = c1 (1−γ)^{-2}
/// l_vr = ⌈log2(1/(ε(1−γ)))⌉
/// n_vr = c2 log(8 d k_vr l_vr / η)^4 / (p_∧^3 (1−γ))
/// m_l  = c3 4^l log(24d/η)^2 / (p_∧^3 (1−γ)^2),  at least 8 p_∧^{-2} log(24d/η)
/// ```
pub fn default_vrql_params(
    model: &TabularRmdp,
    epsilon: f64,
    eta: f64,
    constants: RecipeConstants,
    seed: u64,
) -> Result<VrqlParams> {
    check_eps_eta(epsilon, eta)?;
    let g = 1.0 - model.gamma();
    if epsilon >= 1.0 / g {
        return Err(Error::param(
            "epsilon",
            format!("{epsilon} must be below the horizon 1/(1-gamma) = {}", 1.0 / g),
        ));
    }
    let d = model.union_bound_size();
    let p = min_support_probability(model);
    let k_vr = ceil_count(constants.c1 / (g * g));
    let l_vr = epochs_for(epsilon, model.gamma());
    let n_vr = ceil_count(
        constants.c2 * (8.0 * d * (k_vr * l_vr) as f64 / eta).ln().powi(4) / (p.powi(3) * g),
    );
    let log24 = (24.0 * d / eta).ln();
    let floor = 8.0 * log24 / (p * p);
    let m = (1..=l_vr)
        .map(|l| {
            let m_l = constants.c3 * 4f64.powi(l as i32) * log24 * log24 / (p.powi(3) * g * g);
            ceil_count(m_l.max(floor))
        })
        .collect();
    VrqlParams::new(l_vr, k_vr, n_vr, m, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VrTraceRecord {
    pub trajectory: u64,
    pub epoch: usize,
    pub inner_iter: usize,
    pub samples: u64,
    pub error: Option<f64>,
    pub q: Option<QFunction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VrqlOutput {
    pub q: QFunction,
    pub trace: Vec<VrTraceRecord>,
    /// `q̂_1, q̂_2, …` for every completed epoch.
    pub epoch_estimates: Vec<QFunction>,
    /// `‖q̂_l − q*‖_∞` per completed epoch, when a reference was supplied.
    pub epoch_errors: Vec<f64>,
    pub samples: u64,
    /// Whether the run ended early on `stop_below`.
    pub stopped_early: bool,
}

pub fn run_vrql(
    model: &TabularRmdp,
    params: &VrqlParams,
    opts: &RunOptions<'_>,
) -> Result<VrqlOutput> {
    vrql_loop(model, model.delta(), params, opts)
}

/// The same loop with expectation operators (`δ = 0`).
pub fn run_nonrobust_vrql(
    model: &TabularRmdp,
    params: &VrqlParams,
    opts: &RunOptions<'_>,
) -> Result<VrqlOutput> {
    vrql_loop(model, 0.0, params, opts)
}

fn vrql_loop(
    model: &TabularRmdp,
    delta: f64,
    params: &VrqlParams,
    opts: &RunOptions<'_>,
) -> Result<VrqlOutput> {
    let params = VrqlParams::new(
        params.l_vr,
        params.k_vr,
        params.n_vr,
        params.m.clone(),
        params.seed,
    )?;
    if let Some(q_star) = opts.q_star {
        model.check_dims(q_star)?;
    }
    let cells = model.n_cells() as u64;
    let schedule = StepSchedule::new(model.gamma());
    let mut anchor = QFunction::zeros(model.n_states(), model.n_actions());
    let mut samples = 0u64;
    let mut trace = Vec::new();
    let mut epoch_estimates = Vec::with_capacity(params.l_vr);
    let mut epoch_errors = Vec::new();

    for l in 1..=params.l_vr {
        let anchor_target = {
            let stream = RngStream::new(params.seed, opts.trajectory, Stage::Recentering, l as u64, 0);
            let emp = sample_empirical_model(model, params.m[l - 1], stream)?;
            DrOperator::empirical(&emp, delta, opts.operator_tol).apply(&anchor)
        };
        samples += cells * params.m[l - 1] as u64;

        let mut q = anchor.clone();
        for k in 1..=params.k_vr {
            let stream = RngStream::new(
                params.seed,
                opts.trajectory,
                Stage::InnerLoop,
                l as u64,
                k as u64,
            );
            let emp = sample_empirical_model(model, params.n_vr, stream)?;
            let op = DrOperator::empirical(&emp, delta, opts.operator_tol);
            let at_q = op.apply(&q);
            let at_anchor = op.apply(&anchor);
            let target = at_q.zip_map(&at_anchor, |a, b| a - b);
            let target = &target + &anchor_target;
            q.relax_toward(&target, schedule.step(k));
            samples += cells * params.n_vr as u64;

            if opts.checkpoints.hits(k, params.k_vr) || k == params.k_vr {
                let error = opts.q_star.map(|s| q.sup_distance(s));
                trace.push(VrTraceRecord {
                    trajectory: opts.trajectory,
                    epoch: l,
                    inner_iter: k,
                    samples,
                    error,
                    q: opts.keep_snapshots.then(|| q.clone()),
                });
                if let (Some(e), Some(stop)) = (error, opts.stop_below) {
                    if e <= stop {
                        if k == params.k_vr {
                            epoch_errors.push(e);
                            epoch_estimates.push(q.clone());
                        }
                        return Ok(VrqlOutput {
                            q,
                            trace,
                            epoch_estimates,
                            epoch_errors,
                            samples,
                            stopped_early: true,
                        });
                    }
                }
            }
        }
        anchor = q;
        if let Some(s) = opts.q_star {
            epoch_errors.push(anchor.sup_distance(s));
        }
        epoch_estimates.push(anchor.clone());
    }

    Ok(VrqlOutput {
        q: anchor,
        trace,
        epoch_estimates,
        epoch_errors,
        samples,
        stopped_early: false,
    })
}
