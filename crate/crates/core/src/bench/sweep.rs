//! Samples-to-target as a function of the effective horizon.

use crate::bench::slope::{fit_loglog_slope, SlopeFit};
use crate::error::{Error, Result};
use crate::model::TabularRmdp;
use crate::oracle::{nonrobust_fixed_point, solve_fixed_point, DEFAULT_MAX_ITER};
use crate::pool;
use crate::q_learning::{Checkpoints, RunOptions};
use crate::vr_q_learning::{epochs_for, run_nonrobust_vrql, run_vrql, VrqlParams};

/// Variance-reduced parameters as power laws of the horizon `h = 1/(1−γ)`:
///
/// ```text
/// k_vr = ⌈k_coef · h^k_exp⌉,  n_vr = ⌈n_coef · h^n_exp⌉,  m_l = ⌈m_coef · 4^l · h^m_exp⌉
/// ```
///
/// with `⌈log2(1/(ε(1−γ)))⌉ + extra_epochs` epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonScaling {
    pub k_coef: f64,
    pub k_exp: f64,
    pub n_coef: f64,
    pub n_exp: f64,
    pub m_coef: f64,
    pub m_exp: f64,
    pub extra_epochs: usize,
}

impl HorizonScaling {
    /// Robust exponents: `k_vr = 4h`, `n_vr = 64h²`, `m_l = 8·4^l h²`.
    pub fn robust() -> Self {
        Self {
            k_coef: 4.0,
            k_exp: 1.0,
            n_coef: 64.0,
            n_exp: 2.0,
            m_coef: 8.0,
            m_exp: 2.0,
            extra_epochs: 3,
        }
    }

    /// Classical exponents: `k_vr = 4h`, `n_vr = 64`, `m_l = 8·4^l h²`.
    pub fn nonrobust() -> Self {
        Self {
            k_coef: 4.0,
            k_exp: 1.0,
            n_coef: 64.0,
            n_exp: 0.0,
            m_coef: 8.0,
            m_exp: 2.0,
            extra_epochs: 3,
        }
    }

    pub fn params(&self, gamma: f64, epsilon: f64, seed: u64) -> Result<VrqlParams> {
        let h = 1.0 / (1.0 - gamma);
        let count = |c: f64, e: f64| (c * h.powf(e)).ceil().max(1.0) as usize;
        let l_vr = epochs_for(epsilon, gamma) + self.extra_epochs;
        let m = (1..=l_vr)
            .map(|l| count(self.m_coef * 4f64.powi(l as i32), self.m_exp))
            .collect();
        VrqlParams::new(
            l_vr,
            count(self.k_coef, self.k_exp),
            count(self.n_coef, self.n_exp),
            m,
            seed,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSweepRow {
    pub gamma: f64,
    pub horizon: f64,
    pub eps: f64,
    /// Mean samples to the first checkpoint with error at most `eps`, over
    /// the trajectories that reached it.
    pub mean_samples: Option<f64>,
    pub trajectories: usize,
    pub reached: usize,
}

impl HorizonSweepRow {
    /// Set when some trajectory exhausted its budget before reaching `eps`.
    pub fn flagged(&self) -> bool {
        self.reached < self.trajectories
    }
}

/// Runs VRQL (robust or classical) to a target error for each `γ`.
pub fn horizon_sweep(
    builder: &(dyn Fn(f64) -> Result<TabularRmdp> + Sync),
    gammas: &[f64],
    epsilon: f64,
    robust: bool,
    scaling: &HorizonScaling,
    trajectories: usize,
    seed: u64,
) -> Result<Vec<HorizonSweepRow>> {
    if trajectories == 0 {
        return Err(Error::param("trajectories", "must be >= 1"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::param("eps", "must be > 0"));
    }
    let mut gammas = gammas.to_vec();
    gammas.sort_by(f64::total_cmp);

    let mut setups = Vec::with_capacity(gammas.len());
    for &gamma in &gammas {
        let model = builder(gamma)?;
        let fp = if robust {
            solve_fixed_point(&model, epsilon / 100.0, DEFAULT_MAX_ITER)?
        } else {
            nonrobust_fixed_point(&model, epsilon / 100.0, DEFAULT_MAX_ITER)?
        };
        if !fp.converged {
            return Err(Error::NonConvergence {
                iterations: fp.iterations,
                residual: fp.residual,
            });
        }
        let params = scaling.params(gamma, epsilon, seed)?;
        setups.push((model, fp.q_star, params));
    }

    let hits = pool::try_map_indexed(gammas.len() * trajectories, |job| {
        let (model, q_star, params) = &setups[job / trajectories];
        let opts = RunOptions {
            q_star: Some(q_star),
            checkpoints: Checkpoints::Every(1),
            trajectory: (job % trajectories) as u64,
            stop_below: Some(epsilon),
            ..RunOptions::default()
        };
        let out = if robust {
            run_vrql(model, params, &opts)?
        } else {
            run_nonrobust_vrql(model, params, &opts)?
        };
        Ok::<_, Error>(out.stopped_early.then_some(out.samples))
    })?;

    Ok(gammas
        .iter()
        .zip(hits.chunks(trajectories))
        .map(|(&gamma, chunk)| {
            let reached: Vec<f64> = chunk.iter().flatten().map(|s| *s as f64).collect();
            HorizonSweepRow {
                gamma,
                horizon: 1.0 / (1.0 - gamma),
                eps: epsilon,
                mean_samples: (!reached.is_empty())
                    .then(|| reached.iter().sum::<f64>() / reached.len() as f64),
                trajectories,
                reached: reached.len(),
            }
        })
        .collect())
}

/// Log-log slope of mean samples against horizon over unflagged rows.
pub fn sweep_slope(rows: &[HorizonSweepRow], tail_fraction: f64) -> Result<SlopeFit> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.flagged())
        .filter_map(|r| r.mean_samples.map(|s| (r.horizon, s)))
        .collect();
    fit_loglog_slope(&points, tail_fraction)
}
