//! Error-versus-samples curves averaged over independent trajectories.

use crate::error::{Error, Result};
use crate::model::{QFunction, TabularRmdp};
use crate::pool;
use crate::q_learning::{run_drql, run_standard_ql, Checkpoints, DrqlParams, RunOptions};
use crate::vr_q_learning::{run_nonrobust_vrql, run_vrql, VrqlParams};

/// A learner together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Drql(DrqlParams),
    Ql(DrqlParams),
    Vrql(VrqlParams),
    NrVrql(VrqlParams),
    /// DRQL rerun for each budget `B` with `k0 = n0 = ⌊sqrt(B/(|S||A|))⌋`,
    /// so iteration count and batch size grow together.
    BalancedDrql { seed: u64 },
}

impl Algorithm {
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::Drql(_) => "drql",
            Algorithm::Ql(_) => "ql",
            Algorithm::Vrql(_) => "vrql",
            Algorithm::NrVrql(_) => "nrvrql",
            Algorithm::BalancedDrql { .. } => "drql-balanced",
        }
    }
}

/// `(cumulative samples, error)` at every iteration of one trajectory.
pub fn trajectory_errors(
    model: &TabularRmdp,
    algorithm: &Algorithm,
    q_star: &QFunction,
    trajectory: u64,
) -> Result<Vec<(u64, f64)>> {
    let opts = RunOptions {
        q_star: Some(q_star),
        checkpoints: Checkpoints::Every(1),
        trajectory,
        ..RunOptions::default()
    };
    let pairs = match algorithm {
        Algorithm::Drql(p) => run_drql(model, p, &opts)?
            .trace
            .into_iter()
            .map(|r| (r.samples, r.error))
            .collect::<Vec<_>>(),
        Algorithm::Ql(p) => run_standard_ql(model, p, &opts)?
            .trace
            .into_iter()
            .map(|r| (r.samples, r.error))
            .collect(),
        Algorithm::Vrql(p) => run_vrql(model, p, &opts)?
            .trace
            .into_iter()
            .map(|r| (r.samples, r.error))
            .collect(),
        Algorithm::NrVrql(p) => run_nonrobust_vrql(model, p, &opts)?
            .trace
            .into_iter()
            .map(|r| (r.samples, r.error))
            .collect(),
        Algorithm::BalancedDrql { .. } => {
            return Err(Error::param(
                "algorithm",
                "balanced DRQL has no single trajectory; use error_curve",
            ))
        }
    };
    Ok(pairs
        .into_iter()
        .map(|(s, e)| (s, e.expect("reference supplied")))
        .collect())
}

/// Side length `⌊sqrt(B/(|S||A|))⌋` of a balanced DRQL run.
pub fn balanced_side(model: &TabularRmdp, budget: u64) -> usize {
    (budget as f64 / model.n_cells() as f64).sqrt().floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Mean cumulative samples across trajectories.
    pub samples: f64,
    /// Mean sup-norm error across trajectories.
    pub error: f64,
    /// Standard error of the mean error.
    pub stderr: f64,
    /// Mean of `ln(error)` across trajectories.
    pub log_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub algorithm: String,
    pub trajectories: usize,
    pub points: Vec<CurvePoint>,
}

impl ErrorCurve {
    /// `(samples, exp(mean log error))` pairs, so a log-log fit is the slope
    /// of mean log error against log samples.
    pub fn xy(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.samples, p.log_error.exp()))
            .collect()
    }
}

fn summarize(samples: &[u64], errors: &[f64]) -> CurvePoint {
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = if errors.len() > 1 {
        errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    CurvePoint {
        samples: samples.iter().map(|s| *s as f64).sum::<f64>() / n,
        error: mean,
        stderr: (var / n).sqrt(),
        log_error: errors.iter().map(|e| e.ln()).sum::<f64>() / n,
    }
}

/// Mean error at each sample budget over `trajectories` runs.
///
/// For a fixed-parameter learner each budget reads the last iterate whose
/// cumulative sample count does not exceed it; budgets beyond the run length
/// or below the cost of one iteration are rejected. Budgets landing on the
/// same iterate are reported once.
pub fn error_curve(
    model: &TabularRmdp,
    algorithm: &Algorithm,
    q_star: &QFunction,
    budgets: &[u64],
    trajectories: usize,
) -> Result<ErrorCurve> {
    model.check_dims(q_star)?;
    if trajectories == 0 {
        return Err(Error::param("trajectories", "must be >= 1"));
    }
    if budgets.is_empty() || budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("budgets", "need a non-empty strictly increasing list"));
    }

    let per_budget: Vec<(Vec<u64>, Vec<f64>)> = match algorithm {
        Algorithm::BalancedDrql { seed } => {
            let sides: Vec<usize> = budgets.iter().map(|b| balanced_side(model, *b)).collect();
            if let Some(i) = sides.iter().position(|s| *s == 0) {
                return Err(Error::param(
                    "budgets",
                    format!("budget {} is below one iteration's cost", budgets[i]),
                ));
            }
            let runs = pool::try_map_indexed(budgets.len() * trajectories, |job| {
                let side = sides[job / trajectories];
                let params = DrqlParams::new(side, side, *seed)?;
                let opts = RunOptions {
                    q_star: Some(q_star),
                    checkpoints: Checkpoints::At(vec![side]),
                    trajectory: (job % trajectories) as u64,
                    ..RunOptions::default()
                };
                let out = run_drql(model, &params, &opts)?;
                Ok::<_, Error>((out.samples, out.q.sup_distance(q_star)))
            })?;
            runs.chunks(trajectories)
                .map(|c| c.iter().copied().unzip())
                .collect()
        }
        _ => {
            let traces = pool::try_map_indexed(trajectories, |t| {
                trajectory_errors(model, algorithm, q_star, t as u64)
            })?;
            let mut out = Vec::with_capacity(budgets.len());
            for &budget in budgets {
                let mut samples = Vec::with_capacity(trajectories);
                let mut errors = Vec::with_capacity(trajectories);
                for trace in &traces {
                    let last = trace.last().map(|(s, _)| *s).unwrap_or(0);
                    if budget > last {
                        return Err(Error::param(
                            "budgets",
                            format!("budget {budget} exceeds the run length of {last} samples"),
                        ));
                    }
                    let idx = trace.partition_point(|(s, _)| *s <= budget);
                    if idx == 0 {
                        return Err(Error::param(
                            "budgets",
                            format!("budget {budget} is below one iteration's cost"),
                        ));
                    }
                    samples.push(trace[idx - 1].0);
                    errors.push(trace[idx - 1].1);
                }
                out.push((samples, errors));
            }
            out
        }
    };

    let mut points: Vec<CurvePoint> = Vec::with_capacity(per_budget.len());
    for (samples, errors) in &per_budget {
        let p = summarize(samples, errors);
        if points.last().is_none_or(|q| p.samples > q.samples) {
            points.push(p);
        }
    }
    Ok(ErrorCurve {
        algorithm: algorithm.tag().to_string(),
        trajectories,
        points,
    })
}

/// `count` budgets spaced geometrically between `lo` and `hi`.
pub fn geometric_budgets(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    if count < 2 || hi <= lo {
        return vec![lo.max(hi)];
    }
    let ratio = (hi as f64 / lo as f64).powf(1.0 / (count - 1) as f64);
    let mut out: Vec<u64> = (0..count)
        .map(|i| (lo as f64 * ratio.powi(i as i32)).round() as u64)
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DiscreteDistribution;
    use crate::oracle::solve_fixed_point;

    fn point_mass_model() -> TabularRmdp {
        TabularRmdp::new(
            2,
            1,
            0.6,
            0.1,
            vec![
                DiscreteDistribution::point_mass(1.0),
                DiscreteDistribution::point_mass(0.0),
            ],
            vec![
                DiscreteDistribution::point_mass(1),
                DiscreteDistribution::point_mass(0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn deterministic_model_gives_decreasing_curve() {
        let m = point_mass_model();
        let q = solve_fixed_point(&m, 1e-12, 10_000).unwrap().q_star;
        let algo = Algorithm::Drql(DrqlParams::new(200, 3, 0).unwrap());
        let budgets = geometric_budgets(6, 1200, 10);
        let c = error_curve(&m, &algo, &q, &budgets, 1).unwrap();
        assert!(c.points.windows(2).all(|w| w[1].error < w[0].error));
        assert!(c.points.windows(2).all(|w| w[1].samples > w[0].samples));
    }

    #[test]
    fn budget_limits() {
        let m = point_mass_model();
        let q = solve_fixed_point(&m, 1e-12, 10_000).unwrap().q_star;
        let algo = Algorithm::Drql(DrqlParams::new(10, 3, 0).unwrap());
        assert!(error_curve(&m, &algo, &q, &[5], 1).is_err());
        assert!(error_curve(&m, &algo, &q, &[61], 1).is_err());
        assert!(error_curve(&m, &algo, &q, &[6, 60], 1).is_ok());
        let bal = Algorithm::BalancedDrql { seed: 0 };
        assert!(error_curve(&m, &bal, &q, &[1], 1).is_err());
        let c = error_curve(&m, &bal, &q, &[2, 8, 32], 1).unwrap();
        assert_eq!(c.points.iter().map(|p| p.samples).collect::<Vec<_>>(), vec![2.0, 8.0, 32.0]);
    }
}
