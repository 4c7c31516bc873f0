//! Monte Carlo diagnostics of the empirical DR Bellman operator: bias,
//! variance, contraction and recentered concentration.

use rand::Rng;

use crate::bellman::{sample_empirical_model, DrOperator, EmpiricalModel};
use crate::dual::{self, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::{
    cell_min_support_probability, min_support_probability, span_seminorm, value_of_q, QFunction,
    TabularRmdp,
};
use crate::pool;
use crate::rng::{RngStream, Stage};

/// Statistics for one `(s, a)` cell at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub s: usize,
    pub a: usize,
    /// Control-variate estimate of `E[T̂(q)(s,a)] − T(q)(s,a)`.
    pub bias: f64,
    /// Plain estimate `mean(T̂(q)(s,a)) − T(q)(s,a)`.
    pub raw_bias: f64,
    /// Sample variance of `T̂(q)(s,a)`.
    pub var: f64,
    pub stderr_bias: f64,
    pub stderr_var: f64,
    pub bias_ceiling: f64,
    pub variance_ceiling: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasVarianceRow {
    pub n: usize,
    pub reps: usize,
    pub cells: Vec<CellStats>,
    /// `max |bias|` over cells.
    pub sup_bias: f64,
    /// `max var` over cells.
    pub sup_var: f64,
}

impl BiasVarianceRow {
    pub fn within_ceilings(&self) -> bool {
        self.cells
            .iter()
            .all(|c| c.bias.abs() <= c.bias_ceiling && c.var <= c.variance_ceiling)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasVarianceTable {
    pub rows: Vec<BiasVarianceRow>,
}

impl BiasVarianceTable {
    /// `(n, sup |bias|)` points.
    pub fn bias_points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.n as f64, r.sup_bias)).collect()
    }

    /// `(n, sup var)` points.
    pub fn variance_points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.n as f64, r.sup_var)).collect()
    }

    pub fn within_ceilings(&self) -> bool {
        self.rows.iter().all(BiasVarianceRow::within_ceilings)
    }
}

/// Reference value and first-order sensitivity of one cell's operator.
struct CellReference {
    value: f64,
    reward_grad: Vec<f64>,
    reward_probs: Vec<f64>,
    transition_grad: Vec<f64>,
    transition_probs: Vec<f64>,
}

fn cell_references(model: &TabularRmdp, q: &QFunction) -> Vec<CellReference> {
    let v = value_of_q(q);
    let delta = model.delta();
    model
        .rewards()
        .iter()
        .zip(model.transitions())
        .map(|(r, t)| {
            let ropt = dual::maximize(r.probs(), r.support(), delta, DEFAULT_TOL);
            let tv: Vec<f64> = t.support().iter().map(|s| v[*s]).collect();
            let topt = dual::maximize(t.probs(), &tv, delta, DEFAULT_TOL);
            CellReference {
                value: ropt.value + model.gamma() * topt.value,
                reward_grad: dual::value_gradient(r.probs(), r.support(), &ropt),
                reward_probs: r.probs().to_vec(),
                transition_grad: dual::value_gradient(t.probs(), &tv, &topt),
                transition_probs: t.probs().to_vec(),
            }
        })
        .collect()
}

fn dot_diff(grad: &[f64], emp: &[f64], reference: &[f64]) -> f64 {
    grad.iter()
        .zip(emp.iter().zip(reference))
        .map(|(g, (e, r))| g * (e - r))
        .sum()
}

/// Zero-mean linear term of each cell's operator around the reference
/// measures.
fn control_variates(emp: &EmpiricalModel, refs: &[CellReference], gamma: f64) -> Vec<f64> {
    let (_, n_actions) = emp.dims();
    refs.iter()
        .enumerate()
        .map(|(cell, r)| {
            let (s, a) = (cell / n_actions, cell % n_actions);
            dot_diff(&r.reward_grad, emp.reward(s, a).probs(), &r.reward_probs)
                + gamma
                    * dot_diff(
                        &r.transition_grad,
                        emp.transition(s, a).probs(),
                        &r.transition_probs,
                    )
        })
        .collect()
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Estimates per-cell bias and variance of `T̂_n(q)` for each `n` in
/// `n_list` from `reps` independent draws.
///
/// The bias column subtracts the exact zero-mean linearization of the
/// operator around the reference measures, which leaves the expectation
/// unchanged but removes the `O(n^{-1/2})` fluctuation that would otherwise
/// hide an `O(1/n)` bias. The uncorrected estimate is kept as `raw_bias`.
pub fn estimate_bias_variance(
    model: &TabularRmdp,
    q: &QFunction,
    n_list: &[usize],
    reps: usize,
    seed: u64,
) -> Result<BiasVarianceTable> {
    model.check_dims(q)?;
    if reps < 2 {
        return Err(Error::param("reps", "at least 2 replications are needed"));
    }
    if n_list.contains(&0) {
        return Err(Error::param("n", "sample sizes must be >= 1"));
    }
    let refs = cell_references(model, q);
    let gamma = model.gamma();
    let span = span_seminorm(q);
    let r_max = model.r_max();
    let log_factor = (std::f64::consts::E
        * model.reward_alphabet_size().max(model.n_states()) as f64)
        .ln();
    let n_actions = model.n_actions();

    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let draws: Vec<(Vec<f64>, Vec<f64>)> = pool::try_map_indexed(reps, |rep| {
            let stream = RngStream::new(seed, 0, Stage::Diagnostics, n as u64, rep as u64);
            let emp = sample_empirical_model(model, n, stream)?;
            let values = DrOperator::empirical(&emp, model.delta(), DEFAULT_TOL).apply(q);
            let cv = control_variates(&emp, &refs, gamma);
            Ok::<_, Error>((values.values().to_vec(), cv))
        })?;

        let mut cells = Vec::with_capacity(refs.len());
        for (cell, r) in refs.iter().enumerate() {
            let xs: Vec<f64> = draws.iter().map(|(v, _)| v[cell]).collect();
            let corrected: Vec<f64> = draws.iter().map(|(v, c)| v[cell] - c[cell]).collect();
            let (mean, var) = mean_and_var(&xs);
            let (cmean, cvar) = mean_and_var(&corrected);
            let sq: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
            let (_, var_of_sq) = mean_and_var(&sq);
            let p = cell_min_support_probability(model, cell);
            cells.push(CellStats {
                s: cell / n_actions,
                a: cell % n_actions,
                bias: cmean - r.value,
                raw_bias: mean - r.value,
                var,
                stderr_bias: (cvar / reps as f64).sqrt(),
                stderr_var: (var_of_sq / reps as f64).sqrt(),
                bias_ceiling: 4480.0 * (r_max + gamma * span) / (p.powi(3) * n as f64)
                    * log_factor,
                variance_ceiling: 104.0 * (r_max * r_max + gamma * gamma * span * span)
                    / (p * p * n as f64)
                    * log_factor,
            });
        }
        let sup_bias = cells.iter().fold(0.0f64, |m, c| m.max(c.bias.abs()));
        let sup_var = cells.iter().fold(0.0f64, |m, c| m.max(c.var));
        rows.push(BiasVarianceRow {
            n,
            reps,
            cells,
            sup_bias,
            sup_var,
        });
    }
    Ok(BiasVarianceTable { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub trials: usize,
    /// Trials with `q1 = q2`, excluded from the ratio.
    pub skipped: usize,
    pub max_ratio: f64,
    pub monotonicity_violations: usize,
    pub gamma: f64,
}

impl ContractionReport {
    pub fn passed(&self) -> bool {
        self.max_ratio <= self.gamma + 1e-9 && self.monotonicity_violations == 0
    }
}

/// `‖T q1 − T q2‖_∞ / ‖q1 − q2‖_∞`, or `None` when `q1 = q2`.
pub fn contraction_ratio(op: &DrOperator<'_>, q1: &QFunction, q2: &QFunction) -> Option<f64> {
    let d = q1.sup_distance(q2);
    (d > 0.0).then(|| op.apply(q1).sup_distance(&op.apply(q2)) / d)
}

fn random_q<R: Rng>(rng: &mut R, n_states: usize, n_actions: usize, hi: f64) -> QFunction {
    QFunction::from_fn(n_states, n_actions, |_, _| rng.random::<f64>() * hi)
}

/// Random-input check of the monotone `γ`-contraction of `T̂_n`.
///
/// Each trial draws `q1, q2` with entries uniform on `[0, (1−γ)^{-1}]` and a
/// fresh `n`-sample operator, records the Lipschitz ratio of the pair, and
/// checks `T̂(max(q1,q2)) ≥ T̂(min(q1,q2)) − 1e-9` entrywise.
pub fn contraction_probe(
    model: &TabularRmdp,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ContractionReport> {
    if trials == 0 {
        return Err(Error::param("trials", "must be >= 1"));
    }
    let (ns, na) = (model.n_states(), model.n_actions());
    let hi = model.horizon();
    let results: Vec<(Option<f64>, bool)> = pool::try_map_indexed(trials, |trial| {
        let mut rng = RngStream::new(seed, trial as u64, Stage::ProbeInputs, 0, 0).rng(0);
        let q1 = random_q(&mut rng, ns, na, hi);
        let q2 = random_q(&mut rng, ns, na, hi);
        let stream = RngStream::new(seed, trial as u64, Stage::Diagnostics, n as u64, 0);
        let emp = sample_empirical_model(model, n, stream)?;
        let op = DrOperator::empirical(&emp, model.delta(), DEFAULT_TOL);
        let ratio = contraction_ratio(&op, &q1, &q2);
        let upper = op.apply(&q1.zip_map(&q2, f64::max));
        let lower = op.apply(&q1.zip_map(&q2, f64::min));
        let monotone = upper
            .values()
            .iter()
            .zip(lower.values())
            .all(|(u, l)| *u >= l - 1e-9);
        Ok::<_, Error>((ratio, monotone))
    })?;
    Ok(ContractionReport {
        trials,
        skipped: results.iter().filter(|(r, _)| r.is_none()).count(),
        max_ratio: results
            .iter()
            .filter_map(|(r, _)| *r)
            .fold(0.0, f64::max),
        monotonicity_violations: results.iter().filter(|(_, m)| !m).count(),
        gamma: model.gamma(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecenteredReport {
    pub trials: usize,
    pub n: usize,
    pub b: f64,
    pub eta: f64,
    /// Whether `n ≥ 8 p_∧^{-2} log(4|S|²|A|/η)`.
    pub proviso_met: bool,
    pub exceedances: usize,
    pub max_statistic: f64,
    /// Largest ratio of statistic to its per-trial threshold.
    pub max_threshold_ratio: f64,
}

impl RecenteredReport {
    pub fn exceedance_rate(&self) -> f64 {
        self.exceedances as f64 / self.trials as f64
    }

    /// Binomial standard error of the exceedance rate at rate `η`.
    pub fn binomial_stderr(&self) -> f64 {
        (self.eta * (1.0 - self.eta) / self.trials as f64).sqrt()
    }

    /// Empirical exceedance within `η` plus three standard errors.
    pub fn passed(&self) -> bool {
        self.exceedance_rate() <= self.eta + 3.0 * self.binomial_stderr()
    }
}

/// Threshold `6γ‖q̂ − q*‖_∞ / (p_∧^{3/2} √n) · sqrt(log(4|S|²|A|/η))`.
pub fn recentered_threshold(model: &TabularRmdp, distance: f64, n: usize, eta: f64) -> f64 {
    let p = min_support_probability(model);
    let s = model.n_states() as f64;
    let a = model.n_actions() as f64;
    6.0 * model.gamma() * distance / (p.powf(1.5) * (n as f64).sqrt())
        * (4.0 * s * s * a / eta).ln().sqrt()
}

/// Tail frequency of `‖H(q̂) − Ĥ(q̂)‖_∞` with `q̂` uniform in the sup-norm
/// ball of radius `b` around `q_star`, where `H(q̂) = T(q̂) − T(q*)` and
/// `Ĥ` is its empirical counterpart on one `n`-sample draw.
pub fn recentered_probe(
    model: &TabularRmdp,
    q_star: &QFunction,
    b: f64,
    n: usize,
    trials: usize,
    eta: f64,
    seed: u64,
) -> Result<RecenteredReport> {
    model.check_dims(q_star)?;
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::param("b", format!("{b} must be a finite radius >= 0")));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be >= 1"));
    }
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::param("eta", format!("{eta} outside (0, 1)")));
    }
    let p = min_support_probability(model);
    let s = model.n_states() as f64;
    let a = model.n_actions() as f64;
    let proviso_met = n as f64 >= 8.0 / (p * p) * (4.0 * s * s * a / eta).ln();

    let exact = DrOperator::exact(model, DEFAULT_TOL);
    let exact_star = exact.apply(q_star);
    let results: Vec<(f64, f64)> = pool::try_map_indexed(trials, |trial| {
        let mut rng = RngStream::new(seed, trial as u64, Stage::ProbeInputs, 1, 0).rng(0);
        let q_hat = QFunction::from_fn(q_star.n_states(), q_star.n_actions(), |s, a| {
            q_star.get(s, a) + b * (2.0 * rng.random::<f64>() - 1.0)
        });
        let stream = RngStream::new(seed, trial as u64, Stage::Diagnostics, n as u64, 1);
        let emp = sample_empirical_model(model, n, stream)?;
        let op = DrOperator::empirical(&emp, model.delta(), DEFAULT_TOL);
        let h_exact = &exact.apply(&q_hat) - &exact_star;
        let h_emp = &op.apply(&q_hat) - &op.apply(q_star);
        let stat = h_exact.sup_distance(&h_emp);
        let threshold = recentered_threshold(model, q_hat.sup_distance(q_star), n, eta);
        Ok::<_, Error>((stat, threshold))
    })?;

    Ok(RecenteredReport {
        trials,
        n,
        b,
        eta,
        proviso_met,
        exceedances: results.iter().filter(|(s, t)| s > t).count(),
        max_statistic: results.iter().fold(0.0, |m, (s, _)| m.max(*s)),
        max_threshold_ratio: results
            .iter()
            .filter(|(_, t)| *t > 0.0)
            .fold(0.0, |m, (s, t)| m.max(s / t)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::build_mixing_mdp;
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
                DiscreteDistribution::point_mass(0.2),
            ],
            vec![
                DiscreteDistribution::point_mass(1),
                DiscreteDistribution::point_mass(0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn point_mass_has_no_bias_or_variance() {
        let m = point_mass_model();
        let q = QFunction::from_rows(vec![vec![1.0], vec![2.0]]).unwrap();
        let t = estimate_bias_variance(&m, &q, &[1, 8], 10, 3).unwrap();
        for row in &t.rows {
            assert!(row.sup_bias < 1e-12);
            assert!(row.sup_var < 1e-24);
        }
    }

    #[test]
    fn nonrobust_operator_is_unbiased() {
        let m = build_mixing_mdp(0.6, 2.0, 0.0).unwrap();
        let q = solve_fixed_point(&m, 1e-10, 10_000).unwrap().q_star;
        let t = estimate_bias_variance(&m, &q, &[4], 200, 1).unwrap();
        // Linear operator: the control variate removes all noise.
        assert!(t.rows[0].sup_bias < 1e-12);
        for c in &t.rows[0].cells {
            assert!(c.raw_bias.abs() < 4.0 * c.var.sqrt() / 200f64.sqrt() + 1e-12);
        }
    }

    #[test]
    fn constant_shift_ratio_is_gamma() {
        let m = build_mixing_mdp(0.6, 2.0, 0.1).unwrap();
        let emp = sample_empirical_model(&m, 5, RngStream::new(1, 0, Stage::Diagnostics, 0, 0)).unwrap();
        let op = DrOperator::empirical(&emp, 0.1, DEFAULT_TOL);
        let q = QFunction::from_rows(vec![vec![0.3, 1.0], vec![2.0, 0.1]]).unwrap();
        let r = contraction_ratio(&op, &q.add_scalar(0.7), &q).unwrap();
        assert!((r - 0.6).abs() < 1e-9);
        assert!(contraction_ratio(&op, &q, &q).is_none());
    }

    #[test]
    fn zero_radius_gives_zero_statistic() {
        let m = build_mixing_mdp(0.6, 2.0, 0.1).unwrap();
        let q = solve_fixed_point(&m, 1e-10, 10_000).unwrap().q_star;
        let r = recentered_probe(&m, &q, 0.0, 16, 20, 0.05, 9).unwrap();
        assert_eq!(r.max_statistic, 0.0);
        assert_eq!(r.exceedances, 0);
    }
}
