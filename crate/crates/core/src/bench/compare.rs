//! VRQL against DRQL at a shared sample budget.

use crate::bench::curves::balanced_side;
use crate::error::{Error, Result};
use crate::model::{QFunction, TabularRmdp};
use crate::pool;
use crate::q_learning::{run_drql, Checkpoints, DrqlParams, RunOptions};
use crate::vr_q_learning::{run_vrql, VrqlParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonPair {
    pub trajectory: u64,
    pub vrql_error: f64,
    pub drql_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualBudgetComparison {
    /// Samples consumed by one VRQL run.
    pub budget: u64,
    pub vrql: VrqlParams,
    /// Balanced DRQL parameters fitting inside `budget`.
    pub drql: DrqlParams,
    pub pairs: Vec<ComparisonPair>,
}

impl EqualBudgetComparison {
    /// Pairs in which VRQL's final error is no larger than DRQL's.
    pub fn vrql_wins(&self) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.vrql_error <= p.drql_error)
            .count()
    }

    pub fn mean_errors(&self) -> (f64, f64) {
        let n = self.pairs.len() as f64;
        (
            self.pairs.iter().map(|p| p.vrql_error).sum::<f64>() / n,
            self.pairs.iter().map(|p| p.drql_error).sum::<f64>() / n,
        )
    }
}

/// Runs VRQL with `vrql` and DRQL with `k0 = n0 = ⌊sqrt(B/(|S||A|))⌋`, where
/// `B` is VRQL's total sample count, on `trajectories` paired seeds.
pub fn compare_equal_budget(
    model: &TabularRmdp,
    q_star: &QFunction,
    vrql: &VrqlParams,
    trajectories: usize,
) -> Result<EqualBudgetComparison> {
    model.check_dims(q_star)?;
    if trajectories == 0 {
        return Err(Error::param("trajectories", "must be >= 1"));
    }
    let budget = vrql.samples_through(model, vrql.l_vr);
    let side = balanced_side(model, budget);
    let drql = DrqlParams::new(side, side, vrql.seed)?;
    let pairs = pool::try_map_indexed(trajectories, |t| {
        let opts = RunOptions {
            q_star: Some(q_star),
            checkpoints: Checkpoints::At(Vec::new()),
            trajectory: t as u64,
            ..RunOptions::default()
        };
        let v = run_vrql(model, vrql, &opts)?;
        let d = run_drql(model, &drql, &opts)?;
        Ok::<_, Error>(ComparisonPair {
            trajectory: t as u64,
            vrql_error: v.q.sup_distance(q_star),
            drql_error: d.q.sup_distance(q_star),
        })
    })?;
    Ok(EqualBudgetComparison {
        budget,
        vrql: vrql.clone(),
        drql,
        pairs,
    })
}
