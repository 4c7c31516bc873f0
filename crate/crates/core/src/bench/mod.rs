//! Experiment instances, budgeted sweeps and slope fitting.

mod compare;
mod curves;
mod instances;
pub mod output;
mod slope;
mod sweep;

pub use compare::{compare_equal_budget, ComparisonPair, EqualBudgetComparison};
pub use curves::{
    balanced_side, error_curve, geometric_budgets, trajectory_errors, Algorithm, CurvePoint,
    ErrorCurve,
};
pub use instances::{build_hard_mdp, build_mixing_mdp, hard_mdp_p};
pub use slope::{fit_loglog_slope, SlopeFit};
pub use sweep::{horizon_sweep, sweep_slope, HorizonScaling, HorizonSweepRow};
