//! Tabular distributionally robust Q-learning under KL uncertainty sets.
//!
//! The crate provides the KL dual solver behind the robust Bellman operator,
//! exact and sampled versions of that operator, value-iteration oracles,
//! DR Q-learning and its variance-reduced variant, Monte Carlo operator
//! diagnostics, and a benchmark harness.
//!
//! ```
//! use robustq::bench::build_mixing_mdp;
//! use robustq::oracle::{solve_fixed_point, DEFAULT_MAX_ITER};
//!
//! let model = build_mixing_mdp(0.6, 2.0, 0.1).unwrap();
//! let fp = solve_fixed_point(&model, 1e-9, DEFAULT_MAX_ITER).unwrap();
//! assert!(fp.converged);
//! assert!(fp.q_star.sup_norm() <= 1.0 / (1.0 - 0.6));
//! ```

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bellman;
pub mod bench;
pub mod cli;
pub mod diagnostics;
pub mod dual;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod pool;
pub mod q_learning;
pub mod rng;
pub mod vr_q_learning;

pub use bellman::{
    empirical_bellman, exact_bellman, recentered_empirical, sample_empirical_model, DrOperator,
    EmpiricalModel,
};
pub use dual::{
    dual_objective, primal_check, solve_dual, worst_case_measure, DualProblem, DualSolution,
};
pub use error::{Error, Result};
pub use model::{
    greedy_policy, min_support_probability, span_seminorm, validate, value_of_q,
    DiscreteDistribution, Policy, QFunction, TabularRmdp, ValidationReport,
};
pub use oracle::{nonrobust_fixed_point, solve_fixed_point, FixedPointResult};
pub use q_learning::{run_drql, run_standard_ql, DrqlParams, RunOptions, TraceRecord};
pub use vr_q_learning::{run_nonrobust_vrql, run_vrql, VrqlParams};
