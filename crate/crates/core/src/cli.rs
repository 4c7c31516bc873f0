//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid model or parameters, 3 numerical
//! non-convergence, 64 usage error, 1 anything else (I/O).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::output::{self, SweepRow, TraceRow, VrTraceRow};
use crate::bench::{
    build_hard_mdp, build_mixing_mdp, compare_equal_budget, error_curve, fit_loglog_slope,
    geometric_budgets, horizon_sweep, sweep_slope, Algorithm, HorizonScaling,
};
use crate::diagnostics::{contraction_probe, estimate_bias_variance, recentered_probe};
use crate::error::{Error, Result};
use crate::io::{load_model, q_to_string};
use crate::model::{validate, QFunction, TabularRmdp};
use crate::oracle::{nonrobust_fixed_point, solve_fixed_point, DEFAULT_MAX_ITER};
use crate::pool;
use crate::q_learning::{
    default_drql_params, run_drql, run_standard_ql, Checkpoints, DrqlParams, RecipeConstants,
    RunOptions,
};
use crate::vr_q_learning::{default_vrql_params, run_nonrobust_vrql, run_vrql, VrqlParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "robustq", version, about = "Distributionally robust tabular Q-learning")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    Hard,
    Mixing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Learner {
    Drql,
    Vrql,
    Ql,
    Nrvrql,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Model file (JSON).
    #[arg(long, global = true, conflicts_with = "builtin")]
    pub model: Option<PathBuf>,
    /// Built-in instance.
    #[arg(long, global = true, value_enum)]
    pub builtin: Option<Builtin>,
    /// Discount factor of a built-in instance [default: 0.6].
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Robustness radius; overrides the model file's value [default: 0.1].
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Mixing-time parameter of the mixing instance.
    #[arg(long, global = true, default_value_t = 2.0)]
    pub t: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    pub trajectories: usize,
    /// Output file; defaults to standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Target accuracy.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Failure probability used by the parameter recipes and probes.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, global = true)]
    pub k0: Option<usize>,
    #[arg(long, global = true)]
    pub n0: Option<usize>,
    #[arg(long, global = true)]
    pub kvr: Option<usize>,
    #[arg(long, global = true)]
    pub lvr: Option<usize>,
    #[arg(long, global = true)]
    pub nvr: Option<usize>,
    /// Recentering sizes `m_l = ⌈m_base · 4^l⌉`.
    #[arg(long = "m-base", global = true)]
    pub m_base: Option<f64>,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub c3: f64,
    /// Comma-separated discount factors for `bench mixing`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    /// Learner used by `bench`.
    #[arg(long, global = true, value_enum)]
    pub algo: Option<Learner>,
    /// Trace checkpoint stride [default: ⌈iterations/200⌉].
    #[arg(long, global = true)]
    pub stride: Option<usize>,
    /// Fixed-point tolerance of the oracle.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Samples per cell for `diagnose contraction|recentered`.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Comma-separated sample sizes for `diagnose bias-var`.
    #[arg(long = "n-list", global = true, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Replications for `diagnose bias-var`.
    #[arg(long, global = true, default_value_t = 500)]
    pub reps: usize,
    /// Trials for `diagnose contraction|recentered`.
    #[arg(long, global = true, default_value_t = 1000)]
    pub trials: usize,
    /// Radius of the ball around q* for `diagnose recentered`.
    #[arg(long, global = true, default_value_t = 0.5)]
    pub b: f64,
    /// Comma-separated sample budgets for `bench hard`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub budgets: Option<Vec<u64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute q* by value iteration of the exact operator.
    Solve,
    /// Run one learner and write its trace.
    Run {
        #[arg(value_enum)]
        algo: Learner,
    },
    /// Benchmark experiments.
    Bench {
        #[arg(value_enum)]
        kind: BenchKind,
    },
    /// Monte Carlo checks of the empirical operator.
    Diagnose {
        #[arg(value_enum)]
        kind: DiagnoseKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchKind {
    /// Error-versus-samples curve on the hard instance.
    Hard,
    /// Samples-to-target against horizon on the mixing family.
    Mixing,
    /// VRQL against DRQL at equal budget.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiagnoseKind {
    BiasVar,
    Contraction,
    Recentered,
}

/// Parses `std::env::args_os()` and runs; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion
                | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_)
        | Error::Distribution(_)
        | Error::InvalidParameter { .. }
        | Error::Dimension { .. }
        | Error::Parse { .. }
        | Error::TooFewPoints(_) => EXIT_VALIDATION,
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_OTHER,
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve => solve(&cli.opts),
        Command::Run { algo } => run_learner(&cli.opts, *algo),
        Command::Bench { kind } => match kind {
            BenchKind::Hard => bench_hard(&cli.opts),
            BenchKind::Mixing => bench_mixing(&cli.opts),
            BenchKind::Compare => bench_compare(&cli.opts),
        },
        Command::Diagnose { kind } => match kind {
            DiagnoseKind::BiasVar => diagnose_bias_var(&cli.opts),
            DiagnoseKind::Contraction => diagnose_contraction(&cli.opts),
            DiagnoseKind::Recentered => diagnose_recentered(&cli.opts),
        },
    }
}

fn sink(opts: &GlobalOpts) -> Result<Box<dyn Write>> {
    Ok(match &opts.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// Progress and summaries go to stderr when the data goes to stdout.
fn report(opts: &GlobalOpts, line: &str) {
    if opts.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn write_csv<R: Serialize>(opts: &GlobalOpts, rows: &[R]) -> Result<()> {
    output::write_rows(sink(opts)?, rows)
}

fn load(opts: &GlobalOpts, fallback: Builtin) -> Result<TabularRmdp> {
    let model = match (&opts.model, opts.builtin) {
        (Some(path), _) => {
            let m = load_model(path)?;
            match opts.delta {
                Some(d) => m.with_delta(d)?,
                None => m,
            }
        }
        (None, builtin) => {
            let gamma = opts.gamma.unwrap_or(0.6);
            let delta = opts.delta.unwrap_or(0.1);
            match builtin.unwrap_or(fallback) {
                Builtin::Hard => build_hard_mdp(gamma, delta)?,
                Builtin::Mixing => build_mixing_mdp(gamma, opts.t, delta)?,
            }
        }
    };
    let report = validate(&model);
    if report.assumption1_holds() == Some(false) {
        eprintln!(
            "warning: delta = {} exceeds the limited-adversary threshold {:.6e}; algorithms still run",
            model.delta(),
            report.assumption1_threshold.unwrap_or(f64::NAN)
        );
    }
    Ok(model)
}

fn reference(model: &TabularRmdp, robust: bool, tol: f64) -> Result<QFunction> {
    let fp = if robust {
        solve_fixed_point(model, tol, DEFAULT_MAX_ITER)?
    } else {
        nonrobust_fixed_point(model, tol, DEFAULT_MAX_ITER)?
    };
    if !fp.converged {
        return Err(Error::NonConvergence {
            iterations: fp.iterations,
            residual: fp.residual,
        });
    }
    Ok(fp.q_star)
}

fn constants(opts: &GlobalOpts) -> RecipeConstants {
    RecipeConstants {
        c1: opts.c1,
        c2: opts.c2,
        c3: opts.c3,
    }
}

fn drql_params(opts: &GlobalOpts, model: &TabularRmdp) -> Result<DrqlParams> {
    let base = match opts.eps {
        Some(eps) => Some(default_drql_params(model, eps, opts.eta, constants(opts), opts.seed)?),
        None => None,
    };
    let k0 = opts.k0.or(base.as_ref().map(|p| p.k0));
    let n0 = opts.n0.or(base.as_ref().map(|p| p.n0));
    match (k0, n0) {
        (Some(k0), Some(n0)) => DrqlParams::new(k0, n0, opts.seed),
        _ => Err(Error::param("k0", "give --k0 and --n0, or --eps for the recipe")),
    }
}

fn vrql_params(opts: &GlobalOpts, model: &TabularRmdp) -> Result<VrqlParams> {
    let base = match opts.eps {
        Some(eps) => Some(default_vrql_params(model, eps, opts.eta, constants(opts), opts.seed)?),
        None => None,
    };
    let l_vr = opts.lvr.or(base.as_ref().map(|p| p.l_vr));
    let k_vr = opts.kvr.or(base.as_ref().map(|p| p.k_vr));
    let n_vr = opts.nvr.or(base.as_ref().map(|p| p.n_vr));
    let (Some(l_vr), Some(k_vr), Some(n_vr)) = (l_vr, k_vr, n_vr) else {
        return Err(Error::param(
            "kvr",
            "give --kvr, --lvr, --nvr and --m-base, or --eps for the recipe",
        ));
    };
    match (opts.m_base, base) {
        (Some(m_base), _) => VrqlParams::geometric(l_vr, k_vr, n_vr, m_base, opts.seed),
        (None, Some(base)) if base.l_vr == l_vr => {
            VrqlParams::new(l_vr, k_vr, n_vr, base.m, opts.seed)
        }
        _ => Err(Error::param("m-base", "recentering sizes are needed")),
    }
}

fn checkpoints(opts: &GlobalOpts) -> Checkpoints {
    opts.stride.map_or(Checkpoints::Auto, Checkpoints::Every)
}

fn solve(opts: &GlobalOpts) -> Result<()> {
    let model = load(opts, Builtin::Mixing)?;
    let fp = solve_fixed_point(&model, opts.tol, DEFAULT_MAX_ITER)?;
    let text = q_to_string(&fp.q_star);
    println!("q* = {text}");
    println!("iterations = {}", fp.iterations);
    println!("residual = {:e}", fp.residual);
    println!("error_bound = {:e}", fp.error_bound);
    if let Some(path) = &opts.out {
        std::fs::write(path, format!("{text}\n"))?;
    }
    if !fp.converged {
        return Err(Error::NonConvergence {
            iterations: fp.iterations,
            residual: fp.residual,
        });
    }
    Ok(())
}

fn check_trajectories(opts: &GlobalOpts) -> Result<()> {
    if opts.trajectories == 0 {
        return Err(Error::param("trajectories", "must be >= 1"));
    }
    Ok(())
}

fn run_learner(opts: &GlobalOpts, algo: Learner) -> Result<()> {
    check_trajectories(opts)?;
    let model = load(opts, Builtin::Hard)?;
    let robust = matches!(algo, Learner::Drql | Learner::Vrql);
    let q_star = reference(&model, robust, opts.tol)?;
    let run_opts = |t: usize| RunOptions {
        q_star: Some(&q_star),
        checkpoints: checkpoints(opts),
        trajectory: t as u64,
        ..RunOptions::default()
    };
    let finals: Vec<f64>;
    match algo {
        Learner::Drql | Learner::Ql => {
            let params = drql_params(opts, &model)?;
            let outs = pool::try_map_indexed(opts.trajectories, |t| match algo {
                Learner::Drql => run_drql(&model, &params, &run_opts(t)),
                _ => run_standard_ql(&model, &params, &run_opts(t)),
            })?;
            let rows: Vec<TraceRow> = outs
                .iter()
                .flat_map(|o| o.trace.iter().map(TraceRow::from))
                .collect();
            write_csv(opts, &rows)?;
            finals = outs.iter().map(|o| o.q.sup_distance(&q_star)).collect();
            report(
                opts,
                &format!("k0 = {}, n0 = {}, samples = {}", params.k0, params.n0, params.total_samples(&model)),
            );
        }
        Learner::Vrql | Learner::Nrvrql => {
            let params = vrql_params(opts, &model)?;
            let outs = pool::try_map_indexed(opts.trajectories, |t| match algo {
                Learner::Vrql => run_vrql(&model, &params, &run_opts(t)),
                _ => run_nonrobust_vrql(&model, &params, &run_opts(t)),
            })?;
            let rows: Vec<VrTraceRow> = outs
                .iter()
                .flat_map(|o| o.trace.iter().map(VrTraceRow::from))
                .collect();
            write_csv(opts, &rows)?;
            finals = outs.iter().map(|o| o.q.sup_distance(&q_star)).collect();
            report(
                opts,
                &format!(
                    "l_vr = {}, k_vr = {}, n_vr = {}, m = {:?}, samples = {}",
                    params.l_vr,
                    params.k_vr,
                    params.n_vr,
                    params.m,
                    params.samples_through(&model, params.l_vr)
                ),
            );
        }
    }
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    report(opts, &format!("mean final error = {mean:e}"));
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    samples: f64,
    error: f64,
    stderr: f64,
    log_error: f64,
}

fn bench_hard(opts: &GlobalOpts) -> Result<()> {
    check_trajectories(opts)?;
    let model = load(opts, Builtin::Hard)?;
    let learner = opts.algo.unwrap_or(Learner::Drql);
    let robust = matches!(learner, Learner::Drql | Learner::Vrql);
    let q_star = reference(&model, robust, opts.tol)?;
    let cells = model.n_cells() as u64;
    let (algorithm, budgets) = match learner {
        Learner::Drql if opts.k0.is_none() && opts.n0.is_none() && opts.eps.is_none() => {
            let budgets = opts
                .budgets
                .clone()
                .unwrap_or_else(|| geometric_budgets(cells * 100, cells * 250_000, 12));
            (Algorithm::BalancedDrql { seed: opts.seed }, budgets)
        }
        Learner::Drql | Learner::Ql => {
            let p = drql_params(opts, &model)?;
            let total = p.total_samples(&model);
            let budgets = opts.budgets.clone().unwrap_or_else(|| {
                geometric_budgets(cells * p.n0 as u64, total, 20)
            });
            let algo = if learner == Learner::Drql {
                Algorithm::Drql(p)
            } else {
                Algorithm::Ql(p)
            };
            (algo, budgets)
        }
        Learner::Vrql | Learner::Nrvrql => {
            let p = vrql_params(opts, &model)?;
            let first = cells * (p.m[0] + p.n_vr) as u64;
            let total = p.samples_through(&model, p.l_vr);
            let budgets = opts
                .budgets
                .clone()
                .unwrap_or_else(|| geometric_budgets(first, total, 20));
            let algo = if learner == Learner::Vrql {
                Algorithm::Vrql(p)
            } else {
                Algorithm::NrVrql(p)
            };
            (algo, budgets)
        }
    };
    let curve = error_curve(&model, &algorithm, &q_star, &budgets, opts.trajectories)?;
    let rows: Vec<CurveRow> = curve
        .points
        .iter()
        .map(|p| CurveRow {
            samples: p.samples,
            error: p.error,
            stderr: p.stderr,
            log_error: p.log_error,
        })
        .collect();
    write_csv(opts, &rows)?;
    match fit_loglog_slope(&curve.xy(), 0.5) {
        Ok(fit) => report(
            opts,
            &format!(
                "{}: tail-half slope = {:.4} (stderr {:.4})",
                curve.algorithm, fit.slope, fit.stderr
            ),
        ),
        Err(e) => report(opts, &format!("{}: no slope ({e})", curve.algorithm)),
    }
    Ok(())
}

fn bench_mixing(opts: &GlobalOpts) -> Result<()> {
    check_trajectories(opts)?;
    let learner = opts.algo.unwrap_or(Learner::Nrvrql);
    let robust = match learner {
        Learner::Vrql => true,
        Learner::Nrvrql => false,
        _ => {
            return Err(Error::param(
                "algo",
                "horizon sweeps run vrql or nrvrql",
            ))
        }
    };
    let delta = if robust { opts.delta.unwrap_or(0.1) } else { 0.0 };
    let gammas = opts.gammas.clone().unwrap_or_else(|| vec![0.5, 0.6, 0.7, 0.8]);
    let epsilons = match opts.eps {
        Some(eps) => vec![eps],
        None if robust => vec![0.01, 0.015, 0.02],
        None => vec![0.01, 0.02, 0.03],
    };
    let scaling = if robust {
        HorizonScaling::robust()
    } else {
        HorizonScaling::nonrobust()
    };
    let t = opts.t;
    let builder = move |g: f64| build_mixing_mdp(g, t, delta);
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for eps in epsilons {
        let sweep = horizon_sweep(&builder, &gammas, eps, robust, &scaling, opts.trajectories, opts.seed)?;
        summaries.push(match sweep_slope(&sweep, 1.0) {
            Ok(fit) => format!("eps = {eps}: slope = {:.4} (stderr {:.4})", fit.slope, fit.stderr),
            Err(e) => format!("eps = {eps}: no slope ({e})"),
        });
        rows.extend(sweep.iter().map(SweepRow::from));
    }
    write_csv(opts, &rows)?;
    for s in summaries {
        report(opts, &s);
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    trajectory: u64,
    vrql_error: f64,
    drql_error: f64,
}

fn bench_compare(opts: &GlobalOpts) -> Result<()> {
    check_trajectories(opts)?;
    let model = load(opts, Builtin::Hard)?;
    let q_star = reference(&model, true, opts.tol)?;
    let params = vrql_params(opts, &model)?;
    let cmp = compare_equal_budget(&model, &q_star, &params, opts.trajectories)?;
    let rows: Vec<CompareRow> = cmp
        .pairs
        .iter()
        .map(|p| CompareRow {
            trajectory: p.trajectory,
            vrql_error: p.vrql_error,
            drql_error: p.drql_error,
        })
        .collect();
    write_csv(opts, &rows)?;
    let (v, d) = cmp.mean_errors();
    report(
        opts,
        &format!(
            "budget = {}, drql k0 = n0 = {}; mean error vrql = {v:e}, drql = {d:e}; vrql wins {}/{}",
            cmp.budget,
            cmp.drql.k0,
            cmp.vrql_wins(),
            cmp.pairs.len()
        ),
    );
    Ok(())
}

fn diagnose_bias_var(opts: &GlobalOpts) -> Result<()> {
    let model = load(opts, Builtin::Mixing)?;
    let q_star = reference(&model, true, opts.tol)?;
    let n_list = opts
        .n_list
        .clone()
        .unwrap_or_else(|| (4..=12).map(|k| 1usize << k).collect());
    let table = estimate_bias_variance(&model, &q_star, &n_list, opts.reps, opts.seed)?;
    write_csv(opts, &output::bias_variance_rows(&table))?;
    for (name, pts) in [("variance", table.variance_points()), ("bias", table.bias_points())] {
        match fit_loglog_slope(&pts, 1.0) {
            Ok(fit) => report(opts, &format!("sup-norm {name} slope = {:.4}", fit.slope)),
            Err(e) => report(opts, &format!("sup-norm {name}: no slope ({e})")),
        }
    }
    report(opts, &format!("within ceilings = {}", table.within_ceilings()));
    Ok(())
}

#[derive(Serialize)]
struct ContractionRow {
    trials: usize,
    skipped: usize,
    max_ratio: f64,
    monotonicity_violations: usize,
    gamma: f64,
    passed: bool,
}

fn diagnose_contraction(opts: &GlobalOpts) -> Result<()> {
    let model = load(opts, Builtin::Hard)?;
    let r = contraction_probe(&model, opts.n.unwrap_or(8), opts.trials, opts.seed)?;
    write_csv(
        opts,
        &[ContractionRow {
            trials: r.trials,
            skipped: r.skipped,
            max_ratio: r.max_ratio,
            monotonicity_violations: r.monotonicity_violations,
            gamma: r.gamma,
            passed: r.passed(),
        }],
    )
}

#[derive(Serialize)]
struct RecenteredRow {
    trials: usize,
    n: usize,
    b: f64,
    eta: f64,
    proviso_met: bool,
    exceedances: usize,
    exceedance_rate: f64,
    max_statistic: f64,
    max_threshold_ratio: f64,
    passed: bool,
}

fn diagnose_recentered(opts: &GlobalOpts) -> Result<()> {
    let model = load(opts, Builtin::Mixing)?;
    let q_star = reference(&model, true, opts.tol)?;
    let r = recentered_probe(
        &model,
        &q_star,
        opts.b,
        opts.n.unwrap_or(64),
        opts.trials,
        opts.eta,
        opts.seed,
    )?;
    if !r.proviso_met {
        eprintln!("warning: proviso unmet; n is below the sample size the bound assumes");
    }
    write_csv(
        opts,
        &[RecenteredRow {
            trials: r.trials,
            n: r.n,
            b: r.b,
            eta: r.eta,
            proviso_met: r.proviso_met,
            exceedances: r.exceedances,
            exceedance_rate: r.exceedance_rate(),
            max_statistic: r.max_statistic,
            max_threshold_ratio: r.max_threshold_ratio,
            passed: r.passed(),
        }],
    )
}
