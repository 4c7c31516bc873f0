//! Monte Carlo bias, variance, contraction and recentering checks of the
//! empirical operator.

use robustq::bench::{build_hard_mdp, build_mixing_mdp, fit_loglog_slope};
use robustq::diagnostics::{contraction_probe, estimate_bias_variance, recentered_probe};
use robustq::oracle::DEFAULT_MAX_ITER;
use robustq::solve_fixed_point;

fn main() -> robustq::Result<()> {
    let mixing = build_mixing_mdp(0.6, 2.0, 0.1)?;
    let q_star = solve_fixed_point(&mixing, 1e-12, DEFAULT_MAX_ITER)?.q_star;

    let n_list: Vec<usize> = (4..=10).map(|k| 1 << k).collect();
    let table = estimate_bias_variance(&mixing, &q_star, &n_list, 1000, 0)?;
    for row in &table.rows {
        println!("n = {:>5}  sup|bias| = {:.3e}  sup var = {:.3e}", row.n, row.sup_bias, row.sup_var);
    }
    println!("bias slope     {:.3}", fit_loglog_slope(&table.bias_points(), 1.0)?.slope);
    println!("variance slope {:.3}", fit_loglog_slope(&table.variance_points(), 1.0)?.slope);

    let c = contraction_probe(&build_hard_mdp(0.6, 0.1)?, 8, 1000, 0)?;
    println!("contraction: max ratio {:.6}, violations {}", c.max_ratio, c.monotonicity_violations);

    let r = recentered_probe(&mixing, &q_star, 0.5, 256, 1000, 0.05, 0)?;
    println!(
        "recentered: {} / {} above threshold (eta = {})",
        r.exceedances, r.trials, r.eta
    );
    Ok(())
}
