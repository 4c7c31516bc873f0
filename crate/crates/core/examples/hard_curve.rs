//! Error against samples for balanced DRQL on the hard instance, with the
//! tail slope of mean log error.

use robustq::bench::{build_hard_mdp, error_curve, fit_loglog_slope, geometric_budgets, Algorithm};
use robustq::oracle::DEFAULT_MAX_ITER;
use robustq::solve_fixed_point;

fn main() -> robustq::Result<()> {
    let model = build_hard_mdp(0.6, 0.1)?;
    let q_star = solve_fixed_point(&model, 1e-12, DEFAULT_MAX_ITER)?.q_star;
    let budgets = geometric_budgets(800, 2_000_000, 12);
    let curve = error_curve(&model, &Algorithm::BalancedDrql { seed: 0 }, &q_star, &budgets, 20)?;
    for p in &curve.points {
        println!("{:>12.0} {:.4e} ± {:.1e}", p.samples, p.error, p.stderr);
    }
    let fit = fit_loglog_slope(&curve.xy(), 0.5)?;
    println!("tail-half slope {:.3} (stderr {:.3})", fit.slope, fit.stderr);
    Ok(())
}
