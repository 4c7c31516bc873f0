//! Samples needed to reach a target error as the horizon grows, robust
//! against nominal.

use robustq::bench::{build_mixing_mdp, horizon_sweep, sweep_slope, HorizonScaling};

fn main() -> robustq::Result<()> {
    let gammas = [0.5, 0.6, 0.7, 0.8];
    for (robust, eps, scaling) in [
        (false, 0.02, HorizonScaling::nonrobust()),
        (true, 0.01, HorizonScaling::robust()),
    ] {
        let delta = if robust { 0.1 } else { 0.0 };
        let rows = horizon_sweep(&|g| build_mixing_mdp(g, 2.0, delta), &gammas, eps, robust, &scaling, 100, 0)?;
        println!("{} (eps = {eps})", if robust { "robust" } else { "nominal" });
        for r in &rows {
            println!("  h = {:.1}: {:?} samples ({} / {} reached)", r.horizon, r.mean_samples, r.reached, r.trajectories);
        }
        println!("  slope {:.3}", sweep_slope(&rows, 1.0)?.slope);
    }
    Ok(())
}
