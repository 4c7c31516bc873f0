//! Robust and nominal fixed points of the built-in instances.

use robustq::bench::{build_hard_mdp, build_mixing_mdp};
use robustq::oracle::DEFAULT_MAX_ITER;
use robustq::{greedy_policy, nonrobust_fixed_point, solve_fixed_point};

fn main() -> robustq::Result<()> {
    for (name, model) in [
        ("hard", build_hard_mdp(0.6, 0.1)?),
        ("mixing", build_mixing_mdp(0.6, 2.0, 0.1)?),
    ] {
        let robust = solve_fixed_point(&model, 1e-10, DEFAULT_MAX_ITER)?;
        let nominal = nonrobust_fixed_point(&model, 1e-10, DEFAULT_MAX_ITER)?;
        println!("{name}: {} iterations, residual {:.2e}", robust.iterations, robust.residual);
        for s in 0..model.n_states() {
            println!(
                "  s{s}: robust {:.6}  nominal {:.6}",
                robust.q_star.get(s, 0),
                nominal.q_star.get(s, 0)
            );
        }
        println!("  greedy policy {:?}", greedy_policy(&robust.q_star).actions);
    }
    Ok(())
}
