//! Worst-case expectation over a KL ball, with the adversary's measure.

use robustq::dual::{dual_objective, primal_check, solve_dual, DualProblem};

fn main() -> robustq::Result<()> {
    let problem = DualProblem::new(vec![0.2, 0.5, 0.3], vec![0.0, 1.0, 4.0], 0.1)?;
    let sol = solve_dual(&problem, 1e-10)?;

    println!("mean           {:.6}", problem.mean());
    println!("robust value   {:.6}", sol.value);
    println!("alpha*         {:.6} ({:?})", sol.alpha_star, sol.kind);
    println!("worst case     {:?}", sol.worst_case);
    println!("KL to mu       {:.3e}", sol.kl_to_reference);

    for alpha in [0.5, 1.0, sol.alpha_star, 5.0] {
        println!("  f({alpha:.4}) = {:.6}", dual_objective(&problem, alpha)?);
    }
    let check = primal_check(&problem, &sol);
    println!("primal check within 1e-8: {}", check.within(1e-8));
    Ok(())
}
