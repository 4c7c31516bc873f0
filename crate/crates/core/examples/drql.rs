//! DR Q-learning on the hard instance, traced against q*.

use robustq::bench::build_hard_mdp;
use robustq::oracle::DEFAULT_MAX_ITER;
use robustq::q_learning::Checkpoints;
use robustq::{run_drql, solve_fixed_point, DrqlParams, RunOptions};

fn main() -> robustq::Result<()> {
    let model = build_hard_mdp(0.6, 0.1)?;
    let q_star = solve_fixed_point(&model, 1e-12, DEFAULT_MAX_ITER)?.q_star;
    let params = DrqlParams::new(2000, 200, 7)?;
    let opts = RunOptions {
        q_star: Some(&q_star),
        checkpoints: Checkpoints::At(vec![1, 10, 100, 500, 1000, 2000]),
        ..RunOptions::default()
    };
    let out = run_drql(&model, &params, &opts)?;
    println!("{:>6} {:>12} {:>12}", "iter", "samples", "error");
    for r in &out.trace {
        println!("{:>6} {:>12} {:>12.4e}", r.iter, r.samples, r.error.unwrap());
    }
    Ok(())
}
