//! Variance-reduced DR Q-learning: per-epoch errors against the halving
//! envelope `2^-l / (1 - gamma)`.

use robustq::bench::build_mixing_mdp;
use robustq::oracle::DEFAULT_MAX_ITER;
use robustq::q_learning::{Checkpoints, RecipeConstants};
use robustq::vr_q_learning::default_vrql_params;
use robustq::{run_vrql, solve_fixed_point, RunOptions};

fn main() -> robustq::Result<()> {
    let model = build_mixing_mdp(0.6, 2.0, 0.1)?;
    let q_star = solve_fixed_point(&model, 1e-12, DEFAULT_MAX_ITER)?.q_star;
    let params = default_vrql_params(&model, 0.2, 0.05, RecipeConstants::default(), 3)?;
    println!(
        "l_vr = {}, k_vr = {}, n_vr = {}, m = {:?}",
        params.l_vr, params.k_vr, params.n_vr, params.m
    );
    let opts = RunOptions {
        q_star: Some(&q_star),
        checkpoints: Checkpoints::At(Vec::new()),
        ..RunOptions::default()
    };
    let out = run_vrql(&model, &params, &opts)?;
    for (l, e) in out.epoch_errors.iter().enumerate() {
        let envelope = model.horizon() / 2f64.powi(l as i32 + 1);
        println!("epoch {}: error {:.4e}  envelope {:.4e}", l + 1, e, envelope);
    }
    println!("samples: {}", out.samples);
    Ok(())
}
