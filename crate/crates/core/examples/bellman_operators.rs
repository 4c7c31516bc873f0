//! Exact and sampled robust Bellman operators on the mixing instance.

use robustq::bench::build_mixing_mdp;
use robustq::rng::{RngStream, Stage};
use robustq::{empirical_bellman, exact_bellman, sample_empirical_model, QFunction};

fn main() -> robustq::Result<()> {
    let model = build_mixing_mdp(0.6, 2.0, 0.1)?;
    let q = QFunction::from_rows(vec![vec![2.0, 1.0], vec![0.5, 0.0]])?;
    let exact = exact_bellman(&model, &q)?;
    println!("T(q)      = {:?}", exact.rows());

    for n in [10, 100, 1000, 10_000] {
        let emp = sample_empirical_model(&model, n, RngStream::new(1, 0, Stage::Diagnostics, n as u64, 0))?;
        let t = empirical_bellman(&emp, &q, model.delta())?;
        println!("n = {n:>6}: |T_n(q) - T(q)| = {:.4e}", t.sup_distance(&exact));
    }
    Ok(())
}
