//! Building, validating, saving and reloading a model.

use robustq::io::{load_model, save_model};
use robustq::{validate, DiscreteDistribution, TabularRmdp};

fn main() -> robustq::Result<()> {
    let coin = DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5])?;
    let drift = DiscreteDistribution::new(vec![0, 1], vec![0.8, 0.2])?;
    let back = DiscreteDistribution::new(vec![0, 1], vec![0.3, 0.7])?;
    let model = TabularRmdp::new(
        2,
        2,
        0.9,
        0.002,
        vec![coin.clone(), DiscreteDistribution::point_mass(0.4), coin, DiscreteDistribution::point_mass(0.6)],
        vec![drift.clone(), back.clone(), back, drift],
    )?;
    print!("{}", validate(&model));

    let path = std::env::temp_dir().join("robustq-example-model.json");
    save_model(&model, &path)?;
    let again = load_model(&path)?;
    println!("round trip equal: {}", again == model);

    // A radius past the limited-adversary threshold is allowed but flagged.
    let loud = model.with_delta(0.5)?;
    println!("assumption holds at delta = 0.5: {:?}", validate(&loud).assumption1_holds());
    Ok(())
}
