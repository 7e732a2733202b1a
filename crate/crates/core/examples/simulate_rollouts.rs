//! Simulate rollouts of a random linear system and write them to CSV.

use steerkit::dynamics::io::{read_batch, write_batch};
use steerkit::dynamics::{simulate_rollouts, DynamicsSpec, IsotropicGaussian, LinearSystem};

fn main() -> steerkit::Result<()> {
    let sys = LinearSystem::random_gaussian(3, 2, 0.4, 7);
    let spec = DynamicsSpec::linear(&sys).with_noise(IsotropicGaussian::constant(3, 1.0)?);
    let batch = simulate_rollouts(&spec, 6, 3, 1000, 42)?;
    println!("{}", batch.description());
    println!("{} rollouts, T = {}, K = {}", batch.len(), batch.horizon(), batch.window());

    let first = &batch.rollouts()[0];
    for (t, (x, u)) in first.states.iter().zip(&first.actions).enumerate() {
        println!("  step {t}: x = {:.3?}  u = {:.3?}", x.as_slice(), u.as_slice());
    }
    println!("  terminal x = {:.3?}", first.outcome().as_slice());

    let path = std::env::temp_dir().join("steerkit_example_rollouts.csv");
    write_batch(&batch, &path, None)?;
    let back = read_batch(&path)?;
    println!("round trip through {}: identical = {}", path.display(), back.rollouts() == batch.rollouts());
    Ok(())
}
