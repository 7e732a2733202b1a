//! Two systems with different action effects that produce the same observations.

use nalgebra::DVector;
use steerkit::dynamics::{simulate_rollouts, DynamicsSpec, LinearSystem};
use steerkit::identifiability::construct_twin;

fn moments(spec: &DynamicsSpec, seed: u64) -> steerkit::Result<([f64; 3], [f64; 3])> {
    let batch = simulate_rollouts(spec, 2, 1, 100_000, seed)?;
    let n = batch.len() as f64;
    let rows: Vec<[f64; 3]> = batch
        .rollouts()
        .iter()
        .map(|r| [r.states[0][0], r.actions[0][0], r.states[1][0]])
        .collect();
    let mean = [0, 1, 2].map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n);
    let var = [0, 1, 2].map(|i| rows.iter().map(|r| (r[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0));
    Ok((mean, var))
}

fn main() -> steerkit::Result<()> {
    let spec = DynamicsSpec::linear(&LinearSystem::scalar(0.5, 1.0, 1.0, 0.2)?);
    let twin = construct_twin(&spec, |b: &DVector<f64>| b * 0.7);

    let (m1, v1) = moments(&spec, 1)?;
    let (m2, v2) = moments(&twin, 2)?;
    println!("            mean (x1, u1, x2)            variance (x1, u1, x2)");
    println!("original    {m1:>8.4?}  {v1:>8.4?}");
    println!("twin        {m2:>8.4?}  {v2:>8.4?}");

    let (u, up) = (DVector::from_element(1, 0.0), DVector::from_element(1, 1.0));
    let steer = |s: &DynamicsSpec| -> steerkit::Result<f64> { Ok((s.apply_g(&up)? - s.apply_g(&u)?)[0]) };
    println!("steerability of u = 0 -> 1: original {:.3}, twin {:.3}", steer(&spec)?, steer(&twin)?);
    Ok(())
}
