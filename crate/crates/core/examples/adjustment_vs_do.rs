//! Adjustment over discretized lagged states against interventional simulation.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use steerkit::dynamics::{simulate_do, simulate_rollouts, DynamicsSpec, FnInit, FnNoise, SimRng};
use steerkit::estimators::{adjustment_estimate, AdjustmentMode, BinGrid, Discretization};

fn one(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

fn main() -> steerkit::Result<()> {
    // x1 in {0, 1} drives both u1 and x2, so the naive contrast is confounded
    let spec = DynamicsSpec::from_maps(
        1,
        1,
        |x: &DVector<f64>| x * 2.0,
        |u: &DVector<f64>| one(if u[0] > 1.5 { 1.0 } else { 0.0 }),
        |x: &DVector<f64>| x.clone(),
        |u: &DVector<f64>| u * 2.0,
    )
    .with_noise(FnNoise::new("bernoulli then gaussian", |t, rng: &mut SimRng| match t {
        1 => one(if rng.random::<f64>() < 0.4 { 1.0 } else { 0.0 }),
        _ => one(rng.sample(StandardNormal)),
    }))
    .with_init(FnInit::new("u0 on {0, 0.5, 1}", |rng: &mut SimRng| (one(0.0), one(rng.random_range(0..3) as f64 * 0.5))));
    let disc = Discretization::new(
        vec![BinGrid::from_edges(&[-0.5, 0.5, 1.5])?],
        vec![BinGrid::from_edges(&[-1.0, 1.5, 4.0])?],
    );

    let n = 100_000;
    let batch = simulate_rollouts(&spec, 2, 1, n, 17)?;
    for (label, u) in [("low", 0.0), ("high", 3.0)] {
        let est = adjustment_estimate(&batch, &disc, &one(u), AdjustmentMode::Strict)?;
        let draws = simulate_do(&spec, 2, &one(u), n, 18)?;
        let mc = draws.iter().map(|v| v[0]).sum::<f64>() / n as f64;
        let naive: Vec<f64> = batch
            .rollouts()
            .iter()
            .filter(|r| (r.actions[0][0] > 1.5) == (u > 1.5))
            .map(|r| r.outcome()[0])
            .collect();
        println!(
            "{label:>4}: adjustment {:.4}  do-simulation {mc:.4}  naive {:.4}",
            est.x_hat.map_or(f64::NAN, |v| v[0]),
            naive.iter().sum::<f64>() / naive.len() as f64
        );
    }
    Ok(())
}
