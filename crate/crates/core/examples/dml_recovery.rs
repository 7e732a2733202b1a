//! Double machine learning on a partially linear model with a confounder.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use steerkit::dynamics::{Rollout, RolloutBatch, SimRng};
use steerkit::estimators::{dml_estimate, OlsResidualizer};

fn main() -> steerkit::Result<()> {
    let theta = -0.5;
    let mut rng = SimRng::seed_from_u64(3);
    let mut naive_num = 0.0;
    let mut naive_den = 0.0;
    let rollouts = (0..10_000)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let u = z + rng.sample::<f64, _>(StandardNormal);
            let x = theta * u + z + rng.sample::<f64, _>(StandardNormal);
            naive_num += u * x;
            naive_den += u * u;
            Rollout::new(vec![DVector::from_element(1, z), DVector::from_element(1, x)], vec![DVector::from_element(1, u)])
        })
        .collect::<steerkit::Result<Vec<_>>>()?;
    let batch = RolloutBatch::new(rollouts, 1, None, "partially linear")?;

    let est = dml_estimate(&batch, &OlsResidualizer, 11)?;
    println!("true theta      {theta}");
    println!("dml estimate    {:.4}", est.theta[(0, 0)]);
    println!("naive slope     {:.4}", naive_num / naive_den);
    println!("{} rows fit the residualizer, {} the final regression", est.n_residualize, est.n_final);
    Ok(())
}
