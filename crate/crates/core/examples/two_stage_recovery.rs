//! Two-stage regression error against its Gaussian bound as n grows.

use steerkit::dynamics::{simulate_rollouts, DynamicsSpec, IsotropicGaussian, LinearSystem};
use steerkit::estimators::{compute_rho, gaussian_error_bound, steerability, two_stage_estimate};

fn main() -> steerkit::Result<()> {
    let sys = LinearSystem::random_gaussian(2, 2, 0.5, 2);
    let rho = compute_rho(&sys)?;
    // shocks only at the first two steps
    let spec = DynamicsSpec::linear(&sys).with_noise(IsotropicGaussian::new(2, vec![1.0, 1.0], 0.0)?);
    println!("rho = {rho:.3}");
    println!("    n  mean squared error  bound");
    for n in [20, 80, 320, 1280] {
        let trials = 200;
        let mut total = 0.0;
        for trial in 0..trials {
            let batch = simulate_rollouts(&spec, 3, 2, n, trial)?;
            total += (two_stage_estimate(&batch)?.b_hat - sys.b()).norm_squared();
        }
        let bound = gaussian_error_bound(2, n, 1.0, 1.0, rho)?;
        println!("{n:>5}  {:>18.4}  {bound:.4}", total / trials as f64);
    }

    let batch = simulate_rollouts(&spec, 3, 2, 100_000, 99)?;
    let est = two_stage_estimate(&batch)?;
    let (u, up) = (nalgebra::dvector![0.0, 0.0], nalgebra::dvector![1.0, -1.0]);
    println!("estimated steerability {:.3?}", steerability(&est.b_hat, &u, &up)?.as_slice());
    println!("true steerability      {:.3?}", (sys.b() * (up - u)).as_slice());
    Ok(())
}
