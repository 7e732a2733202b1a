//! Eigenvalues of the joint state-action covariance over time.

use steerkit::dynamics::{covariance_path, LinearSystem};
use steerkit::identifiability::spectrum;
use steerkit::linalg::DEFAULT_RANK_TOL;

fn main() -> steerkit::Result<()> {
    let sys = LinearSystem::wishart(20, 16, 400, 7)?;
    println!("  t  zero eigenvalues  smallest    largest     full rank");
    for sigma in covariance_path(&sys, 5)? {
        let report = spectrum(&sigma, DEFAULT_RANK_TOL)?;
        let (lo, hi) = (report.eigenvalues[0], report.eigenvalues[report.eigenvalues.len() - 1]);
        println!(
            "{:>3}  {:>16}  {:>9.2e}  {:>9.2e}  {}",
            report.t, report.num_zero, lo, hi, report.full_rank
        );
    }
    Ok(())
}
