//! Rank, responsiveness and shock-spanning checks on a Wishart-style system.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use steerkit::dynamics::{DynamicsSpec, LinearSystem, SimRng};
use steerkit::identifiability::{check_fully_spanning_shock, check_responsive_action, rank_sweep};
use steerkit::linalg::DEFAULT_RANK_TOL;

fn main() -> steerkit::Result<()> {
    let sys = LinearSystem::wishart(20, 16, 400, 7)?;
    println!("action span rank (d = 20, rank C = 16)");
    for report in rank_sweep(&sys, 4)? {
        println!(
            "  M = {}: rank {} of {} -> {:?}",
            report.span, report.rank_observed, report.rank_required, report.verdict
        );
    }

    let spec = DynamicsSpec::linear(&sys);
    let mut rng = SimRng::seed_from_u64(1);
    let mut draw = |dim: usize| DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
    let probes: Vec<_> = (0..5).map(|_| (draw(20), draw(20))).collect();
    let responsive = check_responsive_action(&spec, &probes, DEFAULT_RANK_TOL)?;
    let probe = &responsive.probes[0];
    println!(
        "responsive at all {} probes: {} (Jacobian rank {} of {})",
        probes.len(),
        responsive.all_responsive,
        probe.jacobian_rank,
        probe.required_rank
    );

    let full: Vec<_> = (0..200).map(|_| draw(20)).collect();
    let flat: Vec<_> = (0..200).map(|_| draw(20).map_with_location(|i, _, v| if i < 10 { v } else { 0.0 })).collect();
    for (label, samples) in [("isotropic", &full), ("half the coordinates", &flat)] {
        let report = check_fully_spanning_shock(1, samples, DEFAULT_RANK_TOL)?;
        println!("shock on {label}: {:?} (min eigenvalue {:.2e})", report.verdict, report.min_eigenvalue);
    }
    Ok(())
}
