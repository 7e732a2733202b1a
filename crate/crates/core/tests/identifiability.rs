mod common;

use common::{covariance, energy_permutation_p, mean_se, product_moment};
use nalgebra::{DMatrix, DVector};
use steerkit::dynamics::{covariance_path, simulate_rollouts, DynamicsSpec, LinearSystem};
use steerkit::estimators::two_stage_estimate;
use steerkit::identifiability::{check_full_row_rank_action, construct_twin, rank_sweep, spectrum, Verdict};
use steerkit::linalg::DEFAULT_RANK_TOL;

fn scalar_system() -> LinearSystem {
    LinearSystem::scalar(0.5, 1.0, 1.0, 0.2).unwrap()
}

fn triples(spec: &DynamicsSpec, n: usize, seed: u64) -> Vec<DVector<f64>> {
    simulate_rollouts(spec, 2, 1, n, seed)
        .unwrap()
        .rollouts()
        .iter()
        .map(|r| DVector::from_vec(vec![r.states[0][0], r.actions[0][0], r.states[1][0]]))
        .collect()
}

#[test]
fn zero_perturbation_twin_is_the_original() {
    let spec = DynamicsSpec::linear(&scalar_system());
    let twin = construct_twin(&spec, |b: &DVector<f64>| DVector::zeros(b.len()));
    for v in [-2.0, -0.3, 0.0, 1.7] {
        let x = DVector::from_element(1, v);
        assert_eq!(spec.apply_f(&x).unwrap(), twin.apply_f(&x).unwrap());
        assert_eq!(spec.apply_g(&x).unwrap(), twin.apply_g(&x).unwrap());
        assert_eq!(spec.apply_h(&x).unwrap(), twin.apply_h(&x).unwrap());
        assert_eq!(spec.apply_r(&x).unwrap(), twin.apply_r(&x).unwrap());
    }
}

#[test]
fn linear_twin_matches_map_construction() {
    let sys = LinearSystem::random_gaussian(2, 2, 0.5, 3);
    let w = DMatrix::from_row_slice(2, 2, &[0.7, -0.1, 0.2, 0.4]);
    let by_maps = construct_twin(&DynamicsSpec::linear(&sys), {
        let w = w.clone();
        move |b: &DVector<f64>| &w * b
    });
    let linear = DynamicsSpec::linear(&sys.twin(&w).unwrap());
    for seed in 0..5u64 {
        let v = DVector::from_fn(2, |i, _| (seed as f64 + 1.0) * (i as f64 - 0.4));
        assert!((by_maps.apply_f(&v).unwrap() - linear.apply_f(&v).unwrap()).norm() < 1e-12);
        assert!((by_maps.apply_g(&v).unwrap() - linear.apply_g(&v).unwrap()).norm() < 1e-12);
    }
    assert!((sys.b() - sys.twin(&w).unwrap().b() - &w).norm() < 1e-15);
}

#[test]
fn twin_triples_have_matching_moments() {
    let spec = DynamicsSpec::linear(&scalar_system());
    let twin = construct_twin(&spec, |b: &DVector<f64>| b * 0.7);
    let n = 100_000;
    let a = triples(&spec, n, 1);
    let b = triples(&twin, n, 2);
    for i in 0..3 {
        let ai: Vec<f64> = a.iter().map(|v| v[i]).collect();
        let bi: Vec<f64> = b.iter().map(|v| v[i]).collect();
        let (ma, sa) = mean_se(&ai);
        let (mb, sb) = mean_se(&bi);
        assert!((ma - mb).abs() <= 4.0 * (sa * sa + sb * sb).sqrt(), "mean {i}");
        for j in i..3 {
            let aj: Vec<f64> = a.iter().map(|v| v[j]).collect();
            let bj: Vec<f64> = b.iter().map(|v| v[j]).collect();
            let (ca, sa) = product_moment(&ai, &aj);
            let (cb, sb) = product_moment(&bi, &bj);
            assert!((ca - cb).abs() <= 4.0 * (sa * sa + sb * sb).sqrt(), "cov ({i},{j})");
        }
    }
    let (_, cov) = covariance(&a);
    assert!(cov[(0, 0)] > 0.5);
}

#[test]
fn twin_energy_distance_is_indistinguishable() {
    let spec = DynamicsSpec::linear(&scalar_system());
    let twin = construct_twin(&spec, |b: &DVector<f64>| b * 0.7);
    let m = 400;
    let a = triples(&spec, m, 11);
    let b = triples(&twin, m, 12);
    let p = energy_permutation_p(&a, &b, 199, 5);
    assert!(p > 0.01, "twin rejected with p = {p}");

    // control: a visibly different system is rejected
    let other = DynamicsSpec::linear(&LinearSystem::scalar(2.0, 1.0, 1.0, 0.2).unwrap());
    let c = triples(&other, m, 13);
    let p = energy_permutation_p(&a, &c, 199, 5);
    assert!(p <= 0.01, "different system accepted with p = {p}");
}

#[test]
fn twin_breaks_two_stage_estimation() {
    // K = 2 design: the estimator recovers the generating system's B, so on twin data it finds B - W
    let sys = LinearSystem::scalar(0.5, 1.0, 1.0, 0.8).unwrap();
    let w = DMatrix::from_element(1, 1, 0.7);
    let twin_sys = sys.twin(&w).unwrap();
    let spec = DynamicsSpec::linear(&twin_sys);
    let batch = simulate_rollouts(&spec, 3, 2, 20_000, 4).unwrap();
    let est = two_stage_estimate(&batch).unwrap();
    assert!((est.b_hat[(0, 0)] - 0.3).abs() < 0.05, "B_hat = {}", est.b_hat[(0, 0)]);
}

#[test]
fn desk_scale_rank_and_spectrum() {
    let sys = LinearSystem::wishart(20, 16, 400, 7).unwrap();
    let m2 = check_full_row_rank_action(&sys, 2, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(m2.rank_observed, 16);
    assert_eq!(m2.verdict, Verdict::NotIdentifiable);
    let m3 = check_full_row_rank_action(&sys, 3, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(m3.rank_observed, 20);
    assert_eq!(m3.verdict, Verdict::Identifiable);

    let path = covariance_path(&sys, 6).unwrap();
    let reports: Vec<_> = path.iter().map(|s| spectrum(s, DEFAULT_RANK_TOL).unwrap()).collect();
    assert!(reports[1].num_zero >= 1);
    assert!(reports[2].full_rank);
    // past t = 5 the growth of the largest eigenvalue pushes the smallest under the relative floor
    let first_full = reports.iter().position(|r| r.full_rank).unwrap();
    assert!(reports[first_full..5].iter().all(|r| r.full_rank));
    // Sigma_{t+1} - Sigma_t is PSD, so the smallest eigenvalue never decreases
    for w in reports.windows(2) {
        let scale = w[1].eigenvalues.last().unwrap();
        assert!(w[1].eigenvalues[0] >= w[0].eigenvalues[0] - 1e-12 * scale);
    }
}

#[test]
fn rank_is_monotone_in_span() {
    for seed in 0..5 {
        let sys = LinearSystem::wishart(8, 3 + seed as usize % 4, 40, seed).unwrap();
        let sweep = rank_sweep(&sys, 6).unwrap();
        assert!(sweep.windows(2).all(|w| w[1].rank_observed >= w[0].rank_observed));
    }
}

#[test]
#[ignore = "slow: full-size rank and spectrum replication"]
fn full_scale_rank_and_spectrum() {
    let sys = LinearSystem::wishart(100, 80, 2000, 1).unwrap();
    assert_eq!(check_full_row_rank_action(&sys, 2, DEFAULT_RANK_TOL).unwrap().rank_observed, 80);
    assert_eq!(check_full_row_rank_action(&sys, 3, DEFAULT_RANK_TOL).unwrap().rank_observed, 100);
    let path = covariance_path(&sys, 3).unwrap();
    assert!(spectrum(&path[1], DEFAULT_RANK_TOL).unwrap().num_zero > 0);
    assert!(spectrum(&path[2], DEFAULT_RANK_TOL).unwrap().full_rank);
}
