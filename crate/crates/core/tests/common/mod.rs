//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use steerkit::dynamics::{DynamicsSpec, FnInit, FnNoise, Rollout, RolloutBatch, SimRng};
use steerkit::estimators::{BinGrid, Discretization};
use steerkit::evaluation::TimeSeries;
use steerkit::ingest::{ingest_csv, Combine, GroupSpec, IngestSchema};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn avocado_schema() -> IngestSchema {
    let mut s = IngestSchema::new("Date", &["AveragePrice"], &["Total Volume"]);
    s.log_transform = true;
    s.group = Some(GroupSpec {
        column: "region".into(),
        keep: vec!["Southeast".into(), "GreatLakes".into()],
        combine: Combine::Concatenate,
    });
    s
}

pub fn avocado_series() -> TimeSeries {
    ingest_csv(&fixture_path("avocado_fixture.csv"), &avocado_schema()).unwrap().0
}

/// Logged demand buckets and logged price buckets (Low, High).
pub fn avocado_disc() -> Discretization {
    Discretization::new(
        vec![BinGrid::from_edges(&[14.539, 15.014, 15.837]).unwrap()],
        vec![BinGrid::from_edges(&[-0.479, 0.131, 0.683]).unwrap()],
    )
}

/// Mean and standard error (sample variance / n).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two-point discrete system with T = 2:
/// `x0 = 0`, `u0` uniform on {0, 0.5, 1}, `xi_1 ~ Bernoulli(0.4)`, `xi_2 ~ N(0, 1)`,
/// `f(x) = 2x`, `g(u) = effect * 1{u > 1.5}`, `h(x) = x`, `r(u) = 2u`.
///
/// `x1` is 0 or 1 and `u1 = x1 + 2 u0` spans both action bins in each state bin.
pub fn discrete_system(effect: f64) -> DynamicsSpec {
    let one = |v: f64| DVector::from_element(1, v);
    DynamicsSpec::from_maps(
        1,
        1,
        |x: &DVector<f64>| x * 2.0,
        move |u: &DVector<f64>| DVector::from_element(1, if u[0] > 1.5 { effect } else { 0.0 }),
        |x: &DVector<f64>| x.clone(),
        |u: &DVector<f64>| u * 2.0,
    )
    .with_noise(FnNoise::new("bernoulli then gaussian", move |t, rng: &mut SimRng| match t {
        1 => one(if rng.random::<f64>() < 0.4 { 1.0 } else { 0.0 }),
        _ => one(rng.sample(StandardNormal)),
    }))
    .with_init(FnInit::new("u0 uniform on {0, 0.5, 1}", move |rng: &mut SimRng| {
        (one(0.0), one(rng.random_range(0..3) as f64 * 0.5))
    }))
}

pub fn discrete_disc() -> Discretization {
    Discretization::new(
        vec![BinGrid::from_edges(&[-0.5, 0.5, 1.5]).unwrap()],
        vec![BinGrid::from_edges(&[-1.0, 1.5, 4.0]).unwrap()],
    )
}

/// `E[x_2 | do(u_1 = u)]` of [`discrete_system`]: `2 E[x_1] + g(u)`.
pub fn discrete_do_mean(effect: f64, u: f64) -> f64 {
    2.0 * 0.4 + if u > 1.5 { effect } else { 0.0 }
}

fn scalar(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

/// Rows `(z, u, x)` as `K = 1` rollouts: states `[z, x]`, action `[u]`.
pub fn triples_batch(rows: &[(f64, f64, f64)]) -> RolloutBatch {
    let rollouts = rows
        .iter()
        .map(|&(z, u, x)| Rollout::new(vec![scalar(z), scalar(x)], vec![scalar(u)]).unwrap())
        .collect();
    RolloutBatch::new(rollouts, 1, None, "triples").unwrap()
}

/// Partially linear model `u = delta z + eta`, `x = theta u + gamma z + eps`.
pub fn partially_linear(n: usize, theta: f64, gamma: f64, delta: f64, noise: f64, seed: u64) -> RolloutBatch {
    let mut rng = SimRng::seed_from_u64(seed);
    let rows: Vec<_> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let u = delta * z + rng.sample::<f64, _>(StandardNormal);
            let x = theta * u + gamma * z + noise * rng.sample::<f64, _>(StandardNormal);
            (z, u, x)
        })
        .collect();
    triples_batch(&rows)
}

/// Sample covariance with 1/(n-1), for moment comparisons.
pub fn covariance(samples: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = samples.len() as f64;
    let dim = samples[0].len();
    let mean = samples.iter().fold(DVector::zeros(dim), |a, s| a + s) / n;
    let cov = samples
        .iter()
        .fold(DMatrix::zeros(dim, dim), |a, s| a + (s - &mean) * (s - &mean).transpose())
        / (n - 1.0);
    (mean, cov)
}

/// Mean of `a_i * b_i` with its standard error; used for covariance entries.
pub fn product_moment(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ma, _) = mean_se(a);
    let (mb, _) = mean_se(b);
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    mean_se(&prods)
}

/// Two-sample energy distance statistic.
pub fn energy_distance(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let mean_dist = |x: &[DVector<f64>], y: &[DVector<f64>]| {
        let mut s = 0.0;
        for p in x {
            for q in y {
                s += (p - q).norm();
            }
        }
        s / (x.len() * y.len()) as f64
    };
    2.0 * mean_dist(a, b) - mean_dist(a, a) - mean_dist(b, b)
}

/// Permutation p-value of the energy distance between `a` and `b`.
pub fn energy_permutation_p(a: &[DVector<f64>], b: &[DVector<f64>], permutations: usize, seed: u64) -> f64 {
    use rand::seq::SliceRandom;
    let observed = energy_distance(a, b);
    let mut pooled: Vec<DVector<f64>> = a.iter().chain(b).cloned().collect();
    let mut rng = SimRng::seed_from_u64(seed);
    let mut exceed = 0;
    for _ in 0..permutations {
        pooled.shuffle(&mut rng);
        let (x, y) = pooled.split_at(a.len());
        if energy_distance(x, y) >= observed {
            exceed += 1;
        }
    }
    (exceed + 1) as f64 / (permutations + 1) as f64
}

/// Run `f` inside a rayon pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}
