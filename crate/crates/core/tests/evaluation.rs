mod common;

use common::{avocado_disc, avocado_schema, avocado_series, fixture_path, with_threads};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use steerkit::dynamics::SimRng;
use steerkit::estimators::{AdjustmentMode, BinGrid, Discretization};
use steerkit::evaluation::{
    bootstrap, overlap_sweep, sliding_window, ActionQuery, AdjustmentPed, ConstantEstimator, OutcomeMean, TimeSeries,
    DEFAULT_REPLICATES,
};
use steerkit::ingest::ingest_csv;

fn low_high() -> Vec<ActionQuery> {
    vec![ActionQuery::new("Low", vec![0]), ActionQuery::new("High", vec![1])]
}

#[test]
fn fixture_stays_inside_the_buckets() {
    let series = avocado_series();
    assert_eq!(series.len(), 338);
    let disc = avocado_disc();
    assert!(series.states().iter().all(|x| disc.state_bins[0].index(x[0]).is_some()));
    assert!(series.actions().iter().all(|u| disc.action_bins[0].index(u[0]).is_some()));
}

#[test]
fn fixture_overlap_degrades_with_window() {
    let rows = overlap_sweep(&avocado_series(), &[1, 3, 5, 7, 9], &avocado_disc(), &low_high()).unwrap();
    assert_eq!(rows.len(), 10);
    for label in ["Low", "High"] {
        let per_bin: Vec<_> = rows.iter().filter(|r| r.action_bin == label).collect();
        assert!(per_bin.windows(2).all(|w| w[1].undefined_mass >= w[0].undefined_mass));
        assert_eq!(per_bin[0].undefined_strata, 0);
        assert!(per_bin[0].estimate.is_some());
        assert!(per_bin[4].undefined_strata > 0);
        assert!(per_bin[4].estimate.is_none());
    }
    // higher price, lower demand
    let low = rows[0].estimate.as_ref().unwrap()[0];
    let high = rows[1].estimate.as_ref().unwrap()[0];
    assert!(high < low);
}

#[test]
fn full_overlap_has_no_undefined_strata() {
    let mut rng = SimRng::seed_from_u64(3);
    let n = 10_000;
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    let series = TimeSeries::scalar(&u, &x).unwrap();
    let disc = Discretization::new(
        vec![BinGrid::from_edges(&[-0.1, 1.0, 2.0]).unwrap()],
        vec![BinGrid::from_edges(&[-0.1, 1.0, 2.0]).unwrap()],
    );
    let rows = overlap_sweep(&series, &[1, 2, 3], &disc, &low_high()).unwrap();
    assert!(rows.iter().all(|r| r.undefined_strata == 0 && r.estimate.is_some()));
    assert_eq!(rows.iter().map(|r| r.occupied_strata).max(), Some(8));
}

#[test]
fn bootstrap_std_tracks_standard_error_of_mean() {
    let (sigma, n) = (2.0, 400);
    let ratios: Vec<f64> = (0..20u64)
        .map(|trial| {
            let mut rng = SimRng::seed_from_u64(100 + trial);
            let x: Vec<f64> = (0..n + 1).map(|_| 5.0 + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
            let series = TimeSeries::scalar(&vec![0.0; n + 1], &x).unwrap();
            let r = bootstrap(&OutcomeMean, &ConstantEstimator(5.0), &series, 1, DEFAULT_REPLICATES, trial).unwrap();
            r.std_dev / (sigma / (n as f64).sqrt())
        })
        .collect();
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((0.7..=1.3).contains(&mean_ratio), "mean ratio {mean_ratio}, trials {ratios:?}");
}

#[test]
fn reference_bias_grows_with_window_on_fixture() {
    let series = avocado_series();
    let reference = AdjustmentPed {
        disc: avocado_disc(),
        mode: AdjustmentMode::ZeroFill,
    };
    let k1 = bootstrap(&reference, &reference, &series, 1, DEFAULT_REPLICATES, 5).unwrap();
    let k9 = bootstrap(&reference, &reference, &series, 9, DEFAULT_REPLICATES, 5).unwrap();
    assert!(k1.bias_vs_self.unwrap().abs() < k9.bias_vs_self.unwrap().abs());
    assert!(k1.bins_fixed_from_original);
}

#[test]
fn bootstrap_is_thread_count_invariant() {
    let series = avocado_series();
    let est = AdjustmentPed {
        disc: avocado_disc(),
        mode: AdjustmentMode::ZeroFill,
    };
    let one = with_threads(1, || bootstrap(&est, &est, &series, 3, 40, 9).unwrap());
    let eight = with_threads(8, || bootstrap(&est, &est, &series, 3, 40, 9).unwrap());
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&eight).unwrap());
}

#[test]
fn ingest_is_lossless_up_to_the_log() {
    let (series, audit) = ingest_csv(&fixture_path("avocado_fixture.csv"), &avocado_schema()).unwrap();
    assert_eq!(audit.rows_read, 338);
    let mut rdr = csv::Reader::from_path(fixture_path("avocado_fixture.csv")).unwrap();
    let mut raw: Vec<(String, String, f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[1].to_string(), r[0].to_string(), r[2].parse().unwrap(), r[3].parse().unwrap())
        })
        .collect();
    // Southeast first, then GreatLakes, each by date
    raw.sort_by(|a, b| (a.0 != "Southeast", &a.1).cmp(&(b.0 != "Southeast", &b.1)));
    for ((_, _, price, volume), (u, x)) in raw.iter().zip(series.actions().iter().zip(series.states())) {
        assert!((u[0].exp() - price).abs() <= 1e-12 * price);
        assert!((x[0].exp() - volume).abs() <= 1e-12 * volume);
    }
}

#[test]
fn sliding_window_on_fixture_counts() {
    let series = avocado_series();
    for k in [1, 5, 9] {
        assert_eq!(sliding_window(&series, k).unwrap().len(), series.len() - k);
    }
}
