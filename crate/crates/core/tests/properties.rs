mod common;

use common::triples_batch;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use steerkit::dynamics::io::{read_batch, write_batch};
use steerkit::dynamics::{covariance_recursion, simulate_rollouts, DynamicsSpec, IsotropicGaussian, LinearSystem};
use steerkit::estimators::{adjustment_estimate_cell, steerability, AdjustmentMode, BinGrid, Discretization};
use steerkit::evaluation::{bootstrap_batch, sliding_window, OutcomeMean, TimeSeries};
use steerkit::identifiability::{rank_sweep, spectrum, Verdict};

fn small_disc() -> Discretization {
    Discretization::new(
        vec![BinGrid::from_edges(&[-0.5, 0.5, 1.5]).unwrap()],
        vec![BinGrid::from_edges(&[-0.5, 0.5, 1.5, 2.5]).unwrap()],
    )
}

fn triple() -> impl Strategy<Value = (f64, f64, f64)> {
    (0..2u8, 0..3u8, -5.0..5.0f64).prop_map(|(z, u, x)| (z as f64, u as f64, x))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn steerability_is_linear_in_the_action_change(
        entries in prop::collection::vec(-3.0..3.0f64, 6),
        u in prop::collection::vec(-3.0..3.0f64, 3),
        v in prop::collection::vec(-3.0..3.0f64, 3),
        w in prop::collection::vec(-3.0..3.0f64, 3),
    ) {
        let b = DMatrix::from_row_slice(2, 3, &entries);
        let (u, v, w) = (DVector::from_vec(u), DVector::from_vec(v), DVector::from_vec(w));
        let direct = steerability(&b, &u, &w).unwrap();
        let chained = steerability(&b, &u, &v).unwrap() + steerability(&b, &v, &w).unwrap();
        prop_assert!((&direct - &chained).norm() <= 1e-12 * (1.0 + direct.norm()));
        prop_assert!((direct - &b * (w - u)).norm() <= 1e-12);
    }

    #[test]
    fn adjustment_is_exactly_permutation_invariant(
        rows in prop::collection::vec(triple(), 1..60),
        cell in 0..3usize,
        zero_fill in any::<bool>(),
        order in any::<u64>(),
    ) {
        let mode = if zero_fill { AdjustmentMode::ZeroFill } else { AdjustmentMode::Strict };
        let mut rows = rows;
        rows.push((0.0, cell as f64, 1.0));
        let mut shuffled = rows.clone();
        // deterministic shuffle driven by `order`
        let mut state = order | 1;
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let a = adjustment_estimate_cell(&triples_batch(&rows), &small_disc(), &[cell], mode).unwrap();
        let b = adjustment_estimate_cell(&triples_batch(&shuffled), &small_disc(), &[cell], mode).unwrap();
        let bits = |e: &Option<Vec<f64>>| e.as_ref().map(|v| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(bits(&a.x_hat), bits(&b.x_hat));
        prop_assert_eq!(a.undefined_strata, b.undefined_strata);
        prop_assert_eq!(a.undefined_mass.to_bits(), b.undefined_mass.to_bits());
    }

    #[test]
    fn undefined_shares_are_fractions(rows in prop::collection::vec(triple(), 1..60), cell in 0..3usize) {
        let treated = rows.iter().any(|r| r.1 == cell as f64);
        let result = adjustment_estimate_cell(&triples_batch(&rows), &small_disc(), &[cell], AdjustmentMode::Strict);
        prop_assert_eq!(result.is_ok(), treated);
        let Ok(e) = result else { return Ok(()) };
        prop_assert!((0.0..=1.0).contains(&e.undefined_fraction));
        prop_assert!((0.0..=1.0).contains(&e.undefined_mass));
        prop_assert!(e.undefined_strata <= e.occupied_strata);
        prop_assert_eq!(e.x_hat.is_some(), e.undefined_strata == 0);
    }

    #[test]
    fn action_span_rank_never_drops(d in 1..5usize, p in 1..5usize, seed in any::<u64>()) {
        let sys = LinearSystem::random_gaussian(d, p, 0.5, seed);
        let sweep = rank_sweep(&sys, 4).unwrap();
        prop_assert!(sweep.windows(2).all(|w| w[1].rank_observed >= w[0].rank_observed));
        for r in &sweep {
            prop_assert!(r.rank_observed <= r.rank_required);
            prop_assert_eq!(r.verdict == Verdict::Identifiable, r.rank_observed == r.rank_required);
        }
    }

    #[test]
    fn spectrum_flags_agree(d in 1..4usize, p in 1..4usize, seed in any::<u64>(), t in 1..5usize) {
        let sys = LinearSystem::random_gaussian(d, p, 0.4, seed);
        let report = spectrum(&covariance_recursion(&sys, t).unwrap(), 1e-10).unwrap();
        prop_assert_eq!(report.eigenvalues.len(), d + p);
        prop_assert_eq!(report.full_rank, report.num_zero == 0);
        prop_assert!(report.eigenvalues.windows(2).all(|w| w[0] <= w[1]) || report.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn bin_index_matches_containment(
        mut edges in prop::collection::btree_set(-1000i32..1000, 2..8).prop_map(|s| s.into_iter().map(|e| e as f64 / 10.0).collect::<Vec<_>>()),
        probe in -120.0..120.0f64,
    ) {
        edges.dedup();
        let grid = BinGrid::from_edges(&edges).unwrap();
        prop_assert_eq!(grid.len(), edges.len() - 1);
        let inside = probe > edges[0] && probe <= *edges.last().unwrap();
        match grid.index(probe) {
            Some(i) => {
                prop_assert!(inside);
                prop_assert!(grid.bins()[i].contains(probe));
            }
            None => prop_assert!(!inside),
        }
        let mut reversed = edges.clone();
        reversed.reverse();
        prop_assert!(BinGrid::from_edges(&reversed).is_err());
    }

    #[test]
    fn sliding_window_count(len in 2..40usize, k in 1..10usize) {
        let u: Vec<f64> = (0..len).map(|i| i as f64).collect();
        let series = TimeSeries::scalar(&u, &u).unwrap();
        match sliding_window(&series, k) {
            Ok(batch) => {
                prop_assert_eq!(batch.len(), len - k);
                prop_assert_eq!(batch.rollouts()[0].outcome()[0], k as f64);
            }
            Err(_) => prop_assert!(len <= k),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rollout_csv_round_trips(d in 1..4usize, p in 1..3usize, seed in any::<u64>(), n in 1..20usize) {
        let sys = LinearSystem::random_gaussian(d, p, 0.4, seed);
        let spec = DynamicsSpec::linear(&sys).with_noise(IsotropicGaussian::new(d, vec![], 1.0).unwrap());
        let batch = simulate_rollouts(&spec, 3, 2, n, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rollouts.csv");
        write_batch(&batch, &path, None).unwrap();
        let back = read_batch(&path).unwrap();
        prop_assert_eq!(back.len(), n);
        prop_assert_eq!(back.window(), 2);
        for (a, b) in batch.rollouts().iter().zip(back.rollouts()) {
            prop_assert_eq!(&a.states, &b.states);
            prop_assert_eq!(&a.actions, &b.actions);
        }
    }

    #[test]
    fn bootstrap_interval_is_ordered(xs in prop::collection::vec(-10.0..10.0f64, 3..40), seed in any::<u64>()) {
        let rows: Vec<_> = xs.iter().map(|&x| (0.0, 0.0, x)).collect();
        let r = bootstrap_batch(&OutcomeMean, &OutcomeMean, &triples_batch(&rows), 30, seed).unwrap();
        prop_assert!(r.ci_low <= r.ci_high);
        prop_assert!(r.std_dev >= 0.0);
        prop_assert_eq!(r.failures, 0);
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(r.ci_low >= lo - 1e-9 && r.ci_high <= hi + 1e-9);
    }
}
