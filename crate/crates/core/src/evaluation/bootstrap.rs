use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::series::{sliding_window, TimeSeries};
use crate::dynamics::{stream_rng, RolloutBatch};
use crate::error::{Error, Result};
use crate::estimators::{
    dml_estimate, ped_from_adjustment, two_stage_estimate, AdjustmentMode, Discretization, OlsResidualizer,
    Residualizer,
};

pub const DEFAULT_REPLICATES: usize = 40;

/// A scalar functional of a rollout batch.
pub trait ScalarEstimator: Send + Sync {
    fn id(&self) -> String;
    fn estimate(&self, batch: &RolloutBatch) -> Result<f64>;
}

/// Always returns the same value.
#[derive(Debug, Clone, Copy)]
pub struct ConstantEstimator(pub f64);

impl ScalarEstimator for ConstantEstimator {
    fn id(&self) -> String {
        format!("constant({})", self.0)
    }
    fn estimate(&self, _: &RolloutBatch) -> Result<f64> {
        Ok(self.0)
    }
}

/// Mean of the first outcome coordinate.
#[derive(Debug, Clone, Copy, Default)]
pub struct OutcomeMean;

impl ScalarEstimator for OutcomeMean {
    fn id(&self) -> String {
        "outcome-mean".into()
    }
    fn estimate(&self, batch: &RolloutBatch) -> Result<f64> {
        Ok(shifted_mean(&batch.rollouts().iter().map(|r| r.outcome()[0]).collect::<Vec<_>>()))
    }
}

/// Slope of adjustment-predicted outcome on treatment.
#[derive(Debug, Clone)]
pub struct AdjustmentPed {
    pub disc: Discretization,
    pub mode: AdjustmentMode,
}

impl ScalarEstimator for AdjustmentPed {
    fn id(&self) -> String {
        match self.mode {
            AdjustmentMode::Strict => "adjustment".into(),
            AdjustmentMode::ZeroFill => "adjustment-zero-fill".into(),
        }
    }
    fn estimate(&self, batch: &RolloutBatch) -> Result<f64> {
        Ok(ped_from_adjustment(batch, &self.disc, self.mode)?.slope)
    }
}

/// First entry of the DML effect.
#[derive(Clone)]
pub struct DmlPed {
    pub residualizer: Arc<dyn Residualizer>,
    pub split_seed: u64,
}

impl DmlPed {
    pub fn ols(split_seed: u64) -> Self {
        DmlPed {
            residualizer: Arc::new(OlsResidualizer),
            split_seed,
        }
    }
}

impl ScalarEstimator for DmlPed {
    fn id(&self) -> String {
        format!("dml-{}", self.residualizer.id())
    }
    fn estimate(&self, batch: &RolloutBatch) -> Result<f64> {
        Ok(dml_estimate(batch, self.residualizer.as_ref(), self.split_seed)?.theta[(0, 0)])
    }
}

/// First entry of the two-stage `B_hat`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoStageEntry;

impl ScalarEstimator for TwoStageEntry {
    fn id(&self) -> String {
        "two-stage".into()
    }
    fn estimate(&self, batch: &RolloutBatch) -> Result<f64> {
        Ok(two_stage_estimate(batch)?.b_hat[(0, 0)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub estimator_id: String,
    pub reference_id: String,
    #[serde(rename = "K")]
    pub k: usize,
    /// Estimator on the original windows; `None` when it fails there.
    pub point_estimate: Option<f64>,
    /// Reference estimator on the original windows.
    pub reference_estimate: f64,
    /// Mean replicate value minus the reference estimate.
    pub bias_vs_reference: f64,
    /// Mean replicate value minus the point estimate.
    pub bias_vs_self: Option<f64>,
    pub mean: f64,
    pub std_dev: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
    pub failures: usize,
    /// More than half of the replicates failed.
    pub unreliable: bool,
    pub seed: u64,
    /// Bins are fixed from the original data, not refit per replicate.
    pub bins_fixed_from_original: bool,
    /// Per-replicate values in replicate order; `None` marks a failure.
    pub values: Vec<Option<f64>>,
}

/// Mean computed as `v_0 + mean(v_i - v_0)`, exact for constant input.
fn shifted_mean(values: &[f64]) -> f64 {
    let Some(&first) = values.first() else {
        return f64::NAN;
    };
    first + values.iter().map(|v| v - first).sum::<f64>() / values.len() as f64
}

fn sample_std_dev(values: &[f64], mean: f64) -> f64 {
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Resample windows of `batch` with replacement and summarize the spread of
/// `estimator`. Replicate `b` draws its indices from the counter stream
/// `(seed, b)`, so results do not depend on thread count.
pub fn bootstrap_batch(
    estimator: &dyn ScalarEstimator,
    reference: &dyn ScalarEstimator,
    batch: &RolloutBatch,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapReport> {
    if replicates < 2 {
        return Err(Error::Argument(format!("need at least 2 replicates, got {replicates}")));
    }
    let n = batch.len();
    let reference_estimate = reference.estimate(batch)?;
    let point_estimate = estimator.estimate(batch).ok();

    let values: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64, 0);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let resampled = batch.select(&idx).ok()?;
            estimator.estimate(&resampled).ok().filter(|v| v.is_finite())
        })
        .collect();

    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let failures = replicates - ok.len();
    if ok.len() < 2 {
        return Err(Error::BootstrapFailed { failures });
    }
    let mean = shifted_mean(&ok);
    let mut sorted = ok.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BootstrapReport {
        estimator_id: estimator.id(),
        reference_id: reference.id(),
        k: batch.window(),
        point_estimate,
        reference_estimate,
        bias_vs_reference: mean - reference_estimate,
        bias_vs_self: point_estimate.map(|p| mean - p),
        mean,
        std_dev: sample_std_dev(&ok, mean),
        ci_low: percentile(&sorted, 0.025),
        ci_high: percentile(&sorted, 0.975),
        replicates,
        failures,
        unreliable: 2 * failures > replicates,
        seed,
        bins_fixed_from_original: true,
        values,
    })
}

/// [`bootstrap_batch`] over the `K`-windows of a series.
pub fn bootstrap(
    estimator: &dyn ScalarEstimator,
    reference: &dyn ScalarEstimator,
    series: &TimeSeries,
    k: usize,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapReport> {
    bootstrap_batch(estimator, reference, &sliding_window(series, k)?, replicates, seed)
}

pub const BOOTSTRAP_HEADER: [&str; 4] = ["estimator", "K", "replicate", "value"];

/// Tidy long-format CSV of replicate values; failed replicates are `NA`.
pub fn write_bootstrap_csv<W: Write>(reports: &[BootstrapReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BOOTSTRAP_HEADER)?;
    for r in reports {
        for (b, v) in r.values.iter().enumerate() {
            let value = v.map_or_else(|| "NA".to_string(), |v| v.to_string());
            w.write_record([r.estimator_id.as_str(), &r.k.to_string(), &b.to_string(), &value])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
