use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{RolloutBatch, SimRng};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, matrix_serde, DEFAULT_RANK_TOL};

/// Regressor used to partial the confounders out of treatment and outcome.
///
/// Features are `n x k` with one row per sample; targets are `n x m`.
pub trait Residualizer: Send + Sync {
    fn id(&self) -> String;

    /// Fit on `(train_features, train_targets)` and predict at `test_features`.
    fn fit_predict(
        &self,
        train_features: &DMatrix<f64>,
        train_targets: &DMatrix<f64>,
        test_features: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>>;
}

/// Ordinary least squares with an intercept.
#[derive(Debug, Clone, Copy, Default)]
pub struct OlsResidualizer;

fn with_intercept(features: &DMatrix<f64>) -> DMatrix<f64> {
    features.clone().insert_column(0, 1.0)
}

impl Residualizer for OlsResidualizer {
    fn id(&self) -> String {
        "ols".into()
    }

    fn fit_predict(
        &self,
        train_features: &DMatrix<f64>,
        train_targets: &DMatrix<f64>,
        test_features: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        let fit = lstsq(&with_intercept(train_features), train_targets, DEFAULT_RANK_TOL)?;
        Ok(with_intercept(test_features) * fit.coef)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmlEstimate {
    /// `d x p` effect of the treatment on the outcome.
    #[serde(with = "matrix_serde")]
    pub theta: DMatrix<f64>,
    pub split_seed: u64,
    pub residualizer_id: String,
    /// Samples used to fit the residualizer.
    pub n_residualize: usize,
    /// Samples used in the final regression.
    pub n_final: usize,
}

/// Shuffle `0..n` with `seed` and cut at `n / 2`.
pub fn half_split(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut SimRng::seed_from_u64(seed));
    let rest = idx.split_off(n / 2);
    (idx, rest)
}

fn rows(batch: &RolloutBatch, idx: &[usize], pick: impl Fn(&crate::dynamics::Rollout) -> Vec<f64>) -> DMatrix<f64> {
    let data: Vec<Vec<f64>> = idx.iter().map(|&i| pick(&batch.rollouts()[i])).collect();
    let cols = data.first().map_or(0, Vec::len);
    DMatrix::from_row_iterator(idx.len(), cols, data.into_iter().flatten())
}

/// Split-sample double machine learning.
///
/// The confounder is the concatenated lagged states, the treatment is
/// `u_{T-1}` and the outcome `x_T`. The residualizer is fit on one half; the
/// other half's residuals enter a no-intercept regression of outcome on
/// treatment.
pub fn dml_estimate(batch: &RolloutBatch, residualizer: &dyn Residualizer, split_seed: u64) -> Result<DmlEstimate> {
    let n = batch.len();
    if n < 4 {
        return Err(Error::InsufficientSamples { needed: 3, got: n });
    }
    let (fit_idx, final_idx) = half_split(n, split_seed);
    let z = |r: &crate::dynamics::Rollout| r.confounders().iter().copied().collect::<Vec<_>>();
    let u = |r: &crate::dynamics::Rollout| r.treatment().iter().copied().collect::<Vec<_>>();
    let x = |r: &crate::dynamics::Rollout| r.outcome().iter().copied().collect::<Vec<_>>();

    let z_fit = rows(batch, &fit_idx, z);
    let z_final = rows(batch, &final_idx, z);
    let u_final = rows(batch, &final_idx, u);
    let x_final = rows(batch, &final_idx, x);
    let u_res = &u_final - residualizer.fit_predict(&z_fit, &rows(batch, &fit_idx, u), &z_final)?;
    let x_res = &x_final - residualizer.fit_predict(&z_fit, &rows(batch, &fit_idx, x), &z_final)?;

    let scale = u_final.norm().max(f64::MIN_POSITIVE);
    if u_res.norm() <= 1e-10 * scale {
        return Err(Error::DegenerateTreatment);
    }
    let fit = lstsq(&u_res, &x_res, DEFAULT_RANK_TOL).map_err(|e| match e {
        Error::DegenerateDesign(_) => Error::DegenerateTreatment,
        other => other,
    })?;
    let theta = fit.coef.transpose();
    if !theta.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("DML effect has non-finite entries".into()));
    }
    Ok(DmlEstimate {
        theta,
        split_seed,
        residualizer_id: residualizer.id(),
        n_residualize: fit_idx.len(),
        n_final: final_idx.len(),
    })
}
