use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{LinearSystem, RolloutBatch};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, matrix_serde, singular_values, DEFAULT_RANK_TOL};

/// Output of the two-stage regression on `(x_1, u_1, x_2, u_2, x_3)` windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageEstimate {
    #[serde(rename = "B_hat", with = "matrix_serde")]
    pub b_hat: DMatrix<f64>,
    #[serde(rename = "C_hat", with = "matrix_serde")]
    pub c_hat: DMatrix<f64>,
    #[serde(rename = "H_hat", with = "matrix_serde")]
    pub h_hat: DMatrix<f64>,
    pub n: usize,
    /// Smallest singular value of `X_1 X_1^T`.
    pub gram_min_sv: f64,
    /// Smallest singular value of `(U_2 - C_hat X_2)(U_2 - C_hat X_2)^T`.
    pub design_min_sv: f64,
}

/// Regress `targets` (m x n) on `regressors` (k x n) without intercept; returns m x k.
fn regress(regressors: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let fit = lstsq(&regressors.transpose(), &targets.transpose(), DEFAULT_RANK_TOL)?;
    Ok((fit.coef.transpose(), fit.min_sv))
}

/// Two-stage regression estimate of `B`:
///
/// ```text
/// C_hat = argmin ||U_1 - C X_1||,  H_hat = argmin ||X_2 - H X_1||,
/// B_hat = argmin ||X_3 - H_hat X_2 - B (U_2 - C_hat X_2)||.
/// ```
///
/// Needs a batch with `K = 2`. A singular `X_1 X_1^T` yields
/// [`Error::GramSingular`]; a singular second-stage design yields
/// [`Error::DegenerateDesign`].
pub fn two_stage_estimate(batch: &RolloutBatch) -> Result<TwoStageEstimate> {
    if batch.window() != 2 {
        return Err(Error::Argument(format!(
            "two-stage regression needs K = 2 rollouts, got K = {}",
            batch.window()
        )));
    }
    let x1 = batch.state_matrix(0);
    let x2 = batch.state_matrix(1);
    let x3 = batch.state_matrix(2);
    let u1 = batch.action_matrix(0);
    let u2 = batch.action_matrix(1);
    let n = batch.len();
    let d = batch.state_dim();

    let x1_sv = singular_values(&x1);
    let gram_min_sv = if n < d { 0.0 } else { x1_sv.last().copied().unwrap_or(0.0).powi(2) };
    let gram_max_sv = x1_sv.first().copied().unwrap_or(0.0).powi(2);
    if n < d || !(gram_max_sv > 0.0) || gram_min_sv <= DEFAULT_RANK_TOL * gram_max_sv {
        return Err(Error::GramSingular { min_sv: gram_min_sv });
    }

    let (c_hat, _) = regress(&x1, &u1)?;
    let (h_hat, _) = regress(&x1, &x2)?;
    let design = &u2 - &c_hat * &x2;
    let response = &x3 - &h_hat * &x2;
    let (b_hat, design_sv) = regress(&design, &response).map_err(|e| match e {
        Error::DegenerateDesign(msg) => Error::DegenerateDesign(format!(
            "second-stage regressor U_2 - C_hat X_2 is rank deficient ({msg})"
        )),
        other => other,
    })?;

    if !(b_hat.iter().chain(c_hat.iter()).chain(h_hat.iter()).all(|v| v.is_finite())) {
        return Err(Error::Numeric("two-stage estimate has non-finite entries".into()));
    }
    Ok(TwoStageEstimate {
        b_hat,
        c_hat,
        h_hat,
        n,
        gram_min_sv,
        design_min_sv: design_sv * design_sv,
    })
}

/// Smallest `rho` with `||A + BC||_op <= rho * sigma_min(DC)`.
pub fn compute_rho(sys: &LinearSystem) -> Result<f64> {
    let dc = sys.d() * sys.c();
    let sv = singular_values(&dc);
    let max = sv.first().copied().unwrap_or(0.0);
    let min = sv.last().copied().unwrap_or(0.0);
    if !(max > 0.0) || min <= DEFAULT_RANK_TOL * max {
        return Err(Error::UnboundedRho { min_sv: min });
    }
    let numerator = singular_values(&sys.closed_loop()).first().copied().unwrap_or(0.0);
    Ok(numerator / min)
}

/// Expected squared Frobenius error bound under Gaussian shocks,
/// `d^2 sigma2^2 rho^2 / ((n - d - 1) sigma1^2)`. Requires `n > d + 1`.
pub fn gaussian_error_bound(d: usize, n: usize, sigma1: f64, sigma2: f64, rho: f64) -> Result<f64> {
    if n <= d + 1 {
        return Err(Error::Argument(format!("bound needs n > d + 1, got n = {n}, d = {d}")));
    }
    if !(sigma1 > 0.0) || sigma2 < 0.0 || rho < 0.0 {
        return Err(Error::Argument("need sigma1 > 0, sigma2 >= 0, rho >= 0".into()));
    }
    let d = d as f64;
    Ok(d * d * sigma2 * sigma2 * rho * rho / ((n as f64 - d - 1.0) * sigma1 * sigma1))
}

/// `B_hat (u' - u)`.
pub fn steerability(b_hat: &DMatrix<f64>, u: &DVector<f64>, u_prime: &DVector<f64>) -> Result<DVector<f64>> {
    if u.len() != b_hat.ncols() || u_prime.len() != b_hat.ncols() {
        return Err(Error::Spec(format!(
            "actions must have length {}, got {} and {}",
            b_hat.ncols(),
            u.len(),
            u_prime.len()
        )));
    }
    Ok(b_hat * (u_prime - u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Rollout;

    fn scalar_rollout(v: [f64; 5]) -> Rollout {
        let s = |x: f64| DVector::from_element(1, x);
        Rollout::new(vec![s(v[0]), s(v[2]), s(v[4])], vec![s(v[1]), s(v[3])]).unwrap()
    }

    #[test]
    fn hand_least_squares_two_samples() {
        let batch = RolloutBatch::new(
            vec![
                scalar_rollout([1.0, 1.0, 1.5, 1.7, 2.45]),
                scalar_rollout([2.0, 2.0, 3.0, 3.4, 4.9]),
            ],
            3,
            None,
            "hand",
        )
        .unwrap();
        let est = two_stage_estimate(&batch).unwrap();
        assert!((est.c_hat[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((est.h_hat[(0, 0)] - 1.5).abs() < 1e-12);
        assert!((est.b_hat[(0, 0)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn wrong_window_rejected() {
        let r = Rollout::new(vec![DVector::zeros(1); 2], vec![DVector::zeros(1)]).unwrap();
        let batch = RolloutBatch::new(vec![r], 1, None, "").unwrap();
        assert!(matches!(two_stage_estimate(&batch), Err(Error::Argument(_))));
    }

    #[test]
    fn singular_gram_is_event_failure() {
        let batch = RolloutBatch::new(
            vec![scalar_rollout([0.0, 1.0, 1.5, 1.7, 2.45]); 3],
            3,
            None,
            "",
        )
        .unwrap();
        assert!(matches!(two_stage_estimate(&batch), Err(Error::GramSingular { .. })));
    }

    #[test]
    fn degenerate_second_stage() {
        // u2 - C x2 = 0 for every sample
        let batch = RolloutBatch::new(
            vec![
                scalar_rollout([1.0, 1.0, 1.5, 1.5, 2.0]),
                scalar_rollout([2.0, 2.0, 3.0, 3.0, 4.0]),
            ],
            3,
            None,
            "",
        )
        .unwrap();
        assert!(matches!(two_stage_estimate(&batch), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn rho_simple_cases() {
        let eye = DMatrix::<f64>::identity(3, 3);
        let zero = DMatrix::<f64>::zeros(3, 3);
        let sys = LinearSystem::new(zero.clone(), zero.clone(), eye.clone(), eye.clone()).unwrap();
        assert_eq!(compute_rho(&sys).unwrap(), 0.0);
        let sys = LinearSystem::new(eye.clone(), zero.clone(), eye.clone(), eye.clone()).unwrap();
        assert!((compute_rho(&sys).unwrap() - 1.0).abs() < 1e-12);
        let sys = LinearSystem::new(eye.clone(), zero.clone(), eye, zero).unwrap();
        assert!(matches!(compute_rho(&sys), Err(Error::UnboundedRho { .. })));
    }

    #[test]
    fn gaussian_bound_values() {
        assert_eq!(gaussian_error_bound(2, 10, 1.0, 0.0, 1.0).unwrap(), 0.0);
        assert!((gaussian_error_bound(2, 10, 1.0, 1.0, 1.0).unwrap() - 4.0 / 7.0).abs() < 1e-15);
        // n - d - 1: 7 -> 14 halves the bound
        let a = gaussian_error_bound(2, 10, 1.3, 0.7, 2.0).unwrap();
        let b = gaussian_error_bound(2, 17, 1.3, 0.7, 2.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(gaussian_error_bound(2, 3, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn steerability_basics() {
        let u = DVector::from_vec(vec![0.5, -1.0]);
        let up = DVector::from_vec(vec![2.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(steerability(&b, &u, &u).unwrap(), DVector::zeros(2));
        let eye = DMatrix::identity(2, 2);
        assert_eq!(steerability(&eye, &u, &up).unwrap(), &up - &u);
        assert!(steerability(&b, &DVector::zeros(3), &up).is_err());
    }
}
