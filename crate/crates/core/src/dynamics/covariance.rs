use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::LinearSystem;
use crate::error::{Error, Result};
use crate::linalg::matrix_serde;

/// Covariance `Sigma_t` of the stacked vector `(x_t, u_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointCovariance {
    pub t: usize,
    #[serde(with = "matrix_serde")]
    pub sigma: DMatrix<f64>,
}

impl JointCovariance {
    pub fn new(t: usize, sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::Argument(format!("covariance must be square, got {:?}", sigma.shape())));
        }
        Ok(JointCovariance { t, sigma })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// Largest `|Sigma - Sigma^T|` entry.
    pub fn asymmetry(&self) -> f64 {
        (&self.sigma - self.sigma.transpose()).amax()
    }
}

/// Transition `J = [A, B; CA, CB + D]` of the stacked state `(x_t, u_t)`.
pub fn joint_transition(sys: &LinearSystem) -> DMatrix<f64> {
    let d = sys.state_dim();
    let p = sys.action_dim();
    let mut j = DMatrix::zeros(d + p, d + p);
    j.view_mut((0, 0), (d, d)).copy_from(sys.a());
    j.view_mut((0, d), (d, p)).copy_from(sys.b());
    j.view_mut((d, 0), (p, d)).copy_from(&(sys.c() * sys.a()));
    j.view_mut((d, d), (p, p)).copy_from(&(sys.c() * sys.b() + sys.d()));
    j
}

/// Shock loading `M = [I; C]`.
pub fn shock_loading(sys: &LinearSystem) -> DMatrix<f64> {
    let d = sys.state_dim();
    let p = sys.action_dim();
    let mut m = DMatrix::zeros(d + p, d);
    m.view_mut((0, 0), (d, d)).fill_with_identity();
    m.view_mut((d, 0), (p, d)).copy_from(sys.c());
    m
}

/// Exact `Sigma_t` for unit isotropic shocks from `x_0 = u_0 = 0`, via
/// `Sigma_t = J Sigma_{t-1} J^T + M M^T` with `Sigma_0 = 0`.
pub fn covariance_recursion(sys: &LinearSystem, t: usize) -> Result<JointCovariance> {
    Ok(covariance_path(sys, t)?.pop().expect("t >= 1 yields at least one step"))
}

/// `Sigma_1 .. Sigma_t` in order.
pub fn covariance_path(sys: &LinearSystem, t: usize) -> Result<Vec<JointCovariance>> {
    if t < 1 {
        return Err(Error::Argument("covariance recursion needs t >= 1".into()));
    }
    let j = joint_transition(sys);
    let m = shock_loading(sys);
    let mmt = &m * m.transpose();
    let mut sigma = DMatrix::zeros(j.nrows(), j.nrows());
    let mut out = Vec::with_capacity(t);
    for step in 1..=t {
        sigma = &j * &sigma * j.transpose() + &mmt;
        // Symmetrize to remove rounding drift.
        sigma = (&sigma + sigma.transpose()) * 0.5;
        out.push(JointCovariance {
            t: step,
            sigma: sigma.clone(),
        });
    }
    Ok(out)
}
