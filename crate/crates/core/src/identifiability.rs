//! Rank and support conditions under which steerability is identifiable,
//! plus the twin construction that serves as a negative control.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsSpec, JointCovariance, LinearSystem, VectorMap};
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values, symmetric_eigenvalues, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Identifiable,
    NotIdentifiable,
}

const RANK_FAILURE_NOTE: &str = "rank condition failed: not sufficient for identifiability; \
necessity is guaranteed only when the window starts from x = u = 0 and later shocks vanish";
const RANK_PASS_NOTE: &str = "full row rank over the span: sufficient for identifiability from rollouts of this length";

/// Outcome of the full-row-rank test on `[DC | D^2 C | ... | D^{M-1} C]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    #[serde(rename = "M")]
    pub span: usize,
    pub rank_observed: usize,
    /// Row count of the block matrix (the action dimension).
    pub rank_required: usize,
    pub singular_values: Vec<f64>,
    pub verdict: Verdict,
    pub rank_tolerance: f64,
    pub note: String,
}

/// The horizontally stacked blocks `[DC | D^2 C | ... | D^{M-1} C]`, `p x d(M-1)`.
pub fn action_span_matrix(sys: &LinearSystem, span: usize) -> Result<DMatrix<f64>> {
    if span < 2 {
        return Err(Error::Argument(format!("span M must be at least 2, got {span}")));
    }
    let d = sys.state_dim();
    let p = sys.action_dim();
    let mut out = DMatrix::zeros(p, d * (span - 1));
    let mut block = sys.d() * sys.c();
    for i in 0..span - 1 {
        out.view_mut((0, i * d), (p, d)).copy_from(&block);
        block = sys.d() * block;
    }
    Ok(out)
}

/// Whether the platform action has full row rank over a span of `span` steps.
pub fn check_full_row_rank_action(sys: &LinearSystem, span: usize, rel_tol: f64) -> Result<IdentifiabilityReport> {
    let blocks = action_span_matrix(sys, span)?;
    let sv = singular_values(&blocks);
    let rank_observed = numerical_rank(&sv, rel_tol);
    let rank_required = blocks.nrows();
    let verdict = if rank_observed == rank_required {
        Verdict::Identifiable
    } else {
        Verdict::NotIdentifiable
    };
    Ok(IdentifiabilityReport {
        span,
        rank_observed,
        rank_required,
        singular_values: sv,
        verdict,
        rank_tolerance: rel_tol,
        note: match verdict {
            Verdict::Identifiable => RANK_PASS_NOTE.into(),
            Verdict::NotIdentifiable => RANK_FAILURE_NOTE.into(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShockVerdict {
    FullySpanning,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockReport {
    pub t: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub verdict: ShockVerdict,
    pub rel_tol: f64,
}

/// Empirical check that no direction `a != 0` makes `a^T xi_t` constant:
/// the centered (1/n) sample covariance must have its smallest eigenvalue
/// above `rel_tol` times its largest.
pub fn check_fully_spanning_shock(t: usize, samples: &[DVector<f64>], rel_tol: f64) -> Result<ShockReport> {
    let dim = samples
        .first()
        .map(|s| s.len())
        .ok_or(Error::InsufficientSamples { needed: 1, got: 0 })?;
    if samples.len() <= dim {
        return Err(Error::InsufficientSamples {
            needed: dim,
            got: samples.len(),
        });
    }
    if samples.iter().any(|s| s.len() != dim) {
        return Err(Error::Spec("noise samples have differing lengths".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().fold(DVector::zeros(dim), |acc, s| acc + s) / n;
    let mut cov = DMatrix::zeros(dim, dim);
    for s in samples {
        let c = s - &mean;
        cov += &c * c.transpose();
    }
    cov /= n;
    let ev = symmetric_eigenvalues(&cov);
    let min = ev[0];
    let max = ev[dim - 1];
    let verdict = if max > 0.0 && min > rel_tol * max {
        ShockVerdict::FullySpanning
    } else {
        ShockVerdict::Degenerate
    };
    Ok(ShockReport {
        t,
        min_eigenvalue: min,
        max_eigenvalue: max,
        verdict,
        rel_tol,
    })
}

/// Twin dynamics for a perturbation `delta: action -> state`:
/// `f'(a) = f(a) + delta(h(a))`, `g'(b) = g(b) - delta(b)`, `h' = h`, `r' = r`.
///
/// From `x_0 = u_0 = 0` with one observed step the twin reproduces the law of
/// `(x_1, u_1, x_2)`, while its steerability differs whenever `delta != 0`.
pub fn construct_twin(
    spec: &DynamicsSpec,
    delta: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
) -> DynamicsSpec {
    let delta: VectorMap = Arc::new(delta);
    let (f, g, h, r) = (
        Arc::clone(&spec.f),
        Arc::clone(&spec.g),
        Arc::clone(&spec.h),
        Arc::clone(&spec.r),
    );
    let (h_in_f, delta_f) = (Arc::clone(&h), Arc::clone(&delta));
    let f_twin: VectorMap = Arc::new(move |a: &DVector<f64>| f(a) + delta_f(&h_in_f(a)));
    let g_twin: VectorMap = Arc::new(move |b: &DVector<f64>| g(b) - delta(b));
    spec.with_maps(f_twin, g_twin, h, r, format!("twin of [{}]", spec.describe()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub t: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub num_zero: usize,
    pub full_rank: bool,
    pub rel_tol: f64,
}

/// Eigen-spectrum of `Sigma_t`; eigenvalues at or below `rel_tol * lambda_max`
/// count as zero.
pub fn spectrum(sigma: &JointCovariance, rel_tol: f64) -> Result<SpectrumReport> {
    let scale = sigma.sigma.amax();
    if sigma.asymmetry() > 1e-10 * scale {
        return Err(Error::Argument(format!(
            "covariance at t={} is not symmetric (max asymmetry {:e})",
            sigma.t,
            sigma.asymmetry()
        )));
    }
    let eigenvalues = symmetric_eigenvalues(&sigma.sigma);
    let max = eigenvalues.last().copied().unwrap_or(0.0);
    let num_zero = eigenvalues.iter().filter(|&&e| e <= rel_tol * max).count();
    Ok(SpectrumReport {
        t: sigma.t,
        full_rank: num_zero == 0,
        eigenvalues,
        num_zero,
        rel_tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub state: Vec<f64>,
    pub prev_action: Vec<f64>,
    pub jacobian_rank: usize,
    pub required_rank: usize,
    pub singular_values: Vec<f64>,
    pub responsive: bool,
}

/// Sampled Jacobian-rank check of `q_c(y) = r(h(y) + c)`.
///
/// Surjectivity of `q_c` cannot be decided numerically, so a pass here is a
/// necessary condition only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsivenessReport {
    pub probes: Vec<ProbeReport>,
    pub all_responsive: bool,
    pub necessary_condition_only: bool,
    pub rel_tol: f64,
}

/// Relative rank floor for finite-difference Jacobians, well above their
/// roundoff of about `eps / step`.
pub const FINITE_DIFFERENCE_RANK_TOL: f64 = 1e-7;

/// Jacobian of `q_c` at `y`: exactly `DC` for linear specs, otherwise central
/// finite differences with step `1e-6 (1 + |y_j|)`.
pub fn responsive_jacobian(spec: &DynamicsSpec, y: &DVector<f64>, c: &DVector<f64>) -> Result<DMatrix<f64>> {
    let q = |y: &DVector<f64>| -> Result<DVector<f64>> {
        let inner = spec.apply_h(y)? + c;
        spec.apply_r(&inner)
    };
    let d = spec.state_dim();
    let p = spec.action_dim();
    if y.len() != d || c.len() != p {
        return Err(Error::Spec("probe dimensions do not match the spec".into()));
    }
    if let Some(sys) = spec.as_linear() {
        return Ok(sys.d() * sys.c());
    }
    let mut jac = DMatrix::zeros(p, d);
    for j in 0..d {
        let step = 1e-6 * (1.0 + y[j].abs());
        let mut plus = y.clone();
        plus[j] += step;
        let mut minus = y.clone();
        minus[j] -= step;
        let col = (q(&plus)? - q(&minus)?) / (2.0 * step);
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite finite difference at probe {:?}, coordinate {j}",
                y.as_slice()
            )));
        }
        jac.set_column(j, &col);
    }
    Ok(jac)
}

pub fn check_responsive_action(
    spec: &DynamicsSpec,
    probes: &[(DVector<f64>, DVector<f64>)],
    rel_tol: f64,
) -> Result<ResponsivenessReport> {
    let required_rank = spec.state_dim().min(spec.action_dim());
    let rank_tol = if spec.as_linear().is_some() {
        rel_tol
    } else {
        rel_tol.max(FINITE_DIFFERENCE_RANK_TOL)
    };
    let probes = probes
        .iter()
        .map(|(y, c)| {
            let jac = responsive_jacobian(spec, y, c)?;
            let sv = singular_values(&jac);
            let rank = numerical_rank(&sv, rank_tol);
            Ok(ProbeReport {
                state: y.iter().copied().collect(),
                prev_action: c.iter().copied().collect(),
                jacobian_rank: rank,
                required_rank,
                singular_values: sv,
                responsive: rank == required_rank,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResponsivenessReport {
        all_responsive: probes.iter().all(|p| p.responsive),
        probes,
        necessary_condition_only: true,
        rel_tol: rank_tol,
    })
}

/// Identifiability reports for spans `2..=max_span`.
pub fn rank_sweep(sys: &LinearSystem, max_span: usize) -> Result<Vec<IdentifiabilityReport>> {
    (2..=max_span)
        .map(|m| check_full_row_rank_action(sys, m, DEFAULT_RANK_TOL))
        .collect()
}
