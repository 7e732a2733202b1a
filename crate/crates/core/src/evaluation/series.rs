use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Rollout, RolloutBatch};
use crate::error::{Error, Result};

/// Paired action and state observations in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    u: Vec<DVector<f64>>,
    x: Vec<DVector<f64>>,
    labels: SeriesLabels,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeriesLabels {
    pub action: Vec<String>,
    pub state: Vec<String>,
}

impl SeriesLabels {
    fn numbered(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }
}

impl TimeSeries {
    pub fn new(u: Vec<DVector<f64>>, x: Vec<DVector<f64>>, labels: Option<SeriesLabels>) -> Result<Self> {
        if u.len() != x.len() {
            return Err(Error::Spec(format!("{} actions but {} states", u.len(), x.len())));
        }
        if u.len() < 2 {
            return Err(Error::InsufficientLength { len: u.len(), window: 1 });
        }
        let p = u[0].len();
        let d = x[0].len();
        if p == 0 || d == 0 || u.iter().any(|v| v.len() != p) || x.iter().any(|v| v.len() != d) {
            return Err(Error::Spec("series entries must share a nonzero dimension".into()));
        }
        if let Some(t) = u.iter().zip(&x).position(|(a, b)| !(a.iter().chain(b.iter()).all(|v| v.is_finite()))) {
            return Err(Error::Numeric(format!("non-finite observation at index {t}")));
        }
        let labels = labels.unwrap_or_else(|| SeriesLabels {
            action: SeriesLabels::numbered("u", p),
            state: SeriesLabels::numbered("x", d),
        });
        if labels.action.len() != p || labels.state.len() != d {
            return Err(Error::Spec("label count does not match dimensions".into()));
        }
        Ok(TimeSeries { u, x, labels })
    }

    /// Scalar action and state series.
    pub fn scalar(u: &[f64], x: &[f64]) -> Result<Self> {
        let wrap = |v: &[f64]| v.iter().map(|&e| DVector::from_element(1, e)).collect();
        TimeSeries::new(wrap(u), wrap(x), None)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn actions(&self) -> &[DVector<f64>] {
        &self.u
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.x
    }

    pub fn labels(&self) -> &SeriesLabels {
        &self.labels
    }

    pub fn action_dim(&self) -> usize {
        self.u[0].len()
    }

    pub fn state_dim(&self) -> usize {
        self.x[0].len()
    }
}

/// All overlapping windows `(x_{t-K}..x_t, u_{t-K}..u_{t-1})`.
///
/// A series with `L` observations yields `L - K` windows. Overlapping windows
/// are treated downstream as independent rollouts.
pub fn sliding_window(series: &TimeSeries, k: usize) -> Result<RolloutBatch> {
    let len = series.len();
    if k == 0 {
        return Err(Error::Argument("window length K must be at least 1".into()));
    }
    if len <= k {
        return Err(Error::InsufficientLength { len, window: k });
    }
    let rollouts = (k..len)
        .map(|t| Rollout::new(series.x[t - k..=t].to_vec(), series.u[t - k..t].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    RolloutBatch::new(rollouts, k, None, format!("sliding window K={k} over {len} observations"))
}
