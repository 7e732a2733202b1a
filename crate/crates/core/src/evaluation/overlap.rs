use std::io::Write;

use serde::{Deserialize, Serialize};

use super::series::{sliding_window, TimeSeries};
use crate::error::{Error, Result};
use crate::estimators::{adjustment_estimate_cell, AdjustmentMode, Discretization};

/// A labelled treatment cell to query, e.g. `("High", [1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionQuery {
    pub label: String,
    pub cell: Vec<usize>,
}

impl ActionQuery {
    pub fn new(label: impl Into<String>, cell: Vec<usize>) -> Self {
        ActionQuery {
            label: label.into(),
            cell,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub action_bin: String,
    /// `None` is reported as `N/A`.
    pub estimate: Option<Vec<f64>>,
    pub undefined_strata: usize,
    pub occupied_strata: usize,
    pub undefined_fraction: f64,
    pub undefined_mass: f64,
}

/// Strict-mode adjustment estimates for every `(K, action bin)` pair.
pub fn overlap_sweep(
    series: &TimeSeries,
    k_list: &[usize],
    disc: &Discretization,
    queries: &[ActionQuery],
) -> Result<Vec<OverlapRow>> {
    let mut rows = Vec::with_capacity(k_list.len() * queries.len());
    for &k in k_list {
        let batch = sliding_window(series, k)?;
        for q in queries {
            let est = adjustment_estimate_cell(&batch, disc, &q.cell, AdjustmentMode::Strict)?;
            rows.push(OverlapRow {
                k,
                action_bin: q.label.clone(),
                estimate: est.x_hat,
                undefined_strata: est.undefined_strata,
                occupied_strata: est.occupied_strata,
                undefined_fraction: est.undefined_fraction,
                undefined_mass: est.undefined_mass,
            });
        }
    }
    Ok(rows)
}

pub const OVERLAP_HEADER: [&str; 7] = [
    "K",
    "action_bin",
    "estimate",
    "undefined_strata",
    "occupied_strata",
    "undefined_fraction",
    "undefined_mass",
];

/// One CSV row per `(K, action bin)`; vector estimates are `;`-joined.
pub fn write_overlap_csv<W: Write>(rows: &[OverlapRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OVERLAP_HEADER)?;
    for r in rows {
        let estimate = match &r.estimate {
            Some(v) => v.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
            None => "N/A".into(),
        };
        w.write_record([
            r.k.to_string(),
            r.action_bin.clone(),
            estimate,
            r.undefined_strata.to_string(),
            r.occupied_strata.to_string(),
            r.undefined_fraction.to_string(),
            r.undefined_mass.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
