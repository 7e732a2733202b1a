//! Sliding-window datasets, the bootstrap bias protocol and overlap sweeps.

mod bootstrap;
mod overlap;
mod series;

pub use bootstrap::{
    bootstrap, bootstrap_batch, percentile, write_bootstrap_csv, AdjustmentPed, BootstrapReport, ConstantEstimator,
    DmlPed, OutcomeMean, ScalarEstimator, TwoStageEntry, BOOTSTRAP_HEADER, DEFAULT_REPLICATES,
};
pub use overlap::{overlap_sweep, write_overlap_csv, ActionQuery, OverlapRow, OVERLAP_HEADER};
pub use series::{sliding_window, SeriesLabels, TimeSeries};
