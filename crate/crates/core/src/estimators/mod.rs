//! Two-stage regression, adjustment formula and double machine learning
//! estimators of steerability.

mod adjustment;
mod dml;
mod two_stage;

pub use adjustment::{
    adjustment_estimate, adjustment_estimate_cell, ped_from_adjustment, AdjustmentEstimate, AdjustmentMode, Bin,
    BinGrid, Discretization, PedEstimate,
};
pub use dml::{dml_estimate, half_split, DmlEstimate, OlsResidualizer, Residualizer};
pub use two_stage::{compute_rho, gaussian_error_bound, steerability, two_stage_estimate, TwoStageEstimate};
