//! System types, rollout simulation, do-interventions and the analytic
//! covariance recursion.

mod covariance;
pub mod io;
mod simulate;
mod spec;
mod system;

pub use covariance::{covariance_path, covariance_recursion, joint_transition, shock_loading, JointCovariance};
pub use simulate::{simulate_do, simulate_rollouts, BatchMeta, Rollout, RolloutBatch, DIVERGENCE_BOUND};
pub use spec::{
    stream_rng, stream_seed, DynamicsSpec, FnInit, FnNoise, InitialCondition, IsotropicGaussian, Noise, PointMass,
    SimRng, VectorMap,
};
pub use system::LinearSystem;
