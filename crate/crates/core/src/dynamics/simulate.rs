use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{stream_rng, DynamicsSpec};
use crate::error::{Error, Result};

/// States and actions beyond this magnitude abort the rollout.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// One observed window `R_K = ({x_{T-t}, u_{T-t}}_{t=1..K}, x_T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// `x_{T-K} .. x_T` (K + 1 entries).
    pub states: Vec<DVector<f64>>,
    /// `u_{T-K} .. u_{T-1}` (K entries).
    pub actions: Vec<DVector<f64>>,
    /// Shocks `xi_{T-K} .. xi_T` aligned with `states` when known (simulation), empty otherwise.
    pub shocks: Vec<DVector<f64>>,
}

impl Rollout {
    pub fn new(states: Vec<DVector<f64>>, actions: Vec<DVector<f64>>) -> Result<Self> {
        let r = Rollout {
            states,
            actions,
            shocks: Vec::new(),
        };
        r.validate()?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        if self.actions.is_empty() {
            return Err(Error::Spec("a rollout needs K >= 1 actions".into()));
        }
        if self.states.len() != self.actions.len() + 1 {
            return Err(Error::Spec(format!(
                "rollout has {} states for {} actions, expected K + 1 states",
                self.states.len(),
                self.actions.len()
            )));
        }
        if !self.shocks.is_empty() && self.shocks.len() != self.states.len() {
            return Err(Error::Spec("shocks must align with states".into()));
        }
        Ok(())
    }

    pub fn window(&self) -> usize {
        self.actions.len()
    }

    /// Lagged states `x_{T-K} .. x_{T-1}`, concatenated.
    pub fn confounders(&self) -> DVector<f64> {
        let k = self.window();
        let d = self.states[0].len();
        let mut z = DVector::zeros(k * d);
        for (lag, x) in self.states[..k].iter().enumerate() {
            z.rows_mut(lag * d, d).copy_from(x);
        }
        z
    }

    /// Treatment `u_{T-1}`.
    pub fn treatment(&self) -> &DVector<f64> {
        &self.actions[self.window() - 1]
    }

    /// Outcome `x_T`.
    pub fn outcome(&self) -> &DVector<f64> {
        &self.states[self.window()]
    }
}

/// `n` rollouts sharing the terminal index `T` and window `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    rollouts: Vec<Rollout>,
    horizon: usize,
    window: usize,
    state_dim: usize,
    action_dim: usize,
    seed: Option<u64>,
    description: String,
}

/// Header fields of a batch, stored in the JSON sidecar next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMeta {
    pub d: usize,
    pub p: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "K")]
    pub window: usize,
    pub n: usize,
    pub seed: Option<u64>,
    pub spec: String,
}

impl RolloutBatch {
    pub fn new(
        rollouts: Vec<Rollout>,
        horizon: usize,
        seed: Option<u64>,
        description: impl Into<String>,
    ) -> Result<Self> {
        let first = rollouts
            .first()
            .ok_or_else(|| Error::Argument("a batch needs at least one rollout".into()))?;
        let window = first.window();
        let state_dim = first.states[0].len();
        let action_dim = first.actions[0].len();
        if horizon < window {
            return Err(Error::Argument(format!("T = {horizon} is smaller than K = {window}")));
        }
        for (i, r) in rollouts.iter().enumerate() {
            r.validate()?;
            if r.window() != window {
                return Err(Error::Spec(format!(
                    "rollout {i} has window {} but the batch uses {window}",
                    r.window()
                )));
            }
            let dims_ok = r.states.iter().chain(&r.shocks).all(|x| x.len() == state_dim)
                && r.actions.iter().all(|u| u.len() == action_dim);
            if !dims_ok {
                return Err(Error::Spec(format!("rollout {i} has inconsistent dimensions")));
            }
        }
        Ok(RolloutBatch {
            rollouts,
            horizon,
            window,
            state_dim,
            action_dim,
            seed,
            description: description.into(),
        })
    }

    pub fn rollouts(&self) -> &[Rollout] {
        &self.rollouts
    }

    pub fn len(&self) -> usize {
        self.rollouts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rollouts.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn meta(&self) -> BatchMeta {
        BatchMeta {
            d: self.state_dim,
            p: self.action_dim,
            horizon: self.horizon,
            window: self.window,
            n: self.len(),
            seed: self.seed,
            spec: self.description.clone(),
        }
    }

    /// `d x n` matrix of the state at position `offset` (0 = `x_{T-K}`).
    pub fn state_matrix(&self, offset: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.state_dim, self.len());
        for (j, r) in self.rollouts.iter().enumerate() {
            m.set_column(j, &r.states[offset]);
        }
        m
    }

    /// `p x n` matrix of the action at position `offset` (0 = `u_{T-K}`).
    pub fn action_matrix(&self, offset: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.action_dim, self.len());
        for (j, r) in self.rollouts.iter().enumerate() {
            m.set_column(j, &r.actions[offset]);
        }
        m
    }

    /// New batch made of the rollouts at `indices` (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let rollouts = indices
            .iter()
            .map(|&i| {
                self.rollouts
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Argument(format!("rollout index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        RolloutBatch::new(rollouts, self.horizon, self.seed, self.description.clone())
    }
}

fn guard(v: &DVector<f64>, rollout: usize, t: usize) -> Result<()> {
    if v.iter().all(|e| e.is_finite() && e.abs() <= DIVERGENCE_BOUND) {
        Ok(())
    } else {
        Err(Error::NumericOverflow { rollout, t })
    }
}

/// Run one trajectory up to `horizon`, keeping the last `window + 1` states.
/// When `intervention` is set, the action at `horizon - 1` is replaced by it.
fn run_trajectory(
    spec: &DynamicsSpec,
    horizon: usize,
    window: usize,
    k: usize,
    seed: u64,
    intervention: Option<&DVector<f64>>,
) -> Result<Rollout> {
    let start = horizon - window;
    let mut init_rng = stream_rng(seed, k as u64, 0);
    let (mut x, mut u) = spec.sample_init(&mut init_rng)?;
    guard(&x, k, 0)?;
    guard(&u, k, 0)?;

    let mut states = Vec::with_capacity(window + 1);
    let mut actions = Vec::with_capacity(window);
    let mut shocks = Vec::with_capacity(window + 1);
    if start == 0 {
        states.push(x.clone());
        actions.push(u.clone());
        shocks.push(DVector::zeros(spec.state_dim()));
    }

    for t in 1..=horizon {
        let mut rng = stream_rng(seed, k as u64, t as u64);
        let xi = spec.sample_noise(t, &mut rng)?;
        let x_next = spec.apply_f(&x)? + spec.apply_g(&u)? + &xi;
        guard(&x_next, k, t)?;
        if t >= start {
            states.push(x_next.clone());
            shocks.push(xi);
        }
        if t == horizon {
            break;
        }
        let u_next = match intervention {
            Some(fixed) if t == horizon - 1 => fixed.clone(),
            _ => spec.apply_h(&x_next)? + spec.apply_r(&u)?,
        };
        guard(&u_next, k, t)?;
        if t >= start {
            actions.push(u_next.clone());
        }
        x = x_next;
        u = u_next;
    }

    Ok(Rollout {
        states,
        actions,
        shocks,
    })
}

/// Collect per-rollout results in index order, reporting the lowest failing index.
fn collect_ordered<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(f).collect();
    results.into_iter().collect()
}

/// Draw `n` independent observational rollouts `R_K` ending at `T`.
///
/// The shock of rollout `k` at step `t` comes from the stream `(seed, k, t)`
/// and the initial condition from `(seed, k, 0)`, so the batch is identical
/// for any thread count.
pub fn simulate_rollouts(
    spec: &DynamicsSpec,
    horizon: usize,
    window: usize,
    n: usize,
    seed: u64,
) -> Result<RolloutBatch> {
    if window < 1 || horizon < window {
        return Err(Error::Argument(format!(
            "need T >= K >= 1, got T = {horizon}, K = {window}"
        )));
    }
    if n < 1 {
        return Err(Error::Argument("need n >= 1".into()));
    }
    let rollouts = collect_ordered(n, |k| run_trajectory(spec, horizon, window, k, seed, None))?;
    RolloutBatch::new(rollouts, horizon, Some(seed), spec.describe())
}

/// Draw `n` samples of `x_T` under `do(u_{T-1} := action)`.
///
/// Uses the same streams as [`simulate_rollouts`], so with a shared seed the
/// interventional and observational trajectories agree up to `T - 1`.
pub fn simulate_do(
    spec: &DynamicsSpec,
    horizon: usize,
    action: &DVector<f64>,
    n: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    if horizon < 2 {
        return Err(Error::Argument(format!("do-simulation needs T >= 2, got {horizon}")));
    }
    if n < 1 {
        return Err(Error::Argument("need n >= 1".into()));
    }
    if action.len() != spec.action_dim() {
        return Err(Error::Spec(format!(
            "intervention has length {}, expected {}",
            action.len(),
            spec.action_dim()
        )));
    }
    collect_ordered(n, |k| {
        run_trajectory(spec, horizon, 1, k, seed, Some(action)).map(|mut r| r.states.pop().expect("window has a terminal state"))
    })
}
