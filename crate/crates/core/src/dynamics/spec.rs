use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LinearSystem;
use crate::error::{Error, Result};

/// Generator behind every stochastic draw in the crate.
pub type SimRng = ChaCha8Rng;

/// A deterministic vector map (one of f, g, h, r).
pub type VectorMap = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-style seed for stream `(a, b)` under `master`. Each stream is
/// independent of the order in which streams are consumed.
pub fn stream_seed(master: u64, a: u64, b: u64) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ splitmix64(a.wrapping_add(0x5851_F42D_4C95_7F2D)));
    splitmix64(h ^ splitmix64(b.wrapping_add(0x1405_7B7E_F767_814F)))
}

pub fn stream_rng(master: u64, a: u64, b: u64) -> SimRng {
    SimRng::seed_from_u64(stream_seed(master, a, b))
}

/// Exogenous consumption shock `xi_t`, sampled independently per time step.
pub trait Noise: Send + Sync {
    /// Draw `xi_t` (t >= 1) from a generator dedicated to this time step.
    fn sample(&self, t: usize, rng: &mut SimRng) -> DVector<f64>;

    fn describe(&self) -> String {
        "custom noise".into()
    }
}

/// Isotropic Gaussian shocks `N(0, sigma_t^2 I)`. `sigma_t = 0` means no shock at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicGaussian {
    dim: usize,
    /// `scales[t - 1]` is sigma_t; steps past the end use `tail`.
    scales: Vec<f64>,
    tail: f64,
}

impl IsotropicGaussian {
    pub fn new(dim: usize, scales: Vec<f64>, tail: f64) -> Result<Self> {
        if scales.iter().chain(std::iter::once(&tail)).any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Argument("noise scales must be finite and non-negative".into()));
        }
        Ok(IsotropicGaussian { dim, scales, tail })
    }

    /// Same scale at every step.
    pub fn constant(dim: usize, sigma: f64) -> Result<Self> {
        IsotropicGaussian::new(dim, Vec::new(), sigma)
    }

    pub fn sigma_at(&self, t: usize) -> f64 {
        t.checked_sub(1)
            .and_then(|i| self.scales.get(i))
            .copied()
            .unwrap_or(self.tail)
    }
}

impl Noise for IsotropicGaussian {
    fn sample(&self, t: usize, rng: &mut SimRng) -> DVector<f64> {
        let sigma = self.sigma_at(t);
        if sigma == 0.0 {
            return DVector::zeros(self.dim);
        }
        DVector::from_fn(self.dim, |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        })
    }

    fn describe(&self) -> String {
        format!(
            "isotropic gaussian (dim {}, scales {:?}, tail {})",
            self.dim, self.scales, self.tail
        )
    }
}

/// Noise given by a closure of `(t, rng)`.
#[derive(Clone)]
pub struct FnNoise {
    f: Arc<dyn Fn(usize, &mut SimRng) -> DVector<f64> + Send + Sync>,
    label: String,
}

impl FnNoise {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(usize, &mut SimRng) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        FnNoise {
            f: Arc::new(f),
            label: label.into(),
        }
    }
}

impl Noise for FnNoise {
    fn sample(&self, t: usize, rng: &mut SimRng) -> DVector<f64> {
        (self.f)(t, rng)
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// Distribution `P_0` of the initial pair `(x_0, u_0)`.
pub trait InitialCondition: Send + Sync {
    fn sample(&self, rng: &mut SimRng) -> (DVector<f64>, DVector<f64>);

    fn describe(&self) -> String {
        "custom initial condition".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointMass {
    pub x0: DVector<f64>,
    pub u0: DVector<f64>,
}

impl PointMass {
    pub fn origin(state_dim: usize, action_dim: usize) -> Self {
        PointMass {
            x0: DVector::zeros(state_dim),
            u0: DVector::zeros(action_dim),
        }
    }
}

impl InitialCondition for PointMass {
    fn sample(&self, _rng: &mut SimRng) -> (DVector<f64>, DVector<f64>) {
        (self.x0.clone(), self.u0.clone())
    }

    fn describe(&self) -> String {
        format!(
            "point mass x0={:?} u0={:?}",
            self.x0.as_slice(),
            self.u0.as_slice()
        )
    }
}

#[derive(Clone)]
pub struct FnInit {
    f: Arc<dyn Fn(&mut SimRng) -> (DVector<f64>, DVector<f64>) + Send + Sync>,
    label: String,
}

impl FnInit {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&mut SimRng) -> (DVector<f64>, DVector<f64>) + Send + Sync + 'static,
    ) -> Self {
        FnInit {
            f: Arc::new(f),
            label: label.into(),
        }
    }
}

impl InitialCondition for FnInit {
    fn sample(&self, rng: &mut SimRng) -> (DVector<f64>, DVector<f64>) {
        (self.f)(rng)
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// General additive dynamics
///
/// ```text
/// x_t = f(x_{t-1}) + g(u_{t-1}) + xi_t
/// u_t = h(x_t) + r(u_{t-1})
/// ```
///
/// with `(x_0, u_0) ~ P_0`. The maps must be pure; shocks at different time
/// steps are drawn from independent generator streams.
#[derive(Clone)]
pub struct DynamicsSpec {
    state_dim: usize,
    action_dim: usize,
    pub(crate) f: VectorMap,
    pub(crate) g: VectorMap,
    pub(crate) h: VectorMap,
    pub(crate) r: VectorMap,
    pub(crate) noise: Arc<dyn Noise>,
    pub(crate) init: Arc<dyn InitialCondition>,
    label: String,
    linear: Option<LinearSystem>,
}

impl fmt::Debug for DynamicsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicsSpec")
            .field("state_dim", &self.state_dim)
            .field("action_dim", &self.action_dim)
            .field("description", &self.describe())
            .finish()
    }
}

impl DynamicsSpec {
    /// Spec from four maps, with unit isotropic Gaussian shocks and `P_0` a
    /// point mass at the origin until overridden.
    pub fn from_maps(
        state_dim: usize,
        action_dim: usize,
        f: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        g: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        h: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        r: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        DynamicsSpec {
            state_dim,
            action_dim,
            f: Arc::new(f),
            g: Arc::new(g),
            h: Arc::new(h),
            r: Arc::new(r),
            noise: Arc::new(
                IsotropicGaussian::constant(state_dim, 1.0).expect("unit scale is valid"),
            ),
            init: Arc::new(PointMass::origin(state_dim, action_dim)),
            label: "custom maps".into(),
            linear: None,
        }
    }

    /// Wrap a [`LinearSystem`] as `f = A·`, `g = B·`, `h = C·`, `r = D·`.
    pub fn linear(sys: &LinearSystem) -> Self {
        let (a, b, c, d) = (sys.a().clone(), sys.b().clone(), sys.c().clone(), sys.d().clone());
        let mut spec = DynamicsSpec::from_maps(
            sys.state_dim(),
            sys.action_dim(),
            move |x| &a * x,
            move |u| &b * u,
            move |x| &c * x,
            move |u| &d * u,
        );
        spec.label = sys.describe();
        spec.linear = Some(sys.clone());
        spec
    }

    pub fn with_noise(mut self, noise: impl Noise + 'static) -> Self {
        self.noise = Arc::new(noise);
        self
    }

    pub fn with_shared_noise(mut self, noise: Arc<dyn Noise>) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_init(mut self, init: impl InitialCondition + 'static) -> Self {
        self.init = Arc::new(init);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// The wrapped linear system, when the spec was built by [`DynamicsSpec::linear`].
    pub fn as_linear(&self) -> Option<&LinearSystem> {
        self.linear.as_ref()
    }

    pub fn describe(&self) -> String {
        format!(
            "{}; noise: {}; init: {}",
            self.label,
            self.noise.describe(),
            self.init.describe()
        )
    }

    fn checked(map: &VectorMap, input: &DVector<f64>, out_dim: usize, name: &str) -> Result<DVector<f64>> {
        let out = map(input);
        if out.len() != out_dim {
            return Err(Error::Spec(format!(
                "map {name} returned a vector of length {}, expected {out_dim}",
                out.len()
            )));
        }
        Ok(out)
    }

    pub fn apply_f(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_state(x)?;
        Self::checked(&self.f, x, self.state_dim, "f")
    }

    pub fn apply_g(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_action(u)?;
        Self::checked(&self.g, u, self.state_dim, "g")
    }

    pub fn apply_h(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_state(x)?;
        Self::checked(&self.h, x, self.action_dim, "h")
    }

    pub fn apply_r(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_action(u)?;
        Self::checked(&self.r, u, self.action_dim, "r")
    }

    pub(crate) fn sample_noise(&self, t: usize, rng: &mut SimRng) -> Result<DVector<f64>> {
        let xi = self.noise.sample(t, rng);
        if xi.len() != self.state_dim {
            return Err(Error::Spec(format!(
                "noise at t={t} has length {}, expected {}",
                xi.len(),
                self.state_dim
            )));
        }
        Ok(xi)
    }

    pub(crate) fn sample_init(&self, rng: &mut SimRng) -> Result<(DVector<f64>, DVector<f64>)> {
        let (x0, u0) = self.init.sample(rng);
        self.check_state(&x0)?;
        self.check_action(&u0)?;
        Ok((x0, u0))
    }

    fn check_state(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.state_dim {
            return Err(Error::Spec(format!(
                "state vector has length {}, expected {}",
                x.len(),
                self.state_dim
            )));
        }
        Ok(())
    }

    fn check_action(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.action_dim {
            return Err(Error::Spec(format!(
                "action vector has length {}, expected {}",
                u.len(),
                self.action_dim
            )));
        }
        Ok(())
    }

    /// Replace the four maps while keeping noise and initial condition.
    pub(crate) fn with_maps(&self, f: VectorMap, g: VectorMap, h: VectorMap, r: VectorMap, label: String) -> Self {
        DynamicsSpec {
            state_dim: self.state_dim,
            action_dim: self.action_dim,
            f,
            g,
            h,
            r,
            noise: Arc::clone(&self.noise),
            init: Arc::clone(&self.init),
            label,
            linear: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_seeds_differ_across_coordinates() {
        let a = stream_seed(7, 0, 1);
        let b = stream_seed(7, 1, 0);
        let c = stream_seed(8, 0, 1);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, stream_seed(7, 0, 1));
    }

    #[test]
    fn zero_scale_draws_nothing() {
        let noise = IsotropicGaussian::new(3, vec![1.0, 0.0], 2.0).unwrap();
        let mut rng = stream_rng(1, 0, 2);
        assert_eq!(noise.sample(2, &mut rng), DVector::zeros(3));
        assert_eq!(noise.sigma_at(1), 1.0);
        assert_eq!(noise.sigma_at(5), 2.0);
    }

    #[test]
    fn negative_scale_rejected() {
        assert!(IsotropicGaussian::new(2, vec![-1.0], 1.0).is_err());
    }

    #[test]
    fn map_output_dimension_checked() {
        let spec = DynamicsSpec::from_maps(
            2,
            1,
            |x| x.clone(),
            |_| DVector::zeros(3),
            |x| DVector::from_element(1, x[0]),
            |u| u.clone(),
        );
        assert!(spec.apply_g(&DVector::zeros(1)).is_err());
        assert!(spec.apply_f(&DVector::zeros(3)).is_err());
        assert!(spec.apply_h(&DVector::zeros(2)).is_ok());
    }
}
