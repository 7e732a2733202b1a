use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix_serde;

/// Linear platform-consumer dynamics
///
/// ```text
/// x_t = A x_{t-1} + B u_{t-1} + xi_t
/// u_t = C x_t     + D u_{t-1}
/// ```
///
/// with state dimension `d` and action dimension `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinearSystemRepr", into = "LinearSystemRepr")]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct LinearSystemRepr {
    #[serde(with = "matrix_serde")]
    a: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    b: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    c: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    d: DMatrix<f64>,
}

impl TryFrom<LinearSystemRepr> for LinearSystem {
    type Error = Error;
    fn try_from(r: LinearSystemRepr) -> Result<Self> {
        LinearSystem::new(r.a, r.b, r.c, r.d)
    }
}

impl From<LinearSystem> for LinearSystemRepr {
    fn from(s: LinearSystem) -> Self {
        LinearSystemRepr {
            a: s.a,
            b: s.b,
            c: s.c,
            d: s.d,
        }
    }
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let sd = a.nrows();
        let ap = d.nrows();
        let shape_ok = a.shape() == (sd, sd)
            && b.shape() == (sd, ap)
            && c.shape() == (ap, sd)
            && d.shape() == (ap, ap);
        if !shape_ok {
            return Err(Error::Spec(format!(
                "inconsistent shapes: A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        if sd == 0 || ap == 0 {
            return Err(Error::Spec("state and action dimensions must be positive".into()));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Spec(format!("matrix {name} has non-finite entries")));
            }
        }
        Ok(LinearSystem { a, b, c, d })
    }

    /// All-zero system of the given dimensions.
    pub fn zeros(state_dim: usize, action_dim: usize) -> Self {
        LinearSystem {
            a: DMatrix::zeros(state_dim, state_dim),
            b: DMatrix::zeros(state_dim, action_dim),
            c: DMatrix::zeros(action_dim, state_dim),
            d: DMatrix::zeros(action_dim, action_dim),
        }
    }

    /// Scalar system (d = p = 1).
    pub fn scalar(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        LinearSystem::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
            DMatrix::from_element(1, 1, d),
        )
    }

    /// Independent N(0, scale^2) entries in every matrix.
    pub fn random_gaussian(state_dim: usize, action_dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |r: usize, c: usize| {
            DMatrix::from_fn(r, c, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
        };
        let a = draw(state_dim, state_dim);
        let b = draw(state_dim, action_dim);
        let c = draw(action_dim, state_dim);
        let d = draw(action_dim, action_dim);
        LinearSystem { a, b, c, d }
    }

    /// Square system built from sample second-moment matrices: `A`, `B`, `D`
    /// are `W W^T / samples` with `W` a `dim x samples` standard Gaussian
    /// matrix, and `C` is `W W^T / rank_c` with `W` of shape `dim x rank_c`,
    /// so `C` has rank `rank_c`.
    pub fn wishart(dim: usize, rank_c: usize, samples: usize, seed: u64) -> Result<Self> {
        if dim == 0 || samples == 0 || rank_c == 0 || rank_c > dim {
            return Err(Error::Argument(format!(
                "wishart construction needs 0 < rank_c <= dim and samples > 0 (dim {dim}, rank_c {rank_c}, samples {samples})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gram = |cols: usize| {
            let w = DMatrix::from_fn(dim, cols, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z
            });
            (&w * w.transpose()) / cols as f64
        };
        let b = gram(samples);
        let a = gram(samples);
        let d = gram(samples);
        let c = gram(rank_c);
        LinearSystem::new(a, b, c, d)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn action_dim(&self) -> usize {
        self.d.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// `A + BC`, the one-step state map once the action feedback is folded in.
    pub fn closed_loop(&self) -> DMatrix<f64> {
        &self.a + &self.b * &self.c
    }

    /// The linear twin for a perturbation `W` (d x p): `A + W C`, `B - W`.
    ///
    /// From a zero initial condition and one observed step, it produces the
    /// same observational law of `(x_1, u_1, x_2)` while its steerability is `B - W`.
    pub fn twin(&self, w: &DMatrix<f64>) -> Result<Self> {
        if w.shape() != self.b.shape() {
            return Err(Error::Spec(format!(
                "twin perturbation must be {:?}, got {:?}",
                self.b.shape(),
                w.shape()
            )));
        }
        LinearSystem::new(
            &self.a + w * &self.c,
            &self.b - w,
            self.c.clone(),
            self.d.clone(),
        )
    }

    pub fn describe(&self) -> String {
        format!("linear system d={} p={}", self.state_dim(), self.action_dim())
    }
}
