use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::fd;
use super::{DEFAULT_FD_STEP, DEGENERACY_FLOOR};
use crate::error::{Error, Result};

/// A point in chart coordinates.
///
/// Periodic coordinates are radians. Dynamics run on the universal cover, so
/// a `ChartPoint` is not wrapped unless [`ChartPoint::wrapped`] is called.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    coords: DVector<f64>,
}

impl ChartPoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Self {
            coords: DVector::from_vec(coords.into()),
        }
    }

    pub fn from_vector(coords: DVector<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }

    /// `self + t * direction`.
    pub fn offset(&self, direction: &DVector<f64>, t: f64) -> Self {
        Self {
            coords: &self.coords + direction * t,
        }
    }

    /// Wraps the coordinates flagged in `mask` into `[0, 2π)`.
    pub fn wrapped(&self, mask: &[bool]) -> Self {
        let coords = DVector::from_iterator(
            self.dim(),
            self.coords
                .iter()
                .zip(mask)
                .map(|(&c, &periodic)| if periodic { wrap_angle(c) } else { c }),
        );
        Self { coords }
    }
}

impl fmt::Display for ChartPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Maps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// A tangent vector in the chart basis `∂_1, …, ∂_n` at `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub components: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: ChartPoint, components: DVector<f64>) -> Self {
        debug_assert_eq!(base.dim(), components.len());
        Self { base, components }
    }

    pub fn zero(base: ChartPoint) -> Self {
        let n = base.dim();
        Self::new(base, DVector::zeros(n))
    }

    pub fn from_slice(base: &ChartPoint, components: &[f64]) -> Self {
        Self::new(base.clone(), DVector::from_column_slice(components))
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Directional derivative `v(f)` at the base point.
    pub fn apply(&self, f: &ScalarField) -> f64 {
        f.gradient(&self.base).dot(&self.components)
    }
}

/// Metric components at a point together with their inverse and volume factor.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSample {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub sqrt_det_g: f64,
}

impl MetricSample {
    /// Factorizes `g`; fails with [`Error::SingularMetric`] when `g` is not
    /// positive definite or `det g` falls below the degeneracy floor.
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        let sym = (&g + g.transpose()) * 0.5;
        let chol = match sym.clone().cholesky() {
            Some(c) => c,
            None => {
                return Err(Error::SingularMetric {
                    det: sym.determinant(),
                })
            }
        };
        let sqrt_det_g: f64 = chol.l_dirty().diagonal().iter().product();
        let det = sqrt_det_g * sqrt_det_g;
        if det < DEGENERACY_FLOOR {
            return Err(Error::SingularMetric { det });
        }
        let g_inv = chol.inverse();
        Ok(Self {
            g: sym,
            g_inv,
            sqrt_det_g,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.g * v))
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Index raising: the vector dual to the covector `omega`.
    pub fn sharp(&self, omega: &DVector<f64>) -> DVector<f64> {
        &self.g_inv * omega
    }
}

/// Christoffel symbols `Γ^k_{ij}` of the Levi-Civita connection.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffels {
    n: usize,
    data: Vec<f64>,
}

impl Christoffels {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.data[(k * self.n + i) * self.n + j] = value;
    }

    /// Sets `Γ^k_{ij}` and `Γ^k_{ji}`.
    pub fn set_symmetric(&mut self, k: usize, i: usize, j: usize, value: f64) {
        self.set(k, i, j, value);
        self.set(k, j, i, value);
    }

    /// `Γ(u, v)^k = Γ^k_{ij} u^i v^j`, the connection correction of `∇_u v`.
    pub fn contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let mut acc = 0.0;
            for i in 0..n {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    acc += self.get(k, i, j) * u[i] * v[j];
                }
            }
            acc
        })
    }

    pub fn max_abs_diff(&self, other: &Christoffels) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

type EvalFn = dyn Fn(&ChartPoint) -> f64 + Send + Sync;
type PartialsFn = dyn Fn(&ChartPoint) -> DVector<f64> + Send + Sync;
type SecondPartialsFn = dyn Fn(&ChartPoint) -> DMatrix<f64> + Send + Sync;

/// A smooth test function with optional analytic first and second partials.
///
/// Missing partials fall back to central finite differences. Cloning is cheap.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<EvalFn>,
    partials: Option<Arc<PartialsFn>>,
    second_partials: Option<Arc<SecondPartialsFn>>,
    fd_step: f64,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("analytic_partials", &self.partials.is_some())
            .field("analytic_second_partials", &self.second_partials.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(eval: impl Fn(&ChartPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            partials: None,
            second_partials: None,
            fd_step: DEFAULT_FD_STEP,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
            .with_partials(|x| DVector::zeros(x.dim()))
            .with_second_partials(|x| DMatrix::zeros(x.dim(), x.dim()))
    }

    /// The `i`-th chart coordinate (unwrapped).
    pub fn coordinate(i: usize) -> Self {
        Self::new(move |x| x.get(i))
            .with_partials(move |x| {
                let mut d = DVector::zeros(x.dim());
                d[i] = 1.0;
                d
            })
            .with_second_partials(|x| DMatrix::zeros(x.dim(), x.dim()))
    }

    pub fn with_partials(
        mut self,
        partials: impl Fn(&ChartPoint) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.partials = Some(Arc::new(partials));
        self
    }

    pub fn with_second_partials(
        mut self,
        second: impl Fn(&ChartPoint) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.second_partials = Some(Arc::new(second));
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    /// Both partial levels are analytic.
    pub fn is_analytic(&self) -> bool {
        self.partials.is_some() && self.second_partials.is_some()
    }

    pub fn has_partials(&self) -> bool {
        self.partials.is_some()
    }

    #[inline]
    pub fn value(&self, x: &ChartPoint) -> f64 {
        (self.eval)(x)
    }

    /// Partials `∂_i f`.
    pub fn gradient(&self, x: &ChartPoint) -> DVector<f64> {
        match &self.partials {
            Some(p) => p(x),
            None => self.fd_gradient(x),
        }
    }

    /// Central-difference partials of `eval`, regardless of analytic partials.
    pub fn fd_gradient(&self, x: &ChartPoint) -> DVector<f64> {
        let n = x.dim();
        DVector::from_fn(n, |i, _| {
            let mut dir = DVector::zeros(n);
            dir[i] = 1.0;
            fd::derivative_scalar(|t| self.value(&x.offset(&dir, t)), self.fd_step)
        })
    }

    /// Second partials `∂_i ∂_j f`, symmetrized.
    pub fn hessian(&self, x: &ChartPoint) -> DMatrix<f64> {
        if let Some(s) = &self.second_partials {
            return s(x);
        }
        let n = x.dim();
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut dir = DVector::zeros(n);
            dir[i] = 1.0;
            let col = fd::derivative_vector(|t| self.gradient(&x.offset(&dir, t)), self.fd_step);
            h.set_column(i, &col);
        }
        (&h + h.transpose()) * 0.5
    }

    /// `f · h` with product-rule partials.
    pub fn product(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        let (a1, b1) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        ScalarField::new(move |x| a.value(x) * b.value(x))
            .with_partials(move |x| a1.gradient(x) * b1.value(x) + b1.gradient(x) * a1.value(x))
            .with_second_partials(move |x| {
                let (da, db) = (a2.gradient(x), b2.gradient(x));
                a2.hessian(x) * b2.value(x)
                    + b2.hessian(x) * a2.value(x)
                    + &da * db.transpose()
                    + &db * da.transpose()
            })
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }
}
