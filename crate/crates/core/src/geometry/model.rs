use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::types::{ChartPoint, Christoffels};
use super::DEFAULT_FD_STEP;

/// Chart-level description of a foliated Riemannian manifold `(M, g, E)`.
///
/// Implementors supply the metric components and a frame spanning the leaf
/// distribution `E`; the frame need not be orthonormal. Everything else
/// (projections, connection, foliated operators) is derived in
/// [`crate::geometry`]. Models are immutable and shared across threads.
pub trait FoliatedModel: Send + Sync {
    /// Short identifier recorded with simulated ensembles.
    fn id(&self) -> String;

    /// Ambient dimension `n`.
    fn dim(&self) -> usize;

    /// Leaf dimension `p`, `1 ≤ p < n`.
    fn leaf_dim(&self) -> usize;

    /// Metric components `g_ij` at `x`.
    fn metric(&self, x: &ChartPoint) -> DMatrix<f64>;

    /// `p` linearly independent vectors spanning `E` at `x`.
    fn e_frame(&self, x: &ChartPoint) -> Vec<DVector<f64>>;

    /// Analytic Christoffel symbols, when known.
    fn analytic_christoffels(&self, _x: &ChartPoint) -> Option<Christoffels> {
        None
    }

    /// Which coordinates are `2π`-periodic.
    fn periodic_mask(&self) -> Vec<bool> {
        vec![false; self.dim()]
    }

    /// Step for the five-point difference stencils used on this model.
    fn fd_step(&self) -> f64 {
        DEFAULT_FD_STEP
    }

    /// Closed-form flow of the unit leaf field for one-dimensional foliations.
    fn leaf_flow(&self, _x: &ChartPoint, _t: f64) -> Option<ChartPoint> {
        None
    }

    /// Whether the chart is flat (constant metric), so that coordinate
    /// functions are affine and coordinate increments are martingale tests.
    fn is_flat_chart(&self) -> bool {
        false
    }
}

type MetricFn = dyn Fn(&ChartPoint) -> DMatrix<f64> + Send + Sync;
type FrameFn = dyn Fn(&ChartPoint) -> Vec<DVector<f64>> + Send + Sync;
type ChristoffelFn = dyn Fn(&ChartPoint) -> Christoffels + Send + Sync;

/// A user model assembled from closures.
///
/// ```
/// use folbm::geometry::{ChartModel, FoliatedModel};
/// use nalgebra::{DMatrix, DVector};
///
/// // The plane foliated by horizontal lines, with a conformal metric.
/// let model = ChartModel::builder("conformal-plane", 2, 1)
///     .metric(|x| DMatrix::identity(2, 2) * (1.0 + x.get(1).powi(2)))
///     .e_frame(|_| vec![DVector::from_vec(vec![1.0, 0.0])])
///     .build();
/// assert_eq!(model.leaf_dim(), 1);
/// ```
#[derive(Clone)]
pub struct ChartModel {
    id: String,
    n: usize,
    p: usize,
    metric: Arc<MetricFn>,
    frame: Arc<FrameFn>,
    christoffels: Option<Arc<ChristoffelFn>>,
    periodic: Vec<bool>,
    fd_step: f64,
    flat: bool,
}

impl fmt::Debug for ChartModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartModel")
            .field("id", &self.id)
            .field("n", &self.n)
            .field("p", &self.p)
            .field("analytic_christoffels", &self.christoffels.is_some())
            .finish()
    }
}

impl ChartModel {
    pub fn builder(id: impl Into<String>, n: usize, p: usize) -> ChartModelBuilder {
        ChartModelBuilder {
            id: id.into(),
            n,
            p,
            metric: None,
            frame: None,
            christoffels: None,
            periodic: vec![false; n],
            fd_step: DEFAULT_FD_STEP,
            flat: false,
        }
    }

    /// Copies any model's metric and frame, dropping analytic Christoffels so
    /// that the finite-difference connection is used instead.
    pub fn without_christoffels<M: FoliatedModel + Clone + 'static>(model: M) -> Self {
        let (m1, m2) = (model.clone(), model.clone());
        Self {
            id: format!("{}-fd", model.id()),
            n: model.dim(),
            p: model.leaf_dim(),
            metric: Arc::new(move |x| m1.metric(x)),
            frame: Arc::new(move |x| m2.e_frame(x)),
            christoffels: None,
            periodic: model.periodic_mask(),
            fd_step: model.fd_step(),
            flat: model.is_flat_chart(),
        }
    }
}

pub struct ChartModelBuilder {
    id: String,
    n: usize,
    p: usize,
    metric: Option<Arc<MetricFn>>,
    frame: Option<Arc<FrameFn>>,
    christoffels: Option<Arc<ChristoffelFn>>,
    periodic: Vec<bool>,
    fd_step: f64,
    flat: bool,
}

impl ChartModelBuilder {
    pub fn metric(mut self, f: impl Fn(&ChartPoint) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.metric = Some(Arc::new(f));
        self
    }

    pub fn e_frame(
        mut self,
        f: impl Fn(&ChartPoint) -> Vec<DVector<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.frame = Some(Arc::new(f));
        self
    }

    pub fn christoffels(
        mut self,
        f: impl Fn(&ChartPoint) -> Christoffels + Send + Sync + 'static,
    ) -> Self {
        self.christoffels = Some(Arc::new(f));
        self
    }

    pub fn periodic(mut self, mask: Vec<bool>) -> Self {
        self.periodic = mask;
        self
    }

    pub fn fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn flat(mut self, flat: bool) -> Self {
        self.flat = flat;
        self
    }

    /// # Panics
    ///
    /// If no frame closure was supplied or `p` is not in `1..n`. A missing
    /// metric defaults to the Euclidean one.
    pub fn build(self) -> ChartModel {
        assert!(self.p >= 1 && self.p < self.n, "leaf dimension must satisfy 1 <= p < n");
        assert_eq!(self.periodic.len(), self.n, "periodic mask length must equal n");
        let n = self.n;
        ChartModel {
            id: self.id,
            n,
            p: self.p,
            metric: self
                .metric
                .unwrap_or_else(|| Arc::new(move |_| DMatrix::identity(n, n))),
            frame: self.frame.expect("ChartModel requires an E frame"),
            christoffels: self.christoffels,
            periodic: self.periodic,
            fd_step: self.fd_step,
            flat: self.flat,
        }
    }
}

impl FoliatedModel for ChartModel {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn leaf_dim(&self) -> usize {
        self.p
    }

    fn metric(&self, x: &ChartPoint) -> DMatrix<f64> {
        (self.metric)(x)
    }

    fn e_frame(&self, x: &ChartPoint) -> Vec<DVector<f64>> {
        (self.frame)(x)
    }

    fn analytic_christoffels(&self, x: &ChartPoint) -> Option<Christoffels> {
        self.christoffels.as_ref().map(|c| c(x))
    }

    fn periodic_mask(&self) -> Vec<bool> {
        self.periodic.clone()
    }

    fn fd_step(&self) -> f64 {
        self.fd_step
    }

    fn is_flat_chart(&self) -> bool {
        self.flat
    }
}
