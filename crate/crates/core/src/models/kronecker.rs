use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, Christoffels, FoliatedModel};

/// Foliation of the plane (or flat torus) by lines parallel to `(a, 1)`.
///
/// With irrational `a` the induced foliation of the torus is the Kronecker
/// foliation. The chart is flat and the leaves are totally geodesic, so
/// `K = 0` and `κ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct KroneckerModel {
    a: f64,
    torus: bool,
}

impl KroneckerModel {
    pub fn new(a: f64, torus: bool) -> Result<Self> {
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: format!("slope must satisfy a > 0, got {a}"),
            });
        }
        Ok(Self { a, torus })
    }

    pub fn plane(a: f64) -> Result<Self> {
        Self::new(a, false)
    }

    pub fn torus(a: f64) -> Result<Self> {
        Self::new(a, true)
    }

    pub fn slope(&self) -> f64 {
        self.a
    }

    pub fn is_torus(&self) -> bool {
        self.torus
    }

    /// Unit leaf direction `(a, 1)/√(a² + 1)`.
    pub fn direction(&self) -> DVector<f64> {
        let s = (self.a * self.a + 1.0).sqrt();
        DVector::from_vec(vec![self.a / s, 1.0 / s])
    }

    /// Coefficients of `Δ_E = (a²∂²_x + 2a ∂²_{xy} + ∂²_y)/(a² + 1)` as a
    /// symmetric matrix acting on the coordinate Hessian.
    pub fn laplacian_e_coefficients(&self) -> DMatrix<f64> {
        let a = self.a;
        DMatrix::from_row_slice(2, 2, &[a * a, a, a, 1.0]) / (a * a + 1.0)
    }
}

impl FoliatedModel for KroneckerModel {
    fn id(&self) -> String {
        format!("kronecker(a={})", self.a)
    }

    fn dim(&self) -> usize {
        2
    }

    fn leaf_dim(&self) -> usize {
        1
    }

    fn metric(&self, _x: &ChartPoint) -> DMatrix<f64> {
        DMatrix::identity(2, 2)
    }

    fn e_frame(&self, _x: &ChartPoint) -> Vec<DVector<f64>> {
        vec![DVector::from_vec(vec![self.a, 1.0])]
    }

    fn analytic_christoffels(&self, _x: &ChartPoint) -> Option<Christoffels> {
        Some(Christoffels::zeros(2))
    }

    fn periodic_mask(&self) -> Vec<bool> {
        vec![self.torus; 2]
    }

    fn leaf_flow(&self, x: &ChartPoint, t: f64) -> Option<ChartPoint> {
        Some(x.offset(&self.direction(), t))
    }

    fn is_flat_chart(&self) -> bool {
        true
    }
}

/// Closed-form leafwise Brownian motion `x0 + (a,1)/√(a²+1) · W_t`.
///
/// `brownian_path` holds `W` at the recorded times. Points stay on the
/// universal cover; wrap with [`ChartPoint::wrapped`] for torus output.
pub fn kronecker_fobm(model: &KroneckerModel, x0: &ChartPoint, brownian_path: &[f64]) -> Vec<ChartPoint> {
    let u = model.direction();
    brownian_path.iter().map(|&w| x0.offset(&u, w)).collect()
}
