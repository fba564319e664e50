use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, Christoffels, FoliatedModel};

/// Torus of revolution `((b + cos x) cos y, (b + cos x) sin y, sin x)` with
/// induced metric `g = dx² + (b + cos x)² dy²`, foliated by the flow lines of
/// the unit field
///
/// `Y = (α ∂_x + (b + cos x)⁻¹ ∂_y) / √(α² + 1)`.
///
/// The leaves are geodesics of the leaf metric (`∇^E_Y Y = 0`) but not of
/// the torus, so the mean curvature and `κ` are non-zero.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedTorusModel {
    b: f64,
    alpha: f64,
}

impl EmbeddedTorusModel {
    pub fn new(b: f64, alpha: f64) -> Result<Self> {
        if !b.is_finite() || b <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: format!("torus radius ratio must satisfy b > 1, got {b}"),
            });
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("leaf slope must satisfy alpha > 0, got {alpha}"),
            });
        }
        Ok(Self { b, alpha })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn s(&self) -> f64 {
        (self.alpha * self.alpha + 1.0).sqrt()
    }

    /// Components of the unit leaf field `Y` at abscissa `x`.
    pub fn leaf_field(&self, x: f64) -> DVector<f64> {
        let s = self.s();
        DVector::from_vec(vec![self.alpha / s, 1.0 / (s * (self.b + x.cos()))])
    }

    /// `∇_Y Y` from the closed form; normal to the leaves.
    pub fn nabla_y_y(&self, x: f64) -> DVector<f64> {
        let (sin, r) = (x.sin(), self.b + x.cos());
        let s2 = self.alpha * self.alpha + 1.0;
        DVector::from_vec(vec![sin / (s2 * r), -self.alpha * sin / (s2 * r * r)])
    }

    /// `√((b−1)/(b+1))`.
    fn k(&self) -> f64 {
        ((self.b - 1.0) / (self.b + 1.0)).sqrt()
    }

    /// `2 / (α √(b² − 1))`.
    fn leaf_scale(&self) -> f64 {
        2.0 / (self.alpha * (self.b * self.b - 1.0).sqrt())
    }

    /// `arctan(k tan(x/2))` continued across the poles at `x = π + 2πm`.
    ///
    /// Increasing in `x`, with `phase(x + 2π) = phase(x) + π`.
    pub fn phase(&self, x: f64) -> f64 {
        let half = 0.5 * x;
        let m = (half / PI).round();
        let theta = half - m * PI;
        // theta ∈ [−π/2, π/2], so cos θ ≥ 0 and atan2 equals arctan(k tan θ).
        (self.k() * theta.sin()).atan2(theta.cos()) + m * PI
    }

    /// Quantity constant along each leaf: `y − (2/(α√(b²−1))) phase(x)`.
    pub fn leaf_invariant(&self, p: &ChartPoint) -> f64 {
        p.get(1) - self.leaf_scale() * self.phase(p.get(0))
    }

    /// Closed-form harmonic density with respect to the Riemannian volume,
    /// `h(x) = 1 / (4π² (b + cos x))`.
    pub fn harmonic_density(&self, x: f64) -> f64 {
        1.0 / (4.0 * PI * PI * (self.b + x.cos()))
    }

    /// Left side of the density equation for densities depending on `x` only,
    /// `(b + cos x) h'' − 2 sin x h' − cos x h`.
    pub fn density_ode_lhs(&self, x: f64, h: f64, dh: f64, d2h: f64) -> f64 {
        (self.b + x.cos()) * d2h - 2.0 * x.sin() * dh - x.cos() * h
    }

    /// The leaf flow `ψ_t` on the universal cover.
    pub fn flow(&self, x0: f64, y0: f64, t: f64) -> (f64, f64) {
        let xt = x0 + self.alpha * t / self.s();
        let yt = y0 + self.leaf_scale() * (self.phase(xt) - self.phase(x0));
        (xt, yt)
    }
}

impl Default for EmbeddedTorusModel {
    fn default() -> Self {
        Self::new(super::DEFAULT_B, super::DEFAULT_ALPHA).expect("default parameters are valid")
    }
}

impl FoliatedModel for EmbeddedTorusModel {
    fn id(&self) -> String {
        format!("torus3(b={},alpha={})", self.b, self.alpha)
    }

    fn dim(&self) -> usize {
        2
    }

    fn leaf_dim(&self) -> usize {
        1
    }

    fn metric(&self, x: &ChartPoint) -> DMatrix<f64> {
        let r = self.b + x.get(0).cos();
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, r * r])
    }

    fn e_frame(&self, x: &ChartPoint) -> Vec<DVector<f64>> {
        vec![self.leaf_field(x.get(0))]
    }

    fn analytic_christoffels(&self, x: &ChartPoint) -> Option<Christoffels> {
        let (sin, r) = (x.get(0).sin(), self.b + x.get(0).cos());
        let mut gamma = Christoffels::zeros(2);
        // ∇_{∂x}∂y = −sin x/(b + cos x) ∂y,  ∇_{∂y}∂y = (b + cos x) sin x ∂x.
        gamma.set_symmetric(1, 0, 1, -sin / r);
        gamma.set(0, 1, 1, r * sin);
        Some(gamma)
    }

    fn periodic_mask(&self) -> Vec<bool> {
        vec![true, true]
    }

    fn leaf_flow(&self, x: &ChartPoint, t: f64) -> Option<ChartPoint> {
        let (xt, yt) = self.flow(x.get(0), x.get(1), t);
        Some(ChartPoint::new(vec![xt, yt]))
    }
}

/// `ψ_t(x0, y0)` on the universal cover.
pub fn example3_flow(model: &EmbeddedTorusModel, x0: f64, y0: f64, t: f64) -> (f64, f64) {
    model.flow(x0, y0, t)
}

/// Closed-form foliated Brownian motion `ψ_{B_t}(x0, y0)` for the recorded
/// values of a linear Brownian motion.
pub fn example3_closed_form_fobm(
    model: &EmbeddedTorusModel,
    x0: f64,
    y0: f64,
    brownian_path: &[f64],
) -> Vec<ChartPoint> {
    brownian_path
        .iter()
        .map(|&b| {
            let (x, y) = model.flow(x0, y0, b);
            ChartPoint::new(vec![x, y])
        })
        .collect()
}
