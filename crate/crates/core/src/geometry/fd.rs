//! Five-point central difference stencils.
//!
//! `f'(0) ≈ (f(-2h) - 8 f(-h) + 8 f(h) - f(2h)) / 12h`, truncation `O(h⁴)`.

use nalgebra::DVector;

use crate::error::Result;

const WEIGHTS: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

pub fn derivative_scalar(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    WEIGHTS.iter().map(|&(s, w)| w * f(s * h)).sum::<f64>() / (12.0 * h)
}

pub fn derivative_vector(f: impl Fn(f64) -> DVector<f64>, h: f64) -> DVector<f64> {
    let mut acc: Option<DVector<f64>> = None;
    for &(s, w) in &WEIGHTS {
        let v = f(s * h) * w;
        acc = Some(match acc {
            Some(a) => a + v,
            None => v,
        });
    }
    acc.expect("stencil is non-empty") / (12.0 * h)
}

pub fn try_derivative_vector(
    f: impl Fn(f64) -> Result<DVector<f64>>,
    h: f64,
) -> Result<DVector<f64>> {
    let mut acc: Option<DVector<f64>> = None;
    for &(s, w) in &WEIGHTS {
        let v = f(s * h)? * w;
        acc = Some(match acc {
            Some(a) => a + v,
            None => v,
        });
    }
    Ok(acc.expect("stencil is non-empty") / (12.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quartics() {
        let d = derivative_scalar(|t| 1.0 + 2.0 * t + t * t - t.powi(3) + 0.5 * t.powi(4), 0.1);
        assert!((d - 2.0).abs() < 1e-13);
    }

    #[test]
    fn sine_at_default_step() {
        let d = derivative_scalar(|t| (0.3 + t).sin(), 1e-3);
        assert!((d - 0.3f64.cos()).abs() < 1e-12);
    }
}
