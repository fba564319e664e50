//! Test functions with analytic partials and deterministic sample points.

use std::f64::consts::PI;

use folbm::geometry::{ChartPoint, ScalarField};
use folbm::models::EmbeddedTorusModel;
use folbm::rng::{PathRng, StreamPurpose};
use nalgebra::{DMatrix, DVector};

/// One term `amplitude · sin(k·x + phase)` of a trigonometric polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub amplitude: f64,
    pub wave: Vec<f64>,
    pub phase: f64,
}

impl Mode {
    fn argument(&self, p: &ChartPoint) -> f64 {
        self.wave.iter().enumerate().map(|(i, k)| k * p.get(i)).sum::<f64>() + self.phase
    }
}

/// `c0 + Σ a_k sin(k·x + φ_k)` with exact first and second partials.
pub fn trig_polynomial(c0: f64, modes: Vec<Mode>) -> ScalarField {
    let m1 = modes.clone();
    let m2 = modes.clone();
    ScalarField::new(move |p: &ChartPoint| {
        c0 + modes.iter().map(|m| m.amplitude * m.argument(p).sin()).sum::<f64>()
    })
    .with_partials(move |p| {
        let mut g = DVector::zeros(p.dim());
        for m in &m1 {
            let c = m.amplitude * m.argument(p).cos();
            for (i, k) in m.wave.iter().enumerate() {
                g[i] += c * k;
            }
        }
        g
    })
    .with_second_partials(move |p| {
        let n = p.dim();
        let mut h = DMatrix::zeros(n, n);
        for m in &m2 {
            let s = -m.amplitude * m.argument(p).sin();
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += s * m.wave[i] * m.wave[j];
                }
            }
        }
        h
    })
}

/// A random trigonometric polynomial on `ℝ^n` with up to three modes of
/// integer wave numbers in `[-2, 2]`.
pub fn random_trig_polynomial(n: usize, rng: &mut PathRng) -> ScalarField {
    let count = 1 + (3.0 * rng.uniform()) as usize;
    let modes = (0..count)
        .map(|_| Mode {
            amplitude: 2.0 * rng.uniform() - 1.0,
            wave: (0..n).map(|_| (5.0 * rng.uniform()).floor() - 2.0).collect(),
            phase: 2.0 * PI * rng.uniform(),
        })
        .collect();
    trig_polynomial(2.0 * rng.uniform() - 1.0, modes)
}

/// `sin x cos y`.
pub fn sin_cos() -> ScalarField {
    trig_polynomial(
        0.0,
        vec![
            Mode {
                amplitude: 0.5,
                wave: vec![1.0, 1.0],
                phase: 0.0,
            },
            Mode {
                amplitude: 0.5,
                wave: vec![1.0, -1.0],
                phase: 0.0,
            },
        ],
    )
}

/// `sin x` on the plane.
pub fn sin_x() -> ScalarField {
    trig_polynomial(
        0.0,
        vec![Mode {
            amplitude: 1.0,
            wave: vec![1.0, 0.0],
            phase: 0.0,
        }],
    )
}

/// `cos x` on the plane.
pub fn cos_x() -> ScalarField {
    trig_polynomial(
        0.0,
        vec![Mode {
            amplitude: 1.0,
            wave: vec![1.0, 0.0],
            phase: PI / 2.0,
        }],
    )
}

/// `h(x) = 1 / (4π² (b + cos x))`, the harmonic density of the torus model
/// against its Riemannian volume.
pub fn torus_density(model: &EmbeddedTorusModel) -> ScalarField {
    let b = model.b();
    let c = 1.0 / (4.0 * PI * PI);
    ScalarField::new(move |p: &ChartPoint| c / (b + p.get(0).cos()))
        .with_partials(move |p| {
            let x = p.get(0);
            let r = b + x.cos();
            DVector::from_vec(vec![c * x.sin() / (r * r), 0.0])
        })
        .with_second_partials(move |p| {
            let x = p.get(0);
            let r = b + x.cos();
            let d2 = c * (x.cos() / (r * r) + 2.0 * x.sin().powi(2) / r.powi(3));
            DMatrix::from_row_slice(2, 2, &[d2, 0.0, 0.0, 0.0])
        })
}

/// Deterministic pseudo-random points in `[0, 2π)^n`.
pub fn sample_points(n: usize, count: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = PathRng::new(seed, 0, StreamPurpose::Auxiliary);
    (0..count)
        .map(|_| ChartPoint::new((0..n).map(|_| 2.0 * PI * rng.uniform()).collect::<Vec<_>>()))
        .collect()
}

/// The `k × k` grid `(2πi/k, 2πj/k)`.
pub fn grid_points(k: usize) -> Vec<ChartPoint> {
    let step = 2.0 * PI / k as f64;
    (0..k)
        .flat_map(|i| (0..k).map(move |j| ChartPoint::new(vec![i as f64 * step, j as f64 * step])))
        .collect()
}
