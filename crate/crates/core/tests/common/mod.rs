#![allow(dead_code)]

use folbm::geometry::{ChartPoint, ScalarField};
use nalgebra::{DMatrix, DVector};

/// `sin x cos y` with analytic partials.
pub fn sin_cos() -> ScalarField {
    ScalarField::new(|p: &ChartPoint| p.get(0).sin() * p.get(1).cos())
        .with_partials(|p| {
            let (x, y) = (p.get(0), p.get(1));
            DVector::from_vec(vec![x.cos() * y.cos(), -x.sin() * y.sin()])
        })
        .with_second_partials(|p| {
            let (x, y) = (p.get(0), p.get(1));
            DMatrix::from_row_slice(
                2,
                2,
                &[-x.sin() * y.cos(), -x.cos() * y.sin(), -x.cos() * y.sin(), -x.sin() * y.cos()],
            )
        })
}

/// `sin(x + y)` with analytic partials.
pub fn sin_sum() -> ScalarField {
    ScalarField::new(|p: &ChartPoint| (p.get(0) + p.get(1)).sin())
        .with_partials(|p| {
            let c = (p.get(0) + p.get(1)).cos();
            DVector::from_vec(vec![c, c])
        })
        .with_second_partials(|p| {
            let s = -(p.get(0) + p.get(1)).sin();
            DMatrix::from_element(2, 2, s)
        })
}

/// A function of the first coordinate only, from its value and two
/// derivatives.
pub fn of_x(
    f: fn(f64) -> f64,
    df: fn(f64) -> f64,
    d2f: fn(f64) -> f64,
) -> ScalarField {
    ScalarField::new(move |p: &ChartPoint| f(p.get(0)))
        .with_partials(move |p| {
            let mut g = DVector::zeros(p.dim());
            g[0] = df(p.get(0));
            g
        })
        .with_second_partials(move |p| {
            let mut h = DMatrix::zeros(p.dim(), p.dim());
            h[(0, 0)] = d2f(p.get(0));
            h
        })
}

/// Trigonometric polynomial `c0 + Σ a_k sin(k·x + φ_k)` on ℝ^n with analytic
/// partials; `modes` holds `(amplitude, wave vector, phase)`.
pub fn trig_field(c0: f64, modes: Vec<(f64, Vec<f64>, f64)>) -> ScalarField {
    let m1 = modes.clone();
    let m2 = modes.clone();
    ScalarField::new(move |p: &ChartPoint| {
        c0 + modes
            .iter()
            .map(|(a, k, phi)| a * (dot(k, p) + phi).sin())
            .sum::<f64>()
    })
    .with_partials(move |p| {
        let mut g = DVector::zeros(p.dim());
        for (a, k, phi) in &m1 {
            let c = a * (dot(k, p) + phi).cos();
            for i in 0..p.dim() {
                g[i] += c * k[i];
            }
        }
        g
    })
    .with_second_partials(move |p| {
        let n = p.dim();
        let mut h = DMatrix::zeros(n, n);
        for (a, k, phi) in &m2 {
            let s = -a * (dot(k, p) + phi).sin();
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += s * k[i] * k[j];
                }
            }
        }
        h
    })
}

fn dot(k: &[f64], p: &ChartPoint) -> f64 {
    k.iter().enumerate().map(|(i, ki)| ki * p.get(i)).sum()
}

/// Deterministic pseudo-random points in `[0, 2π)^n`.
pub fn sample_points(n: usize, count: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = folbm::rng::PathRng::new(seed, 0, folbm::rng::StreamPurpose::Auxiliary);
    (0..count)
        .map(|_| {
            ChartPoint::new(
                (0..n)
                    .map(|_| 2.0 * std::f64::consts::PI * rng.uniform())
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}
