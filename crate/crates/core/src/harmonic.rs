//! Harmonic measures: the torus density equation, the density PDE residual,
//! Monte Carlo occupation and invariance estimates, and quadrature checks.
//!
//! A measure `h μ_g` is harmonic when `∫ Δ_E f · h dμ_g = 0` for every
//! test function, which for smooth `h` is the pointwise equation
//! `div(grad_E h − h κ) = 0`.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{
    div, grad_e, kappa, laplacian_e, metric_at, wrap_angle, ChartPoint, FoliatedModel, ScalarField,
};
use crate::io::format_decimal;
use crate::rng::{PathRng, StreamPurpose};
use crate::sde::{fobm_frame_bundle_from, FramePoint, SdeConfig};
use crate::stats::{chi_square_homogeneity, chi_square_uniform, ChiSquareReport};

/// Burn-in time discarded by long-run occupation estimates.
pub const DEFAULT_BURN_IN: f64 = 10.0;

/// Largest smallest-singular-value accepted as a numerical null vector.
pub const NULL_VECTOR_TOL: f64 = 1e-6;

/// Density of a harmonic measure with respect to the Riemannian volume of
/// the torus of revolution, sampled on a uniform grid in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityProfile {
    pub b: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityProfile {
    /// Samples `h` on `n` uniform points of `[0, 2π)`.
    pub fn from_fn(b: f64, n: usize, h: impl Fn(f64) -> f64) -> Self {
        let grid: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let values = grid.iter().map(|&x| h(x)).collect();
        Self { b, grid, values }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `∫∫ h(x) (b + cos x) dx dy` by the trapezoid rule (spectrally
    /// accurate for periodic integrands).
    pub fn volume_integral(&self) -> f64 {
        let dx = 2.0 * PI / self.len() as f64;
        let line: f64 = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(&x, &h)| h * (self.b + x.cos()))
            .sum();
        2.0 * PI * dx * line
    }

    /// `max_j |values_j − h(grid_j)|`.
    pub fn linf_distance(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| (v - h(x)).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `x,h` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,h")?;
        for (x, h) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{},{}", format_decimal(*x), format_decimal(*h))?;
        }
        Ok(())
    }
}

/// Fourier first and second differentiation matrices on `n` (even) uniform
/// points of `[0, 2π)`.
pub fn fourier_differentiation(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = 2.0 * PI / n as f64;
    let mut d1 = DMatrix::zeros(n, n);
    let mut d2 = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if j == k {
                d2[(j, k)] = -PI * PI / (3.0 * h * h) - 1.0 / 6.0;
                continue;
            }
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            let half = (j as f64 - k as f64) * h / 2.0;
            d1[(j, k)] = 0.5 * sign / half.tan();
            d2[(j, k)] = -0.5 * sign / (half.sin() * half.sin());
        }
    }
    (d1, d2)
}

/// Outcome of a collocation solve, before acceptance checks.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySolve {
    pub profile: DensityProfile,
    /// Smallest singular value of the collocation operator.
    pub sigma_min: f64,
    /// Second smallest singular value; a clear gap means a one-dimensional
    /// numerical null space.
    pub sigma_next: f64,
    pub warnings: Vec<String>,
}

fn validate_b(b: f64) -> Result<()> {
    if !b.is_finite() || b <= 1.0 {
        return Err(Error::InvalidParameter {
            name: "b",
            reason: format!("torus radius ratio must satisfy b > 1, got {b}"),
        });
    }
    Ok(())
}

/// Collocation solve without the grid and null-vector acceptance checks;
/// violations are reported as warnings. Needs an even `n ≥ 4`.
pub fn density_ode_solve_relaxed(b: f64, n: usize) -> Result<DensitySolve> {
    validate_b(b)?;
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid {
            n,
            reason: "collocation needs an even number of points, at least 4",
        });
    }
    let mut warnings = Vec::new();
    if n < 32 || !n.is_power_of_two() {
        warnings.push(format!(
            "grid of {n} points is below the supported resolution (power of two, at least 32)"
        ));
    }
    let (d1, d2) = fourier_differentiation(n);
    let grid: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let r = DVector::from_iterator(n, grid.iter().map(|x| b + x.cos()));
    let s = DVector::from_iterator(n, grid.iter().map(|x| x.sin()));
    let c = DVector::from_iterator(n, grid.iter().map(|x| x.cos()));
    let op = DMatrix::from_diagonal(&r) * d2 - DMatrix::from_diagonal(&(s * 2.0)) * d1
        - DMatrix::from_diagonal(&c);

    let svd = op.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let sigma_min = svd.singular_values[order[0]];
    let sigma_next = svd.singular_values[order[1]];
    if sigma_min > NULL_VECTOR_TOL {
        warnings.push(format!(
            "smallest singular value {sigma_min:e} exceeds {NULL_VECTOR_TOL:e}; no numerical null vector"
        ));
    }
    let mut values: Vec<f64> = v_t.row(order[0]).iter().copied().collect();
    if values.iter().sum::<f64>() < 0.0 {
        values.iter_mut().for_each(|v| *v = -*v);
    }
    let mut profile = DensityProfile { b, grid, values };
    let mass = profile.volume_integral();
    profile.values.iter_mut().for_each(|v| *v /= mass);
    if profile.values.iter().any(|&v| v <= 0.0) {
        warnings.push("null vector changes sign".to_string());
    }
    Ok(DensitySolve {
        profile,
        sigma_min,
        sigma_next,
        warnings,
    })
}

/// Solves `(b + cos x) h'' − 2 sin x h' − cos x h = 0` for the positive
/// periodic `h` normalized against the torus volume, by Fourier collocation
/// on `n` points and a null vector of the discrete operator.
///
/// ```
/// use folbm::harmonic::example3_density_ode_solve;
/// use std::f64::consts::PI;
/// let profile = example3_density_ode_solve(2.0, 64)?;
/// let exact = |x: f64| 1.0 / (4.0 * PI * PI * (2.0 + x.cos()));
/// assert!(profile.linf_distance(exact) < 1e-10);
/// # Ok::<(), folbm::Error>(())
/// ```
pub fn example3_density_ode_solve(b: f64, n: usize) -> Result<DensityProfile> {
    validate_b(b)?;
    if n < 32 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid {
            n,
            reason: "the grid must be a power of two with at least 32 points",
        });
    }
    let solve = density_ode_solve_relaxed(b, n)?;
    if solve.sigma_min > NULL_VECTOR_TOL {
        return Err(Error::NoNullVector {
            sigma_min: solve.sigma_min,
        });
    }
    if solve.profile.values.iter().any(|&v| v <= 0.0) {
        return Err(Error::SignChange);
    }
    Ok(solve.profile)
}

/// `div(grad_E h − h κ)` at `x`.
pub fn harmonic_residual<M: FoliatedModel + ?Sized>(model: &M, h: &ScalarField, x: &ChartPoint) -> Result<f64> {
    let field = |y: &ChartPoint| -> Result<DVector<f64>> {
        let g = grad_e(model, h, y)?.components;
        let k = kappa(model, y)?.components;
        Ok(g - k * h.value(y))
    };
    div(model, &field, x)
}

/// Coordinate histogram on `[0, 2π)^n` with equal bins per axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupationHistogram {
    pub bins: Vec<usize>,
    /// Row-major with the first coordinate varying slowest.
    pub counts: Vec<u64>,
    pub total: u64,
}

impl OccupationHistogram {
    pub fn new(bins: Vec<usize>) -> Self {
        let cells = bins.iter().product();
        Self {
            bins,
            counts: vec![0; cells],
            total: 0,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.counts.len()
    }

    /// Cell index of a point after wrapping each coordinate into `[0, 2π)`.
    pub fn cell_of(&self, x: &ChartPoint) -> usize {
        let mut idx = 0;
        for (axis, &nb) in self.bins.iter().enumerate() {
            let u = wrap_angle(x.get(axis)) / (2.0 * PI);
            let b = ((u * nb as f64) as usize).min(nb - 1);
            idx = idx * nb + b;
        }
        idx
    }

    pub fn add(&mut self, x: &ChartPoint) {
        let c = self.cell_of(x);
        self.counts[c] += 1;
        self.total += 1;
    }

    /// Center of a cell.
    pub fn cell_center(&self, cell: usize) -> ChartPoint {
        let mut rem = cell;
        let mut coords = vec![0.0; self.bins.len()];
        for (axis, &nb) in self.bins.iter().enumerate().rev() {
            let b = rem % nb;
            rem /= nb;
            coords[axis] = 2.0 * PI * (b as f64 + 0.5) / nb as f64;
        }
        ChartPoint::new(coords)
    }

    fn cell_area(&self) -> f64 {
        self.bins.iter().map(|&nb| 2.0 * PI / nb as f64).product()
    }

    /// Empirical coordinate density per cell (integrates to 1 against
    /// Lebesgue measure).
    pub fn coordinate_density(&self) -> Vec<f64> {
        let norm = self.total.max(1) as f64 * self.cell_area();
        self.counts.iter().map(|&c| c as f64 / norm).collect()
    }

    /// Empirical density with respect to `μ_g`: the coordinate density
    /// divided by `√det g` at each cell center.
    pub fn volume_density<M: FoliatedModel + ?Sized>(&self, model: &M) -> Result<Vec<f64>> {
        self.coordinate_density()
            .into_iter()
            .enumerate()
            .map(|(cell, d)| Ok(d / metric_at(model, &self.cell_center(cell))?.sqrt_det_g))
            .collect()
    }

    /// Chi-square goodness of fit against the uniform coordinate law.
    pub fn chi_square_uniform(&self) -> Result<ChiSquareReport> {
        chi_square_uniform(&self.counts)
    }

    /// Writes `bin_x,bin_y,count` rows (two-dimensional histograms).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        if self.bins.len() != 2 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "occupation CSV needs a two-dimensional histogram",
            ));
        }
        writeln!(w, "bin_x,bin_y,count")?;
        for (cell, count) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{}", cell / self.bins[1], cell % self.bins[1], count)?;
        }
        Ok(())
    }
}

/// Histogram of every recorded state with `t ≥ burn_in`.
pub fn occupation_estimate_after(
    ensemble: &crate::sde::PathEnsemble,
    bins: usize,
    burn_in: f64,
) -> OccupationHistogram {
    let mut hist = OccupationHistogram::new(vec![bins; ensemble.dim]);
    for path in 0..ensemble.n_paths() {
        for (k, &t) in ensemble.times.iter().enumerate() {
            if t >= burn_in {
                hist.add(&ensemble.state(path, k));
            }
        }
    }
    hist
}

/// Histogram of every recorded state of the ensemble.
pub fn occupation_estimate(ensemble: &crate::sde::PathEnsemble, bins: usize) -> OccupationHistogram {
    occupation_estimate_after(ensemble, bins, f64::NEG_INFINITY)
}

/// Draws one initial point per path from `sampler` (each path with its own
/// initial-law stream), evolves it to time `t` with the frame-bundle
/// integrator and compares the final histogram with that of an independent
/// sample from the same law, by a two-sample chi-square homogeneity test.
///
/// `cfg.dt` is shortened so that it divides `t`; `t = 0` compares the two
/// initial samples.
pub fn invariance_test<M, S>(
    model: &M,
    sampler: S,
    t: f64,
    cfg: &SdeConfig,
    bins: usize,
) -> Result<ChiSquareReport>
where
    M: FoliatedModel + ?Sized,
    S: Fn(&mut PathRng) -> ChartPoint + Sync,
{
    cfg.validate()?;
    let cells = bins.pow(model.dim() as u32);
    if cfg.n_paths < 5 * cells {
        return Err(Error::InsufficientSamples(format!(
            "{} paths for {cells} cells; at least 5 per cell are needed",
            cfg.n_paths
        )));
    }
    let starts: Vec<ChartPoint> = (0..cfg.n_paths)
        .map(|i| sampler(&mut PathRng::new(cfg.seed, i as u64, StreamPurpose::Initial)))
        .collect();
    // The reference histogram uses an independent draw from the same law so
    // that the two samples compared are independent.
    let mut initial = OccupationHistogram::new(vec![bins; model.dim()]);
    (0..cfg.n_paths).for_each(|i| initial.add(&sampler(&mut PathRng::new(cfg.seed, i as u64, StreamPurpose::Auxiliary))));
    let mut last = OccupationHistogram::new(vec![bins; model.dim()]);
    starts.iter().for_each(|x| last.add(x));
    if t > 0.0 {
        let n_steps = (t / cfg.dt).ceil().max(1.0) as usize;
        let mut run = cfg.clone();
        run.dt = t / n_steps as f64;
        run.n_steps = n_steps;
        run.record_noise = false;
        run = run.endpoints_only();
        let frames = starts
            .iter()
            .map(|x| FramePoint::at(model, x))
            .collect::<Result<Vec<_>>>()?;
        let ensemble = fobm_frame_bundle_from(model, &frames, &run)?;
        last = OccupationHistogram::new(vec![bins; model.dim()]);
        (0..ensemble.n_paths()).for_each(|p| last.add(&ensemble.endpoint(p)));
    }
    chi_square_homogeneity(&initial.counts, &last.counts)
}

/// `∫ Δ_E f · density dμ_g` over `[0, 2π)²` by the tensor-product trapezoid
/// rule on a `grid × grid` mesh.
pub fn harmonicity_quadrature<M: FoliatedModel + ?Sized>(
    model: &M,
    density: &ScalarField,
    f: &ScalarField,
    grid: usize,
) -> Result<f64> {
    if grid == 0 {
        return Err(Error::InvalidGrid {
            n: grid,
            reason: "quadrature needs at least one node per axis",
        });
    }
    let n = model.dim();
    let step = 2.0 * PI / grid as f64;
    let nodes = grid.pow(n as u32);
    let mut acc = 0.0;
    for idx in 0..nodes {
        let mut rem = idx;
        let coords: Vec<f64> = (0..n)
            .map(|_| {
                let k = rem % grid;
                rem /= grid;
                k as f64 * step
            })
            .collect();
        let x = ChartPoint::new(coords);
        let vol = metric_at(model, &x)?.sqrt_det_g;
        acc += laplacian_e(model, f, &x)? * density.value(&x) * vol;
    }
    Ok(acc * step.powi(n as i32))
}
