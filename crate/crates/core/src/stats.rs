//! Statistical checks tying simulated ensembles to the probabilistic
//! characterization of foliated Brownian motion.
//!
//! Every Monte Carlo gate has the form `statistic ≤ threshold` with the
//! threshold built from three standard errors plus, where a discretization
//! bias is possible, a step-halving estimate of it.

use std::fmt;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::geometry::{grad_e, local_frame, laplacian_e, ChartPoint, FoliatedModel, ScalarField};
use crate::sde::{fobm_frame_bundle, FramePoint, PathEnsemble, SdeConfig};

/// Outcome of one verification.
#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub n_samples: usize,
    pub passed: bool,
    pub details: Vec<(String, f64)>,
}

impl TestReport {
    /// Passes when `statistic ≤ threshold`.
    pub fn upper_bound(name: impl Into<String>, statistic: f64, threshold: f64, n_samples: usize) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            n_samples,
            passed: statistic <= threshold,
            details: Vec::new(),
        }
    }

    /// Passes when `statistic > threshold` (p-value style gates).
    pub fn lower_bound(name: impl Into<String>, statistic: f64, threshold: f64, n_samples: usize) -> Self {
        Self {
            passed: statistic > threshold,
            ..Self::upper_bound(name, statistic, threshold, n_samples)
        }
    }

    pub fn with_detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.push((key.into(), value));
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn csv_header() -> &'static str {
        "name,statistic,threshold,n_samples,passed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{},{}",
            self.name, self.statistic, self.threshold, self.n_samples, self.passed
        )
    }
}

impl fmt::Display for TestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} statistic={:.6e} threshold={:.6e} n={} {}",
            self.name,
            self.statistic,
            self.threshold,
            self.n_samples,
            self.verdict()
        )?;
        for (k, v) in &self.details {
            write!(f, " {k}={v:.6e}")?;
        }
        Ok(())
    }
}

/// Pearson chi-square statistic with its p-value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Cells entering the statistic after lumping sparse ones.
    pub cells: usize,
    pub n: u64,
}

/// Upper tail of the chi-square law.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN)
}

/// Goodness of fit of `counts` against equal cell probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> Result<ChiSquareReport> {
    let n: u64 = counts.iter().sum();
    let k = counts.len();
    let expected = n as f64 / k as f64;
    if k < 2 || expected < 5.0 {
        return Err(Error::InsufficientSamples(format!(
            "{n} samples over {k} cells give expected count {expected:.2} < 5"
        )));
    }
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    Ok(ChiSquareReport {
        statistic,
        dof: k - 1,
        p_value: chi_square_sf(statistic, k - 1),
        cells: k,
        n,
    })
}

/// Two-sample homogeneity test between histograms on the same cells.
///
/// Cells whose smaller expected count falls below 5 are pooled into one
/// combined cell; empty cells carry no information and are dropped.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> Result<ChiSquareReport> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::InsufficientSamples("an empty histogram".into()));
    }
    let fa = na as f64 / (na + nb) as f64;
    let min_share = fa.min(1.0 - fa);
    let mut cells: Vec<(u64, u64)> = Vec::new();
    let mut lumped = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        let pooled = (x + y) as f64;
        if pooled == 0.0 {
            continue;
        }
        if pooled * min_share < 5.0 {
            lumped.0 += x;
            lumped.1 += y;
        } else {
            cells.push((x, y));
        }
    }
    if lumped.0 + lumped.1 > 0 {
        if (lumped.0 + lumped.1) as f64 * min_share >= 5.0 || cells.is_empty() {
            cells.push(lumped);
        } else {
            let smallest = cells
                .iter_mut()
                .min_by_key(|c| c.0 + c.1)
                .expect("cells is non-empty");
            smallest.0 += lumped.0;
            smallest.1 += lumped.1;
        }
    }
    let mut statistic = 0.0;
    for &(x, y) in &cells {
        let pooled = (x + y) as f64;
        let ea = pooled * fa;
        let eb = pooled * (1.0 - fa);
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let dof = cells.len().saturating_sub(1);
    Ok(ChiSquareReport {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
        cells: cells.len(),
        n: na + nb,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples("empty sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    Ok(KsReport {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Terminal coordinate displacements have mean zero within 3 standard
/// errors. Only meaningful when chart coordinates are themselves harmonic
/// functions (flat charts).
pub fn martingale_test(ensemble: &PathEnsemble, coordinates_are_flat: bool) -> Result<TestReport> {
    if !coordinates_are_flat {
        return Err(Error::WrongModel {
            model: ensemble.model_id.clone(),
            reason: "coordinate functions are martingale test functions only in flat charts".into(),
        });
    }
    if ensemble.n_paths() < 2 {
        return Err(Error::InsufficientSamples("martingale test needs at least 2 paths".into()));
    }
    let mut worst: f64 = 0.0;
    let mut report_details = Vec::new();
    for i in 0..ensemble.dim {
        let disp: Vec<f64> = (0..ensemble.n_paths())
            .map(|p| ensemble.endpoint(p).get(i) - ensemble.start(p).get(i))
            .collect();
        let (mean, se) = mean_and_se(&disp);
        let z = if se > 0.0 {
            mean.abs() / se
        } else if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
        report_details.push((format!("mean_x{}", i + 1), mean));
        report_details.push((format!("se_x{}", i + 1), se));
    }
    let mut report = TestReport::upper_bound("martingale", worst, 3.0, ensemble.n_paths());
    report.details = report_details;
    Ok(report)
}

/// Adds `velocity · t` to every recorded state (fault injection for the
/// martingale negative control).
pub fn with_drift(ensemble: &PathEnsemble, velocity: &[f64]) -> PathEnsemble {
    let mut out = ensemble.clone();
    let n = out.dim;
    for path in &mut out.paths {
        for (k, &t) in ensemble.times.iter().enumerate() {
            for (s, v) in path.states[k * n..(k + 1) * n].iter_mut().zip(velocity) {
                *s += v * t;
            }
        }
    }
    out
}

/// Per-ensemble summary of `QV − ∫|grad_E f|² dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QvGap {
    /// `mean(gap) / mean(integral)`.
    pub relative_gap: f64,
    /// Standard error of the relative gap.
    pub se: f64,
    pub mean_qv: f64,
    pub mean_integral: f64,
    pub n_paths: usize,
}

/// Realized quadratic variation of `f` along each path against the left-point
/// Riemann sum of `|grad_E f|² dt`.
pub fn qv_gap<M: FoliatedModel + ?Sized>(ensemble: &PathEnsemble, f: &ScalarField, model: &M) -> Result<QvGap> {
    if ensemble.is_thinned() {
        return Err(Error::ThinnedEnsemble {
            stride: ensemble.stride,
        });
    }
    let mut gaps = Vec::with_capacity(ensemble.n_paths());
    let mut qvs = Vec::with_capacity(ensemble.n_paths());
    let mut ints = Vec::with_capacity(ensemble.n_paths());
    for p in 0..ensemble.n_paths() {
        let states = ensemble.path_states(p);
        let mut qv = 0.0;
        let mut integral = 0.0;
        for k in 0..states.len() - 1 {
            let dt = ensemble.times[k + 1] - ensemble.times[k];
            qv += (f.value(&states[k + 1]) - f.value(&states[k])).powi(2);
            let lf = local_frame(model, &states[k])?;
            let g = grad_e(model, f, &states[k])?.components;
            integral += lf.metric.inner(&g, &g) * dt;
        }
        gaps.push(qv - integral);
        qvs.push(qv);
        ints.push(integral);
    }
    let (mean_gap, se_gap) = mean_and_se(&gaps);
    let mean_qv = qvs.iter().sum::<f64>() / qvs.len() as f64;
    let mean_integral = ints.iter().sum::<f64>() / ints.len() as f64;
    let (relative_gap, se) = if mean_integral > 0.0 {
        (mean_gap / mean_integral, se_gap / mean_integral)
    } else {
        (mean_gap, se_gap)
    };
    Ok(QvGap {
        relative_gap,
        se,
        mean_qv,
        mean_integral,
        n_paths: ensemble.n_paths(),
    })
}

/// Quadratic-variation identity. With a half-step `refinement` ensemble the
/// threshold is `max(3·SE, 2·|gap(dt) − gap(dt/2)|)`, otherwise `3·SE`.
pub fn qv_identity_test<M: FoliatedModel + ?Sized>(
    ensemble: &PathEnsemble,
    f: &ScalarField,
    model: &M,
    refinement: Option<&PathEnsemble>,
) -> Result<TestReport> {
    let coarse = qv_gap(ensemble, f, model)?;
    let mut threshold = 3.0 * coarse.se;
    let mut report_bias = 0.0;
    if let Some(fine) = refinement {
        let fine = qv_gap(fine, f, model)?;
        report_bias = (coarse.relative_gap - fine.relative_gap).abs();
        threshold = threshold.max(2.0 * report_bias);
    }
    if coarse.mean_qv == 0.0 && coarse.mean_integral == 0.0 {
        threshold = threshold.max(f64::EPSILON);
    }
    Ok(
        TestReport::upper_bound("qv_identity", coarse.relative_gap.abs(), threshold, coarse.n_paths)
            .with_detail("relative_gap", coarse.relative_gap)
            .with_detail("se", coarse.se)
            .with_detail("halving_bias", report_bias)
            .with_detail("mean_qv", coarse.mean_qv)
            .with_detail("mean_integral", coarse.mean_integral),
    )
}

/// Settings of a generator check.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub delta: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Applied-noise multiplier (1 except in negative controls).
    pub noise_scale: f64,
}

impl GeneratorConfig {
    pub fn new(delta: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            delta,
            n_paths,
            seed,
            noise_scale: 1.0,
        }
    }
}

/// `2(Ê f(X_δ) − f(x))/δ` and its standard error from `n_steps` Heun steps.
fn generator_estimate<M: FoliatedModel + ?Sized>(
    model: &M,
    u0: &FramePoint,
    f: &ScalarField,
    cfg: &GeneratorConfig,
    n_steps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let sde = SdeConfig::new(cfg.delta / n_steps as f64, n_steps)
        .paths(cfg.n_paths)
        .seed(seed)
        .record_noise(false)
        .noise_scale(cfg.noise_scale)
        .endpoints_only();
    let ensemble = fobm_frame_bundle(model, u0, &sde)?;
    let f0 = f.value(&u0.base);
    let diffs: Vec<f64> = (0..ensemble.n_paths())
        .map(|p| f.value(&ensemble.endpoint(p)) - f0)
        .collect();
    let (mean, se) = mean_and_se(&diffs);
    Ok((2.0 * mean / cfg.delta, 2.0 * se / cfg.delta))
}

/// Semigroup derivative at `x` against `Δ_E f(x)`. The threshold is
/// `3·SE + 2|D(δ) − D(δ/2)|`, the second estimate using two half steps and
/// an independent noise stream.
pub fn generator_test<M: FoliatedModel + ?Sized>(
    model: &M,
    x: &ChartPoint,
    f: &ScalarField,
    cfg: &GeneratorConfig,
) -> Result<TestReport> {
    if cfg.delta.is_nan() || cfg.delta <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: "must be positive".into(),
        });
    }
    let u0 = FramePoint::at(model, x)?;
    let exact = laplacian_e(model, f, x)?;
    let (d, se) = generator_estimate(model, &u0, f, cfg, 1, cfg.seed)?;
    let (d_half, _) = generator_estimate(model, &u0, f, cfg, 2, cfg.seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let bias = (d - d_half).abs();
    let mut threshold = 3.0 * se + 2.0 * bias;
    if threshold == 0.0 {
        threshold = 1e-12;
    }
    Ok(TestReport::upper_bound("generator", (d - exact).abs(), threshold, cfg.n_paths)
        .with_detail("x1", x.get(0))
        .with_detail("estimate", d)
        .with_detail("laplacian_e", exact)
        .with_detail("se", se)
        .with_detail("halving_bias", bias))
}

/// Strong-error refinement study of the frame-bundle integrator against
/// the flow construction, both driven by the same Brownian paths.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionGapStudy {
    pub dts: Vec<f64>,
    /// Mean over paths of `sup_t |X_t − φ_{B_t}(x0)|` (max norm in chart
    /// coordinates, on the recorded grid).
    pub mean_sup_gaps: Vec<f64>,
    /// Least-squares slope of `log gap` against `log dt`.
    pub slope: f64,
}

/// Runs the frame-bundle scheme at each step in `dts` over `[0, horizon]`
/// with increments summed from one Brownian path sampled at the finest
/// step, and compares with the flow construction `φ_{B_t}(x0)`.
pub fn construction_gap_study<M: FoliatedModel + ?Sized>(
    model: &M,
    x0: &ChartPoint,
    horizon: f64,
    dts: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<ConstructionGapStudy> {
    use rayon::prelude::*;

    if model.leaf_dim() != 1 || dts.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "dts",
            reason: "needs a one-dimensional foliation and at least two step sizes".into(),
        });
    }
    let finest = dts.iter().copied().fold(f64::INFINITY, f64::min);
    let fine_steps = (horizon / finest).round() as usize;
    let factors: Vec<usize> = dts.iter().map(|dt| (dt / finest).round() as usize).collect();
    if factors.iter().any(|&f| f == 0 || !fine_steps.is_multiple_of(f)) {
        return Err(Error::InvalidParameter {
            name: "dts",
            reason: "every step must be a multiple of the finest one and divide the horizon".into(),
        });
    }
    let u0 = FramePoint::at(model, x0)?;
    let per_path = (0..n_paths)
        .into_par_iter()
        .map(|path| -> Result<Vec<f64>> {
            let fine = crate::rng::brownian_increments(seed, path as u64, fine_steps, finest);
            factors
                .iter()
                .map(|&factor| {
                    let noise: Vec<f64> = fine.chunks(factor).map(|c| c.iter().sum()).collect();
                    let cfg = SdeConfig::new(finest * factor as f64, noise.len()).record_noise(false);
                    let rec = crate::sde::frame_bundle_path_with_noise(model, &u0, &cfg, &noise, path)?;
                    let mut b = 0.0;
                    let mut worst: f64 = 0.0;
                    let n = model.dim();
                    for (k, state) in rec.states.chunks(n).enumerate() {
                        if k > 0 {
                            b += noise[k - 1];
                        }
                        let exact = crate::sde::leaf_flow(model, x0, b)?;
                        for (a, e) in state.iter().zip(exact.coords().iter()) {
                            worst = worst.max((a - e).abs());
                        }
                    }
                    Ok(worst)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_sup_gaps: Vec<f64> = (0..dts.len())
        .map(|j| per_path.iter().map(|g| g[j]).sum::<f64>() / n_paths as f64)
        .collect();
    let lx: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = mean_sup_gaps.iter().map(|g| g.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(ConstructionGapStudy {
        dts: dts.to_vec(),
        mean_sup_gaps,
        slope: sxy / sxx,
    })
}
