//! The verification suite run by `folbm verify`. Each property returns a
//! [`TestReport`]; sample sizes are fixed so that reports are comparable
//! across runs.

use std::f64::consts::PI;

use folbm::geometry::{
    decomposition_residual, div, div_e, grad_e, grad_e_basis, kappa, laplacian_e, laplacian_e_via_div,
    local_frame, ChartPoint, FoliatedModel, TOL_ROUTES_ANALYTIC,
};
use folbm::harmonic::{density_ode_solve_relaxed, harmonic_residual, invariance_test};
use folbm::models::{EmbeddedTorusModel, KroneckerModel, ProductModel};
use folbm::rng::{PathRng, StreamPurpose};
use folbm::sde::{fobm_flow_1d, fobm_frame_bundle, fobm_frame_bundle_coarsened, FramePoint, SdeConfig};
use folbm::stats::{generator_test, martingale_test, qv_identity_test, with_drift, GeneratorConfig, TestReport};
use folbm::Result;
use nalgebra::DVector;

use crate::fields;

/// Properties in report order.
pub const PROPERTIES: &[&str] = &[
    "operators",
    "decomposition",
    "kappa",
    "density",
    "harmonic_residual",
    "qv",
    "generator",
    "invariance",
    "invariance_control",
    "martingale",
    "martingale_control",
    "leaf_confinement",
];

/// Fault hooks for negative controls of the suite itself.
pub const BREAKABLE: &[&str] = &["qv", "generator"];

/// Noise multiplier applied by `--break qv`.
pub const QV_FAULT_SCALE: f64 = 1.1;
/// Noise multiplier applied by `--break generator`.
pub const GENERATOR_FAULT_SCALE: f64 = 1.5;

/// Models and seeds shared by every property.
#[derive(Clone, Debug)]
pub struct Suite {
    pub torus: EmbeddedTorusModel,
    pub kronecker: KroneckerModel,
    pub seed: u64,
    pub grid: usize,
    pub qv_noise_scale: f64,
    pub generator_noise_scale: f64,
}

impl Suite {
    pub fn new(torus: EmbeddedTorusModel, kronecker: KroneckerModel, seed: u64, grid: usize) -> Self {
        Self {
            torus,
            kronecker,
            seed,
            grid,
            qv_noise_scale: 1.0,
            generator_noise_scale: 1.0,
        }
    }

    pub fn run(&self, name: &str) -> Result<TestReport> {
        match name {
            "operators" => operators(&self.models()),
            "decomposition" => decomposition(&self.torus, &self.kronecker),
            "kappa" => kappa_identity(&self.models(), self.seed),
            "density" => density(self.torus.b(), self.grid),
            "harmonic_residual" => harmonic_residual_check(&self.torus, self.seed),
            "qv" => quadratic_variation(&self.torus, self.seed, self.qv_noise_scale),
            "generator" => generator(&self.torus, self.seed, self.generator_noise_scale),
            "invariance" => invariance(&self.torus, self.seed),
            "invariance_control" => invariance_control(&self.torus, self.seed),
            "martingale" => martingale(&self.kronecker, self.seed).map(|(r, _)| r),
            "martingale_control" => martingale(&self.kronecker, self.seed).map(|(_, r)| r),
            "leaf_confinement" => leaf_confinement_flow(&self.torus, self.seed),
            other => Err(folbm::Error::InvalidParameter {
                name: "only",
                reason: format!("unknown property `{other}`"),
            }),
        }
    }

    fn models(&self) -> Vec<Box<dyn FoliatedModel>> {
        vec![
            Box::new(self.torus.clone()),
            Box::new(self.kronecker.clone()),
            Box::new(ProductModel::new(1, 1)),
            Box::new(ProductModel::new(1, 2)),
        ]
    }
}

/// Leaf gradient and leaf Laplacian by two independent routes, on every
/// model, at 50 points, for random trigonometric test functions.
pub fn operators(models: &[Box<dyn FoliatedModel>]) -> Result<TestReport> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut rng = PathRng::new(0, 1, StreamPurpose::Auxiliary);
    for model in models {
        let model = model.as_ref();
        for p in &fields::sample_points(model.dim(), 50, 11) {
            let f = fields::random_trig_polynomial(model.dim(), &mut rng);
            let a = grad_e(model, &f, p)?.components;
            let b = grad_e_basis(model, &f, p)?.components;
            worst = worst.max((a - b).amax());
            let l1 = laplacian_e(model, &f, p)?;
            let l2 = laplacian_e_via_div(model, &f, p)?;
            worst = worst.max((l1 - l2).abs());
            count += 1;
        }
    }
    Ok(TestReport::upper_bound("operators", worst, TOL_ROUTES_ANALYTIC, count))
}

/// `|Δf − (Δ_E f − κ f) − div(π^⊥ grad f)|` for `f = sin x cos y` on a
/// 10 × 10 grid of the torus and Kronecker models.
pub fn decomposition(torus: &EmbeddedTorusModel, kronecker: &KroneckerModel) -> Result<TestReport> {
    let f = fields::sin_cos();
    let mut worst: f64 = 0.0;
    let points = fields::grid_points(10);
    for p in &points {
        worst = worst.max(decomposition_residual(torus, &f, p)?.abs());
        worst = worst.max(decomposition_residual(kronecker, &f, p)?.abs());
    }
    Ok(TestReport::upper_bound("decomposition", worst, 1e-6, 2 * points.len()))
}

/// `|κ♭(X) − (div_E X − div X)|` over 20 random sections `X = Σ f_i u_i`
/// of `E` and 50 points per model.
pub fn kappa_identity(models: &[Box<dyn FoliatedModel>], seed: u64) -> Result<TestReport> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (mi, model) in models.iter().enumerate() {
        let model = model.as_ref();
        let n = model.dim();
        let points = fields::sample_points(n, 50, seed.wrapping_add(100 + mi as u64));
        let mut rng = PathRng::new(seed, 1000 + mi as u64, StreamPurpose::Auxiliary);
        for _ in 0..20 {
            let coefficients: Vec<_> = (0..model.leaf_dim())
                .map(|_| fields::random_trig_polynomial(n, &mut rng))
                .collect();
            let section = |y: &ChartPoint| -> Result<DVector<f64>> {
                let lf = local_frame(model, y)?;
                let mut v = DVector::zeros(n);
                for (i, c) in coefficients.iter().enumerate() {
                    v += lf.leaf_vector(i) * c.value(y);
                }
                Ok(v)
            };
            for p in &points {
                let lf = local_frame(model, p)?;
                let k = kappa(model, p)?.components;
                let lhs = lf.metric.inner(&k, &section(p)?);
                let rhs = div_e(model, &section, p)? - div(model, &section, p)?;
                worst = worst.max((lhs - rhs).abs());
                count += 1;
            }
        }
    }
    Ok(TestReport::upper_bound("kappa", worst, 1e-5, count))
}

/// Sup-norm gap between the collocation solution of the density equation
/// on `grid` points and `1 / (4π² (b + cos x))`.
pub fn density(b: f64, grid: usize) -> Result<TestReport> {
    let solve = density_ode_solve_relaxed(b, grid)?;
    let exact = |x: f64| 1.0 / (4.0 * PI * PI * (b + x.cos()));
    let gap = solve.profile.linf_distance(exact);
    let mut report = TestReport::upper_bound("density", gap, 1e-8, grid)
        .with_detail("b", b)
        .with_detail("sigma_min", solve.sigma_min)
        .with_detail("sigma_next", solve.sigma_next);
    if !solve.warnings.is_empty() {
        report.passed = false;
    }
    Ok(report)
}

/// `|div(grad_E h − h κ)|` for the closed-form density at 100 points.
pub fn harmonic_residual_check(torus: &EmbeddedTorusModel, seed: u64) -> Result<TestReport> {
    let h = fields::torus_density(torus);
    let mut worst: f64 = 0.0;
    for p in fields::sample_points(2, 100, seed.wrapping_add(7)) {
        worst = worst.max(harmonic_residual(torus, &h, &p)?.abs());
    }
    Ok(TestReport::upper_bound("harmonic_residual", worst, 1e-5, 100))
}

/// Quadratic-variation identity for `f = sin x`: 1000 paths, `dt = 1e-3`,
/// `T = 1`, with a companion run at `2 dt` driven by the same noise.
pub fn quadratic_variation(torus: &EmbeddedTorusModel, seed: u64, noise_scale: f64) -> Result<TestReport> {
    let f = fields::sin_x();
    let u0 = FramePoint::at(torus, &ChartPoint::new(vec![0.0, 0.0]))?;
    let cfg = SdeConfig::new(1e-3, 1000)
        .paths(1000)
        .seed(seed)
        .record_noise(false)
        .noise_scale(noise_scale);
    let fine = fobm_frame_bundle(torus, &u0, &cfg)?;
    let coarse = fobm_frame_bundle_coarsened(torus, &u0, &cfg, 2)?;
    let mut r = qv_identity_test(&fine, &f, torus, Some(&coarse))?;
    r.name = "qv".into();
    Ok(r)
}

/// Semigroup derivative against `Δ_E cos x` at five grid points,
/// `δ = 1e-3`, 10⁵ paths each. The statistic is the worst ratio of error to
/// per-point threshold.
pub fn generator(torus: &EmbeddedTorusModel, seed: u64, noise_scale: f64) -> Result<TestReport> {
    let f = fields::cos_x();
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for k in 0..5 {
        let x = ChartPoint::new(vec![2.0 * PI * k as f64 / 5.0, 0.0]);
        let cfg = GeneratorConfig {
            noise_scale,
            ..GeneratorConfig::new(1e-3, 100_000, seed.wrapping_add(k))
        };
        let r = generator_test(torus, &x, &f, &cfg)?;
        worst = worst.max(r.statistic / r.threshold);
        details.push((format!("error_{k}"), r.statistic));
        details.push((format!("threshold_{k}"), r.threshold));
    }
    let mut report = TestReport::upper_bound("generator", worst, 1.0, 500_000);
    report.details = details;
    Ok(report)
}

fn uniform_law(rng: &mut PathRng) -> ChartPoint {
    ChartPoint::new(vec![2.0 * PI * rng.uniform(), 2.0 * PI * rng.uniform()])
}

fn concentrated_law(rng: &mut PathRng) -> ChartPoint {
    ChartPoint::new(vec![0.05 * rng.gaussian(), 2.0 * PI * rng.uniform()])
}

fn invariance_config(seed: u64) -> SdeConfig {
    SdeConfig::new(0.1, 10).paths(100_000).seed(seed)
}

/// Chi-square homogeneity of the uniform coordinate law before and after
/// evolving 10⁵ paths to `t = 1`, on 16 × 16 bins.
pub fn invariance(torus: &EmbeddedTorusModel, seed: u64) -> Result<TestReport> {
    let r = invariance_test(torus, uniform_law, 1.0, &invariance_config(seed), 16)?;
    Ok(TestReport::lower_bound("invariance", r.p_value, 0.01, r.n as usize)
        .with_detail("chi_square", r.statistic)
        .with_detail("dof", r.dof as f64))
}

/// The same test from a law concentrated near `x = 0`, which is not
/// invariant; passes when the test rejects.
pub fn invariance_control(torus: &EmbeddedTorusModel, seed: u64) -> Result<TestReport> {
    let r = invariance_test(torus, concentrated_law, 1.0, &invariance_config(seed), 16)?;
    Ok(TestReport::upper_bound("invariance_control", r.p_value, 1e-6, r.n as usize)
        .with_detail("chi_square", r.statistic)
        .with_detail("dof", r.dof as f64))
}

/// Martingale test on Kronecker coordinates at `T = 1` with 10⁴ paths,
/// and its control with an injected drift `(0.1, 0)` that must be detected.
pub fn martingale(kronecker: &KroneckerModel, seed: u64) -> Result<(TestReport, TestReport)> {
    let x0 = ChartPoint::new(vec![1.0, 2.0]);
    let cfg = SdeConfig::new(0.1, 10).paths(10_000).seed(seed).record_noise(false);
    let ens = fobm_frame_bundle(kronecker, &FramePoint::at(kronecker, &x0)?, &cfg)?;
    let mut plain = martingale_test(&ens, kronecker.is_flat_chart())?;
    plain.name = "martingale".into();
    let drifted = martingale_test(&with_drift(&ens, &[0.1, 0.0]), true)?;
    let mut control = TestReport::lower_bound("martingale_control", drifted.statistic, 3.0, ens.n_paths());
    control.details = drifted.details;
    Ok((plain, control))
}

/// Largest drift `|I(X_t) − I(X_0)|` of the leaf invariant along the paths
/// of an ensemble, with the allowance `1e-6 · √n_steps · dt`.
pub fn leaf_confinement_report(
    name: &str,
    torus: &EmbeddedTorusModel,
    ens: &folbm::sde::PathEnsemble,
    n_steps: usize,
) -> TestReport {
    let mut worst: f64 = 0.0;
    for p in 0..ens.n_paths() {
        let i0 = torus.leaf_invariant(&ens.start(p));
        for k in 0..ens.n_records() {
            worst = worst.max((torus.leaf_invariant(&ens.state(p, k)) - i0).abs());
        }
    }
    let threshold = 1e-6 * (n_steps as f64).sqrt() * ens.dt;
    TestReport::upper_bound(name, worst, threshold, ens.n_paths()).with_detail("dt", ens.dt)
}

/// Leaf confinement of the flow construction: 100 paths of 1000 steps at
/// `dt = 1e-3`.
pub fn leaf_confinement_flow(torus: &EmbeddedTorusModel, seed: u64) -> Result<TestReport> {
    let cfg = SdeConfig::new(1e-3, 1000).paths(100).seed(seed).record_noise(false);
    let ens = fobm_flow_1d(torus, &ChartPoint::new(vec![0.3, 0.1]), &cfg)?;
    Ok(leaf_confinement_report("leaf_confinement", torus, &ens, cfg.n_steps))
}
