//! Riemannian and foliated differential operators at a point.
//!
//! Vector fields are callables returning chart components. Their derivatives
//! are taken with the five-point stencil along a direction and corrected by
//! the Christoffel symbols; scalar fields use their analytic partials when
//! present.

use nalgebra::{DMatrix, DVector};

use super::fd;
use super::frame::{
    check_dim, local_frame, metric_at, normal_basis_indices, normal_frame_with, LocalFrame,
};
use super::model::FoliatedModel;
use super::types::{ChartPoint, Christoffels, ScalarField, TangentVector};
use super::TOL_FRAME;
use crate::error::{Error, Result};

/// A vector field given by its chart components.
pub trait VectorField {
    fn at(&self, x: &ChartPoint) -> Result<DVector<f64>>;
}

impl<F> VectorField for F
where
    F: Fn(&ChartPoint) -> Result<DVector<f64>>,
{
    fn at(&self, x: &ChartPoint) -> Result<DVector<f64>> {
        self(x)
    }
}

/// How a leaf vector at a point is extended to a local section of `E`.
///
/// Hess_E and the second fundamental form only depend on the value at the
/// point, provided the extension stays inside `E`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Extension {
    /// The orthonormalized model frame, evaluated at every point.
    #[default]
    FrameField,
    /// Constant chart components, projected onto `E` at every point.
    ProjectedConstant,
}

/// Levi-Civita Christoffel symbols: analytic when the model provides them,
/// finite differences of the metric otherwise.
pub fn christoffels<M: FoliatedModel + ?Sized>(model: &M, x: &ChartPoint) -> Result<Christoffels> {
    check_dim(model, x)?;
    match model.analytic_christoffels(x) {
        Some(c) => {
            // Still reject singular metrics.
            metric_at(model, x)?;
            Ok(c)
        }
        None => fd_christoffels(model, x),
    }
}

/// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})` with
/// finite-difference metric derivatives, ignoring any analytic symbols.
pub fn fd_christoffels<M: FoliatedModel + ?Sized>(model: &M, x: &ChartPoint) -> Result<Christoffels> {
    let sample = metric_at(model, x)?;
    let n = model.dim();
    let h = model.fd_step();
    // dg[l] = ∂_l g
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|l| {
            let dir = unit(n, l);
            let flat = fd::derivative_vector(
                |t| {
                    let g = model.metric(&x.offset(&dir, t));
                    DVector::from_column_slice(g.as_slice())
                },
                h,
            );
            DMatrix::from_column_slice(n, n, flat.as_slice())
        })
        .collect();
    let mut gamma = Christoffels::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += sample.g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma.set_symmetric(k, i, j, 0.5 * acc);
            }
        }
    }
    Ok(gamma)
}

pub(crate) fn unit(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
}

/// Riemannian gradient, `g^{ij} ∂_j f`.
pub fn grad<M: FoliatedModel + ?Sized>(model: &M, f: &ScalarField, x: &ChartPoint) -> Result<TangentVector> {
    let sample = metric_at(model, x)?;
    Ok(TangentVector::new(x.clone(), sample.sharp(&f.gradient(x))))
}

/// Leafwise gradient `π(grad f)`.
pub fn grad_e<M: FoliatedModel + ?Sized>(model: &M, f: &ScalarField, x: &ChartPoint) -> Result<TangentVector> {
    let frame = local_frame(model, x)?;
    Ok(TangentVector::new(x.clone(), grad_e_components(&frame, f, x)))
}

fn grad_e_components(frame: &LocalFrame, f: &ScalarField, x: &ChartPoint) -> DVector<f64> {
    frame.project(&frame.metric.sharp(&f.gradient(x)))
}

/// Leafwise gradient through an orthonormal leaf basis, `Σ (u_i f) u_i`.
pub fn grad_e_basis<M: FoliatedModel + ?Sized>(
    model: &M,
    f: &ScalarField,
    x: &ChartPoint,
) -> Result<TangentVector> {
    let frame = local_frame(model, x)?;
    let df = f.gradient(x);
    let mut out = DVector::zeros(model.dim());
    for i in 0..model.leaf_dim() {
        let u = frame.leaf_vector(i);
        out += &u * u.dot(&df);
    }
    Ok(TangentVector::new(x.clone(), out))
}

/// Component derivative `d/dt V(x + t·dir)` at `t = 0`.
pub fn directional_derivative<M: FoliatedModel + ?Sized, V: VectorField + ?Sized>(
    model: &M,
    field: &V,
    x: &ChartPoint,
    dir: &DVector<f64>,
) -> Result<DVector<f64>> {
    fd::try_derivative_vector(|t| field.at(&x.offset(dir, t)), model.fd_step())
}

/// `∇_dir V` at `x`.
pub fn covariant_derivative<M: FoliatedModel + ?Sized, V: VectorField + ?Sized>(
    model: &M,
    field: &V,
    x: &ChartPoint,
    dir: &DVector<f64>,
) -> Result<TangentVector> {
    let gamma = christoffels(model, x)?;
    let d = directional_derivative(model, field, x, dir)?;
    let v = field.at(x)?;
    Ok(TangentVector::new(x.clone(), d + gamma.contract(dir, &v)))
}

/// Riemannian divergence `∂_k V^k + Γ^k_{kj} V^j`.
pub fn div<M: FoliatedModel + ?Sized, V: VectorField + ?Sized>(
    model: &M,
    field: &V,
    x: &ChartPoint,
) -> Result<f64> {
    let gamma = christoffels(model, x)?;
    let n = model.dim();
    let v = field.at(x)?;
    let mut acc = 0.0;
    for k in 0..n {
        let d = directional_derivative(model, field, x, &unit(n, k))?;
        acc += d[k];
        for j in 0..n {
            acc += gamma.get(k, k, j) * v[j];
        }
    }
    Ok(acc)
}

/// Leafwise divergence `Σ_i g(π ∇_{u_i} V, u_i)` over an orthonormal leaf
/// frame. For fields outside `E` this traces the projected derivative.
pub fn div_e<M: FoliatedModel + ?Sized, V: VectorField + ?Sized>(
    model: &M,
    field: &V,
    x: &ChartPoint,
) -> Result<f64> {
    let frame = local_frame(model, x)?;
    let gamma = christoffels(model, x)?;
    let v = field.at(x)?;
    let mut acc = 0.0;
    for i in 0..model.leaf_dim() {
        let u = frame.leaf_vector(i);
        let nabla = directional_derivative(model, field, x, &u)? + gamma.contract(&u, &v);
        acc += frame.metric.inner(&frame.project(&nabla), &u);
    }
    Ok(acc)
}

/// Riemannian Hessian in chart components, `∂_i∂_j f − Γ^k_{ij} ∂_k f`.
pub fn hess<M: FoliatedModel + ?Sized>(model: &M, f: &ScalarField, x: &ChartPoint) -> Result<DMatrix<f64>> {
    let gamma = christoffels(model, x)?;
    let n = model.dim();
    let df = f.gradient(x);
    let mut h = f.hessian(x);
    for i in 0..n {
        for j in 0..n {
            let mut c = 0.0;
            for k in 0..n {
                c += gamma.get(k, i, j) * df[k];
            }
            h[(i, j)] -= c;
        }
    }
    Ok(h)
}

fn extension_field<'a, M: FoliatedModel + ?Sized>(
    model: &'a M,
    value: DVector<f64>,
    column: usize,
    ext: Extension,
) -> impl Fn(&ChartPoint) -> Result<DVector<f64>> + 'a {
    move |y: &ChartPoint| {
        let frame = local_frame(model, y)?;
        Ok(match ext {
            Extension::FrameField => frame.leaf_vector(column),
            Extension::ProjectedConstant => frame.project(&value),
        })
    }
}

/// `Hess_E f(u_i, u_j) = u_i u_j(f) − (∇^E_{u_i} u_j) f` in the orthonormal
/// leaf frame, with `u_j` extended by the frame field.
pub fn hess_e<M: FoliatedModel + ?Sized>(model: &M, f: &ScalarField, x: &ChartPoint) -> Result<DMatrix<f64>> {
    hess_e_with(model, f, x, Extension::FrameField)
}

pub fn hess_e_with<M: FoliatedModel + ?Sized>(
    model: &M,
    f: &ScalarField,
    x: &ChartPoint,
    ext: Extension,
) -> Result<DMatrix<f64>> {
    let frame = local_frame(model, x)?;
    let gamma = christoffels(model, x)?;
    let p = model.leaf_dim();
    let df = f.gradient(x);
    let d2f = f.hessian(x);
    let mut out = DMatrix::zeros(p, p);
    for j in 0..p {
        let uj = frame.leaf_vector(j);
        let field = extension_field(model, uj.clone(), j, ext);
        for i in 0..p {
            let ui = frame.leaf_vector(i);
            // u_i(Ỹ_j f) = ∂²f(u_i, u_j) + (D_{u_i} Ỹ_j) f
            let d_field = directional_derivative(model, &field, x, &ui)?;
            let second = ui.dot(&(&d2f * &uj)) + d_field.dot(&df);
            let nabla = d_field + gamma.contract(&ui, &uj);
            out[(i, j)] = second - frame.project(&nabla).dot(&df);
        }
    }
    Ok(out)
}

/// `Δ_E f = Tr_E Hess_E f`.
pub fn laplacian_e<M: FoliatedModel + ?Sized>(model: &M, f: &ScalarField, x: &ChartPoint) -> Result<f64> {
    Ok(hess_e(model, f, x)?.trace())
}

/// `Δ_E f = div_E(grad_E f)`, the second route.
pub fn laplacian_e_via_div<M: FoliatedModel + ?Sized>(
    model: &M,
    f: &ScalarField,
    x: &ChartPoint,
) -> Result<f64> {
    let field = |y: &ChartPoint| -> Result<DVector<f64>> {
        let frame = local_frame(model, y)?;
        Ok(grad_e_components(&frame, f, y))
    };
    div_e(model, &field, x)
}

fn ensure_in_e(frame: &LocalFrame, v: &DVector<f64>) -> Result<()> {
    let residual = frame.metric.norm(&frame.project_normal(v));
    let scale = frame.metric.norm(v).max(1.0);
    if residual > TOL_FRAME * scale {
        return Err(Error::NotInE { residual });
    }
    Ok(())
}

/// Second fundamental form `W(X, Y) = ∇_X Ỹ − π ∇_X Ỹ` for leaf vectors.
pub fn second_fundamental_form<M: FoliatedModel + ?Sized>(
    model: &M,
    x_vec: &TangentVector,
    y_vec: &TangentVector,
) -> Result<TangentVector> {
    second_fundamental_form_with(model, x_vec, y_vec, Extension::ProjectedConstant)
}

pub fn second_fundamental_form_with<M: FoliatedModel + ?Sized>(
    model: &M,
    x_vec: &TangentVector,
    y_vec: &TangentVector,
    ext: Extension,
) -> Result<TangentVector> {
    let base = &x_vec.base;
    let frame = local_frame(model, base)?;
    ensure_in_e(&frame, &x_vec.components)?;
    ensure_in_e(&frame, &y_vec.components)?;
    let gamma = christoffels(model, base)?;
    let nabla = match ext {
        Extension::ProjectedConstant => {
            let field = extension_field(model, y_vec.components.clone(), 0, ext);
            directional_derivative(model, &field, base, &x_vec.components)?
                + gamma.contract(&x_vec.components, &y_vec.components)
        }
        Extension::FrameField => {
            // Expand Y in the orthonormal frame with constant coefficients.
            let coeffs: Vec<f64> = (0..model.leaf_dim())
                .map(|i| frame.metric.inner(&y_vec.components, &frame.leaf_vector(i)))
                .collect();
            let field = |y: &ChartPoint| -> Result<DVector<f64>> {
                let fr = local_frame(model, y)?;
                Ok(&fr.e * DVector::from_column_slice(&coeffs))
            };
            directional_derivative(model, &field, base, &x_vec.components)?
                + gamma.contract(&x_vec.components, &y_vec.components)
        }
    };
    Ok(TangentVector::new(base.clone(), frame.project_normal(&nabla)))
}

/// Mean curvature of the foliation, `K = Tr_E W`.
pub fn mean_curvature<M: FoliatedModel + ?Sized>(model: &M, x: &ChartPoint) -> Result<TangentVector> {
    let frame = local_frame(model, x)?;
    let mut k = DVector::zeros(model.dim());
    for i in 0..model.leaf_dim() {
        let u = TangentVector::new(x.clone(), frame.leaf_vector(i));
        k += second_fundamental_form(model, &u, &u)?.components;
    }
    Ok(TangentVector::new(x.clone(), k))
}

/// `κ = π Σ_j ∇_{V_j} V_j` over an orthonormal frame `V_j` of `E^⊥`.
pub fn kappa<M: FoliatedModel + ?Sized>(model: &M, x: &ChartPoint) -> Result<TangentVector> {
    let frame = local_frame(model, x)?;
    let gamma = christoffels(model, x)?;
    let indices = normal_basis_indices(model, x)?;
    let normal = normal_frame_with(model, x, &indices)?;
    let mut sum = DVector::zeros(model.dim());
    for j in 0..indices.len() {
        let vj = normal.column(j).into_owned();
        let field = |y: &ChartPoint| -> Result<DVector<f64>> {
            Ok(normal_frame_with(model, y, &indices)?.column(j).into_owned())
        };
        sum += directional_derivative(model, &field, x, &vj)? + gamma.contract(&vj, &vj);
    }
    Ok(TangentVector::new(x.clone(), frame.project(&sum)))
}

/// Laplace–Beltrami operator `(1/√g) ∂_i(√g g^{ij} ∂_j f)`.
pub fn laplacian_full<M: FoliatedModel + ?Sized>(model: &M, f: &ScalarField, x: &ChartPoint) -> Result<f64> {
    let sample = metric_at(model, x)?;
    let n = model.dim();
    let flux = |y: &ChartPoint| -> Result<DVector<f64>> {
        let s = metric_at(model, y)?;
        Ok(s.sharp(&f.gradient(y)) * s.sqrt_det_g)
    };
    let mut acc = 0.0;
    for k in 0..n {
        acc += directional_derivative(model, &flux, x, &unit(n, k))?[k];
    }
    Ok(acc / sample.sqrt_det_g)
}

/// The pieces of `Δf = (Δ_E f − κ(f)) + div(π^⊥ grad f)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecompositionTerms {
    pub laplacian: f64,
    pub laplacian_e: f64,
    pub kappa_f: f64,
    pub normal_divergence: f64,
}

impl DecompositionTerms {
    pub fn residual(&self) -> f64 {
        self.laplacian - (self.laplacian_e - self.kappa_f) - self.normal_divergence
    }
}

pub fn decomposition_terms<M: FoliatedModel + ?Sized>(
    model: &M,
    f: &ScalarField,
    x: &ChartPoint,
) -> Result<DecompositionTerms> {
    let normal_grad = |y: &ChartPoint| -> Result<DVector<f64>> {
        let frame = local_frame(model, y)?;
        Ok(frame.project_normal(&frame.metric.sharp(&f.gradient(y))))
    };
    Ok(DecompositionTerms {
        laplacian: laplacian_full(model, f, x)?,
        laplacian_e: laplacian_e(model, f, x)?,
        kappa_f: kappa(model, x)?.components.dot(&f.gradient(x)),
        normal_divergence: div(model, &normal_grad, x)?,
    })
}

/// `Δf − (Δ_E f − κ(f)) − div(π^⊥ grad f)`; zero up to discretization error.
pub fn decomposition_residual<M: FoliatedModel + ?Sized>(
    model: &M,
    f: &ScalarField,
    x: &ChartPoint,
) -> Result<f64> {
    Ok(decomposition_terms(model, f, x)?.residual())
}
