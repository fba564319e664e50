use nalgebra::{DMatrix, DVector};

use super::model::FoliatedModel;
use super::types::{ChartPoint, MetricSample, TangentVector};
use super::DEGENERACY_FLOOR;
use crate::error::{Error, Result};

/// Metric, orthonormal leaf frame and leaf projector at one point.
#[derive(Clone, Debug)]
pub struct LocalFrame {
    pub metric: MetricSample,
    /// `n × p`, columns g-orthonormal and spanning `E`.
    pub e: DMatrix<f64>,
    /// Matrix of `π`: `π v = U Uᵀ g v`.
    pub projector: DMatrix<f64>,
}

impl LocalFrame {
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.projector * v
    }

    pub fn project_normal(&self, v: &DVector<f64>) -> DVector<f64> {
        v - &self.projector * v
    }

    pub fn leaf_vector(&self, i: usize) -> DVector<f64> {
        self.e.column(i).into_owned()
    }
}

pub fn metric_at<M: FoliatedModel + ?Sized>(model: &M, x: &ChartPoint) -> Result<MetricSample> {
    check_dim(model, x)?;
    MetricSample::new(model.metric(x))
}

pub(crate) fn check_dim<M: FoliatedModel + ?Sized>(model: &M, x: &ChartPoint) -> Result<()> {
    if x.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.dim(),
        });
    }
    Ok(())
}

/// Modified Gram-Schmidt in the inner product of `metric`. Vectors are
/// processed in order; each pivot norm must exceed the degeneracy floor.
pub fn gram_schmidt(metric: &MetricSample, vectors: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let n = metric.dim();
    let mut out = DMatrix::zeros(n, vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        let mut w = v.clone();
        for j in 0..k {
            let u = out.column(j).into_owned();
            let c = metric.inner(&w, &u);
            w -= u * c;
        }
        let norm = metric.norm(&w);
        if norm.is_nan() || norm < DEGENERACY_FLOOR {
            return Err(Error::DegenerateFrame {
                pivot: norm,
                floor: DEGENERACY_FLOOR,
            });
        }
        out.set_column(k, &(w / norm));
    }
    Ok(out)
}

pub fn local_frame<M: FoliatedModel + ?Sized>(model: &M, x: &ChartPoint) -> Result<LocalFrame> {
    let metric = metric_at(model, x)?;
    let raw = model.e_frame(x);
    if raw.len() != model.leaf_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.leaf_dim(),
            got: raw.len(),
        });
    }
    let e = gram_schmidt(&metric, &raw)?;
    let projector = &e * e.transpose() * &metric.g;
    Ok(LocalFrame {
        metric,
        e,
        projector,
    })
}

/// The model's leaf frame orthonormalized by Gram-Schmidt, in input order.
pub fn orthonormal_e_frame<M: FoliatedModel + ?Sized>(
    model: &M,
    x: &ChartPoint,
) -> Result<Vec<TangentVector>> {
    let frame = local_frame(model, x)?;
    Ok((0..model.leaf_dim())
        .map(|i| TangentVector::new(x.clone(), frame.leaf_vector(i)))
        .collect())
}

/// Orthogonal projection `π: TM → E`.
pub fn project_e<M: FoliatedModel + ?Sized>(model: &M, v: &TangentVector) -> Result<TangentVector> {
    let frame = local_frame(model, &v.base)?;
    Ok(TangentVector::new(v.base.clone(), frame.project(&v.components)))
}

/// Orthogonal projection `π^⊥: TM → E^⊥`.
pub fn project_normal<M: FoliatedModel + ?Sized>(
    model: &M,
    v: &TangentVector,
) -> Result<TangentVector> {
    let frame = local_frame(model, &v.base)?;
    Ok(TangentVector::new(
        v.base.clone(),
        frame.project_normal(&v.components),
    ))
}

/// Chart basis indices used to build the `E^⊥` frame at `x`: the first
/// `n − p` coordinate vectors, in order, whose normal part is not negligible.
pub fn normal_basis_indices<M: FoliatedModel + ?Sized>(
    model: &M,
    x: &ChartPoint,
) -> Result<Vec<usize>> {
    let frame = local_frame(model, x)?;
    let n = model.dim();
    let q = n - model.leaf_dim();
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(q);
    let mut indices = Vec::with_capacity(q);
    for i in 0..n {
        if indices.len() == q {
            break;
        }
        let mut w = frame.project_normal(&DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 }));
        let scale = frame.metric.g[(i, i)].sqrt();
        for u in &chosen {
            let c = frame.metric.inner(&w, u);
            w -= u * c;
        }
        let norm = frame.metric.norm(&w);
        // Relative threshold keeps the selection stable under small moves of x.
        if norm > 1e-3 * scale {
            chosen.push(w / norm);
            indices.push(i);
        }
    }
    if indices.len() < q {
        return Err(Error::DegenerateFrame {
            pivot: 0.0,
            floor: DEGENERACY_FLOOR,
        });
    }
    Ok(indices)
}

/// Orthonormal frame of `E^⊥` from Gram-Schmidt of the given chart basis
/// vectors against the leaf frame (`n × q`).
pub fn normal_frame_with<M: FoliatedModel + ?Sized>(
    model: &M,
    x: &ChartPoint,
    indices: &[usize],
) -> Result<DMatrix<f64>> {
    let frame = local_frame(model, x)?;
    let n = model.dim();
    let vectors: Vec<DVector<f64>> = indices
        .iter()
        .map(|&i| frame.project_normal(&DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })))
        .collect();
    gram_schmidt(&frame.metric, &vectors)
}

pub fn normal_frame<M: FoliatedModel + ?Sized>(
    model: &M,
    x: &ChartPoint,
) -> Result<Vec<TangentVector>> {
    let indices = normal_basis_indices(model, x)?;
    let v = normal_frame_with(model, x, &indices)?;
    Ok((0..v.ncols())
        .map(|j| TangentVector::new(x.clone(), v.column(j).into_owned()))
        .collect())
}
