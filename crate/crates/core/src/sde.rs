//! Foliated Brownian motion by stochastic development in the bundle `O(E)` of
//! orthonormal leaf frames, and by Brownian time change of a unit leaf flow.
//!
//! The frame-bundle process solves the Stratonovich equation
//! `du = Σ_i H_i(u) ∘ dB^i` where `H_i` is the horizontal field of the
//! leaf connection `∇^E = π∇`: the base moves along the frame vector `u e_i`
//! while every frame vector is parallel transported by `∇^E`. Its projection
//! to `M` has generator `½ Δ_E`.
//!
//! Integration uses the Stratonovich Heun predictor–corrector. After every
//! `reorthonormalize_every` steps the frame is projected back onto `E` and
//! re-orthonormalized.
//!
//! Each path is produced by a pure kernel from `(model, start, config, path
//! index)`; noise comes from a counter-based stream, so ensembles do not
//! depend on the thread schedule.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    christoffels, gram_schmidt, local_frame, ChartPoint, FoliatedModel, LocalFrame,
    TangentVector, TOL_ROUTES_ANALYTIC,
};
use crate::io::format_decimal;
use crate::rng::brownian_increments;

/// A point of `O(E)`: a base point and an orthonormal frame of `E` there.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePoint {
    pub base: ChartPoint,
    /// `n × p`; column `i` is the frame vector `u e_i`.
    pub frame: DMatrix<f64>,
}

impl FramePoint {
    /// The orthonormalized model frame at `x`.
    pub fn at<M: FoliatedModel + ?Sized>(model: &M, x: &ChartPoint) -> Result<Self> {
        let frame = local_frame(model, x)?;
        Ok(Self {
            base: x.clone(),
            frame: frame.e,
        })
    }

    pub fn frame_vector(&self, i: usize) -> TangentVector {
        TangentVector::new(self.base.clone(), self.frame.column(i).into_owned())
    }

    pub fn leaf_dim(&self) -> usize {
        self.frame.ncols()
    }

    /// `max |g(e_i, e_j) − δ_ij|` and the largest normal component of a
    /// frame vector.
    pub fn defects<M: FoliatedModel + ?Sized>(&self, model: &M) -> Result<(f64, f64)> {
        let lf = local_frame(model, &self.base)?;
        let gram = self.frame.transpose() * &lf.metric.g * &self.frame;
        let p = self.leaf_dim();
        let mut ortho: f64 = 0.0;
        let mut normal: f64 = 0.0;
        for i in 0..p {
            for j in 0..p {
                let delta = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((gram[(i, j)] - delta).abs());
            }
            let col = self.frame.column(i).into_owned();
            normal = normal.max(lf.metric.norm(&lf.project_normal(&col)));
        }
        Ok((ortho, normal))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    StratonovichHeun,
}

/// Integration and ensemble settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SdeConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub reorthonormalize_every: usize,
    /// Record every `stride`-th step (the final step is always recorded).
    pub stride: usize,
    pub record_noise: bool,
    /// Multiplies the applied increments but not the recorded ones. Fault
    /// injection hook for negative controls; 1 in normal use.
    pub noise_scale: f64,
}

impl SdeConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            n_steps,
            n_paths: 1,
            scheme: Scheme::StratonovichHeun,
            seed: 0,
            reorthonormalize_every: 1,
            stride: 1,
            record_noise: true,
            noise_scale: 1.0,
        }
    }

    pub fn paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    /// Keep only the start and end states.
    pub fn endpoints_only(mut self) -> Self {
        self.stride = self.n_steps.max(1);
        self
    }

    pub fn record_noise(mut self, record: bool) -> Self {
        self.record_noise = record;
        self
    }

    pub fn reorthonormalize_every(mut self, k: usize) -> Self {
        self.reorthonormalize_every = k;
        self
    }

    pub fn noise_scale(mut self, scale: f64) -> Self {
        self.noise_scale = scale;
        self
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return bad("dt", "must be a finite positive number");
        }
        if self.n_steps == 0 {
            return bad("n_steps", "must be at least 1");
        }
        if self.n_paths == 0 {
            return bad("n_paths", "must be at least 1");
        }
        if self.reorthonormalize_every == 0 {
            return bad("reorthonormalize_every", "must be at least 1");
        }
        if self.stride == 0 {
            return bad("stride", "must be at least 1");
        }
        if !self.noise_scale.is_finite() {
            return bad("noise_scale", "must be finite");
        }
        Ok(())
    }

    /// Indices of the recorded steps.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let mut steps: Vec<usize> = (0..=self.n_steps).step_by(self.stride.max(1)).collect();
        if *steps.last().expect("step 0 is always recorded") != self.n_steps {
            steps.push(self.n_steps);
        }
        steps
    }
}

/// One simulated trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord {
    /// Recorded states, `n` coordinates each, on the universal cover.
    pub states: Vec<f64>,
    /// Nominal driving increments, `p` per step (empty if not recorded).
    pub noise: Vec<f64>,
}

/// A batch of trajectories with the noise that drove them.
#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble {
    pub model_id: String,
    pub dim: usize,
    pub noise_dim: usize,
    pub dt: f64,
    pub stride: usize,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub periodic: Vec<bool>,
    pub paths: Vec<PathRecord>,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn n_records(&self) -> usize {
        self.steps.len()
    }

    /// Whether some step was not recorded.
    pub fn is_thinned(&self) -> bool {
        self.steps.len() != self.steps.last().map_or(0, |&s| s + 1)
    }

    pub fn state(&self, path: usize, record: usize) -> ChartPoint {
        let n = self.dim;
        ChartPoint::new(self.paths[path].states[record * n..(record + 1) * n].to_vec())
    }

    pub fn start(&self, path: usize) -> ChartPoint {
        self.state(path, 0)
    }

    pub fn endpoint(&self, path: usize) -> ChartPoint {
        self.state(path, self.n_records() - 1)
    }

    /// Recorded states of one path.
    pub fn path_states(&self, path: usize) -> Vec<ChartPoint> {
        (0..self.n_records()).map(|k| self.state(path, k)).collect()
    }

    /// Noise component `i` of a path, accumulated into `B^i` at every step.
    pub fn brownian_path(&self, path: usize, i: usize) -> Vec<f64> {
        let p = self.noise_dim;
        let noise = &self.paths[path].noise;
        let mut out = Vec::with_capacity(noise.len() / p + 1);
        let mut b = 0.0;
        out.push(b);
        for chunk in noise.chunks(p) {
            b += chunk[i];
            out.push(b);
        }
        out
    }

    /// Writes `path_id,step,t,x1..xn`, periodic coordinates wrapped to
    /// `[0, 2π)`, numbers in 17-significant-digit decimal notation.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "path_id,step,t")?;
        for i in 1..=self.dim {
            write!(w, ",x{i}")?;
        }
        writeln!(w)?;
        for (pid, _) in self.paths.iter().enumerate() {
            for (k, (&step, &t)) in self.steps.iter().zip(&self.times).enumerate() {
                let x = self.state(pid, k).wrapped(&self.periodic);
                write!(w, "{pid},{step},{}", format_decimal(t))?;
                for c in x.coords().iter() {
                    write!(w, ",{}", format_decimal(*c))?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// Horizontal field `H_i` at `u`: the base velocity `u e_i` and the frame
/// velocity (column `j` is `ė_j`) of `∇^E` parallel transport.
///
/// `ė_j = −π Γ(u e_i, e_j) + (I − π)(D_{u e_i} π) e_j`: the first term is
/// the projected connection, the second keeps the transported vector inside
/// `E` (it equals the second fundamental form term `W(u e_i, e_j)` minus the
/// normal part of the connection).
pub fn horizontal_field<M: FoliatedModel + ?Sized>(
    model: &M,
    u: &FramePoint,
    i: usize,
) -> Result<(TangentVector, DMatrix<f64>)> {
    if i >= u.leaf_dim() {
        return Err(Error::InvalidParameter {
            name: "i",
            reason: format!("frame index {i} out of range for p = {}", u.leaf_dim()),
        });
    }
    let lf = local_frame(model, &u.base)?;
    let direction = u.frame.column(i).into_owned();
    let frame_velocity = transport_velocity(model, &lf, &u.base, &u.frame, &direction)?;
    Ok((TangentVector::new(u.base.clone(), direction), frame_velocity))
}

/// Step of the central difference of the leaf projector. The projector is
/// as smooth as the model, so a short two-point stencil keeps truncation and
/// rounding near 1e-10 at half the cost of the five-point rule.
const PROJECTOR_FD_STEP: f64 = 1e-5;

/// Frame velocity of `∇^E` transport along `direction` (which need not be
/// a unit vector; the result is linear in it).
fn transport_velocity<M: FoliatedModel + ?Sized>(
    model: &M,
    lf: &LocalFrame,
    x: &ChartPoint,
    frame: &DMatrix<f64>,
    direction: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let gamma = christoffels(model, x)?;
    let n = model.dim();
    let speed = direction.norm();
    let d_projector = if speed > 0.0 {
        let unit = direction / speed;
        let h = PROJECTOR_FD_STEP;
        let ahead = local_frame(model, &x.offset(&unit, h))?.projector;
        let behind = local_frame(model, &x.offset(&unit, -h))?.projector;
        (ahead - behind) * (speed / (2.0 * h))
    } else {
        DMatrix::zeros(n, n)
    };
    let mut out = DMatrix::zeros(n, frame.ncols());
    for j in 0..frame.ncols() {
        let ej = frame.column(j).into_owned();
        let tangential = lf.project(&gamma.contract(direction, &ej));
        let keep_in_e = lf.project_normal(&(&d_projector * &ej));
        out.set_column(j, &(keep_in_e - tangential));
    }
    Ok(out)
}

struct Drift {
    base: DVector<f64>,
    frame: DMatrix<f64>,
}

fn combined_drift<M: FoliatedModel + ?Sized>(
    model: &M,
    lf: &LocalFrame,
    x: &ChartPoint,
    frame: &DMatrix<f64>,
    db: &DVector<f64>,
) -> Result<Drift> {
    let direction = frame * db;
    let frame_velocity = transport_velocity(model, lf, x, frame, &direction)?;
    Ok(Drift {
        base: direction,
        frame: frame_velocity,
    })
}

fn reject(path: usize, step: usize, err: Error) -> Error {
    Error::StepRejected {
        path,
        step,
        reason: err.to_string(),
    }
}

/// Projects the frame onto `E` at `x` and re-orthonormalizes it.
pub fn reorthonormalize<M: FoliatedModel + ?Sized>(
    model: &M,
    x: &ChartPoint,
    frame: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    reorthonormalize_in(&local_frame(model, x)?, frame)
}

fn reorthonormalize_in(lf: &LocalFrame, frame: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let projected: Vec<DVector<f64>> = (0..frame.ncols())
        .map(|j| lf.project(&frame.column(j).into_owned()))
        .collect();
    gram_schmidt(&lf.metric, &projected)
}

/// Frame-bundle path driven by the given nominal increments (`p` per step).
pub fn frame_bundle_path_with_noise<M: FoliatedModel + ?Sized>(
    model: &M,
    u0: &FramePoint,
    cfg: &SdeConfig,
    increments: &[f64],
    path_index: usize,
) -> Result<PathRecord> {
    let p = model.leaf_dim();
    let n = model.dim();
    if u0.frame.nrows() != n || u0.frame.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            got: u0.frame.len(),
        });
    }
    if increments.len() != cfg.n_steps * p {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_steps * p,
            got: increments.len(),
        });
    }
    let recorded = cfg.recorded_steps();
    let mut states = Vec::with_capacity(recorded.len() * n);
    let mut next_record = 0;
    let mut x = u0.base.clone();
    let mut frame = u0.frame.clone();
    let mut lf = local_frame(model, &x).map_err(|e| reject(path_index, 0, e))?;
    if recorded[0] == 0 {
        states.extend(x.coords().iter());
        next_record = 1;
    }
    for step in 0..cfg.n_steps {
        let db = DVector::from_iterator(
            p,
            increments[step * p..(step + 1) * p]
                .iter()
                .map(|v| v * cfg.noise_scale),
        );
        let heun = || -> Result<(ChartPoint, DMatrix<f64>, LocalFrame)> {
            let d0 = combined_drift(model, &lf, &x, &frame, &db)?;
            let x_pred = ChartPoint::from_vector(x.coords() + &d0.base);
            let frame_pred = &frame + &d0.frame;
            let lf_pred = local_frame(model, &x_pred)?;
            let d1 = combined_drift(model, &lf_pred, &x_pred, &frame_pred, &db)?;
            let x_next = ChartPoint::from_vector(x.coords() + (&d0.base + &d1.base) * 0.5);
            if !x_next.coords().iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "state",
                    reason: "non-finite state".into(),
                });
            }
            let mut frame_next = &frame + (&d0.frame + &d1.frame) * 0.5;
            let lf_next = local_frame(model, &x_next)?;
            if (step + 1) % cfg.reorthonormalize_every == 0 {
                frame_next = reorthonormalize_in(&lf_next, &frame_next)?;
            }
            Ok((x_next, frame_next, lf_next))
        };
        let (x_next, frame_next, lf_next) = heun().map_err(|e| reject(path_index, step, e))?;
        lf = lf_next;
        x = x_next;
        frame = frame_next;
        if next_record < recorded.len() && recorded[next_record] == step + 1 {
            states.extend(x.coords().iter());
            next_record += 1;
        }
    }
    Ok(PathRecord {
        states,
        noise: if cfg.record_noise {
            increments.to_vec()
        } else {
            Vec::new()
        },
    })
}

/// Pure per-path kernel: noise from the `(seed, path_index)` stream.
pub fn frame_bundle_path<M: FoliatedModel + ?Sized>(
    model: &M,
    u0: &FramePoint,
    cfg: &SdeConfig,
    path_index: usize,
) -> Result<PathRecord> {
    let noise = brownian_increments(
        cfg.seed,
        path_index as u64,
        cfg.n_steps * model.leaf_dim(),
        cfg.dt,
    );
    frame_bundle_path_with_noise(model, u0, cfg, &noise, path_index)
}

fn assemble<M: FoliatedModel + ?Sized>(model: &M, cfg: &SdeConfig, paths: Vec<PathRecord>) -> PathEnsemble {
    let steps = cfg.recorded_steps();
    let times = steps.iter().map(|&s| s as f64 * cfg.dt).collect();
    PathEnsemble {
        model_id: model.id(),
        dim: model.dim(),
        noise_dim: model.leaf_dim(),
        dt: cfg.dt,
        stride: cfg.stride,
        steps,
        times,
        periodic: model.periodic_mask(),
        paths,
    }
}

/// Frame-bundle foliated Brownian motion, every path started at `u0`.
pub fn fobm_frame_bundle<M: FoliatedModel + ?Sized>(
    model: &M,
    u0: &FramePoint,
    cfg: &SdeConfig,
) -> Result<PathEnsemble> {
    cfg.validate()?;
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| frame_bundle_path(model, u0, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(model, cfg, paths))
}

/// Frame-bundle foliated Brownian motion with one start per path
/// (`cfg.n_paths` is ignored).
pub fn fobm_frame_bundle_from<M: FoliatedModel + ?Sized>(
    model: &M,
    starts: &[FramePoint],
    cfg: &SdeConfig,
) -> Result<PathEnsemble> {
    cfg.validate()?;
    let paths = starts
        .par_iter()
        .enumerate()
        .map(|(i, u0)| frame_bundle_path(model, u0, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(model, cfg, paths))
}

/// Frame-bundle ensemble at step `factor · cfg.dt`, each increment the sum of
/// `factor` consecutive increments of the `cfg` noise streams. The result
/// shares its Brownian paths with the ensemble run at `cfg.dt`, which makes
/// step-size comparisons insensitive to Monte Carlo noise.
pub fn fobm_frame_bundle_coarsened<M: FoliatedModel + ?Sized>(
    model: &M,
    u0: &FramePoint,
    cfg: &SdeConfig,
    factor: usize,
) -> Result<PathEnsemble> {
    cfg.validate()?;
    if factor == 0 || !cfg.n_steps.is_multiple_of(factor) {
        return Err(Error::InvalidParameter {
            name: "factor",
            reason: format!("must divide the {} steps", cfg.n_steps),
        });
    }
    let p = model.leaf_dim();
    let mut coarse = cfg.clone();
    coarse.dt = cfg.dt * factor as f64;
    coarse.n_steps = cfg.n_steps / factor;
    coarse.stride = (cfg.stride / factor).max(1);
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let fine = brownian_increments(cfg.seed, i as u64, cfg.n_steps * p, cfg.dt);
            let mut noise = vec![0.0; coarse.n_steps * p];
            for (k, chunk) in fine.chunks(p).enumerate() {
                for (c, v) in chunk.iter().enumerate() {
                    noise[(k / factor) * p + c] += v;
                }
            }
            frame_bundle_path_with_noise(model, u0, &coarse, &noise, i)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(model, &coarse, paths))
}

/// `|π ∇_Y Y|` for the unit leaf field of a one-dimensional foliation.
pub fn leaf_field_geodesic_defect<M: FoliatedModel + ?Sized>(model: &M, x: &ChartPoint) -> Result<f64> {
    let lf = local_frame(model, x)?;
    let y = lf.leaf_vector(0);
    let field = |z: &ChartPoint| -> Result<DVector<f64>> { Ok(local_frame(model, z)?.leaf_vector(0)) };
    let nabla = crate::geometry::covariant_derivative(model, &field, x, &y)?;
    Ok(lf.metric.norm(&lf.project(&nabla.components)))
}

const FLOW_SUBSTEP: f64 = 2e-3;

/// Flow of the unit leaf field for time `t`: closed form when the model has
/// one, classical RK4 otherwise.
pub fn leaf_flow<M: FoliatedModel + ?Sized>(model: &M, x: &ChartPoint, t: f64) -> Result<ChartPoint> {
    if let Some(y) = model.leaf_flow(x, t) {
        return Ok(y);
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    let field = |z: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(local_frame(model, &ChartPoint::from_vector(z.clone()))?.leaf_vector(0))
    };
    let m = (t.abs() / FLOW_SUBSTEP).ceil().max(1.0) as usize;
    let h = t / m as f64;
    let mut z = x.coords().clone();
    for _ in 0..m {
        let k1 = field(&z)?;
        let k2 = field(&(&z + &k1 * (0.5 * h)))?;
        let k3 = field(&(&z + &k2 * (0.5 * h)))?;
        let k4 = field(&(&z + &k3 * h))?;
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(ChartPoint::from_vector(z))
}

/// Flow-construction path `φ_{B_t}(x0)` driven by the given increments.
pub fn flow_path_with_noise<M: FoliatedModel + ?Sized>(
    model: &M,
    x0: &ChartPoint,
    cfg: &SdeConfig,
    increments: &[f64],
) -> Result<PathRecord> {
    if increments.len() != cfg.n_steps {
        return Err(Error::DimensionMismatch {
            expected: cfg.n_steps,
            got: increments.len(),
        });
    }
    let recorded = cfg.recorded_steps();
    let closed_form = model.leaf_flow(x0, 0.0).is_some();
    let mut states = Vec::with_capacity(recorded.len() * model.dim());
    let mut b = 0.0;
    let mut x = x0.clone();
    let mut next_record = 0;
    for step in 0..=cfg.n_steps {
        if step > 0 {
            let db = increments[step - 1] * cfg.noise_scale;
            b += db;
            x = if closed_form {
                leaf_flow(model, x0, b)?
            } else {
                leaf_flow(model, &x, db)?
            };
        }
        if next_record < recorded.len() && recorded[next_record] == step {
            states.extend(x.coords().iter());
            next_record += 1;
        }
    }
    Ok(PathRecord {
        states,
        noise: if cfg.record_noise {
            increments.to_vec()
        } else {
            Vec::new()
        },
    })
}

fn check_flow_applicable<M: FoliatedModel + ?Sized>(model: &M, x0: &ChartPoint) -> Result<()> {
    if model.leaf_dim() != 1 {
        return Err(Error::InvalidParameter {
            name: "model",
            reason: format!("flow construction needs p = 1, model has p = {}", model.leaf_dim()),
        });
    }
    let norm = leaf_field_geodesic_defect(model, x0)?;
    if norm > TOL_ROUTES_ANALYTIC {
        return Err(Error::NotGeodesicLeafField { norm });
    }
    Ok(())
}

/// Foliated Brownian motion `φ_{B_t}(x0)` for a foliation generated by a
/// unit field whose flow lines are leaf geodesics.
pub fn fobm_flow_1d<M: FoliatedModel + ?Sized>(
    model: &M,
    x0: &ChartPoint,
    cfg: &SdeConfig,
) -> Result<PathEnsemble> {
    cfg.validate()?;
    check_flow_applicable(model, x0)?;
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let noise = brownian_increments(cfg.seed, i as u64, cfg.n_steps, cfg.dt);
            flow_path_with_noise(model, x0, cfg, &noise)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(model, cfg, paths))
}

/// Flow construction with one start per path.
pub fn fobm_flow_1d_from<M: FoliatedModel + ?Sized>(
    model: &M,
    starts: &[ChartPoint],
    cfg: &SdeConfig,
) -> Result<PathEnsemble> {
    cfg.validate()?;
    if let Some(x0) = starts.first() {
        check_flow_applicable(model, x0)?;
    }
    let paths = starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let noise = brownian_increments(cfg.seed, i as u64, cfg.n_steps, cfg.dt);
            flow_path_with_noise(model, x0, cfg, &noise)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(model, cfg, paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fd;
    use crate::models::{EmbeddedTorusModel, KroneckerModel, ProductModel};

    #[test]
    fn horizontal_field_is_trivial_on_flat_models() {
        let k = KroneckerModel::plane(2f64.sqrt()).unwrap();
        let u = FramePoint::at(&k, &ChartPoint::new(vec![0.4, -1.0])).unwrap();
        let (base, frame) = horizontal_field(&k, &u, 0).unwrap();
        assert_eq!(base.components, u.frame.column(0).into_owned());
        assert!(frame.amax() < 1e-12);
        let p = ProductModel::new(2, 1);
        let u = FramePoint::at(&p, &ChartPoint::new(vec![0.0, 1.0, 2.0])).unwrap();
        assert!(horizontal_field(&p, &u, 0).unwrap().1.amax() < 1e-12);
        assert!(horizontal_field(&p, &u, 1).is_err());
    }

    #[test]
    fn torus_transport_keeps_the_leaf_field() {
        // ∇^E_Y Y = 0, so transport along Y moves the frame vector exactly as
        // the field Y itself changes: d/ds Y(x(s)) = (Y·∂) Y.
        let m = EmbeddedTorusModel::default();
        for &x in &[0.0, 0.7, 2.0, 3.5] {
            let p = ChartPoint::new(vec![x, 1.0]);
            let u = FramePoint::at(&m, &p).unwrap();
            let (base, frame) = horizontal_field(&m, &u, 0).unwrap();
            let y = m.leaf_field(x);
            let dy = fd::derivative_vector(|t| m.leaf_field(x + t * y[0]), 1e-3);
            assert!((base.components - &y).amax() < 1e-14);
            assert!((frame.column(0) - dy).amax() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn kronecker_matches_closed_form_pathwise() {
        let k = KroneckerModel::torus(2f64.sqrt()).unwrap();
        let x0 = ChartPoint::new(vec![0.5, 0.25]);
        let cfg = SdeConfig::new(1e-2, 100).paths(3).seed(11);
        let ens = fobm_frame_bundle(&k, &FramePoint::at(&k, &x0).unwrap(), &cfg).unwrap();
        for p in 0..3 {
            let exact = crate::models::kronecker_fobm(&k, &x0, &ens.brownian_path(p, 0));
            for (i, e) in exact.iter().enumerate() {
                assert!((ens.state(p, i).coords() - e.coords()).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_noise_gives_constant_path() {
        let m = EmbeddedTorusModel::default();
        let x0 = ChartPoint::new(vec![1.0, 2.0]);
        let cfg = SdeConfig::new(1e-2, 50);
        let rec = frame_bundle_path_with_noise(&m, &FramePoint::at(&m, &x0).unwrap(), &cfg, &[0.0; 50], 0)
            .unwrap();
        for chunk in rec.states.chunks(2) {
            assert_eq!(chunk, &[1.0, 2.0]);
        }
    }

    #[test]
    fn frame_stays_orthonormal_and_in_e() {
        let m = EmbeddedTorusModel::new(1.5, 0.7).unwrap();
        let mut u = FramePoint::at(&m, &ChartPoint::new(vec![0.2, 0.0])).unwrap();
        let noise = brownian_increments(5, 0, 200, 1e-2);
        for db in noise {
            let lf = local_frame(&m, &u.base).unwrap();
            let d0 = combined_drift(&m, &lf, &u.base, &u.frame, &DVector::from_element(1, db)).unwrap();
            let x = ChartPoint::from_vector(u.base.coords() + d0.base);
            u = FramePoint {
                frame: reorthonormalize(&m, &x, &(&u.frame + d0.frame)).unwrap(),
                base: x,
            };
            let (ortho, normal) = u.defects(&m).unwrap();
            assert!(ortho <= 1e-10 && normal <= 1e-10);
        }
    }

    #[test]
    fn flow_construction_matches_closed_form() {
        let m = EmbeddedTorusModel::default();
        let cfg = SdeConfig::new(1e-3, 500).paths(2).seed(4);
        let ens = fobm_flow_1d(&m, &ChartPoint::new(vec![0.1, 0.2]), &cfg).unwrap();
        for p in 0..2 {
            let exact =
                crate::models::example3_closed_form_fobm(&m, 0.1, 0.2, &ens.brownian_path(p, 0));
            for (i, e) in exact.iter().enumerate() {
                assert!((ens.state(p, i).coords() - e.coords()).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn numeric_flow_agrees_with_closed_form_and_reverses() {
        let m = EmbeddedTorusModel::default();
        let numeric = crate::geometry::ChartModel::without_christoffels(m.clone());
        let x0 = ChartPoint::new(vec![0.3, -0.4]);
        let there = leaf_flow(&numeric, &x0, 1.7).unwrap();
        let (xe, ye) = m.flow(0.3, -0.4, 1.7);
        assert!((there.get(0) - xe).abs() < 1e-8 && (there.get(1) - ye).abs() < 1e-8);
        let back = leaf_flow(&numeric, &there, -1.7).unwrap();
        assert!((back.coords() - x0.coords()).amax() < 1e-8);
    }

    #[test]
    fn unit_leaf_fields_of_curves_pass_the_geodesic_check() {
        // For p = 1 the leaf connection only sees the tangential part of
        // ∇_Y Y, which vanishes for a unit field; the check guards against
        // numerical breakdown rather than geometry.
        let m = crate::geometry::ChartModel::builder("parabolas", 2, 1)
            .e_frame(|x: &ChartPoint| vec![DVector::from_vec(vec![1.0, 2.0 * x.get(0)])])
            .build();
        let x0 = ChartPoint::new(vec![0.5, 0.0]);
        assert!(leaf_field_geodesic_defect(&m, &x0).unwrap() < 1e-9);
        let cfg = SdeConfig::new(1e-2, 20).seed(2);
        let ens = fobm_flow_1d(&m, &x0, &cfg).unwrap();
        for k in 0..ens.n_records() {
            let x = ens.state(0, k);
            assert!((x.get(1) - x.get(0).powi(2) + 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn coarsened_ensembles_share_the_brownian_path() {
        let k = KroneckerModel::plane(1.0).unwrap();
        let u0 = FramePoint::at(&k, &ChartPoint::new(vec![0.0, 0.0])).unwrap();
        let cfg = SdeConfig::new(1e-2, 20).paths(3).seed(8);
        let fine = fobm_frame_bundle(&k, &u0, &cfg).unwrap();
        let coarse = fobm_frame_bundle_coarsened(&k, &u0, &cfg, 4).unwrap();
        assert_eq!(coarse.steps, vec![0, 1, 2, 3, 4, 5]);
        assert!((coarse.dt - 4e-2).abs() < 1e-15);
        for p in 0..3 {
            assert!((fine.endpoint(p).coords() - coarse.endpoint(p).coords()).amax() < 1e-12);
        }
        assert!(fobm_frame_bundle_coarsened(&k, &u0, &cfg, 3).is_err());
    }

    #[test]
    fn config_validation_and_recording() {
        assert!(SdeConfig::new(0.0, 10).validate().is_err());
        assert!(SdeConfig::new(0.1, 0).validate().is_err());
        assert!(SdeConfig::new(0.1, 10).stride(0).validate().is_err());
        assert_eq!(SdeConfig::new(0.1, 10).stride(4).recorded_steps(), vec![0, 4, 8, 10]);
        assert_eq!(SdeConfig::new(0.1, 10).endpoints_only().recorded_steps(), vec![0, 10]);
        assert!((SdeConfig::new(0.1, 10).horizon() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_wraps_periodic_coordinates() {
        let m = KroneckerModel::torus(1.0).unwrap();
        let x0 = ChartPoint::new(vec![6.2, 0.0]);
        let cfg = SdeConfig::new(0.5, 2).seed(1);
        let ens = fobm_frame_bundle(&m, &FramePoint::at(&m, &x0).unwrap(), &cfg).unwrap();
        let mut buf = Vec::new();
        ens.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("path_id,step,t,x1,x2"));
        for line in lines {
            for v in line.split(',').skip(3) {
                let v: f64 = v.parse().unwrap();
                assert!((0.0..2.0 * std::f64::consts::PI).contains(&v));
            }
        }
    }
}
