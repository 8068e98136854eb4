//! Riemannian geometry of metric fields on 2D and 3D parameter manifolds.
//!
//! Conventions: `Γ^i_jk = ½ g^il (∂_k g_lj + ∂_j g_lk − ∂_l g_jk)`,
//! `R^i_jkl = ∂_k Γ^i_lj − ∂_l Γ^i_kj + Γ^s_lj Γ^i_ks − Γ^s_kj Γ^i_ls`,
//! `R_jl = R^k_jkl`, `R = g^jl R_jl`, so the unit sphere has `R = 2`.
//!
//! Flat layouts: `Γ^i_jk` at `(i·d + j)·d + k`, `R^i_jkl` at
//! `((i·d + j)·d + k)·d + l`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::models::{submatrix, ClosedForm, ModelSpec, ParamPoint, Quantity, SymmetricCoupled};
use crate::qgt::{phase_block_from_covariance, Eigensystem, Options, StateSelector};

/// Relative default step, `h_i = STEP · scale_i`.
pub const STEP: f64 = 1e-3;
/// Largest accepted condition number of the scaled metric.
pub const MAX_CONDITION: f64 = 1e10;
/// Relative symmetry tolerance for metric evaluations.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Flatness threshold factor.
pub const FLATNESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSource {
    ClosedForm,
    QgtEngine,
    PhaseBlockReduced,
    Custom,
}

impl fmt::Display for MetricSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricSource::ClosedForm => "closed-form",
            MetricSource::QgtEngine => "qgt-engine",
            MetricSource::PhaseBlockReduced => "phase-block-reduced",
            MetricSource::Custom => "custom",
        })
    }
}

type MetricFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// A metric `g(x)` over `dim` coordinates.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    source: MetricSource,
    eval: Arc<MetricFn>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField").field("dim", &self.dim).field("source", &self.source).finish()
    }
}

/// Full parameter point with `coords` replaced by `x`.
fn embed_point(base: &ParamPoint, coords: &[usize], x: &[f64]) -> ParamPoint {
    let mut p = base.clone();
    for (&c, &v) in coords.iter().zip(x) {
        p = p.with(c, v);
    }
    p
}

fn check_coords(model: &ModelSpec, base: &ParamPoint, coords: &[usize]) -> Result<()> {
    let np = model.param_names().len();
    if base.len() != np {
        return Err(Error::DimensionMismatch { expected: np, got: base.len() });
    }
    if let Some(&c) = coords.iter().find(|&&c| c >= np) {
        return Err(Error::ModeOutOfRange { mode: c, modes: np });
    }
    Ok(())
}

impl MetricField {
    pub fn new(
        dim: usize,
        source: MetricSource,
        eval: impl Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("metric fields have dimension 2 or 3, got {dim}")));
        }
        Ok(Self { dim, source, eval: Arc::new(eval) })
    }

    /// Closed-form parameter metric on the coordinates `coords`, with the
    /// remaining parameters held at `base`.
    pub fn closed_form(model: &ModelSpec, qn: &[u32], base: &ParamPoint, coords: &[usize]) -> Result<Self> {
        check_coords(model, base, coords)?;
        let (model, qn, base, coords) = (model.clone(), qn.to_vec(), base.clone(), coords.to_vec());
        let dim = coords.len();
        Self::new(dim, MetricSource::ClosedForm, move |x| {
            let p = embed_point(&base, &coords, x);
            match model.oracle(&Quantity::Metric, &p, &qn)? {
                ClosedForm::Real(g) => Ok(submatrix(&g, &coords)),
                other => Err(Error::InvalidArgument(format!("metric oracle returned {other:?}"))),
            }
        })
    }

    /// Real part of the closed-form phase-space block, reduced to `mode`
    /// for two-mode models, read as a metric over `coords`.
    pub fn phase_block(model: &ModelSpec, qn: &[u32], base: &ParamPoint, coords: &[usize], mode: usize) -> Result<Self> {
        check_coords(model, base, coords)?;
        let n = model.dof();
        if mode >= n {
            return Err(Error::ModeOutOfRange { mode, modes: n });
        }
        if coords.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: coords.len() });
        }
        let (model, qn, base, coords) = (model.clone(), qn.to_vec(), base.clone(), coords.to_vec());
        Self::new(2, MetricSource::PhaseBlockReduced, move |x| {
            let p = embed_point(&base, &coords, x);
            match model.oracle(&Quantity::PhaseBlock, &p, &qn)? {
                ClosedForm::Complex(g) => Ok(submatrix(&g.map(|z| z.re), &[mode, mode + n])),
                other => Err(Error::InvalidArgument(format!("phase-block oracle returned {other:?}"))),
            }
        })
    }

    /// Parameter metric from the perturbative engine at `cutoff` levels per
    /// mode, rebuilding the basis at every evaluation point.
    pub fn engine(
        model: &ModelSpec,
        qn: &[u32],
        base: &ParamPoint,
        coords: &[usize],
        cutoff: usize,
        opts: Options,
    ) -> Result<Self> {
        check_coords(model, base, coords)?;
        let (model, base, coords) = (model.clone(), base.clone(), coords.to_vec());
        let sel = StateSelector::new(qn.to_vec());
        let dim = coords.len();
        Self::new(dim, MetricSource::QgtEngine, move |x| {
            let p = embed_point(&base, &coords, x);
            let basis = model.default_basis(&p, cutoff)?;
            let sys = Eigensystem::solve(&model, &p, &basis)?;
            let g = sys.perturbative(std::slice::from_ref(&sel), &opts).remove(0)?;
            Ok(submatrix(&g.metric(), &coords))
        })
    }

    /// Phase-space metric `Ω σ Ωᵀ` of `mode` from the numerical covariance
    /// matrix, read as a metric over two `coords`.
    pub fn phase_block_engine(
        model: &ModelSpec,
        qn: &[u32],
        base: &ParamPoint,
        coords: &[usize],
        mode: usize,
        cutoff: usize,
        opts: Options,
    ) -> Result<Self> {
        check_coords(model, base, coords)?;
        if mode >= model.dof() {
            return Err(Error::ModeOutOfRange { mode, modes: model.dof() });
        }
        if coords.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: coords.len() });
        }
        let (model, base, coords) = (model.clone(), base.clone(), coords.to_vec());
        let sel = StateSelector::new(qn.to_vec());
        Self::new(2, MetricSource::PhaseBlockReduced, move |x| {
            let p = embed_point(&base, &coords, x);
            let basis = model.default_basis(&p, cutoff)?;
            let cov = Eigensystem::solve(&model, &p, &basis)?.covariance(&sel, &opts)?.reduce(&[mode])?;
            Ok(phase_block_from_covariance(&cov, sel.quantum_numbers.clone()).metric())
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> MetricSource {
        self.source
    }

    /// `g(x)`, symmetrized after a symmetry check.
    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let g = (self.eval)(x)?;
        if g.nrows() != self.dim || g.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: g.nrows() });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularMetric(format!("non-finite metric entry at {x:?}")));
        }
        let scale = g.amax().max(f64::MIN_POSITIVE);
        let asym = (&g - g.transpose()).amax() / scale;
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidArgument(format!("metric asymmetry {asym:e} at {x:?}")));
        }
        Ok((&g + g.transpose()) * 0.5)
    }

    /// Field over the coordinates `keep`, the others held at `base`.
    pub fn restrict(&self, keep: &[usize], base: &[f64]) -> Result<Self> {
        if base.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: base.len() });
        }
        if let Some(&c) = keep.iter().find(|&&c| c >= self.dim) {
            return Err(Error::ModeOutOfRange { mode: c, modes: self.dim });
        }
        let (parent, keep, base) = (self.clone(), keep.to_vec(), base.to_vec());
        let dim = keep.len();
        let source = self.source;
        Self::new(dim, source, move |x| {
            let mut full = base.clone();
            for (&c, &v) in keep.iter().zip(x) {
                full[c] = v;
            }
            Ok(submatrix(&parent.eval(&full)?, &keep))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryOptions {
    pub step: f64,
    /// Per-coordinate scale; `max(|x_i|, 1)` when `None`.
    pub scales: Option<Vec<f64>>,
    /// Combine steps `h` and `h/2` for every curvature output.
    pub richardson: bool,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        Self { step: STEP, scales: None, richardson: true }
    }
}

impl GeometryOptions {
    fn scales(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = match &self.scales {
            Some(s) if s.len() != x.len() => return Err(Error::DimensionMismatch { expected: x.len(), got: s.len() }),
            Some(s) => s.clone(),
            None => x.iter().map(|v| v.abs().max(1.0)).collect(),
        };
        if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("coordinate scales must be positive".into()));
        }
        Ok(s)
    }

    fn steps(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step {} must be positive", self.step)));
        }
        let h: Vec<f64> = self.scales(x)?.iter().map(|s| self.step * s).collect();
        for (hi, xi) in h.iter().zip(x) {
            if xi + hi == *xi {
                return Err(Error::InvalidArgument(format!("step {hi:e} underflows at coordinate {xi}")));
            }
        }
        Ok(h)
    }
}

fn shifted(x: &[f64], k: usize, d: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[k] += d;
    y
}

fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse.iter().zip(fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

/// Inverse after checking the condition number of `S g S`, `S = diag(scales)`.
fn checked_inverse(g: &DMatrix<f64>, scales: &[f64]) -> Result<DMatrix<f64>> {
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(scales));
    let eig = SymmetricEigen::new(&s * g * &s);
    let lo = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let hi = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::SingularMetric(format!("condition number {:e}", hi / lo)));
    }
    g.clone().try_inverse().ok_or_else(|| Error::SingularMetric("metric is not invertible".into()))
}

/// `∂_k g` by central differences.
fn metric_derivatives(field: &MetricField, x: &[f64], h: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    (0..field.dim)
        .map(|k| Ok((field.eval(&shifted(x, k, h[k]))? - field.eval(&shifted(x, k, -h[k]))?) / (2.0 * h[k])))
        .collect()
}

fn christoffel_with(field: &MetricField, x: &[f64], h: &[f64], scales: &[f64]) -> Result<Vec<f64>> {
    let d = field.dim;
    let g = field.eval(x)?;
    let inv = checked_inverse(&g, scales)?;
    let dg = metric_derivatives(field, x, h)?;
    let mut gamma = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in j..d {
                let v: f64 = (0..d)
                    .map(|l| 0.5 * inv[(i, l)] * (dg[k][(l, j)] + dg[j][(l, k)] - dg[l][(j, k)]))
                    .sum();
                gamma[(i * d + j) * d + k] = v;
                gamma[(i * d + k) * d + j] = v;
            }
        }
    }
    Ok(gamma)
}

fn riemann_with(field: &MetricField, x: &[f64], h: &[f64], scales: &[f64]) -> Result<Vec<f64>> {
    let d = field.dim;
    let g0 = christoffel_with(field, x, h, scales)?;
    let mut dgamma = Vec::with_capacity(d);
    for k in 0..d {
        let up = christoffel_with(field, &shifted(x, k, h[k]), h, scales)?;
        let dn = christoffel_with(field, &shifted(x, k, -h[k]), h, scales)?;
        dgamma.push(up.iter().zip(&dn).map(|(a, b)| (a - b) / (2.0 * h[k])).collect::<Vec<f64>>());
    }
    let gam = |i: usize, j: usize, k: usize| g0[(i * d + j) * d + k];
    let mut r = vec![0.0; d * d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut v = dgamma[k][(i * d + l) * d + j] - dgamma[l][(i * d + k) * d + j];
                    for s in 0..d {
                        v += gam(s, l, j) * gam(i, k, s) - gam(s, k, j) * gam(i, l, s);
                    }
                    r[((i * d + j) * d + k) * d + l] = v;
                }
            }
        }
    }
    Ok(r)
}

fn with_richardson<F>(x: &[f64], opts: &GeometryOptions, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &[f64]) -> Result<Vec<f64>>,
{
    let h = opts.steps(x)?;
    let scales = opts.scales(x)?;
    let coarse = f(&h, &scales)?;
    if !opts.richardson {
        return Ok(coarse);
    }
    let half: Vec<f64> = h.iter().map(|v| v / 2.0).collect();
    Ok(richardson(&coarse, &f(&half, &scales)?))
}

/// `Γ^i_jk`, flat.
pub fn christoffel(field: &MetricField, x: &[f64], opts: &GeometryOptions) -> Result<Vec<f64>> {
    with_richardson(x, opts, |h, s| christoffel_with(field, x, h, s))
}

/// `R^i_jkl`, flat.
pub fn riemann(field: &MetricField, x: &[f64], opts: &GeometryOptions) -> Result<Vec<f64>> {
    with_richardson(x, opts, |h, s| riemann_with(field, x, h, s))
}

fn contract(d: usize, r: &[f64], g: &DMatrix<f64>, scales: &[f64]) -> Result<(DMatrix<f64>, f64)> {
    let ricci = DMatrix::from_fn(d, d, |j, l| (0..d).map(|k| r[((k * d + j) * d + k) * d + l]).sum());
    let inv = checked_inverse(g, scales)?;
    let scalar = inv.component_mul(&ricci).sum();
    Ok((ricci, scalar))
}

/// `(R_jl, R)`.
pub fn ricci_scalar(field: &MetricField, x: &[f64], opts: &GeometryOptions) -> Result<(DMatrix<f64>, f64)> {
    let r = riemann(field, x, opts)?;
    contract(field.dim, &r, &field.eval(x)?, &opts.scales(x)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub dim: usize,
    pub metric: DMatrix<f64>,
    pub christoffel: Vec<f64>,
    pub riemann: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub max_riemann: f64,
    /// `FLATNESS_TOL · max|g| · (max scale)⁻²`.
    pub flatness_threshold: f64,
    pub flat: bool,
}

impl CurvatureReport {
    pub fn christoffel_at(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim;
        self.christoffel[(i * d + j) * d + k]
    }

    pub fn riemann_at(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let d = self.dim;
        self.riemann[((i * d + j) * d + k) * d + l]
    }

    /// `R_ijkl = g_im R^m_jkl`, flat.
    pub fn lowered_riemann(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        out[((i * d + j) * d + k) * d + l] =
                            (0..d).map(|m| self.metric[(i, m)] * self.riemann_at(m, j, k, l)).sum();
                    }
                }
            }
        }
        out
    }

    /// `max|R^i_[jkl]| / max|R^i_jkl|` (absolute when the tensor vanishes).
    pub fn bianchi_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let s = self.riemann_at(i, j, k, l) + self.riemann_at(i, k, l, j) + self.riemann_at(i, l, j, k);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        relative_to(worst, self.max_riemann)
    }

    /// `max|R^i_jkl + R^i_jlk|`, relative.
    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        worst = worst.max((self.riemann_at(i, j, k, l) + self.riemann_at(i, j, l, k)).abs());
                    }
                }
            }
        }
        relative_to(worst, self.max_riemann)
    }

    /// `max|Γ^i_jk − Γ^i_kj|`.
    pub fn christoffel_symmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    worst = worst.max((self.christoffel_at(i, j, k) - self.christoffel_at(i, k, j)).abs());
                }
            }
        }
        worst
    }

    /// 2D only: `R_ijkl` against `(R/2)(g_ik g_jl − g_il g_jk)`, relative.
    pub fn two_d_identity_residual(&self) -> Result<f64> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dim });
        }
        let low = self.lowered_riemann();
        let g = &self.metric;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let v = low[((i * 2 + j) * 2 + k) * 2 + l];
                        let e = 0.5 * self.scalar * (g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)]);
                        worst = worst.max((v - e).abs());
                        scale = scale.max(v.abs());
                    }
                }
            }
        }
        Ok(relative_to(worst, scale))
    }
}

fn relative_to(v: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        v / scale
    } else {
        v
    }
}

pub fn curvature_report(field: &MetricField, x: &[f64], opts: &GeometryOptions) -> Result<CurvatureReport> {
    let d = field.dim;
    let metric = field.eval(x)?;
    let scales = opts.scales(x)?;
    let christoffel = christoffel(field, x, opts)?;
    let riemann = riemann(field, x, opts)?;
    let (ricci, scalar) = contract(d, &riemann, &metric, &scales)?;
    let max_riemann = riemann.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let smax = scales.iter().fold(0.0f64, |m, v| m.max(*v));
    let flatness_threshold = FLATNESS_TOL * metric.amax() / (smax * smax);
    Ok(CurvatureReport {
        dim: d,
        metric,
        christoffel,
        riemann,
        ricci,
        scalar,
        max_riemann,
        flatness_threshold,
        flat: max_riemann <= flatness_threshold,
    })
}

/// `max|∇_k g_ij|` with FD Christoffels, relative to `max|∂g|` (absolute
/// when the metric is constant).
pub fn metric_compatibility(field: &MetricField, x: &[f64], opts: &GeometryOptions) -> Result<f64> {
    let d = field.dim;
    let g = field.eval(x)?;
    let h = opts.steps(x)?;
    let dg = metric_derivatives(field, x, &h)?;
    let gamma = christoffel_with(field, x, &h, &opts.scales(x)?)?;
    let gam = |i: usize, j: usize, k: usize| gamma[(i * d + j) * d + k];
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut v = dg[k][(i, j)];
                for l in 0..d {
                    v -= gam(l, k, i) * g[(l, j)] + gam(l, k, j) * g[(i, l)];
                }
                worst = worst.max(v.abs());
                scale = scale.max(dg[k][(i, j)].abs());
            }
        }
    }
    Ok(relative_to(worst, scale))
}

fn direct_terms(field: &MetricField, x: &[f64], h: &[f64]) -> Result<(f64, f64)> {
    let g = field.eval(x)?;
    if g[(0, 0)] == 0.0 {
        return Err(Error::SingularMetric("g11 vanishes".into()));
    }
    let det = g.determinant();
    if !(det > 0.0) {
        return Err(Error::SingularMetric(format!("determinant {det:e}")));
    }
    let dg = metric_derivatives(field, x, h)?;
    let sq = det.sqrt();
    let ratio = g[(0, 1)] / g[(0, 0)];
    let f1 = (ratio * dg[1][(0, 0)] - dg[0][(1, 1)]) / sq;
    let f2 = (2.0 * dg[0][(0, 1)] - dg[1][(0, 0)] - ratio * dg[0][(0, 0)]) / sq;
    Ok((f1, f2))
}

fn scalar_2d_with(field: &MetricField, x: &[f64], h: &[f64]) -> Result<f64> {
    let (f1p, _) = direct_terms(field, &shifted(x, 0, h[0]), h)?;
    let (f1m, _) = direct_terms(field, &shifted(x, 0, -h[0]), h)?;
    let (_, f2p) = direct_terms(field, &shifted(x, 1, h[1]), h)?;
    let (_, f2m) = direct_terms(field, &shifted(x, 1, -h[1]), h)?;
    let det = field.eval(x)?.determinant();
    Ok(((f1p - f1m) / (2.0 * h[0]) + (f2p - f2m) / (2.0 * h[1])) / det.sqrt())
}

/// Scalar curvature of a 2D metric from the closed expression in `g_11`,
/// `g_12`, `g_22` and their first derivatives.
pub fn scalar_2d_direct(field: &MetricField, x: &[f64], opts: &GeometryOptions) -> Result<f64> {
    if field.dim != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: field.dim });
    }
    Ok(with_richardson(x, opts, |h, _| Ok(vec![scalar_2d_with(field, x, h)?]))?[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeltramiCheck {
    /// `max|JᵀJ − g|`.
    pub residual: f64,
    /// `max|g|`.
    pub scale: f64,
}

impl BeltramiCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.residual <= tol * self.scale
    }
}

/// Pulls back `du² + dv²` through the closed-form Beltrami coordinates of
/// the symmetric coupled model and compares with its metric.
pub fn beltrami_check(point: &ParamPoint, qn: &[u32], opts: &GeometryOptions) -> Result<BeltramiCheck> {
    let model = ModelSpec::new(SymmetricCoupled);
    model.check_point(point)?;
    let uv = |p: &ParamPoint| -> Result<Vec<f64>> {
        model.oracle(&Quantity::Beltrami, p, qn)?.vector().map(<[f64]>::to_vec).ok_or_else(|| {
            Error::InvalidArgument("Beltrami oracle returned no vector".into())
        })
    };
    let g = match model.oracle(&Quantity::Metric, point, qn)? {
        ClosedForm::Real(g) => g,
        other => return Err(Error::InvalidArgument(format!("metric oracle returned {other:?}"))),
    };
    let x = point.coords();
    let jac = with_richardson(x, opts, |h, _| {
        let mut j = vec![0.0; 4];
        for k in 0..2 {
            let up = uv(&point.shifted(k, h[k]))?;
            let dn = uv(&point.shifted(k, -h[k]))?;
            for a in 0..2 {
                j[a * 2 + k] = (up[a] - dn[a]) / (2.0 * h[k]);
            }
        }
        Ok(j)
    })?;
    let j = DMatrix::from_row_slice(2, 2, &jac);
    let pull = j.transpose() * j;
    Ok(BeltramiCheck { residual: (pull - &g).amax(), scale: g.amax() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid() -> MetricField {
        MetricField::new(2, MetricSource::Custom, |_| Ok(DMatrix::identity(2, 2))).unwrap()
    }

    fn sphere() -> MetricField {
        MetricField::new(2, MetricSource::Custom, |x| {
            Ok(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[0].sin().powi(2)]))
        })
        .unwrap()
    }

    /// Poincaré half plane `(dx² + dy²)/y²` in sheared coordinates
    /// `x = a + b`, `y = b`.
    fn sheared_hyperbolic() -> MetricField {
        MetricField::new(2, MetricSource::Custom, |c| {
            let y = c[1];
            let j = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
            Ok(j.transpose() * j / (y * y))
        })
        .unwrap()
    }

    #[test]
    fn euclidean_is_flat() {
        let opts = GeometryOptions::default();
        let r = curvature_report(&euclid(), &[0.3, -1.0], &opts).unwrap();
        assert!(r.christoffel.iter().all(|v| v.abs() <= 1e-10));
        assert!(r.flat && r.scalar.abs() < 1e-10);
        assert!(scalar_2d_direct(&euclid(), &[0.3, -1.0], &opts).unwrap().abs() < 1e-10);
    }

    #[test]
    fn sphere_component() {
        for th in [0.4, 1.0, 2.2] {
            let r = curvature_report(&sphere(), &[th, 0.7], &GeometryOptions::default()).unwrap();
            assert!((r.riemann_at(0, 1, 0, 1) - th.sin().powi(2)).abs() < 1e-6);
            assert!((r.scalar - 2.0).abs() < 1e-6);
            assert!(r.two_d_identity_residual().unwrap() < 1e-6);
            assert!(r.antisymmetry_residual() < 1e-8);
        }
    }

    #[test]
    fn direct_formula_agrees() {
        let opts = GeometryOptions::default();
        for (f, x) in [(sphere(), [0.9, 0.1]), (sheared_hyperbolic(), [0.5, 1.7])] {
            let (_, r) = ricci_scalar(&f, &x, &opts).unwrap();
            let d = scalar_2d_direct(&f, &x, &opts).unwrap();
            assert!((r - d).abs() < 1e-5, "{r} {d}");
        }
        let (_, r) = ricci_scalar(&sheared_hyperbolic(), &[0.5, 1.7], &opts).unwrap();
        assert!((r + 2.0).abs() < 1e-6);
    }

    #[test]
    fn symmetric_model_christoffel_and_flatness() {
        let model = ModelSpec::from_name("sym-coupled").unwrap();
        let base = ParamPoint::new(vec![1.0, 1.0]);
        let f = MetricField::closed_form(&model, &[0, 0], &base, &[0, 1]).unwrap();
        let opts = GeometryOptions::default();
        let r = curvature_report(&f, base.coords(), &opts).unwrap();
        assert!((r.christoffel_at(0, 0, 0) + 1.0).abs() < 1e-6);
        assert!(r.flat, "{} > {}", r.max_riemann, r.flatness_threshold);
        assert!(metric_compatibility(&f, base.coords(), &opts).unwrap() < 1e-6);
        let b = beltrami_check(&base, &[0, 0], &opts).unwrap();
        assert!(b.passed(1e-6), "{b:?}");
    }

    #[test]
    fn linear_term_christoffel_entry() {
        let model = ModelSpec::from_name("gho-linear").unwrap();
        let base = ParamPoint::new(vec![1.0, 1.0, 0.0, 1.0]);
        let f = MetricField::closed_form(&model, &[0], &base, &[0, 1, 2]).unwrap();
        let r = curvature_report(&f, &[1.0, 1.0, 0.0], &GeometryOptions::default()).unwrap();
        assert!((r.christoffel_at(1, 0, 0) + 4.0).abs() < 1e-5);
        assert!(r.bianchi_residual() < 1e-6);
    }

    #[test]
    fn singular_metric_refused() {
        let f = MetricField::new(2, MetricSource::Custom, |_| Ok(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])))
            .unwrap();
        assert!(matches!(christoffel(&f, &[0.0, 0.0], &GeometryOptions::default()), Err(Error::SingularMetric(_))));
    }

    #[test]
    fn restriction_keeps_rows() {
        let model = ModelSpec::from_name("gho").unwrap();
        let base = ParamPoint::new(vec![2.0, 0.3, 1.0]);
        let full = MetricField::closed_form(&model, &[1], &base, &[0, 1, 2]).unwrap();
        let sub = full.restrict(&[0, 1], base.coords()).unwrap();
        let direct = MetricField::closed_form(&model, &[1], &base, &[0, 1]).unwrap();
        assert_eq!(sub.eval(&[2.0, 0.3]).unwrap(), direct.eval(&[2.0, 0.3]).unwrap());
    }
}
