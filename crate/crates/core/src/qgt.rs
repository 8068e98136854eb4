//! Quantum geometric tensor engines.
//!
//! * perturbative: sum over the truncated spectrum of
//!   `⟨n|∂_A H|m⟩⟨m|∂_B H|n⟩ / (E_m − E_n)²`, for parameter and
//!   phase-space keys alike;
//! * overlap-fd: `⟨∂_i n|∂_j n⟩ − ⟨∂_i n|n⟩⟨n|∂_j n⟩` from central
//!   differences of tracked, phase-aligned eigenvectors (parameter block);
//! * covariance: the phase-space block rebuilt from the state's covariance
//!   matrix.

use std::fmt;
use std::str::FromStr;

use faer::c64;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{eigh, inner, norm, tail_weight, ConvergenceReport, FockBasis, Quadratures, Spectrum};
use crate::gauss::{omega, CovarianceMatrix};
use crate::models::{build_hamiltonian, phase_labels, ClosedForm, ModelSpec, ParamPoint, Quantity};

/// Fraction of the spectrum, from the bottom, used in sums and tracking.
pub const KEEP_FRACTION: f64 = 0.8;
/// Minimum `|overlap|` accepted when resolving or tracking a state.
pub const TRACKING_THRESHOLD: f64 = 0.9;
/// Relative finite-difference step, `h = FD_STEP · max(|λ|, 1)`.
pub const FD_STEP: f64 = 1e-4;
/// Top fraction of each mode's occupations treated as the truncation tail.
pub const TAIL_FRACTION: f64 = 0.2;
/// Largest tail weight accepted by default.
pub const TAIL_TOLERANCE: f64 = 1e-10;
/// Relative Hermiticity tolerance for results.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Relative tolerance for matching numerical and analytic normal frequencies.
pub const FREQUENCY_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub keep_fraction: f64,
    pub tracking_threshold: f64,
    pub fd_step: f64,
    /// Combine steps `h` and `h/2` as `(4G(h/2) − G(h))/3`.
    pub richardson: bool,
    /// Seed for random eigenvector phases applied before overlap-fd.
    pub phase_twist: Option<u64>,
    /// `None` disables the tail-weight guard.
    pub tail_tolerance: Option<f64>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            keep_fraction: KEEP_FRACTION,
            tracking_threshold: TRACKING_THRESHOLD,
            fd_step: FD_STEP,
            richardson: false,
            phase_twist: None,
            tail_tolerance: Some(TAIL_TOLERANCE),
        }
    }
}

impl Options {
    fn validate(&self) -> Result<()> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!("keep fraction {} not in (0, 1]", self.keep_fraction)));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step {} must be positive", self.fd_step)));
        }
        if !(0.0..=1.0).contains(&self.tracking_threshold) {
            return Err(Error::InvalidArgument(format!("tracking threshold {}", self.tracking_threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// `n`-th level for one mode; rank of the analytic normal-mode energy
    /// for two.
    EnergyOrder,
    /// Largest overlap with the normal-mode product state built from the
    /// numerical ground state.
    OverlapTrack,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolution::EnergyOrder => "energy-order",
            Resolution::OverlapTrack => "overlap-track",
        })
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy-order" => Ok(Resolution::EnergyOrder),
            "overlap-track" => Ok(Resolution::OverlapTrack),
            _ => Err(Error::InvalidArgument(format!("unknown resolution '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSelector {
    pub quantum_numbers: Vec<u32>,
    pub resolution: Resolution,
}

impl StateSelector {
    pub fn new(quantum_numbers: Vec<u32>) -> Self {
        Self { quantum_numbers, resolution: Resolution::OverlapTrack }
    }

    pub fn energy_order(quantum_numbers: Vec<u32>) -> Self {
        Self { quantum_numbers, resolution: Resolution::EnergyOrder }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Perturbative,
    OverlapFd,
    ClosedForm,
    CovarianceDerived,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Perturbative => "perturbative",
            Method::OverlapFd => "overlap-fd",
            Method::ClosedForm => "closed-form",
            Method::CovarianceDerived => "covariance-derived",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perturbative" => Ok(Method::Perturbative),
            "overlap-fd" => Ok(Method::OverlapFd),
            "closed-form" => Ok(Method::ClosedForm),
            "covariance-derived" | "covariance" => Ok(Method::CovarianceDerived),
            _ => Err(Error::InvalidArgument(format!("unknown method '{s}'"))),
        }
    }
}

/// A QGT (or one of its blocks) with labelled rows.
#[derive(Debug, Clone, PartialEq)]
pub struct QgtResult {
    pub labels: Vec<String>,
    pub values: DMatrix<Complex64>,
    pub quantum_numbers: Vec<u32>,
    pub method: Method,
}

impl QgtResult {
    pub fn new(labels: Vec<String>, values: DMatrix<Complex64>, quantum_numbers: Vec<u32>, method: Method) -> Result<Self> {
        if values.nrows() != values.ncols() || values.nrows() != labels.len() {
            return Err(Error::DimensionMismatch { expected: labels.len(), got: values.nrows() });
        }
        Ok(Self { labels, values, quantum_numbers, method })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[(i, j)]
    }

    /// `max|G − G†| / max|G|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let d = (&self.values - self.values.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        d / scale
    }

    /// `Re G`.
    pub fn metric(&self) -> DMatrix<f64> {
        self.values.map(|z| z.re)
    }

    /// `−2 Im G`.
    pub fn curvature(&self) -> DMatrix<f64> {
        self.values.map(|z| -2.0 * z.im)
    }

    /// Rows and columns `idx`, in that order.
    pub fn block(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.dim()) {
            return Err(Error::ModeOutOfRange { mode: bad, modes: self.dim() });
        }
        let k = idx.len();
        Ok(Self {
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            values: DMatrix::from_fn(k, k, |i, j| self.values[(idx[i], idx[j])]),
            quantum_numbers: self.quantum_numbers.clone(),
            method: self.method,
        })
    }

    pub fn block_by_labels(&self, labels: &[String]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::InvalidArgument(format!("no row labelled '{l}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.block(&idx)
    }

    /// Largest `|G_ij − H_ij|` over rows present in both, matched by label.
    pub fn max_deviation(&self, other: &Self) -> Result<f64> {
        let common: Vec<String> = self.labels.iter().filter(|l| other.labels.contains(l)).cloned().collect();
        if common.is_empty() {
            return Err(Error::InvalidArgument("results share no labels".into()));
        }
        let a = self.block_by_labels(&common)?;
        let b = other.block_by_labels(&common)?;
        Ok((&a.values - &b.values).iter().fold(0.0f64, |m, z| m.max(z.norm())))
    }
}

/// `(Re G, −2 Im G)` after checking Hermiticity.
pub fn split(g: &QgtResult) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let defect = g.hermiticity_defect();
    if defect > HERMITICITY_TOL {
        return Err(Error::NotHermitian { defect });
    }
    Ok((g.metric(), g.curvature()))
}

/// Where a selector landed in a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedState {
    pub index: usize,
    pub energy: f64,
    /// Overlap with the normal-mode target (overlap-track only).
    pub overlap: Option<f64>,
}

/// Annihilation operator `b = Σ c_α r_α + d` of one normal mode.
#[derive(Debug, Clone)]
struct Ladder {
    coeffs: Vec<Complex64>,
    shift: Complex64,
}

impl Ladder {
    /// `b† · state`.
    fn raise(&self, quad: &Quadratures, state: &[c64]) -> Result<Vec<c64>> {
        let mut out: Vec<c64> = state.iter().map(|x| x * self.shift.conj()).collect();
        for (alpha, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let r = quad.apply(alpha, state)?;
            for (o, x) in out.iter_mut().zip(r) {
                *o += x * c.conj();
            }
        }
        Ok(out)
    }
}

/// Normal-mode annihilators in the model's mode order.
///
/// For `H = ½ rᵀK r + lᵀr + c`, `[H, b] = −ω b` requires `iKΩc = −ωc`; with
/// `c = K^{1/2} y` this is the Hermitian problem `i K^{1/2}ΩK^{1/2} y = −ω y`.
fn normal_mode_ladders(model: &ModelSpec, point: &ParamPoint) -> Result<Vec<Ladder>> {
    let form = model.quadratic_form(point)?;
    let n = model.dof();
    let k = form.k_matrix();
    let ke = SymmetricEigen::new(k.clone());
    if ke.eigenvalues.iter().any(|&x| x <= 0.0) {
        return Err(Error::domain(model.name(), "a positive-definite quadratic form"));
    }
    let root = &ke.eigenvectors * DMatrix::from_diagonal(&ke.eigenvalues.map(f64::sqrt)) * ke.eigenvectors.transpose();
    let w = omega(n);
    let m = (&root * &w * &root).map(|x| Complex64::new(0.0, x));
    let me = SymmetricEigen::new(m);
    let analytic = model.normal_modes(point)?.frequencies;
    let rootc = root.map(|x| Complex64::new(x, 0.0));
    let wc = w.map(|x| Complex64::new(x, 0.0));
    let mut out = Vec::with_capacity(n);
    for &target in &analytic {
        let (col, lambda) = me
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| (i, l))
            .filter(|(_, l)| *l < 0.0)
            .min_by(|a, b| (a.1 + target).abs().total_cmp(&(b.1 + target).abs()))
            .ok_or_else(|| Error::EigenFailure("no negative normal-mode eigenvalue".into()))?;
        let freq = -lambda;
        if (freq - target).abs() > FREQUENCY_MATCH_TOL * target {
            return Err(Error::EigenFailure(format!("normal frequency {freq} does not match {target}")));
        }
        let y = me.eigenvectors.column(col).into_owned();
        let c = &rootc * y;
        let s = (c.transpose() * &wc * c.map(|z| z.conj()))[(0, 0)] * Complex64::new(0.0, 1.0);
        if s.re <= 0.0 {
            return Err(Error::EigenFailure("normal-mode ladder has wrong commutator sign".into()));
        }
        let c = c.unscale(s.re.sqrt());
        let l = nalgebra::DVector::from_iterator(2 * n, form.l.iter().map(|&x| Complex64::new(x, 0.0)));
        let shift = (c.transpose() * &wc * l)[(0, 0)] * Complex64::new(0.0, 1.0 / freq);
        out.push(Ladder { coeffs: c.iter().copied().collect(), shift });
    }
    Ok(out)
}

/// Diagonalized Hamiltonian at one point, reusable across selectors.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    model: ModelSpec,
    point: ParamPoint,
    quad: Quadratures,
    spectrum: Spectrum,
}

impl Eigensystem {
    pub fn solve(model: &ModelSpec, point: &ParamPoint, basis: &FockBasis) -> Result<Self> {
        let h = build_hamiltonian(model, point, basis)?;
        let spectrum = eigh(&h)?;
        Ok(Self { model: model.clone(), point: point.clone(), quad: Quadratures::new(basis), spectrum })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn point(&self) -> &ParamPoint {
        &self.point
    }

    pub fn basis(&self) -> &FockBasis {
        self.quad.basis()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Number of low-lying eigenpairs used.
    pub fn kept(&self, opts: &Options) -> usize {
        ((opts.keep_fraction * self.spectrum.len() as f64).floor() as usize).max(1)
    }

    /// Locates the selected state and runs the degeneracy and tail guards.
    pub fn resolve(&self, sel: &StateSelector, opts: &Options) -> Result<ResolvedState> {
        opts.validate()?;
        self.model.check_quantum_numbers(&sel.quantum_numbers)?;
        let kept = self.kept(opts);
        let (index, overlap) = match sel.resolution {
            Resolution::EnergyOrder => (self.energy_rank(&sel.quantum_numbers)?, None),
            Resolution::OverlapTrack => {
                let target = self.target_state(&sel.quantum_numbers)?;
                let (k, ov) = best_overlap(&self.spectrum, &target, kept);
                if ov < opts.tracking_threshold {
                    return Err(Error::TrackingFailed { overlap: ov, threshold: opts.tracking_threshold });
                }
                (k, Some(ov))
            }
        };
        if index >= kept {
            return Err(Error::NotConverged(format!(
                "state {index} lies outside the lowest {kept} levels; raise the cutoff"
            )));
        }
        if let Some(gap) = self.spectrum.degenerate_gap(index) {
            return Err(Error::Degenerate { index, gap });
        }
        if let Some(tol) = opts.tail_tolerance {
            let w = tail_weight(self.basis(), self.spectrum.state(index), TAIL_FRACTION);
            if w > tol {
                return Err(Error::NotConverged(format!(
                    "state {index} has weight {w:e} in the top {}% of the cutoff (limit {tol:e})",
                    (TAIL_FRACTION * 100.0) as u32
                )));
            }
        }
        Ok(ResolvedState { index, energy: self.spectrum.energy(index), overlap })
    }

    fn energy_rank(&self, qn: &[u32]) -> Result<usize> {
        if qn.len() == 1 {
            return Ok(qn[0] as usize);
        }
        let w = self.model.normal_modes(&self.point)?.frequencies;
        let energy = |m: u32, n: u32| w[0] * (m as f64 + 0.5) + w[1] * (n as f64 + 0.5);
        let e = energy(qn[0], qn[1]);
        let tol = crate::fock::DEGENERACY_TOL * e.abs();
        let mut rank = 0;
        let mut gap = f64::INFINITY;
        let max_a = (e / w[0]).ceil() as u32 + 1;
        let max_b = (e / w[1]).ceil() as u32 + 1;
        for a in 0..=max_a {
            for b in 0..=max_b {
                if (a, b) == (qn[0], qn[1]) {
                    continue;
                }
                let d = energy(a, b) - e;
                if d.abs() <= tol {
                    gap = gap.min(d.abs());
                } else if d < 0.0 {
                    rank += 1;
                }
            }
        }
        if gap.is_finite() {
            return Err(Error::Degenerate { index: rank, gap });
        }
        Ok(rank)
    }

    /// `∏ (b_k†)^{n_k} |0⟩`, normalized, from the numerical ground state.
    fn target_state(&self, qn: &[u32]) -> Result<Vec<c64>> {
        let mut state = self.spectrum.state(0).to_vec();
        if qn.iter().all(|&n| n == 0) {
            return Ok(state);
        }
        let w = self.model.normal_modes(&self.point)?.frequencies;
        if w.len() == 2 && (w[0] - w[1]).abs() <= crate::fock::DEGENERACY_TOL * w[0].max(w[1]) {
            return Err(Error::Degenerate { index: 0, gap: (w[0] - w[1]).abs() });
        }
        let ladders = normal_mode_ladders(&self.model, &self.point)?;
        for (ladder, &n) in ladders.iter().zip(qn) {
            for _ in 0..n {
                state = ladder.raise(&self.quad, &state)?;
            }
        }
        let nrm = norm(&state);
        Ok(state.into_iter().map(|x| x / nrm).collect())
    }

    fn perturbative_at(&self, index: usize, kept: usize) -> Result<DMatrix<Complex64>> {
        let psi = self.spectrum.state(index);
        let np = self.model.param_names().len();
        let form = self.model.quadratic_form(&self.point)?;
        let mut applied: Vec<Vec<c64>> = Vec::new();
        for i in 0..np {
            applied.push(self.model.quadratic_form_derivative(&self.point, i)?.apply(&self.quad, psi)?);
        }
        let r: Vec<Vec<c64>> = (0..self.quad.len()).map(|a| self.quad.apply(a, psi)).collect::<Result<_>>()?;
        for alpha in 0..self.quad.len() {
            let mut v: Vec<c64> = psi.iter().map(|x| x * form.l[alpha]).collect();
            for (beta, rb) in r.iter().enumerate() {
                let kab = form.k[alpha][beta];
                if kab != 0.0 {
                    for (o, x) in v.iter_mut().zip(rb) {
                        *o += x * kab;
                    }
                }
            }
            applied.push(v);
        }
        let e0 = self.spectrum.energy(index);
        let d = applied.len();
        let mut w = DMatrix::<Complex64>::zeros(d, kept);
        for m in (0..kept).filter(|&m| m != index) {
            let phi = self.spectrum.state(m);
            let de = self.spectrum.energy(m) - e0;
            for (a, v) in applied.iter().enumerate() {
                w[(a, m)] = inner(phi, v) / de;
            }
        }
        Ok(w.conjugate() * w.transpose())
    }

    /// Perturbative QGT for every selector; each entry fails independently.
    pub fn perturbative(&self, selectors: &[StateSelector], opts: &Options) -> Vec<Result<QgtResult>> {
        let kept = self.kept(opts);
        let labels = self.model.labels();
        selectors
            .iter()
            .map(|sel| {
                let r = self.resolve(sel, opts)?;
                let values = self.perturbative_at(r.index, kept)?;
                QgtResult::new(labels.clone(), values, sel.quantum_numbers.clone(), Method::Perturbative)
            })
            .collect()
    }

    /// Covariance matrix of the selected state.
    pub fn covariance(&self, sel: &StateSelector, opts: &Options) -> Result<CovarianceMatrix> {
        let r = self.resolve(sel, opts)?;
        let psi = self.spectrum.state(r.index);
        let m = self.quad.len();
        let u: Vec<Vec<c64>> = (0..m).map(|a| self.quad.apply(a, psi)).collect::<Result<_>>()?;
        let mean: Vec<f64> = u.iter().map(|ua| inner(psi, ua).re).collect();
        let sigma = DMatrix::from_fn(m, m, |a, b| inner(&u[a], &u[b]).re - mean[a] * mean[b]);
        CovarianceMatrix::new((&sigma + sigma.transpose()) * 0.5)
    }
}

fn best_overlap(spectrum: &Spectrum, target: &[c64], kept: usize) -> (usize, f64) {
    (0..kept.min(spectrum.len()))
        .map(|k| (k, inner(spectrum.state(k), target).norm()))
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

fn twist(rng: &mut Option<ChaCha8Rng>, v: &mut [c64]) {
    if let Some(rng) = rng {
        let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        let phase = c64::new(theta.cos(), theta.sin());
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Phase-aligns `v` so that `⟨center|v⟩` is real and positive.
fn align(center: &[c64], v: &mut [c64]) {
    let ov = inner(center, v);
    if ov.norm() > 0.0 {
        let phase = ov.conj() / ov.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

fn provost_vallee(center: &[c64], derivs: &[Vec<c64>]) -> DMatrix<Complex64> {
    let p = derivs.len();
    let proj: Vec<c64> = derivs.iter().map(|d| inner(center, d)).collect();
    DMatrix::from_fn(p, p, |i, j| inner(&derivs[i], &derivs[j]) - proj[i].conj() * proj[j])
}

/// Perturbative QGT over all keys (parameters, then `q_a`, then `p_a`).
pub fn qgt_perturbative(
    model: &ModelSpec,
    point: &ParamPoint,
    selector: &StateSelector,
    basis: &FockBasis,
    opts: &Options,
) -> Result<QgtResult> {
    let sys = Eigensystem::solve(model, point, basis)?;
    sys.perturbative(std::slice::from_ref(selector), opts).remove(0)
}

/// Overlap-fd parameter block for one selector.
pub fn qgt_overlap_fd(
    model: &ModelSpec,
    point: &ParamPoint,
    selector: &StateSelector,
    basis: &FockBasis,
    opts: &Options,
) -> Result<QgtResult> {
    let center = Eigensystem::solve(model, point, basis)?;
    qgt_overlap_fd_many(&center, std::slice::from_ref(selector), opts)?.remove(0)
}

/// Overlap-fd parameter blocks for several selectors sharing the displaced
/// diagonalizations. The outer error covers failures common to all
/// selectors (such as a displaced point leaving the domain).
pub fn qgt_overlap_fd_many(
    center: &Eigensystem,
    selectors: &[StateSelector],
    opts: &Options,
) -> Result<Vec<Result<QgtResult>>> {
    opts.validate()?;
    let model = center.model();
    let point = center.point();
    let basis = center.basis();
    let kept = center.kept(opts);
    let mut rng = opts.phase_twist.map(ChaCha8Rng::seed_from_u64);
    let mut states: Vec<Result<Vec<c64>>> = selectors
        .iter()
        .map(|sel| {
            let r = center.resolve(sel, opts)?;
            Ok(center.spectrum().state(r.index).to_vec())
        })
        .collect();
    for s in states.iter_mut().flatten() {
        twist(&mut rng, s);
    }
    let np = model.param_names().len();
    let scales: Vec<f64> = if opts.richardson { vec![1.0, 0.5] } else { vec![1.0] };
    // derivs[scale][selector][param]
    let mut derivs: Vec<Vec<Result<Vec<Vec<c64>>>>> = Vec::new();
    for &scale in &scales {
        let mut per_sel: Vec<Result<Vec<Vec<c64>>>> =
            states.iter().map(|s| s.as_ref().map(|_| Vec::new()).map_err(Clone::clone)).collect();
        for i in 0..np {
            let h = opts.fd_step * scale * point.get(i).abs().max(1.0);
            let plus = Eigensystem::solve(model, &point.shifted(i, h), basis)?;
            let minus = Eigensystem::solve(model, &point.shifted(i, -h), basis)?;
            for (slot, psi) in per_sel.iter_mut().zip(&states) {
                let (Ok(list), Ok(psi)) = (slot.as_mut(), psi.as_ref()) else { continue };
                let mut side = |sys: &Eigensystem| -> Result<Vec<c64>> {
                    let (k, ov) = best_overlap(sys.spectrum(), psi, kept);
                    if ov < opts.tracking_threshold {
                        return Err(Error::TrackingFailed { overlap: ov, threshold: opts.tracking_threshold });
                    }
                    if let Some(gap) = sys.spectrum().degenerate_gap(k) {
                        return Err(Error::Degenerate { index: k, gap });
                    }
                    let mut v = sys.spectrum().state(k).to_vec();
                    twist(&mut rng, &mut v);
                    align(psi, &mut v);
                    Ok(v)
                };
                match (side(&plus), side(&minus)) {
                    (Ok(up), Ok(dn)) => {
                        list.push(up.iter().zip(&dn).map(|(a, b)| (a - b) / (2.0 * h)).collect());
                    }
                    (Err(e), _) | (_, Err(e)) => *slot = Err(e),
                }
            }
        }
        derivs.push(per_sel);
    }
    let labels = model.param_names();
    Ok((0..selectors.len())
        .map(|s| {
            let psi = states[s].as_ref().map_err(Clone::clone)?;
            let mut blocks = Vec::new();
            for per_scale in &derivs {
                let d = per_scale[s].as_ref().map_err(Clone::clone)?;
                blocks.push(provost_vallee(psi, d));
            }
            let values = if blocks.len() == 2 { (blocks[1].scale(4.0) - &blocks[0]).unscale(3.0) } else { blocks.remove(0) };
            QgtResult::new(labels.clone(), values, selectors[s].quantum_numbers.clone(), Method::OverlapFd)
        })
        .collect())
}

/// Covariance matrix of the selected state.
pub fn covariance_from_state(
    model: &ModelSpec,
    point: &ParamPoint,
    selector: &StateSelector,
    basis: &FockBasis,
    opts: &Options,
) -> Result<CovarianceMatrix> {
    Eigensystem::solve(model, point, basis)?.covariance(selector, opts)
}

/// Phase-space block from a covariance matrix: `Re = Ω σ Ωᵀ`, which gives
/// `g_qq = σ_pp`, `g_qp = −σ_qp`, `g_pp = σ_qq`, and `Im = Ω/2`.
pub fn phase_block_from_covariance(cov: &CovarianceMatrix, quantum_numbers: Vec<u32>) -> QgtResult {
    let n = cov.modes();
    let w = omega(n);
    let re = &w * cov.entries() * w.transpose();
    let values = DMatrix::from_fn(2 * n, 2 * n, |i, j| Complex64::new(re[(i, j)], 0.5 * w[(i, j)]));
    QgtResult { labels: phase_labels(n), values, quantum_numbers, method: Method::CovarianceDerived }
}

/// Closed-form parameter block (`Qgt` oracle).
pub fn closed_form_parameter_block(model: &ModelSpec, point: &ParamPoint, qn: &[u32]) -> Result<QgtResult> {
    let values = match model.oracle(&Quantity::Qgt, point, qn)? {
        ClosedForm::Complex(m) => m,
        other => return Err(Error::EigenFailure(format!("unexpected closed form {other:?}"))),
    };
    QgtResult::new(model.param_names(), values, qn.to_vec(), Method::ClosedForm)
}

/// Closed-form phase-space block (`PhaseBlock` oracle).
pub fn closed_form_phase_block(model: &ModelSpec, point: &ParamPoint, qn: &[u32]) -> Result<QgtResult> {
    let values = match model.oracle(&Quantity::PhaseBlock, point, qn)? {
        ClosedForm::Complex(m) => m,
        other => return Err(Error::EigenFailure(format!("unexpected closed form {other:?}"))),
    };
    QgtResult::new(phase_labels(model.dof()), values, qn.to_vec(), Method::ClosedForm)
}

/// Tolerances for [`consistency_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Perturbative vs overlap-fd, max-abs.
    pub overlap_fd: f64,
    /// Perturbative vs covariance-derived phase block, max-abs.
    pub covariance: f64,
    /// Numerical vs closed form, relative to the closed form's max-abs.
    pub closed_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { overlap_fd: 1e-5, covariance: 1e-8, closed_form: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub quantum_numbers: Vec<u32>,
    pub comparisons: Vec<Comparison>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.passed)
    }
}

fn compare(name: &str, deviation: f64, tolerance: f64) -> Comparison {
    Comparison { name: name.to_string(), deviation, tolerance, passed: deviation <= tolerance }
}

fn relative(dev: f64, reference: &QgtResult) -> f64 {
    let scale = reference.values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale > 0.0 {
        dev / scale
    } else {
        dev
    }
}

/// Closed form if the model provides one for this state, `None` otherwise.
fn optional(r: Result<QgtResult>) -> Result<Option<QgtResult>> {
    match r {
        Ok(g) => Ok(Some(g)),
        Err(Error::UnsupportedQuantity { .. }) | Err(Error::QuantumNumbers(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Pairwise comparison of every pathway for each selector at one point.
pub fn consistency_reports(
    center: &Eigensystem,
    selectors: &[StateSelector],
    tol: &Tolerances,
    opts: &Options,
) -> Result<Vec<ConsistencyReport>> {
    let model = center.model();
    let point = center.point();
    let np = model.param_names().len();
    let nq = 2 * model.dof();
    let params: Vec<usize> = (0..np).collect();
    let phase: Vec<usize> = (np..np + nq).collect();
    let pert = center.perturbative(selectors, opts);
    let fd = qgt_overlap_fd_many(center, selectors, opts)?;
    let mut out = Vec::new();
    for ((sel, pert), fd) in selectors.iter().zip(pert).zip(fd) {
        let pert = pert?;
        let fd = fd?;
        let qn = &sel.quantum_numbers;
        let pp = pert.block(&params)?;
        let ph = pert.block(&phase)?;
        let cov = phase_block_from_covariance(&center.covariance(sel, opts)?, qn.clone());
        let mut comparisons = vec![
            compare("perturbative vs overlap-fd", pp.max_deviation(&fd)?, tol.overlap_fd),
            compare("perturbative vs covariance", ph.max_deviation(&cov)?, tol.covariance),
            compare("hermiticity", pert.hermiticity_defect(), HERMITICITY_TOL),
        ];
        if let Some(cf) = optional(closed_form_parameter_block(model, point, qn))? {
            comparisons.push(compare("parameter block vs closed form", relative(pp.max_deviation(&cf)?, &cf), tol.closed_form));
        }
        if let Some(cf) = optional(closed_form_phase_block(model, point, qn))? {
            comparisons.push(compare("phase block vs closed form", relative(ph.max_deviation(&cf)?, &cf), tol.closed_form));
        }
        out.push(ConsistencyReport { quantum_numbers: qn.clone(), comparisons });
    }
    Ok(out)
}

pub fn consistency_report(
    model: &ModelSpec,
    point: &ParamPoint,
    selector: &StateSelector,
    basis: &FockBasis,
    tol: &Tolerances,
    opts: &Options,
) -> Result<ConsistencyReport> {
    let center = Eigensystem::solve(model, point, basis)?;
    Ok(consistency_reports(&center, std::slice::from_ref(selector), tol, opts)?.remove(0))
}

fn perturbative_values(
    model: &ModelSpec,
    point: &ParamPoint,
    selector: &StateSelector,
    basis: &FockBasis,
    opts: &Options,
) -> Result<Vec<f64>> {
    let g = qgt_perturbative(model, point, selector, basis, opts)?;
    Ok(g.values.iter().flat_map(|z| [z.re, z.im]).collect())
}

/// Perturbative QGT at `basis` and at twice its cutoff; the tail guard is
/// disabled so that the comparison itself decides.
pub fn truncation_check(
    model: &ModelSpec,
    point: &ParamPoint,
    selector: &StateSelector,
    basis: &FockBasis,
    tolerance: f64,
    opts: &Options,
) -> Result<ConvergenceReport> {
    let opts = Options { tail_tolerance: None, ..opts.clone() };
    crate::fock::check_truncation(basis.cutoff(), tolerance, |n| {
        perturbative_values(model, point, selector, &basis.with_cutoff(n)?, &opts)
    })
}

/// [`truncation_check`] at each of `cutoffs`.
pub fn truncation_sequence(
    model: &ModelSpec,
    point: &ParamPoint,
    selector: &StateSelector,
    basis: &FockBasis,
    cutoffs: &[usize],
    opts: &Options,
) -> Result<Vec<ConvergenceReport>> {
    cutoffs
        .iter()
        .map(|&n| truncation_check(model, point, selector, &basis.with_cutoff(n)?, crate::fock::CONVERGENCE_TOL, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(name: &str, coords: &[f64], cutoff: usize) -> (ModelSpec, ParamPoint, FockBasis) {
        let model = ModelSpec::from_name(name).unwrap();
        let point = ParamPoint::new(coords.to_vec());
        let basis = model.default_basis(&point, cutoff).unwrap();
        (model, point, basis)
    }

    #[test]
    fn oscillator_ground_state_entries() {
        let (m, p, b) = setup("gho", &[2.0, 0.0, 1.0], 80);
        let g = qgt_perturbative(&m, &p, &StateSelector::new(vec![0]), &b, &Options::default()).unwrap();
        assert!((g.get(0, 0).re - 1.0 / 128.0).abs() < 1e-8);
        let ph = g.block(&[3, 4]).unwrap();
        assert!(ph.get(0, 0).im.abs() < 1e-8);
        assert!((ph.get(0, 1).im - 0.5).abs() < 1e-8);
        assert!((ph.get(1, 0).im + 0.5).abs() < 1e-8);
        assert!(g.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn overlap_fd_matches_perturbative() {
        let (m, p, b) = setup("gho", &[2.0, 0.5, 1.0], 80);
        let sel = StateSelector::new(vec![1]);
        let opts = Options::default();
        let pert = qgt_perturbative(&m, &p, &sel, &b, &opts).unwrap();
        let fd = qgt_overlap_fd(&m, &p, &sel, &b, &opts).unwrap();
        assert!(pert.max_deviation(&fd).unwrap() < 1e-5);
    }

    #[test]
    fn twist_leaves_result_unchanged() {
        let (m, p, b) = setup("gho", &[1.5, 0.3, 1.2], 80);
        let sel = StateSelector::new(vec![2]);
        let plain = qgt_overlap_fd(&m, &p, &sel, &b, &Options::default()).unwrap();
        let twisted = Options { phase_twist: Some(7), ..Options::default() };
        let tw = qgt_overlap_fd(&m, &p, &sel, &b, &twisted).unwrap();
        assert!(plain.max_deviation(&tw).unwrap() < 1e-8);
        assert!((plain.curvature() - tw.curvature()).amax() < 1e-8);
    }

    #[test]
    fn phase_block_from_vacuum() {
        let cov = CovarianceMatrix::new(DMatrix::identity(2, 2) * 0.5).unwrap();
        let g = phase_block_from_covariance(&cov, vec![0]);
        assert_eq!(g.metric(), DMatrix::identity(2, 2) * 0.5);
        let (_, f) = split(&g).unwrap();
        assert_eq!(f, -omega(1));
    }

    #[test]
    fn unit_oscillator_vacuum_covariance() {
        let (m, p, b) = setup("gho", &[1.0, 0.0, 1.0], 30);
        let cov = covariance_from_state(&m, &p, &StateSelector::new(vec![0]), &b, &Options::default()).unwrap();
        assert!((cov.entries() - DMatrix::identity(2, 2) * 0.5).amax() < 1e-12);
    }

    #[test]
    fn split_rejects_non_hermitian() {
        let v = DMatrix::from_row_slice(2, 2, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)]);
        let g = QgtResult::new(vec!["a".into(), "b".into()], v, vec![0], Method::Perturbative).unwrap();
        assert!(matches!(split(&g), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn two_mode_selectors_agree() {
        let (m, p, b) = setup("lin-coupled", &[1.0, 1.6, 0.7], 24);
        let sys = Eigensystem::solve(&m, &p, &b).unwrap();
        let opts = Options { tail_tolerance: None, ..Options::default() };
        for qn in [[0, 0], [1, 0], [0, 1], [1, 1], [2, 0]] {
            let a = sys.resolve(&StateSelector::new(qn.to_vec()), &opts).unwrap();
            let e = sys.resolve(&StateSelector::energy_order(qn.to_vec()), &opts).unwrap();
            assert_eq!(a.index, e.index, "{qn:?}");
            assert!(a.overlap.unwrap() > 0.99);
        }
    }

    #[test]
    fn degenerate_selection_refused() {
        let (m, p, b) = setup("sym-coupled", &[1.0, 0.0], 12);
        let sys = Eigensystem::solve(&m, &p, &b).unwrap();
        let opts = Options { tail_tolerance: None, ..Options::default() };
        assert!(matches!(
            sys.resolve(&StateSelector::energy_order(vec![1, 0]), &opts),
            Err(Error::Degenerate { .. })
        ));
        assert!(sys.resolve(&StateSelector::new(vec![0, 0]), &opts).is_ok());
    }

    #[test]
    fn tail_guard_rejects_small_cutoff() {
        let (m, p, b) = setup("gho", &[2.0, 0.5, 1.0], 12);
        let r = qgt_perturbative(&m, &p, &StateSelector::new(vec![0]), &b, &Options::default());
        assert!(matches!(r, Err(Error::NotConverged(_))));
    }
}
