//! Truncated bosonic Fock space: ladder and quadrature matrices, Weyl-ordered
//! products and Hermitian eigendecomposition.
//!
//! Multi-mode states use the Kronecker ordering in which mode 0 is the most
//! significant index. Units have ħ = 1 and
//! `q = (a + a†)/√(2ω_b)`, `p = i√(ω_b/2)(a† − a)`.

use faer::{c64, Col, ColRef, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Relative Hermiticity tolerance for the operator flag.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative gap below which adjacent eigenvalues are flagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Largest supported number of modes.
pub const MAX_MODES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    cutoff: usize,
    frequencies: Vec<f64>,
}

impl FockBasis {
    /// One reference frequency per mode; `cutoff` levels per mode.
    pub fn new(cutoff: usize, frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() || frequencies.len() > MAX_MODES {
            return Err(Error::InvalidBasis(format!(
                "{} modes requested, supported range is 1..={MAX_MODES}",
                frequencies.len()
            )));
        }
        if cutoff < 2 {
            return Err(Error::InvalidBasis(format!("cutoff {cutoff} < 2")));
        }
        if let Some(w) = frequencies.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidBasis(format!("basis frequency {w} is not positive")));
        }
        Ok(Self { cutoff, frequencies })
    }

    pub fn uniform(modes: usize, cutoff: usize, frequency: f64) -> Result<Self> {
        Self::new(cutoff, vec![frequency; modes])
    }

    pub fn modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn frequency(&self, mode: usize) -> f64 {
        self.frequencies[mode]
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.modes() as u32)
    }

    /// Same frequencies, different cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Self::new(cutoff, self.frequencies.clone())
    }

    /// Occupation numbers of a flat basis index.
    pub fn occupations(&self, index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes()];
        let mut rest = index;
        for slot in occ.iter_mut().rev() {
            *slot = rest % self.cutoff;
            rest /= self.cutoff;
        }
        occ
    }

    /// Flat index of a product Fock state.
    pub fn index(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes() {
            return Err(Error::DimensionMismatch { expected: self.modes(), got: occupations.len() });
        }
        let mut idx = 0;
        for &n in occupations {
            if n >= self.cutoff {
                return Err(Error::InvalidArgument(format!("occupation {n} beyond cutoff {}", self.cutoff)));
            }
            idx = idx * self.cutoff + n;
        }
        Ok(idx)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes() {
            return Err(Error::ModeOutOfRange { mode, modes: self.modes() });
        }
        Ok(())
    }
}

/// Dense square matrix in the Fock basis.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    entries: Mat<c64>,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(entries: Mat<c64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), got: entries.ncols() });
        }
        Ok(Self { entries, hermitian: false })
    }

    /// Verifies Hermiticity within [`HERMITIAN_TOL`], then stores the exact
    /// Hermitian part and sets the flag.
    pub fn hermitian(entries: Mat<c64>) -> Result<Self> {
        let op = Self::new(entries)?;
        op.into_hermitian()
    }

    pub fn into_hermitian(self) -> Result<Self> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let n = self.dim();
        let e = &self.entries;
        let entries = Mat::from_fn(n, n, |i, j| (e[(i, j)] + e[(j, i)].conj()) * 0.5);
        Ok(Self { entries, hermitian: true })
    }

    pub fn identity(dim: usize) -> Self {
        Self { entries: Mat::identity(dim, dim), hermitian: true }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { entries: Mat::zeros(dim, dim), hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.entries[(i, j)]
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.entries[(i, j)].norm());
            }
        }
        m
    }

    /// `max|A − A†| / max|A|` (0 for the zero matrix).
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut d = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                d = d.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        d / scale
    }

    /// True when every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| self.entries[(i, j)].im == 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint().to_owned(), hermitian: self.hermitian }
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { entries: &self.entries + &other.entries, hermitian: self.hermitian && other.hermitian })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { entries: &self.entries - &other.entries, hermitian: self.hermitian && other.hermitian })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self { entries: &self.entries * &other.entries, hermitian: false })
    }

    pub fn scale(&self, s: c64) -> Self {
        Self {
            entries: faer::Scale(s) * &self.entries,
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c64::new(s, 0.0))
    }

    /// `self += s * other` in place.
    pub fn add_scaled(&mut self, s: f64, other: &Self) -> Result<()> {
        self.same_dim(other)?;
        let n = self.dim();
        for j in 0..n {
            for i in 0..n {
                self.entries[(i, j)] += other.entries[(i, j)] * s;
            }
        }
        self.hermitian = self.hermitian && other.hermitian;
        Ok(())
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        ab.sub(&ba)
    }

    pub fn apply(&self, v: &[c64]) -> Result<Vec<c64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let w: Col<c64> = &self.entries * ColRef::from_slice(v);
        Ok((0..w.nrows()).map(|i| w[i]).collect())
    }
}

/// Single-mode annihilation operator on `levels` levels.
fn annihilation(levels: usize) -> Mat<c64> {
    Mat::from_fn(levels, levels, |i, j| if j == i + 1 { c64::new((j as f64).sqrt(), 0.0) } else { c64::new(0.0, 0.0) })
}

fn single_quadratures(levels: usize, frequency: f64) -> (Mat<c64>, Mat<c64>) {
    let a = annihilation(levels);
    let ad = a.adjoint().to_owned();
    let q = faer::Scale(c64::new(1.0 / (2.0 * frequency).sqrt(), 0.0)) * (&a + &ad);
    let p = faer::Scale(c64::new(0.0, (frequency / 2.0).sqrt())) * (&ad - &a);
    (q, p)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Embeds a single-mode matrix acting on `mode`, identity elsewhere.
pub fn embed(basis: &FockBasis, mode: usize, single: MatRef<'_, c64>) -> Result<OperatorMatrix> {
    basis.check_mode(mode)?;
    let n = basis.cutoff();
    if single.nrows() != n || single.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: single.nrows() });
    }
    let mut m = single.to_owned();
    for k in 0..basis.modes() {
        if k < mode {
            m = kron(Mat::<c64>::identity(n, n).as_ref(), m.as_ref());
        } else if k > mode {
            m = kron(m.as_ref(), Mat::<c64>::identity(n, n).as_ref());
        }
    }
    OperatorMatrix::new(m)
}

/// `(a, a†)` on `mode`, identity on the other modes.
pub fn ladder(basis: &FockBasis, mode: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    basis.check_mode(mode)?;
    let a = annihilation(basis.cutoff());
    let ad = a.adjoint().to_owned();
    Ok((embed(basis, mode, a.as_ref())?, embed(basis, mode, ad.as_ref())?))
}

/// `(q, p)` on `mode`, scaled by the mode's basis frequency.
pub fn position_momentum(basis: &FockBasis, mode: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    basis.check_mode(mode)?;
    let (q, p) = single_quadratures(basis.cutoff(), basis.frequency(mode));
    Ok((embed(basis, mode, q.as_ref())?.into_hermitian()?, embed(basis, mode, p.as_ref())?.into_hermitian()?))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..n {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Average of the operand product over all orderings.
pub fn weyl_product(ops: &[&OperatorMatrix]) -> Result<OperatorMatrix> {
    let Some(first) = ops.first() else {
        return Err(Error::InvalidArgument("weyl_product needs at least one operand".into()));
    };
    for op in ops {
        first.same_dim(op)?;
    }
    let perms = permutations(ops.len());
    let mut sum = Mat::<c64>::zeros(first.dim(), first.dim());
    for perm in &perms {
        let mut prod = ops[perm[0]].entries.clone();
        for &k in &perm[1..] {
            prod = &prod * &ops[k].entries;
        }
        sum += &prod;
    }
    let avg = OperatorMatrix::new(faer::Scale(c64::new(1.0 / perms.len() as f64, 0.0)) * &sum)?;
    if ops.iter().all(|o| o.hermitian) {
        avg.into_hermitian()
    } else {
        Ok(avg)
    }
}

/// Phase-space quadratures `r = (q_1..q_N, p_1..p_N)` of a basis, with
/// products formed in a padded single-mode space so that every retained
/// matrix element of a quadratic monomial is exact.
#[derive(Debug, Clone)]
pub struct Quadratures {
    basis: FockBasis,
    single: Vec<(Mat<c64>, Mat<c64>)>,
    padded: Vec<(Mat<c64>, Mat<c64>)>,
}

impl Quadratures {
    pub fn new(basis: &FockBasis) -> Self {
        let n = basis.cutoff();
        let single = basis.frequencies().iter().map(|&w| single_quadratures(n, w)).collect();
        let padded = basis.frequencies().iter().map(|&w| single_quadratures(n + 2, w)).collect();
        Self { basis: basis.clone(), single, padded }
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    /// Number of phase-space coordinates, `2N`.
    pub fn len(&self) -> usize {
        2 * self.basis.modes()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn mode_of(&self, alpha: usize) -> (usize, bool) {
        let n = self.basis.modes();
        if alpha < n {
            (alpha, false)
        } else {
            (alpha - n, true)
        }
    }

    fn pick<'a>(&'a self, set: &'a [(Mat<c64>, Mat<c64>)], alpha: usize) -> &'a Mat<c64> {
        let (mode, is_p) = self.mode_of(alpha);
        if is_p {
            &set[mode].1
        } else {
            &set[mode].0
        }
    }

    /// Embedded `r_alpha`.
    pub fn quadrature(&self, alpha: usize) -> Result<OperatorMatrix> {
        if alpha >= self.len() {
            return Err(Error::ModeOutOfRange { mode: alpha, modes: self.len() });
        }
        let (mode, _) = self.mode_of(alpha);
        embed(&self.basis, mode, self.pick(&self.single, alpha).as_ref())?.into_hermitian()
    }

    fn check_state(&self, state: &[c64]) -> Result<()> {
        let dim = self.basis.dim();
        if state.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: state.len() });
        }
        Ok(())
    }

    /// Applies a single-mode `n×n` matrix acting on `mode` to a full state.
    fn apply_single(&self, mode: usize, a: MatRef<'_, c64>, state: &[c64]) -> Vec<c64> {
        let n = self.basis.cutoff();
        let dim = self.basis.dim();
        // Index = (o·n + occ)·inner + r, with `occ` the occupation of `mode`.
        let inner = n.pow((self.basis.modes() - 1 - mode) as u32);
        let outer = dim / (n * inner);
        let zero = c64::new(0.0, 0.0);
        let mut out = vec![zero; dim];
        for i in 0..n {
            for k in 0..n {
                let aik = a[(i, k)];
                if aik == zero {
                    continue;
                }
                for o in 0..outer {
                    let (dst, src) = ((o * n + i) * inner, (o * n + k) * inner);
                    for r in 0..inner {
                        out[dst + r] += aik * state[src + r];
                    }
                }
            }
        }
        out
    }

    fn same_mode_pair(&self, alpha: usize, beta: usize) -> Mat<c64> {
        let n = self.basis.cutoff();
        let a = self.pick(&self.padded, alpha);
        let b = self.pick(&self.padded, beta);
        let sym = faer::Scale(c64::new(0.5, 0.0)) * (a * b + b * a);
        sym.as_ref().submatrix(0, 0, n, n).to_owned()
    }

    /// `r_alpha · state` without forming the embedded matrix.
    pub fn apply(&self, alpha: usize, state: &[c64]) -> Result<Vec<c64>> {
        if alpha >= self.len() {
            return Err(Error::ModeOutOfRange { mode: alpha, modes: self.len() });
        }
        self.check_state(state)?;
        let (mode, _) = self.mode_of(alpha);
        Ok(self.apply_single(mode, self.pick(&self.single, alpha).as_ref(), state))
    }

    /// Weyl-ordered `(r_α r_β + r_β r_α)/2 · state`, matching [`Self::weyl_pair`].
    pub fn apply_pair(&self, alpha: usize, beta: usize, state: &[c64]) -> Result<Vec<c64>> {
        if alpha >= self.len() || beta >= self.len() {
            return Err(Error::ModeOutOfRange { mode: alpha.max(beta), modes: self.len() });
        }
        self.check_state(state)?;
        let (ma, _) = self.mode_of(alpha);
        let (mb, _) = self.mode_of(beta);
        if ma == mb {
            Ok(self.apply_single(ma, self.same_mode_pair(alpha, beta).as_ref(), state))
        } else {
            let first = self.apply_single(mb, self.pick(&self.single, beta).as_ref(), state);
            Ok(self.apply_single(ma, self.pick(&self.single, alpha).as_ref(), &first))
        }
    }

    /// [`Self::quadratic`] applied to `state` without forming the operator.
    pub fn apply_quadratic(&self, k: &[Vec<f64>], l: &[f64], c: f64, state: &[c64]) -> Result<Vec<c64>> {
        let m = self.len();
        if k.len() != m || k.iter().any(|row| row.len() != m) || l.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: k.len() });
        }
        self.check_state(state)?;
        let mut acc: Vec<c64> = state.iter().map(|x| x * c).collect();
        let mut axpy = |s: f64, v: Vec<c64>| {
            for (a, b) in acc.iter_mut().zip(v) {
                *a += b * s;
            }
        };
        for a in 0..m {
            for b in a..m {
                let coeff = if a == b { 0.5 * k[a][a] } else { 0.5 * (k[a][b] + k[b][a]) };
                if coeff != 0.0 {
                    axpy(coeff, self.apply_pair(a, b, state)?);
                }
            }
            if l[a] != 0.0 {
                axpy(l[a], self.apply(a, state)?);
            }
        }
        Ok(acc)
    }

    /// Embedded Weyl-ordered `(r_α r_β + r_β r_α)/2`.
    pub fn weyl_pair(&self, alpha: usize, beta: usize) -> Result<OperatorMatrix> {
        if alpha >= self.len() || beta >= self.len() {
            return Err(Error::ModeOutOfRange { mode: alpha.max(beta), modes: self.len() });
        }
        let (ma, _) = self.mode_of(alpha);
        let (mb, _) = self.mode_of(beta);
        let op = if ma == mb {
            embed(&self.basis, ma, self.same_mode_pair(alpha, beta).as_ref())?
        } else {
            let a = self.pick(&self.single, alpha);
            let b = self.pick(&self.single, beta);
            let (lo, hi) = if ma < mb { (a, b) } else { (b, a) };
            OperatorMatrix::new(kron(lo.as_ref(), hi.as_ref()))?
        };
        op.into_hermitian()
    }

    /// `½ Σ K_αβ W(r_α r_β) + Σ l_α r_α + c`, with `K` symmetric `2N×2N`.
    pub fn quadratic(&self, k: &[Vec<f64>], l: &[f64], c: f64) -> Result<OperatorMatrix> {
        let m = self.len();
        if k.len() != m || k.iter().any(|row| row.len() != m) || l.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: k.len() });
        }
        let mut acc = OperatorMatrix::identity(self.basis.dim()).scale_real(c);
        for a in 0..m {
            for b in a..m {
                let coeff = if a == b { 0.5 * k[a][a] } else { 0.5 * (k[a][b] + k[b][a]) };
                if coeff != 0.0 {
                    acc.add_scaled(coeff, &self.weyl_pair(a, b)?)?;
                }
            }
            if l[a] != 0.0 {
                acc.add_scaled(l[a], &self.quadrature(a)?)?;
            }
        }
        acc.into_hermitian()
    }
}

/// Phase convention applied to eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// Largest-magnitude component (first on ties) made real and positive.
    LargestComponentReal,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    energies: Vec<f64>,
    states: Mat<c64>,
    gauge: Gauge,
    flagged: Vec<usize>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.energies[k]
    }

    pub fn states(&self) -> MatRef<'_, c64> {
        self.states.as_ref()
    }

    pub fn state(&self, k: usize) -> &[c64] {
        self.states.col_as_slice(k)
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    /// Indices `k` whose gap to `k + 1` fell below the degeneracy threshold.
    pub fn flagged_gaps(&self) -> &[usize] {
        &self.flagged
    }

    /// Smallest gap adjacent to `k` if it is flagged.
    pub fn degenerate_gap(&self, k: usize) -> Option<f64> {
        let mut gap: Option<f64> = None;
        if k > 0 && self.flagged.contains(&(k - 1)) {
            gap = Some(self.energies[k] - self.energies[k - 1]);
        }
        if self.flagged.contains(&k) {
            let g = self.energies[k + 1] - self.energies[k];
            gap = Some(gap.map_or(g, |h: f64| h.min(g)));
        }
        gap
    }
}

fn fix_gauge(states: &mut Mat<c64>) {
    let n = states.nrows();
    for j in 0..states.ncols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..n {
            let a = states[(i, j)].norm_sqr();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        let pivot = states[(best, j)];
        let phase = pivot.conj() / pivot.norm();
        for i in 0..n {
            states[(i, j)] *= phase;
        }
        states[(best, j)] = c64::new(states[(best, j)].re, 0.0);
    }
}

/// Hermitian eigendecomposition, ascending, gauge fixed, gaps flagged.
pub fn eigh(op: &OperatorMatrix) -> Result<Spectrum> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian { defect: op.hermiticity_defect() });
    }
    let n = op.dim();
    let (mut energies, mut states) = if op.is_real() {
        let re = Mat::<f64>::from_fn(n, n, |i, j| op.entries[(i, j)].re);
        let evd = re
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
        let e: Vec<f64> = (0..n).map(|k| evd.S()[k]).collect();
        let u = evd.U();
        (e, Mat::<c64>::from_fn(n, n, |i, j| c64::new(u[(i, j)], 0.0)))
    } else {
        let evd = op
            .entries
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
        let e: Vec<f64> = (0..n).map(|k| evd.S()[k].re).collect();
        (e, evd.U().to_owned())
    };
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::EigenFailure("non-finite eigenvalue".into()));
    }
    if energies.windows(2).any(|w| w[1] < w[0]) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let sorted = Mat::<c64>::from_fn(n, n, |i, j| states[(i, order[j])]);
        energies = order.iter().map(|&k| energies[k]).collect();
        states = sorted;
    }
    fix_gauge(&mut states);
    let scale = energies.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(f64::MIN_POSITIVE);
    let flagged = (0..n.saturating_sub(1))
        .filter(|&k| energies[k + 1] - energies[k] < DEGENERACY_TOL * scale)
        .collect();
    Ok(Spectrum { energies, states, gauge: Gauge::LargestComponentReal, flagged })
}

/// `⟨ψ|A|ψ⟩`.
pub fn expectation(op: &OperatorMatrix, state: &[c64]) -> Result<c64> {
    let w = op.apply(state)?;
    Ok(inner(state, &w))
}

/// `⟨u|v⟩`, conjugate-linear in the first argument.
pub fn inner(u: &[c64], v: &[c64]) -> c64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(u: &[c64]) -> f64 {
    u.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Probability weight of `state` on basis vectors with some mode occupation
/// in the top `fraction` of the cutoff range.
pub fn tail_weight(basis: &FockBasis, state: &[c64], fraction: f64) -> f64 {
    let n = basis.cutoff();
    let band = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let threshold = n - band;
    state
        .iter()
        .enumerate()
        .filter(|(i, _)| basis.occupations(*i).iter().any(|&o| o >= threshold))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Outcome of comparing an observable at `cutoff` and `2·cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub cutoff: usize,
    pub doubled: usize,
    pub deviation: f64,
    pub tolerance: f64,
    pub converged: bool,
}

/// Default relative tolerance for the cutoff-doubling check.
pub const CONVERGENCE_TOL: f64 = 1e-8;

/// Evaluates `observable` at `cutoff` and `2·cutoff` and reports the relative
/// max-abs change.
pub fn check_truncation<F>(cutoff: usize, tolerance: f64, mut observable: F) -> Result<ConvergenceReport>
where
    F: FnMut(usize) -> Result<Vec<f64>>,
{
    let coarse = observable(cutoff)?;
    let fine = observable(2 * cutoff)?;
    if coarse.len() != fine.len() {
        return Err(Error::DimensionMismatch { expected: fine.len(), got: coarse.len() });
    }
    let scale = fine.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let deviation = coarse.iter().zip(&fine).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
    Ok(ConvergenceReport {
        cutoff,
        doubled: 2 * cutoff,
        deviation,
        tolerance,
        converged: deviation <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    #[test]
    fn ladder_entries() {
        let b = FockBasis::uniform(1, 3, 1.0).unwrap();
        let (a, ad) = ladder(&b, 0).unwrap();
        assert_eq!(a.get(0, 1), c(1.0));
        assert!((a.get(1, 2).re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.get(1, 0), c(0.0));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(ad.get(i, j), a.get(j, i).conj());
            }
        }
    }

    #[test]
    fn truncated_commutator() {
        let b = FockBasis::uniform(1, 4, 1.0).unwrap();
        let (a, ad) = ladder(&b, 0).unwrap();
        let comm = a.commutator(&ad).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = match (i == j, i) {
                    (true, 3) => -3.0,
                    (true, _) => 1.0,
                    _ => 0.0,
                };
                assert!((comm.get(i, j) - c(expect)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn two_level_position() {
        let b = FockBasis::uniform(1, 2, 1.0).unwrap();
        let (q, _) = position_momentum(&b, 0).unwrap();
        let s = 0.5f64.sqrt();
        assert!((q.get(0, 1) - c(s)).norm() < 1e-15);
        assert!((q.get(1, 0) - c(s)).norm() < 1e-15);
        assert_eq!(q.get(0, 0), c(0.0));
    }

    #[test]
    fn canonical_commutator_away_from_cutoff() {
        let b = FockBasis::uniform(1, 30, 1.3).unwrap();
        let (q, p) = position_momentum(&b, 0).unwrap();
        let comm = q.commutator(&p).unwrap();
        for i in 0..29 {
            for j in 0..29 {
                let expect = if i == j { c64::new(0.0, 1.0) } else { c(0.0) };
                assert!((comm.get(i, j) - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn vacuum_moments() {
        let b = FockBasis::uniform(1, 10, 2.0).unwrap();
        let (q, _) = position_momentum(&b, 0).unwrap();
        let q2 = q.mul(&q).unwrap().into_hermitian().unwrap();
        let mut vac = vec![c(0.0); 10];
        vac[0] = c(1.0);
        assert!((expectation(&q2, &vac).unwrap().re - 0.25).abs() < 1e-15);
        let mut one = vec![c(0.0); 10];
        one[1] = c(1.0);
        assert!(expectation(&q, &one).unwrap().norm() < 1e-15);
        let b1 = FockBasis::uniform(1, 10, 1.0).unwrap();
        let (q, _) = position_momentum(&b1, 0).unwrap();
        let q2 = q.mul(&q).unwrap();
        assert!((expectation(&q2, &one).unwrap().re - 1.5).abs() < 1e-14);
    }

    #[test]
    fn weyl_products() {
        let b = FockBasis::uniform(1, 6, 1.0).unwrap();
        let (q, p) = position_momentum(&b, 0).unwrap();
        let w = weyl_product(&[&q, &p]).unwrap();
        let expect = q.mul(&p).unwrap().add(&p.mul(&q).unwrap()).unwrap().scale_real(0.5);
        assert!(w.sub(&expect).unwrap().max_abs() < 1e-15);
        assert!(w.is_hermitian());
        assert!(weyl_product(&[&q]).unwrap().sub(&q).unwrap().max_abs() < 1e-15);
        let qq = weyl_product(&[&q, &q]).unwrap();
        assert!(qq.sub(&q.mul(&q).unwrap()).unwrap().max_abs() < 1e-15);
        let other = FockBasis::uniform(1, 5, 1.0).unwrap();
        let (r, _) = position_momentum(&other, 0).unwrap();
        assert!(matches!(weyl_product(&[&q, &r]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn modes_commute() {
        let b = FockBasis::new(5, vec![1.0, 1.7]).unwrap();
        let (q0, p0) = position_momentum(&b, 0).unwrap();
        let (q1, p1) = position_momentum(&b, 1).unwrap();
        for (x, y) in [(&q0, &q1), (&q0, &p1), (&p0, &q1), (&p0, &p1)] {
            assert!(x.commutator(y).unwrap().max_abs() <= 1e-12);
        }
        assert!(matches!(ladder(&b, 2), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn unit_oscillator_spectrum() {
        let b = FockBasis::uniform(1, 40, 1.0).unwrap();
        let quad = Quadratures::new(&b);
        let h = quad.quadratic(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], 0.0).unwrap();
        let s = eigh(&h).unwrap();
        for n in 0..5 {
            assert!((s.energy(n) - (n as f64 + 0.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_spectrum() {
        let s = eigh(&OperatorMatrix::identity(4)).unwrap();
        assert!(s.energies().iter().all(|e| (e - 1.0).abs() < 1e-14));
        for k in 0..4 {
            let v = s.state(k);
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        assert_eq!(s.flagged_gaps().len(), 3);
    }

    #[test]
    fn non_hermitian_rejected() {
        let b = FockBasis::uniform(1, 4, 1.0).unwrap();
        let (a, _) = ladder(&b, 0).unwrap();
        assert!(matches!(eigh(&a), Err(Error::NotHermitian { .. })));
        assert!(a.clone().into_hermitian().is_err());
    }

    #[test]
    fn gauge_is_deterministic() {
        let b = FockBasis::uniform(1, 20, 1.0).unwrap();
        let quad = Quadratures::new(&b);
        let h = quad.quadratic(&[vec![2.0, 0.5], vec![0.5, 1.0]], &[0.3, 0.0], 0.0).unwrap();
        let s1 = eigh(&h).unwrap();
        let s2 = eigh(&h).unwrap();
        for k in 0..20 {
            assert_eq!(s1.state(k), s2.state(k));
            let v = s1.state(k);
            let big = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
            let pivot = v.iter().find(|x| x.norm() == big).unwrap();
            assert!(pivot.im == 0.0 && pivot.re > 0.0);
        }
    }

    #[test]
    fn occupations_roundtrip() {
        let b = FockBasis::new(7, vec![1.0, 2.0]).unwrap();
        for i in 0..b.dim() {
            assert_eq!(b.index(&b.occupations(i)).unwrap(), i);
        }
        assert!(FockBasis::new(1, vec![1.0]).is_err());
        assert!(FockBasis::new(4, vec![0.0]).is_err());
        assert!(FockBasis::new(4, vec![1.0; 3]).is_err());
    }

    #[test]
    fn doubling_check() {
        let r = check_truncation(10, 1e-8, |n| Ok(vec![1.0 + 1.0 / (n * n * n) as f64])).unwrap();
        assert!(!r.converged);
        let r = check_truncation(10, 1e-8, |_| Ok(vec![2.0, 3.0])).unwrap();
        assert!(r.converged && r.deviation == 0.0);
    }

    #[test]
    fn structured_apply_matches_embedded() {
        let b = FockBasis::new(5, vec![1.3, 0.7]).unwrap();
        let quad = Quadratures::new(&b);
        let v: Vec<c64> = (0..b.dim()).map(|i| c64::new((i as f64).sin(), (0.3 * i as f64).cos())).collect();
        let close = |x: &[c64], y: &[c64]| x.iter().zip(y).all(|(a, b)| (a - b).norm() < 1e-12);
        for alpha in 0..4 {
            let dense = quad.quadrature(alpha).unwrap().apply(&v).unwrap();
            assert!(close(&dense, &quad.apply(alpha, &v).unwrap()));
            for beta in 0..4 {
                let dense = quad.weyl_pair(alpha, beta).unwrap().apply(&v).unwrap();
                assert!(close(&dense, &quad.apply_pair(alpha, beta, &v).unwrap()));
            }
        }
        let k = vec![
            vec![1.0, 0.2, 0.0, 0.3],
            vec![0.2, 2.0, -0.1, 0.0],
            vec![0.0, -0.1, 1.0, 0.0],
            vec![0.3, 0.0, 0.0, 0.5],
        ];
        let l = [0.1, -0.4, 0.0, 0.2];
        let dense = quad.quadratic(&k, &l, 0.7).unwrap().apply(&v).unwrap();
        assert!(close(&dense, &quad.apply_quadratic(&k, &l, 0.7, &v).unwrap()));
    }
}
