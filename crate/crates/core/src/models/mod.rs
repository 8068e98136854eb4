//! The five quadratic systems: Hamiltonians, deformation operators and
//! closed-form oracles.
//!
//! Every model is described by a quadratic form `H = ½ rᵀK r + lᵀr + c` over
//! `r = (q_1..q_N, p_1..p_N)`. Operators follow from the form by Weyl
//! ordering, which makes the parameter deformations `∂H/∂λ` and the
//! phase-space deformations `∂H/∂r_α = (K r + l)_α` uniform across models.

mod gaussian;
mod linear;
mod oscillator;
mod symmetric;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use faer::c64;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, OperatorMatrix, Quadratures};

pub use gaussian::{Gaussian, GaussianFamily};
pub use linear::LinearlyCoupled;
pub use oscillator::{GeneralizedOscillator, LinearTerm};
pub use symmetric::{decoupled_reduced_curvature, ground_reduced_curvature, SymmetricCoupled};

/// Model names accepted by [`ModelSpec::from_name`].
pub const MODEL_NAMES: [&str; 5] = ["gho", "gho-linear", "gaussian", "sym-coupled", "lin-coupled"];

#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    coords: Vec<f64>,
}

impl ParamPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }

    /// Copy with coordinate `i` shifted by `delta`.
    pub fn shifted(&self, i: usize, delta: f64) -> Self {
        let mut coords = self.coords.clone();
        coords[i] += delta;
        Self { coords }
    }

    pub fn with(&self, i: usize, value: f64) -> Self {
        let mut coords = self.coords.clone();
        coords[i] = value;
        Self { coords }
    }
}

impl From<Vec<f64>> for ParamPoint {
    fn from(coords: Vec<f64>) -> Self {
        Self::new(coords)
    }
}

impl From<&[f64]> for ParamPoint {
    fn from(coords: &[f64]) -> Self {
        Self::new(coords.to_vec())
    }
}

/// `H = ½ rᵀ K r + lᵀ r + c`, with `K` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub k: Vec<Vec<f64>>,
    pub l: Vec<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn zero(modes: usize) -> Self {
        Self { k: vec![vec![0.0; 2 * modes]; 2 * modes], l: vec![0.0; 2 * modes], c: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }

    pub fn k_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.k[i][j])
    }

    pub fn operator(&self, quad: &Quadratures) -> Result<OperatorMatrix> {
        quad.quadratic(&self.k, &self.l, self.c)
    }

    /// The operator applied to `state` without forming its matrix.
    pub fn apply(&self, quad: &Quadratures, state: &[c64]) -> Result<Vec<c64>> {
        quad.apply_quadratic(&self.k, &self.l, self.c, state)
    }
}

/// What a deformation operator differentiates with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeformationKey {
    Param(usize),
    Position(usize),
    Momentum(usize),
}

#[derive(Debug, Clone)]
pub struct Deformation {
    pub key: DeformationKey,
    pub label: String,
    pub operator: OperatorMatrix,
}

/// Normal-mode frequencies (mode order as in the paper) and, for the
/// linearly coupled system, the mixing angle ζ.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModes {
    pub frequencies: Vec<f64>,
    pub mixing_angle: Option<f64>,
}

/// Phase-space labels: `q, p` for one mode, `q1, q2, p1, p2` for two.
pub fn phase_labels(modes: usize) -> Vec<String> {
    if modes == 1 {
        return vec!["q".into(), "p".into()];
    }
    let mut out: Vec<String> = (1..=modes).map(|a| format!("q{a}")).collect();
    out.extend((1..=modes).map(|a| format!("p{a}")));
    out
}

/// Closed-form quantity identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Quantity {
    /// Complex parameter block `g − (i/2)F`.
    Qgt,
    Metric,
    Berry,
    /// Complex phase-space block.
    PhaseBlock,
    Covariance,
    /// Mode-1 reduction of the covariance matrix.
    ReducedCovariance,
    Purity,
    Entropy,
    SymplecticEigenvalues,
    MetricDeterminant,
    /// Scalar curvature of the parameter metric on the model's standard
    /// non-singular coordinates.
    ScalarCurvature,
    /// Scalar curvature of the phase-space metric over two named parameters.
    PhaseCurvature(String, String),
    /// Scalar curvature of the mode-1 reduced phase block over the model's
    /// standard coordinates.
    ReducedPhaseCurvature,
    Christoffel,
    Ricci,
    Beltrami,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Quantity::Qgt => "qgt",
            Quantity::Metric => "metric",
            Quantity::Berry => "berry",
            Quantity::PhaseBlock => "phase-block",
            Quantity::Covariance => "covariance",
            Quantity::ReducedCovariance => "reduced-covariance",
            Quantity::Purity => "purity",
            Quantity::Entropy => "entropy",
            Quantity::SymplecticEigenvalues => "symplectic",
            Quantity::MetricDeterminant => "det-metric",
            Quantity::ScalarCurvature => "scalar-curvature",
            Quantity::PhaseCurvature(a, b) => return write!(f, "phase-curvature:{a},{b}"),
            Quantity::ReducedPhaseCurvature => "reduced-phase-curvature",
            Quantity::Christoffel => "christoffel",
            Quantity::Ricci => "ricci",
            Quantity::Beltrami => "beltrami",
        };
        f.write_str(s)
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("phase-curvature:") {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
                return Err(Error::Parse(format!("'{s}': expected phase-curvature:<a>,<b>")));
            }
            return Ok(Quantity::PhaseCurvature(parts[0].into(), parts[1].into()));
        }
        Ok(match s {
            "qgt" => Quantity::Qgt,
            "metric" => Quantity::Metric,
            "berry" => Quantity::Berry,
            "phase-block" => Quantity::PhaseBlock,
            "covariance" => Quantity::Covariance,
            "reduced-covariance" => Quantity::ReducedCovariance,
            "purity" => Quantity::Purity,
            "entropy" => Quantity::Entropy,
            "symplectic" => Quantity::SymplecticEigenvalues,
            "det-metric" => Quantity::MetricDeterminant,
            "scalar-curvature" => Quantity::ScalarCurvature,
            "reduced-phase-curvature" => Quantity::ReducedPhaseCurvature,
            "christoffel" => Quantity::Christoffel,
            "ricci" => Quantity::Ricci,
            "beltrami" => Quantity::Beltrami,
            _ => return Err(Error::Parse(format!("unknown quantity '{s}'"))),
        })
    }
}

/// Value returned by a closed-form oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    Scalar(f64),
    Vector(Vec<f64>),
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
    /// `Γ^i_jk` stored at `data[(i * dim + j) * dim + k]`.
    Tensor3 { dim: usize, data: Vec<f64> },
}

impl ClosedForm {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            ClosedForm::Scalar(x) => Some(*x),
            _ => None,
        }
    }

    pub fn real(&self) -> Option<&DMatrix<f64>> {
        match self {
            ClosedForm::Real(m) => Some(m),
            _ => None,
        }
    }

    pub fn complex(&self) -> Option<&DMatrix<Complex64>> {
        match self {
            ClosedForm::Complex(m) => Some(m),
            _ => None,
        }
    }

    pub fn vector(&self) -> Option<&[f64]> {
        match self {
            ClosedForm::Vector(v) => Some(v),
            _ => None,
        }
    }

    /// Flattened numbers in row-major order.
    pub fn values(&self) -> Vec<f64> {
        match self {
            ClosedForm::Scalar(x) => vec![*x],
            ClosedForm::Vector(v) => v.clone(),
            ClosedForm::Real(m) => m.transpose().iter().copied().collect(),
            ClosedForm::Complex(m) => m.transpose().iter().flat_map(|z| [z.re, z.im]).collect(),
            ClosedForm::Tensor3 { data, .. } => data.clone(),
        }
    }
}

/// A paper system.
pub trait Model: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    /// Number of bosonic modes.
    fn dof(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    /// Human-readable admissible region.
    fn domain(&self) -> String;
    fn check_domain(&self, point: &ParamPoint) -> Result<()>;
    fn quadratic_form(&self, point: &ParamPoint) -> Result<QuadraticForm>;
    /// `∂(K, l, c)/∂λ_param`.
    fn quadratic_form_derivative(&self, point: &ParamPoint, param: usize) -> Result<QuadraticForm>;
    fn normal_modes(&self, point: &ParamPoint) -> Result<NormalModes>;
    /// Reference frequency per mode for the Fock basis.
    fn basis_frequencies(&self, point: &ParamPoint) -> Result<Vec<f64>> {
        let nm = self.normal_modes(point)?;
        let gm = nm.frequencies.iter().product::<f64>().powf(1.0 / nm.frequencies.len() as f64);
        Ok(vec![gm; self.dof()])
    }
    /// Coordinates (parameter indices) of the standard non-singular
    /// parameter-metric submanifold.
    fn metric_coordinates(&self) -> Vec<usize> {
        (0..self.param_names().len()).collect()
    }
    /// Coordinates for the reduced phase-block curvature.
    fn phase_coordinates(&self) -> Vec<usize> {
        self.metric_coordinates()
    }
    fn closed_form(&self, quantity: &Quantity, point: &ParamPoint, qn: &[u32]) -> Result<ClosedForm>;
    fn quantities(&self) -> Vec<Quantity>;
}

/// Shared handle to a model.
#[derive(Debug, Clone)]
pub struct ModelSpec(Arc<dyn Model>);

impl ModelSpec {
    pub fn new(model: impl Model + 'static) -> Self {
        Self(Arc::new(model))
    }

    /// Built-in model by name. `gaussian` uses σ = X^(-1/4), μ = W/X.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "gho" => Self::new(GeneralizedOscillator),
            "gho-linear" => Self::new(LinearTerm),
            "gaussian" => Self::new(Gaussian::new(GaussianFamily::default_family())),
            "sym-coupled" => Self::new(SymmetricCoupled),
            "lin-coupled" => Self::new(LinearlyCoupled),
            _ => return Err(Error::UnknownModel(name.to_string())),
        })
    }

    pub fn gaussian(family: GaussianFamily) -> Self {
        Self::new(Gaussian::new(family))
    }

    pub fn param_index(&self, name: &str) -> Result<usize> {
        self.param_names()
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no parameter '{name}'", self.name())))
    }

    /// Parameter and phase-space labels in QGT order.
    pub fn labels(&self) -> Vec<String> {
        let mut l = self.param_names();
        l.extend(phase_labels(self.dof()));
        l
    }

    /// Point from named values; every parameter must be present.
    pub fn point_from_named(&self, named: &[(String, f64)]) -> Result<ParamPoint> {
        let names = self.param_names();
        for (k, _) in named {
            if !names.contains(k) {
                return Err(Error::InvalidArgument(format!("{} has no parameter '{k}'", self.name())));
            }
        }
        let coords = names
            .iter()
            .map(|n| {
                named
                    .iter()
                    .find(|(k, _)| k == n)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| Error::InvalidArgument(format!("missing value for parameter '{n}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ParamPoint::new(coords))
    }

    pub fn check_point(&self, point: &ParamPoint) -> Result<()> {
        let n = self.param_names().len();
        if point.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: point.len() });
        }
        if point.coords().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter value".into()));
        }
        self.check_domain(point)
    }

    pub fn check_quantum_numbers(&self, qn: &[u32]) -> Result<()> {
        if qn.len() != self.dof() {
            return Err(Error::QuantumNumbers(format!(
                "{} needs {} quantum number(s), got {}",
                self.name(),
                self.dof(),
                qn.len()
            )));
        }
        Ok(())
    }

    /// Default basis at `point` with `cutoff` levels per mode.
    pub fn default_basis(&self, point: &ParamPoint, cutoff: usize) -> Result<FockBasis> {
        self.check_point(point)?;
        FockBasis::new(cutoff, self.basis_frequencies(point)?)
    }

    /// Closed form after validating point and quantum numbers.
    pub fn oracle(&self, quantity: &Quantity, point: &ParamPoint, qn: &[u32]) -> Result<ClosedForm> {
        self.check_point(point)?;
        self.check_quantum_numbers(qn)?;
        self.0.closed_form(quantity, point, qn)
    }
}

impl std::ops::Deref for ModelSpec {
    type Target = dyn Model;

    fn deref(&self) -> &Self::Target {
        &*self.0
    }
}

pub fn build_hamiltonian(model: &ModelSpec, point: &ParamPoint, basis: &FockBasis) -> Result<OperatorMatrix> {
    check_basis(model, basis)?;
    model.check_point(point)?;
    model.quadratic_form(point)?.operator(&Quadratures::new(basis))
}

fn check_basis(model: &ModelSpec, basis: &FockBasis) -> Result<()> {
    if basis.modes() != model.dof() {
        return Err(Error::DimensionMismatch { expected: model.dof(), got: basis.modes() });
    }
    Ok(())
}

/// Deformation operators keyed by parameters, then `q_a`, then `p_a`.
pub fn build_deformations(model: &ModelSpec, point: &ParamPoint, basis: &FockBasis) -> Result<Vec<Deformation>> {
    check_basis(model, basis)?;
    model.check_point(point)?;
    let quad = Quadratures::new(basis);
    let mut out = Vec::new();
    for (i, name) in model.param_names().into_iter().enumerate() {
        let form = model.quadratic_form_derivative(point, i)?;
        out.push(Deformation { key: DeformationKey::Param(i), label: name, operator: form.operator(&quad)? });
    }
    out.extend(phase_deformations(model, point, &quad)?);
    Ok(out)
}

/// `∂H/∂r_α = Σ_β K_αβ r_β + l_α`.
pub fn phase_deformations(model: &ModelSpec, point: &ParamPoint, quad: &Quadratures) -> Result<Vec<Deformation>> {
    let form = model.quadratic_form(point)?;
    let n = model.dof();
    let labels = phase_labels(n);
    let r: Vec<OperatorMatrix> = (0..2 * n).map(|a| quad.quadrature(a)).collect::<Result<_>>()?;
    let dim = quad.basis().dim();
    let mut out = Vec::new();
    for alpha in 0..2 * n {
        let mut op = OperatorMatrix::identity(dim).scale_real(form.l[alpha]);
        for (beta, rb) in r.iter().enumerate() {
            if form.k[alpha][beta] != 0.0 {
                op.add_scaled(form.k[alpha][beta], rb)?;
            }
        }
        let key = if alpha < n { DeformationKey::Position(alpha) } else { DeformationKey::Momentum(alpha - n) };
        out.push(Deformation { key, label: labels[alpha].clone(), operator: op.into_hermitian()? });
    }
    Ok(out)
}

pub(crate) fn b_of(n: u32) -> f64 {
    let n = n as f64;
    n * n + n + 1.0
}

pub(crate) fn a_of(n: u32) -> f64 {
    n as f64 + 0.5
}

/// `i/2 · Ω` with `Ω = [[0, I], [−I, 0]]`.
pub(crate) fn half_omega(modes: usize) -> DMatrix<f64> {
    let m = 2 * modes;
    DMatrix::from_fn(m, m, |i, j| {
        if j == i + modes {
            0.5
        } else if i == j + modes {
            -0.5
        } else {
            0.0
        }
    })
}

pub(crate) fn complexify(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
}

/// Covariance from a phase-space metric block: `σ = Ωᵀ g Ω`.
pub(crate) fn covariance_from_phase_metric(g: &DMatrix<f64>) -> DMatrix<f64> {
    let modes = g.nrows() / 2;
    let omega = half_omega(modes) * 2.0;
    omega.transpose() * g * omega
}

/// Rows/columns `keep` of a square matrix.
pub(crate) fn submatrix(m: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])])
}

/// Symmetric completion of a Christoffel table given as `(i, j, k, value)`
/// with 0-based indices.
pub(crate) fn christoffel_table(dim: usize, entries: &[(usize, usize, usize, f64)]) -> ClosedForm {
    let mut data = vec![0.0; dim * dim * dim];
    for &(i, j, k, v) in entries {
        data[(i * dim + j) * dim + k] = v;
        data[(i * dim + k) * dim + j] = v;
    }
    ClosedForm::Tensor3 { dim, data }
}

pub(crate) fn vn_entropy_term(nu: f64) -> f64 {
    let plus = (nu + 0.5) * (nu + 0.5).ln();
    let minus = if nu - 0.5 > 0.0 { (nu - 0.5) * (nu - 0.5).ln() } else { 0.0 };
    plus - minus
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantity_names_roundtrip() {
        let all = [
            "qgt",
            "metric",
            "berry",
            "phase-block",
            "covariance",
            "reduced-covariance",
            "purity",
            "entropy",
            "symplectic",
            "det-metric",
            "scalar-curvature",
            "phase-curvature:X,Y",
            "reduced-phase-curvature",
            "christoffel",
            "ricci",
            "beltrami",
        ];
        for s in all {
            assert_eq!(s.parse::<Quantity>().unwrap().to_string(), s);
        }
        assert!("nope".parse::<Quantity>().is_err());
        assert!("phase-curvature:X".parse::<Quantity>().is_err());
    }

    #[test]
    fn names_resolve() {
        for n in MODEL_NAMES {
            assert_eq!(ModelSpec::from_name(n).unwrap().name(), n);
        }
        assert!(matches!(ModelSpec::from_name("spin"), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn labels_order() {
        let m = ModelSpec::from_name("lin-coupled").unwrap();
        assert_eq!(m.labels(), ["A", "B", "C", "q1", "q2", "p1", "p2"]);
        let m = ModelSpec::from_name("gho").unwrap();
        assert_eq!(m.labels(), ["X", "Y", "Z", "q", "p"]);
    }

    use crate::fock::eigh;

    fn spectrum(name: &str, coords: &[f64], cutoff: usize) -> Vec<f64> {
        let m = ModelSpec::from_name(name).unwrap();
        let p = ParamPoint::from(coords);
        let basis = m.default_basis(&p, cutoff).unwrap();
        eigh(&build_hamiltonian(&m, &p, &basis).unwrap()).unwrap().energies().to_vec()
    }

    #[test]
    fn oscillator_spectra() {
        let e = spectrum("gho", &[1.0, 0.0, 1.0], 60);
        for (n, en) in e.iter().take(6).enumerate() {
            assert!((en - (n as f64 + 0.5)).abs() < 1e-9);
        }
        let w = 1.75f64.sqrt();
        let e = spectrum("gho", &[2.0, 0.5, 1.0], 80);
        for (n, en) in e.iter().take(6).enumerate() {
            assert!((en - w * (n as f64 + 0.5)).abs() < 1e-8, "n={n}: {en}");
        }
    }

    #[test]
    fn linear_term_shift() {
        let e = spectrum("gho-linear", &[1.0, 1.0, 0.0, 1.0], 80);
        assert!(e[0].abs() < 1e-8, "{}", e[0]);
    }

    #[test]
    fn decoupled_pair() {
        let e = spectrum("sym-coupled", &[1.0, 0.0], 20);
        let expected = [1.0, 2.0, 2.0, 3.0, 3.0, 3.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn deformations_match_hamiltonian_differences() {
        let cases: [(&str, &[f64]); 5] = [
            ("gho", &[2.0, 0.5, 1.0]),
            ("gho-linear", &[0.7, 1.5, 0.3, 1.2]),
            ("gaussian", &[0.8, 1.7]),
            ("sym-coupled", &[1.5, 0.7]),
            ("lin-coupled", &[1.0, 2.0, 1.0]),
        ];
        for (name, coords) in cases {
            let m = ModelSpec::from_name(name).unwrap();
            let p = ParamPoint::from(coords);
            let basis = m.default_basis(&p, if m.dof() == 1 { 20 } else { 8 }).unwrap();
            let defs = build_deformations(&m, &p, &basis).unwrap();
            assert_eq!(defs.len(), m.labels().len());
            for (d, l) in defs.iter().zip(m.labels()) {
                assert_eq!(d.label, l);
                assert!(d.operator.is_hermitian());
            }
            for i in 0..p.len() {
                let h = 1e-4 * p.get(i).abs().max(1.0);
                let up = build_hamiltonian(&m, &p.shifted(i, h), &basis).unwrap();
                let dn = build_hamiltonian(&m, &p.shifted(i, -h), &basis).unwrap();
                let fd = up.sub(&dn).unwrap().scale_real(0.5 / h);
                let err = fd.sub(&defs[i].operator).unwrap().max_abs();
                assert!(err <= 1e-6, "{name} param {i}: {err}");
            }
        }
    }

    #[test]
    fn weyl_ordered_keys() {
        let m = ModelSpec::from_name("gho").unwrap();
        let p = ParamPoint::new(vec![2.0, 0.5, 1.0]);
        let basis = m.default_basis(&p, 12).unwrap();
        let quad = Quadratures::new(&basis);
        let defs = build_deformations(&m, &p, &basis).unwrap();
        let qq = quad.weyl_pair(0, 0).unwrap().scale_real(0.5);
        assert!(defs[0].operator.sub(&qq).unwrap().max_abs() < 1e-14);
        let qp = quad.weyl_pair(0, 1).unwrap();
        assert!(defs[1].operator.sub(&qp).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn closed_forms_symmetric_and_psd() {
        let cases: [(&str, &[f64], &[u32]); 5] = [
            ("gho", &[2.0, 0.5, 1.0], &[1]),
            ("gho-linear", &[0.7, 1.5, 0.3, 1.2], &[2]),
            ("gaussian", &[0.8, 1.7], &[0]),
            ("sym-coupled", &[1.5, 0.7], &[1, 2]),
            ("lin-coupled", &[1.0, 3.0, 0.5], &[2, 1]),
        ];
        for (name, coords, qn) in cases {
            let m = ModelSpec::from_name(name).unwrap();
            let p = ParamPoint::from(coords);
            let g = m.oracle(&Quantity::Metric, &p, qn).unwrap();
            let g = g.real().unwrap();
            assert!((g - g.transpose()).abs().max() <= 1e-12 * g.abs().max());
            let ev = g.clone().symmetric_eigen().eigenvalues;
            assert!(ev.min() >= -1e-10 * g.abs().max(), "{name}");
            let f = m.oracle(&Quantity::Berry, &p, qn).unwrap();
            let f = f.real().unwrap();
            assert!((f + f.transpose()).abs().max() <= 1e-12);
        }
    }

    #[test]
    fn decoupled_phase_block_is_two_oscillators() {
        let k0 = 1.7;
        let sym = ModelSpec::from_name("sym-coupled").unwrap();
        let gho = ModelSpec::from_name("gho").unwrap();
        for m in [0, 2] {
            let pb = sym.oracle(&Quantity::PhaseBlock, &ParamPoint::new(vec![k0, 0.0]), &[m, m]).unwrap();
            let pb = pb.complex().unwrap();
            let one = gho.oracle(&Quantity::PhaseBlock, &ParamPoint::new(vec![k0, 0.0, 1.0]), &[m]).unwrap();
            let one = one.complex().unwrap();
            for a in 0..2 {
                for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    assert!((pb[(a + 2 * i, a + 2 * j)] - one[(i, j)]).norm() < 1e-14);
                    assert!(pb[(a + 2 * i, 1 - a + 2 * j)].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn named_points() {
        let m = ModelSpec::from_name("gho").unwrap();
        let p = m
            .point_from_named(&[("Z".into(), 1.0), ("X".into(), 2.0), ("Y".into(), 0.5)])
            .unwrap();
        assert_eq!(p.coords(), &[2.0, 0.5, 1.0]);
        assert!(m.point_from_named(&[("X".into(), 1.0)]).is_err());
        assert!(m.point_from_named(&[("Q".into(), 1.0)]).is_err());
    }
}
