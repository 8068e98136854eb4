//! Gaussian family `ψ ∝ exp(−(q − μ)²/(2σ²))` with `σ(λ)`, `μ(λ)` given as
//! expressions.
//!
//! The family is realised as the ground state of
//! `H = ½p² + (q − μ)²/(2σ⁴)`, so the numerical engines can treat it like
//! any other quadratic model.

use nalgebra::DMatrix;

use super::{complexify, covariance_from_phase_metric, half_omega, ClosedForm, Model, NormalModes, ParamPoint, QuadraticForm, Quantity};
use crate::error::{Error, Result};
use crate::expr::Expr;

/// Relative step for central-difference gradients of σ and μ.
pub const GRADIENT_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GaussianFamily {
    params: Vec<String>,
    sigma: Expr,
    mu: Expr,
    sigma_grad: Option<Vec<Expr>>,
    mu_grad: Option<Vec<Expr>>,
}

impl GaussianFamily {
    pub fn new(params: Vec<String>, sigma: &str, mu: &str) -> Result<Self> {
        if params.is_empty() || params.len() > 3 {
            return Err(Error::InvalidArgument("gaussian family needs 1 to 3 parameters".into()));
        }
        for (i, p) in params.iter().enumerate() {
            if params[..i].contains(p) {
                return Err(Error::InvalidArgument(format!("duplicate parameter '{p}'")));
            }
        }
        let fam = Self { sigma: Expr::parse(sigma)?, mu: Expr::parse(mu)?, params, sigma_grad: None, mu_grad: None };
        fam.check_variables(&fam.sigma)?;
        fam.check_variables(&fam.mu)?;
        Ok(fam)
    }

    /// `σ = X^(−1/4)`, `μ = W/X` over `(W, X)`.
    pub fn default_family() -> Self {
        Self::new(vec!["W".into(), "X".into()], "X^(-1/4)", "W/X").expect("built-in expressions parse")
    }

    /// Analytic first derivatives, one expression per parameter.
    pub fn with_gradients(mut self, sigma_grad: &[&str], mu_grad: &[&str]) -> Result<Self> {
        let n = self.params.len();
        if sigma_grad.len() != n || mu_grad.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sigma_grad.len().min(mu_grad.len()) });
        }
        let parse = |v: &[&str]| v.iter().map(|s| Expr::parse(s)).collect::<Result<Vec<_>>>();
        let (sg, mg) = (parse(sigma_grad)?, parse(mu_grad)?);
        for e in sg.iter().chain(mg.iter()) {
            self.check_variables(e)?;
        }
        self.sigma_grad = Some(sg);
        self.mu_grad = Some(mg);
        Ok(self)
    }

    fn check_variables(&self, e: &Expr) -> Result<()> {
        for v in e.variables() {
            if !self.params.contains(&v) {
                return Err(Error::Parse(format!("'{e}' uses '{v}', which is not a parameter")));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn sigma_source(&self) -> &str {
        self.sigma.source()
    }

    pub fn mu_source(&self) -> &str {
        self.mu.source()
    }

    pub fn sigma(&self, p: &ParamPoint) -> Result<f64> {
        self.sigma.eval(&self.params, p.coords())
    }

    pub fn mu(&self, p: &ParamPoint) -> Result<f64> {
        self.mu.eval(&self.params, p.coords())
    }

    fn fd(&self, e: &Expr, p: &ParamPoint, i: usize) -> Result<f64> {
        let h = GRADIENT_STEP * p.get(i).abs().max(1.0);
        let up = e.eval(&self.params, p.shifted(i, h).coords())?;
        let dn = e.eval(&self.params, p.shifted(i, -h).coords())?;
        Ok((up - dn) / (2.0 * h))
    }

    /// `(∂σ, ∂μ)` along every parameter.
    pub fn gradients(&self, p: &ParamPoint) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.params.len();
        let grad = |exact: &Option<Vec<Expr>>, e: &Expr| -> Result<Vec<f64>> {
            match exact {
                Some(g) => g.iter().map(|d| d.eval(&self.params, p.coords())).collect(),
                None => (0..n).map(|i| self.fd(e, p, i)).collect(),
            }
        };
        Ok((grad(&self.sigma_grad, &self.sigma)?, grad(&self.mu_grad, &self.mu)?))
    }
}

#[derive(Debug, Clone)]
pub struct Gaussian {
    family: GaussianFamily,
}

impl Gaussian {
    pub fn new(family: GaussianFamily) -> Self {
        Self { family }
    }

    pub fn family(&self) -> &GaussianFamily {
        &self.family
    }

    fn metric(&self, p: &ParamPoint) -> Result<DMatrix<f64>> {
        let s = self.family.sigma(p)?;
        let (ds, dm) = self.family.gradients(p)?;
        let n = ds.len();
        Ok(DMatrix::from_fn(n, n, |i, j| (ds[i] * ds[j] + dm[i] * dm[j]) / (2.0 * s * s)))
    }

    fn phase_metric(&self, p: &ParamPoint) -> Result<DMatrix<f64>> {
        let s = self.family.sigma(p)?;
        Ok(DMatrix::from_row_slice(2, 2, &[0.5 / (s * s), 0.0, 0.0, 0.5 * s * s]))
    }
}

impl Model for Gaussian {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn dof(&self) -> usize {
        1
    }

    fn param_names(&self) -> Vec<String> {
        self.family.params.clone()
    }

    fn domain(&self) -> String {
        format!("sigma = {} > 0 and mu = {} finite", self.family.sigma_source(), self.family.mu_source())
    }

    fn check_domain(&self, p: &ParamPoint) -> Result<()> {
        let s = self.family.sigma(p)?;
        let m = self.family.mu(p)?;
        if s.is_finite() && s > 0.0 && m.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(self.name(), self.domain()))
        }
    }

    fn quadratic_form(&self, p: &ParamPoint) -> Result<QuadraticForm> {
        let s = self.family.sigma(p)?;
        let m = self.family.mu(p)?;
        let s4 = s.powi(-4);
        Ok(QuadraticForm { k: vec![vec![s4, 0.0], vec![0.0, 1.0]], l: vec![-s4 * m, 0.0], c: 0.5 * s4 * m * m })
    }

    fn quadratic_form_derivative(&self, p: &ParamPoint, param: usize) -> Result<QuadraticForm> {
        if param >= self.family.params.len() {
            return Err(Error::DimensionMismatch { expected: self.family.params.len(), got: param + 1 });
        }
        let s = self.family.sigma(p)?;
        let m = self.family.mu(p)?;
        let (ds, dm) = self.family.gradients(p)?;
        let (ds, dm) = (ds[param], dm[param]);
        let ds4 = -4.0 * s.powi(-5) * ds;
        let s4 = s.powi(-4);
        let mut d = QuadraticForm::zero(1);
        d.k[0][0] = ds4;
        d.l[0] = -(ds4 * m + s4 * dm);
        d.c = 0.5 * ds4 * m * m + s4 * m * dm;
        Ok(d)
    }

    fn normal_modes(&self, p: &ParamPoint) -> Result<NormalModes> {
        self.check_domain(p)?;
        Ok(NormalModes { frequencies: vec![self.family.sigma(p)?.powi(-2)], mixing_angle: None })
    }

    fn closed_form(&self, quantity: &Quantity, p: &ParamPoint, qn: &[u32]) -> Result<ClosedForm> {
        if qn[0] != 0 {
            return Err(Error::QuantumNumbers(format!("{} describes a single Gaussian state (n = 0)", self.name())));
        }
        let dim = self.family.params.len();
        Ok(match quantity {
            Quantity::Qgt => ClosedForm::Complex(complexify(&self.metric(p)?, &DMatrix::zeros(dim, dim))),
            Quantity::Metric => ClosedForm::Real(self.metric(p)?),
            Quantity::Berry => ClosedForm::Real(DMatrix::zeros(dim, dim)),
            Quantity::PhaseBlock => ClosedForm::Complex(complexify(&self.phase_metric(p)?, &half_omega(1))),
            Quantity::Covariance => ClosedForm::Real(covariance_from_phase_metric(&self.phase_metric(p)?)),
            Quantity::MetricDeterminant if dim == 2 => {
                let s = self.family.sigma(p)?;
                let (ds, dm) = self.family.gradients(p)?;
                ClosedForm::Scalar((ds[0] * dm[1] - ds[1] * dm[0]).powi(2) / (4.0 * s.powi(4)))
            }
            Quantity::ScalarCurvature if dim == 2 => ClosedForm::Scalar(-4.0),
            Quantity::Ricci if dim == 2 => ClosedForm::Real(self.metric(p)? * -2.0),
            _ => return Err(Error::unsupported(self.name(), quantity)),
        })
    }

    fn quantities(&self) -> Vec<Quantity> {
        let mut q = vec![Quantity::Qgt, Quantity::Metric, Quantity::Berry, Quantity::PhaseBlock, Quantity::Covariance];
        if self.family.params.len() == 2 {
            q.extend([Quantity::MetricDeterminant, Quantity::ScalarCurvature, Quantity::Ricci]);
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_family_reproduces_linear_term_rows() {
        // With Y = 0, Z = 1, n = 0 the (W, X) block of the linear-term metric.
        let g = Gaussian::new(GaussianFamily::default_family());
        let (w_, x) = (0.8, 1.7);
        let p = ParamPoint::new(vec![w_, x]);
        let got = g.closed_form(&Quantity::Metric, &p, &[0]).unwrap();
        let got = got.real().unwrap();
        let w = x.sqrt();
        let a = 0.5;
        let expected = [
            a * w.powi(4) / w.powi(7),
            -a * w_ * w * w / w.powi(7),
            a * w_ * w_ / w.powi(7) + 1.0 / (32.0 * w.powi(4)),
        ];
        assert!((got[(0, 0)] - expected[0]).abs() < 1e-9);
        assert!((got[(0, 1)] - expected[1]).abs() < 1e-9);
        assert!((got[(1, 1)] - expected[2]).abs() < 1e-9);
    }

    #[test]
    fn analytic_gradients_agree_with_differences() {
        let fam = GaussianFamily::new(vec!["a".into(), "b".into()], "exp(a)", "b").unwrap();
        let exact = fam.clone().with_gradients(&["exp(a)", "0"], &["0", "1"]).unwrap();
        let p = ParamPoint::new(vec![0.3, -1.2]);
        let (s1, m1) = fam.gradients(&p).unwrap();
        let (s2, m2) = exact.gradients(&p).unwrap();
        for i in 0..2 {
            assert!((s1[i] - s2[i]).abs() < 1e-9);
            assert!((m1[i] - m2[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_foreign_variables() {
        assert!(GaussianFamily::new(vec!["X".into()], "Y", "0").is_err());
        assert!(GaussianFamily::new(vec!["X".into(), "X".into()], "X", "0").is_err());
    }

    #[test]
    fn domain_requires_positive_width() {
        let g = Gaussian::new(GaussianFamily::default_family());
        assert!(g.check_domain(&ParamPoint::new(vec![1.0, -1.0])).is_err());
        assert!(g.check_domain(&ParamPoint::new(vec![1.0, 1.0])).is_ok());
    }
}
