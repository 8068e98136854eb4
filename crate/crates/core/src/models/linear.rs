//! `H = ½(p₁² + p₂² + Aq₁² + Bq₂² + Cq₁q₂)` on the branch `B > A`.

use nalgebra::DMatrix;

use super::{
    a_of, b_of, christoffel_table, complexify, covariance_from_phase_metric, half_omega, vn_entropy_term, ClosedForm,
    Model, NormalModes, ParamPoint, QuadraticForm, Quantity,
};
use crate::error::{Error, Result};

const DOMAIN: &str = "A > 0, B > A, C >= 0 and 4AB - C^2 > 0";

#[derive(Debug, Clone, Copy, Default)]
pub struct LinearlyCoupled;

/// Normal-mode data: `ω₁ < ω₂`, `tan ζ`, `η = cos 2ζ`, `φ = sin 2ζ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Mixing {
    pub w1: f64,
    pub w2: f64,
    pub tan: f64,
    pub eta: f64,
    pub phi: f64,
}

pub(crate) fn mixing(a: f64, b: f64, c: f64) -> Mixing {
    let d = b - a;
    let r = (d * d + c * c).sqrt();
    // tan ζ = sqrt(ε² + 1) − ε with ε = (B − A)/C, written to stay finite at C = 0.
    let tan = c / (r + d);
    Mixing { w1: (a - 0.5 * c * tan).sqrt(), w2: (b + 0.5 * c * tan).sqrt(), tan, eta: d / r, phi: c / r }
}

impl LinearlyCoupled {
    fn metric(p: &ParamPoint, m: u32, n: u32) -> DMatrix<f64> {
        let Mixing { w1, w2, eta, phi, .. } = mixing(p.get(0), p.get(1), p.get(2));
        let (pe, me) = (1.0 + eta, 1.0 - eta);
        let f2 = phi * phi;
        #[rustfmt::skip]
        let mm = DMatrix::from_row_slice(3, 3, &[
            pe * pe, f2, -pe * phi,
            f2, me * me, -me * phi,
            -pe * phi, -me * phi, f2,
        ]) / 4.0;
        #[rustfmt::skip]
        let nn = DMatrix::from_row_slice(3, 3, &[
            me * me, f2, me * phi,
            f2, pe * pe, pe * phi,
            me * phi, pe * phi, f2,
        ]) / 4.0;
        #[rustfmt::skip]
        let ll = DMatrix::from_row_slice(3, 3, &[
            f2, -f2, eta * phi,
            -f2, f2, -eta * phi,
            eta * phi, -eta * phi, eta * eta,
        ]);
        let mix = ((w1 / w2 + w2 / w1) * a_of(m) * a_of(n) - 0.5) / (4.0 * (w2 * w2 - w1 * w1).powi(2));
        mm * (b_of(m) / (32.0 * w1.powi(4))) + nn * (b_of(n) / (32.0 * w2.powi(4))) + ll * mix
    }

    fn phase_metric(p: &ParamPoint, m: u32, n: u32) -> DMatrix<f64> {
        let Mixing { w1, w2, tan, .. } = mixing(p.get(0), p.get(1), p.get(2));
        let cos2 = 1.0 / (1.0 + tan * tan);
        let sin2 = 1.0 - cos2;
        let sc = tan * cos2;
        let (cm, cn) = (a_of(m), a_of(n));
        let mut g = DMatrix::zeros(4, 4);
        g[(0, 0)] = cm * w1 * cos2 + cn * w2 * sin2;
        g[(1, 1)] = cm * w1 * sin2 + cn * w2 * cos2;
        g[(0, 1)] = (cn * w2 - cm * w1) * sc;
        g[(1, 0)] = g[(0, 1)];
        g[(2, 2)] = cm * cos2 / w1 + cn * sin2 / w2;
        g[(3, 3)] = cm * sin2 / w1 + cn * cos2 / w2;
        g[(2, 3)] = (cn / w2 - cm / w1) * sc;
        g[(3, 2)] = g[(2, 3)];
        g
    }

    /// `4AB / (4AB − C²)` under the square root of the quoted entropy.
    fn entanglement_ratio(p: &ParamPoint) -> f64 {
        let (a, b, c) = (p.get(0), p.get(1), p.get(2));
        4.0 * a * b / (4.0 * a * b - c * c)
    }

    fn ground_state_only(&self, m: u32, n: u32, quantity: &Quantity) -> Result<()> {
        if m != 0 || n != 0 {
            return Err(Error::QuantumNumbers(format!("{}: '{quantity}' is defined for (m, n) = (0, 0)", self.name())));
        }
        Ok(())
    }
}

impl Model for LinearlyCoupled {
    fn name(&self) -> &str {
        "lin-coupled"
    }

    fn dof(&self) -> usize {
        2
    }

    fn param_names(&self) -> Vec<String> {
        vec!["A".into(), "B".into(), "C".into()]
    }

    fn domain(&self) -> String {
        DOMAIN.into()
    }

    fn check_domain(&self, p: &ParamPoint) -> Result<()> {
        let (a, b, c) = (p.get(0), p.get(1), p.get(2));
        if a > 0.0 && b > a && c >= 0.0 && 4.0 * a * b - c * c > 0.0 {
            Ok(())
        } else {
            Err(Error::domain(self.name(), DOMAIN))
        }
    }

    fn quadratic_form(&self, p: &ParamPoint) -> Result<QuadraticForm> {
        let mut f = QuadraticForm::zero(2);
        f.k[0][0] = p.get(0);
        f.k[1][1] = p.get(1);
        f.k[0][1] = 0.5 * p.get(2);
        f.k[1][0] = 0.5 * p.get(2);
        f.k[2][2] = 1.0;
        f.k[3][3] = 1.0;
        Ok(f)
    }

    fn quadratic_form_derivative(&self, _p: &ParamPoint, param: usize) -> Result<QuadraticForm> {
        let mut d = QuadraticForm::zero(2);
        match param {
            0 => d.k[0][0] = 1.0,
            1 => d.k[1][1] = 1.0,
            2 => {
                d.k[0][1] = 0.5;
                d.k[1][0] = 0.5;
            }
            _ => return Err(Error::DimensionMismatch { expected: 3, got: param + 1 }),
        }
        Ok(d)
    }

    fn normal_modes(&self, p: &ParamPoint) -> Result<NormalModes> {
        self.check_domain(p)?;
        let mx = mixing(p.get(0), p.get(1), p.get(2));
        Ok(NormalModes { frequencies: vec![mx.w1, mx.w2], mixing_angle: Some(mx.tan.atan()) })
    }

    fn phase_coordinates(&self) -> Vec<usize> {
        vec![1, 2]
    }

    fn closed_form(&self, quantity: &Quantity, p: &ParamPoint, qn: &[u32]) -> Result<ClosedForm> {
        let (m, n) = (qn[0], qn[1]);
        let (a, b, c) = (p.get(0), p.get(1), p.get(2));
        let mx = mixing(a, b, c);
        let (w1, w2) = (mx.w1, mx.w2);
        let e = (4.0 * a * b - c * c).sqrt();
        Ok(match quantity {
            Quantity::Qgt => ClosedForm::Complex(complexify(&Self::metric(p, m, n), &DMatrix::zeros(3, 3))),
            Quantity::Metric => ClosedForm::Real(Self::metric(p, m, n)),
            Quantity::Berry => ClosedForm::Real(DMatrix::zeros(3, 3)),
            Quantity::PhaseBlock => ClosedForm::Complex(complexify(&Self::phase_metric(p, m, n), &half_omega(2))),
            Quantity::Covariance => ClosedForm::Real(covariance_from_phase_metric(&Self::phase_metric(p, m, n))),
            Quantity::ReducedCovariance => {
                let g = Self::phase_metric(p, m, n);
                ClosedForm::Real(DMatrix::from_row_slice(2, 2, &[g[(2, 2)], 0.0, 0.0, g[(0, 0)]]))
            }
            Quantity::Purity => {
                self.ground_state_only(m, n, quantity)?;
                ClosedForm::Scalar(Self::entanglement_ratio(p).recip().sqrt())
            }
            Quantity::Entropy => {
                self.ground_state_only(m, n, quantity)?;
                ClosedForm::Scalar(vn_entropy_term(Self::entanglement_ratio(p).sqrt()))
            }
            Quantity::MetricDeterminant => {
                let num = b_of(m) * b_of(n) * (a_of(m) * a_of(n) * (w1 * w1 + w2 * w2) - 0.5 * w1 * w2);
                ClosedForm::Scalar(num / (4096.0 * w1.powi(5) * w2.powi(5) * (w2 * w2 - w1 * w1).powi(2)))
            }
            Quantity::ScalarCurvature => {
                if m != 0 {
                    return Err(Error::QuantumNumbers(format!("{}: '{quantity}' is defined for m = 0", self.name())));
                }
                let nf = n as f64;
                let s = 2.0 * nf + 1.0;
                let t = 28.0 * nf * (nf + 1.0) + 15.0;
                let u = 4.0 * nf * (nf + 1.0) + 3.0;
                let inner = a.powi(3) * s * s + a * a * (b * t - 3.0 * s * e)
                    - a * (10.0 * b * s * e - b * b * t + c * c * u)
                    - 3.0 * b * b * s * e
                    + c * c * s * e
                    + b.powi(3) * s * s
                    - b * c * c * u;
                let den = (nf * nf + nf + 1.0) * (2.0 * nf * (a + b) + a + b - e).powi(3);
                ClosedForm::Scalar(-4.0 * s * (nf * nf + nf + 2.0) * inner / den)
            }
            Quantity::Christoffel => {
                self.ground_state_only(m, n, quantity)?;
                let f = a + b + e;
                let d = e * e * f;
                christoffel_table(
                    3,
                    &[
                        (0, 0, 0, -(2.0 * b + e).powi(2) / d),
                        (0, 1, 0, -c * c / (2.0 * d)),
                        (1, 1, 0, -c * c / (2.0 * d)),
                        (0, 2, 0, c * (3.0 * b + 2.0 * e) / (2.0 * d)),
                        (0, 2, 1, a * c / (2.0 * d)),
                        (0, 2, 2, -a * (2.0 * b + e) / d),
                        (1, 1, 1, -(2.0 * a + e).powi(2) / d),
                        (1, 2, 0, b * c / (2.0 * d)),
                        (1, 2, 1, c * (3.0 * a + 2.0 * e) / (2.0 * d)),
                        (1, 2, 2, -b * (2.0 * a + e) / d),
                        (2, 0, 0, 2.0 * b * c / d),
                        (2, 1, 0, c * (a + b + 2.0 * e) / d),
                        (2, 1, 1, 2.0 * a * c / d),
                        (2, 2, 0, -b * (3.0 * a + b + 2.0 * e) / d),
                        (2, 2, 1, -a * (a + 3.0 * b + 2.0 * e) / d),
                        (2, 2, 2, c / (e * e)),
                    ],
                )
            }
            _ => return Err(Error::unsupported(self.name(), quantity)),
        })
    }

    fn quantities(&self) -> Vec<Quantity> {
        vec![
            Quantity::Qgt,
            Quantity::Metric,
            Quantity::Berry,
            Quantity::PhaseBlock,
            Quantity::Covariance,
            Quantity::ReducedCovariance,
            Quantity::Purity,
            Quantity::Entropy,
            Quantity::MetricDeterminant,
            Quantity::ScalarCurvature,
            Quantity::Christoffel,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_limit() {
        let mx = mixing(1.0, 2.0, 0.0);
        assert_eq!(mx.tan, 0.0);
        assert!((mx.w1 - 1.0).abs() < 1e-15 && (mx.w2 - 2f64.sqrt()).abs() < 1e-15);
        let mx = mixing(1.0, 2.0, 1e-9);
        assert!(mx.tan > 0.0 && mx.tan < 1e-8);
    }

    #[test]
    fn normal_frequencies_diagonalize_potential() {
        let (a, b, c) = (1.0, 3.0, 0.5);
        let mx = mixing(a, b, c);
        let k = nalgebra::Matrix2::new(a, c / 2.0, c / 2.0, b);
        let ev = k.symmetric_eigen().eigenvalues;
        let (lo, hi) = (ev.min(), ev.max());
        assert!((mx.w1 * mx.w1 - lo).abs() < 1e-14);
        assert!((mx.w2 * mx.w2 - hi).abs() < 1e-14);
        assert!((mx.eta - (2.0 * mx.tan.atan()).cos()).abs() < 1e-14);
        assert!((mx.phi - (2.0 * mx.tan.atan()).sin()).abs() < 1e-14);
    }

    #[test]
    fn ground_curvature_is_minus_eight() {
        for pt in [[1.0, 2.0, 1.0], [1.0, 3.0, 0.5], [2.0, 2.5, 3.0]] {
            let r = LinearlyCoupled
                .closed_form(&Quantity::ScalarCurvature, &ParamPoint::new(pt.to_vec()), &[0, 0])
                .unwrap();
            assert!((r.scalar().unwrap() + 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn determinant_formula_matches_matrix() {
        let p = ParamPoint::new(vec![1.0, 2.0, 1.0]);
        for (m, n) in [(0, 0), (1, 2)] {
            let g = LinearlyCoupled::metric(&p, m, n);
            let det = LinearlyCoupled.closed_form(&Quantity::MetricDeterminant, &p, &[m, n]).unwrap();
            assert!((g.determinant() / det.scalar().unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn domain_branch() {
        assert!(LinearlyCoupled.check_domain(&ParamPoint::new(vec![2.0, 1.0, 0.5])).is_err());
        assert!(LinearlyCoupled.check_domain(&ParamPoint::new(vec![1.0, 1.0, 0.5])).is_err());
        assert!(LinearlyCoupled.check_domain(&ParamPoint::new(vec![1.0, 2.0, 3.0])).is_err());
        assert!(LinearlyCoupled.check_domain(&ParamPoint::new(vec![1.0, 2.0, 0.0])).is_ok());
    }
}
