//! `H = ½[p₁² + p₂² + k₀(q₁² + q₂²) + k₁(q₁ − q₂)²]`.

use nalgebra::DMatrix;

use super::{
    b_of, christoffel_table, complexify, covariance_from_phase_metric, half_omega, vn_entropy_term, ClosedForm, Model,
    NormalModes, ParamPoint, QuadraticForm, Quantity,
};
use crate::error::{Error, Result};

const DOMAIN: &str = "k0 > 0 and k0 + 2 k1 > 0";

#[derive(Debug, Clone, Copy, Default)]
pub struct SymmetricCoupled;

fn frequencies(p: &ParamPoint) -> (f64, f64) {
    (p.get(0).sqrt(), (p.get(0) + 2.0 * p.get(1)).sqrt())
}

/// `c = 2m + 1`, the convention of this system's phase block.
fn c_of(m: u32) -> f64 {
    2.0 * m as f64 + 1.0
}

impl SymmetricCoupled {
    fn metric(p: &ParamPoint, m: u32, n: u32) -> DMatrix<f64> {
        let (w1, w2) = frequencies(p);
        let (bm, bn) = (b_of(m), b_of(n));
        let t = bn / w2.powi(4);
        DMatrix::from_row_slice(2, 2, &[bm / w1.powi(4) + t, 2.0 * t, 2.0 * t, 4.0 * t]) / 32.0
    }

    fn phase_metric(p: &ParamPoint, m: u32, n: u32) -> DMatrix<f64> {
        let (w1, w2) = frequencies(p);
        let (cm, cn) = (c_of(m), c_of(n));
        let (qd, qo) = (cm * w1 + cn * w2, cm * w1 - cn * w2);
        let (pd, po) = (cm / w1 + cn / w2, cm / w1 - cn / w2);
        #[rustfmt::skip]
        let g = DMatrix::from_row_slice(4, 4, &[
            qd, qo, 0.0, 0.0,
            qo, qd, 0.0, 0.0,
            0.0, 0.0, pd, po,
            0.0, 0.0, po, pd,
        ]);
        g / 4.0
    }

    fn ground_state_only(&self, m: u32, n: u32, quantity: &Quantity) -> Result<()> {
        if m != 0 || n != 0 {
            return Err(Error::QuantumNumbers(format!("{}: '{quantity}' is defined for (m, n) = (0, 0)", self.name())));
        }
        Ok(())
    }

    fn symplectic(p: &ParamPoint) -> f64 {
        let (w1, w2) = frequencies(p);
        (w1 + w2) / (4.0 * (w1 * w2).sqrt())
    }
}

impl Model for SymmetricCoupled {
    fn name(&self) -> &str {
        "sym-coupled"
    }

    fn dof(&self) -> usize {
        2
    }

    fn param_names(&self) -> Vec<String> {
        vec!["k0".into(), "k1".into()]
    }

    fn domain(&self) -> String {
        DOMAIN.into()
    }

    fn check_domain(&self, p: &ParamPoint) -> Result<()> {
        if p.get(0) > 0.0 && p.get(0) + 2.0 * p.get(1) > 0.0 {
            Ok(())
        } else {
            Err(Error::domain(self.name(), DOMAIN))
        }
    }

    fn quadratic_form(&self, p: &ParamPoint) -> Result<QuadraticForm> {
        let (k0, k1) = (p.get(0), p.get(1));
        let mut f = QuadraticForm::zero(2);
        f.k[0][0] = k0 + k1;
        f.k[1][1] = k0 + k1;
        f.k[0][1] = -k1;
        f.k[1][0] = -k1;
        f.k[2][2] = 1.0;
        f.k[3][3] = 1.0;
        Ok(f)
    }

    fn quadratic_form_derivative(&self, _p: &ParamPoint, param: usize) -> Result<QuadraticForm> {
        let mut d = QuadraticForm::zero(2);
        match param {
            0 => {
                d.k[0][0] = 1.0;
                d.k[1][1] = 1.0;
            }
            1 => {
                d.k[0][0] = 1.0;
                d.k[1][1] = 1.0;
                d.k[0][1] = -1.0;
                d.k[1][0] = -1.0;
            }
            _ => return Err(Error::DimensionMismatch { expected: 2, got: param + 1 }),
        }
        Ok(d)
    }

    fn normal_modes(&self, p: &ParamPoint) -> Result<NormalModes> {
        self.check_domain(p)?;
        let (w1, w2) = frequencies(p);
        Ok(NormalModes { frequencies: vec![w1, w2], mixing_angle: None })
    }

    fn closed_form(&self, quantity: &Quantity, p: &ParamPoint, qn: &[u32]) -> Result<ClosedForm> {
        let (m, n) = (qn[0], qn[1]);
        let (k0, k1) = (p.get(0), p.get(1));
        let (w1, w2) = frequencies(p);
        let (bm, bn) = (b_of(m), b_of(n));
        Ok(match quantity {
            Quantity::Qgt => {
                let g = Self::metric(p, m, n);
                ClosedForm::Complex(complexify(&g, &DMatrix::zeros(2, 2)))
            }
            Quantity::Metric => ClosedForm::Real(Self::metric(p, m, n)),
            Quantity::Berry => ClosedForm::Real(DMatrix::zeros(2, 2)),
            Quantity::PhaseBlock => ClosedForm::Complex(complexify(&Self::phase_metric(p, m, n), &half_omega(2))),
            Quantity::Covariance => ClosedForm::Real(covariance_from_phase_metric(&Self::phase_metric(p, m, n))),
            Quantity::ReducedCovariance => {
                let (cm, cn) = (c_of(m), c_of(n));
                ClosedForm::Real(DMatrix::from_row_slice(2, 2, &[cm / w1 + cn / w2, 0.0, 0.0, cm * w1 + cn * w2]) / 4.0)
            }
            Quantity::Purity => {
                self.ground_state_only(m, n, quantity)?;
                ClosedForm::Scalar(2.0 * (w1 * w2).sqrt() / (w1 + w2))
            }
            Quantity::Entropy => {
                self.ground_state_only(m, n, quantity)?;
                ClosedForm::Scalar(vn_entropy_term(Self::symplectic(p)))
            }
            Quantity::SymplecticEigenvalues => {
                self.ground_state_only(m, n, quantity)?;
                ClosedForm::Vector(vec![Self::symplectic(p)])
            }
            Quantity::MetricDeterminant => ClosedForm::Scalar(bm * bn / (256.0 * w1.powi(4) * w2.powi(4))),
            Quantity::ScalarCurvature => ClosedForm::Scalar(0.0),
            Quantity::Ricci => ClosedForm::Real(DMatrix::zeros(2, 2)),
            Quantity::Christoffel => {
                let kp = k0 + 2.0 * k1;
                christoffel_table(
                    2,
                    &[(0, 0, 0, -1.0 / k0), (1, 0, 0, k1 / (k0 * kp)), (1, 0, 1, -1.0 / kp), (1, 1, 1, -2.0 / kp)],
                )
            }
            Quantity::Beltrami => {
                let det = bm * bn / (256.0 * w1.powi(4) * w2.powi(4));
                let u = (bm * bn / (128.0 * (bm + bn))).sqrt() * det.ln();
                let v = (bm * k0.ln() - bn * (k0 + 2.0 * k1).ln()) / (32.0 * (bm + bn)).sqrt();
                ClosedForm::Vector(vec![u, v])
            }
            Quantity::ReducedPhaseCurvature => {
                let (cm, cn) = (c_of(m), c_of(n));
                let num = -6.0 * cm.powi(3) * w1 * w2.powi(6) - 6.0 * cn.powi(3) * w1.powi(6) * w2
                    + cm * cm * cn * w2 * (-6.0 * w1.powi(6) + w1.powi(4) * w2 * w2 - 8.0 * w1 * w1 * w2.powi(4) - 5.0 * w2.powi(6))
                    + cm * cn * cn * w1 * (-5.0 * w1.powi(6) - 8.0 * w1.powi(4) * w2 * w2 + w1 * w1 * w2.powi(4) - 6.0 * w2.powi(6))
                    + 4.0
                        * cn
                        * w1.powi(5)
                        * w2
                        * w2
                        * (2.0 * w1 * w2 * (cm * cm + cn * cn) + cm * cn * w1 * w1 + 3.0 * cm * cn * w2 * w2);
                let den = 2.0 * w1.powi(4) * w2.powi(4) * (cm * w2 + cn * w1).powi(2) * (cm * w1 + cn * w2).powi(2);
                ClosedForm::Scalar(num / den)
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
            Quantity::SymplecticEigenvalues,
            Quantity::MetricDeterminant,
            Quantity::ScalarCurvature,
            Quantity::Christoffel,
            Quantity::Ricci,
            Quantity::Beltrami,
            Quantity::ReducedPhaseCurvature,
        ]
    }
}

/// Ground-state reduced phase curvature in the closed form quoted for
/// `m = n = 0`.
pub fn ground_reduced_curvature(w1: f64, w2: f64) -> f64 {
    2.0 * w1 * (w1 + 3.0 * w2) / (w2 * w2 * (w1 + w2).powi(3))
        - (w1 * w1 + w1 * w2 + w2 * w2) * (5.0 * w1 * w1 - 8.0 * w1 * w2 + 5.0 * w2 * w2)
            / (2.0 * w1.powi(4) * w2.powi(4) * (w1 + w2))
}

/// `k₁ → 0` limit of the reduced phase curvature.
pub fn decoupled_reduced_curvature(k0: f64, m: u32, n: u32) -> f64 {
    let (cm, cn) = (c_of(m), c_of(n));
    (4.0 * cn * k0 - 3.0 * (cm + cn)) / (k0.powf(2.5) * (cm + cn).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_and_christoffel() {
        let p = ParamPoint::new(vec![1.0, 1.0]);
        let nm = SymmetricCoupled.normal_modes(&p).unwrap();
        assert_eq!(nm.frequencies[0], 1.0);
        assert!((nm.frequencies[1] - 3f64.sqrt()).abs() < 1e-15);
        match SymmetricCoupled.closed_form(&Quantity::Christoffel, &p, &[0, 0]).unwrap() {
            ClosedForm::Tensor3 { data, .. } => assert_eq!(data[0], -1.0),
            _ => panic!(),
        }
    }

    #[test]
    fn ground_curvature_agrees_with_general_formula() {
        for pt in [[1.0, 1.0], [2.0, 0.5], [0.7, 3.0]] {
            let p = ParamPoint::new(pt.to_vec());
            let (w1, w2) = frequencies(&p);
            let r = SymmetricCoupled.closed_form(&Quantity::ReducedPhaseCurvature, &p, &[0, 0]).unwrap();
            let r = r.scalar().unwrap();
            assert!((r - ground_reduced_curvature(w1, w2)).abs() < 1e-12 * r.abs().max(1.0));
        }
    }

    #[test]
    fn covariance_reduction_matches_quoted_reduced_matrix() {
        let p = ParamPoint::new(vec![1.3, 0.8]);
        let cov = SymmetricCoupled.closed_form(&Quantity::Covariance, &p, &[0, 0]).unwrap();
        let red = SymmetricCoupled.closed_form(&Quantity::ReducedCovariance, &p, &[0, 0]).unwrap();
        let (cov, red) = (cov.real().unwrap(), red.real().unwrap());
        let sub = super::super::submatrix(cov, &[0, 2]);
        assert!((sub - red).abs().max() < 1e-15);
        let det = red.determinant();
        let purity = SymmetricCoupled.closed_form(&Quantity::Purity, &p, &[0, 0]).unwrap().scalar().unwrap();
        assert!((0.5 / det.sqrt() - purity).abs() < 1e-14);
    }

    #[test]
    fn excited_states_have_no_purity_form() {
        let p = ParamPoint::new(vec![1.0, 1.0]);
        assert!(matches!(
            SymmetricCoupled.closed_form(&Quantity::Purity, &p, &[1, 0]),
            Err(Error::QuantumNumbers(_))
        ));
    }
}
