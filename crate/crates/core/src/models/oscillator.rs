//! `H = ½[Xq² + Y(qp + pq) + Zp²]` and its extension with a linear term `Wq`.

use nalgebra::DMatrix;

use super::{
    a_of, b_of, christoffel_table, complexify, covariance_from_phase_metric, half_omega, ClosedForm, Model,
    NormalModes, ParamPoint, QuadraticForm, Quantity,
};
use crate::error::{Error, Result};

const DOMAIN: &str = "XZ - Y^2 > 0 and Z > 0";

fn frequency(x: f64, y: f64, z: f64) -> f64 {
    (x * z - y * y).sqrt()
}

fn check(name: &str, x: f64, y: f64, z: f64) -> Result<()> {
    if x * z - y * y > 0.0 && z > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(name, DOMAIN))
    }
}

fn form(w: f64, x: f64, y: f64, z: f64) -> QuadraticForm {
    QuadraticForm { k: vec![vec![x, y], vec![y, z]], l: vec![w, 0.0], c: 0.0 }
}

/// Parameter metric of the quadratic part over (X, Y, Z).
fn quadratic_metric(x: f64, y: f64, z: f64, n: u32) -> DMatrix<f64> {
    let w = frequency(x, y, z);
    let s = b_of(n) / (32.0 * w.powi(4));
    DMatrix::from_row_slice(
        3,
        3,
        &[
            z * z,
            -2.0 * y * z,
            -x * z + 2.0 * y * y,
            -2.0 * y * z,
            4.0 * z * x,
            -2.0 * y * x,
            -x * z + 2.0 * y * y,
            -2.0 * y * x,
            x * x,
        ],
    ) * s
}

/// `Im G` over (X, Y, Z).
fn quadratic_berry_im(x: f64, y: f64, z: f64, n: u32) -> DMatrix<f64> {
    let w = frequency(x, y, z);
    let s = a_of(n) / (8.0 * w.powi(3));
    DMatrix::from_row_slice(3, 3, &[0.0, z, -y, -z, 0.0, x, y, -x, 0.0]) * s
}

fn phase_block(x: f64, y: f64, z: f64, n: u32) -> (DMatrix<f64>, DMatrix<f64>) {
    let w = frequency(x, y, z);
    let re = DMatrix::from_row_slice(2, 2, &[x, y, y, z]) * (a_of(n) / w);
    (re, half_omega(1))
}

/// Scalar curvature of the phase block over two of (X, Y, Z).
fn phase_curvature(x: f64, y: f64, z: f64, n: u32, pair: (&str, &str)) -> Option<f64> {
    let w = frequency(x, y, z);
    let den = 2.0 * (2.0 * n as f64 + 1.0) * w.powi(5);
    let key = if pair.0 <= pair.1 { (pair.0, pair.1) } else { (pair.1, pair.0) };
    let num = match key {
        ("X", "Y") => -(4.0 * x * x * z + 8.0 * x * y * y + 6.0 * x * z * z + 6.0 * y * y * z + 3.0 * z.powi(3)),
        ("X", "Z") => -3.0 * x.powi(3) + 4.0 * x * y * z + 2.0 * y.powi(3) - 3.0 * z.powi(3),
        ("Y", "Z") => -(3.0 * x.powi(3) + 6.0 * x * x * z + 6.0 * x * y * y + 4.0 * x * z * z + 8.0 * y * y * z),
        _ => return None,
    };
    Some(num / den)
}

fn single(qn: &[u32]) -> u32 {
    qn[0]
}

fn oscillator_normal_modes(x: f64, y: f64, z: f64) -> NormalModes {
    NormalModes { frequencies: vec![frequency(x, y, z)], mixing_angle: None }
}

/// Generalized oscillator over (X, Y, Z).
#[derive(Debug, Clone, Copy, Default)]
pub struct GeneralizedOscillator;

impl Model for GeneralizedOscillator {
    fn name(&self) -> &str {
        "gho"
    }

    fn dof(&self) -> usize {
        1
    }

    fn param_names(&self) -> Vec<String> {
        vec!["X".into(), "Y".into(), "Z".into()]
    }

    fn domain(&self) -> String {
        DOMAIN.into()
    }

    fn check_domain(&self, p: &ParamPoint) -> Result<()> {
        check(self.name(), p.get(0), p.get(1), p.get(2))
    }

    fn quadratic_form(&self, p: &ParamPoint) -> Result<QuadraticForm> {
        Ok(form(0.0, p.get(0), p.get(1), p.get(2)))
    }

    fn quadratic_form_derivative(&self, _p: &ParamPoint, param: usize) -> Result<QuadraticForm> {
        let mut d = QuadraticForm::zero(1);
        match param {
            0 => d.k[0][0] = 1.0,
            1 => {
                d.k[0][1] = 1.0;
                d.k[1][0] = 1.0;
            }
            2 => d.k[1][1] = 1.0,
            _ => return Err(Error::DimensionMismatch { expected: 3, got: param + 1 }),
        }
        Ok(d)
    }

    fn normal_modes(&self, p: &ParamPoint) -> Result<NormalModes> {
        self.check_domain(p)?;
        Ok(oscillator_normal_modes(p.get(0), p.get(1), p.get(2)))
    }

    fn basis_frequencies(&self, p: &ParamPoint) -> Result<Vec<f64>> {
        self.check_domain(p)?;
        Ok(vec![frequency(p.get(0), p.get(1), p.get(2)) / p.get(2)])
    }

    fn metric_coordinates(&self) -> Vec<usize> {
        vec![0, 1]
    }

    fn closed_form(&self, quantity: &Quantity, p: &ParamPoint, qn: &[u32]) -> Result<ClosedForm> {
        let (x, y, z) = (p.get(0), p.get(1), p.get(2));
        let n = single(qn);
        let w = frequency(x, y, z);
        Ok(match quantity {
            Quantity::Qgt => ClosedForm::Complex(complexify(&quadratic_metric(x, y, z, n), &quadratic_berry_im(x, y, z, n))),
            Quantity::Metric => ClosedForm::Real(quadratic_metric(x, y, z, n)),
            Quantity::Berry => ClosedForm::Real(quadratic_berry_im(x, y, z, n) * -2.0),
            Quantity::PhaseBlock => {
                let (re, im) = phase_block(x, y, z, n);
                ClosedForm::Complex(complexify(&re, &im))
            }
            Quantity::Covariance => ClosedForm::Real(covariance_from_phase_metric(&phase_block(x, y, z, n).0)),
            // Determinant of the (X, Y) block at fixed Z.
            Quantity::MetricDeterminant => ClosedForm::Scalar(b_of(n).powi(2) * z * z / (256.0 * w.powi(6))),
            Quantity::ScalarCurvature => ClosedForm::Scalar(-16.0 / b_of(n)),
            Quantity::PhaseCurvature(a, b) => ClosedForm::Scalar(
                phase_curvature(x, y, z, n, (a, b)).ok_or_else(|| Error::unsupported(self.name(), quantity))?,
            ),
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
            Quantity::MetricDeterminant,
            Quantity::ScalarCurvature,
            Quantity::PhaseCurvature("X".into(), "Y".into()),
            Quantity::PhaseCurvature("X".into(), "Z".into()),
            Quantity::PhaseCurvature("Y".into(), "Z".into()),
        ]
    }
}

/// Generalized oscillator with a linear term, over (W, X, Y, Z).
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearTerm;

impl LinearTerm {
    fn metric(w_: f64, x: f64, y: f64, z: f64, n: u32) -> DMatrix<f64> {
        let w = frequency(x, y, z);
        let s = a_of(n) / w.powi(7);
        let w2 = w * w;
        let ww = w_ * w_;
        #[rustfmt::skip]
        let first = DMatrix::from_row_slice(4, 4, &[
            z * w2 * w2, -w_ * z * z * w2, 2.0 * w_ * y * z * w2, -w_ * y * y * w2,
            -w_ * z * z * w2, ww * z.powi(3), -2.0 * ww * y * z * z, ww * y * y * z,
            2.0 * w_ * y * z * w2, -2.0 * ww * y * z * z, ww * z * (3.0 * y * y + x * z), -ww * y * (y * y + x * z),
            -w_ * y * y * w2, ww * y * y * z, -ww * y * (y * y + x * z), ww * x * y * y,
        ]) * s;
        let mut out = first;
        let q = quadratic_metric(x, y, z, n);
        for i in 0..3 {
            for j in 0..3 {
                out[(i + 1, j + 1)] += q[(i, j)];
            }
        }
        out
    }

    fn berry(w_: f64, x: f64, y: f64, z: f64, n: u32) -> DMatrix<f64> {
        let w = frequency(x, y, z);
        let w2 = w * w;
        let ww = w_ * w_;
        #[rustfmt::skip]
        let first = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, -z, y,
            0.0, z, 0.0, -x,
            0.0, -y, x, 0.0,
        ]) * (a_of(n) / (4.0 * w.powi(3)));
        #[rustfmt::skip]
        let second = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, w_ * z * w2, -w_ * y * w2,
            0.0, 0.0, -ww * z * z, ww * y * z,
            -w_ * z * w2, ww * z * z, 0.0, -ww * y * y,
            w_ * y * w2, -ww * y * z, ww * y * y, 0.0,
        ]) / w.powi(6);
        first + second
    }

    fn require_unit_z(&self, z: f64, quantity: &Quantity) -> Result<()> {
        if (z - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("{}: closed form for '{quantity}' is defined at Z = 1", self.name())));
        }
        Ok(())
    }
}

impl Model for LinearTerm {
    fn name(&self) -> &str {
        "gho-linear"
    }

    fn dof(&self) -> usize {
        1
    }

    fn param_names(&self) -> Vec<String> {
        vec!["W".into(), "X".into(), "Y".into(), "Z".into()]
    }

    fn domain(&self) -> String {
        DOMAIN.into()
    }

    fn check_domain(&self, p: &ParamPoint) -> Result<()> {
        check(self.name(), p.get(1), p.get(2), p.get(3))
    }

    fn quadratic_form(&self, p: &ParamPoint) -> Result<QuadraticForm> {
        Ok(form(p.get(0), p.get(1), p.get(2), p.get(3)))
    }

    fn quadratic_form_derivative(&self, _p: &ParamPoint, param: usize) -> Result<QuadraticForm> {
        let mut d = QuadraticForm::zero(1);
        match param {
            0 => d.l[0] = 1.0,
            1 => d.k[0][0] = 1.0,
            2 => {
                d.k[0][1] = 1.0;
                d.k[1][0] = 1.0;
            }
            3 => d.k[1][1] = 1.0,
            _ => return Err(Error::DimensionMismatch { expected: 4, got: param + 1 }),
        }
        Ok(d)
    }

    fn normal_modes(&self, p: &ParamPoint) -> Result<NormalModes> {
        self.check_domain(p)?;
        Ok(oscillator_normal_modes(p.get(1), p.get(2), p.get(3)))
    }

    fn basis_frequencies(&self, p: &ParamPoint) -> Result<Vec<f64>> {
        self.check_domain(p)?;
        Ok(vec![frequency(p.get(1), p.get(2), p.get(3)) / p.get(3)])
    }

    fn metric_coordinates(&self) -> Vec<usize> {
        vec![0, 1, 2]
    }

    fn phase_coordinates(&self) -> Vec<usize> {
        vec![1, 2]
    }

    fn closed_form(&self, quantity: &Quantity, p: &ParamPoint, qn: &[u32]) -> Result<ClosedForm> {
        let (w_, x, y, z) = (p.get(0), p.get(1), p.get(2), p.get(3));
        let n = single(qn);
        let (a, b) = (a_of(n), b_of(n));
        let w = frequency(x, y, z);
        let ww = w_ * w_;
        let d = 8.0 * a * ww + b * w.powi(3);
        Ok(match quantity {
            Quantity::Qgt => {
                let g = Self::metric(w_, x, y, z, n);
                let f = Self::berry(w_, x, y, z, n);
                ClosedForm::Complex(complexify(&g, &(f * -0.5)))
            }
            Quantity::Metric => ClosedForm::Real(Self::metric(w_, x, y, z, n)),
            Quantity::Berry => ClosedForm::Real(Self::berry(w_, x, y, z, n)),
            Quantity::PhaseBlock => {
                let (re, im) = phase_block(x, y, z, n);
                ClosedForm::Complex(complexify(&re, &im))
            }
            Quantity::Covariance => ClosedForm::Real(covariance_from_phase_metric(&phase_block(x, y, z, n).0)),
            Quantity::PhaseCurvature(pa, pb) => ClosedForm::Scalar(
                phase_curvature(x, y, z, n, (pa, pb)).ok_or_else(|| Error::unsupported(self.name(), quantity))?,
            ),
            Quantity::MetricDeterminant => {
                self.require_unit_z(z, quantity)?;
                let nf = n as f64;
                let om2 = x - y * y;
                ClosedForm::Scalar(
                    (2.0 * nf.powi(3) + 3.0 * nf * nf + 3.0 * nf + 1.0) * (b * om2.powf(1.5) + (8.0 * nf + 4.0) * ww)
                        / (512.0 * om2.powi(6)),
                )
            }
            Quantity::ScalarCurvature => {
                self.require_unit_z(z, quantity)?;
                ClosedForm::Scalar(
                    -4.0 * (64.0 * a * a * ww * ww + 40.0 * a * b * ww * w.powi(3) + 7.0 * b * b * w.powi(6)) / (b * d * d),
                )
            }
            Quantity::Christoffel => {
                self.require_unit_z(z, quantity)?;
                let (w3, w4, w5, w7) = (w.powi(3), w.powi(4), w.powi(5), w.powi(7));
                let e = 8.0 * a * ww * w + b * w4;
                christoffel_table(
                        3,
                        &[
                            (0, 0, 0, -8.0 * a * w_ / (b * w3)),
                            (1, 1, 0, 8.0 * a * w_ / (b * w3)),
                            (0, 1, 0, 8.0 * a * ww / (b * w5) - 3.0 / (4.0 * w * w)),
                            (0, 1, 1, w_ / (2.0 * w4) - 8.0 * a * ww * w_ / (b * w7)),
                            (0, 2, 0, 3.0 * y / (2.0 * w * w) - 16.0 * a * ww * y / (b * w5)),
                            (0, 2, 1, w_ * y * (16.0 * a * ww - b * w3) / (b * w7)),
                            (1, 0, 0, -8.0 * a / (b * w)),
                            (1, 1, 1, -1.0 / (w * w) - 8.0 * a * ww / (b * w5)),
                            (1, 2, 0, -128.0 * a * a * ww * w_ * y / (b * w * w * e)),
                            (2, 2, 0, 8.0 * a * w_ / d),
                            (2, 2, 1, (-20.0 * a * ww - b * w3) / (2.0 * w * w * d)),
                            (2, 2, 2, 2.0 * y * (20.0 * a * ww + b * w3) / (w * w * d)),
                            (
                                1,
                                2,
                                1,
                                y * (128.0 * a * a * ww * ww * w + 12.0 * a * b * ww * w4 + b * b * w7) / (b * w5 * e),
                            ),
                            (
                                1,
                                2,
                                2,
                                8.0 * a * ww * (8.0 * a * ww * (x - 5.0 * y * y) * w + b * w4 * (x + y * y)) / (b * w5 * e),
                            ),
                            (0, 2, 2, 8.0 * a * ww * w_ * (x - 5.0 * y * y) / (b * w7) + w_ * (x + y * y) / w4),
                        ],
                    )
            }
            Quantity::Ricci => {
                self.require_unit_z(z, quantity)?;
                let w3 = w.powi(3);
                let w6 = w.powi(6);
                let e = 8.0 * a * ww * w + b * w.powi(4);
                let r11 = 2.0 * a * (8.0 * a * ww - 3.0 * b * w3) / (d * d);
                let r21 = 8.0 * a * w_ * (2.0 * a * ww + b * w3) / (e * e);
                let r22 = (-896.0 * a * a * ww * ww * w - 224.0 * a * b * ww * w.powi(4) - 5.0 * b * b * w.powi(7))
                    / (16.0 * w.powi(5) * d * d);
                let r31 = -16.0 * a * w_ * y * (2.0 * a * ww + b * w3) / (w * w * d * d);
                let r32 = -y * (-896.0 * a * a * ww * ww - 224.0 * a * b * ww * w3 - 5.0 * b * b * w6) / (8.0 * w.powi(4) * d * d);
                let r33 = (-64.0 * a * a * ww * ww * (3.0 * x + 11.0 * y * y)
                    - 8.0 * a * b * ww * (9.0 * x + 19.0 * y * y) * w3
                    - b * b * (6.0 * x - y * y) * w6)
                    / (4.0 * w.powi(4) * d * d);
                ClosedForm::Real(DMatrix::from_row_slice(3, 3, &[r11, r21, r31, r21, r22, r32, r31, r32, r33]))
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
            Quantity::MetricDeterminant,
            Quantity::ScalarCurvature,
            Quantity::Christoffel,
            Quantity::Ricci,
            Quantity::PhaseCurvature("X".into(), "Y".into()),
            Quantity::PhaseCurvature("X".into(), "Z".into()),
            Quantity::PhaseCurvature("Y".into(), "Z".into()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_xy_entry() {
        let m = GeneralizedOscillator;
        let g = m.closed_form(&Quantity::Qgt, &ParamPoint::new(vec![2.0, 0.0, 1.0]), &[0]).unwrap();
        let g = g.complex().unwrap();
        let expected = 1.0 / (16.0 * 2f64.sqrt().powi(3));
        assert!(g[(0, 1)].re.abs() < 1e-15);
        assert!((g[(0, 1)].im - expected).abs() < 1e-15);
        assert!((expected - 0.0221).abs() < 1e-4);
    }

    #[test]
    fn linear_term_reduces_without_w() {
        let p = ParamPoint::new(vec![0.0, 1.5, 0.3, 1.2]);
        let g = LinearTerm::metric(0.0, 1.5, 0.3, 1.2, 2);
        let q = quadratic_metric(1.5, 0.3, 1.2, 2);
        assert!(g.row(0).iter().skip(1).all(|v| *v == 0.0));
        let w = frequency(1.5, 0.3, 1.2);
        assert!((g[(0, 0)] - a_of(2) * 1.2 / w.powi(3)).abs() < 1e-15);
        assert!((g.view((1, 1), (3, 3)) - q).abs().max() < 1e-15);
        let f = LinearTerm.closed_form(&Quantity::Berry, &p, &[2]).unwrap();
        let f0 = GeneralizedOscillator.closed_form(&Quantity::Berry, &ParamPoint::new(vec![1.5, 0.3, 1.2]), &[2]).unwrap();
        assert!((f.real().unwrap().view((1, 1), (3, 3)) - f0.real().unwrap()).abs().max() < 1e-15);
    }

    #[test]
    fn unit_z_determinant_matches_factored_form() {
        let (w_, x, y) = (0.7, 1.5, 0.3);
        for n in [0u32, 1, 3] {
            let p = ParamPoint::new(vec![w_, x, y, 1.0]);
            let det = LinearTerm.closed_form(&Quantity::MetricDeterminant, &p, &[n]).unwrap().scalar().unwrap();
            let w = frequency(x, y, 1.0);
            let (a, b) = (a_of(n), b_of(n));
            let factored = a * b * (8.0 * a * w_ * w_ + b * w.powi(3)) / (256.0 * w.powi(12));
            assert!((det / factored - 1.0).abs() < 1e-12);
            let g = LinearTerm::metric(w_, x, y, 1.0, n);
            let keep = [0usize, 1, 2];
            let sub = super::super::submatrix(&g, &keep);
            assert!((sub.determinant() / factored - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn z_guard() {
        let p = ParamPoint::new(vec![0.7, 1.5, 0.3, 1.2]);
        assert!(LinearTerm.closed_form(&Quantity::ScalarCurvature, &p, &[0]).is_err());
        assert!(GeneralizedOscillator.check_domain(&ParamPoint::new(vec![1.0, 1.0, 1.0])).is_err());
    }
}
