use std::f64::consts::TAU;

use nalgebra::DMatrix;
use proptest::prelude::*;

use qgeom::expr::Expr;
use qgeom::gauss::{omega, purity, symplectic_eigenvalues, von_neumann_entropy, CovarianceMatrix};
use qgeom::geometry::{ricci_scalar, GeometryOptions, MetricField, MetricSource};
use qgeom::models::{ModelSpec, ParamPoint};
use qgeom::qgt::{qgt_perturbative, Options, StateSelector};

fn thermal_entropy(nu: f64) -> f64 {
    let (a, b) = (nu + 0.5, nu - 0.5);
    a * a.ln() - if b > 0.0 { b * b.ln() } else { 0.0 }
}

/// Two-mode squeezed vacuum with mode 1 locally squeezed by `t` and rotated by `theta`.
fn two_mode(r: f64, t: f64, theta: f64) -> DMatrix<f64> {
    let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    #[rustfmt::skip]
    let tmsv = DMatrix::from_row_slice(4, 4, &[
        c, s, 0.0, 0.0,
        s, c, 0.0, 0.0,
        0.0, 0.0, c, -s,
        0.0, 0.0, -s, c,
    ]) * 0.5;
    let (co, si) = (theta.cos(), theta.sin());
    let mut local = DMatrix::identity(4, 4);
    local[(1, 1)] = co * t.exp();
    local[(1, 3)] = si * (-t).exp();
    local[(3, 1)] = -si * t.exp();
    local[(3, 3)] = co * (-t).exp();
    &local * tmsv * local.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn local_symplectic_is_symplectic(t in -1.0f64..1.0, theta in 0.0f64..TAU) {
        // Vacuum transformed by a symplectic map stays pure.
        let cov = CovarianceMatrix::new(two_mode(0.0, t, theta)).unwrap();
        for nu in symplectic_eigenvalues(&cov).unwrap() {
            prop_assert!((nu - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn squeezed_pair_reduces_to_thermal(r in 0.0f64..1.5, t in -1.0f64..1.0, theta in 0.0f64..TAU) {
        let cov = CovarianceMatrix::new(two_mode(r, t, theta)).unwrap();
        prop_assert!((purity(&cov).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!(von_neumann_entropy(&cov).unwrap().abs() < 1e-7);
        let reduced = cov.reduce(&[0]).unwrap();
        let nu = (2.0 * r).cosh() / 2.0;
        prop_assert!((purity(&reduced).unwrap() - 1.0 / (2.0 * r).cosh()).abs() < 1e-10);
        prop_assert!((symplectic_eigenvalues(&reduced).unwrap()[0] - nu).abs() < 1e-9);
        prop_assert!((von_neumann_entropy(&reduced).unwrap() - thermal_entropy(nu)).abs() < 1e-8);
        // Both halves of a pure state carry the same entropy.
        let other = cov.reduce(&[1]).unwrap();
        prop_assert!((von_neumann_entropy(&other).unwrap() - thermal_entropy(nu)).abs() < 1e-7);
    }

    #[test]
    fn conformal_metric_curvature(a in -0.5f64..0.5, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        // g = exp(2φ)·I with φ = a·x² has R = −2·exp(−2φ)·Δφ = −4a·exp(−2a·x²).
        let field = MetricField::new(2, MetricSource::Custom, move |p: &[f64]| {
            Ok(DMatrix::identity(2, 2) * (2.0 * a * p[0] * p[0]).exp())
        }).unwrap();
        let (_, r) = ricci_scalar(&field, &[x, y], &GeometryOptions::default()).unwrap();
        let want = -4.0 * a * (-2.0 * a * x * x).exp();
        prop_assert!((r - want).abs() < 1e-6, "R = {r}, want {want}");
    }

    #[test]
    fn polynomial_expressions_evaluate(a in -3.0f64..3.0, b in 0.1f64..3.0, x in -2.0f64..2.0) {
        let e = Expr::parse("a*x^2 - sqrt(b)/(1 + x*x) + exp(-a)").unwrap();
        let names: Vec<String> = ["a", "b", "x"].iter().map(|s| s.to_string()).collect();
        let got = e.eval(&names, &[a, b, x]).unwrap();
        let want = a * x * x - b.sqrt() / (1.0 + x * x) + (-a).exp();
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oscillator_tensor_structure(x in 0.5f64..2.0, yfrac in -0.6f64..0.6, z in 0.5f64..2.0, n in 0u32..3) {
        let y = yfrac * (x * z).sqrt();
        let m = ModelSpec::from_name("gho").unwrap();
        let p = ParamPoint::new(vec![x, y, z]);
        let basis = m.default_basis(&p, 80).unwrap();
        let t = qgt_perturbative(&m, &p, &StateSelector::new(vec![n]), &basis, &Options::default()).unwrap();
        prop_assert!(t.hermiticity_defect() < 1e-10);
        let g = t.metric();
        let eig = g.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&v| v > -1e-12 * g.amax()));
        // Phase block: Im Q = Ω/2, so F = −2 Im Q = −Ω for every Fock state.
        let f = t.curvature();
        let w = omega(1);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((f[(3 + i, 3 + j)] + w[(i, j)]).abs() < 1e-9 * (n as f64 + 1.0));
            }
        }
    }
}
