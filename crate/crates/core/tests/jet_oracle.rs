use std::f64::consts::FRAC_PI_2;

use isosurf_core::catalog;
use isosurf_core::expr::Expr;
use isosurf_core::surface::SurfaceChart;
use proptest::prelude::*;

const D1: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2: [f64; 7] = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];

/// Sixth-order central difference of coordinate `k` for `∂_u^a ∂_v^b`, `a + b ≤ 2`.
fn fd(c: &SurfaceChart, p: [f64; 2], k: usize, a: usize, b: usize, h: f64) -> f64 {
    let w = |n: usize| -> &[f64; 7] { if n == 1 { &D1 } else { &D2 } };
    let x = |du: f64, dv: f64| c.point([p[0] + du, p[1] + dv]).unwrap()[k];
    let mut s = 0.0;
    match (a, b) {
        (a, 0) => {
            for (i, wi) in w(a).iter().enumerate() {
                s += wi * x((i as f64 - 3.0) * h, 0.0);
            }
            s / h.powi(a as i32)
        }
        (0, b) => {
            for (i, wi) in w(b).iter().enumerate() {
                s += wi * x(0.0, (i as f64 - 3.0) * h);
            }
            s / h.powi(b as i32)
        }
        _ => {
            for (i, wi) in D1.iter().enumerate() {
                for (j, wj) in D1.iter().enumerate() {
                    s += wi * wj * x((i as f64 - 3.0) * h, (j as f64 - 3.0) * h);
                }
            }
            s / (h * h)
        }
    }
}

#[test]
fn jets_match_finite_differences() {
    let h = 1e-2;
    for entry in catalog::all() {
        let c = &entry.chart;
        let d = c.domain();
        for k in 0..6 {
            let s = (0.5 + 0.618_033_988_749_895 * k as f64).fract();
            let t = (0.25 + 0.414_213_562_373_095 * k as f64).fract();
            let p = [d.u[0] + (0.1 + 0.8 * s) * (d.u[1] - d.u[0]), d.v[0] + (0.1 + 0.8 * t) * (d.v[1] - d.v[0])];
            let jets = c.jet_eval(p, 2).unwrap();
            for (coord, j) in jets.iter().enumerate() {
                for (a, b) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                    let exact = j.derivative(a, b);
                    let approx = fd(c, p, coord, a, b, h);
                    let tol = 1e-7 * exact.abs().max(1.0);
                    assert!((exact - approx).abs() < tol, "{} x{coord} ∂({a},{b}) at {p:?}: {exact} vs {approx}", entry.label);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn product_rule_is_exact(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -1.0f64..1.0, u in -1.0f64..1.0, v in -1.0f64..1.0) {
        let f = Expr::linear(a, b, 0.3).sin();
        let g = Expr::linear(c, 0.5, -0.2).exp().add(Expr::u().pow(2));
        let order = 5;
        let prod = f.clone().mul(g.clone()).jet(u, v, order);
        let expected = &f.jet(u, v, order) * &g.jet(u, v, order);
        for (x, y) in prod.coeffs().iter().zip(expected.coeffs()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn chain_rule_for_rotated_angles(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, u in -2.0f64..2.0, v in -2.0f64..2.0) {
        let order = 6;
        let j = Expr::linear(alpha, beta, 0.0).sin().jet(u, v, order);
        let x = alpha * u + beta * v;
        for n in 0..=order {
            for a in 0..=n {
                let b = n - a;
                let expected = alpha.powi(a as i32) * beta.powi(b as i32) * (x + n as f64 * FRAC_PI_2).sin();
                let got = j.derivative(a, b);
                prop_assert!((got - expected).abs() <= 1e-10 * (1.0 + expected.abs()), "({a},{b}): {got} vs {expected}");
            }
        }
    }
}
