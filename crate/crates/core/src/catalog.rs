//! Built-in example charts with exact formulas and their expected
//! properties.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{CExpr, Expr};
use crate::surface::{AmbientSpace, Domain, SurfaceChart};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expected {
    pub ambient_dim: usize,
    pub substantial: bool,
    pub minimal: bool,
    pub isotropic: bool,
    pub m: usize,
    pub ranks: Vec<usize>,
    pub periodic: bool,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub label: &'static str,
    pub description: &'static str,
    pub chart: SurfaceChart,
    pub expected: Expected,
}

pub const LABELS: [&str; 8] = [
    "clifford-s3",
    "veronese-s4",
    "equilateral-s5",
    "holo-r4",
    "holo-cubic-r4",
    "holo-exp-r4",
    "nonisotropic-r5",
    "perturbed-nonminimal",
];

const TAU: f64 = 2.0 * PI;

fn torus_domain() -> Domain {
    Domain::new([0.0, TAU], [0.0, TAU])
}

fn lattice() -> Vec<[f64; 2]> {
    vec![[TAU, 0.0], [0.0, TAU]]
}

fn expected(ambient: AmbientSpace, minimal: bool, isotropic: bool, periodic: bool) -> Expected {
    Expected {
        ambient_dim: ambient.dim,
        substantial: true,
        minimal,
        isotropic,
        m: ambient.normal_levels(),
        ranks: ambient.generic_ranks(),
        periodic,
    }
}

fn clifford() -> CatalogEntry {
    let s = FRAC_1_SQRT_2;
    let ambient = AmbientSpace::sphere(3);
    let chart = SurfaceChart::new(
        "clifford-s3",
        ambient,
        torus_domain(),
        lattice(),
        vec![
            Expr::U.cos().scale(s),
            Expr::U.sin().scale(s),
            Expr::V.cos().scale(s),
            Expr::V.sin().scale(s),
        ],
    )
    .expect("valid catalog chart");
    CatalogEntry {
        label: "clifford-s3",
        description: "Clifford torus (cos u, sin u, cos v, sin v)/√2 in S^3",
        chart,
        expected: expected(ambient, true, true, true),
    }
}

fn veronese() -> CatalogEntry {
    // unit sphere point in spherical coordinates (polar angle u, azimuth v)
    let x = Expr::U.sin().mul(Expr::V.cos());
    let y = Expr::U.sin().mul(Expr::V.sin());
    let z = Expr::U.cos();
    let r3 = 3f64.sqrt();
    let ambient = AmbientSpace::sphere(4);
    let chart = SurfaceChart::new(
        "veronese-s4",
        ambient,
        Domain::new([0.35, PI - 0.35], [0.0, TAU]),
        vec![[0.0, TAU]],
        vec![
            y.clone().mul(z.clone()).scale(r3),
            x.clone().mul(z.clone()).scale(r3),
            x.clone().mul(y.clone()).scale(r3),
            x.clone().pow(2).sub(y.clone().pow(2)).scale(0.5 * r3),
            x.pow(2).add(y.pow(2)).sub(z.pow(2).scale(2.0)).scale(0.5),
        ],
    )
    .expect("valid catalog chart");
    CatalogEntry {
        label: "veronese-s4",
        description: "Veronese surface in S^4 over a polar-angle band of the unit sphere",
        chart,
        expected: expected(ambient, true, true, true),
    }
}

fn equilateral() -> CatalogEntry {
    let s = 1.0 / 3f64.sqrt();
    let w = Expr::linear(1.0, 1.0, 0.0);
    let ambient = AmbientSpace::sphere(5);
    let chart = SurfaceChart::new(
        "equilateral-s5",
        ambient,
        torus_domain(),
        lattice(),
        vec![
            Expr::U.cos().scale(s),
            Expr::U.sin().scale(s),
            Expr::V.cos().scale(s),
            Expr::V.sin().scale(s),
            w.clone().cos().scale(s),
            w.sin().scale(-s),
        ],
    )
    .expect("valid catalog chart");
    CatalogEntry {
        label: "equilateral-s5",
        description: "flat torus (e^{iu}, e^{iv}, e^{-i(u+v)})/√3 in S^5",
        chart,
        expected: expected(ambient, true, true, true),
    }
}

fn holomorphic(label: &'static str, description: &'static str, parts: Vec<CExpr>, domain: Domain, periods: Vec<[f64; 2]>) -> CatalogEntry {
    let coords = parts.into_iter().flat_map(|c| [c.re, c.im]).collect::<Vec<_>>();
    let ambient = AmbientSpace::euclidean(coords.len());
    let periodic = !periods.is_empty();
    let chart = SurfaceChart::new(label, ambient, domain, periods, coords).expect("valid catalog chart");
    CatalogEntry {
        label,
        description,
        chart,
        expected: expected(ambient, true, true, periodic),
    }
}

fn holo_r4() -> CatalogEntry {
    holomorphic(
        "holo-r4",
        "holomorphic curve z ↦ (z, z²) in C² = R^4",
        vec![CExpr::z(), CExpr::z().powi(2)],
        Domain::new([-1.0, 1.0], [-1.0, 1.0]),
        vec![],
    )
}

fn holo_cubic_r4() -> CatalogEntry {
    holomorphic(
        "holo-cubic-r4",
        "holomorphic curve z ↦ (z, z³) in R^4; second fundamental form vanishes at z = 0",
        vec![CExpr::z(), CExpr::z().powi(3)],
        Domain::new([-1.0, 1.0], [-1.0, 1.0]),
        vec![],
    )
}

fn holo_exp_r4() -> CatalogEntry {
    holomorphic(
        "holo-exp-r4",
        "holomorphic cylinder z ↦ (e^z, e^{-z}) in R^4, periodic in v",
        vec![CExpr::z().exp(), CExpr::z().scale(-1.0, 0.0).exp()],
        Domain::new([-1.0, 1.0], [0.0, TAU]),
        vec![[0.0, TAU]],
    )
}

fn nonisotropic_r5() -> CatalogEntry {
    // Re ∫ φ dz for the null curve
    // φ = (1 - z², i(1 + z²), 2z cos z, z sin 2z, z(1 - cos 2z)).
    let z = CExpr::z;
    let two_z = || z().scale(2.0, 0.0);
    let parts = vec![
        z().sub(z().powi(3).scale(1.0 / 3.0, 0.0)),
        z().add(z().powi(3).scale(1.0 / 3.0, 0.0)).scale(0.0, 1.0),
        z().mul(z().sin()).add(z().cos()).scale(2.0, 0.0),
        z().mul(two_z().cos()).scale(-0.5, 0.0).add(two_z().sin().scale(0.25, 0.0)),
        z().powi(2)
            .scale(0.5, 0.0)
            .sub(z().mul(two_z().sin()).scale(0.5, 0.0))
            .sub(two_z().cos().scale(0.25, 0.0)),
    ];
    let coords: Vec<Expr> = parts.into_iter().map(|c| c.re).collect();
    let ambient = AmbientSpace::euclidean(5);
    let chart = SurfaceChart::new(
        "nonisotropic-r5",
        ambient,
        Domain::new([0.2, 1.0], [0.2, 0.8]),
        vec![],
        coords,
    )
    .expect("valid catalog chart");
    CatalogEntry {
        label: "nonisotropic-r5",
        description: "minimal surface in R^5 from a null curve, first curvature ellipse not a circle",
        chart,
        expected: expected(ambient, true, false, false),
    }
}

fn perturbed_nonminimal() -> CatalogEntry {
    let ambient = AmbientSpace::sphere(3);
    let chart = SurfaceChart::new(
        "perturbed-nonminimal",
        ambient,
        torus_domain(),
        lattice(),
        vec![
            Expr::U.cos().scale(0.6),
            Expr::U.sin().scale(0.6),
            Expr::V.cos().scale(0.8),
            Expr::V.sin().scale(0.8),
        ],
    )
    .expect("valid catalog chart");
    CatalogEntry {
        label: "perturbed-nonminimal",
        description: "flat torus with radii 0.6 and 0.8 in S^3 (constant mean curvature, not minimal)",
        chart,
        expected: expected(ambient, false, false, true),
    }
}

pub fn get(label: &str) -> Result<CatalogEntry> {
    match label {
        "clifford-s3" => Ok(clifford()),
        "veronese-s4" => Ok(veronese()),
        "equilateral-s5" => Ok(equilateral()),
        "holo-r4" => Ok(holo_r4()),
        "holo-cubic-r4" => Ok(holo_cubic_r4()),
        "holo-exp-r4" => Ok(holo_exp_r4()),
        "nonisotropic-r5" => Ok(nonisotropic_r5()),
        "perturbed-nonminimal" => Ok(perturbed_nonminimal()),
        other => Err(Error::UnknownLabel(other.to_string())),
    }
}

pub fn all() -> Vec<CatalogEntry> {
    LABELS.iter().map(|l| get(l).expect("catalog label")).collect()
}
