//! Polar surface `g* = e_N` of an isotropic surface in an odd-dimensional
//! sphere and its conformality to the metric of `g`.

use rayon::prelude::*;
use serde::Serialize;

use super::flag::osculating_flag;
use super::frame::{chart_frame, jet_frame};
use super::isotropy::adapted_frame;
use crate::error::{Error, Result};
use crate::jets::Jet2;
use crate::sampled::SampledImmersion;
use crate::source::JetSource;
use crate::surface::{dot, AmbientSpace, Grid, SurfaceChart};

/// Metric of a second immersion written in the orthonormal frame of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConformalPoint {
    /// `G_ij = ⟨dg*(e_i), dg*(e_j)⟩`.
    pub metric: [[f64; 2]; 2],
    /// `sqrt((G11 - G22)² + 4 G12²) / (G11 + G22)`.
    pub deviation: f64,
    /// `(G11 + G22) / 2`.
    pub factor: f64,
}

impl ConformalPoint {
    /// From the coordinate derivatives of the second immersion and the
    /// coframe `θ^i(∂_j)` of `g`.
    pub fn from_derivatives(xu: &[f64], xv: &[f64], coframe: [[f64; 2]; 2]) -> Self {
        // e1 = ∂_u / c11, e2 = (∂_v - c12 e1) / c22 for the upper-triangular coframe
        let [[c11, c12], [_, c22]] = coframe;
        let d1: Vec<f64> = xu.iter().map(|x| x / c11).collect();
        let d2: Vec<f64> = xv.iter().zip(&d1).map(|(x, a)| (x - c12 * a) / c22).collect();
        Self::from_frame_derivatives(&d1, &d2)
    }

    pub fn from_frame_derivatives(d1: &[f64], d2: &[f64]) -> Self {
        let g11 = dot(d1, d1);
        let g12 = dot(d1, d2);
        let g22 = dot(d2, d2);
        let tr = g11 + g22;
        ConformalPoint {
            metric: [[g11, g12], [g12, g22]],
            deviation: ((g11 - g22).powi(2) + 4.0 * g12 * g12).sqrt() / tr,
            factor: 0.5 * tr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarSurface {
    pub label: String,
    pub grid: Grid,
    /// `g*` per node, `None` on excluded non-regular nodes.
    #[serde(skip)]
    pub points: Vec<Option<Vec<f64>>>,
    #[serde(skip)]
    pub conformal: Vec<Option<ConformalPoint>>,
    pub max_conformality_dev: f64,
    pub factor_range: [f64; 2],
    /// Non-regular nodes left out of the construction.
    pub excluded: Vec<[usize; 2]>,
}

impl PolarSurface {
    /// The polar surface as a sampled immersion; fails if nodes were excluded.
    pub fn sampled(&self) -> Result<SampledImmersion> {
        let points = self
            .points
            .iter()
            .map(|p| p.clone().ok_or_else(|| Error::Precondition("polar surface has excluded nodes".into())))
            .collect::<Result<Vec<_>>>()?;
        let dim = points[0].len();
        SampledImmersion::new(format!("polar({})", self.label), self.grid, AmbientSpace::sphere(dim - 1), points)
    }
}

fn check_polar_preconditions(ambient: AmbientSpace) -> Result<()> {
    if !ambient.is_sphere() || ambient.dim % 2 == 0 {
        return Err(Error::Precondition(format!(
            "polar surface needs an odd-dimensional sphere ambient, got {:?} of dimension {}",
            ambient.kind, ambient.dim
        )));
    }
    Ok(())
}

/// Polar surface of an isotropic chart over `grid`.
///
/// Every regular node is certified isotropic first. The sign of `g*` is
/// fixed by orientation, and a sweep in grid order verifies it is
/// continuous.
pub fn polar_surface(chart: &SurfaceChart, grid: &Grid, rank_tol: f64, circ_tol: f64) -> Result<PolarSurface> {
    check_polar_preconditions(chart.ambient())?;
    let nodes: Vec<(usize, usize)> = grid.nodes().collect();
    let per_node: Vec<Result<Option<(Vec<f64>, ConformalPoint)>>> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let p = grid.node(i, j);
            let flag = osculating_flag(chart, p, rank_tol)?;
            if !flag.regular {
                return Ok(None);
            }
            adapted_frame(&flag, circ_tol)?;
            let frame = chart_frame(chart, p, 1, rank_tol)?;
            let last = frame.cols.len() - 1;
            let gs = frame.col_value(last);
            let du = frame.col_derivative(last, 1, 0);
            let dv = frame.col_derivative(last, 0, 1);
            Ok(Some((gs, ConformalPoint::from_derivatives(&du, &dv, frame.coframe()))))
        })
        .collect();
    let per_node = per_node.into_iter().collect::<Result<Vec<_>>>()?;

    // continuity sweep: rows in u, then the first column in v
    let at = |i: usize, j: usize| per_node[grid.index(i, j)].as_ref().map(|x| &x.0);
    for j in 0..grid.nv {
        for i in 0..grid.nu {
            let prev = if i > 0 { at(i - 1, j) } else if j > 0 { at(0, j - 1) } else { None };
            if let (Some(a), Some(b)) = (prev, at(i, j)) {
                if dot(a, b) <= 0.0 {
                    let p = grid.node(i, j);
                    return Err(Error::Gauge { u: p[0], v: p[1], detail: "polar vector flips sign along the sweep".into() });
                }
            }
        }
    }

    let excluded = nodes
        .iter()
        .zip(&per_node)
        .filter(|(_, x)| x.is_none())
        .map(|(&(i, j), _)| [i, j])
        .collect();
    let conformal: Vec<Option<ConformalPoint>> = per_node.iter().map(|x| x.as_ref().map(|x| x.1)).collect();
    let max_conformality_dev = conformal.iter().flatten().map(|c| c.deviation).fold(0.0, f64::max);
    let factor_range = conformal
        .iter()
        .flatten()
        .fold([f64::INFINITY, f64::NEG_INFINITY], |r, c| [r[0].min(c.factor), r[1].max(c.factor)]);
    Ok(PolarSurface {
        label: chart.label().to_string(),
        grid: *grid,
        points: per_node.iter().map(|x| x.as_ref().map(|x| x.0.clone())).collect(),
        conformal,
        max_conformality_dev,
        factor_range,
        excluded,
    })
}

/// Conformal data of a sampled immersion against the metric of `reference`
/// on the same grid (finite-difference derivatives of the samples).
pub fn conformal_field(samples: &SampledImmersion, reference: &SurfaceChart, rank_tol: f64) -> Result<Vec<ConformalPoint>> {
    let grid = samples.grid;
    let nodes: Vec<(usize, usize)> = grid.nodes().collect();
    let out: Vec<Result<ConformalPoint>> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let jets = samples.jets_at_node(&grid, i, j, 1)?;
            let xu: Vec<f64> = jets.iter().map(|x| x.derivative(1, 0)).collect();
            let xv: Vec<f64> = jets.iter().map(|x| x.derivative(0, 1)).collect();
            let frame = chart_frame(reference, grid.node(i, j), 1, rank_tol)?;
            Ok(ConformalPoint::from_derivatives(&xu, &xv, frame.coframe()))
        })
        .collect();
    out.into_iter().collect()
}

/// The polar surface of a chart as a jet source with exact jets.
#[derive(Debug, Clone)]
pub struct PolarChart {
    pub chart: SurfaceChart,
    pub rank_tol: f64,
}

impl PolarChart {
    pub fn new(chart: SurfaceChart, rank_tol: f64) -> Result<Self> {
        check_polar_preconditions(chart.ambient())?;
        Ok(PolarChart { chart, rank_tol })
    }
}

impl JetSource for PolarChart {
    fn ambient(&self) -> AmbientSpace {
        self.chart.ambient()
    }

    fn label(&self) -> String {
        format!("polar({})", self.chart.label())
    }

    fn jets_at_node(&self, grid: &Grid, i: usize, j: usize, order: usize) -> Result<Vec<Jet2>> {
        let m = self.chart.ambient().normal_levels();
        let p = grid.node(i, j);
        let jets = self.chart.jet_eval(p, order + m + 1)?;
        let mut frame = jet_frame(p, self.chart.ambient(), &jets, self.rank_tol)?;
        Ok(frame.cols.pop().expect("frame has columns"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::forms::flag::DEFAULT_RANK_TOL;
    use crate::forms::isotropy::{isotropy_report, IsotropyOptions, DEFAULT_CIRC_TOL};

    #[test]
    fn clifford_polar_is_reflected_clifford_torus() {
        let c = catalog::get("clifford-s3").unwrap().chart;
        let grid = Grid::over(c.domain(), 9, 9);
        let p = polar_surface(&c, &grid, DEFAULT_RANK_TOL, DEFAULT_CIRC_TOL).unwrap();
        for ((i, j), gs) in grid.nodes().zip(&p.points) {
            let [u, v] = grid.node(i, j);
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let expected = [u.cos() * s, u.sin() * s, -v.cos() * s, -v.sin() * s];
            let gs = gs.as_ref().unwrap();
            let sign = if dot(gs, &expected) > 0.0 { 1.0 } else { -1.0 };
            for (a, b) in gs.iter().zip(expected) {
                assert!((a - sign * b).abs() < 1e-12);
            }
        }
        assert!(p.max_conformality_dev < 1e-12);
    }

    #[test]
    fn equilateral_polar_is_conformal_and_isotropic() {
        let c = catalog::get("equilateral-s5").unwrap().chart;
        let grid = Grid::over(c.domain(), 12, 12);
        let p = polar_surface(&c, &grid, DEFAULT_RANK_TOL, DEFAULT_CIRC_TOL).unwrap();
        assert!(p.max_conformality_dev < 1e-10);
        let pc = PolarChart::new(c, DEFAULT_RANK_TOL).unwrap();
        let r = isotropy_report(&pc, &grid, &IsotropyOptions::default()).unwrap();
        assert!(r.max_dev < 1e-8, "{}", r.max_dev);
    }

    #[test]
    fn even_dimensional_sphere_rejected() {
        let c = catalog::get("veronese-s4").unwrap().chart;
        let grid = Grid::over(c.domain(), 8, 8);
        assert!(matches!(polar_surface(&c, &grid, DEFAULT_RANK_TOL, DEFAULT_CIRC_TOL), Err(Error::Precondition(_))));
    }
}
