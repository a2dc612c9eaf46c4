//! Immersions known only by their values on a parameter grid.
//!
//! Derivatives are recovered with high-order finite-difference stencils
//! (Fornberg weights, shifted one-sided near the boundary) so that the flag
//! and isotropy machinery runs unchanged on sampled surfaces such as the
//! members of the associated family.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::{monomial_count, monomial_index, Jet2};
use crate::source::JetSource;
use crate::surface::{norm, AmbientSpace, Grid, SurfaceChart};

/// Nodes per one-dimensional stencil.
pub const STENCIL_WIDTH: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledImmersion {
    pub label: String,
    pub grid: Grid,
    pub ambient: AmbientSpace,
    /// Ambient points, indexed by [`Grid::index`].
    pub points: Vec<Vec<f64>>,
}

impl SampledImmersion {
    pub fn new(label: impl Into<String>, grid: Grid, ambient: AmbientSpace, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let dim = ambient.embedding_dim();
        if let Some(bad) = points.iter().position(|p| p.len() != dim) {
            return Err(Error::InvalidConfig(format!("sample {bad} has dimension {}, expected {dim}", points[bad].len())));
        }
        if ambient.is_sphere() {
            if let Some(bad) = points.iter().position(|p| (norm(p) - 1.0).abs() > 1e-8) {
                return Err(Error::Precondition(format!(
                    "sample {bad} has norm {} but the ambient is the unit sphere",
                    norm(&points[bad])
                )));
            }
        }
        Ok(SampledImmersion { label: label.into(), grid, ambient, points })
    }

    /// Samples a chart on the nodes of `grid`.
    pub fn from_chart(chart: &SurfaceChart, grid: Grid) -> Result<Self> {
        let points = grid.nodes().map(|(i, j)| chart.point(grid.node(i, j))).collect::<Result<Vec<_>>>()?;
        Self::new(chart.label(), grid, chart.ambient(), points)
    }

    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        &self.points[self.grid.index(i, j)]
    }

    /// Applies `f` to every sample.
    pub fn map_points(&self, label: impl Into<String>, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        Self::new(label, self.grid, self.ambient, self.points.iter().map(|p| f(p)).collect())
    }

    /// Root-mean-square norm of the samples.
    pub fn rms_norm(&self) -> f64 {
        (self.points.iter().map(|p| norm(p).powi(2)).sum::<f64>() / self.points.len() as f64).sqrt()
    }
}

/// Finite-difference weights `c[k][j]` for the `k`-th derivative at `z`
/// from values at the nodes `x[j]`, `k = 0..=m`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil start index and weights, scaled by the spacing, for derivatives
/// `0..=order` at node `i` of an axis with `n` nodes.
fn axis_stencil(i: usize, n: usize, h: f64, order: usize) -> (usize, Vec<Vec<f64>>) {
    let w = STENCIL_WIDTH.min(n);
    let start = i.saturating_sub(w / 2).min(n - w);
    let x: Vec<f64> = (0..w).map(|k| (start + k) as f64 - i as f64).collect();
    let mut c = fornberg_weights(0.0, &x, order);
    for (k, row) in c.iter_mut().enumerate() {
        let s = h.powi(k as i32);
        for x in row.iter_mut() {
            *x /= s;
        }
    }
    (start, c)
}

impl JetSource for SampledImmersion {
    fn ambient(&self) -> AmbientSpace {
        self.ambient
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn jets_at_node(&self, grid: &Grid, i: usize, j: usize, order: usize) -> Result<Vec<Jet2>> {
        if grid != &self.grid {
            return Err(Error::GridMismatch);
        }
        let g = &self.grid;
        if order + 1 > STENCIL_WIDTH.min(g.nu).min(g.nv) {
            return Err(Error::OutOfRange(format!("grid too small for finite-difference jets of order {order}")));
        }
        let (su, wu) = axis_stencil(i, g.nu, g.du(), order);
        let (sv, wv) = axis_stencil(j, g.nv, g.dv(), order);
        let dim = self.ambient.embedding_dim();
        // du_table[l][a] = ∂_u^a f at (i, sv + l)
        let du_table: Vec<Vec<Vec<f64>>> = (0..wv[0].len())
            .map(|l| {
                (0..=order)
                    .map(|a| {
                        let mut acc = vec![0.0; dim];
                        for (k, w) in wu[a].iter().enumerate() {
                            for (x, p) in acc.iter_mut().zip(self.at(su + k, sv + l)) {
                                *x += w * p;
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let mut derivs = vec![vec![0.0; monomial_count(order)]; dim];
        for d in 0..=order {
            for b in 0..=d {
                let a = d - b;
                let idx = monomial_index(a, b);
                for (l, w) in wv[b].iter().enumerate() {
                    for (c, x) in du_table[l][a].iter().enumerate() {
                        derivs[c][idx] += w * x;
                    }
                }
            }
        }
        Ok(derivs.iter().map(|d| Jet2::from_derivatives(order, d)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn fornberg_reproduces_classic_stencils() {
        let c = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(c[1], vec![-0.5, 0.0, 0.5]);
        assert_eq!(c[2], vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn sampled_jets_match_exact_jets() {
        let chart = catalog::get("equilateral-s5").unwrap().chart;
        let grid = Grid::over(chart.domain(), 97, 97);
        let s = SampledImmersion::from_chart(&chart, grid).unwrap();
        for (i, j) in [(0, 0), (48, 13), (96, 50)] {
            let fd = s.jets_at_node(&grid, i, j, 3).unwrap();
            let exact = chart.jet_eval(grid.node(i, j), 3).unwrap();
            for (a, b) in fd.iter().zip(&exact) {
                for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                    assert!((x - y).abs() < 1e-6, "{x} vs {y} at ({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn off_sphere_samples_rejected() {
        let grid = Grid::new([0.0, 1.0], [0.0, 1.0], 2, 2);
        let pts = vec![vec![1.0, 0.0, 0.0, 0.0]; 3].into_iter().chain([vec![2.0, 0.0, 0.0, 0.0]]).collect();
        assert!(matches!(
            SampledImmersion::new("x", grid, AmbientSpace::sphere(3), pts),
            Err(Error::Precondition(_))
        ));
    }
}
