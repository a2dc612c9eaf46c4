//! Congruence of sampled immersions, linear independence of height
//! functions, and the Laplacian eigenvalue check for minimal surfaces in the
//! unit sphere.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{polar_orthogonal, singular_values};
use crate::sampled::SampledImmersion;
use crate::surface::{first_fundamental_form, Grid, SurfaceChart};

/// Congruence verdict threshold relative to the sample scale.
pub const CONGRUENCE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CongruenceResult {
    /// Orthogonal `Q` minimizing `‖Q·A + t − B‖`, row-major.
    pub isometry: Vec<Vec<f64>>,
    /// Translation `t`; Euclidean ambient only.
    pub translation: Option<Vec<f64>>,
    pub determinant: f64,
    pub rms_residual: f64,
    /// `max(rms |A|, rms |B|)` after centering (Euclidean).
    pub scale: f64,
    pub congruent: bool,
}

impl CongruenceResult {
    pub fn isometry_matrix(&self) -> DMatrix<f64> {
        let n = self.isometry.len();
        DMatrix::from_fn(n, n, |r, c| self.isometry[r][c])
    }
}

fn sample_matrix(s: &SampledImmersion, center: &[f64]) -> DMatrix<f64> {
    let d = s.ambient.embedding_dim();
    DMatrix::from_fn(d, s.points.len(), |r, c| s.points[c][r] - center[r])
}

fn mean(s: &SampledImmersion) -> Vec<f64> {
    let d = s.ambient.embedding_dim();
    let mut m = vec![0.0; d];
    for p in &s.points {
        for (a, x) in m.iter_mut().zip(p) {
            *a += x;
        }
    }
    m.iter().map(|x| x / s.points.len() as f64).collect()
}

/// Orthogonal Procrustes alignment of `a` onto `b` with correspondence
/// given by the shared grid. Reflections are allowed. In Euclidean ambient
/// the alignment includes a translation.
pub fn congruence_test(a: &SampledImmersion, b: &SampledImmersion) -> Result<CongruenceResult> {
    if a.grid != b.grid || a.points.len() != b.points.len() {
        return Err(Error::GridMismatch);
    }
    if a.ambient != b.ambient {
        return Err(Error::Precondition("congruence needs a common ambient space".into()));
    }
    let d = a.ambient.embedding_dim();
    let euclidean = !a.ambient.is_sphere();
    let (ca, cb) = if euclidean { (mean(a), mean(b)) } else { (vec![0.0; d], vec![0.0; d]) };
    let ma = sample_matrix(a, &ca);
    let mb = sample_matrix(b, &cb);
    let cross = &mb * ma.transpose();
    let q = polar_orthogonal(&cross);
    let n = a.points.len() as f64;
    let rms_residual = ((&q * &ma - &mb).norm_squared() / n).sqrt();
    let scale = (ma.norm_squared() / n).sqrt().max((mb.norm_squared() / n).sqrt());
    let translation = euclidean.then(|| {
        let qa = &q * nalgebra::DVector::from_vec(ca.clone());
        cb.iter().zip(qa.iter()).map(|(x, y)| x - y).collect()
    });
    Ok(CongruenceResult {
        isometry: (0..d).map(|r| (0..d).map(|c| q[(r, c)]).collect()).collect(),
        translation,
        determinant: q.determinant(),
        rms_residual,
        scale,
        congruent: rms_residual < CONGRUENCE_REL_TOL * scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightIndependence {
    pub rows: usize,
    pub cols: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// `σ_min / sqrt(rows)`, comparable across grid resolutions.
    pub normalized_sigma_min: f64,
}

/// Smallest singular value of the matrix whose columns are all coordinate
/// height functions of all surfaces sampled on their common grid.
pub fn height_independence(surfaces: &[SampledImmersion]) -> Result<HeightIndependence> {
    let first = surfaces.first().ok_or_else(|| Error::Precondition("no surfaces given".into()))?;
    for s in surfaces {
        if s.grid != first.grid {
            return Err(Error::GridMismatch);
        }
        if s.ambient != first.ambient || !s.ambient.is_sphere() {
            return Err(Error::Precondition("height functions need surfaces in one common sphere".into()));
        }
    }
    let rows = first.points.len();
    let d = first.ambient.embedding_dim();
    let cols = d * surfaces.len();
    if rows < cols {
        return Err(Error::Underdetermined { rows, cols });
    }
    let m = DMatrix::from_fn(rows, cols, |r, c| surfaces[c / d].points[r][c % d]);
    let sv = singular_values(&m);
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let sigma_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(HeightIndependence {
        rows,
        cols,
        sigma_max,
        sigma_min,
        normalized_sigma_min: sigma_min / (rows as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TakahashiResult {
    pub grid: Grid,
    /// `max |Δh + 2h|` over interior nodes, per ambient coordinate.
    pub per_coordinate: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TakahashiConvergence {
    pub coarse: TakahashiResult,
    pub fine: TakahashiResult,
    /// `log2(coarse / fine)`; 2 for a second-order discretization of an
    /// exact identity.
    pub order: f64,
}

/// `√det g · g^{-1}` entries `(A, B, C)` for the divergence-form Laplacian.
fn weights(m: [[f64; 2]; 2]) -> ([f64; 3], f64) {
    let det = m[0][0] * m[1][1] - m[0][1] * m[0][1];
    let s = det.sqrt();
    ([s * m[1][1] / det, -s * m[0][1] / det, s * m[0][0] / det], s)
}

/// Residual of `Δh = -2h` for the coordinate functions of a chart in the
/// unit sphere, with a second-order divergence-form stencil.
pub fn takahashi_residual(chart: &SurfaceChart, grid: &Grid) -> Result<TakahashiResult> {
    if !chart.ambient().is_sphere() {
        return Err(Error::Precondition("the eigenvalue check needs the unit sphere as ambient".into()));
    }
    if grid.nu < 3 || grid.nv < 3 {
        return Err(Error::InvalidConfig("Laplacian stencil needs at least 3 nodes per side".into()));
    }
    let (nu, nv) = (grid.nu, grid.nv);
    let (du, dv) = (grid.du(), grid.dv());
    let nodes: Vec<(usize, usize)> = grid.nodes().collect();
    let at = |p: [f64; 2]| -> Result<([f64; 3], f64)> { Ok(weights(first_fundamental_form(chart, p)?)) };
    let node_data: Vec<Result<(Vec<f64>, [f64; 3], f64, [f64; 3], [f64; 3])>> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let p = grid.node(i, j);
            let (w, s) = at(p)?;
            // weights at the half points (u + du/2, v) and (u, v + dv/2)
            let wu = if i + 1 < nu { at([p[0] + 0.5 * du, p[1]])?.0 } else { [0.0; 3] };
            let wv = if j + 1 < nv { at([p[0], p[1] + 0.5 * dv])?.0 } else { [0.0; 3] };
            Ok((chart.point(p)?, w, s, wu, wv))
        })
        .collect();
    let data = node_data.into_iter().collect::<Result<Vec<_>>>()?;
    let idx = |i: usize, j: usize| grid.index(i, j);
    let dim = chart.ambient().embedding_dim();
    let mut per_coordinate = vec![0.0f64; dim];
    for j in 1..nv - 1 {
        for i in 1..nu - 1 {
            let c = &data[idx(i, j)];
            for (k, r) in per_coordinate.iter_mut().enumerate() {
                let h = |a: usize, b: usize| data[idx(a, b)].0[k];
                let t1 = (data[idx(i, j)].3[0] * (h(i + 1, j) - h(i, j)) - data[idx(i - 1, j)].3[0] * (h(i, j) - h(i - 1, j))) / (du * du);
                let t2 = (data[idx(i, j)].4[2] * (h(i, j + 1) - h(i, j)) - data[idx(i, j - 1)].4[2] * (h(i, j) - h(i, j - 1))) / (dv * dv);
                let t3 = (data[idx(i + 1, j)].1[1] * (h(i + 1, j + 1) - h(i + 1, j - 1))
                    - data[idx(i - 1, j)].1[1] * (h(i - 1, j + 1) - h(i - 1, j - 1)))
                    / (4.0 * du * dv);
                let t4 = (data[idx(i, j + 1)].1[1] * (h(i + 1, j + 1) - h(i - 1, j + 1))
                    - data[idx(i, j - 1)].1[1] * (h(i + 1, j - 1) - h(i - 1, j - 1)))
                    / (4.0 * du * dv);
                let lap = (t1 + t2 + t3 + t4) / c.2;
                *r = r.max((lap + 2.0 * h(i, j)).abs());
            }
        }
    }
    let residual = per_coordinate.iter().cloned().fold(0.0, f64::max);
    Ok(TakahashiResult { grid: *grid, per_coordinate, residual })
}

/// Residuals on an `n × n` grid and on the grid with half the step.
pub fn takahashi_convergence(chart: &SurfaceChart, n: usize) -> Result<TakahashiConvergence> {
    let coarse = takahashi_residual(chart, &Grid::over(chart.domain(), n, n))?;
    let fine = takahashi_residual(chart, &Grid::over(chart.domain(), 2 * n - 1, 2 * n - 1))?;
    let order = (coarse.residual / fine.residual).log2();
    Ok(TakahashiConvergence { coarse, fine, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn weights_of_identity_metric() {
        let (w, s) = weights([[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(w, [1.0, 0.0, 1.0]);
        assert_eq!(s, 1.0);
    }

    #[test]
    fn clifford_is_second_order() {
        let c = catalog::get("clifford-s3").unwrap().chart;
        let r = takahashi_convergence(&c, 17).unwrap();
        assert!((r.order - 2.0).abs() < 0.1, "order {}", r.order);
    }

    #[test]
    fn nonminimal_residual_stays_large() {
        let c = catalog::get("perturbed-nonminimal").unwrap().chart;
        let r = takahashi_convergence(&c, 17).unwrap();
        assert!(r.fine.residual > 0.1);
        assert!(r.order.abs() < 0.1);
    }

    #[test]
    fn height_independence_needs_enough_rows() {
        let c = catalog::get("equilateral-s5").unwrap().chart;
        let s = SampledImmersion::from_chart(&c, Grid::over(c.domain(), 2, 2)).unwrap();
        assert!(matches!(height_independence(&[s.clone(), s]), Err(Error::Underdetermined { rows: 4, cols: 12 })));
    }
}
