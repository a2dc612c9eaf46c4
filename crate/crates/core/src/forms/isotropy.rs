//! Isotropy certificates over a grid and the adapted normal frame.

use rayon::prelude::*;
use serde::Serialize;

use super::ellipse::{curvature_ellipse, DEFAULT_PHI_SAMPLES};
use super::flag::{flag_from_jets, OsculatingFlag, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::source::JetSource;
use crate::surface::{dot, norm, AmbientSpace, Grid};

/// Circularity threshold for the isotropy verdict.
pub const DEFAULT_CIRC_TOL: f64 = 1e-6;

/// Minimality threshold on `|α(e1,e1) + α(e2,e2)|`, relative to
/// `max(1, |α|)`.
pub const DEFAULT_TRACE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsotropyOptions {
    pub rank_tol: f64,
    pub circ_tol: f64,
    pub trace_tol: f64,
    pub phi_samples: usize,
    /// Nodes within this many steps of the grid boundary are skipped.
    pub margin: usize,
}

impl Default for IsotropyOptions {
    fn default() -> Self {
        IsotropyOptions {
            rank_tol: DEFAULT_RANK_TOL,
            circ_tol: DEFAULT_CIRC_TOL,
            trace_tol: DEFAULT_TRACE_TOL,
            phi_samples: DEFAULT_PHI_SAMPLES,
            margin: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub i: usize,
    pub j: usize,
    pub u: f64,
    pub v: f64,
    pub ranks: Vec<usize>,
    pub regular: bool,
    pub substantial: bool,
    /// `|α(e1,e1) + α(e2,e2)|`.
    pub trace: f64,
    /// Ellipse radius per order; `None` where `N_k` is not two-dimensional.
    pub kappa: Vec<Option<f64>>,
    /// `(a - b)/a` per order; `None` where `N_k` is not two-dimensional.
    pub circularity: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonRegularPoint {
    pub i: usize,
    pub j: usize,
    pub u: f64,
    pub v: f64,
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotropyReport {
    pub label: String,
    pub ambient: AmbientSpace,
    pub grid: Grid,
    pub options: IsotropyOptions,
    /// Largest circularity deviation over all regular points and all
    /// two-dimensional orders; 0 when there are none.
    pub max_dev: f64,
    pub max_trace: f64,
    pub isotropic: bool,
    /// Rank-drop points, the suspected set `L_0`.
    pub nonregular: Vec<NonRegularPoint>,
    /// No two rank-drop points are grid neighbours.
    pub nonregular_isolated: bool,
    /// The flag fills the ambient space at every regular point.
    pub substantial: bool,
    #[serde(skip)]
    pub records: Vec<PointRecord>,
}

fn trace_scale(flag: &OsculatingFlag) -> f64 {
    flag.alpha[0].iter().map(|a| norm(a)).fold(1.0, f64::max)
}

fn point_record<S: JetSource + ?Sized>(source: &S, grid: &Grid, i: usize, j: usize, opts: &IsotropyOptions) -> Result<PointRecord> {
    let ambient = source.ambient();
    let m = ambient.normal_levels();
    let p = grid.node(i, j);
    let jets = source.jets_at_node(grid, i, j, m + 1)?;
    let flag = flag_from_jets(p, ambient, &jets, opts.rank_tol)?;
    let trace = flag.trace_norm();
    if trace > opts.trace_tol * trace_scale(&flag) {
        return Err(Error::NotMinimal { u: p[0], v: p[1], trace });
    }
    let mut kappa = vec![None; m];
    let mut circularity = vec![None; m];
    if flag.regular {
        for k in 1..=m {
            if flag.ranks[k - 1] == 2 {
                let e = curvature_ellipse(&flag, k, opts.phi_samples)?;
                kappa[k - 1] = Some(e.radius);
                circularity[k - 1] = Some(e.circularity_dev);
            }
        }
    }
    Ok(PointRecord {
        i,
        j,
        u: p[0],
        v: p[1],
        ranks: flag.ranks.clone(),
        regular: flag.regular,
        substantial: flag.substantial,
        trace,
        kappa,
        circularity,
    })
}

/// Per-point flag ranks and circularity of every two-dimensional curvature
/// ellipse over `grid`.
///
/// Rejects non-minimal input with the first offending node in grid order.
pub fn isotropy_report<S: JetSource + ?Sized>(source: &S, grid: &Grid, opts: &IsotropyOptions) -> Result<IsotropyReport> {
    let m = opts.margin;
    if 2 * m >= grid.nu || 2 * m >= grid.nv {
        return Err(Error::InvalidConfig(format!("margin {m} leaves no interior nodes")));
    }
    let nodes: Vec<(usize, usize)> = grid.nodes().filter(|&(i, j)| i >= m && j >= m && i + m < grid.nu && j + m < grid.nv).collect();
    let results: Vec<Result<PointRecord>> = nodes.par_iter().map(|&(i, j)| point_record(source, grid, i, j, opts)).collect();
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;

    let max_dev = records
        .iter()
        .flat_map(|r| r.circularity.iter().flatten())
        .fold(0.0, |a: f64, &b| a.max(b));
    let max_trace = records.iter().map(|r| r.trace).fold(0.0, f64::max);
    let nonregular: Vec<NonRegularPoint> = records
        .iter()
        .filter(|r| !r.regular)
        .map(|r| NonRegularPoint { i: r.i, j: r.j, u: r.u, v: r.v, ranks: r.ranks.clone() })
        .collect();
    let nonregular_isolated = nonregular.iter().all(|a| {
        nonregular
            .iter()
            .filter(|b| (a.i, a.j) != (b.i, b.j))
            .all(|b| a.i.abs_diff(b.i) > 1 || a.j.abs_diff(b.j) > 1)
    });
    let substantial = records.iter().filter(|r| r.regular).all(|r| r.substantial);
    Ok(IsotropyReport {
        label: source.label(),
        ambient: source.ambient(),
        grid: *grid,
        options: *opts,
        max_dev,
        max_trace,
        isotropic: max_dev < opts.circ_tol,
        nonregular,
        nonregular_isolated,
        substantial,
        records,
    })
}

/// Orthonormal normal frame `e_3, …, e_N` with
/// `α^{s+1}(e1, …, e1) = κ_s e_{2s+1}` and `α^{s+1}(e1, …, e1, e2) = κ_s e_{2s+2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptedFrame {
    pub point: [f64; 2],
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    /// `e_3, …, e_N`.
    pub normals: Vec<Vec<f64>>,
    /// `κ_s` for every two-dimensional level.
    pub kappas: Vec<f64>,
    /// Largest violation of the defining relations.
    pub relation_residual: f64,
}

impl AdaptedFrame {
    /// All frame vectors `e_1, …, e_N`.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        let mut c = vec![self.e1.clone(), self.e2.clone()];
        c.extend(self.normals.iter().cloned());
        c
    }
}

fn frame_det(ambient: AmbientSpace, position: Option<&Vec<f64>>, cols: &[Vec<f64>]) -> f64 {
    let d = ambient.embedding_dim();
    let mut all: Vec<&Vec<f64>> = Vec::new();
    if let Some(x) = position {
        all.push(x);
    }
    all.extend(cols.iter());
    nalgebra::DMatrix::from_fn(d, d, |r, c| all[c][r]).determinant()
}

/// Adapted frame at a regular isotropic point.
///
/// A final rank-one level is oriented so the full ambient frame
/// `(x, e1, …, e_N)` (sphere) or `(e1, …, e_N)` (Euclidean) is positive.
pub fn adapted_frame(flag: &OsculatingFlag, circ_tol: f64) -> Result<AdaptedFrame> {
    let [u, v] = flag.point;
    if !flag.regular {
        return Err(Error::NotRegular { u, v, detail: format!("normal ranks {:?}", flag.ranks) });
    }
    let mut cols = vec![flag.tangent.e1.clone(), flag.tangent.e2.clone()];
    let mut kappas = Vec::new();
    let mut residual: f64 = 0.0;
    for (k, &rank) in flag.ranks.iter().enumerate() {
        let xi1 = &flag.alpha[k][0];
        let xi2 = &flag.alpha[k][1];
        if rank == 2 {
            let e = curvature_ellipse(flag, k + 1, DEFAULT_PHI_SAMPLES)?;
            if e.circularity_dev >= circ_tol {
                return Err(Error::NotIsotropic { u, v, order: k + 1, deviation: e.circularity_dev });
            }
            let kappa = norm(xi1);
            let a: Vec<f64> = xi1.iter().map(|x| x / kappa).collect();
            let c = dot(xi2, &a);
            let w: Vec<f64> = xi2.iter().zip(&a).map(|(x, y)| x - c * y).collect();
            let nw = norm(&w);
            let b: Vec<f64> = w.iter().map(|x| x / nw).collect();
            let r2 = norm(&xi2.iter().zip(&b).map(|(x, y)| x - kappa * y).collect::<Vec<_>>());
            residual = residual.max(r2);
            kappas.push(kappa);
            cols.push(a);
            cols.push(b);
        } else {
            let g = if norm(xi1) >= norm(xi2) { xi1 } else { xi2 };
            let ng = norm(g);
            let mut e: Vec<f64> = g.iter().map(|x| x / ng).collect();
            let mut trial = cols.clone();
            trial.push(e.clone());
            if frame_det(flag.ambient, flag.position.as_ref(), &trial) < 0.0 {
                e.iter_mut().for_each(|x| *x = -*x);
            }
            cols.push(e);
        }
    }
    let normals = cols.split_off(2);
    Ok(AdaptedFrame {
        point: flag.point,
        e1: cols[0].clone(),
        e2: cols[1].clone(),
        normals,
        kappas,
        relation_residual: residual,
    })
}
