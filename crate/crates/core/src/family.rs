//! Associated family `g_θ`: moving-frame integration with the second
//! fundamental form rotated by `J_θ = cos θ I + sin θ J` and the normal
//! connection kept fixed, period monodromy, and the scan for the closing
//! set `M(g)`.
//!
//! Frames are `(N+1) × (N+1)` matrices `F` with `dF = F Ω`. On the sphere
//! the columns are `(x, e1, e2, e3, …, e_N)` and `F` is orthogonal; in
//! Euclidean space `F` is the affine matrix `[[1, 0], [x, (e1 … e_N)]]`.
//! The tables `Ω_u, Ω_v` of the original chart are exact (frame jets). Only
//! the tangent–normal blocks depend on `θ`, so they are computed once and
//! rotated per `θ`.
//!
//! Integration uses the fourth-order two-stage Gauss–Legendre Magnus
//! scheme, which keeps `F` in the group, plus a polar re-orthonormalization
//! whose correction is logged as drift.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::congruence::{congruence_test, CongruenceResult};
use crate::error::{Error, Result};
use crate::forms::frame::{chart_frame, split_frame_matrix};
use crate::forms::{conformal_field, isotropy_report, polar_surface, IsotropyOptions, DEFAULT_CIRC_TOL, DEFAULT_RANK_TOL};
use crate::linalg::{operator_norm, orthogonality_defect, polar_orthogonal};
use crate::sampled::{SampledImmersion, STENCIL_WIDTH};
use crate::source::JetSource;
use crate::surface::{first_fundamental_form, metric_from_derivatives, AmbientSpace, Grid, SurfaceChart};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const GAUSS: [f64; 2] = [0.5 - SQRT3 / 6.0, 0.5 + SQRT3 / 6.0];

pub const DEFAULT_COMPAT_TOL: f64 = 1e-5;
pub const DEFAULT_CLOSE_TOL: f64 = 1e-6;
pub const DEFAULT_REFINE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyParams {
    pub theta: f64,
}

impl FamilyParams {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..PI).contains(&theta) {
            return Err(Error::OutOfRange(format!("θ = {theta} outside [0, π)")));
        }
        Ok(FamilyParams { theta })
    }

    /// `cos θ I + sin θ J` in the frame `(e1, e2)`.
    pub fn j_theta(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        [[c, -s], [s, c]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyOptions {
    pub rank_tol: f64,
    /// Integration steps per grid cell.
    pub substeps: usize,
    pub compat_tol: f64,
    /// Nodes per side of the subgrid where compatibility is checked.
    pub compat_samples: usize,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        FamilyOptions { rank_tol: DEFAULT_RANK_TOL, substeps: 2, compat_tol: DEFAULT_COMPAT_TOL, compat_samples: 12 }
    }
}

/// Maurer–Cartan matrices and coframe of the original chart at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTable {
    pub point: [f64; 2],
    pub omega: [DMatrix<f64>; 2],
    /// `θ^i(∂_j)`.
    pub coframe: [[f64; 2]; 2],
    /// Frame vectors `e_1, …, e_N` of the chart.
    pub frame: Vec<Vec<f64>>,
}

impl FrameTable {
    pub fn at(chart: &SurfaceChart, p: [f64; 2], rank_tol: f64) -> Result<Self> {
        let f = chart_frame(chart, p, 1, rank_tol)?;
        let frame = (0..f.cols.len()).map(|k| f.col_value(k)).collect();
        Ok(FrameTable { point: p, omega: f.maurer_cartan()?, coframe: f.coframe(), frame })
    }

    /// `(Ω^θ_u, Ω^θ_v)`: the tangent–normal entries become
    /// `⟨α(J_θ ∂_j, e_i), e_a⟩`, everything else is unchanged.
    pub fn rotated(&self, theta: f64) -> [DMatrix<f64>; 2] {
        let mut out = self.omega.clone();
        if theta == 0.0 {
            return out;
        }
        let (s, c) = theta.sin_cos();
        let cf = self.coframe;
        let det = cf[0][0] * cf[1][1] - cf[0][1] * cf[1][0];
        let cinv = [[cf[1][1] / det, -cf[0][1] / det], [-cf[1][0] / det, cf[0][0] / det]];
        // (J_θ C)[k][j]: frame components of J_θ ∂_j
        let jc = [
            [c * cf[0][0] - s * cf[1][0], c * cf[0][1] - s * cf[1][1]],
            [s * cf[0][0] + c * cf[1][0], s * cf[0][1] + c * cf[1][1]],
        ];
        let n = self.omega[0].nrows();
        for a in 3..n {
            for i in 1..=2 {
                // h[k] = ⟨α(e_k, e_i), e_a⟩
                let h = [0, 1].map(|k| cinv[0][k] * self.omega[0][(a, i)] + cinv[1][k] * self.omega[1][(a, i)]);
                for j in 0..2 {
                    let v = jc[0][j] * h[0] + jc[1][j] * h[1];
                    out[j][(a, i)] = v;
                    out[j][(i, a)] = -v;
                }
            }
        }
        out
    }

    fn along(&self, theta: f64, delta: [f64; 2]) -> DMatrix<f64> {
        let [ou, ov] = self.rotated(theta);
        ou * delta[0] + ov * delta[1]
    }
}

/// Tables at the two Gauss points of each of `steps` sub-intervals of the
/// segment `from → from + delta`.
fn segment_tables(chart: &SurfaceChart, from: [f64; 2], delta: [f64; 2], steps: usize, rank_tol: f64) -> Result<Vec<[FrameTable; 2]>> {
    (0..steps)
        .map(|k| {
            let t = |g: f64| {
                let s = (k as f64 + g) / steps as f64;
                [from[0] + s * delta[0], from[1] + s * delta[1]]
            };
            Ok([FrameTable::at(chart, t(GAUSS[0]), rank_tol)?, FrameTable::at(chart, t(GAUSS[1]), rank_tol)?])
        })
        .collect()
}

/// Smallest `cos` of the turning angle of a frame vector between
/// consecutive table points before the path is declared under-resolved.
const MIN_FRAME_COSINE: f64 = 0.866;

/// Verifies that the chart frame varies continuously along a sequence of
/// table points: a sign flip is a gauge discontinuity (typically a rank-drop
/// point on the path), a large turn means the grid is too coarse there.
fn check_path<'a>(tables: impl IntoIterator<Item = &'a FrameTable>) -> Result<()> {
    let mut prev: Option<&FrameTable> = None;
    for t in tables {
        if let Some(p) = prev {
            let worst = p.frame.iter().zip(&t.frame).map(|(a, b)| crate::surface::dot(a, b)).fold(f64::INFINITY, f64::min);
            if worst <= 0.0 {
                return Err(Error::Gauge {
                    u: t.point[0],
                    v: t.point[1],
                    detail: format!("chart frame flips between ({:.6}, {:.6}) and this point", p.point[0], p.point[1]),
                });
            }
            if worst < MIN_FRAME_COSINE {
                return Err(Error::Integration(format!(
                    "chart frame turns by {:.1}° between ({:.6}, {:.6}) and ({:.6}, {:.6}); refine the grid",
                    worst.acos().to_degrees(),
                    p.point[0],
                    p.point[1],
                    t.point[0],
                    t.point[1]
                )));
            }
        }
        prev = Some(t);
    }
    Ok(())
}

/// Projects `F` back onto the frame group; returns the size of the
/// correction.
fn reorthonormalize(ambient: AmbientSpace, m: &mut DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if ambient.is_sphere() {
        let q = polar_orthogonal(m);
        let drift = (&q - &*m).amax();
        *m = q;
        drift
    } else {
        let block = m.view((1, 1), (n - 1, n - 1)).into_owned();
        let q = polar_orthogonal(&block);
        let drift = (&q - &block).amax();
        m.view_mut((1, 1), (n - 1, n - 1)).copy_from(&q);
        drift
    }
}

/// One Magnus step for `F' = F A(t)` with `A` sampled at the Gauss points.
fn magnus_step(m: &DMatrix<f64>, a1: &DMatrix<f64>, a2: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let omega = (a1 + a2) * (0.5 * h) + (a1 * a2 - a2 * a1) * (SQRT3 / 12.0 * h * h);
    m * omega.exp()
}

/// Integrates `dF = F Ω^θ` along a segment given by its tables.
fn integrate_segment(ambient: AmbientSpace, tables: &[[FrameTable; 2]], theta: f64, delta: [f64; 2], start: &DMatrix<f64>, drift: &mut f64) -> DMatrix<f64> {
    let h = 1.0 / tables.len() as f64;
    let mut m = start.clone();
    for [t1, t2] in tables {
        m = magnus_step(&m, &t1.along(theta, delta), &t2.along(theta, delta), h);
        *drift = drift.max(reorthonormalize(ambient, &mut m));
    }
    m
}

fn frame_inverse(ambient: AmbientSpace, m: &DMatrix<f64>) -> DMatrix<f64> {
    if ambient.is_sphere() {
        m.transpose()
    } else {
        m.clone().try_inverse().expect("affine frame is invertible")
    }
}

fn group_defect(ambient: AmbientSpace, m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if ambient.is_sphere() {
        orthogonality_defect(m)
    } else {
        orthogonality_defect(&m.view((1, 1), (n - 1, n - 1)).into_owned())
    }
}

/// Initial frame matrix of the chart at `p`.
pub fn chart_frame_matrix(chart: &SurfaceChart, p: [f64; 2], rank_tol: f64) -> Result<DMatrix<f64>> {
    Ok(chart_frame(chart, p, 0, rank_tol)?.matrix())
}

/// `max ‖∂_u Ω_v − ∂_v Ω_u + [Ω_u, Ω_v]‖` of the rotated tables for each
/// `θ`, with fourth-order central differences, over a subgrid of `grid`.
pub fn compatibility_residuals(chart: &SurfaceChart, grid: &Grid, thetas: &[f64], opts: &FamilyOptions) -> Result<Vec<f64>> {
    let n = opts.compat_samples.max(2);
    let sub = Grid::new(grid.u, grid.v, n.min(grid.nu), n.min(grid.nv));
    let d = 1e-3;
    let nodes: Vec<[f64; 2]> = sub.nodes().map(|(i, j)| sub.node(i, j)).collect();
    let per_node: Vec<Result<Vec<f64>>> = nodes
        .par_iter()
        .map(|&p| {
            let offsets = [-2.0, -1.0, 1.0, 2.0];
            let weights = [1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0];
            let center = FrameTable::at(chart, p, opts.rank_tol)?;
            let tu = offsets.iter().map(|o| FrameTable::at(chart, [p[0] + o * d, p[1]], opts.rank_tol)).collect::<Result<Vec<_>>>()?;
            let tv = offsets.iter().map(|o| FrameTable::at(chart, [p[0], p[1] + o * d], opts.rank_tol)).collect::<Result<Vec<_>>>()?;
            Ok(thetas
                .iter()
                .map(|&th| {
                    let [ou, ov] = center.rotated(th);
                    let mut du_ov = DMatrix::zeros(ou.nrows(), ou.ncols());
                    let mut dv_ou = DMatrix::zeros(ou.nrows(), ou.ncols());
                    for k in 0..4 {
                        du_ov += tu[k].rotated(th)[1].clone() * (weights[k] / d);
                        dv_ou += tv[k].rotated(th)[0].clone() * (weights[k] / d);
                    }
                    let r = du_ov - dv_ou + (&ou * &ov - &ov * &ou);
                    r.amax()
                })
                .collect())
        })
        .collect();
    let per_node = per_node.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..thetas.len()).map(|k| per_node.iter().map(|r| r[k]).fold(0.0, f64::max)).collect())
}

/// One member `g_θ` of the associated family sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyMember {
    pub label: String,
    pub theta: f64,
    pub grid: Grid,
    pub ambient: AmbientSpace,
    /// Transported frame per node, indexed by [`Grid::index`].
    #[serde(skip)]
    pub frames: Vec<DMatrix<f64>>,
    /// Largest re-orthonormalization correction.
    pub max_drift: f64,
    /// Far-corner frame difference between the row-first and the
    /// column-first integration paths.
    pub path_defect: f64,
    pub compatibility_residual: f64,
}

impl FamilyMember {
    /// The immersion `g_θ`.
    pub fn surface(&self) -> Result<SampledImmersion> {
        let points = self.frames.iter().map(|f| split_frame_matrix(self.ambient, f).0).collect();
        SampledImmersion::new(format!("{}[θ={}]", self.label, self.theta), self.grid, self.ambient, points)
    }

    /// Frame vector `e_k` (`k = 1..=N`) as a map into the unit sphere.
    pub fn frame_vector(&self, k: usize) -> Result<SampledImmersion> {
        let n = self.ambient.dim;
        if k < 1 || k > n {
            return Err(Error::OutOfRange(format!("frame index {k} outside 1..={n}")));
        }
        let points = self.frames.iter().map(|f| split_frame_matrix(self.ambient, f).1[k - 1].clone()).collect();
        let ambient = AmbientSpace::sphere(self.ambient.embedding_dim() - 1);
        SampledImmersion::new(format!("{}[θ={}].e{k}", self.label, self.theta), self.grid, ambient, points)
    }

    pub fn max_group_defect(&self) -> f64 {
        self.frames.iter().map(|f| group_defect(self.ambient, f)).fold(0.0, f64::max)
    }
}

/// Integrates the associated family for every `θ` in `thetas` over `grid`:
/// first along the base row `v = v0`, then up every column.
///
/// Refuses a `θ` whose tables fail the compatibility check (non-minimal
/// input or unresolved geometry).
pub fn integrate_family(chart: &SurfaceChart, grid: &Grid, thetas: &[f64], opts: &FamilyOptions) -> Result<Vec<FamilyMember>> {
    for &t in thetas {
        FamilyParams::new(t)?;
    }
    if opts.substeps == 0 {
        return Err(Error::InvalidConfig("substeps must be positive".into()));
    }
    let compat = compatibility_residuals(chart, grid, thetas, opts)?;
    if let Some(&r) = compat.iter().find(|&&r| !(r <= opts.compat_tol)) {
        return Err(Error::Compatibility { residual: r, threshold: opts.compat_tol });
    }
    let ambient = chart.ambient();
    let k = opts.substeps;
    let (du, dv) = (grid.du(), grid.dv());
    let base = chart_frame_matrix(chart, grid.node(0, 0), opts.rank_tol)?;

    // base row, shared by all θ
    let row_tables: Vec<Vec<[FrameTable; 2]>> = (0..grid.nu - 1)
        .into_par_iter()
        .map(|i| segment_tables(chart, grid.node(i, 0), [du, 0.0], k, opts.rank_tol))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;
    check_path(row_tables.iter().flatten().flatten())?;
    let mut row_drift = vec![0.0f64; thetas.len()];
    let rows: Vec<Vec<DMatrix<f64>>> = thetas
        .iter()
        .zip(row_drift.iter_mut())
        .map(|(&th, drift)| {
            let mut out = vec![base.clone()];
            for t in &row_tables {
                let next = integrate_segment(ambient, t, th, [du, 0.0], out.last().unwrap(), drift);
                out.push(next);
            }
            out
        })
        .collect();

    // columns, in parallel; each column serves all θ
    let columns: Vec<Result<(Vec<Vec<DMatrix<f64>>>, Vec<f64>)>> = (0..grid.nu)
        .into_par_iter()
        .map(|i| {
            let tables: Vec<Vec<[FrameTable; 2]>> = (0..grid.nv - 1)
                .map(|j| segment_tables(chart, grid.node(i, j), [0.0, dv], k, opts.rank_tol))
                .collect::<Result<_>>()?;
            check_path(tables.iter().flatten().flatten())?;
            let mut per_theta = Vec::with_capacity(thetas.len());
            let mut drifts = Vec::with_capacity(thetas.len());
            for (t, &th) in thetas.iter().enumerate() {
                let mut drift = 0.0;
                let mut col = vec![rows[t][i].clone()];
                for tab in &tables {
                    let next = integrate_segment(ambient, tab, th, [0.0, dv], col.last().unwrap(), &mut drift);
                    col.push(next);
                }
                per_theta.push(col);
                drifts.push(drift);
            }
            Ok((per_theta, drifts))
        })
        .collect();
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;

    // column-first path to the far corner: column 0 is shared, then the top row
    let top_tables: Vec<Vec<[FrameTable; 2]>> = (0..grid.nu - 1)
        .into_par_iter()
        .map(|i| segment_tables(chart, grid.node(i, grid.nv - 1), [du, 0.0], k, opts.rank_tol))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;
    check_path(top_tables.iter().flatten().flatten())?;

    let label = chart.label().to_string();
    Ok(thetas
        .iter()
        .enumerate()
        .map(|(t, &th)| {
            let mut frames = vec![DMatrix::zeros(0, 0); grid.len()];
            let mut drift = row_drift[t];
            for (i, (per_theta, drifts)) in columns.iter().enumerate() {
                drift = drift.max(drifts[t]);
                for (j, f) in per_theta[t].iter().enumerate() {
                    frames[grid.index(i, j)] = f.clone();
                }
            }
            let mut corner = frames[grid.index(0, grid.nv - 1)].clone();
            let mut scratch = 0.0;
            for tab in &top_tables {
                corner = integrate_segment(ambient, tab, th, [du, 0.0], &corner, &mut scratch);
            }
            let path_defect = (&corner - &frames[grid.index(grid.nu - 1, grid.nv - 1)]).amax();
            FamilyMember {
                label: label.clone(),
                theta: th,
                grid: *grid,
                ambient,
                frames,
                max_drift: drift,
                path_defect,
                compatibility_residual: compat[t],
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub rank_tol: f64,
    pub circ_tol: f64,
    /// Boundary nodes skipped by the finite-difference checks.
    pub margin: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { rank_tol: DEFAULT_RANK_TOL, circ_tol: DEFAULT_CIRC_TOL, margin: STENCIL_WIDTH / 2 }
    }
}

/// Checks of one family member against the original chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberVerification {
    pub theta: f64,
    /// `max |G_θ − G| / max |G|` with `G_θ` from differentiated samples.
    pub metric_deviation: f64,
    /// Trace of the second fundamental form of the samples.
    pub mean_curvature: f64,
    pub isotropy_max_dev: f64,
    pub frame_defect: f64,
    pub congruence: CongruenceResult,
    /// `max |λ_θ − λ| / λ` between the conformal factors of the transported
    /// last frame vector and the polar surface; odd spheres only.
    pub polar_factor_deviation: Option<f64>,
}

/// `max` that lets a NaN through as infinity.
fn worst(a: f64, b: f64) -> f64 {
    if b.is_nan() {
        f64::INFINITY
    } else {
        a.max(b)
    }
}

pub fn verify_member(chart: &SurfaceChart, member: &FamilyMember, opts: &VerifyOptions) -> Result<MemberVerification> {
    let grid = member.grid;
    let m = opts.margin;
    if 2 * m >= grid.nu || 2 * m >= grid.nv {
        return Err(Error::InvalidConfig(format!("margin {m} leaves no interior nodes")));
    }
    let interior = |&(i, j): &(usize, usize)| i >= m && j >= m && i + m < grid.nu && j + m < grid.nv;
    let surface = member.surface()?;
    let nodes: Vec<(usize, usize)> = grid.nodes().filter(interior).collect();
    let metric: Vec<Result<f64>> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let jets = surface.jets_at_node(&grid, i, j, 1)?;
            let xu: Vec<f64> = jets.iter().map(|x| x.derivative(1, 0)).collect();
            let xv: Vec<f64> = jets.iter().map(|x| x.derivative(0, 1)).collect();
            let gt = metric_from_derivatives(&xu, &xv);
            let g = first_fundamental_form(chart, grid.node(i, j))?;
            let scale = g.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
            Ok(g.iter().flatten().zip(gt.iter().flatten()).fold(0.0, |a, (x, y)| worst(a, (x - y).abs())) / scale)
        })
        .collect();
    let metric_deviation = metric.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, worst);

    let iso = isotropy_report(
        &surface,
        &grid,
        &IsotropyOptions { rank_tol: opts.rank_tol, circ_tol: opts.circ_tol, trace_tol: f64::INFINITY, margin: m, ..IsotropyOptions::default() },
    )?;
    let original = SampledImmersion::from_chart(chart, grid)?;
    let congruence = congruence_test(&original, &surface)?;

    let ambient = chart.ambient();
    let polar_factor_deviation = if ambient.is_sphere() && ambient.dim % 2 == 1 {
        let polar = polar_surface(chart, &grid, opts.rank_tol, opts.circ_tol)?;
        let last = member.frame_vector(ambient.dim)?;
        let field = conformal_field(&last, chart, opts.rank_tol)?;
        let dev = grid
            .nodes()
            .filter(interior)
            .filter_map(|(i, j)| {
                let k = grid.index(i, j);
                polar.conformal[k].map(|p| (field[k].factor - p.factor).abs() / p.factor)
            })
            .fold(0.0, worst);
        Some(dev)
    } else {
        None
    };

    Ok(MemberVerification {
        theta: member.theta,
        metric_deviation,
        mean_curvature: iso.max_trace,
        isotropy_max_dev: iso.max_dev,
        frame_defect: member.max_group_defect(),
        congruence,
        polar_factor_deviation,
    })
}

/// Holonomy of the rotated connection around the boundary of a parameter
/// rectangle: `‖F_end F_start⁻¹ − I‖`.
pub fn loop_holonomy(chart: &SurfaceChart, theta: f64, rect: [[f64; 2]; 2], steps_per_side: usize, rank_tol: f64) -> Result<f64> {
    let [[u0, u1], [v0, v1]] = rect;
    let ambient = chart.ambient();
    let start = chart_frame_matrix(chart, [u0, v0], rank_tol)?;
    let legs = [([u0, v0], [u1 - u0, 0.0]), ([u1, v0], [0.0, v1 - v0]), ([u1, v1], [u0 - u1, 0.0]), ([u0, v1], [0.0, v0 - v1])];
    let mut m = start.clone();
    let mut drift = 0.0;
    for (from, delta) in legs {
        let tables = segment_tables(chart, from, delta, steps_per_side, rank_tol)?;
        check_path(tables.iter().flatten())?;
        m = integrate_segment(ambient, &tables, theta, delta, &m, &mut drift);
    }
    let n = m.nrows();
    Ok(operator_norm(&(m * frame_inverse(ambient, &start) - DMatrix::identity(n, n))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonodromyRecord {
    pub theta: f64,
    pub generator: usize,
    pub period: [f64; 2],
    /// `Φ_θ(σ) = F(p0 + σ) F(p0)⁻¹`, row-major.
    pub phi: Vec<Vec<f64>>,
    pub dist_to_identity: f64,
    pub orthogonality_defect: f64,
}

/// The straight path `p0 → p0 + σ` for one period generator with its
/// θ-independent tables.
#[derive(Debug, Clone)]
pub struct PeriodPath {
    pub ambient: AmbientSpace,
    pub generator: usize,
    pub start: [f64; 2],
    pub period: [f64; 2],
    start_frame: DMatrix<f64>,
    start_inverse: DMatrix<f64>,
    tables: Vec<[FrameTable; 2]>,
}

impl PeriodPath {
    pub fn new(chart: &SurfaceChart, generator: usize, steps: usize, rank_tol: f64) -> Result<Self> {
        let periods = chart.periods();
        let period = *periods.get(generator).ok_or_else(|| {
            Error::Precondition(format!("chart `{}` has {} period generator(s), asked for #{generator}", chart.label(), periods.len()))
        })?;
        if steps == 0 {
            return Err(Error::InvalidConfig("path needs at least one step".into()));
        }
        let d = chart.domain();
        let start = [
            if period[0] >= 0.0 { d.u[0] } else { d.u[1] },
            if period[1] >= 0.0 { d.v[0] } else { d.v[1] },
        ];
        let end = [start[0] + period[0], start[1] + period[1]];
        if !d.contains(end) {
            return Err(Error::Precondition(format!("period path from {start:?} by {period:?} leaves the chart domain")));
        }
        let start_frame = chart_frame_matrix(chart, start, rank_tol)?;
        let start_inverse = frame_inverse(chart.ambient(), &start_frame);
        let tables = segment_tables(chart, start, period, steps, rank_tol)?;
        check_path(tables.iter().flatten())?;
        Ok(PeriodPath { ambient: chart.ambient(), generator, start, period, start_frame, start_inverse, tables })
    }

    pub fn phi(&self, theta: f64) -> DMatrix<f64> {
        let mut drift = 0.0;
        let end = integrate_segment(self.ambient, &self.tables, theta, self.period, &self.start_frame, &mut drift);
        end * &self.start_inverse
    }

    pub fn distance(&self, theta: f64) -> f64 {
        let phi = self.phi(theta);
        let n = phi.nrows();
        operator_norm(&(phi - DMatrix::identity(n, n)))
    }

    pub fn record(&self, theta: f64) -> MonodromyRecord {
        let phi = self.phi(theta);
        let n = phi.nrows();
        MonodromyRecord {
            theta,
            generator: self.generator,
            period: self.period,
            dist_to_identity: operator_norm(&(&phi - DMatrix::identity(n, n))),
            orthogonality_defect: group_defect(self.ambient, &phi),
            phi: (0..n).map(|r| (0..n).map(|c| phi[(r, c)]).collect()).collect(),
        }
    }
}

/// Monodromy of one period generator for each `θ`.
pub fn monodromy(chart: &SurfaceChart, thetas: &[f64], generator: usize, steps: usize, rank_tol: f64) -> Result<Vec<MonodromyRecord>> {
    for &t in thetas {
        FamilyParams::new(t)?;
    }
    let path = PeriodPath::new(chart, generator, steps, rank_tol)?;
    Ok(thetas.par_iter().map(|&t| path.record(t)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModuliOptions {
    /// Number of θ samples on `[0, π)`.
    pub steps: usize,
    pub close_tol: f64,
    pub refine_tol: f64,
    /// Integration steps along each period path.
    pub path_steps: usize,
    pub rank_tol: f64,
    /// Grid side used to group closing values into congruence classes.
    pub class_grid: usize,
}

impl Default for ModuliOptions {
    fn default() -> Self {
        ModuliOptions {
            steps: 360,
            close_tol: DEFAULT_CLOSE_TOL,
            refine_tol: DEFAULT_REFINE_TOL,
            path_steps: 256,
            rank_tol: DEFAULT_RANK_TOL,
            class_grid: 17,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuliClass {
    /// Isolated closing values.
    Finite,
    /// Closing on the whole θ-circle.
    Circle,
    /// Sub-tolerance plateaus that the resolution cannot separate.
    Inconclusive,
}

impl ModuliClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModuliClass::Finite => "finite",
            ModuliClass::Circle => "circle",
            ModuliClass::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosingValue {
    pub theta: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModuliScan {
    pub label: String,
    pub options: ModuliOptions,
    pub periods: Vec<[f64; 2]>,
    pub thetas: Vec<f64>,
    /// `distances[g][k]`: distance to the identity of generator `g` at `thetas[k]`.
    pub distances: Vec<Vec<f64>>,
    /// Max over generators.
    pub max_distance: Vec<f64>,
    /// Refined closing values; for a circle, every scanned θ.
    pub closing: Vec<ClosingValue>,
    pub classification: ModuliClass,
    /// Indices into `closing` grouped by congruence of the family members.
    pub congruence_classes: Vec<Vec<usize>>,
}

/// Golden-section minimization of `f` on `[a, b]` down to width `tol`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Scans `θ ∈ [0, π)` for the values where all period monodromies are the
/// identity.
///
/// The distance is `π`-periodic in `θ` (`J_{θ+π} = −J_θ` and the sign flip
/// of the normal frame conjugates the tables), so the scan treats `[0, π)`
/// as a circle. Local minima are refined by golden section.
pub fn moduli_scan(chart: &SurfaceChart, opts: &ModuliOptions) -> Result<ModuliScan> {
    let periods = chart.periods().to_vec();
    if periods.is_empty() {
        return Err(Error::Precondition(format!("chart `{}` has no period generators", chart.label())));
    }
    if opts.steps < 8 {
        return Err(Error::InvalidConfig(format!("θ resolution must be at least 8, got {}", opts.steps)));
    }
    let paths = (0..periods.len())
        .map(|g| PeriodPath::new(chart, g, opts.path_steps, opts.rank_tol))
        .collect::<Result<Vec<_>>>()?;
    let n = opts.steps;
    let step = PI / n as f64;
    let thetas: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
    let distances: Vec<Vec<f64>> = paths.iter().map(|p| thetas.par_iter().map(|&t| p.distance(t)).collect()).collect();
    let max_distance: Vec<f64> = (0..n).map(|k| distances.iter().map(|d| d[k]).fold(0.0, f64::max)).collect();
    let dist = |t: f64| paths.iter().map(|p| p.distance(t)).fold(0.0, f64::max);

    let below: Vec<bool> = max_distance.iter().map(|&d| d < opts.close_tol).collect();
    let (classification, closing) = if below.iter().all(|&b| b) {
        (ModuliClass::Circle, thetas.iter().zip(&max_distance).map(|(&t, &d)| ClosingValue { theta: t, distance: d }).collect())
    } else {
        let plateau = (0..n).any(|k| below[k] && below[(k + 1) % n]);
        let minima: Vec<usize> = (0..n)
            .filter(|&k| {
                let d = max_distance[k];
                d <= max_distance[(k + n - 1) % n] && d < max_distance[(k + 1) % n]
            })
            .collect();
        let mut closing: Vec<ClosingValue> = minima
            .par_iter()
            .map(|&k| {
                let (t, d) = golden_min(dist, thetas[k] - step, thetas[k] + step, opts.refine_tol);
                let mut t = t.rem_euclid(PI);
                if t.min(PI - t) < 10.0 * opts.refine_tol {
                    t = 0.0;
                }
                ClosingValue { theta: t, distance: d }
            })
            .filter(|c| c.distance < opts.close_tol)
            .collect();
        closing.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        closing.dedup_by(|a, b| (a.theta - b.theta).abs() < 1e3 * opts.refine_tol);
        (if plateau { ModuliClass::Inconclusive } else { ModuliClass::Finite }, closing)
    };

    let congruence_classes = if classification == ModuliClass::Finite && !closing.is_empty() && closing.len() <= 16 {
        let grid = Grid::over(chart.domain(), opts.class_grid, opts.class_grid);
        let members = integrate_family(
            chart,
            &grid,
            &closing.iter().map(|c| c.theta).collect::<Vec<_>>(),
            &FamilyOptions { rank_tol: opts.rank_tol, ..FamilyOptions::default() },
        )?;
        let surfaces = members.iter().map(|m| m.surface()).collect::<Result<Vec<_>>>()?;
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for (k, s) in surfaces.iter().enumerate() {
            let mut placed = false;
            for class in classes.iter_mut() {
                if congruence_test(&surfaces[class[0]], s)?.congruent {
                    class.push(k);
                    placed = true;
                    break;
                }
            }
            if !placed {
                classes.push(vec![k]);
            }
        }
        classes
    } else {
        Vec::new()
    };

    Ok(ModuliScan {
        label: chart.label().to_string(),
        options: *opts,
        periods,
        thetas,
        distances,
        max_distance,
        closing,
        classification,
        congruence_classes,
    })
}
