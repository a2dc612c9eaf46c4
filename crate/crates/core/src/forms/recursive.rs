//! Higher fundamental forms through the inductive definition: `α²` is the
//! normal part of the derivative of the tangent frame, and `α³` is the part
//! of the normal derivative of the `α²` field orthogonal to `N_1`. All
//! derivatives are Richardson-extrapolated central differences of first-order
//! chart data, so this route shares nothing with the jet projection of
//! [`osculating_flag`](super::osculating_flag) beyond the chart itself.

use serde::Serialize;

use super::flag::osculating_flag;
use crate::error::{Error, Result};
use crate::linalg::{svd_sorted, Span};
use crate::surface::{tangent_data, SurfaceChart, TangentData};

pub const DEFAULT_RECURSION_STEP: f64 = 5e-3;

/// `(4 D(h/2) − D(h)) / 3` for the central difference `D` of `f` at `t = 0`.
fn richardson(f: impl Fn(f64) -> Result<Vec<f64>>, h: f64) -> Result<Vec<f64>> {
    let d = |s: f64| -> Result<Vec<f64>> {
        let (a, b) = (f(s)?, f(-s)?);
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * s)).collect())
    };
    let (coarse, fine) = (d(h)?, d(0.5 * h)?);
    Ok(coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
}

fn frame_vector(t: &TangentData, i: usize) -> &[f64] {
    if i == 0 {
        &t.e1
    } else {
        &t.e2
    }
}

fn shifted(p: [f64; 2], dir: [f64; 2], t: f64) -> [f64; 2] {
    [p[0] + t * dir[0], p[1] + t * dir[1]]
}

/// Span of the tangent plane and, on the sphere, the position.
fn tangent_span(chart: &SurfaceChart, p: [f64; 2], t: &TangentData) -> Result<Span> {
    let mut span = Span::default();
    if chart.ambient().is_sphere() {
        span.push_normalized(&chart.point(p)?);
    }
    span.push_normalized(&t.e1);
    span.push_normalized(&t.e2);
    Ok(span)
}

/// `α²(e_i, e_j)` at `p` for `(i, j) ∈ {(1,1), (1,2), (2,2)}`, from
/// differences of the Gram–Schmidt tangent frame along `e_j`.
pub fn recursive_alpha2(chart: &SurfaceChart, p: [f64; 2], h: f64) -> Result<[Vec<f64>; 3]> {
    let t = tangent_data(chart, p, None)?;
    let span = tangent_span(chart, p, &t)?;
    let pairs = [(0, 0), (0, 1), (1, 1)];
    let mut out: [Vec<f64>; 3] = Default::default();
    for (slot, &(i, j)) in pairs.iter().enumerate() {
        let dir = t.to_coords(if j == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
        let d = richardson(|s| Ok(frame_vector(&tangent_data(chart, shifted(p, dir, s), None)?, i).to_vec()), h)?;
        out[slot] = span.project_out(&d);
    }
    Ok(out)
}

/// Forms computed by the inductive route, laid out like
/// [`OsculatingFlag::alpha`](super::OsculatingFlag): `alpha[s-2][j]` has `j`
/// arguments equal to `e2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursiveForms {
    pub point: [f64; 2],
    pub alpha: Vec<Vec<Vec<f64>>>,
}

/// `α²` and, when the ambient has at least two normal levels, `α³`.
pub fn recursive_forms(chart: &SurfaceChart, p: [f64; 2], h: f64, rank_tol: f64) -> Result<RecursiveForms> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("difference step must be positive, got {h}")));
    }
    let a2 = recursive_alpha2(chart, p, h)?;
    let mut alpha = vec![a2.to_vec()];
    if chart.ambient().normal_levels() >= 2 {
        let t = tangent_data(chart, p, None)?;
        let mut span = tangent_span(chart, p, &t)?;
        // N_1 from the recursive α² values
        let d = a2[0].len();
        let m = nalgebra::DMatrix::from_fn(d, 3, |r, c| a2[c][r]);
        let (sigma, u) = svd_sorted(m);
        let top = sigma[0].max(f64::MIN_POSITIVE);
        for (k, s) in sigma.iter().enumerate() {
            if *s > rank_tol * top {
                span.push_normalized(&u.column(k).iter().cloned().collect::<Vec<_>>());
            }
        }
        // (slot of α², direction) for e1e1e1, e1e1e2, e1e2e2, e2e2e2
        let plan = [(0, 0), (0, 1), (1, 1), (2, 1)];
        let mut a3 = Vec::with_capacity(4);
        for (slot, k) in plan {
            let dir = t.to_coords(if k == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
            let der = richardson(|s| Ok(recursive_alpha2(chart, shifted(p, dir, s), h)?[slot].clone()), h)?;
            a3.push(span.project_out(&der));
        }
        alpha.push(a3);
    }
    Ok(RecursiveForms { point: p, alpha })
}

/// Largest componentwise difference between the jet-projection forms and
/// the inductive forms at `p`, for every order both routes provide.
pub fn cross_definition_defect(chart: &SurfaceChart, p: [f64; 2], h: f64, rank_tol: f64) -> Result<Vec<f64>> {
    let flag = osculating_flag(chart, p, rank_tol)?;
    let rec = recursive_forms(chart, p, h, rank_tol)?;
    Ok(flag
        .alpha
        .iter()
        .zip(&rec.alpha)
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .flat_map(|(x, y)| x.iter().zip(y).map(|(s, t)| (s - t).abs()))
                .fold(0.0, f64::max)
        })
        .collect())
}
