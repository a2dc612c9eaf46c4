//! Adapted orthonormal frames carried as jets.
//!
//! The frame `(e1, e2, e3, …, e_N)` is built by Gram–Schmidt from the
//! coordinate derivatives: `e1, e2` from `(∂_u x, ∂_v x)`, then for each
//! normal level the pair `ξ_1 = α^{s}(e1, …, e1)`, `ξ_2 = α^{s}(e2, e1, …, e1)`.
//! For an isotropic surface this is exactly the adapted frame
//! `α^{s+1}(e1, …, e1) = κ_s e_{2s+1}`, `α^{s+1}(e1, …, e1, e2) = κ_s e_{2s+2}`.
//! A final rank-one level is oriented so the full ambient frame is positive.
//!
//! Doing the construction on jets of order `r` gives the frame together with
//! its exact partial derivatives up to order `r`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jets::{dot, Jet2};
use crate::linalg::binomial;
use crate::surface::{AmbientSpace, SurfaceChart};

#[derive(Debug, Clone)]
pub struct JetFrame {
    pub point: [f64; 2],
    pub ambient: AmbientSpace,
    pub position: Vec<Jet2>,
    /// `e1, e2, e3, …, e_N`.
    pub cols: Vec<Vec<Jet2>>,
}

fn scaled(v: &[Jet2], s: &Jet2) -> Vec<Jet2> {
    v.iter().map(|x| x * s).collect()
}

fn sub_scaled(w: &mut [Jet2], c: &Jet2, b: &[Jet2]) {
    for (wi, bi) in w.iter_mut().zip(b) {
        *wi -= &(c * bi);
    }
}

fn project_out(v: &[Jet2], basis: &[Vec<Jet2>]) -> Vec<Jet2> {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(&w, b);
            sub_scaled(&mut w, &c, b);
        }
    }
    w
}

fn value_norm(v: &[Jet2]) -> f64 {
    v.iter().map(|x| x.value() * x.value()).sum::<f64>().sqrt()
}

fn normalize(w: &[Jet2]) -> Vec<Jet2> {
    let inv = dot(w, w).sqrt().recip();
    scaled(w, &inv)
}

/// Builds the frame from coordinate jets of order `m + 1 + r`; the result
/// carries jets of order `r`.
pub fn jet_frame(point: [f64; 2], ambient: AmbientSpace, jets: &[Jet2], rank_tol: f64) -> Result<JetFrame> {
    let m = ambient.normal_levels();
    let order = jets.iter().map(Jet2::order).min().unwrap_or(0);
    if order < m + 1 {
        return Err(Error::OutOfRange(format!("frame needs jets of order >= {}, got {order}", m + 1)));
    }
    let r = order - (m + 1);
    let not_regular = |detail: String| Error::NotRegular { u: point[0], v: point[1], detail };

    let deriv = |a: usize, b: usize| -> Vec<Jet2> { jets.iter().map(|j| j.differentiate(a, b).truncate(r)).collect() };
    let position: Vec<Jet2> = jets.iter().map(|j| j.truncate(r)).collect();

    let xu = deriv(1, 0);
    let xv = deriv(0, 1);
    let scale = value_norm(&xu).max(value_norm(&xv));
    let nu2 = dot(&xu, &xu);
    if nu2.value() <= 0.0 {
        return Err(Error::DegenerateMetric { u: point[0], v: point[1], det: 0.0 });
    }
    let b11 = nu2.sqrt().recip();
    let e1 = scaled(&xu, &b11);
    let p = dot(&xv, &e1);
    let mut w = xv.clone();
    sub_scaled(&mut w, &p, &e1);
    let nw2 = dot(&w, &w);
    if nw2.value() <= (1e-6 * scale).powi(2) {
        return Err(Error::DegenerateMetric { u: point[0], v: point[1], det: nw2.value() * b11.value().powi(-2) });
    }
    let b22 = nw2.sqrt().recip();
    let e2 = scaled(&w, &b22);
    let b21 = -(&(&p * &b11) * &b22);

    let mut basis: Vec<Vec<Jet2>> = Vec::new();
    if ambient.is_sphere() {
        basis.push(position.clone());
    }
    basis.push(e1.clone());
    basis.push(e2.clone());
    let mut cols = vec![e1, e2];

    let mut derivative_scale = scale;
    for (k, rank) in ambient.generic_ranks().into_iter().enumerate() {
        let s = k + 2;
        let raw: Vec<Vec<Jet2>> = (0..=s).map(|l| deriv(s - l, l)).collect();
        derivative_scale = raw.iter().map(|d| value_norm(d)).fold(derivative_scale, f64::max);
        // ξ_j = α^s(e1^{s-j} e2^j) for j = 0, 1, before projection
        let combo = |j: usize| -> Vec<Jet2> {
            let dim = raw[0].len();
            let mut acc: Vec<Jet2> = (0..dim).map(|_| Jet2::zero(r)).collect();
            let b11s = b11.powi((s - j) as u32);
            for l in 0..=j {
                let c = (&(&b21.powi((j - l) as u32) * &b22.powi(l as u32)) * &b11s).scale(binomial(j, l));
                for (a, x) in acc.iter_mut().zip(&raw[l]) {
                    *a += &(&c * x);
                }
            }
            acc
        };
        let xi1 = project_out(&combo(0), &basis);
        let xi2 = project_out(&combo(1), &basis);
        let tol = rank_tol * derivative_scale;
        if rank == 2 {
            if value_norm(&xi1) <= tol {
                return Err(not_regular(format!("α^{s}(e1, …, e1) vanishes")));
            }
            let a = normalize(&xi1);
            let b_raw = project_out(&xi2, std::slice::from_ref(&a));
            if value_norm(&b_raw) <= tol {
                return Err(not_regular(format!("N_{} has rank < 2", k + 1)));
            }
            let b = normalize(&b_raw);
            basis.push(a.clone());
            basis.push(b.clone());
            cols.push(a);
            cols.push(b);
        } else {
            let g = if value_norm(&xi1) >= value_norm(&xi2) { xi1 } else { xi2 };
            if value_norm(&g) <= tol {
                return Err(not_regular(format!("N_{} vanishes", k + 1)));
            }
            let mut e = normalize(&g);
            let mut frame = JetFrame { point, ambient, position: position.clone(), cols: cols.clone() };
            frame.cols.push(e.clone());
            if frame.value_matrix_det() < 0.0 {
                e = e.iter().map(|x| -x).collect();
            }
            basis.push(e.clone());
            cols.push(e);
        }
    }
    Ok(JetFrame { point, ambient, position, cols })
}

/// Jet frame of a chart with derivatives up to order `r`.
pub fn chart_frame(chart: &SurfaceChart, point: [f64; 2], r: usize, rank_tol: f64) -> Result<JetFrame> {
    let m = chart.ambient().normal_levels();
    let jets = chart.jet_eval(point, m + 1 + r)?;
    jet_frame(point, chart.ambient(), &jets, rank_tol)
}

impl JetFrame {
    pub fn order(&self) -> usize {
        self.position[0].order()
    }

    fn value_matrix_det(&self) -> f64 {
        let d = self.ambient.embedding_dim();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        if self.ambient.is_sphere() {
            cols.push(self.position.iter().map(Jet2::value).collect());
        }
        for c in &self.cols {
            cols.push(c.iter().map(Jet2::value).collect());
        }
        if cols.len() != d {
            return 1.0;
        }
        DMatrix::from_fn(d, d, |r, c| cols[c][r]).determinant()
    }

    pub fn position_value(&self) -> Vec<f64> {
        self.position.iter().map(Jet2::value).collect()
    }

    pub fn col_value(&self, k: usize) -> Vec<f64> {
        self.cols[k].iter().map(Jet2::value).collect()
    }

    /// `∂_u^a ∂_v^b` of column `k`.
    pub fn col_derivative(&self, k: usize, a: usize, b: usize) -> Vec<f64> {
        self.cols[k].iter().map(|x| x.derivative(a, b)).collect()
    }

    /// Frame matrix of size `N + 1`.
    ///
    /// Sphere: columns `(x, e1, …, e_N)`, orthogonal. Euclidean: the affine
    /// matrix `[[1, 0], [x, (e1 … e_N)]]`.
    pub fn matrix(&self) -> DMatrix<f64> {
        frame_matrix(self.ambient, &self.position_value(), &(0..self.cols.len()).map(|k| self.col_value(k)).collect::<Vec<_>>())
    }

    /// `θ^i(∂_j) = ⟨∂_j x, e_i⟩`. Needs jets of order at least one.
    pub fn coframe(&self) -> [[f64; 2]; 2] {
        let xu: Vec<f64> = self.position.iter().map(|x| x.derivative(1, 0)).collect();
        let xv: Vec<f64> = self.position.iter().map(|x| x.derivative(0, 1)).collect();
        let e1 = self.col_value(0);
        let e2 = self.col_value(1);
        let d = crate::surface::dot;
        [[d(&xu, &e1), d(&xv, &e1)], [d(&xu, &e2), d(&xv, &e2)]]
    }

    /// Maurer–Cartan matrices `Ω_u = M⁻¹ ∂_u M`, `Ω_v = M⁻¹ ∂_v M` of the
    /// frame matrix. Needs jets of order at least one.
    pub fn maurer_cartan(&self) -> Result<[DMatrix<f64>; 2]> {
        if self.order() < 1 {
            return Err(Error::OutOfRange("Maurer–Cartan form needs first-order frame jets".into()));
        }
        let n = self.ambient.frame_size();
        let sphere = self.ambient.is_sphere();
        let mut out = [DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
        for (dir, (a, b)) in [(1usize, 0usize), (0, 1)].into_iter().enumerate() {
            let om = &mut out[dir];
            let dx: Vec<f64> = self.position.iter().map(|x| x.derivative(a, b)).collect();
            let vals: Vec<Vec<f64>> = (0..self.cols.len()).map(|k| self.col_value(k)).collect();
            let ders: Vec<Vec<f64>> = (0..self.cols.len()).map(|k| self.col_derivative(k, a, b)).collect();
            let d = crate::surface::dot;
            for i in 0..self.cols.len() {
                om[(i + 1, 0)] = d(&vals[i], &dx);
                for k in 0..self.cols.len() {
                    om[(i + 1, k + 1)] = d(&vals[i], &ders[k]);
                }
            }
            if sphere {
                let x = self.position_value();
                for k in 0..self.cols.len() {
                    om[(0, k + 1)] = d(&x, &ders[k]);
                }
            }
        }
        Ok(out)
    }
}

pub(crate) fn frame_matrix(ambient: AmbientSpace, position: &[f64], cols: &[Vec<f64>]) -> DMatrix<f64> {
    let n = ambient.frame_size();
    let mut m = DMatrix::zeros(n, n);
    if ambient.is_sphere() {
        for r in 0..n {
            m[(r, 0)] = position[r];
            for (k, c) in cols.iter().enumerate() {
                m[(r, k + 1)] = c[r];
            }
        }
    } else {
        m[(0, 0)] = 1.0;
        for r in 0..n - 1 {
            m[(r + 1, 0)] = position[r];
            for (k, c) in cols.iter().enumerate() {
                m[(r + 1, k + 1)] = c[r];
            }
        }
    }
    m
}

/// Position and frame columns back out of a frame matrix.
pub(crate) fn split_frame_matrix(ambient: AmbientSpace, m: &DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = ambient.frame_size();
    if ambient.is_sphere() {
        let x = m.column(0).iter().cloned().collect();
        let cols = (1..n).map(|k| m.column(k).iter().cloned().collect()).collect();
        (x, cols)
    } else {
        let x = (1..n).map(|r| m[(r, 0)]).collect();
        let cols = (1..n).map(|k| (1..n).map(|r| m[(r, k)]).collect()).collect();
        (x, cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::forms::flag::{osculating_flag, DEFAULT_RANK_TOL};
    use crate::linalg::orthogonality_defect;

    #[test]
    fn frame_is_orthonormal_and_positive() {
        for label in ["clifford-s3", "equilateral-s5", "veronese-s4", "holo-r4", "nonisotropic-r5"] {
            let c = catalog::get(label).unwrap().chart;
            let p = c.domain().center();
            let f = chart_frame(&c, [p[0] + 0.13, p[1] + 0.07], 0, DEFAULT_RANK_TOL).unwrap();
            let m = f.matrix();
            if c.ambient().is_sphere() {
                assert!(orthogonality_defect(&m) < 1e-12, "{label}");
            } else {
                let n = m.nrows();
                let fb = m.view((1, 1), (n - 1, n - 1)).into_owned();
                assert!(orthogonality_defect(&fb) < 1e-12, "{label}");
            }
            if c.ambient().dim % 2 == 1 {
                assert!(m.determinant() > 0.0, "{label}");
            }
        }
    }

    #[test]
    fn frame_columns_span_flag_levels() {
        let c = catalog::get("equilateral-s5").unwrap().chart;
        let p = [0.8, 2.3];
        let f = chart_frame(&c, p, 0, DEFAULT_RANK_TOL).unwrap();
        let flag = osculating_flag(&c, p, DEFAULT_RANK_TOL).unwrap();
        let d = crate::surface::dot;
        // e3, e4 span N_1; e5 spans N_2
        for (k, level) in [(2usize, 0usize), (3, 0), (4, 1)] {
            let e = f.col_value(k);
            let proj: f64 = flag.bases[level].iter().map(|b| d(&e, b).powi(2)).sum();
            assert!((proj - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn maurer_cartan_is_antisymmetric_on_sphere() {
        let c = catalog::get("equilateral-s5").unwrap().chart;
        let f = chart_frame(&c, [1.0, 0.5], 1, DEFAULT_RANK_TOL).unwrap();
        let [ou, ov] = f.maurer_cartan().unwrap();
        assert!((&ou + ou.transpose()).amax() < 1e-12);
        assert!((&ov + ov.transpose()).amax() < 1e-12);
    }

    #[test]
    fn non_regular_point_is_reported() {
        let c = catalog::get("holo-cubic-r4").unwrap().chart;
        assert!(matches!(chart_frame(&c, [0.0, 0.0], 1, DEFAULT_RANK_TOL), Err(Error::NotRegular { .. })));
    }
}
