//! Osculating flag and higher fundamental forms.
//!
//! The `s`-th fundamental form is obtained by projecting the order-`s`
//! partial derivatives of the immersion onto the orthogonal complement of the
//! span of all lower-order derivatives (and of the position vector in the
//! sphere case). The images are the normal spaces `N_1, …, N_m`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jets::Jet2;
use crate::linalg::{binomial, svd_sorted, Span};
use crate::surface::{norm, tangent_from_derivatives, AmbientSpace, SurfaceChart, TangentData};

pub const DEFAULT_RANK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct OsculatingFlag {
    pub point: [f64; 2],
    pub ambient: AmbientSpace,
    /// Position vector, sphere ambient only.
    pub position: Option<Vec<f64>>,
    pub tangent: TangentData,
    /// `dim N_k` for `k = 1..=m`.
    pub ranks: Vec<usize>,
    /// Orthonormal bases of each `N_k`.
    pub bases: Vec<Vec<Vec<f64>>>,
    /// `alpha[s-2][j] = α^s(e1, …, e1, e2, …, e2)` with `j` copies of `e2`.
    pub alpha: Vec<Vec<Vec<f64>>>,
    /// Singular values of each level, for diagnostics.
    pub singular_values: Vec<Vec<f64>>,
    pub regular: bool,
    pub substantial: bool,
}

impl OsculatingFlag {
    /// Largest `s` for which `α^s` is stored.
    pub fn max_order(&self) -> usize {
        self.alpha.len() + 1
    }

    /// `α^2(e1,e1) + α^2(e2,e2)`, twice the mean curvature vector.
    pub fn trace_vector(&self) -> Vec<f64> {
        let a = &self.alpha[0];
        a[0].iter().zip(&a[2]).map(|(x, y)| x + y).collect()
    }

    pub fn trace_norm(&self) -> f64 {
        norm(&self.trace_vector())
    }

    /// Frame coordinates `(⟨X, e1⟩, ⟨X, e2⟩)` of an ambient tangent vector.
    pub fn tangent_coords(&self, x: &[f64]) -> [f64; 2] {
        [crate::surface::dot(x, &self.tangent.e1), crate::surface::dot(x, &self.tangent.e2)]
    }
}

fn raw_derivatives(jets: &[Jet2], s: usize) -> Vec<Vec<f64>> {
    // index b = number of v-derivatives
    (0..=s)
        .map(|b| jets.iter().map(|j| j.derivative(s - b, b)).collect())
        .collect()
}

/// Projections of the order-`s` derivatives, `s = 2..=s_max`, onto the
/// complement of the span of all lower-order derivatives.
///
/// Returns, per order, the projected vectors indexed by the number of `v`
/// derivatives, together with the orthonormal bases of the levels found on
/// the way. Levels are ranked with `rank_tol` relative to the largest
/// derivative norm seen up to that order.
pub(crate) struct Projection {
    pub position: Option<Vec<f64>>,
    pub tangent: TangentData,
    pub projected: Vec<Vec<Vec<f64>>>,
    pub ranks: Vec<usize>,
    pub bases: Vec<Vec<Vec<f64>>>,
    pub singular_values: Vec<Vec<f64>>,
    pub span_dim: usize,
}

pub(crate) fn project_derivatives(
    point: [f64; 2],
    ambient: AmbientSpace,
    jets: &[Jet2],
    s_max: usize,
    rank_tol: f64,
) -> Result<Projection> {
    let order = jets.iter().map(Jet2::order).min().unwrap_or(0);
    if order < s_max {
        return Err(Error::OutOfRange(format!("jets of order {order} cannot supply derivatives of order {s_max}")));
    }
    let mut span = Span::default();
    let position = if ambient.is_sphere() {
        let x: Vec<f64> = jets.iter().map(Jet2::value).collect();
        span.push_normalized(&x);
        Some(x)
    } else {
        None
    };
    let first = raw_derivatives(jets, 1);
    let tangent = tangent_from_derivatives(point, &first[0], &first[1])?;
    span.push_normalized(&tangent.e1);
    span.push_normalized(&tangent.e2);
    let mut scale = norm(&first[0]).max(norm(&first[1]));

    let mut projected = Vec::new();
    let mut ranks = Vec::new();
    let mut bases = Vec::new();
    let mut singular_values = Vec::new();
    for s in 2..=s_max {
        let raw = raw_derivatives(jets, s);
        scale = raw.iter().map(|d| norm(d)).fold(scale, f64::max);
        let w: Vec<Vec<f64>> = raw.iter().map(|d| span.project_out(d)).collect();
        let dim = w[0].len();
        let m = DMatrix::from_fn(dim, w.len(), |r, c| w[c][r]);
        let (sigma, u) = svd_sorted(m);
        let rank = sigma.iter().filter(|&&x| x > rank_tol * scale).count();
        let basis: Vec<Vec<f64>> = (0..rank).map(|k| u.column(k).iter().cloned().collect()).collect();
        for b in &basis {
            span.push_normalized(b);
        }
        projected.push(w);
        ranks.push(rank);
        bases.push(basis);
        singular_values.push(sigma);
    }
    Ok(Projection {
        position,
        tangent,
        projected,
        ranks,
        bases,
        singular_values,
        span_dim: span.dim(),
    })
}

/// Converts coordinate components `α^s(∂_u^{s-l} ∂_v^l)` into frame
/// components `α^s(e1^{s-j} e2^j)` by multilinearity.
pub(crate) fn to_frame_components(tangent: &TangentData, coord: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let s = coord.len() - 1;
    let [b11, _] = tangent.to_coords([1.0, 0.0]);
    let [b21, b22] = tangent.to_coords([0.0, 1.0]);
    let dim = coord[0].len();
    (0..=s)
        .map(|j| {
            let mut acc = vec![0.0; dim];
            for l in 0..=j {
                let c = binomial(j, l) * b21.powi((j - l) as i32) * b22.powi(l as i32) * b11.powi((s - j) as i32);
                for (a, x) in acc.iter_mut().zip(&coord[l]) {
                    *a += c * x;
                }
            }
            acc
        })
        .collect()
}

/// Flag from coordinate jets of order at least `m + 1`.
pub fn flag_from_jets(point: [f64; 2], ambient: AmbientSpace, jets: &[Jet2], rank_tol: f64) -> Result<OsculatingFlag> {
    let m = ambient.normal_levels();
    let proj = project_derivatives(point, ambient, jets, m + 1, rank_tol)?;
    for (k, &r) in proj.ranks.iter().enumerate() {
        if r > 2 {
            return Err(Error::InconsistentRank { u: point[0], v: point[1], level: k + 1, rank: r });
        }
    }
    let alpha = proj
        .projected
        .iter()
        .map(|w| to_frame_components(&proj.tangent, w))
        .collect();
    let regular = proj.ranks == ambient.generic_ranks();
    let substantial = proj.span_dim == ambient.embedding_dim();
    Ok(OsculatingFlag {
        point,
        ambient,
        position: proj.position,
        tangent: proj.tangent,
        ranks: proj.ranks,
        bases: proj.bases,
        alpha,
        singular_values: proj.singular_values,
        regular,
        substantial,
    })
}

/// Osculating flag of a chart at `point`.
pub fn osculating_flag(chart: &SurfaceChart, point: [f64; 2], rank_tol: f64) -> Result<OsculatingFlag> {
    let m = chart.ambient().normal_levels();
    let jets = chart.jet_eval(point, m + 1)?;
    flag_from_jets(point, chart.ambient(), &jets, rank_tol)
}

/// Evaluates `α^s(X_1, …, X_s)` for tangent vectors given by their frame
/// coordinates `(⟨X, e1⟩, ⟨X, e2⟩)`.
pub fn higher_form_apply(flag: &OsculatingFlag, s: usize, directions: &[[f64; 2]]) -> Result<Vec<f64>> {
    if s < 2 || s > flag.max_order() {
        return Err(Error::OutOfRange(format!("fundamental form order {s} outside 2..={}", flag.max_order())));
    }
    if directions.len() != s {
        return Err(Error::OutOfRange(format!("α^{s} takes {s} arguments, got {}", directions.len())));
    }
    let comps = &flag.alpha[s - 2];
    let dim = comps[0].len();
    let mut out = vec![0.0; dim];
    // expand each argument as x e1 + y e2
    for mask in 0u32..(1 << s) {
        let mut coeff = 1.0;
        for (slot, d) in directions.iter().enumerate() {
            coeff *= if mask & (1 << slot) != 0 { d[1] } else { d[0] };
        }
        if coeff == 0.0 {
            continue;
        }
        let j = mask.count_ones() as usize;
        for (o, a) in out.iter_mut().zip(&comps[j]) {
            *o += coeff * a;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::surface::dot;

    #[test]
    fn clifford_ranks_and_curvature() {
        let c = catalog::get("clifford-s3").unwrap().chart;
        let f = osculating_flag(&c, [0.3, 1.2], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.ranks, vec![1]);
        assert!(f.regular && f.substantial);
        // principal curvatures ±1 of the Clifford torus in S^3
        let a11 = higher_form_apply(&f, 2, &[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!((norm(&a11) - 1.0).abs() < 1e-12);
        assert!(f.trace_norm() < 1e-12);
    }

    #[test]
    fn veronese_ranks() {
        let c = catalog::get("veronese-s4").unwrap().chart;
        let f = osculating_flag(&c, [1.0, 0.4], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.ranks, vec![2]);
        assert!(f.regular && f.substantial);
    }

    #[test]
    fn equilateral_ranks_and_trace() {
        let c = catalog::get("equilateral-s5").unwrap().chart;
        let f = osculating_flag(&c, [0.9, 2.6], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.ranks, vec![2, 1]);
        assert!(f.trace_norm() < 1e-10);
        assert!(f.substantial);
    }

    #[test]
    fn flag_bases_are_orthonormal_and_normal() {
        for label in ["equilateral-s5", "veronese-s4", "holo-r4", "nonisotropic-r5"] {
            let c = catalog::get(label).unwrap().chart;
            let p = c.domain().center();
            let f = osculating_flag(&c, [p[0] + 0.1, p[1] - 0.05], DEFAULT_RANK_TOL).unwrap();
            let mut all = Vec::new();
            if let Some(x) = &f.position {
                all.push(x.clone());
            }
            all.push(f.tangent.e1.clone());
            all.push(f.tangent.e2.clone());
            for b in &f.bases {
                all.extend(b.iter().cloned());
            }
            for (i, a) in all.iter().enumerate() {
                for (j, b) in all.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(a, b) - expect).abs() < 1e-10, "{label}: gram[{i}][{j}]");
                }
            }
        }
    }

    #[test]
    fn higher_form_is_symmetric() {
        let c = catalog::get("equilateral-s5").unwrap().chart;
        let f = osculating_flag(&c, [0.2, 0.7], DEFAULT_RANK_TOL).unwrap();
        let x = [0.3, -0.8];
        let y = [1.1, 0.4];
        let z = [-0.5, 0.9];
        assert_eq!(higher_form_apply(&f, 2, &[x, y]).unwrap(), higher_form_apply(&f, 2, &[y, x]).unwrap());
        let a = higher_form_apply(&f, 3, &[x, y, z]).unwrap();
        let b = higher_form_apply(&f, 3, &[z, x, y]).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn higher_form_order_out_of_range() {
        let c = catalog::get("clifford-s3").unwrap().chart;
        let f = osculating_flag(&c, [0.3, 1.2], DEFAULT_RANK_TOL).unwrap();
        assert!(matches!(higher_form_apply(&f, 3, &[[1.0, 0.0]; 3]), Err(Error::OutOfRange(_))));
        assert!(matches!(higher_form_apply(&f, 1, &[[1.0, 0.0]]), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn non_minimal_high_codimension_rank_three_is_inconsistent() {
        use crate::expr::Expr;
        use crate::surface::Domain;
        // a generic non-minimal graph in R^5 has dim N_1 = 3
        let c = SurfaceChart::new(
            "graph",
            AmbientSpace::euclidean(5),
            Domain::new([-1.0, 1.0], [-1.0, 1.0]),
            vec![],
            vec![Expr::U, Expr::V, Expr::U.pow(2), Expr::U.mul(Expr::V), Expr::V.pow(2)],
        )
        .unwrap();
        assert!(matches!(
            osculating_flag(&c, [0.1, 0.2], DEFAULT_RANK_TOL),
            Err(Error::InconsistentRank { rank: 3, .. })
        ));
    }
}
