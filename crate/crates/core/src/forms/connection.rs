//! Connection forms of the adapted frame and the identities they satisfy
//! on isotropic surfaces.
//!
//! `ω_{ab}(X) = ⟨∇̃_X e_a, e_b⟩` for all frame indices `1..=N`; on normal
//! indices this is the normal connection. The frame field is differentiated
//! by central differences at steps `h` and `h/2`, and the result is compared
//! with the exact Maurer–Cartan form obtained from frame jets.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::flag::osculating_flag;
use super::frame::chart_frame;
use super::isotropy::adapted_frame;
use crate::error::{Error, Result};
use crate::surface::{dot, eval_on_e, hodge_star, Grid, SurfaceChart, TangentData};

pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Connection forms at one point, indices `0..N` standing for `e_1..e_N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionForms {
    pub point: [f64; 2],
    /// `omega[a][b] = (ω_{ab}(e1), ω_{ab}(e2))`.
    pub omega: Vec<Vec<[f64; 2]>>,
    /// `ω_{ab}(E)` with `E = e1 - i e2`.
    #[serde(skip)]
    pub omega_e: Vec<Vec<Complex64>>,
}

impl ConnectionForms {
    fn from_coordinate_values(point: [f64; 2], tangent: &TangentData, du: &[Vec<f64>], dv: &[Vec<f64>]) -> Self {
        let n = du.len();
        let c1 = tangent.to_coords([1.0, 0.0]);
        let c2 = tangent.to_coords([0.0, 1.0]);
        let mut omega = vec![vec![[0.0; 2]; n]; n];
        for a in 0..n {
            for b in 0..n {
                // antisymmetrize so ω_{ab} = -ω_{ba} holds exactly
                let wu = 0.5 * (du[a][b] - du[b][a]);
                let wv = 0.5 * (dv[a][b] - dv[b][a]);
                omega[a][b] = [c1[0] * wu + c1[1] * wv, c2[0] * wu + c2[1] * wv];
            }
        }
        let omega_e = omega.iter().map(|row| row.iter().map(|w| eval_on_e(*w)).collect()).collect();
        ConnectionForms { point, omega, omega_e }
    }

    /// `ω_{ab}` with one-based frame indices.
    pub fn form(&self, a: usize, b: usize) -> [f64; 2] {
        self.omega[a - 1][b - 1]
    }

    pub fn form_e(&self, a: usize, b: usize) -> Complex64 {
        self.omega_e[a - 1][b - 1]
    }

    pub fn max_antisymmetry_defect(&self) -> f64 {
        let n = self.omega.len();
        let mut m: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for k in 0..2 {
                    m = m.max((self.omega[a][b][k] + self.omega[b][a][k]).abs());
                }
            }
        }
        m
    }
}

/// One of the linear identities between connection forms, with one-based
/// frame indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Identity {
    /// `ω_lhs = sign · *ω_rhs` as 1-forms.
    Star { lhs: (usize, usize), rhs: (usize, usize), sign: f64 },
    /// `ω_lhs(E) = factor · ω_rhs(E)`, factor given as `(re, im)`.
    Complex { lhs: (usize, usize), rhs: (usize, usize), factor: (f64, f64) },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedIdentity {
    pub name: String,
    pub statement: String,
    pub identity: Identity,
}

impl Identity {
    pub fn residual(&self, f: &ConnectionForms) -> f64 {
        match *self {
            Identity::Star { lhs, rhs, sign } => {
                let l = f.form(lhs.0, lhs.1);
                let r = hodge_star(f.form(rhs.0, rhs.1));
                (l[0] - sign * r[0]).abs().max((l[1] - sign * r[1]).abs())
            }
            Identity::Complex { lhs, rhs, factor } => {
                let c = Complex64::new(factor.0, factor.1);
                (f.form_e(lhs.0, lhs.1) - c * f.form_e(rhs.0, rhs.1)).norm()
            }
        }
    }
}

/// The identity battery for an isotropic surface with `N` frame vectors:
/// the star relations for every two-dimensional level pair and, for odd `N`,
/// the relation on the last line bundle, followed by their complexified
/// forms.
pub fn identities(n_frame: usize) -> Vec<NamedIdentity> {
    let star = |name: &str, l: (usize, usize), r: (usize, usize), sign: f64| NamedIdentity {
        name: name.into(),
        statement: format!("ω_{{{},{}}} = {}*ω_{{{},{}}}", l.0, l.1, if sign < 0.0 { "-" } else { "" }, r.0, r.1),
        identity: Identity::Star { lhs: l, rhs: r, sign },
    };
    let cplx = |name: &str, l: (usize, usize), r: (usize, usize), factor: (f64, f64)| NamedIdentity {
        name: name.into(),
        statement: format!(
            "ω_{{{},{}}}(E) = {}ω_{{{},{}}}(E)",
            l.0,
            l.1,
            if factor.1 > 0.0 {
                "i·"
            } else if factor.1 < 0.0 {
                "-i·"
            } else {
                ""
            },
            r.0,
            r.1
        ),
        identity: Identity::Complex { lhs: l, rhs: r, factor },
    };
    let mut out = Vec::new();
    let mut s = 1;
    while 2 * s + 2 <= n_frame {
        let (a, b, c, d) = (2 * s - 1, 2 * s, 2 * s + 1, 2 * s + 2);
        out.push(star(&format!("con1a[s={s}]"), (b, c), (a, c), -1.0));
        out.push(star(&format!("con1b[s={s}]"), (b, d), (a, d), -1.0));
        out.push(star(&format!("con2a[s={s}]"), (a, d), (a, c), 1.0));
        out.push(star(&format!("con2b[s={s}]"), (b, d), (b, c), 1.0));
        out.push(cplx(&format!("coni-a[s={s}]"), (a, d), (a, c), (0.0, -1.0)));
        out.push(cplx(&format!("coni-b[s={s}]"), (b, c), (a, c), (0.0, 1.0)));
        out.push(cplx(&format!("conii[s={s}]"), (b, d), (a, c), (1.0, 0.0)));
        s += 1;
    }
    if n_frame % 2 == 1 && n_frame >= 3 {
        let n = (n_frame - 1) / 2;
        out.push(star("con3", (2 * n, 2 * n + 1), (2 * n - 1, 2 * n + 1), -1.0));
        out.push(cplx("coniii", (2 * n, 2 * n + 1), (2 * n - 1, 2 * n + 1), (0.0, 1.0)));
    }
    out
}

fn frame_columns(chart: &SurfaceChart, p: [f64; 2], rank_tol: f64, circ_tol: f64) -> Result<(TangentData, Vec<Vec<f64>>)> {
    let flag = osculating_flag(chart, p, rank_tol)?;
    let a = adapted_frame(&flag, circ_tol)?;
    Ok((flag.tangent.clone(), a.columns()))
}

fn check_gauge(p: [f64; 2], base: &[Vec<f64>], other: &[Vec<f64>]) -> Result<()> {
    for (k, (a, b)) in base.iter().zip(other).enumerate() {
        if dot(a, b) <= 0.0 {
            return Err(Error::Gauge { u: p[0], v: p[1], detail: format!("frame vector e_{} flips between neighbours", k + 1) });
        }
    }
    Ok(())
}

/// Connection forms of the adapted frame at `p` by central differences with
/// step `h`.
pub fn connection_forms_at(chart: &SurfaceChart, p: [f64; 2], h: f64, rank_tol: f64, circ_tol: f64) -> Result<ConnectionForms> {
    let (tangent, base) = frame_columns(chart, p, rank_tol, circ_tol)?;
    let mut tables = Vec::with_capacity(2);
    for dir in [[h, 0.0], [0.0, h]] {
        let (_, plus) = frame_columns(chart, [p[0] + dir[0], p[1] + dir[1]], rank_tol, circ_tol)?;
        let (_, minus) = frame_columns(chart, [p[0] - dir[0], p[1] - dir[1]], rank_tol, circ_tol)?;
        check_gauge(p, &base, &plus)?;
        check_gauge(p, &base, &minus)?;
        let n = base.len();
        let mut t = vec![vec![0.0; n]; n];
        for a in 0..n {
            let d: Vec<f64> = plus[a].iter().zip(&minus[a]).map(|(x, y)| (x - y) / (2.0 * h)).collect();
            for b in 0..n {
                t[a][b] = dot(&d, &base[b]);
            }
        }
        tables.push(t);
    }
    Ok(ConnectionForms::from_coordinate_values(p, &tangent, &tables[0], &tables[1]))
}

/// Connection forms from the exact derivative of the frame jets.
pub fn connection_forms_exact(chart: &SurfaceChart, p: [f64; 2], rank_tol: f64) -> Result<ConnectionForms> {
    let frame = chart_frame(chart, p, 1, rank_tol)?;
    let [ou, ov] = frame.maurer_cartan()?;
    let n = frame.cols.len();
    // Ω[(b+1, a+1)] = ⟨e_b, ∂e_a⟩ = ω_{ab}(∂)
    let du: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| ou[(b + 1, a + 1)]).collect()).collect();
    let dv: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| ov[(b + 1, a + 1)]).collect()).collect();
    let xu: Vec<f64> = frame.position.iter().map(|x| x.derivative(1, 0)).collect();
    let xv: Vec<f64> = frame.position.iter().map(|x| x.derivative(0, 1)).collect();
    let tangent = crate::surface::tangent_from_derivatives(p, &xu, &xv)?;
    Ok(ConnectionForms::from_coordinate_values(p, &tangent, &du, &dv))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub name: String,
    pub statement: String,
    /// Max over the grid with the frame differenced at step `h`.
    pub residual_h: f64,
    /// Same at step `h/2`.
    pub residual_h2: f64,
    /// Same with the exact frame derivative.
    pub residual_exact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectionReport {
    pub label: String,
    pub grid: Grid,
    pub h: f64,
    pub identities: Vec<IdentityResidual>,
    /// Max deviation of the differenced forms from the exact forms.
    pub fd_error_h: f64,
    pub fd_error_h2: f64,
    /// `log2(fd_error_h / fd_error_h2)`.
    pub convergence_order: f64,
    pub max_antisymmetry_defect: f64,
    /// Forms at step `h/2`, one per node.
    pub forms: Vec<ConnectionForms>,
}

impl ConnectionReport {
    pub fn max_residual(&self) -> f64 {
        self.identities.iter().map(|r| r.residual_h.max(r.residual_h2)).fold(0.0, f64::max)
    }
}

fn max_diff(a: &ConnectionForms, b: &ConnectionForms) -> f64 {
    let mut m: f64 = 0.0;
    for (ra, rb) in a.omega.iter().zip(&b.omega) {
        for (x, y) in ra.iter().zip(rb) {
            m = m.max((x[0] - y[0]).abs()).max((x[1] - y[1]).abs());
        }
    }
    m
}

/// Connection forms and identity residuals over `grid`.
pub fn connection_forms(chart: &SurfaceChart, grid: &Grid, h: f64, rank_tol: f64, circ_tol: f64) -> Result<ConnectionReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("finite-difference step must be positive, got {h}")));
    }
    let nodes: Vec<[f64; 2]> = grid.nodes().map(|(i, j)| grid.node(i, j)).collect();
    let per_node: Vec<Result<[ConnectionForms; 3]>> = nodes
        .par_iter()
        .map(|&p| {
            Ok([
                connection_forms_at(chart, p, h, rank_tol, circ_tol)?,
                connection_forms_at(chart, p, h / 2.0, rank_tol, circ_tol)?,
                connection_forms_exact(chart, p, rank_tol)?,
            ])
        })
        .collect();
    let per_node = per_node.into_iter().collect::<Result<Vec<_>>>()?;
    let n_frame = chart.ambient().dim;
    let identities = identities(n_frame)
        .into_iter()
        .map(|id| {
            let worst = |k: usize| per_node.iter().map(|t| id.identity.residual(&t[k])).fold(0.0, f64::max);
            IdentityResidual {
                name: id.name.clone(),
                statement: id.statement.clone(),
                residual_h: worst(0),
                residual_h2: worst(1),
                residual_exact: worst(2),
            }
        })
        .collect();
    let fd_error_h = per_node.iter().map(|t| max_diff(&t[0], &t[2])).fold(0.0, f64::max);
    let fd_error_h2 = per_node.iter().map(|t| max_diff(&t[1], &t[2])).fold(0.0, f64::max);
    let max_antisymmetry_defect = per_node.iter().flat_map(|t| t.iter().map(|f| f.max_antisymmetry_defect())).fold(0.0, f64::max);
    Ok(ConnectionReport {
        label: chart.label().to_string(),
        grid: *grid,
        h,
        identities,
        fd_error_h,
        fd_error_h2,
        convergence_order: (fd_error_h / fd_error_h2).log2(),
        max_antisymmetry_defect,
        forms: per_node.into_iter().map(|[_, half, _]| half).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::forms::flag::DEFAULT_RANK_TOL;
    use crate::forms::isotropy::DEFAULT_CIRC_TOL;

    #[test]
    fn identity_battery_for_s5() {
        let names: Vec<String> = identities(5).into_iter().map(|i| i.name).collect();
        assert_eq!(names.len(), 9);
        assert!(names.contains(&"con3".to_string()));
        assert!(identities(4).iter().all(|i| i.name != "con3"));
    }

    #[test]
    fn equilateral_identities_hold() {
        let c = catalog::get("equilateral-s5").unwrap().chart;
        let grid = Grid::new([0.3, 5.0], [0.2, 4.0], 4, 4);
        let r = connection_forms(&c, &grid, DEFAULT_FD_STEP, DEFAULT_RANK_TOL, DEFAULT_CIRC_TOL).unwrap();
        for id in &r.identities {
            assert!(id.residual_exact < 1e-10, "{} {}", id.name, id.residual_exact);
            assert!(id.residual_h2 < 1e-6, "{} {}", id.name, id.residual_h2);
        }
        assert_eq!(r.max_antisymmetry_defect, 0.0);
    }

    #[test]
    fn veronese_level_identities_hold() {
        let c = catalog::get("veronese-s4").unwrap().chart;
        let grid = Grid::new([0.8, 2.0], [0.5, 4.0], 3, 3);
        let r = connection_forms(&c, &grid, DEFAULT_FD_STEP, DEFAULT_RANK_TOL, DEFAULT_CIRC_TOL).unwrap();
        for id in &r.identities {
            assert!(id.residual_exact < 1e-9, "{} {}", id.name, id.residual_exact);
        }
        assert!((r.convergence_order - 2.0).abs() < 0.2, "order {}", r.convergence_order);
    }
}
