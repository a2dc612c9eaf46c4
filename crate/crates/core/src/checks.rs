//! Invariant battery run against a catalog entry: flag structure and
//! isotropy, cross-definition of the higher forms, family fidelity,
//! congruence in even and odd codimension, polar surface, connection
//! identities, the eigenvalue check and height independence.

use std::f64::consts::PI;

use serde::Serialize;

use crate::catalog::CatalogEntry;
use crate::congruence::{height_independence, takahashi_convergence};
use crate::error::{Error, Result};
use crate::family::{integrate_family, monodromy, verify_member, FamilyOptions, VerifyOptions};
use crate::forms::{
    connection_forms, cross_definition_defect, isotropy_report, polar_surface, IsotropyOptions, PolarChart, DEFAULT_CIRC_TOL,
    DEFAULT_FD_STEP, DEFAULT_RANK_TOL, DEFAULT_RECURSION_STEP,
};
use crate::sampled::SampledImmersion;
use crate::surface::{Grid, SurfaceChart};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Passes when `value < threshold`.
    Below,
    /// Passes when `value > threshold`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub passed: bool,
    pub detail: String,
}

impl CheckRow {
    pub fn new(name: impl Into<String>, value: f64, bound: Bound, threshold: f64, detail: impl Into<String>) -> Self {
        let passed = match bound {
            Bound::Below => value < threshold,
            Bound::Above => value > threshold,
        };
        CheckRow { name: name.into(), value, threshold, bound, passed, detail: detail.into() }
    }

    fn failed(name: impl Into<String>, err: &Error) -> Self {
        CheckRow { name: name.into(), value: f64::NAN, threshold: f64::NAN, bound: Bound::Below, passed: false, detail: err.to_string() }
    }

    fn verdict(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        CheckRow::new(name, if ok { 0.0 } else { 1.0 }, Bound::Below, 0.5, detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOptions {
    /// Grid side of the analysis checks.
    pub grid: usize,
    /// Grid side of the family checks.
    pub family_grid: usize,
    pub thetas: Vec<f64>,
    /// Points of the cross-definition check.
    pub cross_points: usize,
    pub rank_tol: f64,
    pub circ_tol: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            grid: 33,
            family_grid: 65,
            thetas: vec![PI / 6.0, PI / 4.0, PI / 3.0],
            cross_points: 20,
            rank_tol: DEFAULT_RANK_TOL,
            circ_tol: DEFAULT_CIRC_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub label: String,
    pub rows: Vec<CheckRow>,
    pub passed: bool,
}

/// Deterministic, well-spread parameter points inside the middle 90% of the
/// chart domain (additive recurrence with irrational steps).
pub fn sample_points(chart: &SurfaceChart, n: usize) -> Vec<[f64; 2]> {
    let d = chart.domain();
    let (a, b) = (0.618_033_988_749_894_9, 0.414_213_562_373_095_1);
    (0..n)
        .map(|k| {
            let s = (0.5 + a * k as f64).fract();
            let t = (0.25 + b * k as f64).fract();
            [d.u[0] + (0.05 + 0.9 * s) * (d.u[1] - d.u[0]), d.v[0] + (0.05 + 0.9 * t) * (d.v[1] - d.v[0])]
        })
        .collect()
}

fn push<T>(rows: &mut Vec<CheckRow>, name: &str, r: Result<T>, f: impl FnOnce(T) -> Vec<CheckRow>) {
    match r {
        Ok(x) => rows.extend(f(x)),
        Err(e) => rows.push(CheckRow::failed(name, &e)),
    }
}

/// Runs every check that applies to the entry's ambient and expected
/// properties.
pub fn check_entry(entry: &CatalogEntry, opts: &CheckOptions) -> CheckReport {
    let chart = &entry.chart;
    let exp = &entry.expected;
    let ambient = chart.ambient();
    let odd_sphere = ambient.is_sphere() && ambient.dim % 2 == 1;
    let mut rows = Vec::new();
    let grid = Grid::over(chart.domain(), opts.grid, opts.grid);
    let iso_opts = IsotropyOptions { rank_tol: opts.rank_tol, circ_tol: opts.circ_tol, ..IsotropyOptions::default() };

    let analysis = isotropy_report(chart, &grid, &iso_opts);
    let rank_drops = analysis.as_ref().map(|r| !r.nonregular.is_empty()).unwrap_or(false);
    if exp.minimal {
        push(&mut rows, "analysis", analysis, |r| {
            let rank_mismatch = r.records.iter().filter(|p| p.regular && p.ranks != exp.ranks).count();
            let mut out = vec![
                CheckRow::new("minimality", r.max_trace, Bound::Below, 1e-10, "max |α²(e1,e1) + α²(e2,e2)|"),
                CheckRow::verdict(
                    "flag-ranks",
                    rank_mismatch == 0 && r.substantial == exp.substantial && exp.ranks.len() == exp.m,
                    format!("expected ranks {:?}, substantial {}", exp.ranks, exp.substantial),
                ),
                CheckRow::verdict("l0-isolated", r.nonregular_isolated, format!("{} rank-drop nodes", r.nonregular.len())),
            ];
            out.push(if exp.isotropic {
                CheckRow::new("isotropy", r.max_dev, Bound::Below, 1e-8, "max circularity deviation")
            } else {
                CheckRow::new("non-isotropy", r.max_dev, Bound::Above, 0.1, "max circularity deviation")
            });
            out
        });
    } else {
        rows.push(CheckRow::verdict(
            "nonminimal-rejected",
            matches!(analysis, Err(Error::NotMinimal { .. })),
            "analysis must refuse with the offending trace",
        ));
    }

    let points = sample_points(chart, opts.cross_points);
    let cross: Result<f64> = points.iter().try_fold(0.0, |acc: f64, &p| {
        Ok(cross_definition_defect(chart, p, DEFAULT_RECURSION_STEP, opts.rank_tol)?.into_iter().fold(acc, f64::max))
    });
    push(&mut rows, "cross-definition", cross, |d| {
        vec![CheckRow::new("cross-definition", d, Bound::Below, 1e-6, "jet projection vs inductive forms")]
    });

    if exp.periodic && exp.minimal {
        let d: Result<f64> = (0..chart.periods().len()).try_fold(0.0, |acc: f64, g| {
            Ok(monodromy(chart, &[0.0], g, 128, opts.rank_tol)?.iter().map(|r| r.dist_to_identity).fold(acc, f64::max))
        });
        push(&mut rows, "monodromy-identity", d, |d| vec![CheckRow::new("monodromy-identity", d, Bound::Below, 1e-7, "θ = 0, all generators")]);
    }

    let fgrid = Grid::over(chart.domain(), opts.family_grid, opts.family_grid);
    if rank_drops {
        // the adapted frame is discontinuous at rank-drop points
        let r = integrate_family(chart, &grid, &[PI / 4.0], &FamilyOptions { rank_tol: opts.rank_tol, ..FamilyOptions::default() });
        rows.push(CheckRow::verdict(
            "family-refused-at-rank-drop",
            matches!(r, Err(Error::Gauge { .. } | Error::NotRegular { .. } | Error::Integration(_))),
            "integration through a rank-drop node must be refused",
        ));
    } else if exp.minimal {
        let mut thetas = vec![0.0];
        thetas.extend(opts.thetas.iter().copied().filter(|t| *t != 0.0));
        let fam = integrate_family(chart, &fgrid, &thetas, &FamilyOptions { rank_tol: opts.rank_tol, ..FamilyOptions::default() });
        push(&mut rows, "family", fam, |members| {
            let mut out = Vec::new();
            let vopts = VerifyOptions { rank_tol: opts.rank_tol, circ_tol: opts.circ_tol, ..VerifyOptions::default() };
            for m in &members {
                let tag = format!("θ={:.4}", m.theta);
                let v = match verify_member(chart, m, &vopts) {
                    Ok(v) => v,
                    Err(e) => {
                        out.push(CheckRow::failed(format!("family-verify[{tag}]"), &e));
                        continue;
                    }
                };
                out.push(CheckRow::new(format!("family-frame[{tag}]"), v.frame_defect, Bound::Below, 1e-8, "orthogonality of transported frames"));
                if m.theta == 0.0 {
                    out.push(CheckRow::new("family-reconstruction", v.congruence.rms_residual, Bound::Below, 1e-8, "g_0 against the chart"));
                    continue;
                }
                out.push(CheckRow::new(format!("family-isometry[{tag}]"), v.metric_deviation, Bound::Below, 1e-5, "relative metric deviation"));
                out.push(CheckRow::new(format!("family-minimality[{tag}]"), v.mean_curvature, Bound::Below, 1e-5, "trace of α² of g_θ"));
                if exp.isotropic {
                    out.push(CheckRow::new(format!("family-isotropy[{tag}]"), v.isotropy_max_dev, Bound::Below, 1e-5, "circularity of g_θ"));
                    if ambient.dim % 2 == 0 {
                        out.push(CheckRow::new(format!("even-codim-congruent[{tag}]"), v.congruence.rms_residual, Bound::Below, 1e-5, "g_θ against g"));
                    } else if odd_sphere && (m.theta - PI / 4.0).abs() < 1e-12 {
                        out.push(CheckRow::new(format!("odd-codim-noncongruent[{tag}]"), v.congruence.rms_residual, Bound::Above, 1e-2, "g_θ against g"));
                    }
                    if let Some(p) = v.polar_factor_deviation {
                        out.push(CheckRow::new(format!("polar-factor[{tag}]"), p, Bound::Below, 1e-5, "conformal factor of e_N(θ) against g*"));
                    }
                }
            }
            out
        });
    } else {
        let r = integrate_family(chart, &fgrid, &[PI / 4.0], &FamilyOptions { rank_tol: opts.rank_tol, ..FamilyOptions::default() });
        rows.push(CheckRow::verdict("family-refused", matches!(r, Err(Error::Compatibility { .. })), "compatibility residual above threshold"));
    }

    if odd_sphere && exp.isotropic {
        push(&mut rows, "polar", polar_surface(chart, &grid, opts.rank_tol, opts.circ_tol), |p| {
            vec![CheckRow::new("polar-conformal", p.max_conformality_dev, Bound::Below, 1e-6, "conformality of g*")]
        });
        let pc = PolarChart::new(chart.clone(), opts.rank_tol).and_then(|pc| isotropy_report(&pc, &grid, &iso_opts));
        push(&mut rows, "polar-isotropy", pc, |r| vec![CheckRow::new("polar-isotropy", r.max_dev, Bound::Below, 1e-6, "circularity of g*")]);
        if ambient.dim >= 5 {
            let cgrid = Grid::over(chart.domain(), 8, 8);
            push(&mut rows, "connection-identities", connection_forms(chart, &cgrid, DEFAULT_FD_STEP, opts.rank_tol, opts.circ_tol), |r| {
                vec![
                    CheckRow::new("connection-identities", r.max_residual(), Bound::Below, 1e-6, format!("{} identities", r.identities.len())),
                    CheckRow::new("connection-fd-order", (r.convergence_order - 2.0).abs(), Bound::Below, 0.25, "order of the differenced frame"),
                ]
            });
        }
    }

    if ambient.is_sphere() {
        let t = takahashi_convergence(chart, 17);
        if exp.minimal {
            push(&mut rows, "takahashi", t, |t| {
                vec![CheckRow::new("takahashi-order", (t.order - 2.0).abs(), Bound::Below, 0.25, format!("order {:.3}", t.order))]
            });
            let h = SampledImmersion::from_chart(chart, grid).and_then(|s| height_independence(&[s]));
            push(&mut rows, "height-independence", h, |h| {
                vec![CheckRow::new("height-independence", h.normalized_sigma_min, Bound::Above, 1e-3, "σ_min / sqrt(rows)")]
            });
        } else {
            push(&mut rows, "takahashi", t, |t| {
                vec![CheckRow::new("takahashi-nonminimal", t.fine.residual, Bound::Above, 0.1, "residual stays away from zero")]
            });
        }
    }

    let passed = rows.iter().all(|r| r.passed);
    CheckReport { label: entry.label.to_string(), rows, passed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn sample_points_stay_inside() {
        let c = catalog::get("veronese-s4").unwrap().chart;
        let d = c.domain();
        for p in sample_points(&c, 50) {
            assert!(p[0] > d.u[0] && p[0] < d.u[1] && p[1] > d.v[0] && p[1] < d.v[1]);
        }
    }

    #[test]
    fn row_bounds() {
        assert!(CheckRow::new("a", 1.0, Bound::Below, 2.0, "").passed);
        assert!(!CheckRow::new("a", 1.0, Bound::Above, 2.0, "").passed);
        assert!(!CheckRow::new("a", f64::NAN, Bound::Below, 2.0, "").passed);
    }
}
