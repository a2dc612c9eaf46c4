//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use isosurf_core::catalog;
use isosurf_core::checks::sample_points;
use isosurf_core::congruence::{height_independence, takahashi_convergence};
use isosurf_core::family::{integrate_family, moduli_scan, verify_member, FamilyOptions, MemberVerification, ModuliClass, ModuliOptions, VerifyOptions};
use isosurf_core::forms::{
    connection_forms, cross_definition_defect, isotropy_report, polar_surface, IsotropyOptions, PolarChart, DEFAULT_CIRC_TOL, DEFAULT_FD_STEP,
    DEFAULT_RANK_TOL, DEFAULT_RECURSION_STEP,
};
use isosurf_core::sampled::SampledImmersion;
use isosurf_core::surface::{Grid, SurfaceChart};
use isosurf_core::{Error, Result};

/// One measured quantity against its threshold.
struct Item {
    label: String,
    value: f64,
    below: bool,
    threshold: f64,
}

impl Item {
    fn below(label: impl Into<String>, value: f64, threshold: f64) -> Self {
        Item { label: label.into(), value, below: true, threshold }
    }

    fn above(label: impl Into<String>, value: f64, threshold: f64) -> Self {
        Item { label: label.into(), value, below: false, threshold }
    }

    fn holds(label: impl Into<String>, ok: bool) -> Self {
        Item::below(label, if ok { 0.0 } else { 1.0 }, 0.5)
    }

    fn passed(&self) -> bool {
        if self.below {
            self.value < self.threshold
        } else {
            self.value > self.threshold
        }
    }
}

struct Outcome {
    items: Vec<Item>,
    error: Option<String>,
}

fn report(id: usize, title: &str, f: impl FnOnce() -> Result<Vec<Item>>) -> bool {
    let start = Instant::now();
    let outcome = match f() {
        Ok(items) => Outcome { items, error: None },
        Err(e) => Outcome { items: Vec::new(), error: Some(e.to_string()) },
    };
    let ok = outcome.error.is_none() && !outcome.items.is_empty() && outcome.items.iter().all(Item::passed);
    let mut parts: Vec<String> = Vec::new();
    if let Some(e) = &outcome.error {
        parts.push(format!("error: {e}"));
    }
    // failing items first, then at most a few passing ones
    let (bad, good): (Vec<&Item>, Vec<&Item>) = outcome.items.iter().partition(|i| !i.passed());
    for i in bad.iter().chain(good.iter().take(if bad.is_empty() { 6 } else { 2 })) {
        let op = if i.below { "<" } else { ">" };
        parts.push(format!("{}{} {:.3e} {op} {:.0e}", if i.passed() { "" } else { "!" }, i.label, i.value, i.threshold));
    }
    println!(
        "{} criterion {id:>2} {title}: {} checks, {:.1} s; {}",
        if ok { "PASS" } else { "FAIL" },
        outcome.items.len(),
        start.elapsed().as_secs_f64(),
        parts.join("; ")
    );
    ok
}

fn chart(label: &str) -> SurfaceChart {
    catalog::get(label).expect("catalog label").chart
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

const FAMILY_GRID: usize = 128;
const FAMILY_CHARTS: [&str; 4] = ["clifford-s3", "veronese-s4", "equilateral-s5", "holo-r4"];
const THETAS: [f64; 4] = [0.0, PI / 6.0, PI / 4.0, PI / 3.0];

struct FamilyRun {
    checks: Vec<MemberVerification>,
    seconds_per_theta: f64,
}

fn family_run(label: &str, n: usize, thetas: &[f64]) -> Result<FamilyRun> {
    let c = chart(label);
    let start = Instant::now();
    let members = integrate_family(&c, &Grid::over(c.domain(), n, n), thetas, &FamilyOptions::default())?;
    let checks = members.iter().map(|m| verify_member(&c, m, &VerifyOptions::default())).collect::<Result<Vec<_>>>()?;
    Ok(FamilyRun { checks, seconds_per_theta: secs(start.elapsed()) / thetas.len() as f64 })
}

fn main() {
    let mut all = true;

    all &= report(1, "analyzer exactness at 64x64", || {
        let mut items = Vec::new();
        for label in ["clifford-s3", "veronese-s4", "equilateral-s5", "holo-r4"] {
            let entry = catalog::get(label)?;
            let start = Instant::now();
            let r = isotropy_report(&entry.chart, &Grid::over(entry.chart.domain(), 64, 64), &IsotropyOptions::default())?;
            let elapsed = secs(start.elapsed());
            let ranks_ok = r.records.iter().filter(|p| p.regular).all(|p| p.ranks == entry.expected.ranks);
            items.push(Item::below(format!("{label} trace"), r.max_trace, 1e-10));
            items.push(Item::holds(format!("{label} ranks {:?}", entry.expected.ranks), ranks_ok && r.substantial == entry.expected.substantial));
            items.push(Item::below(format!("{label} max_dev"), r.max_dev, 1e-8));
            items.push(Item::below(format!("{label} seconds"), elapsed, 10.0));
        }
        Ok(items)
    });

    all &= report(2, "connection identities on equilateral-s5", || {
        let c = chart("equilateral-s5");
        let r = connection_forms(&c, &Grid::over(c.domain(), 8, 8), DEFAULT_FD_STEP, DEFAULT_RANK_TOL, DEFAULT_CIRC_TOL)?;
        let mut items: Vec<Item> = r.identities.iter().map(|id| Item::below(&id.name, id.residual_h.max(id.residual_h2), 1e-6)).collect();
        items.push(Item::below("|fd order - 2|", (r.convergence_order - 2.0).abs(), 0.25));
        Ok(items)
    });

    // family members at 128x128, shared by criteria 3 to 6
    let mut runs: BTreeMap<&str, Result<FamilyRun>> = BTreeMap::new();
    all &= report(3, "associated family fidelity at 128x128", || {
        let mut items = Vec::new();
        for label in FAMILY_CHARTS {
            runs.insert(label, family_run(label, FAMILY_GRID, &THETAS));
            let r = runs[label].as_ref().map_err(Clone::clone)?;
            for v in &r.checks {
                let tag = format!("{label} θ={:.3}", v.theta);
                if v.theta == 0.0 {
                    items.push(Item::below(format!("{tag} reconstruction"), v.congruence.rms_residual, 1e-8));
                } else {
                    items.push(Item::below(format!("{tag} metric"), v.metric_deviation, 1e-5));
                    items.push(Item::below(format!("{tag} mean curvature"), v.mean_curvature, 1e-5));
                    items.push(Item::below(format!("{tag} max_dev"), v.isotropy_max_dev, 1e-5));
                }
            }
            items.push(Item::below(format!("{label} seconds per θ"), r.seconds_per_theta, 60.0));
        }
        Ok(items)
    });

    let run = |label: &str| -> Result<&FamilyRun> {
        match runs.get(label) {
            Some(r) => r.as_ref().map_err(Clone::clone),
            None => Err(Error::Precondition(format!("no family run for {label}"))),
        }
    };

    all &= report(4, "even codimension members congruent", || {
        let mut items = Vec::new();
        for label in ["veronese-s4", "holo-r4"] {
            for v in &run(label)?.checks {
                items.push(Item::below(format!("{label} θ={:.3}", v.theta), v.congruence.rms_residual, 1e-5));
            }
        }
        Ok(items)
    });

    all &= report(5, "equilateral-s5 at π/4 noncongruent under refinement", || {
        let fine = run("equilateral-s5")?.checks.iter().find(|v| (v.theta - PI / 4.0).abs() < 1e-12).cloned();
        let fine = fine.expect("π/4 member");
        let coarse = family_run("equilateral-s5", FAMILY_GRID / 2, &[PI / 4.0])?;
        let coarse = &coarse.checks[0];
        Ok(vec![
            Item::above(format!("{FAMILY_GRID}x{FAMILY_GRID}"), fine.congruence.rms_residual, 1e-2),
            Item::above(format!("{0}x{0}", FAMILY_GRID / 2), coarse.congruence.rms_residual, 1e-2),
            Item::holds("same verdict", fine.congruence.congruent == coarse.congruence.congruent),
        ])
    });

    all &= report(6, "polar surface of equilateral-s5", || {
        let c = chart("equilateral-s5");
        let grid = Grid::over(c.domain(), 64, 64);
        let polar = polar_surface(&c, &grid, DEFAULT_RANK_TOL, DEFAULT_CIRC_TOL)?;
        let iso = isotropy_report(&PolarChart::new(c.clone(), DEFAULT_RANK_TOL)?, &grid, &IsotropyOptions::default())?;
        let mut items = vec![Item::below("max_dev", iso.max_dev, 1e-6), Item::below("conformality", polar.max_conformality_dev, 1e-6)];
        for v in &run("equilateral-s5")?.checks {
            let d = v.polar_factor_deviation.unwrap_or(f64::NAN);
            items.push(Item::below(format!("factor θ={:.3}", v.theta), d, 1e-5));
        }
        Ok(items)
    });

    all &= report(7, "monodromy dichotomy on clifford-s3", || {
        let c = chart("clifford-s3");
        let a = moduli_scan(&c, &ModuliOptions { steps: 360, ..ModuliOptions::default() })?;
        let b = moduli_scan(&c, &ModuliOptions { steps: 720, ..ModuliOptions::default() })?;
        let near = |x: f64, y: f64| {
            let d = (x - y).rem_euclid(PI);
            d.min(PI - d) < 1e-6
        };
        let same = a.closing.len() == b.closing.len() && a.closing.iter().all(|x| b.closing.iter().any(|y| near(x.theta, y.theta)));
        Ok(vec![
            Item::holds("finite at 360", a.classification == ModuliClass::Finite),
            Item::holds("finite at 720", b.classification == ModuliClass::Finite),
            Item::holds("θ = 0 closes", a.closing.iter().any(|x| near(x.theta, 0.0))),
            Item::holds(format!("{} closing values at both resolutions", a.closing.len()), same),
        ])
    });

    all &= report(8, "Laplacian eigenvalue check converges at second order", || {
        let mut items = Vec::new();
        for label in ["clifford-s3", "equilateral-s5"] {
            let t = takahashi_convergence(&chart(label), 33)?;
            items.push(Item::below(format!("{label} |order - 2| (order {:.3})", t.order), (t.order - 2.0).abs(), 0.25));
        }
        Ok(items)
    });

    all &= report(9, "height functions of g and g_{π/4} independent", || {
        let c = chart("equilateral-s5");
        let mut items = Vec::new();
        let mut values = Vec::new();
        for n in [32, 64] {
            let grid = Grid::over(c.domain(), n, n);
            let member = &integrate_family(&c, &grid, &[PI / 4.0], &FamilyOptions::default())?[0];
            let h = height_independence(&[SampledImmersion::from_chart(&c, grid)?, member.surface()?])?;
            items.push(Item::above(format!("σ_min/√rows at {n}x{n}"), h.normalized_sigma_min, 1e-3));
            values.push(h.normalized_sigma_min);
        }
        items.push(Item::below("relative change under refinement", (values[0] - values[1]).abs() / values[1], 0.5));
        Ok(items)
    });

    all &= report(10, "inductive and jet-projection forms agree", || {
        let mut items = Vec::new();
        for entry in catalog::all() {
            let c = &entry.chart;
            let mut worst: f64 = 0.0;
            for p in sample_points(c, 20) {
                worst = cross_definition_defect(c, p, DEFAULT_RECURSION_STEP, DEFAULT_RANK_TOL)?.into_iter().fold(worst, f64::max);
            }
            items.push(Item::below(entry.label.to_string(), worst, 1e-6));
        }
        Ok(items)
    });

    if !all {
        std::process::exit(1);
    }
}
