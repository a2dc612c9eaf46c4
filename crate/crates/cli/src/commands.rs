//! Command implementations on top of the core library.

use std::fs;
use std::path::PathBuf;

use isosurf_core::catalog;
use isosurf_core::checks::{check_entry, CheckOptions};
use isosurf_core::congruence::congruence_test;
use isosurf_core::family::{integrate_family, moduli_scan, verify_member, FamilyOptions, ModuliOptions, VerifyOptions};
use isosurf_core::forms::{isotropy_report, polar_surface, IsotropyOptions, PolarChart};
use isosurf_core::sampled::SampledImmersion;
use isosurf_core::surface::{Grid, SurfaceChart};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{num, opt, CliError, CommandOutput, Table, EXIT_NUMERICAL};

/// Resolved configuration; embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart_file: Option<PathBuf>,
    pub grid: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    pub tol_rank: f64,
    pub tol_circ: f64,
    pub tol_close: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub format: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family_grid: Option<usize>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub all: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_file: Option<PathBuf>,
}

pub const MIN_RESOLUTION: usize = 8;

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.grid < MIN_RESOLUTION {
            return Err(CliError::validation(format!("--grid must be at least {MIN_RESOLUTION}, got {}", self.grid)));
        }
        if let Some(g) = self.family_grid.filter(|g| *g < MIN_RESOLUTION) {
            return Err(CliError::validation(format!("--family-grid must be at least {MIN_RESOLUTION}, got {g}")));
        }
        if let Some(s) = self.steps.filter(|s| *s < MIN_RESOLUTION) {
            return Err(CliError::validation(format!("--steps must be at least {MIN_RESOLUTION}, got {s}")));
        }
        for (name, t) in [("--tol-rank", self.tol_rank), ("--tol-circ", self.tol_circ), ("--tol-close", self.tol_close)] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::validation(format!("{name} must be positive, got {t}")));
            }
        }
        if self.jobs == Some(0) {
            return Err(CliError::validation("--jobs must be positive"));
        }
        Ok(())
    }

    fn grid_over(&self, chart: &SurfaceChart) -> Grid {
        Grid::over(chart.domain(), self.grid, self.grid)
    }

    fn isotropy_options(&self) -> IsotropyOptions {
        IsotropyOptions { rank_tol: self.tol_rank, circ_tol: self.tol_circ, ..IsotropyOptions::default() }
    }
}

fn load(label: Option<&str>, file: Option<&PathBuf>) -> Result<SurfaceChart, CliError> {
    match (label, file) {
        (Some(l), None) => Ok(catalog::get(l)?.chart),
        (None, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Ok(SurfaceChart::from_json(&text)?)
        }
        _ => Err(CliError::validation("give exactly one of --chart and --chart-file")),
    }
}

fn chart(cfg: &RunConfig) -> Result<SurfaceChart, CliError> {
    load(cfg.chart.as_deref(), cfg.chart_file.as_ref())
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn samples_table(name: String, s: &SampledImmersion) -> Table {
    let dim = s.ambient.embedding_dim();
    let mut header: Vec<String> = ["i", "j", "u", "v"].iter().map(|x| x.to_string()).collect();
    header.extend((0..dim).map(|k| format!("x{k}")));
    let mut t = Table::with_header(name, header);
    for (i, j) in s.grid.nodes() {
        let p = s.grid.node(i, j);
        let mut row = vec![i.to_string(), j.to_string(), num(p[0]), num(p[1])];
        row.extend(s.at(i, j).iter().map(|x| num(*x)));
        t.push(row);
    }
    t
}

pub fn analyze(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let c = chart(cfg)?;
    let report = isotropy_report(&c, &cfg.grid_over(&c), &cfg.isotropy_options())?;
    let m = c.ambient().normal_levels();
    let mut header: Vec<String> = ["i", "j", "u", "v", "regular", "substantial", "ranks", "trace"].iter().map(|x| x.to_string()).collect();
    header.extend((1..=m).map(|k| format!("kappa_{k}")));
    header.extend((1..=m).map(|k| format!("circularity_{k}")));
    let mut points = Table::with_header("points", header);
    for r in &report.records {
        let mut row = vec![
            r.i.to_string(),
            r.j.to_string(),
            num(r.u),
            num(r.v),
            r.regular.to_string(),
            r.substantial.to_string(),
            r.ranks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";"),
            num(r.trace),
        ];
        row.extend(r.kappa.iter().map(|x| opt(*x)));
        row.extend(r.circularity.iter().map(|x| opt(*x)));
        points.push(row);
    }
    Ok(CommandOutput { stem: format!("{}.analyze", c.label()), result: to_value(&report), tables: vec![points], exit: 0 })
}

pub fn family(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let c = chart(cfg)?;
    let thetas = if cfg.theta.is_empty() { vec![0.0] } else { cfg.theta.clone() };
    let members = integrate_family(&c, &cfg.grid_over(&c), &thetas, &FamilyOptions { rank_tol: cfg.tol_rank, ..FamilyOptions::default() })?;
    let vopts = VerifyOptions { rank_tol: cfg.tol_rank, circ_tol: cfg.tol_circ, ..VerifyOptions::default() };
    let mut summary = Table::new(
        "summary",
        &[
            "theta",
            "metric_deviation",
            "mean_curvature",
            "isotropy_max_dev",
            "frame_defect",
            "path_defect",
            "compatibility_residual",
            "congruence_rms",
            "congruent",
            "polar_factor_deviation",
        ],
    );
    let mut tables = Vec::new();
    let mut out = Vec::new();
    for (k, m) in members.iter().enumerate() {
        let v = verify_member(&c, m, &vopts)?;
        summary.push(vec![
            num(m.theta),
            num(v.metric_deviation),
            num(v.mean_curvature),
            num(v.isotropy_max_dev),
            num(v.frame_defect),
            num(m.path_defect),
            num(m.compatibility_residual),
            num(v.congruence.rms_residual),
            v.congruence.congruent.to_string(),
            opt(v.polar_factor_deviation),
        ]);
        tables.push(samples_table(format!("theta-{k}"), &m.surface()?));
        out.push(json!({ "member": to_value(m), "verification": to_value(&v) }));
    }
    tables.insert(0, summary);
    Ok(CommandOutput { stem: format!("{}.family", c.label()), result: json!({ "members": out }), tables, exit: 0 })
}

pub fn moduli(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let c = chart(cfg)?;
    let opts = ModuliOptions {
        steps: cfg.steps.unwrap_or(ModuliOptions::default().steps),
        close_tol: cfg.tol_close,
        rank_tol: cfg.tol_rank,
        ..ModuliOptions::default()
    };
    let scan = moduli_scan(&c, &opts)?;
    let mut header = vec!["theta".to_string()];
    header.extend((0..scan.periods.len()).map(|g| format!("distance_{g}")));
    header.push("max_distance".into());
    let mut curve = Table::with_header("curve", header);
    for (k, t) in scan.thetas.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(scan.distances.iter().map(|d| num(d[k])));
        row.push(num(scan.max_distance[k]));
        curve.push(row);
    }
    Ok(CommandOutput { stem: format!("{}.moduli", c.label()), result: to_value(&scan), tables: vec![curve], exit: 0 })
}

pub fn polar(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let c = chart(cfg)?;
    let grid = cfg.grid_over(&c);
    let surface = polar_surface(&c, &grid, cfg.tol_rank, cfg.tol_circ)?;
    let iso = isotropy_report(&PolarChart::new(c.clone(), cfg.tol_rank)?, &grid, &cfg.isotropy_options())?;
    let dim = c.ambient().embedding_dim();
    let mut header: Vec<String> = ["i", "j", "u", "v"].iter().map(|x| x.to_string()).collect();
    header.extend((0..dim).map(|k| format!("x{k}")));
    header.extend(["conformality_deviation".to_string(), "conformal_factor".to_string()]);
    let mut points = Table::with_header("points", header);
    for (i, j) in grid.nodes() {
        let p = grid.node(i, j);
        let k = grid.index(i, j);
        let mut row = vec![i.to_string(), j.to_string(), num(p[0]), num(p[1])];
        match (&surface.points[k], &surface.conformal[k]) {
            (Some(x), Some(cp)) => {
                row.extend(x.iter().map(|y| num(*y)));
                row.extend([num(cp.deviation), num(cp.factor)]);
            }
            _ => row.extend(std::iter::repeat(String::new()).take(dim + 2)),
        }
        points.push(row);
    }
    let result = json!({
        "surface": to_value(&surface),
        "isotropy": {
            "max_dev": iso.max_dev,
            "isotropic": iso.isotropic,
            "substantial": iso.substantial,
            "nonregular": to_value(&iso.nonregular),
        },
    });
    Ok(CommandOutput { stem: format!("{}.polar", c.label()), result, tables: vec![points], exit: 0 })
}

pub fn congruence(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let c = chart(cfg)?;
    let grid = cfg.grid_over(&c);
    let a = SampledImmersion::from_chart(&c, grid)?;
    let (b, against) = match (&cfg.other, &cfg.other_file, cfg.theta.as_slice()) {
        (None, None, [t]) => {
            let fam = integrate_family(&c, &grid, &[*t], &FamilyOptions { rank_tol: cfg.tol_rank, ..FamilyOptions::default() })?;
            (fam[0].surface()?, json!({ "family_theta": t }))
        }
        (Some(_), None, []) | (None, Some(_), []) => {
            let other = load(cfg.other.as_deref(), cfg.other_file.as_ref())?;
            (SampledImmersion::from_chart(&other, grid)?, json!({ "chart": other.label() }))
        }
        _ => return Err(CliError::validation("compare against exactly one of --other, --other-file or a single --theta")),
    };
    let r = congruence_test(&a, &b)?;
    let mut table = Table::new("summary", &["rms_residual", "scale", "determinant", "congruent"]);
    table.push(vec![num(r.rms_residual), num(r.scale), num(r.determinant), r.congruent.to_string()]);
    Ok(CommandOutput {
        stem: format!("{}.congruence", c.label()),
        result: json!({ "against": against, "congruence": to_value(&r) }),
        tables: vec![table],
        exit: 0,
    })
}

pub fn check(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let entries = match (cfg.all, &cfg.chart, &cfg.chart_file) {
        (true, None, None) => catalog::all(),
        (false, Some(l), None) => vec![catalog::get(l)?],
        (false, None, Some(_)) => return Err(CliError::validation("check needs a catalog label: expected properties come from the catalog")),
        _ => return Err(CliError::validation("give exactly one of --all and --chart")),
    };
    let defaults = CheckOptions::default();
    let opts = CheckOptions {
        grid: cfg.grid,
        family_grid: cfg.family_grid.unwrap_or(defaults.family_grid),
        thetas: if cfg.theta.is_empty() { defaults.thetas } else { cfg.theta.clone() },
        rank_tol: cfg.tol_rank,
        circ_tol: cfg.tol_circ,
        ..defaults
    };
    let reports: Vec<_> = entries.iter().map(|e| check_entry(e, &opts)).collect();
    let mut table = Table::new("rows", &["chart", "check", "value", "bound", "threshold", "passed", "detail"]);
    for r in &reports {
        for row in &r.rows {
            let bound = to_value(&row.bound).as_str().unwrap_or_default().to_string();
            table.push(vec![r.label.clone(), row.name.clone(), num(row.value), bound, num(row.threshold), row.passed.to_string(), row.detail.clone()]);
        }
    }
    let passed = reports.iter().all(|r| r.passed);
    let stem = if cfg.all { "catalog.check".to_string() } else { format!("{}.check", reports[0].label) };
    Ok(CommandOutput {
        stem,
        result: json!({ "passed": passed, "reports": to_value(&reports) }),
        tables: vec![table],
        exit: if passed { 0 } else { EXIT_NUMERICAL },
    })
}

pub fn list_catalog(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let entries = match (&cfg.chart, &cfg.chart_file) {
        (None, None) => catalog::all(),
        (Some(l), None) => vec![catalog::get(l)?],
        _ => return Err(CliError::validation("catalog takes an optional --chart label only")),
    };
    let mut table = Table::new("entries", &["label", "ambient", "dim", "minimal", "isotropic", "substantial", "ranks", "periodic", "description"]);
    let mut out = Vec::new();
    for e in &entries {
        let a = e.chart.ambient();
        let x = &e.expected;
        table.push(vec![
            e.label.to_string(),
            if a.is_sphere() { "sphere".into() } else { "euclidean".into() },
            a.dim.to_string(),
            x.minimal.to_string(),
            x.isotropic.to_string(),
            x.substantial.to_string(),
            x.ranks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";"),
            x.periodic.to_string(),
            e.description.to_string(),
        ]);
        out.push(json!({
            "label": e.label,
            "description": e.description,
            "expected": to_value(&e.expected),
            "definition": to_value(&e.chart.to_def()),
        }));
    }
    let stem = match &cfg.chart {
        Some(l) => format!("{l}.catalog"),
        None => "catalog".into(),
    };
    Ok(CommandOutput { stem, result: json!({ "entries": out }), tables: vec![table], exit: 0 })
}
