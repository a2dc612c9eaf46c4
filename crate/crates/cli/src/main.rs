//! `isosurf`: higher fundamental forms, isotropy, associated families and
//! monodromy of minimal surfaces from the command line.

mod commands;
mod output;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isosurf_core::family::DEFAULT_CLOSE_TOL;
use isosurf_core::forms::{DEFAULT_CIRC_TOL, DEFAULT_RANK_TOL};

use commands::RunConfig;
use output::{envelope, write_files, CliError, CommandOutput, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "isosurf", version, about = "Analysis of minimal surfaces in spheres and Euclidean spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flag ranks, minimality and curvature-ellipse circularity over a grid.
    Analyze(Common),
    /// Members of the associated family with their verification.
    Family(Common),
    /// Scan of the rotation parameter for closed family members.
    Moduli(Common),
    /// Polar surface of an isotropic surface in an odd sphere.
    Polar(Common),
    /// Congruence of a chart with another chart or a family member.
    Congruence(CongruenceArgs),
    /// Invariant battery against the catalog expectations.
    Check(CheckArgs),
    /// Built-in charts and their expected properties.
    Catalog(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct Common {
    /// Catalog label.
    #[arg(long, conflicts_with = "chart_file")]
    chart: Option<String>,
    /// Chart definition file (JSON).
    #[arg(long)]
    chart_file: Option<PathBuf>,
    /// Grid nodes per side.
    #[arg(long)]
    grid: Option<usize>,
    /// Rotation parameters in [0, π), comma separated or repeated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Vec<f64>,
    /// θ samples of the moduli scan.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    tol_rank: f64,
    #[arg(long, default_value_t = DEFAULT_CIRC_TOL)]
    tol_circ: f64,
    #[arg(long, default_value_t = DEFAULT_CLOSE_TOL)]
    tol_close: f64,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Directory for the JSON report and CSV tables; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stdout format when no output directory is given.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Clone)]
struct CongruenceArgs {
    #[command(flatten)]
    common: Common,
    /// Catalog label of the second chart.
    #[arg(long, conflicts_with = "other_file")]
    other: Option<String>,
    /// Definition file of the second chart.
    #[arg(long)]
    other_file: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Check every catalog entry.
    #[arg(long, conflicts_with_all = ["chart", "chart_file"])]
    all: bool,
    /// Grid nodes per side of the family checks.
    #[arg(long)]
    family_grid: Option<usize>,
}

type Runner = fn(&RunConfig) -> Result<CommandOutput, CliError>;

fn config(c: &Common, default_grid: usize) -> RunConfig {
    RunConfig {
        chart: c.chart.clone(),
        chart_file: c.chart_file.clone(),
        grid: c.grid.unwrap_or(default_grid),
        theta: c.theta.clone(),
        steps: c.steps,
        tol_rank: c.tol_rank,
        tol_circ: c.tol_circ,
        tol_close: c.tol_close,
        jobs: c.jobs,
        format: match c.format {
            Format::Json => "json",
            Format::Csv => "csv",
        },
        family_grid: None,
        all: false,
        other: None,
        other_file: None,
    }
}

fn setup(command: Command) -> (&'static str, Common, RunConfig, Runner) {
    match command {
        Command::Analyze(c) => ("analyze", c.clone(), config(&c, 64), commands::analyze),
        Command::Family(c) => ("family", c.clone(), config(&c, 64), commands::family),
        Command::Moduli(c) => {
            let mut cfg = config(&c, 64);
            cfg.steps = Some(c.steps.unwrap_or(360));
            ("moduli", c, cfg, commands::moduli)
        }
        Command::Polar(c) => ("polar", c.clone(), config(&c, 64), commands::polar),
        Command::Congruence(a) => {
            let mut cfg = config(&a.common, 64);
            cfg.other = a.other;
            cfg.other_file = a.other_file;
            ("congruence", a.common, cfg, commands::congruence)
        }
        Command::Check(a) => {
            let mut cfg = config(&a.common, 33);
            cfg.all = a.all;
            cfg.family_grid = Some(a.family_grid.unwrap_or(65));
            ("check", a.common, cfg, commands::check)
        }
        Command::Catalog(c) => ("catalog", c.clone(), config(&c, 64), commands::list_catalog),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION as u8 } else { 0 });
        }
    };
    let (name, common, cfg, run) = setup(cli.command);
    let outcome = cfg.validate().and_then(|_| {
        if let Some(j) = cfg.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build_global()
                .map_err(|e| CliError::validation(format!("thread pool: {e}")))?;
        }
        run(&cfg)
    });
    let json = envelope(name, &cfg, &outcome);
    let code = match &outcome {
        Ok(o) => o.exit,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    };
    let written = match (&common.out, &outcome) {
        (Some(dir), Ok(o)) => write_files(dir, &o.stem, &json, &o.tables).map(|paths| {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }),
        (Some(dir), Err(_)) => write_files(dir, &format!("{name}.error"), &json, &[]).map(|_| ()),
        (None, Ok(o)) if matches!(common.format, Format::Csv) => {
            o.tables[0].write(io::stdout().lock()).map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))
        }
        (None, _) => io::stdout().lock().write_all(json.as_bytes()).map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e)),
    };
    if let Err(e) = written {
        eprintln!("error: {}", e.message);
        return ExitCode::from(e.code as u8);
    }
    ExitCode::from(code as u8)
}
