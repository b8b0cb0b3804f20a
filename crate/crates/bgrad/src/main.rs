//! Command-line interface: spectral oracles, path diagnostics, the Monte
//! Carlo pipelines and the verification suites.
//!
//! Exit codes: 0 = pass, 1 = check failure, 2 = configuration error.

use bgrad::harness::{run_experiment, verify_all, ExperimentConfig, OUT_ENV};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bgrad", version, about = "Martingale-transform laboratory for Riesz and Beurling-Ahlfors transforms on model spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Shared {
    /// Space key: torus1 | torus2 | gauss1 | gauss2 | quartic1 | sphere2
    #[arg(long)]
    space: Option<String>,
    /// Ornstein-Uhlenbeck diagonal, comma separated (gauss spaces)
    #[arg(long)]
    cov: Option<String>,
    /// Named test field (cos, cos+halfsin2, h1, h2, psi1, psi2, y10)
    #[arg(long)]
    field: Option<String>,
    /// Reference one-form (cosx-dx | cosy-dx)
    #[arg(long)]
    form: Option<String>,
    /// Killing rate a >= 0
    #[arg(long)]
    a: Option<f64>,
    /// Starting height of the half-line coordinate
    #[arg(long)]
    y: Option<f64>,
    /// Heat horizon (spectral clock)
    #[arg(long)]
    t_horizon: Option<f64>,
    /// Exponent list, comma separated
    #[arg(long)]
    p: Option<String>,
    /// Number of Monte Carlo paths
    #[arg(long)]
    paths: Option<u64>,
    /// Time step
    #[arg(long)]
    dt: Option<f64>,
    /// Bins per axis
    #[arg(long)]
    bins: Option<usize>,
    /// Base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $BGRAD_OUT or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Payoff variant: corrected | uncorrected | both
    #[arg(long)]
    variant: Option<String>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Flat key-value config file; command-line flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print eigenvalues and evaluate a field and its Poisson extension
    Oracle(Shared),
    /// Hodge projection oracles and the projection-identity residuals
    BaOracle(Shared),
    /// Path diagnostics: absorption-time histogram, censoring, m traces
    Paths(Shared),
    /// Riesz transform Monte Carlo against the spectral oracle
    RieszMc(Shared),
    /// Riesz pipeline with the time-reversed payoff alongside
    RieszReversed(Shared),
    /// Beurling-Ahlfors Monte Carlo on the flat 2-torus
    BaMc(Shared),
    /// Littlewood-Paley / Green-function occupation check
    LpCheck(Shared),
    /// Operator-norm search and bound table
    Norms(Shared),
    /// Run a verification suite (fast | smoke | negative-control)
    Verify {
        #[arg(long, default_value = "fast")]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Re-render SVG plots from an output directory's estimate CSVs
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn build_config(kind: &str, shared: &Shared) -> Result<ExperimentConfig, bgrad::Error> {
    let mut cfg = match &shared.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            ExperimentConfig::from_config_text(&text)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.kind = kind.to_string();
    cfg.id = format!("{kind}");
    if let Some(v) = &shared.space {
        cfg.space = v.clone();
    }
    if let Some(v) = &shared.cov {
        cfg.cov = Some(
            v.split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| bgrad::Error::Config(format!("bad cov entry `{x}`")))
                })
                .collect::<Result<Vec<f64>, _>>()?,
        );
    }
    if let Some(v) = &shared.field {
        cfg.field = v.clone();
    }
    if let Some(v) = &shared.form {
        cfg.form = v.clone();
    }
    if let Some(v) = shared.a {
        cfg.a = v;
    }
    if let Some(v) = shared.y {
        cfg.y = v;
    }
    if let Some(v) = shared.t_horizon {
        cfg.t_horizon = v;
    }
    if let Some(v) = &shared.p {
        cfg.p_list = v
            .split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| bgrad::Error::Config(format!("bad p entry `{x}`")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
    }
    if let Some(v) = shared.paths {
        cfg.paths = v;
    }
    if let Some(v) = shared.dt {
        cfg.dt = v;
    }
    if let Some(v) = shared.bins {
        cfg.bins = v;
    }
    if let Some(v) = shared.seed {
        cfg.seed = v;
    }
    if let Some(v) = &shared.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = &shared.variant {
        cfg.variant = v.clone();
    }
    if let Some(v) = shared.workers {
        cfg.workers = v;
    }
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn init_workers(n: usize) {
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_workers(_n: usize) {}

fn dispatch(kind: &str, shared: &Shared) -> Result<bool, bgrad::Error> {
    let cfg = build_config(kind, shared)?;
    init_workers(cfg.workers);
    let report = run_experiment(&cfg)?;
    println!("{}", report.to_json());
    Ok(report.pass)
}

fn rerender(out: &PathBuf) -> Result<(), bgrad::Error> {
    // Regenerate plots from CSVs alone: read estimate CSVs, re-emit SVG.
    let mut count = 0usize;
    for entry in walk_csvs(out)? {
        let text = std::fs::read_to_string(&entry)?;
        let mut pts = Vec::new();
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < 11 {
                continue;
            }
            let get = |i: usize| cols[i].parse::<f64>().unwrap_or(f64::NAN);
            pts.push((get(0), get(2), get(4), get(7)));
        }
        if pts.is_empty() {
            continue;
        }
        let svg = simple_svg(&pts);
        let svg_path = entry.with_extension("svg");
        std::fs::write(&svg_path, svg)?;
        count += 1;
    }
    eprintln!("re-rendered {count} plots under {}", out.display());
    Ok(())
}

fn walk_csvs(root: &PathBuf) -> Result<Vec<PathBuf>, bgrad::Error> {
    let mut out = Vec::new();
    let mut stack = vec![root.clone()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv")
                && std::fs::read_to_string(&path)
                    .map(|t| t.starts_with("bin_center_0"))
                    .unwrap_or(false)
            {
                out.push(path);
            }
        }
    }
    Ok(out)
}

fn simple_svg(pts: &[(f64, f64, f64, f64)]) -> String {
    use std::fmt::Write;
    let (w, h, m) = (720.0, 420.0, 50.0);
    let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for p in pts {
        ymin = ymin.min(p.1 - 2.0 * p.2).min(if p.3.is_nan() { p.1 } else { p.3 });
        ymax = ymax.max(p.1 + 2.0 * p.2).max(if p.3.is_nan() { p.1 } else { p.3 });
    }
    let sx = |x: f64| m + (x - xmin) / (xmax - xmin).max(1e-12) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - ymin) / (ymax - ymin).max(1e-12) * (h - 2.0 * m);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\"><rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>"
    );
    let mut path = String::from("M");
    for p in pts {
        if !p.3.is_nan() {
            let _ = write!(path, " {:.1},{:.1}", sx(p.0), sy(p.3));
        }
    }
    let _ = write!(svg, "<path d=\"{path}\" fill=\"none\" stroke=\"#1f77b4\"/>");
    for p in pts {
        let _ = write!(
            svg,
            "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"#d62728\"/><circle cx=\"{0:.1}\" cy=\"{3:.1}\" r=\"2\" fill=\"#d62728\"/>",
            sx(p.0),
            sy(p.1 - 2.0 * p.2),
            sy(p.1 + 2.0 * p.2),
            sy(p.1)
        );
    }
    svg.push_str("</svg>");
    svg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<bool, bgrad::Error> = match &cli.command {
        Command::Oracle(s) => dispatch("oracle", s),
        Command::BaOracle(s) => dispatch("ba-oracle", s),
        Command::Paths(s) => dispatch("paths", s),
        Command::RieszMc(s) => dispatch("riesz-mc", s),
        Command::RieszReversed(s) => dispatch("riesz-reversed", s),
        Command::BaMc(s) => dispatch("ba-mc", s),
        Command::LpCheck(s) => dispatch("lp-check", s),
        Command::Norms(s) => dispatch("norms", s),
        Command::Verify { suite, out, workers } => {
            init_workers(workers.unwrap_or(0));
            let out_dir = out
                .clone()
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from));
            verify_all(suite, out_dir.as_deref()).map(|report| {
                println!("{}", report.to_json());
                report.pass
            })
        }
        Command::Report { out } => rerender(out).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
