//! `qgres`: spectra, resonances, Fermi golden rule rates, trajectories and
//! quasimode checks for quantum graphs with leads.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when a solver fails,
//! 1 when the output cannot be written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qgres_core::fgr::fgr_coefficients_with;
use qgres_core::quasimode::{quasimode_report, require_embedded, DEFAULT_GAMMA};
use qgres_core::secular::Window;
use qgres_core::tracker::{track_with, uniform_grid, TrackOptions};
use qgres_core::{
    adot, eigenfunction, find_spectral_points, fixtures, lengths_at, output, validate_graph, Complex64, Error,
    MetricGraph, PerturbationFamily, RawGraph, RawPerturbation, SearchOptions, SpectralKind, SpectralPoint,
};

#[derive(Parser)]
#[command(name = "qgres", version, about = "Resonances and Fermi golden rule for quantum graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embedded eigenvalues in a window, as `lambda,multiplicity` CSV.
    Eigs(Common),
    /// All spectral points in a window, as CSV.
    Resonances(Common),
    /// First-order shift and decay rate at an embedded eigenvalue, as JSON.
    Fgr(Common),
    /// Trajectory of a resonance born from an embedded eigenvalue, as CSV.
    Track(Common),
    /// Shifted-cutoff quasimode and resonance proximity per `t`, as JSON.
    Quasimode(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Graph description (JSON).
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    graph: Option<PathBuf>,
    /// Built-in graph: fig2, example2, halfline or cycle:K.
    #[arg(long)]
    fixture: Option<String>,
    /// Perturbation family (JSON).
    #[arg(long, conflicts_with = "family")]
    perturbation: Option<PathBuf>,
    /// Built-in family of the fixture: a-d for fig2, a-c for example2.
    #[arg(long)]
    family: Option<char>,
    /// Search window `re_min,re_max[,im_min,im_max]`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    window: Option<Vec<f64>>,
    /// Embedded eigenvalue to start from (fgr, track, quasimode).
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Perturbation parameter(s): one value for resonances, a list for quasimode.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    t: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    tmax: f64,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output directory; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Solver(String),
    Output(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Input(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn load_graph(c: &Common) -> Outcome<MetricGraph> {
    match (&c.graph, &c.fixture) {
        (Some(path), _) => Ok(validate_graph(&RawGraph::from_json(&read(path)?)?)?),
        (None, Some(name)) => fixtures::by_name(name).ok_or_else(|| invalid(format!("unknown fixture `{name}`"))),
        (None, None) => Err(invalid("one of --graph or --fixture is required")),
    }
}

fn load_family(c: &Common, g: &MetricGraph) -> Outcome<PerturbationFamily> {
    match (&c.perturbation, c.family) {
        (Some(path), _) => Ok(PerturbationFamily::new(g, &RawPerturbation::from_json(&read(path)?)?)?),
        (None, Some(case)) => {
            let fixture = c.fixture.as_deref().ok_or_else(|| invalid("--family needs --fixture"))?;
            fixtures::family_by_name(fixture, g, case)
                .ok_or_else(|| invalid(format!("fixture `{fixture}` has no family `{case}`")))
        }
        (None, None) => Err(invalid("one of --perturbation or --family is required")),
    }
}

fn window(c: &Common, default: [f64; 4]) -> Outcome<Window> {
    let w = match c.window.as_deref() {
        None => default,
        Some(&[a, b]) => [a, b, default[2], default[3]],
        Some(&[a, b, lo, hi]) => [a, b, lo, hi],
        Some(v) => return Err(invalid(format!("--window takes 2 or 4 numbers, got {}", v.len()))),
    };
    Ok(Window::new(w[0], w[1], w[2], w[3])?)
}

fn search(c: &Common) -> Outcome<SearchOptions> {
    if !(c.tol > 0.0) {
        return Err(invalid("--tol must be positive"));
    }
    Ok(SearchOptions { tol: c.tol, ..Default::default() })
}

/// The embedded eigenvalue closest to `--lambda`.
fn seed(c: &Common, g: &MetricGraph) -> Outcome<SpectralPoint> {
    let lambda = c.lambda.ok_or_else(|| invalid("--lambda is required"))?;
    let w = Window::around(Complex64::new(lambda, 0.0), 0.05)?;
    let found = find_spectral_points(g, &w, &search(c)?)?;
    let sp = found
        .into_iter()
        .filter(|p| p.kind == SpectralKind::EmbeddedEigenvalue)
        .min_by(|a, b| (a.lambda.re - lambda).abs().total_cmp(&(b.lambda.re - lambda).abs()))
        .ok_or(Error::NotEmbedded)?;
    require_embedded(&sp)?;
    Ok(sp)
}

fn eigs(c: &Common) -> Outcome<(String, String)> {
    let g = load_graph(c)?;
    let pts = find_spectral_points(&g, &window(c, [0.1, 10.0, -0.25, 0.25])?, &search(c)?)?;
    Ok(("eigenvalues.csv".into(), output::eigenvalues_csv(&pts)))
}

fn resonances(c: &Common) -> Outcome<(String, String)> {
    let mut g = load_graph(c)?;
    if let Some(ts) = &c.t {
        let &[t] = ts.as_slice() else { return Err(invalid("resonances takes a single --t")) };
        g = lengths_at(&load_family(c, &g)?, &g, t)?;
    }
    let pts = find_spectral_points(&g, &window(c, [0.1, 10.0, -1.0, 0.25])?, &search(c)?)?;
    Ok(("resonances.csv".into(), output::resonances_csv(&pts)))
}

fn fgr(c: &Common) -> Outcome<(String, String)> {
    let g = load_graph(c)?;
    let p = load_family(c, &g)?;
    let sp = seed(c, &g)?;
    let report = fgr_coefficients_with(&g, &sp, &adot(&p, &g), &Default::default())?;
    Ok(("fgr.json".into(), output::to_json(&report)?))
}

fn track(c: &Common) -> Outcome<(String, String)> {
    if c.steps < 4 {
        return Err(invalid("--steps must be at least 4"));
    }
    if !(c.tmax.is_finite() && c.tmax != 0.0) {
        return Err(invalid("--tmax must be finite and nonzero"));
    }
    let g = load_graph(c)?;
    let p = load_family(c, &g)?;
    let sp = seed(c, &g)?;
    let report = fgr_coefficients_with(&g, &sp, &adot(&p, &g), &Default::default())?;
    let mut grid = uniform_grid(c.tmax.abs(), c.steps, false);
    if c.tmax < 0.0 {
        grid = grid.iter().rev().map(|t| -t).collect();
    }
    let opts = TrackOptions { tol: c.tol.min(1e-12), ..Default::default() };
    let mut traj = track_with(&g, &p, &sp, &grid, &opts)?;
    traj.set_model(&report);
    Ok(("trajectory.csv".into(), output::trajectory_csv(&traj)?))
}

fn quasimode(c: &Common) -> Outcome<(String, String)> {
    let g = load_graph(c)?;
    let p = load_family(c, &g)?;
    let sp = seed(c, &g)?;
    let u = eigenfunction(&g, &sp)?;
    let ts = c.t.clone().unwrap_or_else(|| vec![2.5e-3, 5e-3, 1e-2]);
    let reports = ts
        .iter()
        .map(|&t| quasimode_report(&g, &p, t, sp.lambda.re, &u, c.gamma))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(("quasimode.json".into(), output::to_json(&reports)?))
}

/// Writes through a temporary file in `dir` so a failed run leaves no
/// partial output behind.
fn write_atomic(dir: &Path, name: &str, text: &str) -> Outcome<()> {
    let fail = |e: &dyn std::fmt::Display| Failure::Output(format!("{}: {e}", dir.join(name).display()));
    fs::create_dir_all(dir).map_err(|e| fail(&e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| fail(&e))?;
    tmp.persist(dir.join(name)).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    let (c, (name, text)) = match &cli.command {
        Command::Eigs(c) => (c, eigs(c)?),
        Command::Resonances(c) => (c, resonances(c)?),
        Command::Fgr(c) => (c, fgr(c)?),
        Command::Track(c) => (c, track(c)?),
        Command::Quasimode(c) => (c, quasimode(c)?),
    };
    match &c.out {
        Some(dir) => write_atomic(dir, &name, &text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Output(e.to_string())),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Output(msg)) => {
            eprintln!("output error: {msg}");
            ExitCode::from(1)
        }
    }
}
