//! `netkin` command line: run, compare and check scenarios.
//!
//! Exit codes: 0 ok, 1 check failure or solver abort, 2 usage or I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::coupling::{
    cattaneo_conditions, epsilon_limit_check, half_moment_conditions, kinetic_coupling_matrix,
};
use crate::engine::BoundaryCondition;
use crate::error::Error;
use crate::models::ModelKind;
use crate::scenarios::{self, one_to_one_difference, ModelSpec, RunDiagnostics, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "netkin", version, about = "Chemotaxis models on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write per-edge snapshots, a mass series and a manifest.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long, default_value = "netkin-out")]
        out: PathBuf,
    },
    /// Run several models on one scenario and compare their final densities.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also write the tables to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant checks on a scenario (tripod with all models by default).
    Check {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Scenario config document (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: interval, tripod or large.
    #[arg(long)]
    preset: Option<String>,
    /// Model(s): kinetic, half-moment, cattaneo[:variant], keller-segel or all.
    /// Repeat the flag or separate by commas.
    #[arg(long)]
    model: Vec<String>,
    /// Diffusive scaling ε, at most λ/α.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Uniform target cell width.
    #[arg(long)]
    dx: Option<f64>,
    /// Final time.
    #[arg(long)]
    tend: Option<f64>,
    /// Number of output times after t = 0.
    #[arg(long)]
    snapshots: Option<usize>,
}

enum Failure {
    Usage(String),
    Solver(Error),
    Checks,
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

/// Split a model list on commas outside brackets.
fn split_models(arg: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in arg.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&arg[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&arg[start..]);
    out.into_iter()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_models(args: &[String]) -> Result<Vec<ModelSpec>, Failure> {
    let mut models = Vec::new();
    for name in args.iter().flat_map(|a| split_models(a)) {
        if name == "all" {
            models.extend(ModelSpec::all());
        } else {
            models.push(name.parse().map_err(usage)?);
        }
    }
    Ok(models)
}

impl ScenarioArgs {
    fn resolve(&self, default_preset: Option<&str>) -> Result<ScenarioConfig, Failure> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::from_file(path).map_err(usage)?,
            (None, Some(name)) => scenarios::preset(name).map_err(usage)?,
            (None, None) => match default_preset {
                Some(name) => scenarios::preset(name).map_err(usage)?,
                None => {
                    return Err(Failure::Usage(
                        "either --config or --preset is required".into(),
                    ))
                }
            },
        };
        let models = parse_models(&self.model)?;
        if !models.is_empty() {
            config.models = models;
        }
        if let Some(eps) = self.epsilon {
            config.epsilon = eps;
        }
        if let Some(dx) = self.dx {
            config.dx = Some(dx);
        }
        if let Some(t) = self.tend {
            config.t_end = t;
        }
        if let Some(n) = self.snapshots {
            config.snapshots = n;
        }
        config.validate().map_err(usage)?;
        Ok(config)
    }
}

/// Full double precision, 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("NETKIN_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::Usage(format!(
                "NETKIN_THREADS must be a positive integer, got '{value}'"
            ))
        })?;
    // a pool set up earlier in this process wins; the cap is best effort then
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn write_file(dir: &Path, name: &str, body: &str, files: &mut Vec<String>) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    files.push(name.to_string());
    Ok(())
}

fn mass_csv(diag: &RunDiagnostics) -> String {
    let mut s = String::from("t,model,total_mass\n");
    for r in &diag.runs {
        let label = r.model.label();
        for &(t, m) in &r.mass {
            let _ = writeln!(s, "{},{label},{}", num(t), num(m));
        }
    }
    s
}

fn edge_csv(diag: &RunDiagnostics, run: usize, edge: usize) -> String {
    let r = &diag.runs[run];
    let id = diag.network.edges()[edge].id;
    let dx = diag.dx[edge];
    let names: Vec<&str> = r.snapshots[0].edges[edge]
        .columns
        .iter()
        .map(|c| c.0)
        .collect();
    let mut s = format!("t,edge,x,{},m\n", names.join(","));
    for snap in &r.snapshots {
        let e = &snap.edges[edge];
        for i in 0..e.m.len() {
            let _ = write!(s, "{},{id},{}", num(snap.time), num((i as f64 + 0.5) * dx));
            for (_, col) in &e.columns {
                let _ = write!(s, ",{}", num(col[i]));
            }
            let _ = writeln!(s, ",{}", num(e.m[i]));
        }
    }
    s
}

#[derive(Serialize)]
struct ManifestRun {
    model: String,
    dt: f64,
    steps: u64,
    final_mass: f64,
}

/// Record of one `run`: the resolved config (also written as
/// `config.json`), solver version, steps taken and the files produced.
#[derive(Serialize)]
struct RunManifest<'a> {
    solver: &'static str,
    version: &'static str,
    config: &'a ScenarioConfig,
    runs: Vec<ManifestRun>,
    wall_time_seconds: f64,
    files: Vec<String>,
}

fn cmd_run(args: &ScenarioArgs, out: &Path) -> Result<(), Failure> {
    let config = args.resolve(None)?;
    configure_threads()?;
    let start = Instant::now();
    let diag = scenarios::run(&config).map_err(Failure::Solver)?;
    let wall = start.elapsed().as_secs_f64();
    fs::create_dir_all(out).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    let mut files = Vec::new();
    for (k, r) in diag.runs.iter().enumerate() {
        for (e, edge) in diag.network.edges().iter().enumerate() {
            let name = format!("{}_edge{}.csv", r.model.label(), edge.id);
            write_file(out, &name, &edge_csv(&diag, k, e), &mut files)?;
        }
    }
    write_file(out, "mass.csv", &mass_csv(&diag), &mut files)?;
    write_file(out, "config.json", &config.to_json(), &mut files)?;
    let manifest = RunManifest {
        solver: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: &config,
        runs: diag
            .runs
            .iter()
            .map(|r| ManifestRun {
                model: r.model.to_string(),
                dt: r.dt,
                steps: r.steps,
                final_mass: r.final_mass(),
            })
            .collect(),
        wall_time_seconds: wall,
        files: files.clone(),
    };
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    body.push('\n');
    write_file(out, "manifest.json", &body, &mut Vec::new())?;
    for r in &diag.runs {
        println!(
            "{}: {} steps of {:e}, total mass {} at t = {}",
            r.model,
            r.steps,
            r.dt,
            num(r.final_mass()),
            config.t_end
        );
    }
    println!("wrote {} files to {}", files.len() + 1, out.display());
    Ok(())
}

fn ordering_summary(diag: &RunDiagnostics) -> String {
    let mut runs: Vec<(String, f64)> = diag
        .runs
        .iter()
        .map(|r| (r.model.to_string(), r.final_mass()))
        .collect();
    runs.sort_by(|a, b| b.1.total_cmp(&a.1));
    runs.iter()
        .map(|(m, v)| format!("M({m}) = {v:.6}"))
        .collect::<Vec<_>>()
        .join(" > ")
}

fn cmd_compare(args: &ScenarioArgs, out: Option<&Path>) -> Result<(), Failure> {
    let config = args.resolve(None)?;
    configure_threads()?;
    let diag = scenarios::run(&config).map_err(Failure::Solver)?;
    println!("L1 distances at t = {}:", config.t_end);
    for d in &diag.distances {
        println!("  {:<36} {:<36} {:.6e}", d.a, d.b, d.l1);
    }
    let summary = ordering_summary(&diag);
    println!("final mass ordering: {summary}");
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
        let mut files = Vec::new();
        // model strings may contain commas, so the table uses labels
        let mut csv = String::from("a,b,l1\n");
        for (i, a) in diag.runs.iter().enumerate() {
            for b in &diag.runs[i + 1..] {
                let l1 = diag
                    .distance(&a.model.to_string(), &b.model.to_string())
                    .unwrap_or(f64::NAN);
                let _ = writeln!(csv, "{},{},{}", a.model.label(), b.model.label(), num(l1));
            }
        }
        write_file(dir, "distances.csv", &csv, &mut files)?;
        write_file(dir, "mass.csv", &mass_csv(&diag), &mut files)?;
        write_file(dir, "ordering.txt", &format!("{summary}\n"), &mut files)?;
    }
    Ok(())
}

struct CheckRow {
    name: String,
    pass: Option<bool>,
    detail: String,
}

fn cmd_check(args: &ScenarioArgs) -> Result<(), Failure> {
    let mut config = args.resolve(Some("tripod"))?;
    if args.config.is_none() && args.preset.is_none() && args.model.is_empty() {
        config.models = ModelSpec::all();
    }
    configure_threads()?;
    let net = config.network().map_err(usage)?;
    let mut rows = Vec::new();

    let closed = config
        .boundaries
        .iter()
        .all(|b| b.condition == BoundaryCondition::Neumann);
    let diag = scenarios::run(&config).map_err(Failure::Solver)?;
    rows.push(CheckRow {
        name: "finite solution".into(),
        pass: Some(true),
        detail: format!(
            "{} model runs reached t = {}",
            diag.runs.len(),
            config.t_end
        ),
    });
    for r in &diag.runs {
        let m0 = r.mass[0].1;
        let drift = r
            .mass
            .iter()
            .map(|&(_, m)| (m - m0).abs())
            .fold(0.0, f64::max);
        let (pass, tol) = if r.model.kind == ModelKind::KellerSegel {
            (drift <= 1e-12, "1e-12 absolute")
        } else {
            (drift <= 1e-12 * m0, "1e-12 relative")
        };
        rows.push(CheckRow {
            name: format!("mass conservation ({})", r.model),
            pass: closed.then_some(pass),
            detail: if closed {
                format!("max drift {drift:.3e}, tolerance {tol}")
            } else {
                "open boundaries, skipped".into()
            },
        });
    }
    if let Some(r) = diag.run_of(ModelKind::Kinetic) {
        let p = config.params(ModelKind::Kinetic).map_err(usage)?;
        let kinetic_speeds = (p.phi * p.epsilon * p.epsilon - 1.0).abs() < 1e-12;
        let min_f = r.min_distribution.unwrap_or(f64::NAN);
        rows.push(CheckRow {
            name: "positivity (kinetic)".into(),
            pass: kinetic_speeds.then_some(min_f >= -1e-13),
            detail: if kinetic_speeds {
                format!("min f = {min_f:.3e}")
            } else {
                "only guaranteed for phi = 1/eps^2, skipped".into()
            },
        });
    }
    let degree = net
        .nodes()
        .iter()
        .map(|n| n.degree())
        .max()
        .unwrap_or(0)
        .max(3);
    let a = kinetic_coupling_matrix(degree).map_err(usage)?;
    let [hm_rho, hm_q] = half_moment_conditions(&a);
    let blocks = [
        (
            "cattaneo: rho continuous, sum q = 0",
            cattaneo_conditions(&a),
        ),
        ("half-moment: rho continuous, sum rho_hat = 0", hm_rho),
        ("half-moment: q_hat continuous, sum q = 0", hm_q),
    ];
    for (name, block) in blocks {
        let lim = epsilon_limit_check(&block, 0.0).map_err(usage)?;
        let res = lim.limit_residual();
        rows.push(CheckRow {
            name: format!("limit {name} (degree {degree})"),
            pass: Some(res <= 1e-14 && lim.rank() == degree),
            detail: format!("residual {res:.3e}, rank {}", lim.rank()),
        });
    }
    for m in &config.models {
        let params = config.params(m.kind).map_err(usage)?;
        let d = one_to_one_difference(m, params, config.velocities.min(16), 20, 0.05, true)
            .map_err(Failure::Solver)?;
        rows.push(CheckRow {
            name: format!("one-to-one equivalence ({m})"),
            pass: Some(d <= 1e-12),
            detail: format!("max difference {d:.3e}"),
        });
    }

    let mut failed = false;
    for row in &rows {
        let tag = match row.pass {
            Some(true) => "PASS",
            Some(false) => {
                failed = true;
                "FAIL"
            }
            None => "SKIP",
        };
        println!("{tag}  {:<58} {}", row.name, row.detail);
    }
    if failed {
        Err(Failure::Checks)
    } else {
        Ok(())
    }
}

/// Parse `args` (including the program name), execute and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Run { scenario, out } => cmd_run(scenario, out),
        Command::Compare { scenario, out } => cmd_compare(scenario, out.as_deref()),
        Command::Check { scenario } => cmd_check(scenario),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("netkin: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Solver(e)) => {
            eprintln!("netkin: solver aborted: {e}");
            EXIT_FAILURE
        }
        Err(Failure::Checks) => {
            eprintln!("netkin: some checks failed");
            EXIT_FAILURE
        }
    }
}
