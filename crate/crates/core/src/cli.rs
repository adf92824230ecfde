//! Command-line driver: solve, explicit, trace, verify, export.
//!
//! Exit codes: 0 success, 1 I/O or archive error, 2 invalid configuration,
//! 3 verification failure, 4 solver failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archive::{self, ArchiveError};
use crate::dynamics::{Orbit, TorusDiagnostics, Tracer};
use crate::explicit::{ExplicitKind, HicksMoffattParams};
use crate::grid::AxiGrid;
use crate::variational::{continuation_sweep, solve_grand_state, ProblemParams, SolverOptions, StreamSolution};
use crate::verify::{run_suite, Suite, Tolerances};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("solver failed: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Verify(_) => 3,
            Self::Solver(_) => 4,
        }
    }
}

impl From<ArchiveError> for CliError {
    fn from(e: ArchiveError) -> Self {
        Self::Io(e.to_string())
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// Solver configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lambda: f64,
    pub q: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub gamma: f64,
    #[serde(rename = "Z")]
    pub z_extent: f64,
    #[serde(rename = "R")]
    pub r_extent: f64,
    pub nz: usize,
    pub nr: usize,
    pub tol_nehari: f64,
    pub tol_energy: f64,
    pub max_iter: usize,
    /// Continuation radii at the spacing of the base grid; empty for a single solve.
    pub radii: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            lambda: 1.0,
            q: 2.0,
            w: 2.0,
            gamma: 0.1,
            z_extent: 8.0,
            r_extent: 8.0,
            nz: 257,
            nr: 257,
            tol_nehari: s.tol_nehari,
            tol_energy: s.tol_energy,
            max_iter: s.max_iter,
            radii: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn problem(&self) -> ProblemParams {
        ProblemParams {
            lambda: self.lambda,
            q: self.q,
            w: self.w,
            gamma: self.gamma,
        }
    }

    pub fn grid(&self) -> Result<AxiGrid, CliError> {
        AxiGrid::new(self.z_extent, self.r_extent, self.nz, self.nr).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol_nehari: self.tol_nehari,
            tol_energy: self.tol_energy,
            max_iter: self.max_iter,
            ..SolverOptions::default()
        }
    }

    /// Checks every field before any compute.
    pub fn validate(&self) -> Result<(), CliError> {
        self.problem().validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.grid()?;
        if !(self.tol_nehari > 0.0 && self.tol_energy > 0.0) || self.max_iter == 0 {
            return Err(CliError::Config("tolerances and max_iter must be positive".into()));
        }
        if self.radii.iter().any(|r| !(*r > 0.0)) || self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::Config("radii must be positive and increasing".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Vtk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Generic,
    Hill,
    Chandrasekhar,
    Prendergast,
}

impl From<KindArg> for ExplicitKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Generic => ExplicitKind::Generic,
            KindArg::Hill => ExplicitKind::Hill,
            KindArg::Chandrasekhar => ExplicitKind::Chandrasekhar,
            KindArg::Prendergast => ExplicitKind::Prendergast,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vring", version, about = "Axisymmetric Beltrami vortex-ring laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Computes a grand state (optionally a continuation sweep) and writes an archive.
    Solve {
        /// JSON run configuration; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Extra field exports next to the archive.
        #[arg(long, value_enum)]
        format: Vec<Format>,
    },
    /// Samples a Hicks-Moffatt field into an archive.
    Explicit {
        #[arg(long = "type", value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lambda1: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lambda2: f64,
        #[arg(long = "W", default_value_t = 0.0, allow_negative_numbers = true)]
        w: f64,
        /// Half-width of the square domain in units of the sphere radius.
        #[arg(long, default_value_t = 4.0)]
        extent: f64,
        /// Nodes in r (z gets 2n − 1).
        #[arg(long, default_value_t = 129)]
        nr: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Vec<Format>,
    },
    /// Traces invariant tori of an archived solution.
    Trace {
        #[arg(long)]
        archive: PathBuf,
        /// Number of evenly spaced levels in (0, l₀).
        #[arg(long, default_value_t = 10)]
        levels: usize,
        /// Explicit levels, traced in addition to the evenly spaced ones.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        at: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Runs a verification suite on an archive.
    Verify {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Writes field exports for an archive.
    Export {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Vec<Format>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn export(sol: &StreamSolution, header_json: &str, formats: &[Format], out: &Path) -> Result<(), CliError> {
    for f in formats {
        match f {
            Format::Csv => write_file(&out.join("fields.csv"), &archive::fields_csv(sol))?,
            Format::Vtk => write_file(&out.join("fields.vtk"), &archive::fields_vtk(sol))?,
            Format::Json => write_file(&out.join("header.json"), header_json)?,
        }
    }
    Ok(())
}

fn summary_line(sol: &StreamSolution) -> String {
    let core = sol
        .core_box()
        .map_or("empty".to_string(), |b| format!("z∈[{}, {}], r∈[{}, {}]", b.z_min, b.z_max, b.r_min, b.r_max));
    format!(
        "energy {:.10e}, nehari residual {:.3e}, iterations {}, core {core}, l0 {:.6e}, k0 {:.6e}",
        sol.energy.unwrap_or(f64::NAN),
        sol.nehari_residual.unwrap_or(f64::NAN),
        sol.iterations,
        sol.l0(),
        sol.k0()
    )
}

fn cmd_solve(config: Option<&Path>, out: &Path, formats: &[Format]) -> Result<String, CliError> {
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.validate()?;
    log::info!("config {}", serde_json::to_string(&cfg).expect("config serializes"));
    let p = cfg.problem();
    let grid = cfg.grid()?;
    let opts = cfg.options();
    let solver_err = |e: crate::variational::VariationalError| CliError::Solver(e.to_string());
    ensure_dir(out)?;
    let mut report = String::new();
    let sol = if cfg.radii.is_empty() {
        solve_grand_state(&p, grid, &opts).map_err(solver_err)?
    } else {
        let sweep = continuation_sweep(&p, &cfg.radii, grid.hz, grid.hr, &opts).map_err(solver_err)?;
        let rows: Vec<serde_json::Value> = cfg
            .radii
            .iter()
            .zip(&sweep)
            .map(|(r, s)| serde_json::json!({"radius": r, "energy": s.energy, "iterations": s.iterations, "core_box": s.core_box()}))
            .collect();
        write_file(&out.join("sweep.json"), &serde_json::to_string_pretty(&rows).expect("json"))?;
        for (r, s) in cfg.radii.iter().zip(&sweep) {
            report.push_str(&format!("R = {r}: {}\n", summary_line(s)));
        }
        sweep.into_iter().last().expect("nonempty sweep")
    };
    archive::write_archive(&out.join("solution.vra"), &sol, "solver")?;
    let header = serde_json::to_string_pretty(&archive::ArchiveHeader::for_solution(&sol, "solver")).expect("json");
    export(&sol, &header, formats, out)?;
    report.push_str(&summary_line(&sol));
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn cmd_explicit(
    kind: KindArg,
    lambda1: f64,
    lambda2: f64,
    w: f64,
    extent: f64,
    nr: usize,
    out: &Path,
    formats: &[Format],
) -> Result<String, CliError> {
    let kind: ExplicitKind = kind.into();
    let p = HicksMoffattParams::new(kind, lambda1, lambda2, w).map_err(|e| CliError::Config(e.to_string()))?;
    if !(extent > 0.0) {
        return Err(CliError::Config(format!("extent must be positive, got {extent}")));
    }
    let e = extent * p.a;
    let grid = AxiGrid::new(e, e, 2 * nr.max(2) - 1, nr).map_err(|e| CliError::Config(e.to_string()))?;
    log::info!("explicit {} {:?} on {:?}", kind.name(), p, grid);
    let sol = StreamSolution::from_explicit(&p, grid);
    ensure_dir(out)?;
    let source = format!("explicit:{}", kind.name());
    archive::write_archive(&out.join("solution.vra"), &sol, &source)?;
    let header = serde_json::to_string_pretty(&archive::ArchiveHeader::for_solution(&sol, &source)).expect("json");
    export(&sol, &header, formats, out)?;
    Ok(format!("{} vortex: a = {:.10}, kappa = {:.10}, l0 = {:.6e}", kind.name(), p.a, p.kappa, sol.l0()))
}

#[derive(Debug, Serialize)]
struct TraceReport {
    l0: f64,
    linearized_period: f64,
    levels: Vec<TorusDiagnostics>,
    skipped: Vec<SkipNote>,
}

#[derive(Debug, Serialize)]
struct SkipNote {
    level: f64,
    note: String,
}

fn orbit_csv(o: &Orbit) -> String {
    let mut s = String::from("z,r\n");
    for (z, r) in &o.points {
        let mut b = ryu::Buffer::new();
        s.push_str(b.format(*z));
        s.push(',');
        s.push_str(b.format(*r));
        s.push('\n');
    }
    s
}

fn cmd_trace(path: &Path, levels: usize, at: &[f64], out: &Path) -> Result<String, CliError> {
    let (_, sol) = archive::read_archive(path)?;
    let tracer = Tracer::new(&sol).map_err(|e| CliError::Solver(e.to_string()))?;
    let l0 = tracer.l0();
    let mut ls: Vec<f64> = (1..=levels).map(|m| l0 * m as f64 / (levels + 1) as f64).collect();
    ls.extend_from_slice(at);
    ensure_dir(out)?;
    let mut report = TraceReport {
        l0,
        linearized_period: tracer.center.period,
        levels: Vec::new(),
        skipped: Vec::new(),
    };
    use rayon::prelude::*;
    let results: Vec<_> = ls
        .par_iter()
        .map(|&l| (l, tracer.trace(l).and_then(|o| Ok((tracer.theta_increment(l)?, o)))))
        .collect();
    for (n, (l, r)) in results.into_iter().enumerate() {
        match r {
            Ok((d, orbit)) => {
                write_file(&out.join(format!("orbit_{n:03}.csv")), &orbit_csv(&orbit))?;
                report.levels.push(d);
            }
            Err(e) => report.skipped.push(SkipNote {
                level: l,
                note: e.to_string(),
            }),
        }
    }
    write_file(&out.join("tori.json"), &serde_json::to_string_pretty(&report).expect("json"))?;
    let mut text = format!("l0 = {l0:.6e}, linearized period {:.6e}\n", tracer.center.period);
    for d in &report.levels {
        text.push_str(&format!(
            "l = {:.6e}: period {:.6e}, Theta {:.10e}, ratio {:.10e}, {:?}\n",
            d.level, d.period, d.theta_increment, d.rotation_ratio, d.classification
        ));
    }
    for s in &report.skipped {
        text.push_str(&format!("l = {:.6e}: skipped ({})\n", s.level, s.note));
    }
    Ok(text.trim_end().to_string())
}

fn cmd_verify(path: &Path, suite: &str, out: &Path) -> Result<String, CliError> {
    let suite = Suite::parse(suite).ok_or_else(|| CliError::Config(format!("unknown suite `{suite}`")))?;
    let (_, sol) = archive::read_archive(path)?;
    let rep = run_suite(&sol, suite, &Tolerances::default());
    ensure_dir(out)?;
    write_file(&out.join("report.json"), &rep.to_json())?;
    let text = rep.to_string();
    write_file(&out.join("report.txt"), &text)?;
    if rep.passed() {
        Ok(text)
    } else {
        let failed: Vec<&str> = rep
            .checks
            .iter()
            .filter(|c| c.status == crate::verify::Status::Fail)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::Verify(format!("{text}\nfailed: {}", failed.join(", "))))
    }
}

fn cmd_export(path: &Path, formats: &[Format], out: &Path) -> Result<String, CliError> {
    let (header, sol) = archive::read_archive(path)?;
    ensure_dir(out)?;
    export(&sol, &serde_json::to_string_pretty(&header).expect("json"), formats, out)?;
    Ok(format!("exported {} format(s) to {}", formats.len(), out.display()))
}

/// Runs one parsed command and returns the text printed on success.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Solve { config, out, format } => cmd_solve(config.as_deref(), &out, &format),
        Command::Explicit {
            kind,
            lambda1,
            lambda2,
            w,
            extent,
            nr,
            out,
            format,
        } => cmd_explicit(kind, lambda1, lambda2, w, extent, nr, &out, &format),
        Command::Trace { archive, levels, at, out } => cmd_trace(&archive, levels, &at, &out),
        Command::Verify { archive, suite, out } => cmd_verify(&archive, &suite, &out),
        Command::Export { archive, format, out } => cmd_export(&archive, &format, &out),
    }
}

/// Caps rayon's worker pool from `VRING_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("VRING_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("VRING_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}
