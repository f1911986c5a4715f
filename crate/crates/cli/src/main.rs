//! `cdt`: solve, sweep and verify canonical dual problems from config files.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdt_core::pipeline::{self, assemble, point_loads, solve_one, Solution};
use cdt_core::verify::verify;
use cdt_core::{CdtError, ProblemSpec, ResidualConvention};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "cdt",
    version,
    about = "Canonical duality solver for nonconvex hyperelastic potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every node, reconstruct each branch and write CSV reports.
    Solve(Common),
    /// Root structure and dual energies over a range of load magnitudes.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        tau_min: f64,
        #[arg(long)]
        tau_max: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// Run the verification checks; exit 1 if any fails.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Solve nodes on one thread (bit-reproducible reference path).
    #[arg(long)]
    serial: bool,
    /// `derived` or `paper-eq45` (the unscaled curve).
    #[arg(long, default_value = "derived")]
    residual_convention: ResidualConvention,
    #[arg(long)]
    tol: Option<f64>,
}

enum Failure {
    Verify,
    Config(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl From<CdtError> for Failure {
    fn from(e: CdtError) -> Self {
        match e {
            CdtError::Config { .. } | CdtError::InvalidParameter(_) => Failure::Config(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Solver(format!("{}: {e}", path.display()))
}

fn load_spec(c: &Common) -> Result<ProblemSpec, Failure> {
    let text = fs::read_to_string(&c.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", c.config.display())))?;
    let mut spec = ProblemSpec::parse(&text)?;
    spec.solver.convention = c.residual_convention;
    if let Some(tol) = c.tol {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Failure::Config(format!("--tol must be positive, got {tol}")));
        }
        spec.solver.tol = tol;
    }
    if let Ok(seed) = std::env::var("CDT_SEED") {
        spec.oracle.seed = seed
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("CDT_SEED `{seed}` is not an unsigned integer")))?;
    }
    Ok(spec)
}

fn run_solve(spec: &ProblemSpec, serial: bool) -> Result<Solution, Failure> {
    let loads = point_loads(spec)?;
    let roots = if serial {
        pipeline::solve_points(spec, &loads)?
    } else {
        loads
            .par_iter()
            .map(|l| solve_one(spec, l))
            .collect::<cdt_core::Result<Vec<_>>>()?
    };
    Ok(assemble(spec, loads, roots)?)
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), Failure> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(&path, e))
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn cmd_solve(c: &Common) -> Result<(), Failure> {
    let spec = load_spec(c)?;
    let sol = run_solve(&spec, c.serial)?;
    prepare_out(&c.out)?;
    write_file(&c.out, "roots.csv", |w| sol.write_roots_csv(w))?;
    for b in &sol.branches {
        if b.reconstruction().is_some() {
            write_file(&c.out, &format!("fields_u_{}.csv", b.index), |w| {
                sol.write_displacement_csv(b, w)
            })?;
        }
    }
    write_file(&c.out, "energy_report.csv", |w| sol.write_energy_csv(w))?;
    let mut report = Vec::new();
    sol.write_report(&spec, &mut report)
        .map_err(|e| Failure::Solver(e.to_string()))?;
    write_file(&c.out, "report.txt", |w| w.write_all(&report))?;
    io::stdout()
        .write_all(&report)
        .map_err(|e| Failure::Solver(e.to_string()))?;
    Ok(())
}

fn cmd_sweep(c: &Common, tau_min: f64, tau_max: f64, steps: usize) -> Result<(), Failure> {
    if steps < 2 {
        return Err(Failure::Config(format!("--steps must be at least 2, got {steps}")));
    }
    let spec = load_spec(c)?;
    let rows = pipeline::sweep(&spec, tau_min, tau_max, steps)?;
    prepare_out(&c.out)?;
    write_file(&c.out, "sweep.csv", |w| pipeline::write_sweep_csv(w, &rows))?;
    let mut buf = Vec::new();
    pipeline::write_hcurve_csv(&spec, 601, &mut buf)?;
    write_file(&c.out, "hcurve.csv", |w| w.write_all(&buf))?;
    let changes = rows.windows(2).filter(|w| w[0].roots.len() != w[1].roots.len());
    for w in changes {
        println!(
            "root count {} -> {} between tau = {:.6} and {:.6}",
            w[0].roots.len(),
            w[1].roots.len(),
            w[0].tau,
            w[1].tau
        );
    }
    Ok(())
}

fn cmd_verify(c: &Common) -> Result<(), Failure> {
    let spec = load_spec(c)?;
    let sol = run_solve(&spec, c.serial)?;
    let checks = verify(&spec, &sol)?;
    for check in &checks {
        println!("{check}");
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(c) => cmd_solve(c),
        Command::Sweep {
            common,
            tau_min,
            tau_max,
            steps,
        } => cmd_sweep(common, *tau_min, *tau_max, *steps),
        Command::Verify(c) => cmd_verify(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Verify => eprintln!("verification failed"),
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Solver(m) => eprintln!("solver error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
