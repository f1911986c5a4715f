//! Per-instance verification suite behind `cdt verify`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dualsolve::{solve_point, TrialityLabel};
use crate::energies::{dual_density, integrate};
use crate::error::Result;
use crate::oracle::{gquasiconvexity_probe, gradient_check, minimize_multistart};
use crate::pipeline::{Branch, Solution};
use crate::problem::{Geometry, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<16} {}", self.name, self.detail)
    }
}

pub const GAP_TOL: f64 = 1e-8;
pub const ORACLE_TOL: f64 = 1e-6;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const PATH_TOL: f64 = 1e-8;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const PROBE_SEGMENTS: usize = 10_000;

fn residual_check(sol: &Solution) -> Check {
    let worst = sol
        .roots
        .iter()
        .flat_map(|s| s.roots.iter().map(move |r| r.residual.abs() / s.tau_sq.max(1.0)))
        .fold(0.0f64, f64::max);
    let n: usize = sol.roots.iter().map(|s| s.len()).sum();
    Check::new(
        "dual residual",
        worst <= RESIDUAL_TOL,
        format!("max |D| / max(1, tau^2) = {worst:.3e} over {n} roots (tol {RESIDUAL_TOL:e})"),
    )
}

fn gap_check(sol: &Solution) -> Check {
    let rec: Vec<(usize, f64, f64)> = sol
        .branches
        .iter()
        .filter_map(|b| b.reconstruction().map(|r| (b.index, r.report.gap, r.report.dual)))
        .collect();
    if rec.is_empty() {
        return Check::new("duality gap", false, "no branch admits a displacement field");
    }
    let worst = rec
        .iter()
        .map(|&(_, gap, dual)| gap.abs() / dual.abs().max(1.0))
        .fold(0.0f64, f64::max);
    let parts: Vec<String> = rec.iter().map(|(k, gap, _)| format!("{k}: {gap:.3e}")).collect();
    Check::new(
        "duality gap",
        worst <= GAP_TOL,
        format!(
            "relative |Pi - Pi^d| = {worst:.3e} (tol {GAP_TOL:e}); per branch {}",
            parts.join(", ")
        ),
    )
}

fn admissibility_check(sol: &Solution) -> Check {
    let worst = sol
        .branches
        .iter()
        .filter_map(Branch::reconstruction)
        .map(|r| r.max_fixed_u)
        .fold(0.0f64, f64::max);
    Check::new(
        "kinematics",
        worst <= 1e-12,
        format!("max |u| on the fixed boundary = {worst:.3e}"),
    )
}

/// `int G^d(zeta_1)` from the pointwise global roots; defined whenever every
/// node has a positive root, even when no displacement exists.
fn global_dual_energy(spec: &ProblemSpec, sol: &Solution) -> Result<Option<f64>> {
    let Some(b) = sol.branches.first() else {
        return Ok(None);
    };
    if b.label() != Some(TrialityLabel::GlobalMin) {
        return Ok(None);
    }
    let weights = spec.quadrature_weights()?;
    let dens = b
        .zeta
        .iter()
        .zip(&sol.loads)
        .map(|(&z, l)| dual_density(&spec.energy, &spec.measure, z, l.tau_sq))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Some(integrate(&weights, &dens)))
}

fn oracle_checks(spec: &ProblemSpec, sol: &Solution) -> Result<Vec<Check>> {
    let r = minimize_multistart(spec, spec.oracle.n_starts, spec.oracle.seed)?;
    let mut out = Vec::new();
    let census = format!(
        "{} starts, {:.0}% converged, {} basins",
        r.starts_used,
        100.0 * r.converged_fraction,
        r.distinct_basins
    );
    match global_dual_energy(spec, sol)? {
        None => out.push(Check::new(
            "oracle",
            false,
            format!("no GlobalMin branch to compare against; {census}"),
        )),
        Some(pid) => {
            let scale = pid.abs().max(1.0);
            let diff = r.energy - pid;
            let (passed, what) = if spec.is_constant_load() {
                (diff.abs() <= ORACLE_TOL * scale, "|Pi_h - Pi^d(zeta_1)|")
            } else {
                (diff >= -ORACLE_TOL * scale, "Pi_h - Pi^d(zeta_1) (lower bound)")
            };
            out.push(Check::new(
                "oracle",
                passed,
                format!("best Pi_h = {:.12e}, {what} = {:.3e}; {census}", r.energy, diff),
            ));
        }
    }

    // the GlobalMin branch must have the lowest energy of all branches
    let energies: Vec<(usize, TrialityLabel, f64)> = sol
        .branches
        .iter()
        .filter_map(|b| Some((b.index, b.label()?, b.reconstruction()?.report.dual)))
        .collect();
    if let Some(&(k, _, e1)) = energies.iter().find(|x| x.1 == TrialityLabel::GlobalMin) {
        let lowest = energies
            .iter()
            .all(|&(_, _, e)| e >= e1 - ORACLE_TOL * e1.abs().max(1.0));
        out.push(Check::new(
            "global label",
            lowest,
            format!(
                "branch {k} has Pi^d = {e1:.12e}, lowest of {} branches: {lowest}",
                energies.len()
            ),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.oracle.seed ^ 0x5eed);
    let u: Vec<f64> = r.u.iter().map(|x| x + 0.05 * rng.gen_range(-1.0..1.0)).collect();
    let err = gradient_check(spec, &u, 1e-6)?;
    out.push(Check::new(
        "gradient",
        err <= GRADIENT_TOL,
        format!("max relative error {err:.3e} (tol {GRADIENT_TOL:e})"),
    ));
    Ok(out)
}

fn path_check(spec: &ProblemSpec, sol: &Solution) -> Check {
    if matches!(spec.geometry, Geometry::Interval { .. }) {
        return Check::new("path audit", true, "1-D: single path");
    }
    match sol.branches.first().map(|b| &b.outcome) {
        Some(crate::pipeline::BranchOutcome::Reconstructed(r)) => {
            let umax = r.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let tol = PATH_TOL * umax.max(1.0);
            Check::new(
                "path audit",
                r.path_discrepancy <= tol,
                format!("two-path discrepancy {:.3e} (tol {tol:.1e})", r.path_discrepancy),
            )
        }
        Some(crate::pipeline::BranchOutcome::Skipped(why)) => Check::new("path audit", false, why.clone()),
        None => Check::new("path audit", false, "no branch"),
    }
}

/// 1-D probe along the load at the most heavily loaded node. A segment
/// violation is expected exactly when the 1-D problem has a second
/// (local) minimum.
fn probe_check(spec: &ProblemSpec, sol: &Solution) -> Result<Check> {
    let tau_sq = sol.loads.iter().fold(0.0f64, |m, l| m.max(l.tau_sq));
    let roots = solve_point(&spec.energy, &spec.measure, tau_sq, 1, &spec.solver)?;
    let two_wells = roots.roots.iter().any(|r| r.label == TrialityLabel::LocalMin);
    let v = gquasiconvexity_probe(
        &spec.energy,
        &spec.measure,
        &[tau_sq.sqrt()],
        PROBE_SEGMENTS,
        spec.oracle.seed,
    )?;
    let passed = two_wells == !v.is_empty();
    let expect = if two_wells { "some" } else { "none" };
    Ok(Check::new(
        "quasiconvexity",
        passed,
        format!(
            "|tau| = {:.6}: {} violations in {PROBE_SEGMENTS} segments (expected {expect})",
            tau_sq.sqrt(),
            v.len()
        ),
    ))
}

/// Run every check on a solved instance.
pub fn verify(spec: &ProblemSpec, sol: &Solution) -> Result<Vec<Check>> {
    let mut out = vec![residual_check(sol), gap_check(sol), admissibility_check(sol)];
    out.extend(oracle_checks(spec, sol)?);
    out.push(path_check(spec, sol));
    out.push(probe_check(spec, sol)?);
    Ok(out)
}
