//! End-to-end solution of a [`ProblemSpec`]: pointwise dual roots, branch
//! assembly, displacement reconstruction, energies and the output files.

use std::io::{self, Write};

use crate::canonical::norm_sq;
use crate::dualsolve::{dual_curve, fold_threshold_with, solve_point, DualRootSet, ResidualConvention, TrialityLabel};
use crate::energies::{dual_density, energy_report, BranchFields, EnergyReport};
use crate::error::{CdtError, Result};
use crate::fields::{fmt_f64, path_discrepancy, reconstruct_displacement, reconstruct_displacement_1d};
use crate::fields::{ScalarField, VectorField2};
use crate::problem::{Geometry, ProblemSpec};

/// Stress at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLoad {
    pub x: [f64; 2],
    pub tau: [f64; 2],
    pub tau_sq: f64,
}

pub fn point_loads(spec: &ProblemSpec) -> Result<Vec<PointLoad>> {
    let nodes = spec.nodes()?;
    let tau = spec.nodal_tau()?;
    Ok(nodes
        .into_iter()
        .zip(tau)
        .map(|(x, t)| PointLoad {
            x,
            tau: t,
            tau_sq: norm_sq(&t[..spec.strain_dim()]),
        })
        .collect())
}

pub fn solve_one(spec: &ProblemSpec, load: &PointLoad) -> Result<DualRootSet> {
    solve_point(
        &spec.energy,
        &spec.measure,
        load.tau_sq,
        spec.strain_dim(),
        &spec.solver,
    )
}

/// Serial pointwise solve. The CLI runs the same per-node solve in parallel.
pub fn solve_points(spec: &ProblemSpec, loads: &[PointLoad]) -> Result<Vec<DualRootSet>> {
    loads.iter().map(|l| solve_one(spec, l)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub u: Vec<f64>,
    pub report: EnergyReport,
    /// Disagreement of the two lattice path integrals (0 in 1-D).
    pub path_discrepancy: f64,
    /// `max |u|` on the fixed boundary.
    pub max_fixed_u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BranchOutcome {
    Reconstructed(Reconstruction),
    /// The branch has roots everywhere but no displacement (a zero root or
    /// a strain with nonzero curl).
    Skipped(String),
}

/// The `k`-th largest root at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// 1-based.
    pub index: usize,
    pub zeta: Vec<f64>,
    pub labels: Vec<TrialityLabel>,
    pub outcome: BranchOutcome,
}

impl Branch {
    /// The common label, or `None` when nodes disagree.
    pub fn label(&self) -> Option<TrialityLabel> {
        let first = *self.labels.first()?;
        self.labels.iter().all(|&l| l == first).then_some(first)
    }

    pub fn label_name(&self) -> &'static str {
        self.label().map_or("Mixed", TrialityLabel::as_str)
    }

    pub fn reconstruction(&self) -> Option<&Reconstruction> {
        match &self.outcome {
            BranchOutcome::Reconstructed(r) => Some(r),
            BranchOutcome::Skipped(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub loads: Vec<PointLoad>,
    pub roots: Vec<DualRootSet>,
    pub branches: Vec<Branch>,
}

pub fn solve(spec: &ProblemSpec) -> Result<Solution> {
    let loads = point_loads(spec)?;
    let roots = solve_points(spec, &loads)?;
    assemble(spec, loads, roots)
}

fn is_soft(e: &CdtError) -> bool {
    matches!(e, CdtError::Singular(_) | CdtError::NonIntegrable { .. })
}

fn reconstruct(spec: &ProblemSpec, loads: &[PointLoad], zeta: &[f64]) -> Result<Reconstruction> {
    let tau: Vec<[f64; 2]> = loads.iter().map(|l| l.tau).collect();
    let (u, path) = match spec.geometry {
        Geometry::Interval { .. } => {
            let iv = spec.interval()?;
            let tx: Vec<f64> = tau.iter().map(|t| t[0]).collect();
            (reconstruct_displacement_1d(&iv, zeta, &tx, &spec.measure)?, 0.0)
        }
        Geometry::Rectangle { .. } => {
            let g = spec.grid()?;
            let z = ScalarField::new(g.clone(), zeta.to_vec())?;
            let t = VectorField2::new(g.clone(), tau.clone())?;
            let anchor = g.first_fixed_node();
            let u = reconstruct_displacement(&z, &t, &spec.measure, anchor, spec.curl_tol)?;
            let path = path_discrepancy(&z, &t, &spec.measure, anchor)?;
            (u.values, path)
        }
    };
    let weights = spec.quadrature_weights()?;
    let boundary = spec.boundary_points(&tau)?;
    let report = energy_report(
        &spec.energy,
        &spec.measure,
        &BranchFields {
            weights: &weights,
            boundary: &boundary,
            zeta,
            tau: &tau,
            u: &u,
        },
    )?;
    let max_fixed_u = spec.fixed_nodes()?.into_iter().fold(0.0f64, |m, k| m.max(u[k].abs()));
    Ok(Reconstruction {
        u,
        report,
        path_discrepancy: path,
        max_fixed_u,
    })
}

/// Group pointwise roots into branches. Branch `k` exists when every node
/// has at least `k` roots.
pub fn assemble(spec: &ProblemSpec, loads: Vec<PointLoad>, roots: Vec<DualRootSet>) -> Result<Solution> {
    if loads.len() != roots.len() {
        return Err(CdtError::InvalidParameter(format!(
            "{} loads but {} root sets",
            loads.len(),
            roots.len()
        )));
    }
    let n_branches = roots.iter().map(DualRootSet::len).min().unwrap_or(0);
    let mut branches = Vec::with_capacity(n_branches);
    for k in 0..n_branches {
        let zeta: Vec<f64> = roots.iter().map(|r| r.roots[k].zeta).collect();
        let labels = roots.iter().map(|r| r.roots[k].label).collect();
        let outcome = match reconstruct(spec, &loads, &zeta) {
            Ok(r) => BranchOutcome::Reconstructed(r),
            Err(e) if is_soft(&e) => BranchOutcome::Skipped(e.to_string()),
            Err(e) => return Err(e),
        };
        branches.push(Branch {
            index: k + 1,
            zeta,
            labels,
            outcome,
        });
    }
    Ok(Solution { loads, roots, branches })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    crate::energies::pairwise_sum(&v) / v.len().max(1) as f64
}

impl Solution {
    /// `x,y,tau_sq,root_index,zeta,label,residual`, one row per root.
    pub fn write_roots_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,tau_sq,root_index,zeta,label,residual")?;
        for (load, set) in self.loads.iter().zip(&self.roots) {
            for (k, r) in set.roots.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    fmt_f64(load.x[0]),
                    fmt_f64(load.x[1]),
                    fmt_f64(load.tau_sq),
                    k + 1,
                    fmt_f64(r.zeta),
                    r.label,
                    fmt_f64(r.residual)
                )?;
            }
        }
        Ok(())
    }

    /// `x,y,u` for one reconstructed branch.
    pub fn write_displacement_csv<W: Write>(&self, branch: &Branch, mut w: W) -> io::Result<()> {
        let Some(rec) = branch.reconstruction() else {
            return Ok(());
        };
        writeln!(w, "x,y,u")?;
        for (load, u) in self.loads.iter().zip(&rec.u) {
            writeln!(w, "{},{},{}", fmt_f64(load.x[0]), fmt_f64(load.x[1]), fmt_f64(*u))?;
        }
        Ok(())
    }

    /// `tau_sq,zeta,label,primal,dual,gap`, one row per reconstructed
    /// branch. Non-uniform fields report domain means of `tau^2` and `zeta`.
    pub fn write_energy_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "tau_sq,zeta,label,primal,dual,gap")?;
        let tau_sq = mean(self.loads.iter().map(|l| l.tau_sq));
        for b in &self.branches {
            if let Some(rec) = b.reconstruction() {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    fmt_f64(tau_sq),
                    fmt_f64(mean(b.zeta.iter().copied())),
                    b.label_name(),
                    fmt_f64(rec.report.primal),
                    fmt_f64(rec.report.dual),
                    fmt_f64(rec.report.gap)
                )?;
            }
        }
        Ok(())
    }

    pub fn write_report<W: Write>(&self, spec: &ProblemSpec, mut w: W) -> io::Result<()> {
        writeln!(w, "energy            {}", spec.energy)?;
        writeln!(w, "measure           a = {}, b = {}", spec.measure.a, spec.measure.b)?;
        writeln!(w, "nodes             {}", self.loads.len())?;
        writeln!(w, "strain dimension  {}", spec.strain_dim())?;
        writeln!(w, "convention        {}", spec.solver.convention.name())?;
        match fold_threshold_with(&spec.energy, &spec.measure, spec.solver.convention) {
            Ok(f) => writeln!(w, "fold threshold    zeta_c = {:.12}, eta = {:.12}", f.zeta_c, f.eta)?,
            Err(_) => writeln!(w, "fold threshold    none")?,
        }
        let tmax = self.loads.iter().fold(0.0f64, |m, l| m.max(l.tau_sq));
        let tmin = self.loads.iter().fold(f64::INFINITY, |m, l| m.min(l.tau_sq));
        writeln!(w, "tau^2 range       [{tmin:.6e}, {tmax:.6e}]")?;
        let counts: Vec<usize> = self.roots.iter().map(DualRootSet::len).collect();
        writeln!(
            w,
            "roots per node    min {} max {}",
            counts.iter().min().unwrap_or(&0),
            counts.iter().max().unwrap_or(&0)
        )?;
        let worst = self
            .roots
            .iter()
            .flat_map(|s| s.roots.iter().map(move |r| r.residual.abs() / s.tau_sq.max(1.0)))
            .fold(0.0f64, f64::max);
        writeln!(w, "max residual      {worst:.3e} (relative to max(1, tau^2))")?;
        writeln!(w)?;
        for b in &self.branches {
            write!(w, "branch {} [{}]: ", b.index, b.label_name())?;
            match &b.outcome {
                BranchOutcome::Reconstructed(r) => {
                    writeln!(
                        w,
                        "primal {:.12e} dual {:.12e} gap {:.3e} path {:.3e} max |u| on fixed {:.3e}",
                        r.report.primal, r.report.dual, r.report.gap, r.path_discrepancy, r.max_fixed_u
                    )?;
                    if !r.report.gap_within(1e-8) {
                        writeln!(w, "  duality gap exceeds 1e-8 relative")?;
                    }
                    if r.max_fixed_u > 1e-10 {
                        writeln!(w, "  displacement does not vanish on the fixed boundary")?;
                    }
                }
                BranchOutcome::Skipped(why) => writeln!(w, "skipped: {why}")?,
            }
        }
        Ok(())
    }
}

/// One load level of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub roots: DualRootSet,
    /// Dual energy `|Omega| G^d(zeta_k)` per root; `None` at `zeta = 0`.
    pub pi_d: Vec<Option<f64>>,
}

/// Roots and dual energies for `steps` equally spaced loads `|tau|` in
/// `[tau_min, tau_max]`, taking a constant load over the domain.
pub fn sweep(spec: &ProblemSpec, tau_min: f64, tau_max: f64, steps: usize) -> Result<Vec<SweepRow>> {
    if !(tau_min >= 0.0 && tau_max >= tau_min && steps >= 1) {
        return Err(CdtError::InvalidParameter(format!(
            "sweep needs 0 <= tau_min <= tau_max and steps >= 1, got [{tau_min}, {tau_max}] x {steps}"
        )));
    }
    let area = spec.domain_measure();
    (0..steps)
        .map(|k| {
            let tau = if steps == 1 {
                tau_min
            } else {
                tau_min + (tau_max - tau_min) * k as f64 / (steps - 1) as f64
            };
            let tau_sq = tau * tau;
            let roots = solve_point(&spec.energy, &spec.measure, tau_sq, spec.strain_dim(), &spec.solver)?;
            let pi_d = roots
                .roots
                .iter()
                .map(|r| {
                    dual_density(&spec.energy, &spec.measure, r.zeta, tau_sq)
                        .ok()
                        .map(|g| area * g)
                })
                .collect();
            Ok(SweepRow { tau, roots, pi_d })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "tau,root_count,zeta1,zeta2,zeta3,Pi_d_1,Pi_d_2,Pi_d_3")?;
    for r in rows {
        let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let z: Vec<String> = (0..3).map(|k| cell(r.roots.roots.get(k).map(|x| x.zeta))).collect();
        let p: Vec<String> = (0..3).map(|k| cell(r.pi_d.get(k).copied().flatten())).collect();
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(r.tau),
            r.roots.len(),
            z.join(","),
            p.join(",")
        )?;
    }
    Ok(())
}

/// `h^2(zeta)` under both residual conventions on a grid that spans the
/// fold when there is one.
pub fn write_hcurve_csv<W: Write>(spec: &ProblemSpec, n: usize, mut w: W) -> Result<()> {
    let scale = fold_threshold_with(&spec.energy, &spec.measure, ResidualConvention::Derived)
        .map(|f| f.zeta_c.abs().max(1.0))
        .unwrap_or(1.0);
    let (lo, hi) = (-3.0 * scale, 2.0 * scale);
    let io = |e: io::Error| CdtError::InvalidParameter(format!("write failed: {e}"));
    writeln!(w, "zeta,h2_derived,h2_unscaled").map_err(io)?;
    for k in 0..n {
        let z = lo + (hi - lo) * k as f64 / (n.max(2) - 1) as f64;
        let d = dual_curve(&spec.energy, &spec.measure, z, ResidualConvention::Derived)?;
        let u = dual_curve(&spec.energy, &spec.measure, z, ResidualConvention::Unscaled)?;
        writeln!(w, "{},{},{}", fmt_f64(z), fmt_f64(d), fmt_f64(u)).map_err(io)?;
    }
    Ok(())
}
