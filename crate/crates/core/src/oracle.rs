//! Independent primal check: P1 finite elements, multi-start gradient
//! descent on the discrete total potential, and sampling probes of the
//! G-quasiconvexity and sublevel-set conditions.

use std::io::{self, Write};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canonical::{CanonicalEnergy, QuadraticMeasure};
use crate::energies::{pairwise_sum, primal_density};
use crate::error::{CdtError, Result};
use crate::fields::fmt_f64;
use crate::problem::{Geometry, ProblemSpec};

/// Linear element with constant shape-function gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub nodes: Vec<usize>,
    pub grads: Vec<[f64; 2]>,
    /// Length or area.
    pub measure: f64,
}

/// P1 discretization of a [`ProblemSpec`]: two-node segments on an
/// interval, two triangles per cell on a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub n_nodes: usize,
    pub elements: Vec<Element>,
    pub free: Vec<bool>,
    /// Consistent nodal load `int_{Gamma_t} phi_i t`.
    pub load: Vec<f64>,
}

fn triangle(coords: [[f64; 2]; 3], nodes: [usize; 3]) -> Element {
    let [p0, p1, p2] = coords;
    let (e1, e2) = ([p1[0] - p0[0], p1[1] - p0[1]], [p2[0] - p0[0], p2[1] - p0[1]]);
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    // rows of the inverse Jacobian give the gradients of phi1 and phi2
    let g1 = [e2[1] / det, -e2[0] / det];
    let g2 = [-e1[1] / det, e1[0] / det];
    let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
    Element {
        nodes: nodes.to_vec(),
        grads: vec![g0, g1, g2],
        measure: 0.5 * det.abs(),
    }
}

impl Mesh {
    pub fn from_problem(p: &ProblemSpec) -> Result<Self> {
        let tau = p.nodal_tau()?;
        let fixed = p.fixed_nodes()?;
        let mut mesh = match p.geometry {
            Geometry::Interval { .. } => {
                let iv = p.interval()?;
                let elements = (0..iv.n - 1)
                    .map(|k| Element {
                        nodes: vec![k, k + 1],
                        grads: vec![[-1.0 / iv.h, 0.0], [1.0 / iv.h, 0.0]],
                        measure: iv.h,
                    })
                    .collect();
                Mesh {
                    dim: 1,
                    n_nodes: iv.n,
                    elements,
                    free: vec![true; iv.n],
                    load: vec![0.0; iv.n],
                }
            }
            Geometry::Rectangle { .. } => {
                let g = p.grid()?;
                let mut elements = Vec::with_capacity(2 * (g.nx - 1) * (g.ny - 1));
                for j in 0..g.ny - 1 {
                    for i in 0..g.nx - 1 {
                        let (k00, k10) = (g.index(i, j), g.index(i + 1, j));
                        let (k01, k11) = (g.index(i, j + 1), g.index(i + 1, j + 1));
                        let (p00, p10) = (g.point(i, j), g.point(i + 1, j));
                        let (p01, p11) = (g.point(i, j + 1), g.point(i + 1, j + 1));
                        elements.push(triangle([p00, p10, p11], [k00, k10, k11]));
                        elements.push(triangle([p00, p11, p01], [k00, k11, k01]));
                    }
                }
                Mesh {
                    dim: 2,
                    n_nodes: g.len(),
                    elements,
                    free: vec![true; g.len()],
                    load: vec![0.0; g.len()],
                }
            }
        };
        for k in fixed {
            mesh.free[k] = false;
        }
        for bp in p.boundary_points(&tau)? {
            mesh.load[bp.node] += bp.weight * bp.traction;
        }
        Ok(mesh)
    }

    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes).filter(|&k| self.free[k]).collect()
    }

    fn element_gradient(&self, e: &Element, u: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (&k, d) in e.nodes.iter().zip(&e.grads) {
            g[0] += u[k] * d[0];
            g[1] += u[k] * d[1];
        }
        g
    }
}

/// Discrete total potential `Pi_h(u) = sum_e |e| W(grad u) - load . u`.
pub struct PrimalFunctional<'a> {
    pub energy: &'a CanonicalEnergy,
    pub measure: &'a QuadraticMeasure,
    pub mesh: &'a Mesh,
}

impl PrimalFunctional<'_> {
    fn strain<'g>(&self, g: &'g [f64; 2]) -> &'g [f64] {
        &g[..self.mesh.dim]
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.mesh.elements.len() + 1);
        for e in &self.mesh.elements {
            let g = self.mesh.element_gradient(e, u);
            terms.push(e.measure * self.energy.value(self.measure.eval(self.strain(&g)))?);
        }
        let load: Vec<f64> = self.mesh.load.iter().zip(u).map(|(l, x)| l * x).collect();
        terms.push(-pairwise_sum(&load));
        Ok(pairwise_sum(&terms))
    }

    /// Gradient with respect to the free nodal values (zero on fixed nodes).
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = self.mesh.load.iter().map(|l| -l).collect();
        for e in &self.mesh.elements {
            let g = self.mesh.element_gradient(e, u);
            let xi = self.measure.eval(self.strain(&g));
            // dW/dgamma = 2 a V'(xi) gamma
            let s = 2.0 * self.measure.a * self.energy.derivative(xi)? * e.measure;
            for (&k, d) in e.nodes.iter().zip(&e.grads) {
                out[k] += s * (g[0] * d[0] + g[1] * d[1]);
            }
        }
        for (o, &free) in out.iter_mut().zip(&self.mesh.free) {
            if !free {
                *o = 0.0;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    pub max_iter: usize,
    /// Stop when the largest free gradient component falls below this.
    pub grad_tol: f64,
    /// Once the energy decrease per step reaches roundoff, a gradient below
    /// this counts as converged.
    pub stall_tol: f64,
    pub armijo: f64,
    pub shrink: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            max_iter: 20_000,
            grad_tol: 1e-8,
            stall_tol: 1e-6,
            armijo: 1e-4,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub u: Vec<f64>,
    pub energy: f64,
    pub initial_energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Steepest descent with Armijo backtracking. Trial points outside the
/// energy's domain count as infinite energy.
pub fn descend(f: &PrimalFunctional<'_>, u0: Vec<f64>, opts: &DescentOptions) -> Result<DescentOutcome> {
    let mut u = u0;
    let mut e = f.energy(&u)?;
    let initial_energy = e;
    let mut step = 1.0;
    for it in 0..opts.max_iter {
        let g = f.gradient(&u)?;
        let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if gmax <= opts.grad_tol {
            return Ok(DescentOutcome {
                u,
                energy: e,
                initial_energy,
                iterations: it,
                converged: true,
            });
        }
        let gg: f64 = g.iter().map(|x| x * x).sum();
        let mut accepted = false;
        while step > 1e-20 {
            let trial: Vec<f64> = u.iter().zip(&g).map(|(x, d)| x - step * d).collect();
            let et = f.energy(&trial).unwrap_or(f64::INFINITY);
            if et <= e - opts.armijo * step * gg {
                let floor = 4.0 * f64::EPSILON * e.abs().max(1.0);
                let stalled = e - et <= floor && gmax <= opts.stall_tol;
                u = trial;
                e = et;
                if stalled {
                    return Ok(DescentOutcome {
                        u,
                        energy: e,
                        initial_energy,
                        iterations: it + 1,
                        converged: true,
                    });
                }
                accepted = true;
                break;
            }
            step *= opts.shrink;
        }
        if !accepted {
            let converged = gmax <= opts.stall_tol;
            return Ok(DescentOutcome {
                u,
                energy: e,
                initial_energy,
                iterations: it,
                converged,
            });
        }
        step = (step * 2.0).min(1e6);
    }
    Ok(DescentOutcome {
        u,
        energy: e,
        initial_energy,
        iterations: opts.max_iter,
        converged: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub u: Vec<f64>,
    /// `Pi_h` re-evaluated at the best configuration.
    pub energy: f64,
    pub starts_used: usize,
    pub converged_fraction: f64,
    pub distinct_basins: usize,
    /// Lowest energy of each cluster, ascending.
    pub basin_energies: Vec<f64>,
}

/// Energies closer than this are treated as one basin.
pub const CLUSTER_TOL: f64 = 1e-5;

/// Random starts uniform in `[-s, s]` on free nodes, seeded deterministically.
pub fn minimize_multistart(p: &ProblemSpec, n_starts: usize, seed: u64) -> Result<MinimizeResult> {
    minimize_multistart_with(p, n_starts, seed, &DescentOptions::default())
}

pub fn minimize_multistart_with(
    p: &ProblemSpec,
    n_starts: usize,
    seed: u64,
    opts: &DescentOptions,
) -> Result<MinimizeResult> {
    if n_starts == 0 {
        return Err(CdtError::InvalidParameter("n_starts must be positive".into()));
    }
    let mesh = Mesh::from_problem(p)?;
    let f = PrimalFunctional {
        energy: &p.energy,
        measure: &p.measure,
        mesh: &mesh,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = p.oracle.start_scale;
    let mut outcomes = Vec::with_capacity(n_starts);
    for _ in 0..n_starts {
        let u0: Vec<f64> = mesh
            .free
            .iter()
            .map(|&free| if free { rng.gen_range(-s..=s) } else { 0.0 })
            .collect();
        match descend(&f, u0, opts) {
            Ok(o) if o.energy.is_finite() && (o.converged || o.energy < o.initial_energy) => outcomes.push(o),
            _ => {}
        }
    }
    if outcomes.is_empty() {
        return Err(CdtError::Oracle(format!(
            "all {n_starts} starts failed to decrease the energy"
        )));
    }
    let converged = outcomes.iter().filter(|o| o.converged).count();
    let mut energies: Vec<f64> = outcomes.iter().filter(|o| o.converged).map(|o| o.energy).collect();
    energies.sort_by(f64::total_cmp);
    let mut basin_energies: Vec<f64> = Vec::new();
    for e in energies {
        match basin_energies.last() {
            Some(&last) if e - last <= CLUSTER_TOL => {}
            _ => basin_energies.push(e),
        }
    }
    let best = outcomes
        .into_iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .expect("non-empty");
    let energy = f.energy(&best.u)?;
    Ok(MinimizeResult {
        u: best.u,
        energy,
        starts_used: n_starts,
        converged_fraction: converged as f64 / n_starts as f64,
        distinct_basins: basin_energies.len(),
        basin_energies,
    })
}

/// Largest relative error between the analytic gradient and central
/// differences at up to 50 randomly chosen free nodes. The error is scaled
/// by `max(|g|, |g_fd|, 1)`.
pub fn gradient_check(p: &ProblemSpec, u: &[f64], h: f64) -> Result<f64> {
    let mesh = Mesh::from_problem(p)?;
    if u.len() != mesh.n_nodes {
        return Err(CdtError::InvalidParameter(format!(
            "expected {} nodal values, got {}",
            mesh.n_nodes,
            u.len()
        )));
    }
    let f = PrimalFunctional {
        energy: &p.energy,
        measure: &p.measure,
        mesh: &mesh,
    };
    let g = f.gradient(u)?;
    let free = mesh.free_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(p.oracle.seed);
    let picks = sample(&mut rng, free.len(), free.len().min(50));
    let mut worst: f64 = 0.0;
    let mut v = u.to_vec();
    for idx in picks.iter() {
        let k = free[idx];
        v[k] = u[k] + h;
        let ep = f.energy(&v)?;
        v[k] = u[k] - h;
        let em = f.energy(&v)?;
        v[k] = u[k];
        let fd = (ep - em) / (2.0 * h);
        worst = worst.max((g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1.0));
    }
    Ok(worst)
}

/// A sampled segment where `G` exceeds the larger endpoint value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub theta: f64,
    pub excess: f64,
}

pub fn write_violations_csv<W: Write>(mut w: W, violations: &[Violation]) -> io::Result<()> {
    writeln!(w, "gx1,gy1,gx2,gy2,theta,excess")?;
    for v in violations {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(v.start[0]),
            fmt_f64(v.start[1]),
            fmt_f64(v.end[0]),
            fmt_f64(v.end[1]),
            fmt_f64(v.theta),
            fmt_f64(v.excess)
        )?;
    }
    Ok(())
}

/// Sampling box half-width for the probes.
pub const PROBE_BOX: f64 = 3.0;
const PROBE_TOL: f64 = 1e-10;

struct Probe<'a> {
    energy: &'a CanonicalEnergy,
    m: &'a QuadraticMeasure,
    tau: [f64; 2],
    dim: usize,
}

impl<'a> Probe<'a> {
    fn new(energy: &'a CanonicalEnergy, m: &'a QuadraticMeasure, tau: &[f64]) -> Result<Self> {
        let mut t = [0.0; 2];
        match tau.len() {
            1 | 2 => t[..tau.len()].copy_from_slice(tau),
            d => {
                return Err(CdtError::InvalidParameter(format!(
                    "probe dimension must be 1 or 2, got {d}"
                )))
            }
        }
        Ok(Probe {
            energy,
            m,
            tau: t,
            dim: tau.len(),
        })
    }

    /// `G(gamma)`, or `None` near the edge of the energy's domain.
    fn density(&self, g: &[f64; 2]) -> Option<f64> {
        let gamma = &g[..self.dim];
        let xi = self.m.eval(gamma);
        if matches!(self.energy, CanonicalEnergy::LogNeoHookean { .. }) && xi < 1e-6 {
            return None;
        }
        primal_density(self.energy, self.m, gamma, &self.tau[..self.dim]).ok()
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        let mut g = [0.0; 2];
        for c in g.iter_mut().take(self.dim) {
            *c = rng.gen_range(-PROBE_BOX..=PROBE_BOX);
        }
        g
    }
}

fn lerp(a: &[f64; 2], b: &[f64; 2], theta: f64) -> [f64; 2] {
    [theta * a[0] + (1.0 - theta) * b[0], theta * a[1] + (1.0 - theta) * b[1]]
}

/// Sample `n_segments` segments in the box `[-3, 3]^d` and record every
/// `theta = k/32` where `G(theta g1 + (1 - theta) g2) > max(G(g1), G(g2)) + 1e-10`.
pub fn gquasiconvexity_probe(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    tau: &[f64],
    n_segments: usize,
    seed: u64,
) -> Result<Vec<Violation>> {
    let probe = Probe::new(energy, m, tau)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut done = 0;
    let mut draws = 0usize;
    while done < n_segments {
        draws += 1;
        if draws > 100 * n_segments.max(1) {
            return Err(CdtError::Oracle(
                "too few sample points inside the energy domain".into(),
            ));
        }
        let (g1, g2) = (probe.draw(&mut rng), probe.draw(&mut rng));
        let (Some(e1), Some(e2)) = (probe.density(&g1), probe.density(&g2)) else {
            continue;
        };
        done += 1;
        let top = e1.max(e2);
        for k in 1..32 {
            let theta = k as f64 / 32.0;
            if let Some(e) = probe.density(&lerp(&g1, &g2, theta)) {
                if e > top + PROBE_TOL {
                    out.push(Violation {
                        start: g1,
                        end: g2,
                        theta,
                        excess: e - top,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SublevelProbe {
    pub pairs_sampled: usize,
    pub violations: Vec<Violation>,
}

/// Check midpoint convexity of `{G <= alpha}` on up to `n_pairs` pairs drawn
/// by rejection from the sampling box.
pub fn sublevel_probe(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    tau: &[f64],
    alpha: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<SublevelProbe> {
    let probe = Probe::new(energy, m, tau)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = Vec::with_capacity(2 * n_pairs);
    let budget = 200 * n_pairs;
    for _ in 0..budget {
        if members.len() == 2 * n_pairs {
            break;
        }
        let g = probe.draw(&mut rng);
        if probe.density(&g).is_some_and(|e| e <= alpha) {
            members.push(g);
        }
    }
    let mut violations = Vec::new();
    let pairs = members.chunks_exact(2);
    let pairs_sampled = pairs.len();
    for pair in pairs {
        let mid = lerp(&pair[0], &pair[1], 0.5);
        if let Some(e) = probe.density(&mid) {
            if e > alpha + PROBE_TOL {
                violations.push(Violation {
                    start: pair[0],
                    end: pair[1],
                    theta: 0.5,
                    excess: e - alpha,
                });
            }
        }
    }
    Ok(SublevelProbe {
        pairs_sampled,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dualsolve::{solve_all_roots, SolverOptions};
    use crate::energies::dual_density;

    fn bar(model: &str, tau: f64, n: usize) -> ProblemSpec {
        let energy = match model {
            "dw" => "model = double_well",
            _ => "model = log_neohookean\nc1 = 1\nc2 = 1",
        };
        ProblemSpec::parse(&format!(
            "{energy}\ngeometry = interval\nn = {n}\nloading = constant_tau\ntau = {tau}\nfixed = left\n"
        ))
        .unwrap()
    }

    fn plate(tau: [f64; 2]) -> ProblemSpec {
        ProblemSpec::parse(&format!(
            "model = log_neohookean\nc1 = 1\nc2 = 1\ngeometry = rectangle\nlx = 1\nly = 0.5\nnx = 5\nny = 4\n\
             loading = constant_tau\ntau = {}, {}\nfixed = left\n",
            tau[0], tau[1]
        ))
        .unwrap()
    }

    #[test]
    fn triangle_gradients_reproduce_linear_fields() {
        let e = triangle([[0.0, 0.0], [2.0, 0.0], [0.5, 1.5]], [0, 1, 2]);
        assert!((e.measure - 1.5).abs() < 1e-15);
        let lin = |p: [f64; 2]| 0.3 - 1.2 * p[0] + 0.7 * p[1];
        let vals = [lin([0.0, 0.0]), lin([2.0, 0.0]), lin([0.5, 1.5])];
        let mut g = [0.0; 2];
        for (v, d) in vals.iter().zip(&e.grads) {
            g[0] += v * d[0];
            g[1] += v * d[1];
        }
        assert!((g[0] + 1.2).abs() < 1e-14 && (g[1] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn mesh_loads_sum_to_resultant() {
        // fixed left edge, traction t = tau_x on the right edge of height 0.5
        let mesh = Mesh::from_problem(&plate([0.8, 0.0])).unwrap();
        let total: f64 = mesh.load.iter().sum();
        assert!((total - 0.8 * 0.5).abs() < 1e-14);
        assert_eq!(mesh.elements.len(), 2 * 4 * 3);
        assert_eq!(mesh.free.iter().filter(|f| !**f).count(), 4);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for p in [bar("dw", 0.4, 7), bar("log", 0.6, 7), plate([0.8, 0.3])] {
            let n = Mesh::from_problem(&p).unwrap().n_nodes;
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let err = gradient_check(&p, &u, 1e-6).unwrap();
            assert!(err < 1e-6, "relative gradient error {err}");
        }
    }

    #[test]
    fn bar_minimum_matches_dual_energy() {
        // supercritical log bar: one root, unique minimizer u = gamma x
        let p = bar("log", 1.0, 9);
        let r = minimize_multistart(&p, 8, 11).unwrap();
        let roots = solve_all_roots(&p.energy, &p.measure, 1.0, &SolverOptions::default()).unwrap();
        let pid = dual_density(&p.energy, &p.measure, roots.roots[0].zeta, 1.0).unwrap();
        assert!((r.energy - pid).abs() < 1e-8, "{} vs {}", r.energy, pid);
        assert_eq!(r.distinct_basins, 1);
        assert_eq!(r.converged_fraction, 1.0);
    }

    #[test]
    fn double_well_bar_has_mixed_phase_basins() {
        let p = bar("dw", 0.2, 5);
        let r = minimize_multistart(&p, 40, 5).unwrap();
        let roots = solve_all_roots(&p.energy, &p.measure, 0.04, &SolverOptions::default()).unwrap();
        let g: Vec<f64> = roots
            .roots
            .iter()
            .map(|rt| dual_density(&p.energy, &p.measure, rt.zeta, 0.04).unwrap())
            .collect();
        // 4 elements of length 1/4; a local minimum puts every element in
        // one of the two wells
        let h = 0.25;
        let expected: Vec<f64> = (0..=4).map(|k| h * (k as f64 * g[0] + (4 - k) as f64 * g[1])).collect();
        assert!((r.energy - expected[4]).abs() < 1e-8);
        for e in &r.basin_energies {
            assert!(
                expected.iter().any(|x| (x - e).abs() < 1e-6),
                "basin {e} not a phase mixture"
            );
        }
        assert!(r.distinct_basins >= 2);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let p = bar("dw", 0.3, 6);
        let a = minimize_multistart(&p, 5, 9).unwrap();
        let b = minimize_multistart(&p, 5, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn probes_match_expected_structure() {
        let dw = CanonicalEnergy::quadratic(1.0).unwrap();
        let m = QuadraticMeasure::double_well();
        // supercritical 1-D load: G is G-quasiconvex
        assert!(gquasiconvexity_probe(&dw, &m, &[0.7], 2000, 1).unwrap().is_empty());
        // unloaded double well: the segment between the wells is violated
        assert!(!gquasiconvexity_probe(&dw, &m, &[0.0], 2000, 1).unwrap().is_empty());
        // the supercritical load does not cure the 2-D case: (0, -sqrt 2) to
        // (0, sqrt 2) has G = 0 at both ends and 1/2 at the midpoint
        assert!(!gquasiconvexity_probe(&dw, &m, &[0.7, 0.0], 4000, 1).unwrap().is_empty());
        let s = 2f64.sqrt();
        let probe = Probe::new(&dw, &m, &[0.7, 0.0]).unwrap();
        let e = probe.density(&[0.0, s]).unwrap();
        assert!(e.abs() < 1e-12);
        assert!((probe.density(&[0.0, 0.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sublevel_probe_edge_cases() {
        let dw = CanonicalEnergy::quadratic(1.0).unwrap();
        let m = QuadraticMeasure::double_well();
        let r = sublevel_probe(&dw, &m, &[0.3], -100.0, 100, 2).unwrap();
        assert_eq!(r.pairs_sampled, 0);
        assert!(r.violations.is_empty());
        // two disjoint wells at alpha slightly above zero: many midpoints escape
        let r = sublevel_probe(&dw, &m, &[0.0], 0.05, 200, 2).unwrap();
        assert!(r.pairs_sampled > 0 && !r.violations.is_empty());
    }

    #[test]
    fn violations_csv_header() {
        let mut buf = Vec::new();
        write_violations_csv(
            &mut buf,
            &[Violation {
                start: [1.0, 0.0],
                end: [-1.0, 0.0],
                theta: 0.5,
                excess: 0.25,
            }],
        )
        .unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("gx1,gy1,gx2,gy2,theta,excess\n"));
        assert_eq!(s.lines().count(), 2);
    }

    #[test]
    fn rejects_bad_probe_dimension() {
        let dw = CanonicalEnergy::quadratic(1.0).unwrap();
        let m = QuadraticMeasure::double_well();
        assert!(gquasiconvexity_probe(&dw, &m, &[0.1, 0.2, 0.3], 10, 0).is_err());
    }
}
