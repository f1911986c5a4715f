//! Primal, dual and total complementary energy densities, trapezoidal
//! integration over nodal fields, and tensor-level reconstruction.

use nalgebra::Matrix3;
use rand::Rng;

use crate::canonical::{dot, norm_sq, CanonicalEnergy, QuadraticMeasure};
use crate::dualsolve::{solve_point, SolverOptions, TrialityLabel};
use crate::error::{CdtError, Result};

/// `G(gamma) = V(a |gamma|^2 + b) - <gamma, tau>`.
pub fn primal_density(energy: &CanonicalEnergy, m: &QuadraticMeasure, gamma: &[f64], tau: &[f64]) -> Result<f64> {
    Ok(energy.value(m.eval(gamma))? - dot(gamma, tau))
}

/// `G^d(zeta) = b zeta - V*(zeta) - tau^2 / (4 a zeta)`.
pub fn dual_density(energy: &CanonicalEnergy, m: &QuadraticMeasure, zeta: f64, tau_sq: f64) -> Result<f64> {
    if zeta == 0.0 {
        return Err(CdtError::Singular("dual density at zeta = 0".into()));
    }
    Ok(m.b * zeta - energy.conjugate(zeta)? - tau_sq / (4.0 * m.a * zeta))
}

/// `Xi(gamma, zeta) = Lambda(gamma) zeta - V*(zeta) - <gamma, tau>`.
pub fn total_complementary_density(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    gamma: &[f64],
    zeta: f64,
    tau: &[f64],
) -> Result<f64> {
    Ok(m.eval(gamma) * zeta - energy.conjugate(zeta)? - dot(gamma, tau))
}

/// Complementary gap `a zeta |delta_gamma|^2`.
pub fn gap_density(m: &QuadraticMeasure, delta_gamma: &[f64], zeta: f64) -> f64 {
    m.a * zeta * norm_sq(delta_gamma)
}

/// Stationary strain `tau / (2 a zeta)` of a dual root.
pub fn stationary_strain(m: &QuadraticMeasure, zeta: f64, tau: &[f64]) -> Result<Vec<f64>> {
    if zeta == 0.0 {
        return Err(CdtError::Singular("strain at zeta = 0".into()));
    }
    Ok(tau.iter().map(|t| t / (2.0 * m.a * zeta)).collect())
}

/// Pairwise (cascade) summation; the split points depend only on the length,
/// so the result is reproducible.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Composite trapezoid weights for `n` equally spaced nodes.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| if k == 0 || k == n - 1 { 0.5 * h } else { h }).collect(),
    }
}

/// `sum w_k f_k`.
pub fn integrate(weights: &[f64], density: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), density.len());
    let terms: Vec<f64> = weights.iter().zip(density).map(|(w, f)| w * f).collect();
    pairwise_sum(&terms)
}

/// Boundary load term: one `(node, weight, traction)` triple per boundary
/// quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub node: usize,
    pub weight: f64,
    pub traction: f64,
}

/// Energy bookkeeping for one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `Pi(u) = int W - int_{Gamma_t} u t`.
    pub primal: f64,
    pub dual: f64,
    pub complementary: f64,
    /// `primal - dual`.
    pub gap: f64,
    /// `max |G(gamma) - G^d(zeta)|` over the nodes.
    pub max_point_mismatch: f64,
}

impl EnergyReport {
    pub fn gap_within(&self, rel_tol: f64) -> bool {
        self.gap.abs() <= rel_tol * self.dual.abs().max(1.0)
    }
}

/// Nodal data of one branch on some discretized domain.
pub struct BranchFields<'a> {
    pub weights: &'a [f64],
    pub boundary: &'a [BoundaryPoint],
    pub zeta: &'a [f64],
    pub tau: &'a [[f64; 2]],
    pub u: &'a [f64],
}

/// Integrate primal, dual and complementary energies of a reconstructed
/// branch. The strain is the stationary strain `tau / (2 a zeta)`.
pub fn energy_report(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    fields: &BranchFields<'_>,
) -> Result<EnergyReport> {
    let n = fields.weights.len();
    let mut stored = Vec::with_capacity(n);
    let mut dual = Vec::with_capacity(n);
    let mut comp = Vec::with_capacity(n);
    let mut mismatch: f64 = 0.0;
    for k in 0..n {
        let tau = &fields.tau[k];
        let zeta = fields.zeta[k];
        let gamma = stationary_strain(m, zeta, tau)?;
        let w = energy.value(m.eval(&gamma))?;
        let gd = dual_density(energy, m, zeta, norm_sq(tau))?;
        let g = w - dot(&gamma, tau);
        mismatch = mismatch.max((g - gd).abs());
        stored.push(w);
        dual.push(gd);
        comp.push(total_complementary_density(energy, m, &gamma, zeta, tau)?);
    }
    let load_terms: Vec<f64> = fields
        .boundary
        .iter()
        .map(|p| p.weight * fields.u[p.node] * p.traction)
        .collect();
    let load = pairwise_sum(&load_terms);
    let primal = integrate(fields.weights, &stored) - load;
    let dual = integrate(fields.weights, &dual);
    Ok(EnergyReport {
        primal,
        dual,
        complementary: integrate(fields.weights, &comp),
        gap: primal - dual,
        max_point_mismatch: mismatch,
    })
}

/// One stationary deformation gradient of the constant-stress tensor problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBranch {
    pub zeta: f64,
    pub f: Matrix3<f64>,
    pub sigma: Matrix3<f64>,
    pub label: TrialityLabel,
}

/// Solve the dual equation for `tau^2 = tr(T^T T)` and rebuild
/// `F_k = T / (2 a zeta_k)`, `sigma_k = 2 a zeta_k F_k`. The unloaded root
/// `zeta = 0` carries no deformation gradient and is skipped.
pub fn tensor_reconstruct(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    t: &Matrix3<f64>,
    opts: &SolverOptions,
) -> Result<Vec<TensorBranch>> {
    let tau_sq = t.norm_squared();
    let set = solve_point(energy, m, tau_sq, 9, opts)?;
    Ok(set
        .roots
        .iter()
        .filter(|r| r.zeta != 0.0)
        .map(|r| {
            let f = t / (2.0 * m.a * r.zeta);
            TensorBranch {
                zeta: r.zeta,
                sigma: f * (2.0 * m.a * r.zeta),
                f,
                label: r.label,
            }
        })
        .collect())
}

/// Residuals `(|Lambda(RF) - Lambda(F)|, |tr((RF)^T RT) - tr(F^T T)|)`.
pub fn rotation_invariance_check(
    m: &QuadraticMeasure,
    f: &Matrix3<f64>,
    t: &Matrix3<f64>,
    r: &Matrix3<f64>,
) -> Result<(f64, f64)> {
    let orth = (r.transpose() * r - Matrix3::identity()).abs().max();
    let det = r.determinant();
    if orth > 1e-12 || (det - 1.0).abs() > 1e-12 {
        return Err(CdtError::InvalidRotation(format!(
            "|R^T R - I| = {orth:e}, det R = {det}"
        )));
    }
    let rf = r * f;
    let rt = r * t;
    Ok((
        (m.eval_matrix(&rf) - m.eval_matrix(f)).abs(),
        ((rf.transpose() * rt).trace() - (f.transpose() * t).trace()).abs(),
    ))
}

/// Proper rotation from the QR factor of a uniformly random matrix.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    loop {
        let a: Matrix3<f64> = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        if a.determinant().abs() < 1e-3 {
            continue;
        }
        let mut q = a.qr().q();
        if q.determinant() < 0.0 {
            q.column_mut(0).neg_mut();
        }
        return q;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dualsolve::{classify_root, hessian_spectrum, solve_all_roots};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dw() -> (CanonicalEnergy, QuadraticMeasure) {
        (
            CanonicalEnergy::quadratic(1.0).unwrap(),
            QuadraticMeasure::double_well(),
        )
    }

    fn log11() -> (CanonicalEnergy, QuadraticMeasure) {
        (
            CanonicalEnergy::log_neo_hookean(1.0, 1.0).unwrap(),
            QuadraticMeasure::shear(),
        )
    }

    #[test]
    fn fold_pair_densities() {
        let (e, m) = dw();
        let tau = (8.0f64 / 27.0).sqrt();
        let gamma = (8.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(
            primal_density(&e, &m, &[gamma], &[tau]).unwrap(),
            -5.0 / 6.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            dual_density(&e, &m, 1.0 / 3.0, 8.0 / 27.0).unwrap(),
            -5.0 / 6.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(primal_density(&e, &m, &[0.0], &[tau]).unwrap(), 0.5);
        let well = 2f64.sqrt();
        assert_abs_diff_eq!(
            primal_density(&e, &m, &[well, 0.0], &[0.0, 0.0]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn dual_density_examples() {
        let (e, m) = log11();
        assert_abs_diff_eq!(dual_density(&e, &m, 2.0, 16.0).unwrap(), -3.0, epsilon = 1e-14);
        let (e, m) = dw();
        assert_abs_diff_eq!(dual_density(&e, &m, -0.4, 0.0).unwrap(), -1.0 * -0.4 - 0.08);
        assert!(dual_density(&e, &m, 0.0, 1.0).is_err());
    }

    #[test]
    fn complementary_density_reduces() {
        for (e, m) in [dw(), log11()] {
            for tau in [[0.2, 0.1], [1.3, -0.4]] {
                let tau_sq = norm_sq(&tau);
                for r in solve_all_roots(&e, &m, tau_sq, &SolverOptions::default())
                    .unwrap()
                    .roots
                {
                    let gamma = stationary_strain(&m, r.zeta, &tau).unwrap();
                    let xi_val = total_complementary_density(&e, &m, &gamma, r.zeta, &tau).unwrap();
                    let gd = dual_density(&e, &m, r.zeta, tau_sq).unwrap();
                    let g = primal_density(&e, &m, &gamma, &tau).unwrap();
                    assert_abs_diff_eq!(xi_val, gd, epsilon = 1e-10 * gd.abs().max(1.0));
                    assert_abs_diff_eq!(g, gd, epsilon = 1e-8 * gd.abs().max(1.0));
                }
                // at zeta = dV(Lambda(gamma)) Xi reduces to the primal density
                let gamma = [0.9, -0.3];
                let zeta = e.derivative(m.eval(&gamma)).unwrap();
                assert_abs_diff_eq!(
                    total_complementary_density(&e, &m, &gamma, zeta, &tau).unwrap(),
                    primal_density(&e, &m, &gamma, &tau).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
        let (e, m) = dw();
        assert_eq!(
            total_complementary_density(&e, &m, &[0.0, 0.0], 0.5, &[3.0, 1.0]).unwrap(),
            -0.5 - 0.125
        );
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap_density(&QuadraticMeasure::shear(), &[1.0, 0.0], 1.0), 1.0);
        assert_abs_diff_eq!(gap_density(&QuadraticMeasure::double_well(), &[1.0, 1.0], -1.0), -1.0);
        assert!(gap_density(&QuadraticMeasure::double_well(), &[0.3, -7.0], 0.01) >= 0.0);
    }

    #[test]
    fn quadrature_examples() {
        let n = 64;
        let h = 1.0 / (n - 1) as f64;
        let wx = trapezoid_weights(n, h);
        let mut weights = Vec::new();
        let mut lin = Vec::new();
        for j in 0..n {
            for i in 0..n {
                weights.push(wx[i] * wx[j]);
                lin.push(i as f64 * h);
            }
        }
        assert_abs_diff_eq!(integrate(&weights, &vec![2.5; n * n]), 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(integrate(&weights, &lin), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(&wx, &vec![1.0; n]), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pairwise_sum_is_deterministic() {
        let v: Vec<f64> = (0..1000).map(|k| (k as f64).sin() * 1e-3).collect();
        assert_eq!(pairwise_sum(&v).to_bits(), pairwise_sum(&v.clone()).to_bits());
        assert_abs_diff_eq!(pairwise_sum(&v), v.iter().sum::<f64>(), epsilon = 1e-13);
    }

    #[test]
    fn tensor_branches() {
        let (e, m) = log11();
        let opts = SolverOptions::default();
        // T = 2 zeta I at zeta = 1.5: 4 zeta^2 dV*(zeta) = tr(T^T T) = 3 (2 zeta)^2
        // requires dV*(zeta) = 3, so pick zeta = dV(3).
        let zeta = e.derivative(3.0).unwrap();
        let t = Matrix3::identity() * (2.0 * zeta);
        let branches = tensor_reconstruct(&e, &m, &t, &opts).unwrap();
        let global = branches.iter().find(|b| b.zeta > 0.0).unwrap();
        assert_abs_diff_eq!((global.f - Matrix3::identity()).abs().max(), 0.0, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let t = Matrix3::from_fn(|_, _| rng.gen_range(-0.3..0.3));
            for b in tensor_reconstruct(&e, &m, &t, &opts).unwrap() {
                let xi = e.conjugate_derivative(b.zeta).unwrap();
                assert_abs_diff_eq!((b.f.transpose() * b.f).trace(), xi, epsilon = 1e-9 * xi.max(1.0));
                assert!((b.sigma - t).abs().max() <= 1e-14 * t.abs().max().max(1.0));
            }
        }
        // unloaded: only the trivial branch, which has no gradient here
        assert!(tensor_reconstruct(&e, &m, &Matrix3::zeros(), &opts).unwrap().is_empty());
        let (q, dwm) = dw();
        let unloaded = tensor_reconstruct(&q, &dwm, &Matrix3::zeros(), &opts).unwrap();
        assert_eq!(unloaded.len(), 1);
        assert_eq!(unloaded[0].f, Matrix3::zeros());
    }

    #[test]
    fn rotation_checks() {
        let m = QuadraticMeasure::shear();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Matrix3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        let t = Matrix3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        assert_eq!(
            rotation_invariance_check(&m, &f, &t, &Matrix3::identity()).unwrap(),
            (0.0, 0.0)
        );
        let quarter = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let (r1, r2) = rotation_invariance_check(&m, &f, &t, &quarter).unwrap();
        assert!(r1 <= 1e-13 && r2 <= 1e-13);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let (r1, r2) = rotation_invariance_check(&m, &f, &t, &r).unwrap();
            assert!(r1 <= 1e-12 * (1.0 + m.eval_matrix(&f).abs()) && r2 <= 1e-12 * (1.0 + m.eval_matrix(&f).abs()));
        }
        let reflect = Matrix3::from_diagonal(&nalgebra::Vector3::new(-1.0, 1.0, 1.0));
        assert!(matches!(
            rotation_invariance_check(&m, &f, &t, &reflect),
            Err(CdtError::InvalidRotation(_))
        ));
        assert!(rotation_invariance_check(&m, &f, &t, &(Matrix3::identity() * 1.01)).is_err());
    }

    #[test]
    fn global_root_beats_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (e, m) in [dw(), log11()] {
            for tau in [[0.2, 0.05], [0.9, 0.7]] {
                let tau_sq = norm_sq(&tau);
                let set = solve_all_roots(&e, &m, tau_sq, &SolverOptions::default()).unwrap();
                let z1 = set.global().unwrap().zeta;
                let g1 = stationary_strain(&m, z1, &tau).unwrap();
                let base = primal_density(&e, &m, &g1, &tau).unwrap();
                for _ in 0..1000 {
                    let d = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                    let p = [g1[0] + d[0], g1[1] + d[1]];
                    if m.eval(&p) <= 0.0 && matches!(e, CanonicalEnergy::LogNeoHookean { .. }) {
                        continue;
                    }
                    assert!(primal_density(&e, &m, &p, &tau).unwrap() - base >= -1e-10);
                }
                // Legendre-Hadamard at the global root
                let h = hessian_spectrum(&e, &m, z1, tau_sq).unwrap();
                assert!(h.parallel >= 0.0 && h.perpendicular >= 0.0);
                assert_eq!(classify_root(&e, &m, z1, &tau).unwrap(), TrialityLabel::GlobalMin);
            }
        }
    }

    #[test]
    fn complementary_function_is_stationary_at_roots() {
        let h = 1e-6;
        for (e, m) in [dw(), log11()] {
            let tau = [0.25, -0.1];
            let tau_sq = norm_sq(&tau);
            for r in solve_all_roots(&e, &m, tau_sq, &SolverOptions::default())
                .unwrap()
                .roots
            {
                let g = stationary_strain(&m, r.zeta, &tau).unwrap();
                let xi = |g: &[f64], z: f64| total_complementary_density(&e, &m, g, z, &tau).unwrap();
                let dz = (xi(&g, r.zeta + h) - xi(&g, r.zeta - h)) / (2.0 * h);
                assert!(dz.abs() <= 1e-6, "d/dzeta = {dz}");
                for k in 0..2 {
                    let mut gp = g.clone();
                    let mut gm = g.clone();
                    gp[k] += h;
                    gm[k] -= h;
                    let dg = (xi(&gp, r.zeta) - xi(&gm, r.zeta)) / (2.0 * h);
                    assert!(dg.abs() <= 1e-6, "d/dgamma = {dg}");
                }
            }
        }
    }
}
