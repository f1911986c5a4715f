//! Pointwise canonical dual algebraic equation.
//!
//! Stationarity of `G(gamma) = V(a |gamma|^2 + b) - <gamma, tau>` gives
//! `gamma = tau / (2 a zeta)` with `zeta = dV(xi)`. Substituting back into the
//! measure yields the scalar equation
//!
//! ```text
//! h2(zeta) := 4 a zeta^2 (dV*(zeta) - b) = tau^2
//! ```
//!
//! whose real roots parametrize every stationary strain at a material point.
//! `h2` is piecewise monotone between its critical points, so every root is
//! bracketed on one monotone piece and polished by safeguarded Newton.

use std::fmt;
use std::str::FromStr;

use crate::canonical::{norm_sq, CanonicalEnergy, QuadraticMeasure};
use crate::error::{CdtError, Result};

/// Scaling of the dual residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualConvention {
    /// `4 a zeta^2 (dV* - b) - tau^2`, consistent with `gamma = tau / (2 a zeta)`.
    #[default]
    Derived,
    /// `zeta^2 (dV* - b) - tau^2`, the curve without the `4a` prefactor. Kept
    /// only to reproduce published figure data; its roots do not close the
    /// primal/dual energy gap.
    Unscaled,
}

impl ResidualConvention {
    fn prefactor(self, m: &QuadraticMeasure) -> f64 {
        match self {
            ResidualConvention::Derived => 4.0 * m.a,
            ResidualConvention::Unscaled => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ResidualConvention::Derived => "derived",
            ResidualConvention::Unscaled => "paper-eq45",
        }
    }
}

impl FromStr for ResidualConvention {
    type Err = CdtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derived" => Ok(ResidualConvention::Derived),
            "paper-eq45" | "unscaled" => Ok(ResidualConvention::Unscaled),
            other => Err(CdtError::InvalidParameter(format!(
                "unknown residual convention `{other}` (expected derived or paper-eq45)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when `|D(zeta)| <= tol * max(1, tau^2)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Grid size for the critical point scan used when no closed form exists.
    pub scan_points: usize,
    pub convention: ResidualConvention,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 200,
            scan_points: 10_000,
            convention: ResidualConvention::Derived,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialityLabel {
    GlobalMin,
    LocalMin,
    LocalMax,
    Saddle,
    Degenerate,
}

impl TrialityLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialityLabel::GlobalMin => "GlobalMin",
            TrialityLabel::LocalMin => "LocalMin",
            TrialityLabel::LocalMax => "LocalMax",
            TrialityLabel::Saddle => "Saddle",
            TrialityLabel::Degenerate => "Degenerate",
        }
    }
}

impl fmt::Display for TrialityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrialityLabel {
    type Err = CdtError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "GlobalMin" => TrialityLabel::GlobalMin,
            "LocalMin" => TrialityLabel::LocalMin,
            "LocalMax" => TrialityLabel::LocalMax,
            "Saddle" => TrialityLabel::Saddle,
            "Degenerate" => TrialityLabel::Degenerate,
            other => return Err(CdtError::InvalidParameter(format!("unknown triality label `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualRoot {
    pub zeta: f64,
    /// `D(zeta)` under the convention used to solve.
    pub residual: f64,
    pub label: TrialityLabel,
}

/// All real roots at one material point, ordered `zeta_1 >= 0 >= zeta_2 >= zeta_3`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualRootSet {
    pub tau_sq: f64,
    pub roots: Vec<DualRoot>,
}

impl DualRootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn zetas(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.zeta).collect()
    }

    /// The root in `S_a^+`, if any.
    pub fn global(&self) -> Option<&DualRoot> {
        self.roots.iter().find(|r| r.zeta > 0.0)
    }
}

/// Negative-branch fold of the dual curve: the root count drops from three
/// to one once `tau` exceeds `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldThreshold {
    pub zeta_c: f64,
    pub eta: f64,
}

/// Eigenvalues of the strain Hessian of `W(gamma) = V(a |gamma|^2 + b)` at
/// `gamma = tau / (2 a zeta)`: `perpendicular` has multiplicity `dim - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianSpectrum {
    pub perpendicular: f64,
    pub parallel: f64,
}

/// Left-hand side `h2(zeta)` of the dual equation. Defined at `zeta = 0`.
pub fn dual_curve(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    zeta: f64,
    convention: ResidualConvention,
) -> Result<f64> {
    let xi = energy.conjugate_derivative(zeta)?;
    Ok(convention.prefactor(m) * zeta * zeta * (xi - m.b))
}

fn dual_curve_derivative(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    zeta: f64,
    convention: ResidualConvention,
) -> Result<f64> {
    let xi = energy.conjugate_derivative(zeta)?;
    let dxi = energy.conjugate_second_derivative(zeta)?;
    Ok(convention.prefactor(m) * (2.0 * zeta * (xi - m.b) + zeta * zeta * dxi))
}

/// `D(zeta) = 4 a zeta^2 (dV*(zeta) - b) - tau^2`.
pub fn dual_residual(energy: &CanonicalEnergy, m: &QuadraticMeasure, zeta: f64, tau_sq: f64) -> Result<f64> {
    dual_residual_with(energy, m, zeta, tau_sq, ResidualConvention::Derived)
}

pub fn dual_residual_with(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    zeta: f64,
    tau_sq: f64,
    convention: ResidualConvention,
) -> Result<f64> {
    if zeta == 0.0 {
        return Err(CdtError::Singular("dual residual evaluated at zeta = 0".into()));
    }
    Ok(dual_curve(energy, m, zeta, convention)? - tau_sq)
}

/// Closed-form nonzero critical points of `h2`, when known.
fn closed_form_critical_points(energy: &CanonicalEnergy, m: &QuadraticMeasure) -> Option<Vec<f64>> {
    match *energy {
        // h2 = (4a/alpha) z^3 - 4ab z^2
        CanonicalEnergy::Quadratic { alpha } => {
            if m.b == 0.0 {
                Some(Vec::new())
            } else {
                Some(vec![2.0 * alpha * m.b / 3.0])
            }
        }
        // z e^{z/c2}: stationary at z = -2 c2 when b = 0
        CanonicalEnergy::LogNeoHookean { c2, .. } if m.b == 0.0 => Some(vec![-2.0 * c2]),
        CanonicalEnergy::LogNeoHookean { .. } => None,
    }
}

const SCAN_RADIUS: f64 = 1e3;

/// Sign scan of `h2'` over a logarithmic grid on `[-Z, -Z 1e-9] U [Z 1e-9, Z]`,
/// each sign change refined by bisection.
pub(crate) fn scan_critical_points(energy: &CanonicalEnergy, m: &QuadraticMeasure, opts: &SolverOptions) -> Vec<f64> {
    let per_side = (opts.scan_points / 2).max(2);
    let slope = |z: f64| {
        dual_curve_derivative(energy, m, z, ResidualConvention::Derived)
            .ok()
            .filter(|v| !v.is_nan())
    };
    let mut found = Vec::new();
    for side in [-1.0, 1.0] {
        let at = |k: usize| {
            let t = k as f64 / (per_side - 1) as f64;
            side * SCAN_RADIUS * 10f64.powf(-9.0 * (1.0 - t))
        };
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..per_side {
            let z = at(k);
            // exact zeros (including underflow) carry no sign; the bracket
            // between the neighbouring nonzero samples still catches a root
            let g = match slope(z) {
                Some(g) if g != 0.0 => g,
                Some(_) => continue,
                None => {
                    prev = None;
                    continue;
                }
            };
            if let Some((zp, gp)) = prev {
                if gp.signum() != g.signum() {
                    let (mut lo, mut hi, mut glo) = (zp, z, gp);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid == lo || mid == hi {
                            break;
                        }
                        match slope(mid) {
                            Some(gm) if gm.signum() == glo.signum() => {
                                lo = mid;
                                glo = gm;
                            }
                            _ => hi = mid,
                        }
                    }
                    found.push(0.5 * (lo + hi));
                }
            }
            prev = Some((z, g));
        }
    }
    found.sort_by(f64::total_cmp);
    found
}

/// Nonzero critical points of `h2`, ascending.
pub fn critical_points(energy: &CanonicalEnergy, m: &QuadraticMeasure, opts: &SolverOptions) -> Vec<f64> {
    closed_form_critical_points(energy, m).unwrap_or_else(|| scan_critical_points(energy, m, opts))
}

/// Fold threshold for the derived residual.
pub fn fold_threshold(energy: &CanonicalEnergy, m: &QuadraticMeasure) -> Result<FoldThreshold> {
    fold_threshold_with(energy, m, ResidualConvention::Derived)
}

pub fn fold_threshold_with(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    convention: ResidualConvention,
) -> Result<FoldThreshold> {
    let crit = closed_form_critical_points(energy, m).ok_or_else(|| {
        CdtError::NotImplemented(format!("no closed-form fold threshold for {energy} with b = {}", m.b))
    })?;
    let zeta_c = crit.into_iter().find(|&z| z < 0.0).ok_or_else(|| {
        CdtError::NotImplemented(format!(
            "{energy} with measure (a = {}, b = {}) has no negative fold",
            m.a, m.b
        ))
    })?;
    let h2 = dual_curve(energy, m, zeta_c, convention)?;
    Ok(FoldThreshold {
        zeta_c,
        eta: h2.max(0.0).sqrt(),
    })
}

/// Hessian eigenvalues at the stationary strain of root `zeta`.
pub fn hessian_spectrum(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    zeta: f64,
    tau_sq: f64,
) -> Result<HessianSpectrum> {
    if zeta == 0.0 {
        return Err(CdtError::Singular("Hessian requested at zeta = 0".into()));
    }
    let xi = energy.conjugate_derivative(zeta)?;
    let curvature = energy.second_derivative(xi)?;
    let a = m.a;
    let gamma_sq = tau_sq / (4.0 * a * a * zeta * zeta);
    let perpendicular = 2.0 * a * zeta;
    Ok(HessianSpectrum {
        perpendicular,
        parallel: perpendicular + 4.0 * a * a * curvature * gamma_sq,
    })
}

/// Triality label of root `zeta` for a strain space of dimension `strain_dim`.
pub fn classify(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    zeta: f64,
    tau_sq: f64,
    strain_dim: usize,
) -> Result<TrialityLabel> {
    if zeta == 0.0 {
        return Err(CdtError::Singular("cannot classify the root zeta = 0".into()));
    }
    if zeta > 0.0 {
        return Ok(TrialityLabel::GlobalMin);
    }
    let spec = hessian_spectrum(energy, m, zeta, tau_sq)?;
    let mut eigs = vec![spec.parallel];
    if strain_dim >= 2 {
        eigs.push(spec.perpendicular);
    }
    let eps = 1e-12 * (1.0 + (2.0 * m.a * zeta).abs());
    Ok(if eigs.iter().any(|l| l.abs() <= eps) {
        TrialityLabel::Degenerate
    } else if eigs.iter().all(|&l| l > 0.0) {
        TrialityLabel::LocalMin
    } else if eigs.iter().all(|&l| l < 0.0) {
        TrialityLabel::LocalMax
    } else {
        TrialityLabel::Saddle
    })
}

pub fn classify_root(energy: &CanonicalEnergy, m: &QuadraticMeasure, zeta: f64, tau: &[f64]) -> Result<TrialityLabel> {
    classify(energy, m, zeta, norm_sq(tau), tau.len())
}

/// Every real root for a scalar (one-dimensional) strain.
pub fn solve_all_roots(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    tau_sq: f64,
    opts: &SolverOptions,
) -> Result<DualRootSet> {
    solve_point(energy, m, tau_sq, 1, opts)
}

/// Every real root, labelled for a strain space of dimension `strain_dim`.
pub fn solve_point(
    energy: &CanonicalEnergy,
    m: &QuadraticMeasure,
    tau_sq: f64,
    strain_dim: usize,
    opts: &SolverOptions,
) -> Result<DualRootSet> {
    if !(tau_sq.is_finite() && tau_sq >= 0.0) {
        return Err(CdtError::InvalidParameter(format!(
            "tau^2 must be finite and non-negative, got {tau_sq}"
        )));
    }
    let conv = opts.convention;
    let stop = opts.tol * tau_sq.max(1.0);
    let f = |z: f64| dual_curve(energy, m, z, conv).map(|h| h - tau_sq);
    let df = |z: f64| dual_curve_derivative(energy, m, z, conv);

    let crit = critical_points(energy, m, opts);
    let mut roots: Vec<DualRoot> = Vec::new();
    let mut knot_sign = Vec::with_capacity(crit.len() + 1);
    let mut knots: Vec<f64> = crit.clone();
    knots.push(0.0);
    knots.sort_by(f64::total_cmp);

    for &k in &knots {
        let fk = f(k)?;
        let sign = if k == 0.0 {
            if tau_sq == 0.0 {
                roots.push(DualRoot {
                    zeta: 0.0,
                    residual: fk,
                    label: TrialityLabel::Degenerate,
                });
                0.0
            } else {
                -1.0
            }
        } else if fk.abs() <= stop {
            // double root sitting on the fold
            roots.push(DualRoot {
                zeta: k,
                residual: fk,
                label: TrialityLabel::Degenerate,
            });
            0.0
        } else {
            fk.signum()
        };
        knot_sign.push((k, fk, sign));
    }

    let mut push_root = |z: f64, fz: f64| -> Result<()> {
        roots.push(DualRoot {
            zeta: z,
            residual: fz,
            label: classify(energy, m, z, tau_sq, strain_dim)?,
        });
        Ok(())
    };

    for w in knot_sign.windows(2) {
        let (lo, flo, slo) = w[0];
        let (hi, fhi, shi) = w[1];
        if slo * shi < 0.0 {
            let z = refine(&f, &df, lo, hi, flo, fhi, stop, opts.max_iter)?;
            push_root(z, f(z)?)?;
        }
    }
    let (first, ffirst, sfirst) = knot_sign[0];
    let (last, flast, slast) = knot_sign[knot_sign.len() - 1];
    for (start, fstart, sstart, dir) in [(first, ffirst, sfirst, -1.0), (last, flast, slast, 1.0)] {
        if sstart == 0.0 {
            continue;
        }
        if let Some((far, ffar)) = expand_bracket(&f, start, sstart, dir) {
            let (lo, hi, flo, fhi) = if dir < 0.0 {
                (far, start, ffar, fstart)
            } else {
                (start, far, fstart, ffar)
            };
            let z = refine(&f, &df, lo, hi, flo, fhi, stop, opts.max_iter)?;
            push_root(z, f(z)?)?;
        }
    }

    if roots.is_empty() && tau_sq > 0.0 {
        return Err(CdtError::NoRoot { tau_sq });
    }
    roots.sort_by(|p, q| q.zeta.total_cmp(&p.zeta));
    Ok(DualRootSet { tau_sq, roots })
}

const EXPANSION_LIMIT: f64 = 1e15;

/// Walk outward from `start` with doubling steps until `f` changes sign.
fn expand_bracket(f: &impl Fn(f64) -> Result<f64>, start: f64, start_sign: f64, dir: f64) -> Option<(f64, f64)> {
    let mut step = start.abs().max(1.0);
    loop {
        let x = start + dir * step;
        if !x.is_finite() || x.abs() > EXPANSION_LIMIT {
            return None;
        }
        let fx = f(x).ok()?;
        if fx.is_nan() {
            return None;
        }
        if fx != 0.0 && fx.signum() != start_sign {
            return Some((x, fx));
        }
        step *= 2.0;
    }
}

/// Safeguarded Newton on a sign-change bracket, bisecting whenever an
/// iterate leaves the bracket.
#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> Result<f64>,
    df: &impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    mut flo: f64,
    fhi: f64,
    stop: f64,
    max_iter: usize,
) -> Result<f64> {
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    let mut best = if flo.abs() < fhi.abs() { (lo, flo) } else { (hi, fhi) };
    let mut x = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= stop {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            // bracket collapsed to adjacent floats
            return Ok(best.0);
        }
        let slope = df(x)?;
        let newton = x - fx / slope;
        x = if slope != 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            mid
        };
    }
    Err(CdtError::NoConvergence {
        iterations: max_iter,
        lo,
        hi,
    })
}
