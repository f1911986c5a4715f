//! wasm-bindgen bindings behind `www/index.html`: the dual curve, the dual
//! roots of a load, and the primal energy landscape along the load direction.

use cdt_core::dualsolve::{dual_curve, solve_point, ResidualConvention, SolverOptions};
use cdt_core::energies::{dual_density, primal_density};
use cdt_core::{CanonicalEnergy, CdtError, QuadraticMeasure};
use wasm_bindgen::prelude::*;

fn to_js(e: CdtError) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// A canonical energy paired with its quadratic measure.
#[wasm_bindgen]
pub struct Model {
    energy: CanonicalEnergy,
    measure: QuadraticMeasure,
}

impl Model {
    /// `kind` is `double_well` (`p1 = alpha`) or `log_neohookean`
    /// (`p1 = c1`, `p2 = c2`).
    pub fn build(kind: &str, p1: f64, p2: f64, a: f64, b: f64) -> Result<Model, CdtError> {
        let energy = match kind {
            "double_well" => CanonicalEnergy::quadratic(p1)?,
            "log_neohookean" => CanonicalEnergy::log_neo_hookean(p1, p2)?,
            other => return Err(CdtError::InvalidParameter(format!("unknown model `{other}`"))),
        };
        Ok(Model {
            energy,
            measure: QuadraticMeasure::new(a, b)?,
        })
    }

    /// `h^2(zeta)` on `n` points of `[lo, hi]`; `NaN` where undefined.
    pub fn h_curve(&self, lo: f64, hi: f64, n: usize, unscaled: bool) -> Vec<f64> {
        let conv = if unscaled {
            ResidualConvention::Unscaled
        } else {
            ResidualConvention::Derived
        };
        grid(lo, hi, n)
            .map(|z| dual_curve(&self.energy, &self.measure, z, conv).unwrap_or(f64::NAN))
            .collect()
    }

    /// Flattened `[zeta, G^d(zeta), label code]` triples, largest root first.
    /// Label codes: 0 global min, 1 local min, 2 local max, 3 saddle,
    /// 4 degenerate.
    pub fn root_table(&self, tau_sq: f64, dim: usize) -> Result<Vec<f64>, CdtError> {
        let set = solve_point(&self.energy, &self.measure, tau_sq, dim, &SolverOptions::default())?;
        let mut out = Vec::with_capacity(3 * set.len());
        for r in &set.roots {
            out.push(r.zeta);
            out.push(dual_density(&self.energy, &self.measure, r.zeta, tau_sq).unwrap_or(f64::NAN));
            out.push(r.label as u8 as f64);
        }
        Ok(out)
    }

    /// `G(gamma)` for scalar `gamma` on `n` points of `[lo, hi]`; `NaN`
    /// outside the energy's domain.
    pub fn landscape_values(&self, tau: f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        grid(lo, hi, n)
            .map(|g| primal_density(&self.energy, &self.measure, &[g], &[tau]).unwrap_or(f64::NAN))
            .collect()
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let d = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |k| lo + d * k as f64)
}

#[wasm_bindgen]
impl Model {
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, p1: f64, p2: f64, a: f64, b: f64) -> Result<Model, JsValue> {
        Model::build(kind, p1, p2, a, b).map_err(to_js)
    }

    #[wasm_bindgen(js_name = dualCurve)]
    pub fn dual_curve(&self, lo: f64, hi: f64, n: usize, unscaled: bool) -> Vec<f64> {
        self.h_curve(lo, hi, n, unscaled)
    }

    pub fn roots(&self, tau_sq: f64, dim: usize) -> Result<Vec<f64>, JsValue> {
        self.root_table(tau_sq, dim).map_err(to_js)
    }

    pub fn landscape(&self, tau: f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        self.landscape_values(tau, lo, hi, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_well_fold_roots() {
        let m = Model::build("double_well", 1.0, 0.0, 0.5, -1.0).unwrap();
        let t = m.root_table(8.0 / 27.0, 1).unwrap();
        assert_eq!(t.len(), 6);
        assert!((t[0] - 1.0 / 3.0).abs() < 1e-10);
        assert!((t[1] + 5.0 / 6.0).abs() < 1e-9);
        assert_eq!(t[2], 0.0);
        assert!((t[3] + 2.0 / 3.0).abs() < 1e-6);
        assert_eq!(t[5], 4.0);
    }

    #[test]
    fn curves_and_landscape() {
        let m = Model::build("log_neohookean", 1.0, 1.0, 1.0, 0.0).unwrap();
        let h = m.h_curve(-3.0, 1.0, 5, false);
        let hu = m.h_curve(-3.0, 1.0, 5, true);
        for (d, u) in h.iter().zip(&hu) {
            assert!((d - 4.0 * u).abs() <= 1e-14 * d.abs().max(1.0));
        }
        let g = m.landscape_values(0.3, -1.0, 1.0, 3);
        assert!(g[1].is_nan(), "log energy is undefined at xi = 0");
        assert!(g[0].is_finite() && g[2].is_finite());
        assert!(Model::build("ogden", 1.0, 1.0, 1.0, 0.0).is_err());
    }
}
