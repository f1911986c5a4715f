//! Problem instances and their flat `key = value` configuration format.
//!
//! ```text
//! # double-well bar loaded at the fold
//! model = double_well        # or log_neohookean
//! alpha = 1.0                # double_well stiffness
//! # c1 = 1.0, c2 = 1.0       # log_neohookean constants
//! measure_a = 0.5            # defaults: (0.5, -1) double_well, (1, 0) log_neohookean
//! measure_b = -1.0
//! geometry = interval        # or rectangle (lx, ly, nx, ny)
//! length = 1.0
//! n = 9
//! loading = constant_tau     # or stream_function (stream, stream_coeff)
//! tau_sq = 0.2962962962962963
//! fixed = left
//! ```

use std::collections::BTreeMap;

use crate::canonical::{CanonicalEnergy, QuadraticMeasure};
use crate::dualsolve::SolverOptions;
use crate::energies::{trapezoid_weights, BoundaryPoint};
use crate::error::{CdtError, Result};
use crate::fields::{stress_from_stream, Edge, Grid2, Interval, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Interval { length: f64, n: usize },
    Rectangle { lx: f64, ly: f64, nx: usize, ny: usize },
}

/// Stream functions available to generate divergence-free stress.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// `psi = k y`, constant stress `(k, 0)`.
    Linear,
    /// `psi = k x y`, stress `(k x, -k y)`.
    Bilinear,
    /// `psi = k y^2 / 2`, stress `(k y, 0)`.
    Quadratic,
}

impl StreamKind {
    pub fn name(self) -> &'static str {
        match self {
            StreamKind::Linear => "linear",
            StreamKind::Bilinear => "bilinear",
            StreamKind::Quadratic => "quadratic",
        }
    }

    pub fn psi(self, coeff: f64, x: f64, y: f64) -> f64 {
        match self {
            StreamKind::Linear => coeff * y,
            StreamKind::Bilinear => coeff * x * y,
            StreamKind::Quadratic => 0.5 * coeff * y * y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loading {
    ConstantTau([f64; 2]),
    Stream { kind: StreamKind, coeff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub n_starts: usize,
    pub seed: u64,
    /// Starts are drawn uniformly from `[-s, s]` per free node.
    pub start_scale: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            n_starts: 50,
            seed: 0,
            start_scale: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub energy: CanonicalEnergy,
    pub measure: QuadraticMeasure,
    pub geometry: Geometry,
    pub loading: Loading,
    pub fixed: Vec<Edge>,
    pub solver: SolverOptions,
    pub oracle: OracleOptions,
    /// Curl tolerance for displacement reconstruction; `None` uses the
    /// field-relative default.
    pub curl_tol: Option<f64>,
}

const KEYS: &[&str] = &[
    "model",
    "alpha",
    "c1",
    "c2",
    "measure_a",
    "measure_b",
    "geometry",
    "length",
    "n",
    "lx",
    "ly",
    "nx",
    "ny",
    "loading",
    "tau",
    "tau_sq",
    "stream",
    "stream_coeff",
    "fixed",
    "tol",
    "max_iter",
    "scan_points",
    "curl_tol",
    "n_starts",
    "seed",
    "start_scale",
];

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CdtError::config(
                    line,
                    format!("line {} is not of the form `key = value`", lineno + 1),
                ));
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CdtError::config(key, "unknown key"));
            }
            if map.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(CdtError::config(key, "duplicate key"));
            }
        }
        Ok(Entries(map))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| CdtError::config(key, "missing required key"))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    fn f64_required(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.required(key)?)
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CdtError::config(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>> {
        self.required(key)?
            .split(',')
            .map(|s| parse_f64(key, s.trim()))
            .collect()
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| CdtError::config(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(CdtError::config(key, format!("`{v}` is not finite")));
    }
    Ok(x)
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(CdtError::config(key, format!("must be positive, got {x}")))
    }
}

impl ProblemSpec {
    /// Parse and validate a configuration.
    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::parse(text)?;

        let (energy, default_measure) = match e.required("model")? {
            "double_well" => {
                let alpha = positive("alpha", e.f64_or("alpha", 1.0)?)?;
                (CanonicalEnergy::quadratic(alpha)?, QuadraticMeasure::double_well())
            }
            "log_neohookean" => {
                let c1 = positive("c1", e.f64_required("c1")?)?;
                let c2 = positive("c2", e.f64_required("c2")?)?;
                (CanonicalEnergy::log_neo_hookean(c1, c2)?, QuadraticMeasure::shear())
            }
            other => {
                return Err(CdtError::config(
                    "model",
                    format!("unknown model `{other}` (expected double_well or log_neohookean)"),
                ))
            }
        };
        let a = positive("measure_a", e.f64_or("measure_a", default_measure.a)?)?;
        let b = e.f64_or("measure_b", default_measure.b)?;
        let measure = QuadraticMeasure { a, b };

        let geometry = match e.required("geometry")? {
            "interval" => Geometry::Interval {
                length: positive("length", e.f64_or("length", 1.0)?)?,
                n: e.usize_or("n", 9)?,
            },
            "rectangle" => Geometry::Rectangle {
                lx: positive("lx", e.f64_or("lx", 1.0)?)?,
                ly: positive("ly", e.f64_or("ly", 1.0)?)?,
                nx: e.usize_or("nx", 9)?,
                ny: e.usize_or("ny", 9)?,
            },
            other => {
                return Err(CdtError::config(
                    "geometry",
                    format!("unknown geometry `{other}` (expected interval or rectangle)"),
                ))
            }
        };
        let is_interval = matches!(geometry, Geometry::Interval { .. });

        let loading = match e.required("loading")? {
            "constant_tau" => {
                let tau = match (e.raw("tau"), e.raw("tau_sq")) {
                    (Some(_), Some(_)) => {
                        return Err(CdtError::config("tau_sq", "give either tau or tau_sq, not both"))
                    }
                    (None, Some(v)) => {
                        let t2 = parse_f64("tau_sq", v)?;
                        if t2 < 0.0 {
                            return Err(CdtError::config("tau_sq", "must be non-negative"));
                        }
                        [t2.sqrt(), 0.0]
                    }
                    _ => {
                        let v = e.vector("tau")?;
                        match (is_interval, v.as_slice()) {
                            (true, [t]) => [*t, 0.0],
                            (false, [t1, t2]) => [*t1, *t2],
                            (true, _) => return Err(CdtError::config("tau", "interval loading takes one component")),
                            (false, _) => {
                                return Err(CdtError::config("tau", "rectangle loading takes two components"))
                            }
                        }
                    }
                };
                Loading::ConstantTau(tau)
            }
            "stream_function" => {
                if is_interval {
                    return Err(CdtError::config(
                        "loading",
                        "stream functions need a rectangle; an interval carries constant stress by statics",
                    ));
                }
                let kind = match e.required("stream")? {
                    "linear" => StreamKind::Linear,
                    "bilinear" => StreamKind::Bilinear,
                    "quadratic" => StreamKind::Quadratic,
                    other => {
                        return Err(CdtError::config(
                            "stream",
                            format!("unknown stream function `{other}` (expected linear, bilinear or quadratic)"),
                        ))
                    }
                };
                Loading::Stream {
                    kind,
                    coeff: e.f64_required("stream_coeff")?,
                }
            }
            other => {
                return Err(CdtError::config(
                    "loading",
                    format!("unknown loading `{other}` (expected constant_tau or stream_function)"),
                ))
            }
        };

        let mut fixed = Vec::new();
        for name in e.raw("fixed").unwrap_or("left").split(',') {
            let name = name.trim();
            if name.is_empty() {
                continue;
            }
            let edge = Edge::parse(name).ok_or_else(|| CdtError::config("fixed", format!("unknown edge `{name}`")))?;
            fixed.push(edge);
        }

        let defaults = SolverOptions::default();
        let solver = SolverOptions {
            tol: positive("tol", e.f64_or("tol", defaults.tol)?)?,
            max_iter: e.usize_or("max_iter", defaults.max_iter)?,
            scan_points: e.usize_or("scan_points", defaults.scan_points)?,
            convention: defaults.convention,
        };
        let od = OracleOptions::default();
        let oracle = OracleOptions {
            n_starts: e.usize_or("n_starts", od.n_starts)?,
            seed: e.usize_or("seed", od.seed as usize)? as u64,
            start_scale: positive("start_scale", e.f64_or("start_scale", od.start_scale)?)?,
        };
        let curl_tol = match e.raw("curl_tol") {
            Some(v) => Some(positive("curl_tol", parse_f64("curl_tol", v)?)?),
            None => None,
        };

        let spec = ProblemSpec {
            energy,
            measure,
            geometry,
            loading,
            fixed,
            solver,
            oracle,
            curl_tol,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fixed.is_empty() {
            return Err(CdtError::config(
                "fixed",
                "no fixed boundary: with traction on the whole boundary the solution is only \
                 determined up to a rigid shift and the load must be self-equilibrated; the \
                 mixed boundary value problem needs at least one fixed edge",
            ));
        }
        match self.geometry {
            Geometry::Interval { n, .. } => {
                if n < 2 {
                    return Err(CdtError::config("n", "interval needs at least 2 nodes"));
                }
                if let Some(e) = self.fixed.iter().find(|e| !matches!(e, Edge::Left | Edge::Right)) {
                    return Err(CdtError::config("fixed", format!("an interval has no `{e}` end")));
                }
            }
            Geometry::Rectangle { nx, ny, .. } => {
                if nx < 3 {
                    return Err(CdtError::config("nx", "rectangle needs at least 3 nodes per direction"));
                }
                if ny < 3 {
                    return Err(CdtError::config("ny", "rectangle needs at least 3 nodes per direction"));
                }
            }
        }
        if self.solver.max_iter == 0 {
            return Err(CdtError::config("max_iter", "must be positive"));
        }
        if self.solver.scan_points < 4 {
            return Err(CdtError::config("scan_points", "must be at least 4"));
        }
        if self.oracle.n_starts == 0 {
            return Err(CdtError::config("n_starts", "must be positive"));
        }
        Ok(())
    }

    pub fn strain_dim(&self) -> usize {
        match self.geometry {
            Geometry::Interval { .. } => 1,
            Geometry::Rectangle { .. } => 2,
        }
    }

    pub fn is_constant_load(&self) -> bool {
        matches!(
            self.loading,
            Loading::ConstantTau(_)
                | Loading::Stream {
                    kind: StreamKind::Linear,
                    ..
                }
        )
    }

    pub fn interval(&self) -> Result<Interval> {
        match self.geometry {
            Geometry::Interval { length, n } => Interval::new(
                length,
                n,
                self.fixed.contains(&Edge::Left),
                self.fixed.contains(&Edge::Right),
            ),
            Geometry::Rectangle { .. } => Err(CdtError::InvalidParameter("problem is not 1-D".into())),
        }
    }

    pub fn grid(&self) -> Result<Grid2> {
        match self.geometry {
            Geometry::Rectangle { lx, ly, nx, ny } => Grid2::rectangle(lx, ly, nx, ny, &self.fixed),
            Geometry::Interval { .. } => Err(CdtError::InvalidParameter("problem is not 2-D".into())),
        }
    }

    /// Length or area of the domain.
    pub fn domain_measure(&self) -> f64 {
        match self.geometry {
            Geometry::Interval { length, .. } => length,
            Geometry::Rectangle { lx, ly, .. } => lx * ly,
        }
    }

    /// Node coordinates, row-major by y then x (`y = 0` on an interval).
    pub fn nodes(&self) -> Result<Vec<[f64; 2]>> {
        Ok(match self.geometry {
            Geometry::Interval { .. } => {
                let iv = self.interval()?;
                (0..iv.n).map(|k| [iv.point(k), 0.0]).collect()
            }
            Geometry::Rectangle { .. } => {
                let g = self.grid()?;
                let mut out = Vec::with_capacity(g.len());
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        out.push(g.point(i, j));
                    }
                }
                out
            }
        })
    }

    /// Statically admissible stress at every node.
    pub fn nodal_tau(&self) -> Result<Vec<[f64; 2]>> {
        let n = self.nodes()?.len();
        match self.loading {
            Loading::ConstantTau(t) => Ok(vec![t; n]),
            Loading::Stream { kind, coeff } => {
                let g = self.grid()?;
                let psi = ScalarField::from_fn(&g, |x, y| kind.psi(coeff, x, y));
                Ok(stress_from_stream(&psi).values)
            }
        }
    }

    /// Trapezoid weights for integrals over the domain.
    pub fn quadrature_weights(&self) -> Result<Vec<f64>> {
        Ok(match self.geometry {
            Geometry::Interval { .. } => {
                let iv = self.interval()?;
                trapezoid_weights(iv.n, iv.h)
            }
            Geometry::Rectangle { .. } => {
                let g = self.grid()?;
                let wx = trapezoid_weights(g.nx, g.hx);
                let wy = trapezoid_weights(g.ny, g.hy);
                let mut w = Vec::with_capacity(g.len());
                for wj in &wy {
                    for wi in &wx {
                        w.push(wi * wj);
                    }
                }
                w
            }
        })
    }

    /// Quadrature points of the traction term `int_{Gamma_t} u t`, with
    /// `t = n . tau` evaluated at each node.
    pub fn boundary_points(&self, tau: &[[f64; 2]]) -> Result<Vec<BoundaryPoint>> {
        Ok(match self.geometry {
            Geometry::Interval { .. } => self
                .interval()?
                .traction_ends()
                .into_iter()
                .map(|(node, normal)| BoundaryPoint {
                    node,
                    weight: 1.0,
                    traction: normal * tau[node][0],
                })
                .collect(),
            Geometry::Rectangle { .. } => {
                let g = self.grid()?;
                let mut out = Vec::new();
                for edge in g.traction_edges() {
                    let nodes = g.edge_nodes(edge);
                    let w = trapezoid_weights(nodes.len(), g.edge_spacing(edge));
                    let normal = edge.outward_normal();
                    for ((i, j), weight) in nodes.into_iter().zip(w) {
                        let k = g.index(i, j);
                        out.push(BoundaryPoint {
                            node: k,
                            weight,
                            traction: normal[0] * tau[k][0] + normal[1] * tau[k][1],
                        });
                    }
                }
                out
            }
        })
    }

    /// Nodes carrying the condition `u = 0`.
    pub fn fixed_nodes(&self) -> Result<Vec<usize>> {
        Ok(match self.geometry {
            Geometry::Interval { .. } => {
                let iv = self.interval()?;
                (0..iv.n).filter(|&k| iv.is_fixed(k)).collect()
            }
            Geometry::Rectangle { .. } => {
                let g = self.grid()?;
                let mut out = Vec::new();
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        if g.tag(i, j) == Some(crate::fields::BoundaryTag::Fixed) {
                            out.push(g.index(i, j));
                        }
                    }
                }
                out
            }
        })
    }
}
