//! Nodal fields on a rectangular grid (and a 1-D interval), finite-difference
//! operators, stress from a stream function, and displacement reconstruction
//! by lattice path integration of the stationary strain.

use std::fmt;
use std::io::{self, Write};

use nalgebra::Matrix3;

use crate::canonical::QuadraticMeasure;
use crate::error::{CdtError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Edge::Left => [-1.0, 0.0],
            Edge::Right => [1.0, 0.0],
            Edge::Bottom => [0.0, -1.0],
            Edge::Top => [0.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Edge::Left => "left",
            Edge::Right => "right",
            Edge::Bottom => "bottom",
            Edge::Top => "top",
        }
    }

    pub fn parse(s: &str) -> Option<Edge> {
        Edge::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    /// Prescribed displacement `u = 0`.
    Fixed,
    /// Prescribed traction.
    Traction,
}

/// Rectangular node lattice. Boundary nodes are tagged edge by edge; a corner
/// is `Fixed` if either adjacent edge is.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub origin: [f64; 2],
    fixed: Vec<Edge>,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, origin: [f64; 2], fixed: &[Edge]) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(CdtError::InvalidParameter(format!(
                "grid needs at least 2 nodes per direction, got {nx} x {ny}"
            )));
        }
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(CdtError::InvalidParameter(format!(
                "grid spacings must be positive, got hx = {hx}, hy = {hy}"
            )));
        }
        if fixed.is_empty() {
            return Err(CdtError::InvalidParameter("grid needs at least one fixed edge".into()));
        }
        let mut fixed = fixed.to_vec();
        fixed.sort();
        fixed.dedup();
        Ok(Grid2 {
            nx,
            ny,
            hx,
            hy,
            origin,
            fixed,
        })
    }

    /// Grid covering `[0, lx] x [0, ly]`.
    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize, fixed: &[Edge]) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(CdtError::InvalidParameter(format!(
                "grid needs at least 2 nodes per direction, got {nx} x {ny}"
            )));
        }
        Grid2::new(nx, ny, lx / (nx - 1) as f64, ly / (ny - 1) as f64, [0.0, 0.0], fixed)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.hx, self.origin[1] + j as f64 * self.hy]
    }

    pub fn fixed_edges(&self) -> &[Edge] {
        &self.fixed
    }

    pub fn traction_edges(&self) -> Vec<Edge> {
        Edge::ALL.into_iter().filter(|e| !self.fixed.contains(e)).collect()
    }

    /// Edges a node lies on.
    pub fn edges_of(&self, i: usize, j: usize) -> Vec<Edge> {
        let mut out = Vec::new();
        if i == 0 {
            out.push(Edge::Left);
        }
        if i == self.nx - 1 {
            out.push(Edge::Right);
        }
        if j == 0 {
            out.push(Edge::Bottom);
        }
        if j == self.ny - 1 {
            out.push(Edge::Top);
        }
        out
    }

    pub fn tag(&self, i: usize, j: usize) -> Option<BoundaryTag> {
        let edges = self.edges_of(i, j);
        if edges.is_empty() {
            None
        } else if edges.iter().any(|e| self.fixed.contains(e)) {
            Some(BoundaryTag::Fixed)
        } else {
            Some(BoundaryTag::Traction)
        }
    }

    /// Nodes along an edge in increasing coordinate order.
    pub fn edge_nodes(&self, edge: Edge) -> Vec<(usize, usize)> {
        match edge {
            Edge::Left => (0..self.ny).map(|j| (0, j)).collect(),
            Edge::Right => (0..self.ny).map(|j| (self.nx - 1, j)).collect(),
            Edge::Bottom => (0..self.nx).map(|i| (i, 0)).collect(),
            Edge::Top => (0..self.nx).map(|i| (i, self.ny - 1)).collect(),
        }
    }

    pub fn edge_spacing(&self, edge: Edge) -> f64 {
        match edge {
            Edge::Left | Edge::Right => self.hy,
            Edge::Bottom | Edge::Top => self.hx,
        }
    }

    /// First fixed node in row-major order.
    pub fn first_fixed_node(&self) -> (usize, usize) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.tag(i, j) == Some(BoundaryTag::Fixed) {
                    return (i, j);
                }
            }
        }
        unreachable!("grid construction requires a fixed edge")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    pub grid: Grid2,
    pub values: Vec<[f64; 2]>,
}

impl ScalarField {
    pub fn new(grid: Grid2, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CdtError::InvalidParameter(format!(
                "scalar field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CdtError::InvalidParameter("scalar field has non-finite entries".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn from_fn(grid: &Grid2, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let [x, y] = grid.point(i, j);
                values.push(f(x, y));
            }
        }
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV with header `x,y,value`, row-major by y then x.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,value")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let [x, y] = self.grid.point(i, j);
                writeln!(w, "{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(self.at(i, j)))?;
            }
        }
        Ok(())
    }
}

impl VectorField2 {
    pub fn new(grid: Grid2, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CdtError::InvalidParameter(format!(
                "vector field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CdtError::InvalidParameter("vector field has non-finite entries".into()));
        }
        Ok(VectorField2 { grid, values })
    }

    pub fn from_fn(grid: &Grid2, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let [x, y] = grid.point(i, j);
                values.push(f(x, y));
            }
        }
        VectorField2 {
            grid: grid.clone(),
            values,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        self.values[self.grid.index(i, j)]
    }

    pub fn component(&self, k: usize) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v[k]).collect(),
        }
    }

    /// CSV with header `x,y,vx,vy`, row-major by y then x.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,vx,vy")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let [x, y] = self.grid.point(i, j);
                let [vx, vy] = self.at(i, j);
                writeln!(w, "{},{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(vx), fmt_f64(vy))?;
            }
        }
        Ok(())
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Second-order derivative of samples `f(0..n)` at `k`: central inside,
/// three-point one-sided at the ends (two-point when `n == 2`).
fn diff_at(f: impl Fn(usize) -> f64, n: usize, h: f64, k: usize) -> f64 {
    if n == 2 {
        return (f(1) - f(0)) / h;
    }
    if k == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if k == n - 1 {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

fn d_dx(grid: &Grid2, v: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            out.push(diff_at(|k| v(grid.index(k, j)), grid.nx, grid.hx, i));
        }
    }
    out
}

fn d_dy(grid: &Grid2, v: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            out.push(diff_at(|k| v(grid.index(i, k)), grid.ny, grid.hy, j));
        }
    }
    out
}

fn require_stencil(grid: &Grid2) -> Result<()> {
    if grid.nx < 3 || grid.ny < 3 {
        return Err(CdtError::InvalidParameter(format!(
            "second-order stencils need at least 3 x 3 nodes, got {} x {}",
            grid.nx, grid.ny
        )));
    }
    Ok(())
}

/// `tau = (d psi / dy, -d psi / dx)`, divergence free by construction.
pub fn stress_from_stream(psi: &ScalarField) -> VectorField2 {
    let g = &psi.grid;
    let dpx = d_dx(g, |k| psi.values[k]);
    let dpy = d_dy(g, |k| psi.values[k]);
    VectorField2 {
        grid: g.clone(),
        values: dpy.into_iter().zip(dpx).map(|(py, px)| [py, -px]).collect(),
    }
}

pub fn divergence(v: &VectorField2) -> Result<ScalarField> {
    require_stencil(&v.grid)?;
    let a = d_dx(&v.grid, |k| v.values[k][0]);
    let b = d_dy(&v.grid, |k| v.values[k][1]);
    Ok(ScalarField {
        grid: v.grid.clone(),
        values: a.iter().zip(&b).map(|(p, q)| p + q).collect(),
    })
}

/// Scalar curl `d v2 / dx - d v1 / dy`.
pub fn curl2(v: &VectorField2) -> Result<ScalarField> {
    require_stencil(&v.grid)?;
    let a = d_dx(&v.grid, |k| v.values[k][1]);
    let b = d_dy(&v.grid, |k| v.values[k][0]);
    Ok(ScalarField {
        grid: v.grid.clone(),
        values: a.iter().zip(&b).map(|(p, q)| p - q).collect(),
    })
}

/// Stationary strain `gamma = tau / (2 a zeta)` at every node.
pub fn strain_field(zeta: &ScalarField, tau: &VectorField2, m: &QuadraticMeasure) -> Result<VectorField2> {
    if zeta.grid != tau.grid {
        return Err(CdtError::InvalidParameter(
            "zeta and tau live on different grids".into(),
        ));
    }
    let mut values = Vec::with_capacity(zeta.values.len());
    for (k, (&z, t)) in zeta.values.iter().zip(&tau.values).enumerate() {
        if z.abs() < 1e-14 {
            let (i, j) = (k % zeta.grid.nx, k / zeta.grid.nx);
            return Err(CdtError::Singular(format!("|zeta| = {z:e} at node ({i}, {j})")));
        }
        values.push([t[0] / (2.0 * m.a * z), t[1] / (2.0 * m.a * z)]);
    }
    Ok(VectorField2 {
        grid: zeta.grid.clone(),
        values,
    })
}

/// Trapezoidal integrals of `gamma` along the two canonical lattice paths:
/// right-then-up and up-then-right from `anchor`.
fn lattice_integrals(gamma: &VectorField2, anchor: (usize, usize)) -> (Vec<f64>, Vec<f64>) {
    let g = &gamma.grid;
    let (i0, j0) = anchor;
    // signed running trapezoid from k0 to every k along one line
    let run = |n: usize, k0: usize, h: f64, f: &dyn Fn(usize) -> f64| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for k in k0 + 1..n {
            out[k] = out[k - 1] + 0.5 * h * (f(k - 1) + f(k));
        }
        for k in (0..k0).rev() {
            out[k] = out[k + 1] - 0.5 * h * (f(k) + f(k + 1));
        }
        out
    };
    let gx = |i: usize, j: usize| gamma.values[g.index(i, j)][0];
    let gy = |i: usize, j: usize| gamma.values[g.index(i, j)][1];

    let row0 = run(g.nx, i0, g.hx, &|i| gx(i, j0));
    let col0 = run(g.ny, j0, g.hy, &|j| gy(i0, j));
    let mut right_up = vec![0.0; g.len()];
    let mut up_right = vec![0.0; g.len()];
    for i in 0..g.nx {
        let col = run(g.ny, j0, g.hy, &|j| gy(i, j));
        for j in 0..g.ny {
            right_up[g.index(i, j)] = row0[i] + col[j];
        }
    }
    for j in 0..g.ny {
        let row = run(g.nx, i0, g.hx, &|i| gx(i, j));
        for i in 0..g.nx {
            up_right[g.index(i, j)] = col0[j] + row[i];
        }
    }
    (right_up, up_right)
}

fn check_anchor(grid: &Grid2, anchor: (usize, usize)) -> Result<()> {
    let (i, j) = anchor;
    if i >= grid.nx || j >= grid.ny || grid.tag(i, j) != Some(BoundaryTag::Fixed) {
        return Err(CdtError::InvalidParameter(format!(
            "anchor ({i}, {j}) is not a fixed boundary node"
        )));
    }
    Ok(())
}

fn check_curl(gamma: &VectorField2, curl_tol: Option<f64>) -> Result<()> {
    let curl = curl2(gamma)?;
    let scale = gamma
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v[0].abs()).max(v[1].abs()));
    let tol = curl_tol.unwrap_or(1e-6 * scale);
    let (k, residual) =
        curl.values.iter().enumerate().fold(
            (0, 0.0f64),
            |best, (k, v)| if v.abs() > best.1 { (k, v.abs()) } else { best },
        );
    if residual > tol {
        return Err(CdtError::NonIntegrable {
            residual,
            tol,
            i: k % gamma.grid.nx,
            j: k / gamma.grid.nx,
        });
    }
    Ok(())
}

/// `u(x) = int_{anchor}^{x} tau / (2 a zeta) . dx` along the right-then-up
/// lattice path. `curl_tol` defaults to `1e-6 max |gamma|`.
pub fn reconstruct_displacement(
    zeta: &ScalarField,
    tau: &VectorField2,
    m: &QuadraticMeasure,
    anchor: (usize, usize),
    curl_tol: Option<f64>,
) -> Result<ScalarField> {
    check_anchor(&zeta.grid, anchor)?;
    let gamma = strain_field(zeta, tau, m)?;
    check_curl(&gamma, curl_tol)?;
    let (right_up, _) = lattice_integrals(&gamma, anchor);
    Ok(ScalarField {
        grid: zeta.grid.clone(),
        values: right_up,
    })
}

/// Largest difference between the right-then-up and up-then-right path
/// integrals of the stationary strain.
pub fn path_discrepancy(
    zeta: &ScalarField,
    tau: &VectorField2,
    m: &QuadraticMeasure,
    anchor: (usize, usize),
) -> Result<f64> {
    check_anchor(&zeta.grid, anchor)?;
    let gamma = strain_field(zeta, tau, m)?;
    let (p, q) = lattice_integrals(&gamma, anchor);
    Ok(p.iter().zip(&q).fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
}

/// Outward traction `t = n . tau` at one node of a traction edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TractionNode {
    pub i: usize,
    pub j: usize,
    pub edge: Edge,
    pub t: f64,
}

/// `n . tau` at every node of every traction edge (corners appear once per edge).
pub fn boundary_traction(tau: &VectorField2) -> Vec<TractionNode> {
    let g = &tau.grid;
    let mut out = Vec::new();
    for edge in g.traction_edges() {
        let n = edge.outward_normal();
        for (i, j) in g.edge_nodes(edge) {
            let v = tau.at(i, j);
            out.push(TractionNode {
                i,
                j,
                edge,
                t: n[0] * v[0] + n[1] * v[1],
            });
        }
    }
    out
}

/// Equally spaced nodes on `[0, length]` with fixed and traction ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub n: usize,
    pub h: f64,
    pub fixed_left: bool,
    pub fixed_right: bool,
}

impl Interval {
    pub fn new(length: f64, n: usize, fixed_left: bool, fixed_right: bool) -> Result<Self> {
        if n < 2 || !(length > 0.0 && length.is_finite()) {
            return Err(CdtError::InvalidParameter(format!(
                "interval needs n >= 2 and positive length, got n = {n}, length = {length}"
            )));
        }
        if !fixed_left && !fixed_right {
            return Err(CdtError::InvalidParameter("interval needs a fixed end".into()));
        }
        Ok(Interval {
            n,
            h: length / (n - 1) as f64,
            fixed_left,
            fixed_right,
        })
    }

    pub fn point(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn anchor(&self) -> usize {
        if self.fixed_left {
            0
        } else {
            self.n - 1
        }
    }

    /// `(node, outward normal)` of each traction end.
    pub fn traction_ends(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if !self.fixed_left {
            out.push((0, -1.0));
        }
        if !self.fixed_right {
            out.push((self.n - 1, 1.0));
        }
        out
    }

    pub fn is_fixed(&self, k: usize) -> bool {
        (k == 0 && self.fixed_left) || (k == self.n - 1 && self.fixed_right)
    }
}

/// 1-D analogue of [`reconstruct_displacement`]: trapezoidal integral of
/// `tau / (2 a zeta)` from the anchor node.
pub fn reconstruct_displacement_1d(
    interval: &Interval,
    zeta: &[f64],
    tau: &[f64],
    m: &QuadraticMeasure,
) -> Result<Vec<f64>> {
    let mut gamma = Vec::with_capacity(interval.n);
    for (k, (&z, &t)) in zeta.iter().zip(tau).enumerate() {
        if z.abs() < 1e-14 {
            return Err(CdtError::Singular(format!("|zeta| = {z:e} at node {k}")));
        }
        gamma.push(t / (2.0 * m.a * z));
    }
    let k0 = interval.anchor();
    let h = interval.h;
    let mut u = vec![0.0; interval.n];
    for k in k0 + 1..interval.n {
        u[k] = u[k - 1] + 0.5 * h * (gamma[k - 1] + gamma[k]);
    }
    for k in (0..k0).rev() {
        u[k] = u[k + 1] - 0.5 * h * (gamma[k] + gamma[k + 1]);
    }
    Ok(u)
}

/// Anti-plane shear deformation gradient: identity with `grad u` in row 3.
pub fn antiplane_gradient_to_f(grad_u: [f64; 2]) -> Matrix3<f64> {
    Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        grad_u[0], grad_u[1], 1.0,
    )
}

/// Principal invariants `(I1, I2, I3)` of `C = F^T F`.
pub fn invariants_check(f: &Matrix3<f64>) -> (f64, f64, f64) {
    let c = f.transpose() * f;
    let i1 = c.trace();
    let i2 = 0.5 * (i1 * i1 - (c * c).trace());
    (i1, i2, c.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(n: usize) -> Grid2 {
        Grid2::rectangle(1.0, 1.0, n, n, &[Edge::Left]).unwrap()
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn grid_validation_and_tags() {
        assert!(Grid2::rectangle(1.0, 1.0, 1, 4, &[Edge::Left]).is_err());
        assert!(Grid2::rectangle(1.0, 1.0, 4, 4, &[]).is_err());
        assert!(Grid2::new(3, 3, 0.0, 1.0, [0.0, 0.0], &[Edge::Left]).is_err());
        let g = Grid2::rectangle(1.0, 1.0, 4, 3, &[Edge::Left, Edge::Bottom]).unwrap();
        assert_eq!(g.tag(0, 2), Some(BoundaryTag::Fixed));
        assert_eq!(g.tag(3, 0), Some(BoundaryTag::Fixed));
        assert_eq!(g.tag(3, 2), Some(BoundaryTag::Traction));
        assert_eq!(g.tag(1, 1), None);
        assert_eq!(g.traction_edges(), vec![Edge::Right, Edge::Top]);
        assert_eq!(g.first_fixed_node(), (0, 0));
    }

    #[test]
    fn stream_function_examples() {
        let g = unit(9);
        let c = 0.7;
        let tau = stress_from_stream(&ScalarField::from_fn(&g, |_, y| c * y));
        for v in &tau.values {
            assert_abs_diff_eq!(v[0], c, epsilon = 1e-13);
            assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-13);
        }
        let zero = stress_from_stream(&ScalarField::from_fn(&g, |_, _| 0.0));
        assert!(zero.values.iter().all(|v| v == &[0.0, 0.0]));
        let tau = stress_from_stream(&ScalarField::from_fn(&g, |x, y| x * y));
        for j in 0..g.ny {
            for i in 0..g.nx {
                let [x, y] = g.point(i, j);
                assert_abs_diff_eq!(tau.at(i, j)[0], x, epsilon = 1e-13);
                assert_abs_diff_eq!(tau.at(i, j)[1], -y, epsilon = 1e-13);
            }
        }
        assert!(max_abs(&divergence(&tau).unwrap().values) < 1e-12);
    }

    #[test]
    fn operator_examples() {
        let g = unit(7);
        let constant = VectorField2::from_fn(&g, |_, _| [2.0, -3.0]);
        assert!(divergence(&constant).unwrap().max_abs() < 1e-13);
        assert!(curl2(&constant).unwrap().max_abs() < 1e-13);
        let radial = VectorField2::from_fn(&g, |x, y| [x, y]);
        for v in divergence(&radial).unwrap().values {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
        }
        assert!(curl2(&radial).unwrap().max_abs() < 1e-12);
        let swirl = VectorField2::from_fn(&g, |x, y| [-y, x]);
        assert!(divergence(&swirl).unwrap().max_abs() < 1e-12);
        for v in curl2(&swirl).unwrap().values {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
        }
        let tiny = Grid2::rectangle(1.0, 1.0, 2, 5, &[Edge::Left]).unwrap();
        assert!(divergence(&VectorField2::from_fn(&tiny, |_, _| [0.0, 0.0])).is_err());
    }

    #[test]
    fn stream_stress_is_divergence_free_and_second_order() {
        // Discrete d/dx and d/dy commute, so the divergence is round-off;
        // the stress itself converges at second order.
        let psi = |x: f64, y: f64| (1.3 * x).sin() * (0.7 * y + 0.2).cos();
        let tau_exact = |x: f64, y: f64| {
            [
                -0.7 * (1.3 * x).sin() * (0.7 * y + 0.2).sin(),
                -1.3 * (1.3 * x).cos() * (0.7 * y + 0.2).cos(),
            ]
        };
        let mut errs = Vec::new();
        for n in [17, 33, 65] {
            let g = unit(n);
            let tau = stress_from_stream(&ScalarField::from_fn(&g, psi));
            assert!(divergence(&tau).unwrap().max_abs() < 1e-9);
            let mut err: f64 = 0.0;
            for j in 0..n {
                for i in 0..n {
                    let [x, y] = g.point(i, j);
                    let e = tau_exact(x, y);
                    let v = tau.at(i, j);
                    err = err.max((v[0] - e[0]).abs()).max((v[1] - e[1]).abs());
                }
            }
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "errors {errs:?}");
        }
    }

    #[test]
    fn constant_field_reconstruction() {
        let g = unit(11);
        let m = QuadraticMeasure::shear();
        let (tau0, z) = (0.8, 1.7);
        let zeta = ScalarField::from_fn(&g, |_, _| z);
        let tau = VectorField2::from_fn(&g, |_, _| [tau0, 0.0]);
        let u = reconstruct_displacement(&zeta, &tau, &m, (0, 0), None).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let [x, _] = g.point(i, j);
                assert_abs_diff_eq!(u.at(i, j), tau0 * x / (2.0 * z), epsilon = 1e-14);
            }
        }
        let zero =
            reconstruct_displacement(&zeta, &VectorField2::from_fn(&g, |_, _| [0.0, 0.0]), &m, (0, 3), None).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn reconstruction_errors() {
        let g = unit(6);
        let m = QuadraticMeasure::shear();
        let tau = VectorField2::from_fn(&g, |_, _| [1.0, 0.0]);
        let zeta = ScalarField::from_fn(&g, |x, _| if x > 0.5 { 0.0 } else { 1.0 });
        assert!(matches!(
            reconstruct_displacement(&zeta, &tau, &m, (0, 0), None),
            Err(CdtError::Singular(_))
        ));
        let ones = ScalarField::from_fn(&g, |_, _| 1.0);
        assert!(reconstruct_displacement(&ones, &tau, &m, (5, 5), None).is_err());
        let swirl = VectorField2::from_fn(&g, |x, y| [-y, x]);
        match reconstruct_displacement(&ones, &swirl, &m, (0, 0), None) {
            Err(CdtError::NonIntegrable { residual, .. }) => assert_abs_diff_eq!(residual, 1.0, epsilon = 1e-9),
            other => panic!("expected NonIntegrable, got {other:?}"),
        }
    }

    #[test]
    fn path_independence_for_gradient_fields() {
        // gamma = grad phi with phi quadratic: trapezoid is exact on both paths.
        let g = unit(64);
        let m = QuadraticMeasure::double_well();
        let zeta = ScalarField::from_fn(&g, |x, y| 1.0 + 0.5 * x * y);
        let grad = |x: f64, y: f64| [0.3 + 2.0 * x * 0.4 + 0.5 * y, 0.5 * x - 1.2 * y];
        let tau = VectorField2::from_fn(&g, |x, y| {
            let z = 1.0 + 0.5 * x * y;
            let gr = grad(x, y);
            [2.0 * m.a * z * gr[0], 2.0 * m.a * z * gr[1]]
        });
        let u = reconstruct_displacement(&zeta, &tau, &m, (0, 0), None).unwrap();
        let d = path_discrepancy(&zeta, &tau, &m, (0, 0)).unwrap();
        assert!(d <= 1e-8 * u.max_abs(), "discrepancy {d}");
        let phi = |x: f64, y: f64| 0.3 * x + 0.4 * x * x + 0.5 * x * y - 0.6 * y * y;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let [x, y] = g.point(i, j);
                assert_abs_diff_eq!(u.at(i, j), phi(x, y), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn reconstruction_converges_second_order() {
        let phi = |x: f64, y: f64| (x + 0.3).sin() * (1.0 + 0.5 * y).exp();
        let grad = |x: f64, y: f64| {
            [
                (x + 0.3).cos() * (1.0 + 0.5 * y).exp(),
                0.5 * (x + 0.3).sin() * (1.0 + 0.5 * y).exp(),
            ]
        };
        let m = QuadraticMeasure::shear();
        let mut errs = Vec::new();
        for n in [17, 33, 65] {
            let g = unit(n);
            let zeta = ScalarField::from_fn(&g, |_, _| 2.0);
            let tau = VectorField2::from_fn(&g, |x, y| {
                let gr = grad(x, y);
                [4.0 * gr[0], 4.0 * gr[1]]
            });
            let u = reconstruct_displacement(&zeta, &tau, &m, (0, 0), Some(1e-2)).unwrap();
            let mut err: f64 = 0.0;
            for j in 0..n {
                for i in 0..n {
                    let [x, y] = g.point(i, j);
                    err = err.max((u.at(i, j) - (phi(x, y) - phi(0.0, 0.0))).abs());
                }
            }
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "errors {errs:?}");
        }
    }

    #[test]
    fn traction_examples() {
        let g = Grid2::rectangle(1.0, 1.0, 5, 5, &[Edge::Left]).unwrap();
        let c = 1.5;
        let tau = VectorField2::from_fn(&g, |_, _| [c, 0.0]);
        for node in boundary_traction(&tau) {
            match node.edge {
                Edge::Right => assert_eq!(node.t, c),
                Edge::Top | Edge::Bottom => assert_eq!(node.t, 0.0),
                Edge::Left => unreachable!(),
            }
        }
        let tau = VectorField2::from_fn(&g, |x, y| [x, -y]);
        for node in boundary_traction(&tau).iter().filter(|n| n.edge == Edge::Right) {
            assert_abs_diff_eq!(node.t, 1.0);
        }
    }

    #[test]
    fn interval_reconstruction() {
        let iv = Interval::new(2.0, 5, true, false).unwrap();
        let m = QuadraticMeasure::double_well();
        let u = reconstruct_displacement_1d(&iv, &[0.5; 5], &[0.3; 5], &m).unwrap();
        for (k, v) in u.iter().enumerate() {
            assert_abs_diff_eq!(*v, 0.3 / 0.5 * iv.point(k), epsilon = 1e-15);
        }
        let iv = Interval::new(1.0, 3, false, true).unwrap();
        let u = reconstruct_displacement_1d(&iv, &[1.0; 3], &[2.0; 3], &m).unwrap();
        assert_eq!(u[2], 0.0);
        assert_abs_diff_eq!(u[0], -2.0);
        assert_eq!(iv.traction_ends(), vec![(0, -1.0)]);
        assert!(Interval::new(1.0, 3, false, false).is_err());
    }

    #[test]
    fn antiplane_invariants() {
        for (g, i1) in [([0.0, 0.0], 3.0), ([1.0, 0.0], 4.0), ([3.0, 4.0], 28.0)] {
            let f = antiplane_gradient_to_f(g);
            let (a, b, c) = invariants_check(&f);
            assert_abs_diff_eq!(a, i1, epsilon = 1e-12);
            assert_abs_diff_eq!(b, i1, epsilon = 1e-12);
            assert_abs_diff_eq!(c, 1.0, epsilon = 1e-12);
            assert_eq!(f.determinant(), 1.0);
        }
    }

    #[test]
    fn csv_layout() {
        let g = Grid2::rectangle(1.0, 2.0, 2, 2, &[Edge::Left]).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| x + 10.0 * y);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,value");
        assert_eq!(lines.len(), 5);
        let row: Vec<f64> = lines[2].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row, vec![1.0, 0.0, 1.0]);
        let v = VectorField2::from_fn(&g, |x, y| [x, y]);
        let mut buf = Vec::new();
        v.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,y,vx,vy\n"));
        let third = 1.0 / 3.0;
        assert_eq!(fmt_f64(third).parse::<f64>().unwrap(), third);
    }
}
