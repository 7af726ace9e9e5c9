//! Discrete harmonic maps from Dirichlet data.
//!
//! Each ambient component solves the 5-point Laplace equation on the tensor
//! grid (the conservative polar form on annuli) with Jacobi-preconditioned
//! conjugate gradients. Rows are processed in parallel when requested, but
//! every reduction is combined in row order, so results do not depend on
//! the execution policy.

use crate::analytic::{polar_to_cartesian, AnalyticFamily, DomainSpec};
use crate::exec::Exec;
use crate::geometry::{Jet2, ParamPoint, Vector};
use crate::grid::{FieldNode, JetField, TensorGrid};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
    #[error("node ({0}, {1}) lies on a bounded edge of the grid")]
    BoundaryNode(usize, usize),
}

/// Map values at the boundary nodes of a grid, in [`TensorGrid::boundary_nodes`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub ambient_dim: usize,
    pub values: Vec<Vec<f64>>,
}

impl BoundaryData {
    pub fn from_fn(
        grid: &TensorGrid,
        ambient_dim: usize,
        f: impl Fn(ParamPoint) -> Vec<f64>,
    ) -> Result<Self, SolverError> {
        let values = grid
            .boundary_nodes()
            .into_iter()
            .map(|(i, j)| f(grid.param(i, j)))
            .collect();
        let data = Self {
            ambient_dim,
            values,
        };
        data.validate(grid)?;
        Ok(data)
    }

    /// Trace of an analytic family on the grid boundary.
    pub fn from_family(grid: &TensorGrid, family: &AnalyticFamily) -> Result<Self, SolverError> {
        Self::from_fn(grid, family.ambient_dim, |p| {
            let jet = family.family.jet_at(p);
            let mut v = vec![0.0; family.ambient_dim];
            v[..jet.ambient_dim()].copy_from_slice(jet.value.as_slice());
            v
        })
    }

    pub fn constant(grid: &TensorGrid, value: &[f64]) -> Result<Self, SolverError> {
        Self::from_fn(grid, value.len(), |_| value.to_vec())
    }

    pub fn from_table(grid: &TensorGrid, rows: Vec<Vec<f64>>) -> Result<Self, SolverError> {
        let ambient_dim = rows.first().map_or(0, Vec::len);
        let data = Self {
            ambient_dim,
            values: rows,
        };
        data.validate(grid)?;
        Ok(data)
    }

    pub fn validate(&self, grid: &TensorGrid) -> Result<(), SolverError> {
        let expected = grid.boundary_nodes().len();
        if expected == 0 {
            return Err(SolverError::InvalidBoundary(
                "grid has no bounded axis".into(),
            ));
        }
        if self.values.len() != expected {
            return Err(SolverError::InvalidBoundary(format!(
                "expected {expected} boundary nodes, got {}",
                self.values.len()
            )));
        }
        if self.ambient_dim == 0 || self.values.iter().any(|v| v.len() != self.ambient_dim) {
            return Err(SolverError::InvalidBoundary(
                "inconsistent ambient dimension".into(),
            ));
        }
        if self.values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(SolverError::InvalidBoundary("non-finite value".into()));
        }
        Ok(())
    }

    /// Largest per-component spread of the boundary values.
    pub fn range(&self) -> f64 {
        (0..self.ambient_dim)
            .map(|c| {
                let (lo, hi) = self
                    .values
                    .iter()
                    .map(|v| v[c])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                        (lo.min(x), hi.max(x))
                    });
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

/// Grid-sampled map into `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMap {
    pub domain: DomainSpec,
    pub grid: TensorGrid,
    pub ambient_dim: usize,
    /// Node-major values: component `c` of node `k` at `k * ambient_dim + c`.
    pub values: Vec<f64>,
    pub solver_residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl DiscreteMap {
    pub fn value(&self, i: usize, j: usize) -> &[f64] {
        let k = self.grid.index(i, j);
        &self.values[k * self.ambient_dim..(k + 1) * self.ambient_dim]
    }

    /// Exact samples of an analytic family (no solve).
    pub fn sample(family: &AnalyticFamily, resolution: usize) -> Self {
        let grid = TensorGrid::new(&family.domain, resolution);
        let n = family.ambient_dim;
        let mut values = vec![0.0; grid.len() * n];
        for k in 0..grid.len() {
            let (i, j) = grid.ij(k);
            let jet = family.family.jet_at(grid.param(i, j));
            values[k * n..k * n + jet.ambient_dim()].copy_from_slice(jet.value.as_slice());
        }
        let mut map = Self {
            domain: family.domain,
            grid,
            ambient_dim: n,
            values,
            solver_residual: 0.0,
            converged: false,
            iterations: 0,
        };
        map.solver_residual = residual(&map);
        map
    }

    fn component(&self, c: usize) -> Vec<f64> {
        (0..self.grid.len())
            .map(|k| self.values[k * self.ambient_dim + c])
            .collect()
    }
}

/// Stencil coefficients of node `(i, j)`: neighbours along axis 0 (minus,
/// plus), along axis 1 (each side) and the row scaling that makes the
/// operator symmetric.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    w0m: f64,
    w0p: f64,
    w1: f64,
    scale: f64,
}

fn stencil(grid: &TensorGrid, i: usize) -> Stencil {
    let (h0, h1) = grid.spacing();
    if grid.polar {
        let r = grid.axes[0].coord(i);
        Stencil {
            w0m: (r - 0.5 * h0) / (h0 * h0),
            w0p: (r + 0.5 * h0) / (h0 * h0),
            w1: 1.0 / (r * h1 * h1),
            scale: r,
        }
    } else {
        Stencil {
            w0m: 1.0 / (h0 * h0),
            w0p: 1.0 / (h0 * h0),
            w1: 1.0 / (h1 * h1),
            scale: 1.0,
        }
    }
}

/// 5-point Laplacian of a scalar node field at an interior node.
fn discrete_laplacian(grid: &TensorGrid, f: &[f64], i: usize, j: usize) -> Option<f64> {
    let ax = &grid.axes;
    let (im, ip) = (ax[0].offset(i, -1)?, ax[0].offset(i, 1)?);
    let (jm, jp) = (ax[1].offset(j, -1)?, ax[1].offset(j, 1)?);
    let s = stencil(grid, i);
    let c = f[grid.index(i, j)];
    let flux = s.w0p * (f[grid.index(ip, j)] - c) - s.w0m * (c - f[grid.index(im, j)])
        + s.w1 * (f[grid.index(i, jp)] - 2.0 * c + f[grid.index(i, jm)]);
    Some(flux / s.scale)
}

/// Max over interior nodes and components of the 5-point Laplacian.
pub fn residual(map: &DiscreteMap) -> f64 {
    let g = &map.grid;
    (0..map.ambient_dim)
        .map(|c| {
            let f = map.component(c);
            (0..g.len())
                .filter_map(|k| {
                    let (i, j) = g.ij(k);
                    discrete_laplacian(g, &f, i, j)
                })
                .fold(0.0_f64, |m, x| m.max(x.abs()))
        })
        .fold(0.0, f64::max)
}

/// Unknown layout: interior nodes, row by row.
struct Layout {
    i0: usize,
    m0: usize,
    j0: usize,
    m1: usize,
}

impl Layout {
    fn new(grid: &TensorGrid) -> Self {
        let (n0, n1) = grid.dims();
        let span = |periodic: bool, n: usize| if periodic { (0, n) } else { (1, n - 2) };
        let (i0, m0) = span(grid.axes[0].periodic, n0);
        let (j0, m1) = span(grid.axes[1].periodic, n1);
        Self { i0, m0, j0, m1 }
    }

    fn len(&self) -> usize {
        self.m0 * self.m1
    }

    fn node(&self, u: usize) -> (usize, usize) {
        (self.i0 + u % self.m0, self.j0 + u / self.m0)
    }

    fn unknown(&self, i: usize, j: usize) -> Option<usize> {
        let a = i.checked_sub(self.i0).filter(|&a| a < self.m0)?;
        let b = j.checked_sub(self.j0).filter(|&b| b < self.m1)?;
        Some(b * self.m0 + a)
    }
}

struct Operator<'a> {
    grid: &'a TensorGrid,
    layout: Layout,
    exec: Exec,
}

impl Operator<'_> {
    /// Neighbours of an unknown as `(weight, node)`.
    fn neighbours(&self, i: usize, j: usize) -> [(f64, usize, usize); 4] {
        let s = stencil(self.grid, i);
        let ax = &self.grid.axes;
        // interior nodes always have all four neighbours
        let im = ax[0].offset(i, -1).unwrap();
        let ip = ax[0].offset(i, 1).unwrap();
        let jm = ax[1].offset(j, -1).unwrap();
        let jp = ax[1].offset(j, 1).unwrap();
        [(s.w0m, im, j), (s.w0p, ip, j), (s.w1, i, jm), (s.w1, i, jp)]
    }

    fn diagonal(&self, i: usize) -> f64 {
        let s = stencil(self.grid, i);
        s.w0m + s.w0p + 2.0 * s.w1
    }

    /// `y = A x` with `A = -scale * Laplacian` restricted to unknowns.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let l = &self.layout;
        self.exec.for_each_chunk_mut(y, l.m0, |row, out| {
            for (a, yv) in out.iter_mut().enumerate() {
                let u = row * l.m0 + a;
                let (i, j) = l.node(u);
                let mut acc = self.diagonal(i) * x[u];
                for (w, ni, nj) in self.neighbours(i, j) {
                    if let Some(nu) = l.unknown(ni, nj) {
                        acc -= w * x[nu];
                    }
                }
                *yv = acc;
            }
        });
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let m0 = self.layout.m0;
        self.exec.ordered_sum(self.layout.m1, |row| {
            let r = row * m0..(row + 1) * m0;
            a[r.clone()].iter().zip(&b[r]).map(|(x, y)| x * y).sum()
        })
    }

    /// Max of `|r| / scale`, i.e. the Laplacian residual in natural units.
    fn lap_norm(&self, r: &[f64]) -> f64 {
        let l = &self.layout;
        r.iter()
            .enumerate()
            .map(|(u, x)| x.abs() / stencil(self.grid, l.node(u).0).scale)
            .fold(0.0, f64::max)
    }
}

/// Solves the component-wise Laplace equation with Dirichlet data.
///
/// Converged when the max-norm Laplacian residual is at most
/// `tol * boundary.range()`, floored at the round-off level of the discrete
/// Laplacian `8 eps max|data| / h^2`.
pub fn solve(
    domain: &DomainSpec,
    resolution: usize,
    boundary: &BoundaryData,
    tol: f64,
    max_iter: usize,
    exec: Exec,
) -> Result<DiscreteMap, SolverError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(SolverError::InvalidInput("tol must be positive".into()));
    }
    if resolution < 8 {
        return Err(SolverError::InvalidInput(format!(
            "resolution {resolution} below the minimum of 8"
        )));
    }
    domain
        .validate()
        .map_err(|e| SolverError::InvalidInput(e.to_string()))?;
    let grid = TensorGrid::new(domain, resolution);
    boundary.validate(&grid)?;

    let n = boundary.ambient_dim;
    let op = Operator {
        grid: &grid,
        layout: Layout::new(&grid),
        exec,
    };
    let max_abs = boundary
        .values
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let (h0, h1) = grid.spacing();
    let h = if grid.polar {
        h0.min(h1 * grid.axes[0].min)
    } else {
        h0.min(h1)
    };
    let roundoff = 8.0 * f64::EPSILON * max_abs / (h * h);
    let threshold = (tol * boundary.range()).max(roundoff);

    let bnodes = grid.boundary_nodes();
    let mut values = vec![0.0; grid.len() * n];
    for (b, &(i, j)) in bnodes.iter().enumerate() {
        let k = grid.index(i, j);
        values[k * n..(k + 1) * n].copy_from_slice(&boundary.values[b]);
    }

    let mut iterations = 0;
    let mut worst = 0.0f64;
    for c in 0..n {
        let mut field: Vec<f64> = (0..grid.len()).map(|k| values[k * n + c]).collect();
        let mean = boundary.values.iter().map(|v| v[c]).sum::<f64>() / bnodes.len() as f64;
        let (its, res) = solve_component(&op, &mut field, mean, threshold, max_iter);
        iterations = iterations.max(its);
        worst = worst.max(res);
        for k in 0..grid.len() {
            values[k * n + c] = field[k];
        }
        if res > threshold {
            return Err(SolverError::NotConverged {
                iterations: its,
                residual: res,
            });
        }
    }

    Ok(DiscreteMap {
        domain: *domain,
        grid: grid.clone(),
        ambient_dim: n,
        values,
        solver_residual: worst,
        converged: true,
        iterations,
    })
}

/// PCG on one component; `field` holds boundary values on entry and the
/// full solution on exit. Returns iterations and the final true residual.
fn solve_component(
    op: &Operator<'_>,
    field: &mut [f64],
    initial: f64,
    threshold: f64,
    max_iter: usize,
) -> (usize, f64) {
    let l = &op.layout;
    let grid = op.grid;
    let m = l.len();

    // b: contributions of the fixed boundary neighbours
    let mut b = vec![0.0; m];
    for (u, bu) in b.iter_mut().enumerate() {
        let (i, j) = l.node(u);
        for (w, ni, nj) in op.neighbours(i, j) {
            if l.unknown(ni, nj).is_none() {
                *bu += w * field[grid.index(ni, nj)];
            }
        }
    }
    let inv_diag: Vec<f64> = (0..m).map(|u| 1.0 / op.diagonal(l.node(u).0)).collect();

    let mut x = vec![initial; m];
    let mut ax = vec![0.0; m];
    let mut r = vec![0.0; m];
    let mut z = vec![0.0; m];
    let mut p = vec![0.0; m];
    let mut iterations = 0;
    let mut true_res;

    loop {
        op.apply(&x, &mut ax);
        for u in 0..m {
            r[u] = b[u] - ax[u];
        }
        true_res = op.lap_norm(&r);
        if true_res <= threshold || iterations >= max_iter {
            break;
        }
        for u in 0..m {
            z[u] = inv_diag[u] * r[u];
            p[u] = z[u];
        }
        let mut rz = op.dot(&r, &z);
        while iterations < max_iter {
            op.apply(&p, &mut ax);
            let pap = op.dot(&p, &ax);
            if pap.is_nan() || pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for u in 0..m {
                x[u] += alpha * p[u];
                r[u] -= alpha * ax[u];
            }
            iterations += 1;
            if op.lap_norm(&r) <= 0.5 * threshold {
                break;
            }
            for u in 0..m {
                z[u] = inv_diag[u] * r[u];
            }
            let rz_new = op.dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for u in 0..m {
                p[u] = z[u] + beta * p[u];
            }
        }
    }

    for (u, xu) in x.iter().enumerate() {
        let (i, j) = l.node(u);
        field[grid.index(i, j)] = *xu;
    }
    (iterations, true_res)
}

/// Central-difference jet at a node at least one cell from bounded edges.
/// On annuli the polar differences are converted to Cartesian derivatives.
pub fn jets_from_grid(map: &DiscreteMap, node: (usize, usize)) -> Result<Jet2, SolverError> {
    let (i, j) = node;
    let g = &map.grid;
    let err = SolverError::BoundaryNode(i, j);
    let ax = &g.axes;
    let im = ax[0].offset(i, -1).ok_or(err.clone())?;
    let ip = ax[0].offset(i, 1).ok_or(err.clone())?;
    let jm = ax[1].offset(j, -1).ok_or(err.clone())?;
    let jp = ax[1].offset(j, 1).ok_or(err)?;
    let (h0, h1) = g.spacing();
    let at = |a: usize, b: usize| Vector::from_column_slice(map.value(a, b));
    let c = at(i, j);
    let (e, w, nn, s) = (at(ip, j), at(im, j), at(i, jp), at(i, jm));
    let local = Jet2 {
        du: (&e - &w) / (2.0 * h0),
        dv: (&nn - &s) / (2.0 * h1),
        duu: (&e - &c * 2.0 + &w) / (h0 * h0),
        duv: (at(ip, jp) - at(ip, jm) - at(im, jp) + at(im, jm)) / (4.0 * h0 * h1),
        dvv: (&nn - &c * 2.0 + &s) / (h1 * h1),
        value: c,
    };
    Ok(if g.polar {
        let (r, phi) = g.axis_coords(i, j);
        polar_to_cartesian(r, phi, &local)
    } else {
        local
    })
}

/// Jets on the interior sub-grid with trapezoid weights over that sub-grid.
pub fn jet_field(map: &DiscreteMap, exec: Exec) -> JetField {
    let g = &map.grid;
    let weights = g.interior_weights();
    let full: f64 = g.full_weights().iter().sum();
    let inner: f64 = weights.iter().sum();
    let nodes: Vec<Option<FieldNode>> = exec.map(g.len(), |k| {
        let (i, j) = g.ij(k);
        jets_from_grid(map, (i, j)).ok().map(|jet| FieldNode {
            index: (i, j),
            param: g.param(i, j),
            jet,
            weight: weights[k],
        })
    });
    JetField {
        domain: map.domain,
        grid: g.clone(),
        nodes: nodes.into_iter().flatten().collect(),
        excluded_area_fraction: (1.0 - inner / full).max(0.0),
    }
}
