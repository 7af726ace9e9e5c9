//! Uniform tensor grids over a [`DomainSpec`] and fields of jets sampled on them.
//!
//! Axis 0 is `u` (or the radius on an annulus), axis 1 is `v` (or the
//! angle). `resolution` counts cells per axis: a bounded axis has
//! `resolution + 1` nodes, a periodic one `resolution` nodes. Node `(i, j)`
//! is stored at `j * n0 + i`.

use crate::analytic::{DomainShape, DomainSpec};
use crate::geometry::{Jet2, ParamPoint};
use crate::quadrature::trapezoid_weights;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub periodic: bool,
    pub cells: usize,
}

impl Axis {
    pub fn nodes(&self) -> usize {
        if self.periodic {
            self.cells
        } else {
            self.cells + 1
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / self.cells as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn is_end(&self, i: usize) -> bool {
        !self.periodic && (i == 0 || i + 1 == self.nodes())
    }

    /// Index `i + offset`, wrapped on periodic axes; `None` off a bounded axis.
    pub fn offset(&self, i: usize, offset: isize) -> Option<usize> {
        let n = self.nodes() as isize;
        let k = i as isize + offset;
        if self.periodic {
            Some(k.rem_euclid(n) as usize)
        } else if (0..n).contains(&k) {
            Some(k as usize)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorGrid {
    pub axes: [Axis; 2],
    /// Axis coordinates are `(r, phi)` with Cartesian parameters `r (cos phi, sin phi)`.
    pub polar: bool,
}

impl TensorGrid {
    pub fn new(domain: &DomainSpec, resolution: usize) -> Self {
        match domain.shape {
            DomainShape::Rectangle {
                u_min,
                u_max,
                v_min,
                v_max,
            } => Self {
                axes: [
                    Axis {
                        min: u_min,
                        max: u_max,
                        periodic: domain.periodic_u,
                        cells: resolution,
                    },
                    Axis {
                        min: v_min,
                        max: v_max,
                        periodic: domain.periodic_v,
                        cells: resolution,
                    },
                ],
                polar: false,
            },
            DomainShape::Annulus { r_min, r_max } => Self {
                axes: [
                    Axis {
                        min: r_min,
                        max: r_max,
                        periodic: false,
                        cells: resolution,
                    },
                    Axis {
                        min: 0.0,
                        max: std::f64::consts::TAU,
                        periodic: true,
                        cells: resolution,
                    },
                ],
                polar: true,
            },
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.axes[0].nodes(), self.axes[1].nodes())
    }

    pub fn len(&self) -> usize {
        let (a, b) = self.dims();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.axes[0].spacing(), self.axes[1].spacing())
    }

    /// Largest spacing measured in domain length units.
    pub fn max_physical_spacing(&self) -> f64 {
        let (h0, h1) = self.spacing();
        if self.polar {
            h0.max(h1 * self.axes[0].max)
        } else {
            h0.max(h1)
        }
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.axes[0].nodes() + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        let n0 = self.axes[0].nodes();
        (k % n0, k / n0)
    }

    pub fn axis_coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.axes[0].coord(i), self.axes[1].coord(j))
    }

    /// Cartesian parameter point of node `(i, j)`.
    pub fn param(&self, i: usize, j: usize) -> ParamPoint {
        let (a, b) = self.axis_coords(i, j);
        if self.polar {
            ParamPoint::new(a * b.cos(), a * b.sin())
        } else {
            ParamPoint::new(a, b)
        }
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        self.axes[0].is_end(i) || self.axes[1].is_end(j)
    }

    /// Boundary nodes in storage order.
    pub fn boundary_nodes(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .map(|k| self.ij(k))
            .filter(|&(i, j)| self.is_boundary(i, j))
            .collect()
    }

    /// Quadrature weight (Cartesian area measure) of every node, trapezoid
    /// in each axis over index ranges `lo..=hi`. Nodes outside get 0.
    pub fn weights_over(&self, lo: [usize; 2], hi: [usize; 2]) -> Vec<f64> {
        let axis_weights = |d: usize| {
            let ax = &self.axes[d];
            let mut w = vec![0.0; ax.nodes()];
            let span = trapezoid_weights(hi[d] - lo[d] + 1, ax.spacing(), ax.periodic);
            w[lo[d]..=hi[d]].copy_from_slice(&span);
            w
        };
        let (w0, w1) = (axis_weights(0), axis_weights(1));
        (0..self.len())
            .map(|k| {
                let (i, j) = self.ij(k);
                let jac = if self.polar {
                    self.axes[0].coord(i)
                } else {
                    1.0
                };
                w0[i] * w1[j] * jac
            })
            .collect()
    }

    pub fn full_weights(&self) -> Vec<f64> {
        let (n0, n1) = self.dims();
        self.weights_over([0, 0], [n0 - 1, n1 - 1])
    }

    /// Weights over nodes at least one cell away from bounded ends.
    pub fn interior_weights(&self) -> Vec<f64> {
        let (n0, n1) = self.dims();
        let lo = |d: usize| usize::from(!self.axes[d].periodic);
        let hi = |d: usize, n: usize| if self.axes[d].periodic { n - 1 } else { n - 2 };
        self.weights_over([lo(0), lo(1)], [hi(0, n0), hi(1, n1)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldNode {
    pub index: (usize, usize),
    pub param: ParamPoint,
    pub jet: Jet2,
    /// Quadrature weight in the Cartesian domain measure.
    pub weight: f64,
}

/// Jets on (a sub-grid of) a tensor grid together with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct JetField {
    pub domain: DomainSpec,
    pub grid: TensorGrid,
    pub nodes: Vec<FieldNode>,
    /// Fraction of the domain area not covered by the nodes' weights.
    pub excluded_area_fraction: f64,
}

impl JetField {
    pub fn resolution(&self) -> usize {
        self.grid.axes[0].cells
    }

    pub fn ambient_dim(&self) -> usize {
        self.nodes.first().map_or(0, |n| n.jet.ambient_dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bounded_and_periodic_node_counts() {
        let square = DomainSpec::rectangle(0.0, 1.0, 0.0, 1.0);
        assert_eq!(TensorGrid::new(&square, 4).dims(), (5, 5));
        let strip = DomainSpec::periodic_strip(0.0, std::f64::consts::TAU, -1.0, 1.0);
        let g = TensorGrid::new(&strip, 8);
        assert_eq!(g.dims(), (8, 9));
        // no duplicated seam column
        assert!(g.axes[0].coord(7) < std::f64::consts::TAU - 1e-9);
        assert_eq!(g.axes[0].offset(7, 1), Some(0));
        assert_eq!(g.axes[1].offset(8, 1), None);
    }

    #[test]
    fn weights_integrate_domain_area() {
        let square = DomainSpec::rectangle(-1.0, 2.0, 0.0, 0.5);
        let g = TensorGrid::new(&square, 6);
        assert_relative_eq!(
            g.full_weights().iter().sum::<f64>(),
            1.5,
            max_relative = 1e-14
        );
        // interior sub-grid [-0.5, 1.5] x [1/12, 5/12]
        assert_relative_eq!(
            g.interior_weights().iter().sum::<f64>(),
            2.0 / 3.0,
            max_relative = 1e-14
        );

        let annulus = DomainSpec::annulus(1.0, 2.0);
        let g = TensorGrid::new(&annulus, 16);
        assert_eq!(g.dims(), (17, 16));
        // r-weighted trapezoid integrates r exactly
        assert_relative_eq!(
            g.full_weights().iter().sum::<f64>(),
            3.0 * std::f64::consts::PI,
            max_relative = 1e-13
        );
    }

    #[test]
    fn boundary_nodes_skip_periodic_axes() {
        let strip = DomainSpec::periodic_strip(0.0, 1.0, 0.0, 1.0);
        let g = TensorGrid::new(&strip, 4);
        let b = g.boundary_nodes();
        assert_eq!(b.len(), 8);
        assert!(b.iter().all(|&(_, j)| j == 0 || j == 4));
    }
}
