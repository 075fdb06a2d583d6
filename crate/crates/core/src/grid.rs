//! Uniform parameter grids for one-, two-, and three-parameter media.
//!
//! A grid discretizes the parameter patch `[0, (n_a - 1) h_a]` per axis with
//! at least three nodes per axis so that second-order stencils exist
//! everywhere. All finite differences produced here are second order:
//! central in the interior, one-sided at the two boundary layers of each
//! axis. Quadrature weights are trapezoidal, which pairs with those stencils
//! to give second-order discrete integration by parts.

use thiserror::Error;

/// Maximum number of parameter directions supported.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid dimension {0} outside 1..=3")]
    BadDimension(usize),
    #[error("axis {axis} has extent {extent}, need at least 3 nodes")]
    ExtentTooSmall { axis: usize, extent: usize },
    #[error("axis {axis} has non-positive spacing {spacing}")]
    BadSpacing { axis: usize, spacing: f64 },
}

/// Uniform tensor-product grid over the parameter patch.
///
/// Node flat indices run with axis 0 fastest. `boundary_flags[k]` is true
/// when node `k` lies on the geometric boundary of the patch.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGrid {
    dim: usize,
    extents: [usize; MAX_DIM],
    spacing: [f64; MAX_DIM],
    boundary_flags: Vec<bool>,
}

impl ParameterGrid {
    pub fn new(extents: &[usize], spacing: &[f64]) -> Result<Self, GridError> {
        let dim = extents.len();
        if dim == 0 || dim > MAX_DIM || spacing.len() != dim {
            return Err(GridError::BadDimension(dim));
        }
        let mut ext = [1usize; MAX_DIM];
        let mut spc = [1.0f64; MAX_DIM];
        for a in 0..dim {
            if extents[a] < 3 {
                return Err(GridError::ExtentTooSmall { axis: a, extent: extents[a] });
            }
            if !(spacing[a] > 0.0) || !spacing[a].is_finite() {
                return Err(GridError::BadSpacing { axis: a, spacing: spacing[a] });
            }
            ext[a] = extents[a];
            spc[a] = spacing[a];
        }
        let count: usize = ext[..dim].iter().product();
        let mut grid = ParameterGrid { dim, extents: ext, spacing: spc, boundary_flags: Vec::new() };
        grid.boundary_flags = (0..count).map(|k| grid.compute_is_boundary(k)).collect();
        Ok(grid)
    }

    /// Grid with unit total extent per axis: n nodes, spacing 1/(n-1).
    pub fn unit(extents: &[usize]) -> Result<Self, GridError> {
        let spacing: Vec<f64> = extents.iter().map(|&n| 1.0 / (n.max(2) - 1) as f64).collect();
        Self::new(extents, &spacing)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.extents[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn node_count(&self) -> usize {
        self.extents[..self.dim].iter().product()
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary_flags
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_flags[node]
    }

    fn compute_is_boundary(&self, node: usize) -> bool {
        let m = self.to_multi(node);
        (0..self.dim).any(|a| m[a] == 0 || m[a] == self.extents[a] - 1)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.extents[..axis].iter().product()
    }

    pub fn to_multi(&self, mut node: usize) -> [usize; MAX_DIM] {
        let mut m = [0usize; MAX_DIM];
        for a in 0..self.dim {
            m[a] = node % self.extents[a];
            node /= self.extents[a];
        }
        m
    }

    pub fn to_flat(&self, multi: &[usize; MAX_DIM]) -> usize {
        let mut k = 0;
        for a in (0..self.dim).rev() {
            k = k * self.extents[a] + multi[a];
        }
        k
    }

    /// Parameter coordinates of a node; unused axes read 0.
    pub fn coords(&self, node: usize) -> [f64; MAX_DIM] {
        let m = self.to_multi(node);
        let mut c = [0.0f64; MAX_DIM];
        for a in 0..self.dim {
            c[a] = m[a] as f64 * self.spacing[a];
        }
        c
    }

    pub fn nodes(&self) -> std::ops::Range<usize> {
        0..self.node_count()
    }

    /// Second-order finite difference along `axis` of a node field.
    ///
    /// Central stencil in the interior, one-sided three-point stencils at
    /// the first and last layer. Each stencil is a fixed linear combination
    /// of shifts along its own axis, so derivatives along distinct axes
    /// commute as operators (up to floating-point reassociation). Every
    /// branch combines plain differences of node values, so constant fields
    /// differentiate to zero bitwise.
    pub fn fd<T>(&self, values: &[T], axis: usize, node: usize) -> T
    where
        T: Copy
            + std::ops::Add<T, Output = T>
            + std::ops::Sub<T, Output = T>
            + std::ops::Mul<f64, Output = T>,
    {
        let n = self.extents[axis];
        let s = self.stride(axis);
        let i = self.to_multi(node)[axis];
        let inv2h = 1.0 / (2.0 * self.spacing[axis]);
        if i == 0 {
            ((values[node + s] - values[node]) * 4.0 - (values[node + 2 * s] - values[node]))
                * inv2h
        } else if i == n - 1 {
            ((values[node] - values[node - s]) * 4.0 - (values[node] - values[node - 2 * s]))
                * inv2h
        } else {
            (values[node + s] - values[node - s]) * inv2h
        }
    }

    /// Trapezoidal quadrature weight of a node (volume measure).
    pub fn node_weight(&self, node: usize) -> f64 {
        let m = self.to_multi(node);
        let mut w = 1.0;
        for a in 0..self.dim {
            let edge = m[a] == 0 || m[a] == self.extents[a] - 1;
            w *= if edge { 0.5 * self.spacing[a] } else { self.spacing[a] };
        }
        w
    }

    /// Visits every boundary-face node with its outward orientation.
    ///
    /// The callback receives `(node, axis, orientation, face_weight)` where
    /// `orientation` is -1 at the low face and +1 at the high face of `axis`,
    /// and `face_weight` is the trapezoidal surface measure (product of the
    /// per-axis weights over the axes other than `axis`). Nodes on edges and
    /// corners are visited once per face they belong to.
    pub fn for_each_boundary(&self, mut visit: impl FnMut(usize, usize, f64, f64)) {
        for axis in 0..self.dim {
            let n = self.extents[axis];
            for node in self.nodes() {
                let m = self.to_multi(node);
                let orientation = if m[axis] == 0 {
                    -1.0
                } else if m[axis] == n - 1 {
                    1.0
                } else {
                    continue;
                };
                let mut w = 1.0;
                for b in 0..self.dim {
                    if b == axis {
                        continue;
                    }
                    let edge = m[b] == 0 || m[b] == self.extents[b] - 1;
                    w *= if edge { 0.5 * self.spacing[b] } else { self.spacing[b] };
                }
                visit(node, axis, orientation, w);
            }
        }
    }

    /// Ordered index pairs `(a, b)` with `a < b`; the slot layout used by
    /// two-forms. Empty for one-parameter grids.
    pub fn axis_pairs(&self) -> &'static [(usize, usize)] {
        match self.dim {
            1 => &[],
            2 => &[(0, 1)],
            _ => &[(0, 1), (0, 2), (1, 2)],
        }
    }
}
