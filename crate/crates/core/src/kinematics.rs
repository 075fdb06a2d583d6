//! Discrete Cosserat kinematics on parameter grids.
//!
//! A displaced body is described by a rigid-motion field chi over the grid.
//! Differentiating chi and right-translating back to the identity yields the
//! deformation one-form (xi, omega), whose vanishing characterizes rigid
//! motions. Kinematical states carry positions, frames, and formal derivative
//! slots; the Spencer residual measures how far the slots are from being the
//! actual derivatives of the values.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::grid::{ParameterGrid, MAX_DIM};
use crate::rigid_motion::{asym, axial, hat, RigidMotion, RigidMotionError, Rotation};

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("operation requires a {expected}-dimensional grid, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("per-node data has {got} entries, grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("initial state is not the inclusion of the grid into space")]
    NotInclusion,
    #[error(transparent)]
    Motion(#[from] RigidMotionError),
}

/// Rigid-motion field chi over a parameter grid: the displacement that takes
/// the initial body to its current placement.
#[derive(Debug, Clone)]
pub struct DisplacementField {
    grid: ParameterGrid,
    values: Vec<RigidMotion>,
}

impl DisplacementField {
    pub fn from_fn(grid: ParameterGrid, f: impl Fn(&[f64; MAX_DIM]) -> RigidMotion) -> Self {
        let values = grid.nodes().map(|n| f(&grid.coords(n))).collect();
        DisplacementField { grid, values }
    }

    pub fn from_values(
        grid: ParameterGrid,
        values: Vec<RigidMotion>,
    ) -> Result<Self, KinematicsError> {
        if values.len() != grid.node_count() {
            return Err(KinematicsError::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        Ok(DisplacementField { grid, values })
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn value(&self, node: usize) -> &RigidMotion {
        &self.values[node]
    }

    pub fn values(&self) -> &[RigidMotion] {
        &self.values
    }

    /// Left-translate every node value by a constant rigid motion.
    pub fn left_translated(&self, g: &RigidMotion) -> Self {
        DisplacementField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| g.compose(v)).collect(),
        }
    }
}

/// One node of a kinematical state: position, frame, and one formal
/// derivative slot per parameter axis. Unused slots stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StateNode {
    pub x: Vector3<f64>,
    pub e: Matrix3<f64>,
    pub x_d: [Vector3<f64>; MAX_DIM],
    pub e_d: [Matrix3<f64>; MAX_DIM],
}

impl StateNode {
    pub fn new(x: Vector3<f64>, e: Matrix3<f64>) -> Self {
        StateNode {
            x,
            e,
            x_d: [Vector3::zeros(); MAX_DIM],
            e_d: [Matrix3::zeros(); MAX_DIM],
        }
    }
}

/// Kinematical state: a section of positions and frames together with formal
/// derivative slots, i.e. a field of 1-jets over the grid.
#[derive(Debug, Clone)]
pub struct KinematicalState {
    grid: ParameterGrid,
    nodes: Vec<StateNode>,
}

impl KinematicalState {
    pub fn from_fn(grid: ParameterGrid, f: impl Fn(&[f64; MAX_DIM]) -> StateNode) -> Self {
        let nodes = grid.nodes().map(|n| f(&grid.coords(n))).collect();
        KinematicalState { grid, nodes }
    }

    pub fn from_values(
        grid: ParameterGrid,
        nodes: Vec<StateNode>,
    ) -> Result<Self, KinematicsError> {
        if nodes.len() != grid.node_count() {
            return Err(KinematicsError::LengthMismatch {
                expected: grid.node_count(),
                got: nodes.len(),
            });
        }
        Ok(KinematicalState { grid, nodes })
    }

    /// The body sitting at rest in space: positions are the grid coordinates,
    /// frames the standard basis, slots the exact derivatives of both.
    pub fn inclusion(grid: ParameterGrid) -> Self {
        let p = grid.dim();
        KinematicalState::from_fn(grid, |coords| {
            let mut node = StateNode::new(
                Vector3::new(coords[0], coords[1], coords[2]),
                Matrix3::identity(),
            );
            for a in 0..p {
                node.x_d[a] = Vector3::ith(a, 1.0);
            }
            node
        })
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn node(&self, node: usize) -> &StateNode {
        &self.nodes[node]
    }

    pub fn nodes(&self) -> &[StateNode] {
        &self.nodes
    }

    /// True when every position equals its grid coordinate and every frame is
    /// the standard basis, up to `tol`.
    pub fn is_inclusion(&self, tol: f64) -> bool {
        self.grid.nodes().all(|n| {
            let c = self.grid.coords(n);
            let node = &self.nodes[n];
            (node.x - Vector3::new(c[0], c[1], c[2])).amax() <= tol
                && (node.e - Matrix3::identity()).amax() <= tol
        })
    }
}

/// Variation of one state node: tangent components mirroring `StateNode`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationNode {
    pub dx: Vector3<f64>,
    pub de: Matrix3<f64>,
    pub dx_d: [Vector3<f64>; MAX_DIM],
    pub de_d: [Matrix3<f64>; MAX_DIM],
}

impl VariationNode {
    pub fn zero() -> Self {
        VariationNode {
            dx: Vector3::zeros(),
            de: Matrix3::zeros(),
            dx_d: [Vector3::zeros(); MAX_DIM],
            de_d: [Matrix3::zeros(); MAX_DIM],
        }
    }

    pub fn amax(&self) -> f64 {
        let mut m = self.dx.amax().max(self.de.amax());
        for a in 0..MAX_DIM {
            m = m.max(self.dx_d[a].amax()).max(self.de_d[a].amax());
        }
        m
    }
}

/// Variation field over a grid: the test-function space of virtual work.
#[derive(Debug, Clone)]
pub struct StateVariation {
    grid: ParameterGrid,
    nodes: Vec<VariationNode>,
}

impl StateVariation {
    pub fn from_fn(grid: ParameterGrid, f: impl Fn(&[f64; MAX_DIM]) -> VariationNode) -> Self {
        let nodes = grid.nodes().map(|n| f(&grid.coords(n))).collect();
        StateVariation { grid, nodes }
    }

    pub fn from_values(
        grid: ParameterGrid,
        nodes: Vec<VariationNode>,
    ) -> Result<Self, KinematicsError> {
        if nodes.len() != grid.node_count() {
            return Err(KinematicsError::LengthMismatch {
                expected: grid.node_count(),
                got: nodes.len(),
            });
        }
        Ok(StateVariation { grid, nodes })
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn node(&self, node: usize) -> &VariationNode {
        &self.nodes[node]
    }

    pub fn nodes(&self) -> &[VariationNode] {
        &self.nodes
    }
}

/// Deformation one-form: per node and per parameter axis, a translational
/// slot xi and the axial vector of an antisymmetric rotational slot omega.
#[derive(Debug, Clone)]
pub struct DeformationForm {
    grid: ParameterGrid,
    xi: Vec<[Vector3<f64>; MAX_DIM]>,
    omega: Vec<[Vector3<f64>; MAX_DIM]>,
    sym_residue: Vec<f64>,
}

impl DeformationForm {
    /// Build a form directly from per-node slot data, e.g. a hand-made
    /// incompatible field. Slots beyond the grid dimension should stay zero.
    pub fn from_fn(
        grid: ParameterGrid,
        f: impl Fn(&[f64; MAX_DIM]) -> ([Vector3<f64>; MAX_DIM], [Vector3<f64>; MAX_DIM]),
    ) -> Self {
        let mut xi = Vec::with_capacity(grid.node_count());
        let mut omega = Vec::with_capacity(grid.node_count());
        for n in grid.nodes() {
            let (x, w) = f(&grid.coords(n));
            xi.push(x);
            omega.push(w);
        }
        let sym_residue = vec![0.0; grid.node_count()];
        DeformationForm {
            grid,
            xi,
            omega,
            sym_residue,
        }
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn xi(&self, node: usize) -> &[Vector3<f64>; MAX_DIM] {
        &self.xi[node]
    }

    pub fn omega(&self, node: usize) -> &[Vector3<f64>; MAX_DIM] {
        &self.omega[node]
    }

    /// Norm of the symmetric part discarded when antisymmetrizing
    /// (d_a R) R^T at this node; a discretization diagnostic.
    pub fn sym_residue(&self, node: usize) -> f64 {
        self.sym_residue[node]
    }

    pub fn max_sym_residue(&self) -> f64 {
        self.sym_residue.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest slot entry over all nodes and axes.
    pub fn max_amplitude(&self) -> f64 {
        let xi = self.xi.iter().flatten().map(|v| v.amax());
        let om = self.omega.iter().flatten().map(|v| v.amax());
        xi.chain(om).fold(0.0, f64::max)
    }
}

/// Deformation of a displacement field: per axis, omega_a is the
/// antisymmetric part of (d_a R) R^T and xi_a = d_a a - omega_a a.
///
/// Constant fields map to the exact zero form: finite differences of equal
/// values vanish bitwise, so rigid motions of the body produce no deformation
/// even in floating point.
pub fn deformation_of(chi: &DisplacementField) -> DeformationForm {
    let grid = chi.grid.clone();
    let p = grid.dim();
    let translations: Vec<Vector3<f64>> = chi.values.iter().map(|g| g.translation).collect();
    let rotations: Vec<Matrix3<f64>> = chi.values.iter().map(|g| *g.rotation.matrix()).collect();

    let mut xi = vec![[Vector3::zeros(); MAX_DIM]; grid.node_count()];
    let mut omega = vec![[Vector3::zeros(); MAX_DIM]; grid.node_count()];
    let mut sym_residue = vec![0.0f64; grid.node_count()];

    for n in grid.nodes() {
        let r_t = rotations[n].transpose();
        for a in 0..p {
            let w = grid.fd(&rotations, a, n) * r_t;
            let anti = asym(&w);
            sym_residue[n] = sym_residue[n].max((w - anti).amax());
            omega[n][a] = axial(&anti);
            xi[n][a] = grid.fd(&translations, a, n) - anti * translations[n];
        }
    }

    DeformationForm {
        grid,
        xi,
        omega,
        sym_residue,
    }
}

/// Act on a kinematical state by a displacement field over the same grid:
/// x = a + R x0, e = R e0, with derivative slots obtained by the product
/// rule, the field's derivatives taken by grid finite differences.
pub fn displace_state(
    initial: &KinematicalState,
    chi: &DisplacementField,
) -> Result<KinematicalState, KinematicsError> {
    if initial.grid != chi.grid {
        return Err(KinematicsError::GridMismatch);
    }
    let grid = initial.grid.clone();
    let p = grid.dim();
    let translations: Vec<Vector3<f64>> = chi.values.iter().map(|g| g.translation).collect();
    let rotations: Vec<Matrix3<f64>> = chi.values.iter().map(|g| *g.rotation.matrix()).collect();

    let nodes = grid
        .nodes()
        .map(|n| {
            let init = &initial.nodes[n];
            let a = translations[n];
            let r = rotations[n];
            let mut node = StateNode::new(a + r * init.x, r * init.e);
            for axis in 0..p {
                let a_d = grid.fd(&translations, axis, n);
                let r_d = grid.fd(&rotations, axis, n);
                node.x_d[axis] = a_d + r_d * init.x + r * init.x_d[axis];
                node.e_d[axis] = r_d * init.e + r * init.e_d[axis];
            }
            node
        })
        .collect();

    Ok(KinematicalState { grid, nodes })
}

/// Per-node defect between the stored derivative slots and the finite
/// differences of the value slots. Zero (to discretization order) exactly
/// when the state is the prolongation of an actual placement.
pub fn spencer_residual(state: &KinematicalState) -> Vec<f64> {
    let grid = &state.grid;
    let p = grid.dim();
    let xs: Vec<Vector3<f64>> = state.nodes.iter().map(|s| s.x).collect();
    let es: Vec<Matrix3<f64>> = state.nodes.iter().map(|s| s.e).collect();

    grid.nodes()
        .map(|n| {
            let mut sq = 0.0;
            for a in 0..p {
                sq += (grid.fd(&xs, a, n) - state.nodes[n].x_d[a]).norm_squared();
                sq += (grid.fd(&es, a, n) - state.nodes[n].e_d[a]).norm_squared();
            }
            sq.sqrt()
        })
        .collect()
}

/// Classical strain measures of a three-dimensional body whose initial
/// placement is the inclusion: parameters coincide with initial coordinates.
#[derive(Debug, Clone)]
pub struct StrainDecomposition {
    grid: ParameterGrid,
    /// Symmetric strain e_ij = u_{i,j} + u_{j,i}.
    pub strain: Vec<Matrix3<f64>>,
    /// Antisymmetric displacement rotation theta_ij = u_{i,j} - u_{j,i}.
    pub rotation: Vec<Matrix3<f64>>,
    /// Full deformation E_ij = u_{i,j} - (omega_j x)_i.
    pub full: Vec<Matrix3<f64>>,
    /// Orbital term (omega_j x)_i coupling couple-strain to position.
    pub orbital: Vec<Matrix3<f64>>,
}

impl StrainDecomposition {
    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    /// Largest reconstruction defect of E = (e + theta)/2 - orbital over the
    /// grid. An algebraic identity among shared stencils, so this is rounding
    /// noise, not discretization error.
    pub fn reconstruction_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in 0..self.full.len() {
            let rebuilt = (self.strain[n] + self.rotation[n]) * 0.5 - self.orbital[n];
            worst = worst.max((self.full[n] - rebuilt).amax());
        }
        worst
    }
}

/// Split the displacement gradient into symmetric strain, antisymmetric
/// rotation, and the orbital couple-strain term. Requires a 3-dimensional
/// grid with the inclusion as initial state.
pub fn strain_decompose(
    chi: &DisplacementField,
    initial: &KinematicalState,
) -> Result<StrainDecomposition, KinematicsError> {
    let grid = chi.grid.clone();
    if grid.dim() != 3 {
        return Err(KinematicsError::WrongDimension {
            expected: 3,
            got: grid.dim(),
        });
    }
    if initial.grid != grid {
        return Err(KinematicsError::GridMismatch);
    }
    if !initial.is_inclusion(1e-12) {
        return Err(KinematicsError::NotInclusion);
    }

    let form = deformation_of(chi);

    // u = a + (R - I) x0 and the current position x = x0 + u.
    let mut displacements = Vec::with_capacity(grid.node_count());
    let mut positions = Vec::with_capacity(grid.node_count());
    for n in grid.nodes() {
        let c = grid.coords(n);
        let x0 = Vector3::new(c[0], c[1], c[2]);
        let g = &chi.values[n];
        let u = g.translation + (g.rotation.matrix() - Matrix3::identity()) * x0;
        displacements.push(u);
        positions.push(x0 + u);
    }

    let mut strain = Vec::with_capacity(grid.node_count());
    let mut rotation = Vec::with_capacity(grid.node_count());
    let mut full = Vec::with_capacity(grid.node_count());
    let mut orbital = Vec::with_capacity(grid.node_count());

    for n in grid.nodes() {
        // grad[(i, j)] = u_{i,j}; with the inclusion, axis j is the j-th
        // initial coordinate.
        let mut grad = Matrix3::zeros();
        let mut orb = Matrix3::zeros();
        for j in 0..3 {
            grad.set_column(j, &grid.fd(&displacements, j, n));
            orb.set_column(j, &(hat(&form.omega[n][j]) * positions[n]));
        }
        strain.push(grad + grad.transpose());
        rotation.push(grad - grad.transpose());
        full.push(grad - orb);
        orbital.push(orb);
    }

    Ok(StrainDecomposition {
        grid,
        strain,
        rotation,
        full,
        orbital,
    })
}

/// Build a displacement field from classical small-displacement data: a
/// rotation 3-vector field phi and a translation field u, referred to the
/// initial positions of `initial`.
///
/// The classical map (a; R) = (u - hat(phi) x0; I + hat(phi)) leaves the
/// group unless phi is infinitesimal, so the rotation part is returned to the
/// group by polar projection. The construction therefore agrees with the
/// classical one to first order in |phi| only.
pub fn from_schaefer(
    phi: &[Vector3<f64>],
    u: &[Vector3<f64>],
    initial: &KinematicalState,
) -> Result<DisplacementField, KinematicsError> {
    let grid = initial.grid.clone();
    if phi.len() != grid.node_count() || u.len() != grid.node_count() {
        return Err(KinematicsError::LengthMismatch {
            expected: grid.node_count(),
            got: phi.len().min(u.len()),
        });
    }

    let mut values = Vec::with_capacity(grid.node_count());
    for n in grid.nodes() {
        let spin = hat(&phi[n]);
        let rotation = Rotation::project(&(Matrix3::identity() + spin))?;
        let a = u[n] - spin * initial.nodes[n].x;
        values.push(RigidMotion::new(a, rotation));
    }
    Ok(DisplacementField { grid, values })
}
