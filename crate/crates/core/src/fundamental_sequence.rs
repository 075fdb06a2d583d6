//! The compatibility chain on deformation data.
//!
//! Level 0 -> 1 differentiates a displacement field into its deformation
//! one-form. Level 1 -> 2 measures dislocation and disclination: the defect
//! of a one-form against being such a derivative. Level 2 -> 3 measures the
//! defect of a two-form against being a dislocation/disclination pair. Each
//! composite vanishes in the continuum; on the grid it vanishes at the
//! stencil order, which is what the refinement tests pin down.

use nalgebra::Vector3;
use thiserror::Error;

use crate::grid::{ParameterGrid, MAX_DIM};
use crate::kinematics::{deformation_of, DeformationForm, DisplacementField};

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("forms live on different grids")]
    GridMismatch,
    #[error("the three-form level needs a 3-dimensional grid, got {got}")]
    WrongDimension { got: usize },
}

/// Cyclic orderings of the three axes; the three-form is assembled by
/// summing over these.
const CYCLES: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

/// Two-form with one (Theta, Omega) pair per ordered axis pair a < b.
/// Theta is the dislocation slot, Omega the axial disclination slot.
#[derive(Debug, Clone)]
pub struct Iso3TwoForm {
    grid: ParameterGrid,
    theta: Vec<[Vector3<f64>; MAX_DIM]>,
    omega: Vec<[Vector3<f64>; MAX_DIM]>,
}

impl Iso3TwoForm {
    pub fn from_fn(
        grid: ParameterGrid,
        f: impl Fn(&[f64; MAX_DIM]) -> ([Vector3<f64>; MAX_DIM], [Vector3<f64>; MAX_DIM]),
    ) -> Self {
        let mut theta = Vec::with_capacity(grid.node_count());
        let mut omega = Vec::with_capacity(grid.node_count());
        for n in grid.nodes() {
            let (t, o) = f(&grid.coords(n));
            theta.push(t);
            omega.push(o);
        }
        Iso3TwoForm { grid, theta, omega }
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    /// The ordered axis pairs indexing the slots.
    pub fn pairs(&self) -> &'static [(usize, usize)] {
        self.grid.axis_pairs()
    }

    pub fn theta(&self, node: usize) -> &[Vector3<f64>; MAX_DIM] {
        &self.theta[node]
    }

    pub fn omega(&self, node: usize) -> &[Vector3<f64>; MAX_DIM] {
        &self.omega[node]
    }

    /// Slot for an arbitrary ordered axis pair, using antisymmetry.
    pub fn slot(&self, node: usize, a: usize, b: usize) -> (Vector3<f64>, Vector3<f64>) {
        let pairs = self.pairs();
        for (k, &(pa, pb)) in pairs.iter().enumerate() {
            if (pa, pb) == (a, b) {
                return (self.theta[node][k], self.omega[node][k]);
            }
            if (pa, pb) == (b, a) {
                return (-self.theta[node][k], -self.omega[node][k]);
            }
        }
        (Vector3::zeros(), Vector3::zeros())
    }

    pub fn max_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in self.grid.nodes() {
            for k in 0..self.pairs().len() {
                worst = worst.max(self.theta[n][k].amax()).max(self.omega[n][k].amax());
            }
        }
        worst
    }
}

/// Top-degree form on a 3-dimensional grid: one (Theta, Omega) pair per node.
#[derive(Debug, Clone)]
pub struct Iso3ThreeForm {
    grid: ParameterGrid,
    pub theta: Vec<Vector3<f64>>,
    pub omega: Vec<Vector3<f64>>,
}

impl Iso3ThreeForm {
    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn max_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in self.grid.nodes() {
            worst = worst.max(self.theta[n].amax()).max(self.omega[n].amax());
        }
        worst
    }
}

/// Sequence level 0 -> 1: the deformation of a displacement field.
pub fn nabla_chi(chi: &DisplacementField) -> DeformationForm {
    deformation_of(chi)
}

/// Sequence level 1 -> 2: dislocation and disclination of a one-form.
/// Per pair a < b:
/// Theta_ab = d_a xi_b - d_b xi_a - w_a x xi_b + w_b x xi_a,
/// Omega_ab = d_a w_b - d_b w_a - w_a x w_b.
/// On a 1-dimensional grid there are no pairs and the result is empty.
pub fn nabla_wedge_1(form: &DeformationForm) -> Iso3TwoForm {
    let grid = form.grid().clone();
    let p = grid.dim();

    // Per-axis slot arrays so the stencils can run along any other axis.
    let mut xi_slots: Vec<Vec<Vector3<f64>>> = Vec::with_capacity(p);
    let mut w_slots: Vec<Vec<Vector3<f64>>> = Vec::with_capacity(p);
    for a in 0..p {
        xi_slots.push(grid.nodes().map(|n| form.xi(n)[a]).collect());
        w_slots.push(grid.nodes().map(|n| form.omega(n)[a]).collect());
    }

    let pairs = grid.axis_pairs();
    let mut theta = vec![[Vector3::zeros(); MAX_DIM]; grid.node_count()];
    let mut omega = vec![[Vector3::zeros(); MAX_DIM]; grid.node_count()];
    for n in grid.nodes() {
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let wa = w_slots[a][n];
            let wb = w_slots[b][n];
            theta[n][k] = grid.fd(&xi_slots[b], a, n) - grid.fd(&xi_slots[a], b, n)
                - wa.cross(&xi_slots[b][n])
                + wb.cross(&xi_slots[a][n]);
            omega[n][k] =
                grid.fd(&w_slots[b], a, n) - grid.fd(&w_slots[a], b, n) - wa.cross(&wb);
        }
    }

    Iso3TwoForm { grid, theta, omega }
}

/// Sequence level 2 -> 3 on a 3-dimensional grid, assembled as a cyclic sum
/// over (a, b, c):
/// Theta3 = sum d_a Theta_bc - w_a x Theta_bc + Omega_ab x xi_c,
/// Omega3 = sum d_a Omega_bc - w_a x Omega_bc.
/// The one-form supplies the (xi, omega) the operator couples to.
pub fn nabla_wedge_2(
    two_form: &Iso3TwoForm,
    form: &DeformationForm,
) -> Result<Iso3ThreeForm, SequenceError> {
    let grid = two_form.grid.clone();
    if grid.dim() != 3 {
        return Err(SequenceError::WrongDimension { got: grid.dim() });
    }
    if form.grid() != &grid {
        return Err(SequenceError::GridMismatch);
    }

    // Slot arrays per cyclic pair (b, c), oriented by antisymmetry.
    let theta_bc: Vec<Vec<Vector3<f64>>> = CYCLES
        .iter()
        .map(|&(_, b, c)| grid.nodes().map(|n| two_form.slot(n, b, c).0).collect())
        .collect();
    let omega_bc: Vec<Vec<Vector3<f64>>> = CYCLES
        .iter()
        .map(|&(_, b, c)| grid.nodes().map(|n| two_form.slot(n, b, c).1).collect())
        .collect();

    let mut theta = vec![Vector3::zeros(); grid.node_count()];
    let mut omega = vec![Vector3::zeros(); grid.node_count()];
    for n in grid.nodes() {
        for (k, &(a, b, c)) in CYCLES.iter().enumerate() {
            let wa = form.omega(n)[a];
            let om_ab = two_form.slot(n, a, b).1;
            theta[n] += grid.fd(&theta_bc[k], a, n) - wa.cross(&theta_bc[k][n])
                + om_ab.cross(&form.xi(n)[c]);
            omega[n] += grid.fd(&omega_bc[k], a, n) - wa.cross(&omega_bc[k][n]);
        }
    }

    Ok(Iso3ThreeForm { grid, theta, omega })
}

/// Per-node norms of the compatibility defect of a one-form.
#[derive(Debug, Clone)]
pub struct CompatibilityReport {
    pub theta_norm: Vec<f64>,
    pub omega_norm: Vec<f64>,
}

impl CompatibilityReport {
    pub fn max_theta(&self) -> f64 {
        self.theta_norm.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_omega(&self) -> f64 {
        self.omega_norm.iter().cloned().fold(0.0, f64::max)
    }
}

/// Norms of `nabla_wedge_1`: zero (to stencil order) exactly when the form
/// is locally the deformation of some displacement.
pub fn compatibility_report(form: &DeformationForm) -> CompatibilityReport {
    let two_form = nabla_wedge_1(form);
    let pairs = two_form.pairs().len();
    let mut theta_norm = Vec::with_capacity(two_form.grid.node_count());
    let mut omega_norm = Vec::with_capacity(two_form.grid.node_count());
    for n in two_form.grid.nodes() {
        let mut t = 0.0f64;
        let mut o = 0.0f64;
        for k in 0..pairs {
            t = t.max(two_form.theta[n][k].norm());
            o = o.max(two_form.omega[n][k].norm());
        }
        theta_norm.push(t);
        omega_norm.push(o);
    }
    CompatibilityReport {
        theta_norm,
        omega_norm,
    }
}
