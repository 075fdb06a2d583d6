//! Statics of Cosserat media: fundamental 1-forms over a kinematical state,
//! virtual work, the Euclidian-invariance condition, equilibrium residuals in
//! Lagrangian, Eulerian, and classical three-dimensional form, and a damped
//! Newton solver for one-parameter rods.
//!
//! A dynamical state assigns to every node an external force `f`, external
//! moment slots `m`, force stresses `sigma` (one 3-vector per parameter
//! axis), and couple stresses `mu` (one 3x3 matrix per axis). None of these
//! are constrained beyond finiteness; antisymmetry and squareness appear only
//! in the Eulerian (barred) components evaluated on the deformed state.
//!
//! Matrix slots pair by the Frobenius inner product, matching the component
//! layout of `StateNode`: entry `(i, j)` of `m` pairs with entry `(i, j)` of
//! a frame variation. Frames of the states handled here are rotations, so
//! the inverse frame is the transpose throughout.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use thiserror::Error;

use crate::grid::{ParameterGrid, MAX_DIM};
use crate::kinematics::{
    displace_state, spencer_residual, DisplacementField, KinematicalState, KinematicsError,
    StateNode, StateVariation,
};
use crate::rigid_motion::{asym, axial, exp, hat, IsoAlgebraElement, RigidMotion, Rotation};

/// Residual infinity-norm at which the rod solver declares convergence.
pub const SOLVE_TOL: f64 = 1e-8;

/// Newton iteration cap for the rod solver.
pub const MAX_ITER: usize = 50;

/// Relative slot defect above which a variation or state does not count as
/// integrable (slots must be the grid derivatives of the values).
const INTEGRABLE_TOL: f64 = 1e-10;

/// Step used for finite-difference Jacobian columns in the rod solver.
const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum StaticsError {
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("expected a {expected}-parameter grid, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("value count {got} does not match grid node count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("variation is not integrable: slot defect {defect:.3e} at node {node}")]
    NonIntegrableVariation { node: usize, defect: f64 },
    #[error("state is not integrable: prolongation defect {defect:.3e} at node {node}")]
    NonIntegrableState { node: usize, defect: f64 },
    #[error("form is not Euclidian: invariance residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotEuclidian { residual: f64, tolerance: f64 },
    #[error("deformation Jacobian is singular at node {node}")]
    SingularJacobian { node: usize },
    #[error("Newton system is singular at iteration {iteration}")]
    SingularNewtonSystem { iteration: usize },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// One node of a fundamental 1-form. Slot entries beyond the grid dimension
/// stay zero, mirroring `StateNode`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormNode {
    pub f: Vector3<f64>,
    pub m: Matrix3<f64>,
    pub sigma: [Vector3<f64>; MAX_DIM],
    pub mu: [Matrix3<f64>; MAX_DIM],
}

impl FormNode {
    pub fn zero() -> Self {
        FormNode {
            f: Vector3::zeros(),
            m: Matrix3::zeros(),
            sigma: [Vector3::zeros(); MAX_DIM],
            mu: [Matrix3::zeros(); MAX_DIM],
        }
    }
}

/// Fundamental 1-form: per-node external force and moment together with
/// force and couple stresses, the dynamical state of the object.
#[derive(Debug, Clone)]
pub struct FundamentalOneForm {
    grid: ParameterGrid,
    nodes: Vec<FormNode>,
}

impl FundamentalOneForm {
    pub fn from_fn(grid: ParameterGrid, f: impl Fn(&[f64; MAX_DIM]) -> FormNode) -> Self {
        let nodes = grid.nodes().map(|n| f(&grid.coords(n))).collect();
        FundamentalOneForm { grid, nodes }
    }

    pub fn from_values(grid: ParameterGrid, nodes: Vec<FormNode>) -> Result<Self, StaticsError> {
        if nodes.len() != grid.node_count() {
            return Err(StaticsError::LengthMismatch {
                expected: grid.node_count(),
                got: nodes.len(),
            });
        }
        Ok(FundamentalOneForm { grid, nodes })
    }

    /// Evaluates a constitutive law at every node of a state.
    pub fn from_law(law: &dyn ConstitutiveLaw, state: &KinematicalState) -> Self {
        let grid = state.grid().clone();
        let nodes = grid
            .nodes()
            .map(|n| law.evaluate(&grid.coords(n), state.node(n)))
            .collect();
        FundamentalOneForm { grid, nodes }
    }

    pub fn zero(grid: ParameterGrid) -> Self {
        let nodes = vec![FormNode::zero(); grid.node_count()];
        FundamentalOneForm { grid, nodes }
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn node(&self, node: usize) -> &FormNode {
        &self.nodes[node]
    }

    pub fn nodes(&self) -> &[FormNode] {
        &self.nodes
    }
}

/// A constitutive law maps one kinematical node (parameter point, position,
/// frame, and their derivative slots) to the local value of the fundamental
/// 1-form. Implementations must be deterministic: residual assembly and the
/// finite-difference Jacobian evaluate the same node repeatedly.
pub trait ConstitutiveLaw {
    fn evaluate(&self, coords: &[f64; MAX_DIM], node: &StateNode) -> FormNode;
}

/// One node of the Eulerian components: the same data expressed against the
/// anholonomic coframe of the deformed state. `m` and the `mu` slots are
/// antisymmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianNode {
    pub f: Vector3<f64>,
    pub m: Matrix3<f64>,
    pub sigma: [Vector3<f64>; MAX_DIM],
    pub mu: [Matrix3<f64>; MAX_DIM],
}

/// Barred components of a fundamental 1-form on the deformed state.
#[derive(Debug, Clone)]
pub struct EulerianComponents {
    grid: ParameterGrid,
    nodes: Vec<EulerianNode>,
}

impl EulerianComponents {
    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn node(&self, node: usize) -> &EulerianNode {
        &self.nodes[node]
    }

    pub fn nodes(&self) -> &[EulerianNode] {
        &self.nodes
    }
}

/// Surface tension and couple-stress of one boundary face node, contracted
/// with the outward-oriented induced volume element. `tension` and `couple`
/// already carry the orientation sign; `weight` is the trapezoidal surface
/// measure of the node on its face. Emitted only on boundary nodes.
#[derive(Debug, Clone)]
pub struct BoundaryTerm {
    pub node: usize,
    pub axis: usize,
    pub orientation: f64,
    pub weight: f64,
    pub tension: Vector3<f64>,
    pub couple: Matrix3<f64>,
}

/// Boundary flux terms of a form: one record per face a node belongs to.
/// The virtual work done through the boundary by a variation `ds` is
/// `sum weight * (tension . dx + <couple, de>)`.
pub fn boundary_terms(phi: &FundamentalOneForm) -> Vec<BoundaryTerm> {
    let mut out = Vec::new();
    phi.grid.for_each_boundary(|node, axis, orientation, weight| {
        out.push(BoundaryTerm {
            node,
            axis,
            orientation,
            weight,
            tension: phi.nodes[node].sigma[axis] * orientation,
            couple: phi.nodes[node].mu[axis] * orientation,
        });
    });
    out
}

/// Per-node equilibrium residual: a force covector and an antisymmetric
/// moment matrix.
#[derive(Debug, Clone)]
pub struct EquilibriumResidual {
    grid: ParameterGrid,
    force: Vec<Vector3<f64>>,
    moment: Vec<Matrix3<f64>>,
}

impl EquilibriumResidual {
    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn force(&self) -> &[Vector3<f64>] {
        &self.force
    }

    pub fn moment(&self) -> &[Matrix3<f64>] {
        &self.moment
    }

    pub fn max_force_norm(&self) -> f64 {
        self.force.iter().fold(0.0, |m, v| m.max(v.amax()))
    }

    pub fn max_moment_norm(&self) -> f64 {
        self.moment.iter().fold(0.0, |m, v| m.max(v.amax()))
    }
}

fn check_same_grid(a: &ParameterGrid, b: &ParameterGrid) -> Result<(), StaticsError> {
    if a != b {
        return Err(StaticsError::GridMismatch);
    }
    Ok(())
}

/// Virtual work density of a variation against a form, node by node:
/// the full coordinate contraction
/// `f . dx + <m, de> + sum_a sigma^a . dx_a + sum_a <mu^a, de_a>`.
/// Linear in the variation; no integrability is assumed.
pub fn virtual_work(
    phi: &FundamentalOneForm,
    ds: &StateVariation,
) -> Result<Vec<f64>, StaticsError> {
    check_same_grid(&phi.grid, ds.grid())?;
    let p = phi.grid.dim();
    Ok(phi
        .grid
        .nodes()
        .map(|n| {
            let fm = &phi.nodes[n];
            let v = ds.node(n);
            let mut w = fm.f.dot(&v.dx) + fm.m.dot(&v.de);
            for a in 0..p {
                w += fm.sigma[a].dot(&v.dx_d[a]) + fm.mu[a].dot(&v.de_d[a]);
            }
            w
        })
        .collect())
}

/// Largest slot-vs-derivative defect of a variation, with the node realizing
/// it. Zero exactly when the slots are the grid derivatives of the values.
fn variation_integrability_defect(ds: &StateVariation) -> (usize, f64) {
    let grid = ds.grid();
    let p = grid.dim();
    let dxs: Vec<Vector3<f64>> = ds.nodes().iter().map(|v| v.dx).collect();
    let des: Vec<Matrix3<f64>> = ds.nodes().iter().map(|v| v.de).collect();
    let mut worst = (0, 0.0f64);
    for n in grid.nodes() {
        let v = ds.node(n);
        let mut d = 0.0f64;
        for a in 0..p {
            d = d.max((grid.fd(&dxs, a, n) - v.dx_d[a]).amax());
            d = d.max((grid.fd(&des, a, n) - v.de_d[a]).amax());
        }
        if d > worst.1 {
            worst = (n, d);
        }
    }
    worst
}

/// Total virtual work split into its interior and boundary integrals.
///
/// The interior integrand contracts the adjoint components
/// `f - sum_a D_a sigma^a` and `m - sum_a D_a mu^a` with the variation
/// values; the boundary integral contracts the surface tension and couple
/// stress with the induced face measure. Requires `ds` integrable (slots
/// equal to the grid derivatives of the values); then
/// `interior + boundary` equals the direct quadrature of [`virtual_work`]
/// up to the second-order defect of the discrete product rule.
pub fn total_virtual_work(
    phi: &FundamentalOneForm,
    ds: &StateVariation,
    state: &KinematicalState,
) -> Result<(f64, f64), StaticsError> {
    check_same_grid(&phi.grid, ds.grid())?;
    check_same_grid(&phi.grid, state.grid())?;
    let grid = &phi.grid;
    let p = grid.dim();

    let amp = ds
        .nodes()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.dx.amax()).max(v.de.amax()));
    let (node, defect) = variation_integrability_defect(ds);
    if defect > INTEGRABLE_TOL * (1.0 + amp) {
        return Err(StaticsError::NonIntegrableVariation { node, defect });
    }

    let sig: Vec<Vec<Vector3<f64>>> = (0..p)
        .map(|a| phi.nodes.iter().map(|fm| fm.sigma[a]).collect())
        .collect();
    let mu: Vec<Vec<Matrix3<f64>>> = (0..p)
        .map(|a| phi.nodes.iter().map(|fm| fm.mu[a]).collect())
        .collect();

    let mut interior = 0.0;
    for n in grid.nodes() {
        let fm = &phi.nodes[n];
        let v = ds.node(n);
        let mut jf = fm.f;
        let mut jm = fm.m;
        for a in 0..p {
            jf -= grid.fd(&sig[a], a, n);
            jm -= grid.fd(&mu[a], a, n);
        }
        interior += grid.node_weight(n) * (jf.dot(&v.dx) + jm.dot(&v.de));
    }

    let mut boundary = 0.0;
    for bt in boundary_terms(phi) {
        let v = ds.node(bt.node);
        boundary += bt.weight * (bt.tension.dot(&v.dx) + bt.couple.dot(&v.de));
    }
    Ok((interior, boundary))
}

/// Internal torque of the stresses at one node:
/// `-asym(sum_a sigma^a x_a^T + sum_a mu^a e_a^T)`.
/// A Euclidian form's moment must satisfy `asym(m e^T) = internal torque`.
fn internal_torque(fm: &FormNode, s: &StateNode, p: usize) -> Matrix3<f64> {
    let mut t = Matrix3::zeros();
    for a in 0..p {
        t += fm.sigma[a] * s.x_d[a].transpose() + fm.mu[a] * s.e_d[a].transpose();
    }
    -asym(&t)
}

/// Components of a form against the anholonomic coframe of the deformed
/// state: `f` and `sigma` are unchanged, while the moment and couple-stress
/// slots are antisymmetrized together with the force-moment and
/// stress-moment cross terms:
/// `m_bar = asym(m e^T + f x^T + sum_a sigma^a x_a^T + sum_a mu^a e_a^T)`,
/// `mu_bar^a = asym(mu^a e^T + sigma^a x^T)`.
pub fn eulerian_components(
    phi: &FundamentalOneForm,
    state: &KinematicalState,
) -> Result<EulerianComponents, StaticsError> {
    check_same_grid(&phi.grid, state.grid())?;
    let p = phi.grid.dim();
    let nodes = phi
        .grid
        .nodes()
        .map(|n| {
            let fm = &phi.nodes[n];
            let s = state.node(n);
            let mut cross = fm.m * s.e.transpose() + fm.f * s.x.transpose();
            for a in 0..p {
                cross += fm.sigma[a] * s.x_d[a].transpose() + fm.mu[a] * s.e_d[a].transpose();
            }
            let mut mu = [Matrix3::zeros(); MAX_DIM];
            for a in 0..p {
                mu[a] = asym(&(fm.mu[a] * s.e.transpose() + fm.sigma[a] * s.x.transpose()));
            }
            EulerianNode {
                f: fm.f,
                m: asym(&cross),
                sigma: fm.sigma,
                mu,
            }
        })
        .collect();
    Ok(EulerianComponents {
        grid: phi.grid.clone(),
        nodes,
    })
}

/// Violation of the Euclidian-invariance condition, aggregated over the grid
/// as root-sum-square norms: the force part is `|f|` per node, the moment
/// part `|asym(m e^T) - internal torque|`. Both vanish exactly when the
/// virtual work of every constant rigid variation is zero.
pub fn euclidian_check(
    phi: &FundamentalOneForm,
    state: &KinematicalState,
) -> Result<(f64, f64), StaticsError> {
    check_same_grid(&phi.grid, state.grid())?;
    let p = phi.grid.dim();
    let mut f2 = 0.0;
    let mut m2 = 0.0;
    for n in phi.grid.nodes() {
        let fm = &phi.nodes[n];
        let s = state.node(n);
        let viol = asym(&(fm.m * s.e.transpose())) - internal_torque(fm, s, p);
        f2 += fm.f.norm_squared();
        m2 += viol.norm_squared();
    }
    Ok((f2.sqrt(), m2.sqrt()))
}

/// Replace the external force and moment of a form by the values a Euclidian
/// form must carry: zero force, and the moment generated by the stresses
/// themselves, `m = T e` with `T` the internal torque. Stress slots are kept;
/// the output passes [`euclidian_check`] at machine precision.
pub fn euclidian_project(
    phi: &FundamentalOneForm,
    state: &KinematicalState,
) -> Result<FundamentalOneForm, StaticsError> {
    check_same_grid(&phi.grid, state.grid())?;
    let p = phi.grid.dim();
    let nodes = phi
        .grid
        .nodes()
        .map(|n| {
            let fm = &phi.nodes[n];
            let s = state.node(n);
            FormNode {
                f: Vector3::zeros(),
                m: internal_torque(fm, s, p) * s.e,
                sigma: fm.sigma,
                mu: fm.mu,
            }
        })
        .collect();
    Ok(FundamentalOneForm {
        grid: phi.grid.clone(),
        nodes,
    })
}

/// Equilibrium residual in the Lagrangian picture:
/// force part `f - sum_a D_a sigma^a`, moment part
/// `asym(m) - sum_a D_a asym(mu^a)`. Requires the state to be integrable
/// (position slots equal to the grid derivatives of the positions) within
/// `tol`, checked through the prolongation defect.
pub fn equilibrium_residual_lagrangian(
    phi: &FundamentalOneForm,
    state: &KinematicalState,
    tol: f64,
) -> Result<EquilibriumResidual, StaticsError> {
    check_same_grid(&phi.grid, state.grid())?;
    let grid = &phi.grid;
    let p = grid.dim();

    let spencer = spencer_residual(state);
    for (n, d) in spencer.iter().enumerate() {
        if *d > tol {
            return Err(StaticsError::NonIntegrableState { node: n, defect: *d });
        }
    }

    let sig: Vec<Vec<Vector3<f64>>> = (0..p)
        .map(|a| phi.nodes.iter().map(|fm| fm.sigma[a]).collect())
        .collect();
    let mu_asym: Vec<Vec<Matrix3<f64>>> = (0..p)
        .map(|a| phi.nodes.iter().map(|fm| asym(&fm.mu[a])).collect())
        .collect();

    let mut force = Vec::with_capacity(grid.node_count());
    let mut moment = Vec::with_capacity(grid.node_count());
    for n in grid.nodes() {
        let fm = &phi.nodes[n];
        let mut rf = fm.f;
        let mut rm = asym(&fm.m);
        for a in 0..p {
            rf -= grid.fd(&sig[a], a, n);
            rm -= grid.fd(&mu_asym[a], a, n);
        }
        force.push(rf);
        moment.push(rm);
    }
    Ok(EquilibriumResidual {
        grid: grid.clone(),
        force,
        moment,
    })
}

/// Antisymmetrized couple stress on the deformed frame, without the
/// stress-moment cross term: `asym(mu^a e^T)`. This is the couple-stress
/// that survives in the Eulerian equilibrium equations once the force
/// equation has absorbed the cross term.
fn slim_couple_stress(fm: &FormNode, s: &StateNode, a: usize) -> Matrix3<f64> {
    asym(&(fm.mu[a] * s.e.transpose()))
}

/// Equilibrium residual in the Eulerian picture, for a Euclidian form:
/// force part `sum_a D_a sigma^a`, moment part
/// `sum_a D_a asym(mu^a e^T) + asym(sum_a sigma^a x_a^T)`. The form must
/// pass [`euclidian_check`] within `tol`; external loads enter Eulerian
/// equilibrium only through boundary terms.
pub fn equilibrium_residual_eulerian(
    phi: &FundamentalOneForm,
    state: &KinematicalState,
    tol: f64,
) -> Result<EquilibriumResidual, StaticsError> {
    let (rf, rm) = euclidian_check(phi, state)?;
    let residual = rf.max(rm);
    if residual > tol {
        return Err(StaticsError::NotEuclidian {
            residual,
            tolerance: tol,
        });
    }

    let grid = &phi.grid;
    let p = grid.dim();
    let sig: Vec<Vec<Vector3<f64>>> = (0..p)
        .map(|a| phi.nodes.iter().map(|fm| fm.sigma[a]).collect())
        .collect();
    let slim: Vec<Vec<Matrix3<f64>>> = (0..p)
        .map(|a| {
            grid.nodes()
                .map(|n| slim_couple_stress(&phi.nodes[n], state.node(n), a))
                .collect()
        })
        .collect();

    let mut force = Vec::with_capacity(grid.node_count());
    let mut moment = Vec::with_capacity(grid.node_count());
    for n in grid.nodes() {
        let s = state.node(n);
        let fm = &phi.nodes[n];
        let mut rf = Vector3::zeros();
        let mut rm = Matrix3::zeros();
        let mut cross = Matrix3::zeros();
        for a in 0..p {
            rf += grid.fd(&sig[a], a, n);
            rm += grid.fd(&slim[a], a, n);
            cross += fm.sigma[a] * s.x_d[a].transpose();
        }
        force.push(rf);
        moment.push(rm + asym(&cross));
    }
    Ok(EquilibriumResidual {
        grid: grid.clone(),
        force,
        moment,
    })
}

/// Classical three-dimensional Cosserat equilibrium residual: the Eulerian
/// equations with derivatives pulled back through the inverse of the
/// deformation Jacobian `J = [x_1 x_2 x_3]`, so they act with respect to the
/// deformed coordinates. The stress slot index is read against the deformed
/// axes: force part `sum_j d_j sigma^j`, moment part
/// `sum_k d_k asym(mu^k e^T) + asym(S)` with `S` the matrix whose columns
/// are the stress slots. Assumes the form is Euclidian (project first if
/// not); requires a three-parameter grid and an invertible Jacobian at every
/// node.
pub fn equilibrium_residual_cosserat3d(
    phi: &FundamentalOneForm,
    state: &KinematicalState,
) -> Result<EquilibriumResidual, StaticsError> {
    check_same_grid(&phi.grid, state.grid())?;
    let grid = &phi.grid;
    if grid.dim() != 3 {
        return Err(StaticsError::WrongDimension {
            expected: 3,
            got: grid.dim(),
        });
    }

    let inverses: Vec<Matrix3<f64>> = grid
        .nodes()
        .map(|n| {
            let s = state.node(n);
            let j = Matrix3::from_columns(&[s.x_d[0], s.x_d[1], s.x_d[2]]);
            if j.determinant().abs() < 1e-14 {
                return Err(StaticsError::SingularJacobian { node: n });
            }
            j.try_inverse()
                .ok_or(StaticsError::SingularJacobian { node: n })
        })
        .collect::<Result<_, _>>()?;

    let sig: Vec<Vec<Vector3<f64>>> = (0..3)
        .map(|a| phi.nodes.iter().map(|fm| fm.sigma[a]).collect())
        .collect();
    let slim: Vec<Vec<Matrix3<f64>>> = (0..3)
        .map(|a| {
            grid.nodes()
                .map(|n| slim_couple_stress(&phi.nodes[n], state.node(n), a))
                .collect()
        })
        .collect();

    let mut force = Vec::with_capacity(grid.node_count());
    let mut moment = Vec::with_capacity(grid.node_count());
    for n in grid.nodes() {
        let fm = &phi.nodes[n];
        let inv = &inverses[n];
        let mut rf = Vector3::zeros();
        let mut rm = Matrix3::zeros();
        for j in 0..3 {
            for a in 0..3 {
                // d_j = (J^{-1})^a_j D_a; inv rows index a, columns index j.
                rf += grid.fd(&sig[j], a, n) * inv[(a, j)];
                rm += grid.fd(&slim[j], a, n) * inv[(a, j)];
            }
        }
        let s_mat = Matrix3::from_columns(&[fm.sigma[0], fm.sigma[1], fm.sigma[2]]);
        force.push(rf);
        moment.push(rm + asym(&s_mat));
    }
    Ok(EquilibriumResidual {
        grid: grid.clone(),
        force,
        moment,
    })
}

/// Linear isotropic rod law: stress linear in the frame-pulled stretch
/// strain, couple stress linear in the twist-bend strain, with four moduli.
/// The external moment slot carries the Euclidian completion `m = T e` plus
/// any prescribed body couple, so the unloaded law always produces a
/// Euclidian form. The coefficient structure is a convenience preset, not a
/// canonical table.
pub struct LinearRodLaw {
    pub stretch: f64,
    pub shear: f64,
    pub twist: f64,
    pub bend: f64,
    /// Rest value of `e^T x_rho`; the straight unit-speed rod has `e_1`.
    pub rest_strain: Vector3<f64>,
    /// Rest value of `axial(asym(e^T e_rho))`.
    pub rest_curvature: Vector3<f64>,
    body_force: Option<Box<dyn Fn(f64) -> Vector3<f64>>>,
    body_couple: Option<Box<dyn Fn(f64) -> Vector3<f64>>>,
}

impl LinearRodLaw {
    pub fn new(stretch: f64, shear: f64, twist: f64, bend: f64) -> Self {
        LinearRodLaw {
            stretch,
            shear,
            twist,
            bend,
            rest_strain: Vector3::x(),
            rest_curvature: Vector3::zeros(),
            body_force: None,
            body_couple: None,
        }
    }

    /// Distributed external force per unit parameter length.
    pub fn with_body_force(mut self, f: impl Fn(f64) -> Vector3<f64> + 'static) -> Self {
        self.body_force = Some(Box::new(f));
        self
    }

    /// Distributed external couple per unit parameter length (axial vector).
    pub fn with_body_couple(mut self, f: impl Fn(f64) -> Vector3<f64> + 'static) -> Self {
        self.body_couple = Some(Box::new(f));
        self
    }
}

impl ConstitutiveLaw for LinearRodLaw {
    fn evaluate(&self, coords: &[f64; MAX_DIM], node: &StateNode) -> FormNode {
        let rho = coords[0];
        let e = node.e;
        let x_r = node.x_d[0];
        let e_r = node.e_d[0];

        let gamma = e.transpose() * x_r - self.rest_strain;
        let kappa = axial(&asym(&(e.transpose() * e_r))) - self.rest_curvature;
        let c_gamma = Vector3::new(self.stretch, self.shear, self.shear);
        let c_kappa = Vector3::new(self.twist, self.bend, self.bend);

        let sigma = e * c_gamma.component_mul(&gamma);
        // Couple stress with axial pair e * m_material: asym(mu e^T) is half
        // the hat of the spatial couple.
        let mu = e * hat(&c_kappa.component_mul(&kappa)) * 0.5;

        let t = -asym(&(sigma * x_r.transpose() + mu * e_r.transpose()));
        let mut m = t * e;
        if let Some(couple) = &self.body_couple {
            m += hat(&couple(rho)) * e * 0.5;
        }
        let f = self
            .body_force
            .as_ref()
            .map_or_else(Vector3::zeros, |bf| bf(rho));

        let mut out = FormNode::zero();
        out.f = f;
        out.m = m;
        out.sigma[0] = sigma;
        out.mu[0] = mu;
        out
    }
}

/// Boundary condition at one rod end.
#[derive(Debug, Clone)]
pub enum EndCondition {
    /// Prescribed displacement and rotation of the end node.
    Clamped { motion: RigidMotion },
    /// Prescribed end tension and couple (the boundary flux values): the
    /// outward stress must equal `force` and the outward spatial couple
    /// `couple`.
    Free {
        force: Vector3<f64>,
        couple: Vector3<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct RodBoundaryConditions {
    pub start: EndCondition,
    pub end: EndCondition,
}

/// One accepted Newton step of the rod solver.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonIterate {
    pub iteration: usize,
    pub residual_norm: f64,
    pub step_norm: f64,
    pub damping: f64,
}

/// Result of a rod solve: the displacement field, the iteration trace, and
/// the final residual. `converged` is false when the iteration cap or a
/// line-search stall was hit; the field then holds the best iterate seen.
#[derive(Debug)]
pub struct RodSolution {
    pub field: DisplacementField,
    pub trace: Vec<NewtonIterate>,
    pub converged: bool,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn exp_rotation(w: &Vector3<f64>) -> Rotation {
    exp(&IsoAlgebraElement::new(Vector3::zeros(), *w), 1.0).rotation
}

fn apply_step(motions: &[RigidMotion], dq: &DVector<f64>, scale: f64) -> Vec<RigidMotion> {
    motions
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let da = Vector3::new(dq[6 * k], dq[6 * k + 1], dq[6 * k + 2]) * scale;
            let dw = Vector3::new(dq[6 * k + 3], dq[6 * k + 4], dq[6 * k + 5]) * scale;
            RigidMotion::new(g.translation + da, exp_rotation(&dw).compose(&g.rotation))
        })
        .collect()
}

/// Stacked per-node rod equilibrium residual. Interior nodes carry the force
/// equation `f - D sigma` and the axial moment equation
/// `axial(D asym(mu e^T) - asym(m e^T) - asym(mu e_rho^T))`; for a law whose
/// moment slot is the Euclidian completion these rows equal the Eulerian
/// equilibrium residual exactly. End nodes carry their boundary condition
/// rows instead.
fn rod_residual(
    law: &dyn ConstitutiveLaw,
    bc: &RodBoundaryConditions,
    grid: &ParameterGrid,
    initial: &KinematicalState,
    motions: &[RigidMotion],
) -> Result<DVector<f64>, StaticsError> {
    let chi = DisplacementField::from_values(grid.clone(), motions.to_vec())?;
    let state = displace_state(initial, &chi)?;
    let n_nodes = grid.node_count();

    let forms: Vec<FormNode> = grid
        .nodes()
        .map(|n| law.evaluate(&grid.coords(n), state.node(n)))
        .collect();
    let sig: Vec<Vector3<f64>> = forms.iter().map(|fm| fm.sigma[0]).collect();
    let slim: Vec<Matrix3<f64>> = grid
        .nodes()
        .map(|n| slim_couple_stress(&forms[n], state.node(n), 0))
        .collect();

    let mut rows = DVector::zeros(6 * n_nodes);
    let mut set = |k: usize, top: Vector3<f64>, bottom: Vector3<f64>| {
        for i in 0..3 {
            rows[6 * k + i] = top[i];
            rows[6 * k + 3 + i] = bottom[i];
        }
    };

    let mut end_rows = |k: usize, cond: &EndCondition, outward: f64| match cond {
        EndCondition::Clamped { motion } => {
            let rel = motions[k].rotation.compose(&motion.rotation.transpose());
            set(k, motions[k].translation - motion.translation, rel.axial_log());
        }
        EndCondition::Free { force, couple } => {
            set(
                k,
                sig[k] * outward - force,
                axial(&slim[k]) * (2.0 * outward) - couple,
            );
        }
    };

    end_rows(0, &bc.start, -1.0);
    end_rows(n_nodes - 1, &bc.end, 1.0);

    for k in 1..n_nodes - 1 {
        let fm = &forms[k];
        let s = state.node(k);
        let rf = fm.f - grid.fd(&sig, 0, k);
        let rm = grid.fd(&slim, 0, k)
            - asym(&(fm.m * s.e.transpose()))
            - asym(&(fm.mu[0] * s.e_d[0].transpose()));
        set(k, rf, axial(&rm));
    }
    Ok(rows)
}

/// Damped Newton solve of the one-parameter rod equilibrium, unknowns
/// `(da, dtheta)` per node applied as `a + da`, `exp(hat(dtheta)) R`.
/// The Jacobian is assembled by forward differences, the step is halved
/// until the residual infinity-norm decreases, and end-node residual rows
/// are replaced by the boundary-condition rows. Residual assembly is
/// node-local; the Newton orchestration itself is sequential.
pub fn solve_rod(
    law: &dyn ConstitutiveLaw,
    bc: &RodBoundaryConditions,
    grid: &ParameterGrid,
) -> Result<RodSolution, StaticsError> {
    if grid.dim() != 1 {
        return Err(StaticsError::WrongDimension {
            expected: 1,
            got: grid.dim(),
        });
    }
    let n_nodes = grid.node_count();
    let unknowns = 6 * n_nodes;
    let initial = KinematicalState::inclusion(grid.clone());

    let mut motions = vec![RigidMotion::identity(); n_nodes];
    let mut residual = rod_residual(law, bc, grid, &initial, &motions)?;
    let mut norm = residual.amax();
    let mut best = (motions.clone(), norm);
    let mut trace = Vec::new();
    let mut converged = norm <= SOLVE_TOL;
    let mut iterations = 0;

    while !converged && iterations < MAX_ITER {
        let mut jacobian = DMatrix::zeros(unknowns, unknowns);
        let mut probe = DVector::zeros(unknowns);
        for col in 0..unknowns {
            probe[col] = 1.0;
            let perturbed = apply_step(&motions, &probe, JACOBIAN_STEP);
            let shifted = rod_residual(law, bc, grid, &initial, &perturbed)?;
            jacobian.set_column(col, &((shifted - &residual) / JACOBIAN_STEP));
            probe[col] = 0.0;
        }

        let lu = jacobian.full_piv_lu();
        let diag = lu.u().diagonal();
        let (dmin, dmax) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
                (lo.min(d.abs()), hi.max(d.abs()))
            });
        if dmax == 0.0 || dmin < 1e-13 * dmax {
            return Err(StaticsError::SingularNewtonSystem {
                iteration: iterations,
            });
        }
        let step = lu
            .solve(&(-&residual))
            .ok_or(StaticsError::SingularNewtonSystem {
                iteration: iterations,
            })?;

        let mut damping = 1.0;
        let mut accepted = None;
        while damping >= 1.0 / 64.0 {
            let trial = apply_step(&motions, &step, damping);
            let trial_residual = rod_residual(law, bc, grid, &initial, &trial)?;
            if trial_residual.amax() < norm {
                accepted = Some((trial, trial_residual));
                break;
            }
            damping *= 0.5;
        }
        let Some((next, next_residual)) = accepted else {
            break; // line search stalled; report the best iterate
        };

        motions = next;
        residual = next_residual;
        norm = residual.amax();
        iterations += 1;
        trace.push(NewtonIterate {
            iteration: iterations,
            residual_norm: norm,
            step_norm: step.amax() * damping,
            damping,
        });
        if norm < best.1 {
            best = (motions.clone(), norm);
        }
        converged = norm <= SOLVE_TOL;
    }

    let (field_motions, residual_norm) = if converged { (motions, norm) } else { best };
    Ok(RodSolution {
        field: DisplacementField::from_values(grid.clone(), field_motions)?,
        trace,
        converged,
        residual_norm,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet_groupoid::{fundamental_variation, prolong_variation, AlgebroidElement};
    use crate::kinematics::VariationNode;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rv(rng: &mut impl Rng) -> Vector3<f64> {
        Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn rm(rng: &mut impl Rng) -> Matrix3<f64> {
        Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
        *exp_rotation(&rv(rng)).matrix()
    }

    fn random_form(rng: &mut impl Rng, grid: &ParameterGrid) -> FundamentalOneForm {
        let p = grid.dim();
        let nodes = grid
            .nodes()
            .map(|_| {
                let mut fm = FormNode::zero();
                fm.f = rv(rng);
                fm.m = rm(rng);
                for a in 0..p {
                    fm.sigma[a] = rv(rng);
                    fm.mu[a] = rm(rng);
                }
                fm
            })
            .collect();
        FundamentalOneForm::from_values(grid.clone(), nodes).unwrap()
    }

    fn random_state(rng: &mut impl Rng, grid: &ParameterGrid) -> KinematicalState {
        let p = grid.dim();
        let nodes = grid
            .nodes()
            .map(|_| {
                let mut s = StateNode::new(rv(rng), random_rotation(rng));
                for a in 0..p {
                    s.x_d[a] = rv(rng);
                    s.e_d[a] = rm(rng);
                }
                s
            })
            .collect();
        KinematicalState::from_values(grid.clone(), nodes).unwrap()
    }

    /// Smooth closed-form fields used wherever convergence order matters.
    fn smooth_form(grid: &ParameterGrid) -> FundamentalOneForm {
        let p = grid.dim();
        FundamentalOneForm::from_fn(grid.clone(), |c| {
            let (u, v, w) = (c[0], c[1], c[2]);
            let mut fm = FormNode::zero();
            fm.f = Vector3::new((u + 2.0 * v).sin(), (v - w).cos(), (u * 0.5 + w).sin());
            fm.m = Matrix3::new(
                u.sin(), v.cos(), (u + w).sin(),
                (v + w).cos(), u.cos() * v.sin(), w.sin(),
                (u - v).sin(), (2.0 * w).cos(), (u + v + w).cos(),
            );
            for a in 0..p {
                let t = 0.7 + 0.3 * a as f64;
                fm.sigma[a] = Vector3::new(
                    (t * u + v).sin(),
                    (u - t * w).cos(),
                    (v + t * w).sin(),
                );
                fm.mu[a] = Matrix3::new(
                    (t * u).sin(), (v + t).cos(), (w - u).sin(),
                    (u + v).cos(), (t * v).sin(), (u + t * w).cos(),
                    (w + t).sin(), (u - t * v).cos(), (t * (u + w)).sin(),
                );
            }
            fm
        })
    }

    fn smooth_motion(c: &[f64; MAX_DIM]) -> RigidMotion {
        let (u, v, w) = (c[0], c[1], c[2]);
        let a = Vector3::new(0.3 * (u + v).sin(), 0.2 * (v - w).cos(), 0.25 * (u + w).sin());
        let ang = Vector3::new(0.4 * u.sin(), 0.3 * (v + w).cos(), 0.2 * (u - v).sin());
        RigidMotion::new(a, exp_rotation(&ang))
    }

    fn wavy_state(grid: &ParameterGrid) -> KinematicalState {
        let chi = DisplacementField::from_fn(grid.clone(), smooth_motion);
        displace_state(&KinematicalState::inclusion(grid.clone()), &chi).unwrap()
    }

    fn smooth_variation(grid: &ParameterGrid) -> StateVariation {
        let values: Vec<(Vector3<f64>, Matrix3<f64>)> = grid
            .nodes()
            .map(|n| {
                let c = grid.coords(n);
                let (u, v, w) = (c[0], c[1], c[2]);
                let dx = Vector3::new((u - v).sin(), (v + w).cos(), (u + 0.5 * w).sin());
                let de = Matrix3::new(
                    (u + v).sin(), w.cos(), v.sin(),
                    u.cos(), (v - w).sin(), (u + w).cos(),
                    (2.0 * u).sin(), (v + 0.3).cos(), (u * 0.5 + v).sin(),
                );
                (dx, de)
            })
            .collect();
        prolong_variation(grid, &values)
    }

    #[test]
    fn virtual_work_of_zero_variation_vanishes() {
        let grid = ParameterGrid::unit(&[5, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let phi = random_form(&mut rng, &grid);
        let ds = StateVariation::from_fn(grid.clone(), |_| VariationNode::zero());
        for w in virtual_work(&phi, &ds).unwrap() {
            assert_eq!(w, 0.0);
        }
    }

    #[test]
    fn virtual_work_of_force_against_displacement_is_the_dot_product() {
        let grid = ParameterGrid::unit(&[4]).unwrap();
        let f = Vector3::new(0.3, -1.2, 0.7);
        let dx = Vector3::new(-0.5, 0.25, 2.0);
        let phi = FundamentalOneForm::from_fn(grid.clone(), |_| {
            let mut fm = FormNode::zero();
            fm.f = f;
            fm
        });
        let ds = StateVariation::from_fn(grid.clone(), |_| {
            let mut v = VariationNode::zero();
            v.dx = dx;
            v
        });
        for w in virtual_work(&phi, &ds).unwrap() {
            assert_eq!(w, f.dot(&dx));
        }
    }

    #[test]
    fn virtual_work_matches_index_loop_oracle_and_is_linear() {
        let grid = ParameterGrid::unit(&[4, 3, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let phi = random_form(&mut rng, &grid);
        let p = grid.dim();
        let ds = StateVariation::from_fn(grid.clone(), |c| {
            let mut v = VariationNode::zero();
            v.dx = Vector3::new(c[0].sin(), c[1], c[2] - c[0]);
            v.de = Matrix3::from_fn(|i, j| (c[0] + i as f64 - 0.5 * j as f64).cos());
            for a in 0..3 {
                v.dx_d[a] = Vector3::new(c[a], -c[0], 0.4);
                v.de_d[a] = Matrix3::from_fn(|i, j| 0.1 * (i + 2 * j + a) as f64 * c[1]);
            }
            v
        });

        let works = virtual_work(&phi, &ds).unwrap();
        for n in grid.nodes() {
            let fm = phi.node(n);
            let v = ds.node(n);
            let mut oracle = 0.0;
            for i in 0..3 {
                oracle += fm.f[i] * v.dx[i];
                for j in 0..3 {
                    oracle += fm.m[(i, j)] * v.de[(i, j)];
                }
                for a in 0..p {
                    oracle += fm.sigma[a][i] * v.dx_d[a][i];
                    for j in 0..3 {
                        oracle += fm.mu[a][(i, j)] * v.de_d[a][(i, j)];
                    }
                }
            }
            assert!((works[n] - oracle).abs() < 1e-13 * (1.0 + oracle.abs()));
        }

        // Linearity in the variation: scaling every component scales the work.
        let scaled = StateVariation::from_values(
            grid.clone(),
            ds.nodes()
                .iter()
                .map(|v| {
                    let mut s = v.clone();
                    s.dx *= 2.5;
                    s.de *= 2.5;
                    for a in 0..3 {
                        s.dx_d[a] *= 2.5;
                        s.de_d[a] *= 2.5;
                    }
                    s
                })
                .collect(),
        )
        .unwrap();
        let scaled_works = virtual_work(&phi, &scaled).unwrap();
        for n in grid.nodes() {
            assert!((scaled_works[n] - 2.5 * works[n]).abs() < 1e-12 * (1.0 + works[n].abs()));
        }
    }

    #[test]
    fn virtual_work_rejects_mismatched_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let phi = random_form(&mut rng, &ParameterGrid::unit(&[5]).unwrap());
        let ds = StateVariation::from_fn(ParameterGrid::unit(&[6]).unwrap(), |_| {
            VariationNode::zero()
        });
        assert!(matches!(
            virtual_work(&phi, &ds),
            Err(StaticsError::GridMismatch)
        ));
    }

    #[test]
    fn total_virtual_work_of_zero_variation_is_zero() {
        let grid = ParameterGrid::unit(&[6, 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let phi = random_form(&mut rng, &grid);
        let state = KinematicalState::inclusion(grid.clone());
        let ds = prolong_variation(&grid, &vec![(Vector3::zeros(), Matrix3::zeros()); 30]);
        let (interior, boundary) = total_virtual_work(&phi, &ds, &state).unwrap();
        assert_eq!(interior, 0.0);
        assert_eq!(boundary, 0.0);
    }

    /// Hand telescoping on a 1D rod: with constant stress the interior term
    /// dies, and for a linear displacement variation the trapezoid sum of the
    /// stencil derivative collapses exactly to the end-value difference.
    #[test]
    fn one_dimensional_telescoping_reproduces_end_fluxes() {
        let grid = ParameterGrid::new(&[9], &[0.25]).unwrap();
        let state = KinematicalState::inclusion(grid.clone());
        let sigma = Vector3::new(1.3, -0.4, 0.2);
        let phi = FundamentalOneForm::from_fn(grid.clone(), |_| {
            let mut fm = FormNode::zero();
            fm.sigma[0] = sigma;
            fm
        });

        // Constant variation: all slots vanish, so every term is zero except
        // the two end fluxes, which cancel against each other.
        let dx = Vector3::new(0.7, 0.1, -0.3);
        let values = vec![(dx, Matrix3::zeros()); grid.node_count()];
        let ds = prolong_variation(&grid, &values);
        let (interior, boundary) = total_virtual_work(&phi, &ds, &state).unwrap();
        assert_eq!(interior, 0.0);
        assert!(boundary.abs() < 1e-15);

        // Linear variation: direct sum, boundary flux, and the hand value
        // sigma . (dx(L) - dx(0)) all agree to rounding.
        let slope = Vector3::new(0.4, -1.1, 0.9);
        let values: Vec<(Vector3<f64>, Matrix3<f64>)> = grid
            .nodes()
            .map(|n| (slope * grid.coords(n)[0], Matrix3::zeros()))
            .collect();
        let ds = prolong_variation(&grid, &values);
        let (interior, boundary) = total_virtual_work(&phi, &ds, &state).unwrap();
        let direct: f64 = virtual_work(&phi, &ds)
            .unwrap()
            .iter()
            .zip(grid.nodes())
            .map(|(w, n)| w * grid.node_weight(n))
            .sum();
        let length = 0.25 * 8.0;
        let hand = sigma.dot(&(slope * length));
        assert_eq!(interior, 0.0);
        assert!((boundary - hand).abs() < 1e-13);
        assert!((direct - hand).abs() < 1e-13);
    }

    #[test]
    fn integration_by_parts_defect_is_second_order_in_every_dimension() {
        for extents in [&[9usize] as &[usize], &[9, 9], &[9, 9, 9]] {
            let mut errs = Vec::new();
            for level in 0..3 {
                let n = (extents[0] - 1) * (1 << level) + 1;
                let sizes: Vec<usize> = extents.iter().map(|_| n).collect();
                let spacing: Vec<f64> = extents.iter().map(|_| 1.0 / (n - 1) as f64).collect();
                let grid = ParameterGrid::new(&sizes, &spacing).unwrap();
                let state = KinematicalState::inclusion(grid.clone());
                let phi = smooth_form(&grid);
                let ds = smooth_variation(&grid);
                let (interior, boundary) = total_virtual_work(&phi, &ds, &state).unwrap();
                let direct: f64 = virtual_work(&phi, &ds)
                    .unwrap()
                    .iter()
                    .zip(grid.nodes())
                    .map(|(w, k)| w * grid.node_weight(k))
                    .sum();
                errs.push((direct - (interior + boundary)).abs());
            }
            let order = (errs[1] / errs[2]).log2();
            assert!(
                (1.7..2.6).contains(&order),
                "dim {}: errors {:?}, order {order}",
                extents.len(),
                errs
            );
        }
    }

    #[test]
    fn total_virtual_work_rejects_non_integrable_variations() {
        let grid = ParameterGrid::unit(&[7]).unwrap();
        let state = KinematicalState::inclusion(grid.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let phi = random_form(&mut rng, &grid);
        let ds = StateVariation::from_fn(grid.clone(), |c| {
            let mut v = VariationNode::zero();
            v.dx = Vector3::new(c[0].sin(), 0.0, 0.0);
            v.dx_d[0] = Vector3::new(c[0].cos() + 1.0, 0.0, 0.0); // off by one
            v
        });
        assert!(matches!(
            total_virtual_work(&phi, &ds, &state),
            Err(StaticsError::NonIntegrableVariation { .. })
        ));
    }

    #[test]
    fn eulerian_components_of_zero_form_vanish() {
        let grid = ParameterGrid::unit(&[4, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let state = random_state(&mut rng, &grid);
        let bars = eulerian_components(&FundamentalOneForm::zero(grid.clone()), &state).unwrap();
        for b in bars.nodes() {
            assert_eq!(b.f, Vector3::zeros());
            assert_eq!(b.m, Matrix3::zeros());
        }
    }

    #[test]
    fn force_only_form_gains_the_force_moment_cross_term() {
        let grid = ParameterGrid::unit(&[4]).unwrap();
        let f = Vector3::y();
        let x = Vector3::x();
        let phi = FundamentalOneForm::from_fn(grid.clone(), |_| {
            let mut fm = FormNode::zero();
            fm.f = f;
            fm
        });
        let state = KinematicalState::from_fn(grid.clone(), |_| StateNode::new(x, Matrix3::identity()));
        let bars = eulerian_components(&phi, &state).unwrap();
        // asym(f x^T) = hat(x cross f) / 2 = hat(e_z) / 2.
        let expected = hat(&Vector3::z()) * 0.5;
        for b in bars.nodes() {
            assert!((b.m - expected).amax() < 1e-15);
            assert_eq!(b.f, f);
        }
    }

    /// The coordinate contraction and the Eulerian pairing are the same
    /// number on variations generated by algebroid elements; the barred
    /// components are exactly the coefficients of (zeta, hat(iota)) and
    /// their slots.
    #[test]
    fn eulerian_pairing_agrees_with_coordinate_virtual_work() {
        let grid = ParameterGrid::unit(&[3, 3]).unwrap();
        let p = grid.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let phi = random_form(&mut rng, &grid);
        let state = random_state(&mut rng, &grid);
        let bars = eulerian_components(&phi, &state).unwrap();

        for n in grid.nodes() {
            let mut xi = AlgebroidElement::constant(n, p, rv(&mut rng), rv(&mut rng));
            for a in 0..p {
                xi.zeta_d[a] = rv(&mut rng);
                xi.iota_d[a] = rv(&mut rng);
            }
            let v = fundamental_variation(&xi, n, state.node(n)).unwrap();

            let fm = phi.node(n);
            let mut lhs = fm.f.dot(&v.dx) + fm.m.dot(&v.de);
            for a in 0..p {
                lhs += fm.sigma[a].dot(&v.dx_d[a]) + fm.mu[a].dot(&v.de_d[a]);
            }

            let b = bars.node(n);
            let mut rhs = b.f.dot(&xi.zeta) + b.m.dot(&hat(&xi.iota));
            for a in 0..p {
                rhs += b.sigma[a].dot(&xi.zeta_d[a]) + b.mu[a].dot(&hat(&xi.iota_d[a]));
            }
            assert!(
                (lhs - rhs).abs() < 1e-13 * (1.0 + lhs.abs()),
                "node {n}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn euclidian_check_of_zero_form_is_zero() {
        let grid = ParameterGrid::unit(&[4, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let state = random_state(&mut rng, &grid);
        let (rf, rm) = euclidian_check(&FundamentalOneForm::zero(grid.clone()), &state).unwrap();
        assert_eq!(rf, 0.0);
        assert_eq!(rm, 0.0);
    }

    #[test]
    fn constructed_internal_moment_passes_euclidian_check() {
        let grid = ParameterGrid::unit(&[4, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let state = wavy_state(&grid);
        let mut phi = random_form(&mut rng, &grid);
        let p = grid.dim();
        let nodes: Vec<FormNode> = grid
            .nodes()
            .map(|n| {
                let mut fm = phi.node(n).clone();
                fm.f = Vector3::zeros();
                fm.m = internal_torque(&fm, state.node(n), p) * state.node(n).e;
                fm
            })
            .collect();
        phi = FundamentalOneForm::from_values(grid.clone(), nodes).unwrap();
        let (rf, rm) = euclidian_check(&phi, &state).unwrap();
        assert_eq!(rf, 0.0);
        assert!(rm < 1e-14);
    }

    #[test]
    fn constant_force_violates_euclidian_invariance_by_its_norm() {
        let grid = ParameterGrid::unit(&[5, 5]).unwrap();
        let f = Vector3::new(0.6, -0.3, 0.2);
        let phi = FundamentalOneForm::from_fn(grid.clone(), |_| {
            let mut fm = FormNode::zero();
            fm.f = f;
            fm
        });
        let state = KinematicalState::inclusion(grid.clone());
        let (rf, rm) = euclidian_check(&phi, &state).unwrap();
        let expected = f.norm() * (grid.node_count() as f64).sqrt();
        assert!((rf - expected).abs() < 1e-12 * expected);
        assert_eq!(rm, 0.0);
    }

    #[test]
    fn euclidian_projection_passes_the_check_and_is_idempotent() {
        let grid = ParameterGrid::unit(&[5, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let phi = random_form(&mut rng, &grid);
        let state = wavy_state(&grid);

        let projected = euclidian_project(&phi, &state).unwrap();
        let (rf, rm) = euclidian_check(&projected, &state).unwrap();
        assert_eq!(rf, 0.0);
        assert!(rm < 1e-13);

        let twice = euclidian_project(&projected, &state).unwrap();
        for n in grid.nodes() {
            assert!((twice.node(n).m - projected.node(n).m).amax() < 1e-14);
            assert_eq!(twice.node(n).sigma, projected.node(n).sigma);
        }
    }

    #[test]
    fn projection_of_force_only_form_is_the_zero_form() {
        let grid = ParameterGrid::unit(&[4]).unwrap();
        let phi = FundamentalOneForm::from_fn(grid.clone(), |_| {
            let mut fm = FormNode::zero();
            fm.f = Vector3::new(1.0, 2.0, 3.0);
            fm
        });
        let state = KinematicalState::inclusion(grid.clone());
        let projected = euclidian_project(&phi, &state).unwrap();
        for fm in projected.nodes() {
            assert_eq!(fm.f, Vector3::zeros());
            assert_eq!(fm.m, Matrix3::zeros());
        }
        let (rf, rm) = euclidian_check(&projected, &state).unwrap();
        assert_eq!((rf, rm), (0.0, 0.0));
    }

    /// Virtual work of any constant rigid variation against a Euclidian form
    /// vanishes node-wise, hence also in the weighted total.
    #[test]
    fn rigid_variations_do_no_work_on_euclidian_forms() {
        let grid = ParameterGrid::unit(&[12, 9]).unwrap();
        let p = grid.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let state = wavy_state(&grid);
        let phi = euclidian_project(&random_form(&mut rng, &grid), &state).unwrap();

        let scale: f64 = phi
            .nodes()
            .iter()
            .map(|fm| fm.m.amax())
            .fold(1.0, f64::max);
        for _ in 0..5 {
            let zeta = rv(&mut rng);
            let iota = rv(&mut rng);
            let ds = StateVariation::from_values(
                grid.clone(),
                grid.nodes()
                    .map(|n| {
                        let xi = AlgebroidElement::constant(n, p, zeta, iota);
                        fundamental_variation(&xi, n, state.node(n)).unwrap()
                    })
                    .collect(),
            )
            .unwrap();
            let works = virtual_work(&phi, &ds).unwrap();
            let total: f64 = works
                .iter()
                .zip(grid.nodes())
                .map(|(w, n)| w * grid.node_weight(n))
                .sum();
            let node_max = works.iter().fold(0.0f64, |m, w| m.max(w.abs()));
            assert!(node_max < 1e-12 * scale, "node-wise work {node_max}");
            assert!(total.abs() < 1e-12 * scale, "total work {total}");
        }
    }

    #[test]
    fn constant_stresses_are_in_lagrangian_equilibrium() {
        let grid = ParameterGrid::unit(&[5, 4]).unwrap();
        let mut fm = FormNode::zero();
        fm.sigma[0] = Vector3::new(0.4, 0.1, -0.2);
        fm.sigma[1] = Vector3::new(-0.3, 0.8, 0.5);
        fm.mu[0] = Matrix3::from_fn(|i, j| 0.1 * (i as f64 - j as f64));
        fm.mu[1] = Matrix3::from_fn(|i, j| 0.2 * (i + j) as f64);
        let phi = FundamentalOneForm::from_fn(grid.clone(), |_| fm.clone());
        let state = KinematicalState::inclusion(grid.clone());
        let res = equilibrium_residual_lagrangian(&phi, &state, 1e-12).unwrap();
        assert_eq!(res.max_force_norm(), 0.0);
        assert_eq!(res.max_moment_norm(), 0.0);
    }

    #[test]
    fn manufactured_linear_stress_with_matching_force_balances() {
        let grid = ParameterGrid::unit(&[6, 5]).unwrap();
        let g0 = Vector3::new(0.7, -0.2, 0.1);
        let g1 = Vector3::new(-0.4, 0.5, 0.9);
        let phi = FundamentalOneForm::from_fn(grid.clone(), |c| {
            let mut fm = FormNode::zero();
            fm.sigma[0] = g0 * c[0];
            fm.sigma[1] = g1 * c[1];
            fm.f = g0 + g1;
            fm
        });
        let state = KinematicalState::inclusion(grid.clone());
        let res = equilibrium_residual_lagrangian(&phi, &state, 1e-12).unwrap();
        assert!(res.max_force_norm() < 1e-13);
        assert_eq!(res.max_moment_norm(), 0.0);
    }

    #[test]
    fn lagrangian_residual_converges_to_the_closed_form_derivative() {
        let sig = |a: usize, u: f64, v: f64| -> Vector3<f64> {
            let t = 1.0 + a as f64;
            Vector3::new((t * u).sin() * v.cos(), (u + t * v).cos(), (t * u - v).sin())
        };
        let dsig = |a: usize, u: f64, v: f64| -> (Vector3<f64>, Vector3<f64>) {
            let t = 1.0 + a as f64;
            (
                Vector3::new(
                    t * (t * u).cos() * v.cos(),
                    -(u + t * v).sin(),
                    t * (t * u - v).cos(),
                ),
                Vector3::new(
                    -(t * u).sin() * v.sin(),
                    -t * (u + t * v).sin(),
                    -(t * u - v).cos(),
                ),
            )
        };
        let muf = |a: usize, u: f64, v: f64| -> Matrix3<f64> {
            let t = 0.5 + a as f64;
            hat(&Vector3::new((t * v).sin(), (t * u).cos(), (u * v).sin()))
                + Matrix3::identity() * (u + t * v).sin()
        };
        let dmu = |a: usize, u: f64, v: f64| -> (Matrix3<f64>, Matrix3<f64>) {
            let t = 0.5 + a as f64;
            (
                hat(&Vector3::new(0.0, -t * (t * u).sin(), v * (u * v).cos()))
                    + Matrix3::identity() * (u + t * v).cos(),
                hat(&Vector3::new(t * (t * v).cos(), 0.0, u * (u * v).cos()))
                    + Matrix3::identity() * (t * (u + t * v).cos()),
            )
        };
        let m_ext = |u: f64, v: f64| Matrix3::identity() * u.sin() + hat(&Vector3::new(v, u, 0.0));

        let mut errs = Vec::new();
        for n in [9usize, 17, 33] {
            let h = 1.0 / (n - 1) as f64;
            let grid = ParameterGrid::new(&[n, n], &[h, h]).unwrap();
            let phi = FundamentalOneForm::from_fn(grid.clone(), |c| {
                let mut fm = FormNode::zero();
                for a in 0..2 {
                    fm.sigma[a] = sig(a, c[0], c[1]);
                    fm.mu[a] = muf(a, c[0], c[1]);
                }
                fm.m = m_ext(c[0], c[1]);
                fm.f = Vector3::new(c[0].cos(), (c[0] * c[1]).sin(), c[1].cos());
                fm
            });
            let state = KinematicalState::inclusion(grid.clone());
            let res = equilibrium_residual_lagrangian(&phi, &state, 1e-12).unwrap();

            let mut err = 0.0f64;
            for k in grid.nodes() {
                let c = grid.coords(k);
                let mut rf = Vector3::new(c[0].cos(), (c[0] * c[1]).sin(), c[1].cos());
                let mut rmo = asym(&m_ext(c[0], c[1]));
                for a in 0..2 {
                    let (du, dv) = dsig(a, c[0], c[1]);
                    rf -= if a == 0 { du } else { dv };
                    let (mu_u, mu_v) = dmu(a, c[0], c[1]);
                    rmo -= asym(&if a == 0 { mu_u } else { mu_v });
                }
                err = err
                    .max((res.force()[k] - rf).amax())
                    .max((res.moment()[k] - rmo).amax());
            }
            errs.push(err);
        }
        let order = (errs[1] / errs[2]).log2();
        assert!((1.7..2.3).contains(&order), "errors {errs:?}, order {order}");
    }

    #[test]
    fn lagrangian_residual_rejects_non_integrable_states() {
        let grid = ParameterGrid::unit(&[5]).unwrap();
        let phi = FundamentalOneForm::zero(grid.clone());
        let mut state = KinematicalState::inclusion(grid.clone());
        let mut nodes = state.nodes().to_vec();
        nodes[2].x_d[0] = Vector3::new(3.0, 0.0, 0.0);
        state = KinematicalState::from_values(grid.clone(), nodes).unwrap();
        match equilibrium_residual_lagrangian(&phi, &state, 1e-8) {
            Err(StaticsError::NonIntegrableState { node, .. }) => assert_eq!(node, 2),
            other => panic!("expected integrability rejection, got {other:?}"),
        }
    }

    #[test]
    fn identity_stress_on_the_inclusion_is_in_eulerian_equilibrium() {
        let grid = ParameterGrid::unit(&[5, 4, 4]).unwrap();
        let state = KinematicalState::inclusion(grid.clone());
        let mu_const = hat(&Vector3::new(0.3, -0.1, 0.6));
        let phi = FundamentalOneForm::from_fn(grid.clone(), |_| {
            let mut fm = FormNode::zero();
            for a in 0..3 {
                fm.sigma[a] = Vector3::ith(a, 1.0);
                fm.mu[a] = mu_const * (1.0 + a as f64);
            }
            fm
        });
        let res = equilibrium_residual_eulerian(&phi, &state, 1e-10).unwrap();
        assert_eq!(res.max_force_norm(), 0.0);
        assert_eq!(res.max_moment_norm(), 0.0);
    }

    #[test]
    fn linear_couple_stress_leaves_its_constant_gradient() {
        let grid = ParameterGrid::unit(&[6, 5]).unwrap();
        let state = KinematicalState::inclusion(grid.clone());
        let k = hat(&Vector3::new(0.0, 0.0, 0.7));
        // slim mu^0 = (2 rho1 + rho2) K, slim mu^1 = (rho1 - 3 rho2) K:
        // divergence = (2 - 3) K = -K.
        let phi = FundamentalOneForm::from_fn(grid.clone(), |c| {
            let mut fm = FormNode::zero();
            fm.mu[0] = k * (2.0 * c[0] + c[1]);
            fm.mu[1] = k * (c[0] - 3.0 * c[1]);
            fm
        });
        let res = equilibrium_residual_eulerian(&phi, &state, 1e-10).unwrap();
        assert_eq!(res.max_force_norm(), 0.0);
        for mom in res.moment() {
            assert!((mom - (-k)).amax() < 1e-12);
        }
    }

    #[test]
    fn eulerian_residual_requires_a_euclidian_form() {
        let grid = ParameterGrid::unit(&[5]).unwrap();
        let state = KinematicalState::inclusion(grid.clone());
        let res = equilibrium_residual_eulerian(&FundamentalOneForm::zero(grid.clone()), &state, 1e-12)
            .unwrap();
        assert_eq!(res.max_force_norm(), 0.0);
        assert_eq!(res.max_moment_norm(), 0.0);

        let phi = FundamentalOneForm::from_fn(grid.clone(), |_| {
            let mut fm = FormNode::zero();
            fm.f = Vector3::x();
            fm
        });
        assert!(matches!(
            equilibrium_residual_eulerian(&phi, &state, 1e-6),
            Err(StaticsError::NotEuclidian { .. })
        ));
    }

    /// The divergence of the full barred couple stress splits into the slim
    /// divergence plus the divergence of the stress-moment cross term,
    /// node-wise, because the stencil is linear. The cross term is the
    /// discrete form of the product-rule terms that cancel against the force
    /// equation in the Eulerian reduction.
    #[test]
    fn barred_couple_stress_divergences_differ_by_the_cross_term() {
        let grid = ParameterGrid::unit(&[7, 6]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let phi = random_form(&mut rng, &grid);
        let state = wavy_state(&grid);
        let bars = eulerian_components(&phi, &state).unwrap();
        let p = grid.dim();

        let full: Vec<Vec<Matrix3<f64>>> = (0..p)
            .map(|a| bars.nodes().iter().map(|b| b.mu[a]).collect())
            .collect();
        let slim: Vec<Vec<Matrix3<f64>>> = (0..p)
            .map(|a| {
                grid.nodes()
                    .map(|n| slim_couple_stress(phi.node(n), state.node(n), a))
                    .collect()
            })
            .collect();
        let cross: Vec<Vec<Matrix3<f64>>> = (0..p)
            .map(|a| {
                grid.nodes()
                    .map(|n| asym(&(phi.node(n).sigma[a] * state.node(n).x.transpose())))
                    .collect()
            })
            .collect();

        for n in grid.nodes() {
            let mut lhs = Matrix3::zeros();
            let mut rhs = Matrix3::zeros();
            for a in 0..p {
                lhs += grid.fd(&full[a], a, n);
                rhs += grid.fd(&slim[a], a, n) + grid.fd(&cross[a], a, n);
            }
            assert!((lhs - rhs).amax() < 1e-12, "node {n}");
        }
    }

    #[test]
    fn moment_residuals_are_antisymmetric_to_the_bit() {
        let grid = ParameterGrid::unit(&[5, 4, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let phi = random_form(&mut rng, &grid);
        let inclusion = KinematicalState::inclusion(grid.clone());
        let projected = euclidian_project(&phi, &inclusion).unwrap();

        let lag = equilibrium_residual_lagrangian(&phi, &inclusion, 1e-12).unwrap();
        let eul = equilibrium_residual_eulerian(&projected, &inclusion, 1e-10).unwrap();
        let cos = equilibrium_residual_cosserat3d(&projected, &inclusion).unwrap();
        for res in [&lag, &eul, &cos] {
            for m in res.moment() {
                assert_eq!((m + m.transpose()).amax(), 0.0);
            }
        }
    }

    #[test]
    fn classical_equilibrium_of_constant_symmetric_stress_is_exact() {
        let grid = ParameterGrid::unit(&[4, 4, 4]).unwrap();
        let state = KinematicalState::inclusion(grid.clone());
        let s = Matrix3::new(1.0, 0.3, 0.0, 0.3, -0.5, 0.2, 0.0, 0.2, 0.8);
        let phi = FundamentalOneForm::from_fn(grid.clone(), |_| {
            let mut fm = FormNode::zero();
            for j in 0..3 {
                fm.sigma[j] = s.column(j).into();
            }
            fm
        });
        let res = equilibrium_residual_cosserat3d(&phi, &state).unwrap();
        assert_eq!(res.max_force_norm(), 0.0);
        assert_eq!(res.max_moment_norm(), 0.0);
    }

    #[test]
    fn couple_stress_balancing_an_antisymmetric_stress_closes_the_moment_equation() {
        let grid = ParameterGrid::unit(&[5, 5, 5]).unwrap();
        let state = KinematicalState::inclusion(grid.clone());
        let s = hat(&Vector3::new(0.3, -0.2, 0.5));
        // sum_k d_k (-asym(S) rho^k / 3) = -asym(S) cancels the stress term.
        let phi = FundamentalOneForm::from_fn(grid.clone(), |c| {
            let mut fm = FormNode::zero();
            for j in 0..3 {
                fm.sigma[j] = s.column(j).into();
                fm.mu[j] = -s * (c[j] / 3.0);
            }
            fm
        });
        let res = equilibrium_residual_cosserat3d(&phi, &state).unwrap();
        assert_eq!(res.max_force_norm(), 0.0);
        assert!(res.max_moment_norm() < 1e-13);
    }

    #[test]
    fn pure_shear_without_couple_stress_leaves_exactly_its_antisymmetric_part() {
        let grid = ParameterGrid::unit(&[4, 4, 4]).unwrap();
        let state = KinematicalState::inclusion(grid.clone());
        let tau = 0.9;
        let phi = FundamentalOneForm::from_fn(grid.clone(), |_| {
            let mut fm = FormNode::zero();
            fm.sigma[1] = Vector3::x() * tau; // S = tau e_x e_2^T
            fm
        });
        let res = equilibrium_residual_cosserat3d(&phi, &state).unwrap();
        let s_mat = Matrix3::from_columns(&[
            Vector3::zeros(),
            Vector3::x() * tau,
            Vector3::zeros(),
        ]);
        let expected = asym(&s_mat);
        assert!(expected.amax() > 0.4);
        assert_eq!(res.max_force_norm(), 0.0);
        for m in res.moment() {
            assert_eq!((m - expected).amax(), 0.0);
        }
    }

    #[test]
    fn classical_and_eulerian_residuals_coincide_on_the_inclusion() {
        let grid = ParameterGrid::unit(&[9, 9, 9]).unwrap();
        let state = KinematicalState::inclusion(grid.clone());
        let phi = euclidian_project(&smooth_form(&grid), &state).unwrap();
        let eul = equilibrium_residual_eulerian(&phi, &state, 1e-10).unwrap();
        let cos = equilibrium_residual_cosserat3d(&phi, &state).unwrap();
        for n in grid.nodes() {
            assert!((eul.force()[n] - cos.force()[n]).amax() < 1e-13);
            assert!((eul.moment()[n] - cos.moment()[n]).amax() < 1e-13);
        }
    }

    #[test]
    fn singular_deformation_jacobian_is_reported_with_its_node() {
        let grid = ParameterGrid::unit(&[3, 3, 3]).unwrap();
        let phi = FundamentalOneForm::zero(grid.clone());
        let mut nodes = KinematicalState::inclusion(grid.clone()).nodes().to_vec();
        nodes[13].x_d[1] = Vector3::zeros();
        let state = KinematicalState::from_values(grid.clone(), nodes).unwrap();
        match equilibrium_residual_cosserat3d(&phi, &state) {
            Err(StaticsError::SingularJacobian { node }) => assert_eq!(node, 13),
            other => panic!("expected singular Jacobian, got {other:?}"),
        }
        let planar = ParameterGrid::unit(&[4, 4]).unwrap();
        assert!(matches!(
            equilibrium_residual_cosserat3d(
                &FundamentalOneForm::zero(planar.clone()),
                &KinematicalState::inclusion(planar)
            ),
            Err(StaticsError::WrongDimension { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn constitutive_law_is_deterministic_and_unloaded_law_is_euclidian() {
        let grid = ParameterGrid::new(&[9], &[0.125]).unwrap();
        let law = LinearRodLaw::new(1.3, 0.8, 0.9, 1.1);
        let chi = DisplacementField::from_fn(grid.clone(), smooth_motion);
        let state = displace_state(&KinematicalState::inclusion(grid.clone()), &chi).unwrap();

        let a = FundamentalOneForm::from_law(&law, &state);
        let b = FundamentalOneForm::from_law(&law, &state);
        for n in grid.nodes() {
            assert_eq!(a.node(n), b.node(n));
        }

        let (rf, rm) = euclidian_check(&a, &state).unwrap();
        assert_eq!(rf, 0.0);
        assert!(rm < 1e-13);
    }

    #[test]
    fn unloaded_identity_rod_needs_no_correction() {
        let grid = ParameterGrid::new(&[17], &[1.0 / 16.0]).unwrap();
        let law = LinearRodLaw::new(1.0, 1.0, 1.0, 1.0);
        let bc = RodBoundaryConditions {
            start: EndCondition::Clamped {
                motion: RigidMotion::identity(),
            },
            end: EndCondition::Clamped {
                motion: RigidMotion::identity(),
            },
        };
        let sol = solve_rod(&law, &bc, &grid).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.residual_norm, 0.0);
        for g in sol.field.values() {
            assert_eq!(g.translation, Vector3::zeros());
            assert_eq!(*g.rotation.matrix(), Matrix3::identity());
        }
    }

    #[test]
    fn tip_rotation_is_linear_in_the_applied_end_couple() {
        let n = 33;
        let length = 1.0;
        let grid = ParameterGrid::new(&[n], &[length / (n - 1) as f64]).unwrap();
        let bend = 1.1;
        let law = LinearRodLaw::new(1.3, 0.8, 0.9, bend);

        let mut slopes = Vec::new();
        for couple in [0.011, 0.022, 0.033, 0.044] {
            let bc = RodBoundaryConditions {
                start: EndCondition::Clamped {
                    motion: RigidMotion::identity(),
                },
                end: EndCondition::Free {
                    force: Vector3::zeros(),
                    couple: Vector3::z() * couple,
                },
            };
            let sol = solve_rod(&law, &bc, &grid).unwrap();
            assert!(sol.converged, "couple {couple}: {:?}", sol.trace);
            let tip = sol.field.value(grid.node_count() - 1).rotation.axial_log();
            slopes.push(tip.z / couple);

            // The converged interior satisfies the Eulerian equilibrium
            // equations: the rod rows are those equations for this law.
            let chi = &sol.field;
            let state =
                displace_state(&KinematicalState::inclusion(grid.clone()), chi).unwrap();
            let phi = FundamentalOneForm::from_law(&law, &state);
            let res = equilibrium_residual_eulerian(&phi, &state, 1e-8).unwrap();
            for k in grid.nodes().filter(|k| !grid.is_boundary(*k)) {
                assert!(res.force()[k].amax() < 1e-6);
                assert!(res.moment()[k].amax() < 1e-6);
            }
        }
        for s in &slopes {
            assert!(
                (s - length / bend).abs() < 0.01 * (length / bend),
                "slopes {slopes:?}"
            );
        }
    }

    // Manufactured planar solution for the rod: position and frame follow
    // closed-form curves, and the body loads are derived analytically from
    // the same law the solver uses.
    const MMS_C1: f64 = 0.08;
    const MMS_C2: f64 = 0.06;
    const MMS_C3: f64 = 0.15;
    const MMS_KS: f64 = 1.3;
    const MMS_KSH: f64 = 0.8;
    const MMS_KT: f64 = 0.9;
    const MMS_KB: f64 = 1.1;

    fn rot_z(t: f64) -> Matrix3<f64> {
        let (s, c) = t.sin_cos();
        Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    }

    fn mms_position(r: f64) -> Vector3<f64> {
        Vector3::new(r + MMS_C1 * r.sin(), MMS_C2 * (1.0 - r.cos()), 0.0)
    }

    fn mms_target(r: f64) -> RigidMotion {
        let rot = Rotation::new(rot_z(MMS_C3 * r.sin())).unwrap();
        let a = mms_position(r) - rot.matrix() * Vector3::new(r, 0.0, 0.0);
        RigidMotion::new(a, rot)
    }

    fn mms_stress(r: f64) -> Vector3<f64> {
        let psi = MMS_C3 * r.sin();
        let xp = Vector3::new(1.0 + MMS_C1 * r.cos(), MMS_C2 * r.sin(), 0.0);
        let gamma = rot_z(-psi) * xp - Vector3::x();
        rot_z(psi) * Vector3::new(MMS_KS, MMS_KSH, MMS_KSH).component_mul(&gamma)
    }

    fn mms_body_force(r: f64) -> Vector3<f64> {
        let psi = MMS_C3 * r.sin();
        let psip = MMS_C3 * r.cos();
        let xp = Vector3::new(1.0 + MMS_C1 * r.cos(), MMS_C2 * r.sin(), 0.0);
        let xpp = Vector3::new(-MMS_C1 * r.sin(), MMS_C2 * r.cos(), 0.0);
        let gamma_p = rot_z(-psi) * xpp - Vector3::z().cross(&(rot_z(-psi) * xp)) * psip;
        Vector3::z().cross(&mms_stress(r)) * psip
            + rot_z(psi) * Vector3::new(MMS_KS, MMS_KSH, MMS_KSH).component_mul(&gamma_p)
    }

    fn mms_body_couple(r: f64) -> Vector3<f64> {
        let psipp = -MMS_C3 * r.sin();
        let xp = Vector3::new(1.0 + MMS_C1 * r.cos(), MMS_C2 * r.sin(), 0.0);
        Vector3::z() * (MMS_KB * psipp) + xp.cross(&mms_stress(r))
    }

    #[test]
    fn manufactured_rod_solution_is_recovered_at_second_order() {
        let length = std::f64::consts::PI;
        let mut errs = Vec::new();
        for n in [9usize, 17, 33] {
            let grid = ParameterGrid::new(&[n], &[length / (n - 1) as f64]).unwrap();
            let law = LinearRodLaw::new(MMS_KS, MMS_KSH, MMS_KT, MMS_KB)
                .with_body_force(mms_body_force)
                .with_body_couple(mms_body_couple);
            let bc = RodBoundaryConditions {
                start: EndCondition::Clamped {
                    motion: mms_target(0.0),
                },
                end: EndCondition::Clamped {
                    motion: mms_target(length),
                },
            };
            let sol = solve_rod(&law, &bc, &grid).unwrap();
            assert!(sol.converged, "n {n}: trace {:?}", sol.trace);
            assert!(sol.iterations <= 10, "n {n}: {} iterations", sol.iterations);

            let mut err = 0.0f64;
            for k in grid.nodes() {
                let target = mms_target(grid.coords(k)[0]);
                let got = sol.field.value(k);
                err = err.max((got.translation - target.translation).amax());
                let rel = got.rotation.compose(&target.rotation.transpose());
                err = err.max(rel.axial_log().amax());
            }
            errs.push(err);
        }
        let order = (errs[1] / errs[2]).log2();
        assert!(
            (1.7..2.3).contains(&order),
            "errors {errs:?}, order {order}"
        );
    }

    #[test]
    fn unconstrained_rod_under_self_equilibrated_couples_does_not_pretend_to_converge() {
        let grid = ParameterGrid::new(&[9], &[0.125]).unwrap();
        let law = LinearRodLaw::new(1.0, 1.0, 1.0, 1.0);
        let couple = Vector3::z() * 0.05;
        let bc = RodBoundaryConditions {
            start: EndCondition::Free {
                force: Vector3::zeros(),
                couple,
            },
            end: EndCondition::Free {
                force: Vector3::zeros(),
                couple,
            },
        };
        match solve_rod(&law, &bc, &grid) {
            Err(StaticsError::SingularNewtonSystem { .. }) => {}
            Ok(sol) => assert!(!sol.converged, "free-free rod reported convergence"),
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn boundary_terms_live_on_the_boundary_and_carry_face_weights() {
        let grid = ParameterGrid::new(&[4, 5], &[0.5, 0.25]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let phi = random_form(&mut rng, &grid);
        let terms = boundary_terms(&phi);
        assert!(!terms.is_empty());
        let mut area = 0.0;
        for bt in &terms {
            assert!(grid.is_boundary(bt.node));
            assert!(bt.orientation == 1.0 || bt.orientation == -1.0);
            assert_eq!(bt.tension, phi.node(bt.node).sigma[bt.axis] * bt.orientation);
            area += bt.weight;
        }
        // Two faces of length 1.0 (axis 1 extent) plus two of length 1.5.
        assert!((area - 2.0 * (1.0 + 1.5)).abs() < 1e-12);
    }
}
