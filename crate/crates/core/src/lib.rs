//! Group-theoretic kinematics and statics for Cosserat media.
//!
//! The crate is organized along the geometric pipeline:
//!
//! - [`rigid_motion`]: the group of rigid motions, its Lie algebra, closed
//!   form exponential, brackets, and wrench pairings.
//! - [`frame_bundle`]: frame coordinates, structure constants in the adapted
//!   basis, and a finite-difference Maurer-Cartan check.
//! - [`grid`]: uniform parameter grids with second-order stencils and
//!   trapezoidal quadrature.
//! - [`kinematics`]: displacement fields, kinematical states carrying first
//!   derivative slots, deformation one-forms, and the classical strain split.
//! - [`jet_groupoid`]: first-order jets of motion fields, their groupoid
//!   composition, and the associated algebroid of variations.
//! - [`fundamental_sequence`]: compatibility and incompatibility operators
//!   on deformation data.
//! - [`statics`]: fundamental one-forms (stress states), virtual work,
//!   Eulerian components, equilibrium residuals, and a one-parameter rod
//!   solver.

pub mod frame_bundle;
pub mod fundamental_sequence;
pub mod grid;
pub mod jet_groupoid;
pub mod kinematics;
pub mod rigid_motion;
pub mod statics;

pub use fundamental_sequence::{
    compatibility_report, nabla_chi, nabla_wedge_1, nabla_wedge_2, CompatibilityReport,
    Iso3ThreeForm, Iso3TwoForm, SequenceError,
};
pub use grid::{GridError, ParameterGrid};
pub use jet_groupoid::{
    fundamental_variation, holonomic_jets, jet_act, jet_compose, jet_inverse, prolong_variation,
    to_algebroid, AlgebroidElement, JetElement, JetError, JetVariation,
};
pub use kinematics::{
    deformation_of, displace_state, from_schaefer, spencer_residual, strain_decompose,
    DeformationForm, DisplacementField, KinematicalState, KinematicsError, StateNode,
    StateVariation, StrainDecomposition, VariationNode,
};
pub use rigid_motion::{
    act_on_frame, asym, axial, bracket, exp, fundamental_field, hat, pair, AffineFrame,
    IsoAlgebraElement, RigidMotion, RigidMotionError, Rotation, Wrench, TOL_GROUP, TOL_ORTHO,
};
pub use statics::{
    boundary_terms, equilibrium_residual_cosserat3d, equilibrium_residual_eulerian,
    equilibrium_residual_lagrangian, euclidian_check, euclidian_project, eulerian_components,
    solve_rod, total_virtual_work, virtual_work, BoundaryTerm, ConstitutiveLaw, EndCondition,
    EquilibriumResidual, EulerianComponents, EulerianNode, FormNode, FundamentalOneForm,
    LinearRodLaw, NewtonIterate, RodBoundaryConditions, RodSolution, StaticsError, MAX_ITER,
    SOLVE_TOL,
};
