//! The Lie groupoid of 1-jets of displacement fields.
//!
//! A jet carries a group value (a, R) over a grid node together with free
//! derivative slots; multiplication is defined only between jets over the
//! same node. Right translation of a jet variation to the identity yields an
//! algebroid element (zeta, iota) with its own slots, whose fundamental
//! vector field on kinematical states drives the virtual-work calculus.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::grid::{ParameterGrid, MAX_DIM};
use crate::kinematics::{DisplacementField, StateNode, StateVariation, VariationNode};
use crate::rigid_motion::{asym, axial, hat, RigidMotionError, Rotation};

#[derive(Debug, Error)]
pub enum JetError {
    #[error("jets live over different nodes ({left} vs {right}); the product is undefined")]
    SourceMismatch { left: usize, right: usize },
    #[error("jets have different base dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("intrinsic chart of a {dim}-dimensional jet needs {expected} fiber coordinates, got {got}")]
    BadArity {
        dim: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Motion(#[from] RigidMotionError),
}

/// One-jet of a displacement field at a grid node: group value plus `dim`
/// unconstrained derivative slots. No tangency between slots and any actual
/// field is imposed; that freedom is the point of the groupoid.
#[derive(Debug, Clone)]
pub struct JetElement {
    pub rho: usize,
    pub dim: usize,
    pub a: Vector3<f64>,
    pub r: Rotation,
    pub a_d: [Vector3<f64>; MAX_DIM],
    pub r_d: [Matrix3<f64>; MAX_DIM],
}

impl JetElement {
    pub fn identity(rho: usize, dim: usize) -> Self {
        JetElement {
            rho,
            dim,
            a: Vector3::zeros(),
            r: Rotation::identity(),
            a_d: [Vector3::zeros(); MAX_DIM],
            r_d: [Matrix3::zeros(); MAX_DIM],
        }
    }

    /// Dimension of the jet manifold chart over a p-dimensional base:
    /// p base coordinates, 6 for the group value, 6 per derivative slot.
    pub fn chart_dimension(p: usize) -> usize {
        p + 6 + 6 * p
    }

    /// Build a jet from intrinsic fiber coordinates. The base point enters
    /// through `rho`, which stands for the p leading chart coordinates; the
    /// slice supplies the remaining 6 + 6p: translation, rotation vector,
    /// then per axis a translation slot and a left angular-velocity vector
    /// w_a with R_a = hat(w_a) R.
    pub fn from_intrinsic(rho: usize, dim: usize, coords: &[f64]) -> Result<Self, JetError> {
        let expected = Self::chart_dimension(dim) - dim;
        if coords.len() != expected {
            return Err(JetError::BadArity {
                dim,
                expected,
                got: coords.len(),
            });
        }
        let vec3 = |k: usize| Vector3::new(coords[k], coords[k + 1], coords[k + 2]);
        let a = vec3(0);
        let theta = vec3(3);
        let r = crate::rigid_motion::exp(
            &crate::rigid_motion::IsoAlgebraElement::new(Vector3::zeros(), theta),
            1.0,
        )
        .rotation;
        let mut jet = JetElement {
            rho,
            dim,
            a,
            r,
            a_d: [Vector3::zeros(); MAX_DIM],
            r_d: [Matrix3::zeros(); MAX_DIM],
        };
        for axis in 0..dim {
            jet.a_d[axis] = vec3(6 + 3 * axis);
            jet.r_d[axis] = hat(&vec3(6 + 3 * dim + 3 * axis)) * jet.r.matrix();
        }
        Ok(jet)
    }

    fn check_mate(&self, other: &JetElement) -> Result<(), JetError> {
        if self.rho != other.rho {
            return Err(JetError::SourceMismatch {
                left: self.rho,
                right: other.rho,
            });
        }
        if self.dim != other.dim {
            return Err(JetError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Largest deviation from another jet, over values and live slots.
    pub fn distance(&self, other: &JetElement) -> f64 {
        let mut m = (self.a - other.a).amax();
        m = m.max((self.r.matrix() - other.r.matrix()).amax());
        for axis in 0..self.dim.max(other.dim) {
            m = m.max((self.a_d[axis] - other.a_d[axis]).amax());
            m = m.max((self.r_d[axis] - other.r_d[axis]).amax());
        }
        m
    }
}

/// Fiberwise product: the group law on values, the product rule on slots.
pub fn jet_compose(g: &JetElement, h: &JetElement) -> Result<JetElement, JetError> {
    g.check_mate(h)?;
    let r = g.r.matrix();
    let mut out = JetElement {
        rho: g.rho,
        dim: g.dim,
        a: g.a + r * h.a,
        r: g.r.compose(&h.r),
        a_d: [Vector3::zeros(); MAX_DIM],
        r_d: [Matrix3::zeros(); MAX_DIM],
    };
    for axis in 0..g.dim {
        out.a_d[axis] = g.a_d[axis] + g.r_d[axis] * h.a + r * h.a_d[axis];
        out.r_d[axis] = g.r_d[axis] * h.r.matrix() + r * h.r_d[axis];
    }
    Ok(out)
}

/// Two-sided inverse. The slot formulas follow from differentiating the
/// identities g g^{-1} = e: R_a^{-1} = -R^{-1} R_a R^{-1} and
/// a_a^{-1} = R^{-1} R_a R^{-1} a - R^{-1} a_a.
pub fn jet_inverse(g: &JetElement) -> JetElement {
    let rt = g.r.transpose();
    let rtm = *rt.matrix();
    let mut out = JetElement {
        rho: g.rho,
        dim: g.dim,
        a: -(rtm * g.a),
        r: rt,
        a_d: [Vector3::zeros(); MAX_DIM],
        r_d: [Matrix3::zeros(); MAX_DIM],
    };
    for axis in 0..g.dim {
        let middle = rtm * g.r_d[axis] * rtm;
        out.r_d[axis] = -middle;
        out.a_d[axis] = middle * g.a - rtm * g.a_d[axis];
    }
    out
}

/// Action of a jet on a state node over the same grid node: the frame action
/// on values, the product rule on slots.
pub fn jet_act(g: &JetElement, rho: usize, s: &StateNode) -> Result<StateNode, JetError> {
    if g.rho != rho {
        return Err(JetError::SourceMismatch {
            left: g.rho,
            right: rho,
        });
    }
    let r = g.r.matrix();
    let mut out = StateNode::new(g.a + r * s.x, r * s.e);
    for axis in 0..g.dim {
        out.x_d[axis] = g.a_d[axis] + g.r_d[axis] * s.x + r * s.x_d[axis];
        out.e_d[axis] = g.r_d[axis] * s.e + r * s.e_d[axis];
    }
    Ok(out)
}

/// Variation of a jet: tangent components at some `JetElement`.
#[derive(Debug, Clone)]
pub struct JetVariation {
    pub da: Vector3<f64>,
    pub dr: Matrix3<f64>,
    pub da_d: [Vector3<f64>; MAX_DIM],
    pub dr_d: [Matrix3<f64>; MAX_DIM],
}

impl JetVariation {
    pub fn zero() -> Self {
        JetVariation {
            da: Vector3::zeros(),
            dr: Matrix3::zeros(),
            da_d: [Vector3::zeros(); MAX_DIM],
            dr_d: [Matrix3::zeros(); MAX_DIM],
        }
    }
}

/// Right-translated jet variation: an algebroid element over one node.
/// `iota` is the axial vector of the antisymmetric rotation generator.
#[derive(Debug, Clone)]
pub struct AlgebroidElement {
    pub rho: usize,
    pub dim: usize,
    pub zeta: Vector3<f64>,
    pub iota: Vector3<f64>,
    pub zeta_d: [Vector3<f64>; MAX_DIM],
    pub iota_d: [Vector3<f64>; MAX_DIM],
}

impl AlgebroidElement {
    pub fn constant(rho: usize, dim: usize, zeta: Vector3<f64>, iota: Vector3<f64>) -> Self {
        AlgebroidElement {
            rho,
            dim,
            zeta,
            iota,
            zeta_d: [Vector3::zeros(); MAX_DIM],
            iota_d: [Vector3::zeros(); MAX_DIM],
        }
    }
}

/// Right-translate a variation at `g` back to the identity:
/// iota = axial(asym(dR R^T)), zeta = da - hat(iota) a, and the slot
/// components by the product rule through the inverse jet's slots.
///
/// The slot relations are the derivative of the value relations, so for a
/// variation obtained by differentiating a smooth family the slots equal the
/// grid derivatives of (zeta, iota) to discretization order.
pub fn to_algebroid(g: &JetElement, v: &JetVariation) -> AlgebroidElement {
    let r = g.r.matrix();
    let rt = r.transpose();

    let iota_mat = asym(&(v.dr * rt));
    let iota = axial(&iota_mat);
    let zeta = v.da - iota_mat * g.a;

    let mut out = AlgebroidElement {
        rho: g.rho,
        dim: g.dim,
        zeta,
        iota,
        zeta_d: [Vector3::zeros(); MAX_DIM],
        iota_d: [Vector3::zeros(); MAX_DIM],
    };
    for axis in 0..g.dim {
        // Inverse jet rotation slot: d/drho^a of R^{-1}.
        let rt_slot = -(rt * g.r_d[axis] * rt);
        let iota_slot_mat = asym(&(v.dr_d[axis] * rt + v.dr * rt_slot));
        out.iota_d[axis] = axial(&iota_slot_mat);
        out.zeta_d[axis] = v.da_d[axis] - iota_slot_mat * g.a - iota_mat * g.a_d[axis];
    }
    out
}

/// Fundamental vector field of an algebroid element on a state node:
/// dx = zeta + hat(iota) x, de = hat(iota) e, with slot components by the
/// product rule.
pub fn fundamental_variation(
    xi: &AlgebroidElement,
    rho: usize,
    s: &StateNode,
) -> Result<VariationNode, JetError> {
    if xi.rho != rho {
        return Err(JetError::SourceMismatch {
            left: xi.rho,
            right: rho,
        });
    }
    let spin = hat(&xi.iota);
    let mut out = VariationNode::zero();
    out.dx = xi.zeta + spin * s.x;
    out.de = spin * s.e;
    for axis in 0..xi.dim {
        let spin_d = hat(&xi.iota_d[axis]);
        out.dx_d[axis] = xi.zeta_d[axis] + spin_d * s.x + spin * s.x_d[axis];
        out.de_d[axis] = spin_d * s.e + spin * s.e_d[axis];
    }
    Ok(out)
}

/// Fill the derivative slots of a per-node variation with grid finite
/// differences of its value components. The result is integrable by
/// construction: its slots are the derivatives of its values.
pub fn prolong_variation(
    grid: &ParameterGrid,
    values: &[(Vector3<f64>, Matrix3<f64>)],
) -> StateVariation {
    let p = grid.dim();
    let dxs: Vec<Vector3<f64>> = values.iter().map(|(dx, _)| *dx).collect();
    let des: Vec<Matrix3<f64>> = values.iter().map(|(_, de)| *de).collect();
    let nodes = grid
        .nodes()
        .map(|n| {
            let mut node = VariationNode::zero();
            node.dx = dxs[n];
            node.de = des[n];
            for a in 0..p {
                node.dx_d[a] = grid.fd(&dxs, a, n);
                node.de_d[a] = grid.fd(&des, a, n);
            }
            node
        })
        .collect();
    StateVariation::from_values(grid.clone(), nodes).expect("lengths match by construction")
}

/// Holonomic jet of a displacement field at every node: slots are the grid
/// finite differences of the field values.
pub fn holonomic_jets(chi: &DisplacementField) -> Vec<JetElement> {
    let grid = chi.grid();
    let p = grid.dim();
    let translations: Vec<Vector3<f64>> = chi.values().iter().map(|g| g.translation).collect();
    let rotations: Vec<Matrix3<f64>> = chi.values().iter().map(|g| *g.rotation.matrix()).collect();
    grid.nodes()
        .map(|n| {
            let mut jet = JetElement {
                rho: n,
                dim: p,
                a: translations[n],
                r: chi.value(n).rotation,
                a_d: [Vector3::zeros(); MAX_DIM],
                r_d: [Matrix3::zeros(); MAX_DIM],
            };
            for a in 0..p {
                jet.a_d[a] = grid.fd(&translations, a, n);
                jet.r_d[a] = grid.fd(&rotations, a, n);
            }
            jet
        })
        .collect()
}
