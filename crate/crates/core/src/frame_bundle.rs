//! Oriented orthonormal frames as group coordinates, structure constants of
//! the motion algebra in the adapted basis, and a finite-difference check of
//! the Maurer-Cartan structure equations.
//!
//! Fixing a reference frame identifies every oriented orthonormal frame
//! `(x, f)` with the unique motion carrying the reference onto it; the frame
//! coordinates are exactly the group coordinates of that motion expressed in
//! the reference frame.

use crate::rigid_motion::{
    axial, bracket, IsoAlgebraElement, RigidMotion, Rotation, TOL_ORTHO,
};
use nalgebra::{Matrix3, Matrix4, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameBundleError {
    #[error("step {h} too large for the order estimate: residual went {r1:.3e} -> {r2:.3e} under halving")]
    StepTooLarge { h: f64, r1: f64, r2: f64 },
}

/// Coordinates `(x, f)` of an oriented orthonormal frame: origin position
/// and leg matrix, both expressed in the ambient reference frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameCoordinates {
    pub x: Vector3<f64>,
    pub f: Rotation,
}

/// Reference frame used by the frame/group identification. Must be
/// oriented-orthonormal; violations are programming errors.
fn check_reference(basis: &Matrix3<f64>) {
    let defect = (basis.transpose() * basis - Matrix3::identity()).amax();
    assert!(
        defect <= TOL_ORTHO && basis.determinant() > 0.0,
        "reference frame must be oriented-orthonormal (defect {defect:.3e})"
    );
}

/// Frame reached by acting `g` on the reference frame `(O, e)`:
/// origin `O + e a`, legs `e R`.
pub fn frame_from_group(g: &RigidMotion, reference: &crate::rigid_motion::AffineFrame) -> FrameCoordinates {
    check_reference(&reference.basis);
    let f = Rotation::new(reference.basis * g.rotation.matrix())
        .expect("product of orthonormal matrices is orthonormal");
    FrameCoordinates { x: reference.origin + reference.basis * g.translation, f }
}

/// Inverse identification: the unique motion carrying the reference frame
/// onto `frame`.
pub fn group_from_frame(
    frame: &FrameCoordinates,
    reference: &crate::rigid_motion::AffineFrame,
) -> RigidMotion {
    check_reference(&reference.basis);
    let et = reference.basis.transpose();
    let rotation = Rotation::new(et * frame.f.matrix())
        .expect("product of orthonormal matrices is orthonormal");
    RigidMotion { translation: et * (frame.x - reference.origin), rotation }
}

/// Structure constants `c[a][b][c]` with `[E_b, E_c] = c^a_{bc} E_a` over
/// the adapted basis: indices 0..3 translational, 3..6 rotational.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    pub c: [[[f64; 6]; 6]; 6],
}

impl StructureConstants {
    /// Bracket of two basis elements through the table, as a coefficient
    /// 6-vector over the adapted basis.
    pub fn evaluate(&self, b: usize, c: usize) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (a, slot) in out.iter_mut().enumerate() {
            *slot = self.c[a][b][c];
        }
        out
    }
}

/// Adapted basis element: translations for `i < 3`, rotations for `i >= 3`.
pub fn adapted_basis(i: usize) -> IsoAlgebraElement {
    let mut v = Vector3::zeros();
    let mut w = Vector3::zeros();
    if i < 3 {
        v[i] = 1.0;
    } else {
        w[i - 3] = 1.0;
    }
    IsoAlgebraElement::new(v, w)
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Structure constants of the motion algebra in the adapted basis.
///
/// Case split: the translational-translational block vanishes (the
/// translation subalgebra is Abelian, and its bracket never escapes into the
/// rotational slots); rotation against rotation closes on rotations with
/// `c^{3+i}_{3+j,3+k} = eps_{jki}`; the mixed block is
/// `[E_b, E_{3+i}] = eps_{bia} E_a`, the sign fixed by the convention that
/// the matrix of an axial vector acts as the cross product.
pub fn structure_constants_iso3() -> StructureConstants {
    let mut c = [[[0.0; 6]; 6]; 6];
    for b in 0..3 {
        for i in 0..3 {
            for a in 0..3 {
                let e = levi_civita(b, i, a);
                c[a][b][3 + i] = e;
                c[a][3 + i][b] = -e;
            }
        }
    }
    for j in 0..3 {
        for k in 0..3 {
            for i in 0..3 {
                c[3 + i][3 + j][3 + k] = levi_civita(j, k, i);
            }
        }
    }
    StructureConstants { c }
}

fn embed4(g: &RigidMotion) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(g.rotation.matrix());
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&g.translation);
    m
}

fn project_algebra(m: &Matrix4<f64>) -> IsoAlgebraElement {
    let rot: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into();
    IsoAlgebraElement::new(m.fixed_view::<3, 1>(0, 3).into(), axial(&rot))
}

/// Left logarithmic derivative `Phi^-1 d Phi` along one surface direction,
/// by central differences of the homogeneous embedding.
fn log_derivative(
    surface: &impl Fn(f64, f64) -> RigidMotion,
    s: f64,
    t: f64,
    h: f64,
    along_s: bool,
) -> IsoAlgebraElement {
    let (p, m) = if along_s {
        (surface(s + h, t), surface(s - h, t))
    } else {
        (surface(s, t + h), surface(s, t - h))
    };
    let inv = embed4(&surface(s, t))
        .try_inverse()
        .expect("homogeneous motion matrices are invertible");
    let fd = (embed4(&p) - embed4(&m)) * (0.5 / h);
    project_algebra(&(inv * fd))
}

/// Finite-difference residual of the structure equation on the two-parameter
/// surface `Phi(s, t) = g1(s) g2(t)` at the origin of parameters.
///
/// With `A = theta(d/ds)` and `B = theta(d/dt)` the left Maurer-Cartan form
/// evaluated on the coordinate fields, the structure equation reads
/// `dA/dt - dB/ds - [A, B] = 0` up to relabeling; the returned value is the
/// algebra norm of its second-order finite-difference evaluation, which
/// falls like h² for smooth families.
pub fn maurer_cartan_residual(
    g1: impl Fn(f64) -> RigidMotion,
    g2: impl Fn(f64) -> RigidMotion,
    h: f64,
) -> f64 {
    let surface = |s: f64, t: f64| g1(s).compose(&g2(t));
    // dtheta(X, Y) = d_s theta(Y) - d_t theta(X) on commuting coordinate
    // fields; the bracket term carries coefficient one under the
    // normalization [theta, theta](X, Y) = 2 [theta(X), theta(Y)].
    let b_plus = log_derivative(&surface, h, 0.0, h, false);
    let b_minus = log_derivative(&surface, -h, 0.0, h, false);
    let a_plus = log_derivative(&surface, 0.0, h, h, true);
    let a_minus = log_derivative(&surface, 0.0, -h, h, true);
    let ds_b = b_plus.add(&b_minus.scale(-1.0)).scale(0.5 / h);
    let dt_a = a_plus.add(&a_minus.scale(-1.0)).scale(0.5 / h);
    let a0 = log_derivative(&surface, 0.0, 0.0, h, true);
    let b0 = log_derivative(&surface, 0.0, 0.0, h, false);
    ds_b.add(&dt_a.scale(-1.0)).add(&bracket(&a0, &b0)).norm()
}

/// Residual together with its behavior under step halving.
#[derive(Debug, Clone, Copy)]
pub struct MaurerCartanEstimate {
    pub residual: f64,
    pub residual_half: f64,
    /// Observed order `log2(r(h) / r(h/2))`; `None` when both residuals sit
    /// at the rounding floor (exact cases).
    pub order: Option<f64>,
}

const RESIDUAL_FLOOR: f64 = 1e-12;

/// Residual at `h` and `h/2` with the Richardson order estimate. Flags the
/// step as too large when halving fails to shrink a residual that sits
/// clearly above the rounding floor.
pub fn maurer_cartan_order(
    g1: impl Fn(f64) -> RigidMotion + Copy,
    g2: impl Fn(f64) -> RigidMotion + Copy,
    h: f64,
) -> Result<MaurerCartanEstimate, FrameBundleError> {
    let r1 = maurer_cartan_residual(g1, g2, h);
    let r2 = maurer_cartan_residual(g1, g2, 0.5 * h);
    if r1 <= RESIDUAL_FLOOR && r2 <= RESIDUAL_FLOOR {
        return Ok(MaurerCartanEstimate { residual: r1, residual_half: r2, order: None });
    }
    let order = (r1 / r2).log2();
    if !(order > 0.5) {
        return Err(FrameBundleError::StepTooLarge { h, r1, r2 });
    }
    Ok(MaurerCartanEstimate { residual: r1, residual_half: r2, order: Some(order) })
}
