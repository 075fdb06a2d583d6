//! Rigid motions of Euclidean 3-space and their Lie algebra.
//!
//! A rigid motion is a pair `(a, R)` of a translation vector and a proper
//! rotation, acting on points as `x -> a + R x` and composing as
//! `(a, R)(a', R') = (a + R a', R R')`. Algebra elements are pairs
//! `(v, w)` of a velocity and an axial (angular velocity) vector; the hat
//! map sends `w` to the matrix acting as `w x (.)`, and the bracket is
//!
//! ```text
//! [(v, w), (v', w')] = (w x v' - w' x v, w x w')
//! ```
//!
//! All rotations are kept orthonormal to `TOL_ORTHO`; composition
//! re-orthonormalizes through the polar projection whenever accumulated
//! drift exceeds that bound, so long products stay on the group.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Orthonormality budget for a single rotation matrix.
pub const TOL_ORTHO: f64 = 1e-10;

/// Group-law defect budget for composed motions (axioms, exp identities).
pub const TOL_GROUP: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RigidMotionError {
    #[error("matrix is not a proper rotation: orthogonality defect {defect:.3e}")]
    NotOrthonormal { defect: f64 },
    #[error("matrix has non-positive determinant {det:.6e}, no proper polar factor")]
    NotOrientable { det: f64 },
    #[error("polar iteration failed to converge")]
    PolarDiverged,
}

/// Skew matrix of an axial vector: `hat(w) * v == w.cross(&v)`.
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Antisymmetric part `(m - m^T) / 2`.
pub fn asym(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m - m.transpose()) * 0.5
}

/// Axial vector of the antisymmetric part of `m`; inverse of `hat` on
/// antisymmetric input.
pub fn axial(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

fn ortho_defect(m: &Matrix3<f64>) -> f64 {
    let gram = m.transpose() * m - Matrix3::identity();
    let mut d = gram.amax();
    d = d.max((m.determinant() - 1.0).abs());
    d
}

/// Proper rotation factor of `m` by the Newton polar iteration
/// `X <- (X + X^-T) / 2`; quadratically convergent for any `m` with
/// positive determinant.
fn polar_factor(m: &Matrix3<f64>) -> Result<Matrix3<f64>, RigidMotionError> {
    let det = m.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(RigidMotionError::NotOrientable { det });
    }
    let mut x = *m;
    for _ in 0..60 {
        let inv_t = x
            .try_inverse()
            .ok_or(RigidMotionError::PolarDiverged)?
            .transpose();
        let next = (x + inv_t) * 0.5;
        let step = (next - x).amax();
        x = next;
        if step < 1e-15 {
            break;
        }
    }
    if ortho_defect(&x) > TOL_ORTHO {
        return Err(RigidMotionError::PolarDiverged);
    }
    Ok(x)
}

/// Proper orthogonal 3x3 matrix. Construction checks `R^T R = I` and
/// `det R = 1` to `TOL_ORTHO`; `project` accepts anything with positive
/// determinant and returns the nearest rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    pub fn new(m: Matrix3<f64>) -> Result<Self, RigidMotionError> {
        let defect = ortho_defect(&m);
        if defect > TOL_ORTHO {
            return Err(RigidMotionError::NotOrthonormal { defect });
        }
        Ok(Rotation(m))
    }

    /// Nearest rotation in the polar sense; re-orthonormalization entry point.
    pub fn project(m: &Matrix3<f64>) -> Result<Self, RigidMotionError> {
        Ok(Rotation(polar_factor(m)?))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    /// Current orthonormality defect; stays below `TOL_ORTHO` by invariant.
    pub fn drift(&self) -> f64 {
        ortho_defect(&self.0)
    }

    fn compose_matrix(m: Matrix3<f64>) -> Self {
        if ortho_defect(&m) > TOL_ORTHO {
            // Drift accumulated past the budget: snap back to the group.
            Rotation(polar_factor(&m).expect("product of rotations has positive determinant"))
        } else {
            Rotation(m)
        }
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation::compose_matrix(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Rotation angle-axis vector (the axial logarithm). Stable near the
    /// identity through the series for theta / sin(theta); near angle pi the
    /// axis is recovered from the dominant diagonal entry.
    pub fn axial_log(&self) -> Vector3<f64> {
        let m = &self.0;
        let cos = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        let theta = cos.acos();
        if theta < 1e-8 {
            return axial(m) * (1.0 + theta * theta / 6.0);
        }
        if theta < std::f64::consts::PI - 1e-6 {
            return axial(m) * (theta / theta.sin());
        }
        // Near pi: R ~ 2 n n^T - I with flipped sign structure; take the
        // largest diagonal to pick a stable axis component.
        let diag = Vector3::new(m[(0, 0)], m[(1, 1)], m[(2, 2)]);
        let k = diag.imax();
        let mut n = Vector3::zeros();
        n[k] = ((diag[k] + 1.0) * 0.5).max(0.0).sqrt();
        for j in 0..3 {
            if j != k {
                n[j] = (m[(j, k)] + m[(k, j)]) * 0.25 / n[k];
            }
        }
        let n = n.normalize();
        // Orient the axis by the antisymmetric part when it is not fully
        // degenerate, then scale by the angle.
        let ax = axial(m);
        let sign = if ax.dot(&n) < 0.0 { -1.0 } else { 1.0 };
        n * (theta * sign)
    }
}

/// Oriented rigid motion `(a, R)` acting on points as `x -> a + R x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    pub translation: Vector3<f64>,
    pub rotation: Rotation,
}

impl RigidMotion {
    pub fn identity() -> Self {
        RigidMotion { translation: Vector3::zeros(), rotation: Rotation::identity() }
    }

    pub fn new(translation: Vector3<f64>, rotation: Rotation) -> Self {
        RigidMotion { translation, rotation }
    }

    /// Group law `(a, R)(a', R') = (a + R a', R R')`.
    pub fn compose(&self, other: &RigidMotion) -> RigidMotion {
        RigidMotion {
            translation: self.translation + self.rotation.apply(&other.translation),
            rotation: Rotation::compose_matrix(self.rotation.0 * other.rotation.0),
        }
    }

    /// Inverse element `(-R^T a, R^T)`.
    pub fn inverse(&self) -> RigidMotion {
        let rt = self.rotation.transpose();
        RigidMotion { translation: -(rt.apply(&self.translation)), rotation: rt }
    }

    pub fn act_point(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.translation + self.rotation.apply(x)
    }

    /// Adjoint action on algebra elements:
    /// `Ad_(a,R)(v, w) = (R v + a x (R w), R w)`.
    pub fn adjoint(&self, x: &IsoAlgebraElement) -> IsoAlgebraElement {
        let rw = self.rotation.apply(&x.w);
        IsoAlgebraElement { v: self.rotation.apply(&x.v) + self.translation.cross(&rw), w: rw }
    }
}

/// Algebra element `(v, w)`: infinitesimal translation and axial rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoAlgebraElement {
    pub v: Vector3<f64>,
    pub w: Vector3<f64>,
}

impl IsoAlgebraElement {
    pub fn new(v: Vector3<f64>, w: Vector3<f64>) -> Self {
        IsoAlgebraElement { v, w }
    }

    pub fn zero() -> Self {
        IsoAlgebraElement { v: Vector3::zeros(), w: Vector3::zeros() }
    }

    pub fn scale(&self, s: f64) -> Self {
        IsoAlgebraElement { v: self.v * s, w: self.w * s }
    }

    pub fn add(&self, other: &Self) -> Self {
        IsoAlgebraElement { v: self.v + other.v, w: self.w + other.w }
    }

    pub fn norm(&self) -> f64 {
        (self.v.norm_squared() + self.w.norm_squared()).sqrt()
    }
}

/// Lie bracket `[(v, w), (v', w')] = (w x v' - w' x v, w x w')`.
pub fn bracket(x: &IsoAlgebraElement, y: &IsoAlgebraElement) -> IsoAlgebraElement {
    IsoAlgebraElement {
        v: x.w.cross(&y.v) - y.w.cross(&x.v),
        w: x.w.cross(&y.w),
    }
}

/// Dual pairing of a wrench `(p, l)` with an algebra element `(v, w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    /// Linear component (momentum / force slot).
    pub p: Vector3<f64>,
    /// Angular component (angular momentum / couple slot).
    pub l: Vector3<f64>,
}

impl Wrench {
    pub fn new(p: Vector3<f64>, l: Vector3<f64>) -> Self {
        Wrench { p, l }
    }
}

/// Natural pairing `<(p, l), (v, w)> = p . v + l . w`.
pub fn pair(wrench: &Wrench, x: &IsoAlgebraElement) -> f64 {
    wrench.p.dot(&x.v) + wrench.l.dot(&x.w)
}

/// Affine frame: an origin point and three basis legs (columns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFrame {
    pub origin: Vector3<f64>,
    pub basis: Matrix3<f64>,
}

impl AffineFrame {
    pub fn standard() -> Self {
        AffineFrame { origin: Vector3::zeros(), basis: Matrix3::identity() }
    }
}

/// Left action of a motion on an orthonormal affine frame:
/// the origin moves to `origin + basis * a` and the legs to `basis * R`.
/// Non-orthonormal input frames are rejected.
pub fn act_on_frame(g: &RigidMotion, frame: &AffineFrame) -> Result<AffineFrame, RigidMotionError> {
    let defect = ortho_defect(&frame.basis);
    if defect > TOL_ORTHO {
        return Err(RigidMotionError::NotOrthonormal { defect });
    }
    Ok(AffineFrame {
        origin: frame.origin + frame.basis * g.translation,
        basis: frame.basis * g.rotation.0,
    })
}

/// Velocity at `point` of the rigid field generated by `(v, w)`:
/// `v + w x point`.
pub fn fundamental_field(x: &IsoAlgebraElement, point: &Vector3<f64>) -> Vector3<f64> {
    x.v + x.w.cross(point)
}

// Coefficients of the closed-form exponential. The quotients are written in
// cancellation-free forms; below theta ~ 1e-2 the remaining one switches to
// its Taylor series, keeping every branch accurate to a few ulps.
fn exp_coefficients(theta: f64) -> (f64, f64, f64) {
    let t2 = theta * theta;
    if theta < 1e-2 {
        (
            1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0)),
            0.5 - t2 / 24.0 * (1.0 - t2 / 30.0 * (1.0 - t2 / 56.0)),
            1.0 / 6.0 - t2 / 120.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0)),
        )
    } else {
        let s = theta.sin();
        let half = (theta * 0.5).sin();
        // 1 - cos = 2 sin^2(theta/2) avoids the subtraction entirely.
        let b = 2.0 * half * half / t2;
        (s / theta, b, (theta - s) / (t2 * theta))
    }
}

/// One-parameter subgroup `exp(s (v, w))` in closed form.
///
/// The rotation block is the Rodrigues formula; the translation applies the
/// usual `V` matrix to `s v`. The result lands on the group to `TOL_ORTHO`
/// without projection.
pub fn exp(x: &IsoAlgebraElement, s: f64) -> RigidMotion {
    let w = x.w * s;
    let v = x.v * s;
    let theta = w.norm();
    let (a, b, c) = exp_coefficients(theta);
    let k = hat(&w);
    let k2 = k * k;
    let r = Matrix3::identity() + k * a + k2 * b;
    let vmat = Matrix3::identity() + k * b + k2 * c;
    RigidMotion { translation: vmat * v, rotation: Rotation(r) }
}
