//! Shared oracles and samplers for the integration tests.
//!
//! The homogeneous 4x4 embedding and the truncated exponential series are
//! deliberately independent of the library implementation: they only use
//! plain matrix arithmetic, so they can arbitrate the closed-form paths.

#![allow(dead_code)]

use cosserat_core::{IsoAlgebraElement, RigidMotion, Rotation};
use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Homogeneous embedding of a motion: top-left rotation, top-right
/// translation, bottom row (0 0 0 1).
pub fn embed(g: &RigidMotion) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(g.rotation.matrix());
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&g.translation);
    m
}

/// Matrix form of an algebra element: top-left skew block, top-right
/// velocity, zero bottom row.
pub fn alg_matrix(x: &IsoAlgebraElement) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&cosserat_core::hat(&x.w));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&x.v);
    m
}

/// Truncated exponential series sum_{k<=terms} (s X)^k / k! in the 4x4
/// representation. Thirty terms leave a remainder far below 1e-13 for the
/// argument sizes used in tests.
pub fn series_exp(x: &IsoAlgebraElement, s: f64, terms: usize) -> Matrix4<f64> {
    let xm = alg_matrix(&x.scale(s));
    let mut sum = Matrix4::identity();
    let mut term = Matrix4::identity();
    for k in 1..=terms {
        term = term * xm / (k as f64);
        sum += term;
    }
    sum
}

pub fn max_abs4(m: &Matrix4<f64>) -> f64 {
    m.amax()
}

/// Largest entry-wise deviation between two motions.
pub fn motion_distance(g: &RigidMotion, h: &RigidMotion) -> f64 {
    let dt = (g.translation - h.translation).amax();
    let dr = (g.rotation.matrix() - h.rotation.matrix()).amax();
    dt.max(dr)
}

pub fn random_vector(rng: &mut ChaCha8Rng, scale: f64) -> Vector3<f64> {
    if scale <= 0.0 {
        return Vector3::zeros();
    }
    Vector3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

pub fn random_alg(rng: &mut ChaCha8Rng, scale: f64) -> IsoAlgebraElement {
    IsoAlgebraElement::new(random_vector(rng, scale), random_vector(rng, scale))
}

/// Random motion with rotation angle up to about `angle` radians.
pub fn random_motion(rng: &mut ChaCha8Rng, shift: f64, angle: f64) -> RigidMotion {
    let w = random_vector(rng, angle);
    let g = cosserat_core::exp(&IsoAlgebraElement::new(Vector3::zeros(), w), 1.0);
    RigidMotion::new(random_vector(rng, shift), g.rotation)
}

pub fn random_rotation(rng: &mut ChaCha8Rng, angle: f64) -> Rotation {
    random_motion(rng, 0.0, angle).rotation
}

pub fn rotation_from_matrix(m: Matrix3<f64>) -> Rotation {
    Rotation::new(m).expect("test matrix is a rotation")
}
