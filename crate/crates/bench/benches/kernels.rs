//! Throughput benches for the hot kernels: group composition, the discrete
//! compatibility chain, the classical residual, and the rod solve.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cosserat_core::{
    deformation_of, equilibrium_residual_cosserat3d, exp, nabla_wedge_1, nabla_wedge_2, solve_rod,
    DisplacementField, EndCondition, FormNode, FundamentalOneForm, IsoAlgebraElement,
    KinematicalState, LinearRodLaw, ParameterGrid, RigidMotion, RodBoundaryConditions,
};

fn rv(rng: &mut impl Rng) -> Vector3<f64> {
    Vector3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

fn bench_group_ops(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let elements: Vec<IsoAlgebraElement> =
        (0..256).map(|_| IsoAlgebraElement::new(rv(&mut rng), rv(&mut rng))).collect();
    let motions: Vec<RigidMotion> = elements.iter().map(|x| exp(x, 1.0)).collect();

    c.bench_function("motion_compose_256", |b| {
        b.iter(|| {
            let mut acc = RigidMotion::identity();
            for g in &motions {
                acc = acc.compose(black_box(g));
            }
            acc
        })
    });
    c.bench_function("algebra_exp_256", |b| {
        b.iter(|| {
            elements
                .iter()
                .map(|x| exp(black_box(x), 1.0).translation.norm())
                .sum::<f64>()
        })
    });
}

fn smooth_motion(r: &[f64; 3]) -> RigidMotion {
    let t = Vector3::new(
        0.05 * (3.0 * r[0]).sin(),
        0.05 * (2.0 * (r[1] + r[2])).cos(),
        0.05 * (3.0 * r[2]).sin(),
    );
    let w = Vector3::new(0.0, 0.05 * (2.0 * r[0]).cos(), 0.05 * (3.0 * r[1]).sin());
    RigidMotion::new(t, exp(&IsoAlgebraElement::new(Vector3::zeros(), w), 1.0).rotation)
}

fn bench_compatibility_chain(c: &mut Criterion) {
    let grid = ParameterGrid::unit(&[17, 17, 17]).unwrap();
    let chi = DisplacementField::from_fn(grid.clone(), smooth_motion);
    let form = deformation_of(&chi);
    let two = nabla_wedge_1(&form);

    c.bench_function("deformation_of_17cubed", |b| {
        b.iter(|| deformation_of(black_box(&chi)).max_amplitude())
    });
    c.bench_function("nabla_wedge_1_17cubed", |b| {
        b.iter(|| nabla_wedge_1(black_box(&form)).max_norm())
    });
    c.bench_function("nabla_wedge_2_17cubed", |b| {
        b.iter(|| nabla_wedge_2(black_box(&two), black_box(&form)).unwrap().max_norm())
    });
}

fn bench_statics(c: &mut Criterion) {
    let grid = ParameterGrid::unit(&[17, 17, 17]).unwrap();
    let state = KinematicalState::inclusion(grid.clone());
    let phi = FundamentalOneForm::from_fn(grid, |r| {
        let mut fm = FormNode::zero();
        for a in 0..3 {
            fm.sigma[a] = Vector3::new(
                (2.0 * r[a]).sin(),
                (3.0 * r[(a + 1) % 3]).cos(),
                r[a] * r[(a + 2) % 3],
            );
        }
        fm
    });
    c.bench_function("cosserat3d_residual_17cubed", |b| {
        b.iter(|| {
            equilibrium_residual_cosserat3d(black_box(&phi), black_box(&state))
                .unwrap()
                .max_force_norm()
        })
    });
}

fn bench_rod_solve(c: &mut Criterion) {
    let grid = ParameterGrid::new(&[33], &[1.0 / 32.0]).unwrap();
    let law = LinearRodLaw::new(1.3, 0.8, 0.9, 1.1);
    let bc = RodBoundaryConditions {
        start: EndCondition::Clamped { motion: RigidMotion::identity() },
        end: EndCondition::Free {
            force: Vector3::zeros(),
            couple: Vector3::new(0.0, 0.0, 0.033),
        },
    };
    let mut group = c.benchmark_group("rod");
    group.sample_size(10);
    group.bench_function("solve_tip_couple_33_nodes", |b| {
        b.iter(|| {
            let sol = solve_rod(black_box(&law), black_box(&bc), black_box(&grid)).unwrap();
            assert!(sol.converged);
            sol.residual_norm
        })
    });
    group.finish();
}

criterion_group!(
    kernels,
    bench_group_ops,
    bench_compatibility_chain,
    bench_statics,
    bench_rod_solve
);
criterion_main!(kernels);
