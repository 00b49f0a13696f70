//! Koopman and generator estimation: structure, oracles and accuracy.

use pfnav_core::operator::{
    edmd_fit, estimate_generator, gram_matrices, normalize_rows, pf_generator, FieldTag, KoopmanMatrix, SnapshotData, VectorField,
    generate_snapshots,
};
use pfnav_core::{Matrix, Vec2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod support;
use support::{derivative_error, lattice, normal_equation_oracle, rel_frobenius, unit_domain};

#[test]
fn edmd_matches_normal_equations_for_translation() {
    let basis = lattice(3, 1.0);
    let data = generate_snapshots(&VectorField::Constant(Vec2::new(1.0, 0.0)), &unit_domain(), 500, 0.05, 3).unwrap();
    let lambda = 1e-9;
    let u = edmd_fit(&data, &basis, Some(lambda)).unwrap();
    let oracle = normal_equation_oracle(&data, &basis, lambda);
    let err = rel_frobenius(&u.u, &oracle);
    assert!(err < 1e-10, "relative Frobenius error {err}");
}

#[test]
fn edmd_matches_normal_equations_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let basis = lattice(4, 0.8);
        let n = rng.gen_range(100..400);
        let x: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.gen(), rng.gen())).collect();
        let y: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.gen(), rng.gen())).collect();
        let data = SnapshotData::new(x, y, 0.1).unwrap();
        let u = edmd_fit(&data, &basis, Some(1e-8)).unwrap();
        let err = rel_frobenius(&u.u, &normal_equation_oracle(&data, &basis, 1e-8));
        assert!(err < 1e-8, "relative Frobenius error {err}");
    }
}

#[test]
fn identity_flow_gives_identity_operator() {
    let basis = lattice(3, 0.4);
    let data = generate_snapshots(&VectorField::ZERO, &unit_domain(), 400, 0.1, 9).unwrap();
    let u = edmd_fit(&data, &basis, Some(1e-10)).unwrap();
    let err = u.u.sub(&Matrix::identity(9)).frobenius_norm();
    assert!(err < 1e-8, "‖U - I‖ = {err}");
}

#[test]
fn heavy_regularisation_drives_operator_to_zero() {
    let basis = lattice(3, 1.0);
    let data = generate_snapshots(&VectorField::Constant(Vec2::new(0.0, 1.0)), &unit_domain(), 300, 0.05, 1).unwrap();
    let (_, a) = gram_matrices(&data, &basis);
    let u = edmd_fit(&data, &basis, Some(1e12)).unwrap();
    assert!(u.u.frobenius_norm() < 1e-6 * a.frobenius_norm());
}

#[test]
fn zero_drift_generator_is_near_zero() {
    let dt = 0.05;
    let basis = lattice(8, 0.7);
    let p = estimate_generator(&VectorField::ZERO, FieldTag::Drift, &unit_domain(), &basis, 2000, dt, 4, None).unwrap();
    let size = p.p.frobenius_norm() * dt;
    assert!(size <= 0.05, "‖P‖_F·dt = {size}");
}

#[test]
fn estimated_generators_conserve_mass() {
    let basis = lattice(6, 0.7);
    for (j, dir) in [Vec2::new(1.0, 0.0), Vec2::new(0.0, -1.0)].into_iter().enumerate() {
        let p = estimate_generator(&VectorField::Constant(dir), FieldTag::Control(j), &unit_domain(), &basis, 1500, 0.05, 8, None).unwrap();
        for s in p.column_sums() {
            assert!(s.abs() <= 1e-9, "column sum {s}");
        }
    }
}

#[test]
fn generator_derivative_error_shrinks_under_refinement() {
    let coarse = derivative_error(2000, 0.02, 21);
    let fine = derivative_error(8000, 0.01, 21);
    println!("relative L2 error of the translation generator: {coarse:.3} (P=2000, dt=0.02), {fine:.3} (P=8000, dt=0.01)");
    assert!(fine < coarse);
}

fn random_matrix(q: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, q * q).prop_map(move |v| Matrix::from_row_major(q, q, v))
}

proptest! {
    #[test]
    fn normalised_rows_are_stochastic(u in (2usize..9).prop_flat_map(random_matrix)) {
        let n = normalize_rows(&KoopmanMatrix { u, normalized: false }).unwrap();
        prop_assert!(n.normalized);
        for i in 0..n.u.rows() {
            let row = n.u.row(i);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn generators_have_zero_column_sums(u in (2usize..9).prop_flat_map(random_matrix), dt in 0.001f64..1.0) {
        let n = normalize_rows(&KoopmanMatrix { u, normalized: false }).unwrap();
        let p = pf_generator(&n, dt, FieldTag::Drift).unwrap();
        for s in p.column_sums() {
            prop_assert!(s.abs() <= 1e-9);
        }
    }
}
