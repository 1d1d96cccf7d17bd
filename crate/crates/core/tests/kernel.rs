mod common;

use common::*;
use decoherent_histories::linalg::{psd_check, ComplexMatrix};
use decoherent_histories::search::random::{haar_unitary, random_hamiltonian};
use decoherent_histories::{kron, matexp_unitary, Tolerance};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_matrix(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hamiltonian(dim, &mut rng);
    let u = haar_unitary(dim, &mut rng);
    // Non-Hermitian but well scaled: H·U.
    ComplexMatrix::from_fn(dim, |i, j| (0..dim).fold(c(0.0, 0.0), |a, k| a + h[(i, k)] * u[(k, j)])).unwrap()
}

fn hermitian(dim: usize, seed: u64) -> ComplexMatrix {
    random_hamiltonian(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn exponential_matches_power_series() {
    let tol = Tolerance::default();
    for seed in 0..5 {
        let h = hermitian(4, seed);
        let u = matexp_unitary(&h, 0.7, tol).unwrap();
        let series = exp_series(&to_dense(&h), 0.7, 60);
        assert!(dense_max_diff(&u, &series) < 1e-12, "seed {seed}");
        let gram = &u.adjoint() * &u;
        assert!(gram.max_abs_diff(&ComplexMatrix::identity(4)) < tol.atol());
    }
}

#[test]
fn kron_mixed_product_rule() {
    for seed in 0..10 {
        let (a, b, cm, d) = (
            random_matrix(2, seed),
            random_matrix(2, seed + 100),
            random_matrix(2, seed + 200),
            random_matrix(2, seed + 300),
        );
        let lhs = &kron(&a, &b) * &kron(&cm, &d);
        let rhs = kron(&(&a * &cm), &(&b * &d));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }
}

#[test]
fn gram_matrices_are_psd_with_char_poly_eigenvalues() {
    let tol = Tolerance::default();
    for seed in 0..20 {
        let v = random_matrix(2, seed);
        let g = &v.adjoint() * &v;
        let verdict = psd_check(&g, tol).unwrap();
        assert!(verdict.psd);
        let (lo, _) = hermitian2_eigenvalues(&g);
        assert!((verdict.min_eigenvalue - lo).abs() < 1e-12, "{} vs {lo}", verdict.min_eigenvalue);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponential_is_unitary_and_a_group(dim in 2usize..=8, seed in any::<u64>(), s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let tol = Tolerance::default();
        let h = hermitian(dim, seed);
        let us = matexp_unitary(&h, s, tol).unwrap();
        let ut = matexp_unitary(&h, t, tol).unwrap();
        let ust = matexp_unitary(&h, s + t, tol).unwrap();
        let id = ComplexMatrix::identity(dim);
        prop_assert!((&us.adjoint() * &us).max_abs_diff(&id) <= tol.loose());
        prop_assert!((&us * &ut).max_abs_diff(&ust) <= tol.loose());
    }

    #[test]
    fn kron_is_associative(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3, dc in 1usize..=2) {
        let a = random_matrix(da, seed);
        let b = random_matrix(db, seed ^ 0x55);
        let cm = random_matrix(dc, seed ^ 0xaa);
        let left = kron(&kron(&a, &b), &cm);
        let right = kron(&a, &kron(&b, &cm));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
        let tr = (left.trace() - a.trace() * b.trace() * cm.trace()).norm();
        prop_assert!(tr < 1e-10);
    }
}

#[test]
fn haar_sampler_is_deterministic() {
    let a: DMatrix<_> = haar_unitary(3, &mut ChaCha8Rng::seed_from_u64(11));
    let b: DMatrix<_> = haar_unitary(3, &mut ChaCha8Rng::seed_from_u64(11));
    assert_eq!(a, b);
}
