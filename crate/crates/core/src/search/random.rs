//! Seeded random unitaries, states and Hamiltonians.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::linalg::{ComplexMatrix, C64, ZERO};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the diagonal
/// of R made real positive.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / norm;
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Σ w_i |v_i⟩⟨v_i| over the first `rank` columns of a Haar unitary with
/// flat-Dirichlet weights; `rank == 1` gives a pure state.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let u = haar_unitary(dim, rng);
    let mut weights: Vec<f64> = (0..rank).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        (0..rank).fold(ZERO, |acc, k| acc + u[(i, k)] * u[(j, k)].conj() * weights[k])
    });
    ComplexMatrix::wrap(m)
}

/// GUE-like Hermitian matrix with entries of order 1/√dim.
pub fn random_hamiltonian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let a = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let scale = 0.5 / (dim as f64).sqrt();
    let h = DMatrix::from_fn(dim, dim, |i, j| (a[(i, j)] + a[(j, i)].conj()) * scale);
    ComplexMatrix::wrap(h)
}
