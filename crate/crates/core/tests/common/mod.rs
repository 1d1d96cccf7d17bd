#![allow(dead_code)]

//! Test-only oracles. Nothing here calls into the library's linear algebra;
//! matrices are plain nested arrays multiplied by hand.

use decoherent_histories::linalg::C64;
use decoherent_histories::ComplexMatrix;

pub type M2 = [[C64; 2]; 2];

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn mul2(a: &M2, b: &M2) -> M2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn add2(a: &M2, b: &M2) -> M2 {
    let mut out = *a;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn adj2(a: &M2) -> M2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn trace2(a: &M2) -> C64 {
    a[0][0] + a[1][1]
}

/// |v⟩⟨v| for a normalised 2-vector.
pub fn ket_bra(v: [C64; 2]) -> M2 {
    [[v[0] * v[0].conj(), v[0] * v[1].conj()], [v[1] * v[0].conj(), v[1] * v[1].conj()]]
}

pub fn px(sign: f64) -> M2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ket_bra([c(h, 0.0), c(sign * h, 0.0)])
}

pub fn py(sign: f64) -> M2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ket_bra([c(h, 0.0), c(0.0, sign * h)])
}

pub fn pz(bit: usize) -> M2 {
    if bit == 0 {
        ket_bra([c(1.0, 0.0), c(0.0, 0.0)])
    } else {
        ket_bra([c(0.0, 0.0), c(1.0, 0.0)])
    }
}

pub fn ground() -> M2 {
    pz(0)
}

pub fn max_diff2(m: &ComplexMatrix, o: &M2) -> f64 {
    assert_eq!(m.dim(), 2);
    let mut worst = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((m[(i, j)] - o[i][j]).norm());
        }
    }
    worst
}

/// Plain nested-vector matrices for the power-series oracle.
pub type Dense = Vec<Vec<C64>>;

pub fn to_dense(m: &ComplexMatrix) -> Dense {
    m.rows()
}

pub fn dense_mul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).fold(c(0.0, 0.0), |acc, k| acc + a[i][k] * b[k][j])).collect())
        .collect()
}

/// exp(−iHt) by a truncated Taylor series with `terms` terms.
pub fn exp_series(h: &Dense, t: f64, terms: usize) -> Dense {
    let n = h.len();
    let gen: Dense = h.iter().map(|r| r.iter().map(|z| z * c(0.0, -t)).collect()).collect();
    let mut term: Dense = (0..n).map(|i| (0..n).map(|j| c(f64::from(u8::from(i == j)), 0.0)).collect()).collect();
    let mut sum = term.clone();
    for k in 1..terms {
        term = dense_mul(&term, &gen);
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    sum
}

pub fn dense_max_diff(m: &ComplexMatrix, o: &Dense) -> f64 {
    let mut worst = 0.0_f64;
    for (i, row) in o.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            worst = worst.max((m[(i, j)] - z).norm());
        }
    }
    worst
}

/// Eigenvalues of the Hermitian 2×2 [[a, b], [b*, d]] from the
/// characteristic polynomial.
pub fn hermitian2_eigenvalues(m: &ComplexMatrix) -> (f64, f64) {
    let (a, d, b) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean - radius, mean + radius)
}

pub mod fixtures;
