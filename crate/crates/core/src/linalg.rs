//! Dense complex linear algebra over small square matrices.
//!
//! [`ComplexMatrix`] is the single carrier for density states, projectors,
//! class operators, Hamiltonians and unitaries. Everything here is pure;
//! the eigen-solver backing Hermitian decompositions is nalgebra's.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tolerance::Tolerance;

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense square complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major rows, checking shape and finiteness.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        for row in rows {
            if row.len() != dim {
                return Err(Error::NotSquare { rows: dim, cols: row.len() });
            }
        }
        let inner = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
        Self::from_inner(inner)
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        Self::from_inner(DMatrix::from_fn(dim, dim, f))
    }

    pub(crate) fn from_inner(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() != inner.ncols() {
            return Err(Error::NotSquare { rows: inner.nrows(), cols: inner.ncols() });
        }
        if inner.nrows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        for j in 0..inner.ncols() {
            for i in 0..inner.nrows() {
                let z = inner[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { inner })
    }

    /// Wraps an internally produced matrix; finiteness is assumed.
    pub(crate) fn wrap(inner: DMatrix<C64>) -> Self {
        debug_assert!(inner.is_square() && inner.nrows() > 0);
        Self { inner }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self::wrap(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self::wrap(DMatrix::zeros(dim, dim))
    }

    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        Self::from_fn(entries.len(), |i, j| if i == j { entries[i] } else { ZERO })
    }

    /// Rank-one projector |v⟩⟨v| onto the normalised vector `v`.
    pub fn projector(v: &[C64]) -> Result<Self> {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numeric("cannot project onto a zero vector".into()));
        }
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj() / (norm * norm))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.inner[(i, j)]).collect())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.inner.adjoint())
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::wrap(&self.inner * z)
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    /// tr(self · other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.inner[(i, k)] * other.inner[(k, i)];
            }
        }
        acc
    }

    /// Frobenius inner product Σ self_ij · conj(other_ij) = tr(other† · self).
    pub fn frobenius_inner(&self, other: &Self) -> C64 {
        self.inner
            .iter()
            .zip(other.inner.iter())
            .fold(ZERO, |acc, (a, b)| acc + a * b.conj())
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.inner
            .iter()
            .zip(other.inner.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// max |M_ij − conj(M_ji)|.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.inner[(i, j)] - self.inner[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn ensure_hermitian(&self, tol: Tolerance) -> Result<()> {
        let asymmetry = self.hermitian_asymmetry();
        if asymmetry <= tol.atol() {
            Ok(())
        } else {
            Err(Error::NotHermitian { asymmetry })
        }
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found: self.dim() })
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.inner[idx]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        ComplexMatrix::wrap(&self.inner * &rhs.inner)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        ComplexMatrix::wrap(&self.inner + &rhs.inner)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        ComplexMatrix::wrap(&self.inner - &rhs.inner)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

// Row-major nested arrays, each complex entry as [re, im].
impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .rows()
            .into_iter()
            .map(|r| r.into_iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns, same order) of a
/// Hermitian matrix.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

pub fn hermitian_eigen(m: &ComplexMatrix, tol: Tolerance) -> Result<HermitianEigen> {
    m.ensure_hermitian(tol)?;
    let eig = m.inner.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("eigen-solver produced non-finite eigenvalues".into()));
    }
    let vectors = DMatrix::from_fn(m.dim(), m.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// U = exp(−iHt) for Hermitian `h`, via its eigendecomposition.
pub fn matexp_unitary(h: &ComplexMatrix, t: f64, tol: Tolerance) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return Err(Error::Numeric(format!("non-finite evolution time {t}")));
    }
    let eig = hermitian_eigen(h, tol)?;
    let n = h.dim();
    let phases: Vec<C64> = eig.values.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
    let v = &eig.vectors;
    let u = DMatrix::from_fn(n, n, |i, j| {
        (0..n).fold(ZERO, |acc, k| acc + v[(i, k)] * phases[k] * v[(j, k)].conj())
    });
    ComplexMatrix::from_inner(u)
}

/// Kronecker product; row (i, k) ↦ i·dimB + k, left factor major.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::wrap(a.inner.kronecker(&b.inner))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdVerdict {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

/// Positive-semidefiniteness test: min eigenvalue ≥ −atol · max(‖M‖_max, 1).
pub fn psd_check(m: &ComplexMatrix, tol: Tolerance) -> Result<PsdVerdict> {
    let eig = hermitian_eigen(m, tol)?;
    let min_eigenvalue = eig.values[0];
    let floor = -tol.atol() * m.max_abs().max(1.0);
    Ok(PsdVerdict { psd: min_eigenvalue >= floor, min_eigenvalue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(ComplexMatrix::from_rows(&[]), Err(Error::EmptyMatrix));
        let ragged = vec![vec![ONE, ZERO], vec![ONE]];
        assert!(matches!(ComplexMatrix::from_rows(&ragged), Err(Error::NotSquare { .. })));
        let nan = vec![vec![c(f64::NAN, 0.0)]];
        assert!(matches!(ComplexMatrix::from_rows(&nan), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn exponential_at_zero_time_is_identity() {
        let h = ComplexMatrix::from_rows(&[vec![c(0.3, 0.0), c(0.1, -0.4)], vec![c(0.1, 0.4), c(-1.0, 0.0)]])
            .unwrap();
        let u = matexp_unitary(&h, 0.0, Tolerance::default()).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn pauli_z_at_pi_is_minus_identity() {
        let z = ComplexMatrix::diagonal(&[ONE, -ONE]).unwrap();
        let u = matexp_unitary(&z, PI, Tolerance::default()).unwrap();
        assert_abs_diff_eq!(u[(0, 0)].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u[(1, 1)].re, -1.0, epsilon = 1e-12);
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2).scale(-ONE)) < 1e-12);
    }

    #[test]
    fn non_hermitian_generator_is_rejected() {
        let m = ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ZERO, ZERO]]).unwrap();
        match matexp_unitary(&m, 1.0, Tolerance::default()) {
            Err(Error::NotHermitian { asymmetry }) => assert_abs_diff_eq!(asymmetry, 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn kron_with_identity_is_block_diagonal() {
        let x = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let k = kron(&ComplexMatrix::identity(2), &x);
        assert_eq!(k.dim(), 4);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i / 2 == j / 2 { x[(i % 2, j % 2)] } else { ZERO };
                assert_eq!(k[(i, j)], expected);
            }
        }
    }

    #[test]
    fn kron_entry_convention() {
        let a = ComplexMatrix::from_fn(2, |i, j| c((i * 2 + j) as f64, 1.0)).unwrap();
        let b = ComplexMatrix::from_fn(3, |i, j| c(1.0, (i * 3 + j) as f64)).unwrap();
        let k = kron(&a, &b);
        for (i, j, p, q) in [(0, 1, 2, 0), (1, 0, 1, 2), (1, 1, 2, 2)] {
            assert_eq!(k[(i * 3 + p, j * 3 + q)], a[(i, j)] * b[(p, q)]);
        }
        let tr = k.trace() - a.trace() * b.trace();
        assert!(tr.norm() < 1e-12);
    }

    #[test]
    fn psd_examples() {
        let tol = Tolerance::default();
        let id = psd_check(&ComplexMatrix::identity(3), tol).unwrap();
        assert!(id.psd);
        assert_abs_diff_eq!(id.min_eigenvalue, 1.0, epsilon = 1e-14);
        let d = ComplexMatrix::diagonal(&[ONE, c(-0.5, 0.0)]).unwrap();
        let v = psd_check(&d, tol).unwrap();
        assert!(!v.psd);
        assert_abs_diff_eq!(v.min_eigenvalue, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn psd_rejects_non_hermitian() {
        let m = ComplexMatrix::from_rows(&[vec![ONE, I], vec![I, ONE]]).unwrap();
        assert!(matches!(psd_check(&m, Tolerance::default()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn serde_uses_re_im_pairs() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 0.5), ZERO], vec![ZERO, c(0.0, -2.0)]]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[[1.0,0.5],[0.0,0.0]],[[0.0,0.0],[0.0,-2.0]]]");
        let back: ComplexMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>("[[[1.0,0.0]],[[0.0,0.0]]]").is_err());
    }
}
