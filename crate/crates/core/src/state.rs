use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{kron, psd_check, ComplexMatrix, C64};
use crate::tolerance::Tolerance;

/// A validated density operator ρ: Hermitian, positive semidefinite and of
/// unit trace, each within `atol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityState {
    rho: ComplexMatrix,
}

impl DensityState {
    pub fn new(rho: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        let asymmetry = rho.hermitian_asymmetry();
        if asymmetry > tol.atol() {
            return Err(Error::InvalidState(format!("not Hermitian (max asymmetry {asymmetry:e})")));
        }
        let trace = rho.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > tol.atol() {
            return Err(Error::InvalidState(format!(
                "trace is {}{:+}i, expected 1",
                trace.re, trace.im
            )));
        }
        let psd = psd_check(&rho, tol)?;
        if !psd.psd {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {:e})",
                psd.min_eigenvalue
            )));
        }
        Ok(Self { rho })
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalised) non-zero vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        Ok(Self { rho: ComplexMatrix::projector(psi)? })
    }

    pub(crate) fn new_unchecked(rho: ComplexMatrix) -> Self {
        Self { rho }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// ⟨A⟩_ρ = tr(ρA).
    pub fn expectation(&self, a: &ComplexMatrix) -> C64 {
        self.rho.trace_product(a)
    }

    /// ρ^A ⊗ ρ^B.
    pub fn product(&self, other: &DensityState) -> DensityState {
        Self { rho: kron(&self.rho, &other.rho) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    #[test]
    fn names_the_failed_invariant() {
        let tol = Tolerance::default();
        let twice = ComplexMatrix::diagonal(&[ONE, ONE]).unwrap();
        let err = DensityState::new(twice, tol).unwrap_err().to_string();
        assert!(err.contains("trace"), "{err}");

        let negative = ComplexMatrix::diagonal(&[C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]).unwrap();
        let err = DensityState::new(negative, tol).unwrap_err().to_string();
        assert!(err.contains("positive semidefinite"), "{err}");

        let skew = ComplexMatrix::from_rows(&[vec![ONE, ONE], vec![ZERO, ZERO]]).unwrap();
        let err = DensityState::new(skew, tol).unwrap_err().to_string();
        assert!(err.contains("Hermitian"), "{err}");
    }

    #[test]
    fn pure_state_is_valid() {
        let s = DensityState::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
        assert!(DensityState::new(s.matrix().clone(), Tolerance::default()).is_ok());
    }
}
