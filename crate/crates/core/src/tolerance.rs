use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ATOL: f64 = 1e-9;

/// Absolute tolerance on max-abs entry deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    atol: f64,
}

impl Tolerance {
    pub fn new(atol: f64) -> Result<Self> {
        if atol.is_finite() && atol > 0.0 {
            Ok(Self { atol })
        } else {
            Err(Error::InvalidTolerance(atol))
        }
    }

    #[inline]
    pub fn atol(&self) -> f64 {
        self.atol
    }

    /// Ten times `atol`; the slack used for derived identities and for
    /// separating genuine violations from marginal values.
    #[inline]
    pub fn loose(&self) -> f64 {
        10.0 * self.atol
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { atol: DEFAULT_ATOL }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive() {
        assert!(Tolerance::new(0.0).is_err());
        assert!(Tolerance::new(-1e-9).is_err());
        assert!(Tolerance::new(f64::NAN).is_err());
        assert_eq!(Tolerance::default().atol(), 1e-9);
        assert!((Tolerance::new(1e-6).unwrap().loose() - 1e-5).abs() < 1e-20);
    }
}
