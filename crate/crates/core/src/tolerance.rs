//! Comparison tolerances shared by every check in the crate.
//!
//! Two families exist: algebraic identities that hold up to rounding, and
//! quantities backed by quadrature. Both are scaled by `max(1, |rhs|)` so that
//! a check on values of size 1e6 is not held to an absolute 1e-12.

use serde::{Deserialize, Serialize};

/// Default tolerance for algebraic identities.
pub const EXACT: f64 = 1e-12;

/// Default tolerance for quadrature-backed quantities.
pub const QUADRATURE: f64 = 1e-6;

/// Ratios above this are reported as `+inf` in extended-real results.
pub const EXTENDED_REAL_CUTOFF: f64 = 1e15;

/// Smallest sample norm accepted as a divisor.
pub const NEAR_ZERO_NORM: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub exact: f64,
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact: EXACT,
            quadrature: QUADRATURE,
        }
    }
}

/// `lhs <= rhs` up to `tol` scaled by the magnitude of `rhs`.
#[inline]
pub fn le_tol(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs <= rhs + tol * rhs.abs().max(1.0)
}

/// Symmetric closeness test with the same scaling as [`le_tol`].
#[inline]
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_kicks_in_above_one() {
        assert!(le_tol(1.0 + 5e-13, 1.0, EXACT));
        assert!(!le_tol(1.0 + 5e-12, 1.0, EXACT));
        assert!(le_tol(1e6 + 1e-7, 1e6, EXACT));
        assert!(close(2.0, 2.0 + 1e-13, EXACT));
    }
}
