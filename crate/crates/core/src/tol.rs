//! Numerical tolerances shared by every check and echoed into certificates.

use serde::{Deserialize, Serialize};

/// Slack for exact entropy identities (chain rule, fibring, quotient entropy).
pub const IDENTITY: f64 = 1e-9;

/// Max-abs agreement required between an operation and its brute-force oracle.
pub const ORACLE: f64 = 1e-12;

/// Slack for quantities that are nonnegative in exact arithmetic.
pub const NONNEG: f64 = 1e-9;

/// Masses below this are treated as zero before taking logarithms.
pub const MASS_FLOOR: f64 = 1e-15;

/// Allowed drift of the total mass of a distribution from 1.
pub const NORMALIZATION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub identity: f64,
    pub oracle: f64,
    pub nonneg: f64,
    pub mass_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: IDENTITY,
            oracle: ORACLE,
            nonneg: NONNEG,
            mass_floor: MASS_FLOOR,
        }
    }
}
