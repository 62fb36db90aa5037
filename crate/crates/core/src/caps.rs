//! Ambient-dimension caps.
//!
//! Elements live in F_2^n with n <= 20 (n = 0 is the trivial group, which
//! shows up as the quotient by a full space). Dense tables are limited to
//! n <= 12 by default and exhaustive subspace enumeration to n <= 6. The
//! dense cap can be moved with the `ENTROPIC_DOUBLING_MAX_N` environment
//! variable (read once, clamped to the element cap).

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_ELEMENT_N: usize = 20;
pub const DEFAULT_DENSE_N: usize = 12;
pub const MAX_ENUMERATION_N: usize = 6;
/// Joint tables (up to four blocks) may use at most this many index bits.
pub const MAX_JOINT_BITS: usize = 20;

pub const ENV_VAR: &str = "ENTROPIC_DOUBLING_MAX_N";

pub fn dense_n() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(ENV_VAR)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .map(|v| v.clamp(1, MAX_ELEMENT_N))
            .unwrap_or(DEFAULT_DENSE_N)
    })
}

pub fn enumeration_n() -> usize {
    MAX_ENUMERATION_N.min(dense_n())
}

pub(crate) fn check_element_n(n: usize) -> Result<()> {
    if n > MAX_ELEMENT_N {
        return Err(Error::Capacity {
            what: "ambient dimension",
            requested: n,
            limit: MAX_ELEMENT_N,
        });
    }
    Ok(())
}

pub(crate) fn check_dense_n(n: usize) -> Result<()> {
    check_element_n(n)?;
    if n > dense_n() {
        return Err(Error::Capacity {
            what: "dense distribution dimension",
            requested: n,
            limit: dense_n(),
        });
    }
    Ok(())
}
