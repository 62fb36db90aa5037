//! Entropy calculus over F_2^n and certified subspace search.
//!
//! The crate computes exact entropic functionals of distributions on
//! F_2^n, searches for subspaces `V` whose quotient removes most of the
//! additive interaction between two independent variables, and emits
//! certificates recording every inequality the returned subspace satisfies.
//! Certificates are only issued after the inequalities have been evaluated
//! on the inputs, and [`bundle::verify_bundle`] re-evaluates them from
//! scratch.
//!
//! Entropies are measured in bits, so `H[U_V] = dim V`.

pub mod bundle;
pub mod caps;
pub mod certificate;
pub mod dist;
pub mod entropy;
pub mod error;
pub mod families;
pub mod gf2;
pub mod oracle;
pub mod pipeline;
pub mod random;
pub mod suite;
pub mod tol;

pub use dist::{Dist, Fiber, Fibers, JointDist, LinearMap};
pub use entropy::FibringReport;
pub use error::{Error, Result};
pub use gf2::{GroupElement, QuotientMap, Subspace};
