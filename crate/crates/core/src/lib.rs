//! Learning to stabilize an unknown linear system from a single trajectory by
//! identifying only its unstable subspace.

// `!(x < limit)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod harness;
pub mod lts0n;
pub mod par;
pub mod plant;
pub mod rng;
pub mod spectral;
