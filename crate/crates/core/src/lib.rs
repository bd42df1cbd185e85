//! Packet-level coded broadcast from one server to users with heterogeneous
//! demands and erasure rates.
//!
//! Three schemes are covered, each with an asymptotic analysis and an
//! executable codec:
//!
//! - LT codes with optimized degree distributions, with or without a
//!   systematic round ([`degree_model`], [`optimizer`], [`lt_codec`]);
//! - growth codes with an erasure-scaled schedule ([`growth`]);
//! - chunked random linear codes over GF(256) ([`chunked`]).
//!
//! [`baselines`] holds the closed-form reference schemes and [`sim`] the
//! Monte-Carlo broadcast harness that drives the codecs over independent
//! erasure channels.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel experiment drivers live in the `hetcast` companion crate.

#![no_std]
// NaN must fail range checks, which `!(a < b)` expresses directly.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod chunked;
pub mod degree_model;
mod error;
pub mod galois;
pub mod growth;
pub mod lt_codec;
pub mod optimizer;
pub mod rng;
pub mod sim;
pub mod special;

pub use degree_model::{AnalysisResult, DegreeDistribution, Scenario, User};
pub use error::{Error, Result};
pub use lt_codec::CodedPacket;

/// Default spacing of the grid on which continuous constraints in `x` are
/// evaluated.
pub const DEFAULT_GRID_STEP: f64 = 1e-3;

/// Transmission cap, in multiples of `N`, for simulations and for searches
/// over normalized time.
pub const DEFAULT_CAP_MULTIPLIER: f64 = 50.0;

/// `ceil(v)` tolerant to `v` landing a few ulps above an integer, as happens
/// for products like `(9/16) * 16`.
pub(crate) fn ceil_tol(v: f64) -> f64 {
    #[allow(unused_imports)]
    use num_traits::Float;
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        v.ceil()
    }
}
