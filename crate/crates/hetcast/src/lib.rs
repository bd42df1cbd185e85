//! File formats, parallel experiment drivers and the `hetcast` command-line
//! tool built on [`hetcast_core`].

// NaN must fail range checks, which `!(a < b)` expresses directly.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
mod error;
pub mod output;
pub mod runner;

pub use error::{Error, Result};
pub use hetcast_core;
