//! Finite-field arithmetic over GF(2) and GF(256), and incremental
//! Gaussian elimination over both.
//!
//! GF(2) coding vectors are packed into 64-bit words; payloads are opaque
//! byte strings that are xored (GF(2)) or scaled and added (GF(256))
//! alongside their coefficient rows.

mod bitvec;
mod gf256;
mod solve;

pub use bitvec::{gf2_xor_into, BitVector};
pub use gf256::{gf256_add_scaled, gf256_inv, gf256_mul, gf256_scale, ByteFieldTables, TABLES};
pub use solve::{ge_solve_gf2, ge_solve_gf256, Gf256Eliminator, Gf2Eliminator, Insert, Solution};
