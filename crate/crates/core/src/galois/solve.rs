//! Incremental Gaussian elimination.
//!
//! Both eliminators keep their rows in fully reduced row-echelon form: every
//! pivot column is zero in all rows but its own, and pivots are normalized to
//! one. An unknown `j` is then solvable exactly when some stored row equals the
//! unit vector `e_j`.

use alloc::vec;
use alloc::vec::Vec;

use super::bitvec::{xor_bytes, BitVector};
use super::gf256::{gf256_add_scaled, gf256_inv, gf256_scale};
use crate::error::{Error, Result};

/// Outcome of inserting one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insert {
    /// The row raised the rank; its pivot column is given.
    Independent { pivot: usize },
    /// The row was in the span and its payload agreed.
    Dependent,
    /// The coefficients reduced to zero but the payload did not.
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub rank: usize,
    pub decodable: Vec<bool>,
    pub payloads: Vec<Option<Vec<u8>>>,
}

impl Solution {
    pub fn decoded_count(&self) -> usize {
        self.decodable.iter().filter(|&&d| d).count()
    }
}

#[derive(Debug, Clone)]
pub struct Gf2Eliminator {
    width: usize,
    payload_len: usize,
    rows: Vec<(BitVector, Vec<u8>)>,
    pivot_row: Vec<Option<usize>>,
    pivot_cols: Vec<usize>,
}

impl Gf2Eliminator {
    pub fn new(width: usize, payload_len: usize) -> Self {
        Self {
            width,
            payload_len,
            rows: Vec::new(),
            pivot_row: vec![None; width],
            pivot_cols: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn insert(&mut self, mut coeffs: BitVector, mut payload: Vec<u8>) -> Result<Insert> {
        if coeffs.len() != self.width {
            return Err(Error::LengthMismatch {
                expected: self.width,
                got: coeffs.len(),
            });
        }
        if payload.len() != self.payload_len {
            return Err(Error::LengthMismatch {
                expected: self.payload_len,
                got: payload.len(),
            });
        }
        for &col in &self.pivot_cols {
            if coeffs.get(col) {
                let r = self.pivot_row[col].expect("pivot bookkeeping");
                let (rv, rp) = &self.rows[r];
                coeffs.xor_assign(rv)?;
                xor_bytes(&mut payload, rp);
            }
        }
        let Some(pivot) = coeffs.first_one() else {
            return Ok(if payload.iter().all(|&b| b == 0) {
                Insert::Dependent
            } else {
                Insert::Inconsistent
            });
        };
        for (rv, rp) in self.rows.iter_mut() {
            if rv.get(pivot) {
                rv.xor_assign(&coeffs)?;
                xor_bytes(rp, &payload);
            }
        }
        self.pivot_row[pivot] = Some(self.rows.len());
        self.pivot_cols.push(pivot);
        self.rows.push((coeffs, payload));
        Ok(Insert::Independent { pivot })
    }

    pub fn is_decodable(&self, col: usize) -> bool {
        self.pivot_row[col].is_some_and(|r| self.rows[r].0.count_ones() == 1)
    }

    pub fn solved_payload(&self, col: usize) -> Option<&[u8]> {
        if self.is_decodable(col) {
            self.pivot_row[col].map(|r| self.rows[r].1.as_slice())
        } else {
            None
        }
    }

    pub fn solution(&self) -> Solution {
        let decodable: Vec<bool> = (0..self.width).map(|c| self.is_decodable(c)).collect();
        let payloads = (0..self.width)
            .map(|c| self.solved_payload(c).map(<[u8]>::to_vec))
            .collect();
        Solution {
            rank: self.rank(),
            decodable,
            payloads,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Gf256Eliminator {
    width: usize,
    payload_len: usize,
    coeffs: Vec<Vec<u8>>,
    payloads: Vec<Vec<u8>>,
    pivot_row: Vec<Option<usize>>,
    pivot_cols: Vec<usize>,
    nonzeros: Vec<usize>,
}

impl Gf256Eliminator {
    pub fn new(width: usize, payload_len: usize) -> Self {
        Self {
            width,
            payload_len,
            coeffs: Vec::new(),
            payloads: Vec::new(),
            pivot_row: vec![None; width],
            pivot_cols: Vec::new(),
            nonzeros: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.width
    }

    pub fn insert(&mut self, mut row: Vec<u8>, mut payload: Vec<u8>) -> Result<Insert> {
        if row.len() != self.width {
            return Err(Error::LengthMismatch {
                expected: self.width,
                got: row.len(),
            });
        }
        if payload.len() != self.payload_len {
            return Err(Error::LengthMismatch {
                expected: self.payload_len,
                got: payload.len(),
            });
        }
        for &col in &self.pivot_cols {
            let c = row[col];
            if c != 0 {
                let r = self.pivot_row[col].expect("pivot bookkeeping");
                gf256_add_scaled(&mut row, &self.coeffs[r], c);
                gf256_add_scaled(&mut payload, &self.payloads[r], c);
            }
        }
        let Some(pivot) = row.iter().position(|&c| c != 0) else {
            return Ok(if payload.iter().all(|&b| b == 0) {
                Insert::Dependent
            } else {
                Insert::Inconsistent
            });
        };
        let inv = gf256_inv(row[pivot])?;
        gf256_scale(&mut row, inv);
        gf256_scale(&mut payload, inv);
        for r in 0..self.coeffs.len() {
            let c = self.coeffs[r][pivot];
            if c != 0 {
                gf256_add_scaled(&mut self.coeffs[r], &row, c);
                gf256_add_scaled(&mut self.payloads[r], &payload, c);
                self.nonzeros[r] = self.coeffs[r].iter().filter(|&&v| v != 0).count();
            }
        }
        self.pivot_row[pivot] = Some(self.coeffs.len());
        self.pivot_cols.push(pivot);
        self.nonzeros.push(row.iter().filter(|&&v| v != 0).count());
        self.coeffs.push(row);
        self.payloads.push(payload);
        Ok(Insert::Independent { pivot })
    }

    pub fn is_decodable(&self, col: usize) -> bool {
        self.pivot_row[col].is_some_and(|r| self.nonzeros[r] == 1)
    }

    pub fn solved_payload(&self, col: usize) -> Option<&[u8]> {
        if self.is_decodable(col) {
            self.pivot_row[col].map(|r| self.payloads[r].as_slice())
        } else {
            None
        }
    }

    /// Payloads of all unknowns in column order, once the system is full rank.
    pub fn solved_payloads(&self) -> Option<Vec<Vec<u8>>> {
        if !self.is_full_rank() {
            return None;
        }
        Some(
            (0..self.width)
                .map(|c| self.payloads[self.pivot_row[c].unwrap()].clone())
                .collect(),
        )
    }

    pub fn solution(&self) -> Solution {
        let decodable: Vec<bool> = (0..self.width).map(|c| self.is_decodable(c)).collect();
        let payloads = (0..self.width)
            .map(|c| self.solved_payload(c).map(<[u8]>::to_vec))
            .collect();
        Solution {
            rank: self.rank(),
            decodable,
            payloads,
        }
    }
}

/// Solves a GF(2) system given as (coding vector, payload) rows.
/// Inconsistent rows are ignored.
pub fn ge_solve_gf2(width: usize, rows: &[(BitVector, Vec<u8>)]) -> Result<Solution> {
    let payload_len = rows.first().map_or(0, |r| r.1.len());
    let mut e = Gf2Eliminator::new(width, payload_len);
    for (v, p) in rows {
        e.insert(v.clone(), p.clone())?;
    }
    Ok(e.solution())
}

/// Solves a GF(256) system given as (coefficient row, payload) rows.
/// Inconsistent rows are ignored.
pub fn ge_solve_gf256(width: usize, rows: &[(Vec<u8>, Vec<u8>)]) -> Result<Solution> {
    let payload_len = rows.first().map_or(0, |r| r.1.len());
    let mut e = Gf256Eliminator::new(width, payload_len);
    for (v, p) in rows {
        e.insert(v.clone(), p.clone())?;
    }
    Ok(e.solution())
}
