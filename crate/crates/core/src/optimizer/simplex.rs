//! Dense two-phase tableau simplex. Dantzig pricing with a fallback to
//! Bland's rule on degenerate stalls.
//!
//! Solves `min c.x  s.t.  A x {<=, >=, =} b,  x >= 0`. Problems here are
//! small, so the tableau is stored densely and every pivot touches the whole
//! table.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;
const DEGENERATE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    /// Minimized.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Shadow prices `y` with `b.y` equal to the optimal objective.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows` constraint rows then the cost row; each `cols + 1` wide with
    /// the right-hand side last.
    data: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn cost_row(&self) -> usize {
        self.rows
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.at(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                for (v, pv) in self.data[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.data[r * w + pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Loads `costs` into the cost row as reduced costs for the current basis.
    fn set_costs(&mut self, costs: &[f64]) {
        let w = self.cols + 1;
        let cr = self.cost_row();
        self.data[cr * w..cr * w + self.cols].copy_from_slice(&costs[..self.cols]);
        self.data[cr * w + self.cols] = 0.0;
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                for c in 0..=self.cols {
                    self.data[cr * w + c] -= cb * self.data[r * w + c];
                }
            }
        }
    }

    /// Pivots over columns with `allowed[c]` until no reduced cost is
    /// negative. Entering uses the most negative reduced cost and drops to
    /// Bland's rule after a run of degenerate pivots. The cost row holds
    /// reduced costs and `-objective` in the rhs slot.
    fn optimize(&mut self, allowed: &[bool]) -> Result<()> {
        let cr = self.cost_row();
        let mut degenerate_run = 0usize;
        loop {
            let candidates = (0..self.cols).filter(|&c| allowed[c] && self.at(cr, c) < -COST_TOL);
            let enter = if degenerate_run >= DEGENERATE_LIMIT {
                candidates.min()
            } else {
                candidates.min_by(|&a, &b| self.at(cr, a).total_cmp(&self.at(cr, b)))
            };
            let Some(enter) = enter else {
                return Ok(());
            };
            // Minimum ratio; near-ties go to the largest pivot element, then
            // to the smallest basic index.
            let mut theta = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > PIVOT_TOL {
                    theta = theta.min(self.rhs(r).max(0.0) / a);
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            if theta.is_finite() {
                let cutoff = theta + RATIO_TOL * theta.max(1.0);
                for r in 0..self.rows {
                    let a = self.at(r, enter);
                    if a > PIVOT_TOL && self.rhs(r).max(0.0) / a <= cutoff {
                        let better = match leave {
                            None => true,
                            Some((lr, la)) => {
                                a > la * (1.0 + 1e-9)
                                    || (a >= la * (1.0 - 1e-9) && self.basis[r] < self.basis[lr])
                            }
                        };
                        if better {
                            leave = Some((r, a));
                        }
                    }
                }
            }
            let Some((pr, _)) = leave else {
                return Err(Error::Unbounded);
            };
            if theta <= RATIO_TOL {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, enter);
        }
    }
}

pub fn minimize(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    for c in &lp.constraints {
        if c.coeffs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: c.coeffs.len(),
            });
        }
    }

    // Equilibrate: columns to unit max magnitude, then rows likewise.
    // Flip rows with negative rhs so the initial basis is feasible.
    let col_scale: Vec<f64> = (0..n)
        .map(|j| {
            let m = lp
                .constraints
                .iter()
                .map(|c| c.coeffs[j].abs())
                .fold(0.0, f64::max);
            if m > 0.0 {
                1.0 / m
            } else {
                1.0
            }
        })
        .collect();
    let rows: Vec<(Vec<f64>, Sense, f64, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            let coeffs: Vec<f64> = c
                .coeffs
                .iter()
                .zip(&col_scale)
                .map(|(v, s)| v * s)
                .collect();
            let m = coeffs.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let mut scale = if m > 0.0 { 1.0 / m } else { 1.0 };
            let mut sense = c.sense;
            if c.rhs < 0.0 {
                scale = -scale;
                sense = match c.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
            (
                coeffs.iter().map(|v| v * scale).collect(),
                sense,
                c.rhs * scale,
                scale,
            )
        })
        .collect();
    let scaled_objective: Vec<f64> = lp
        .objective
        .iter()
        .zip(&col_scale)
        .map(|(c, s)| c * s)
        .collect();

    let slack_count = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let art_count = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let cols = n + slack_count + art_count;
    let w = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![0.0; (m + 1) * w],
        basis: vec![0; m],
        pivots: 0,
    };
    // Per row: the column carrying +e_i or -e_i (for reading duals) and its sign.
    let mut identity_col = vec![(0usize, 1.0f64); m];
    let (mut next_slack, mut next_art) = (n, n + slack_count);
    for (r, (coeffs, sense, rhs, _)) in rows.iter().enumerate() {
        t.data[r * w..r * w + n].copy_from_slice(coeffs);
        t.data[r * w + cols] = *rhs;
        match sense {
            Sense::Le => {
                t.data[r * w + next_slack] = 1.0;
                t.basis[r] = next_slack;
                identity_col[r] = (next_slack, 1.0);
                next_slack += 1;
            }
            Sense::Ge => {
                t.data[r * w + next_slack] = -1.0;
                t.data[r * w + next_art] = 1.0;
                t.basis[r] = next_art;
                identity_col[r] = (next_slack, -1.0);
                next_slack += 1;
                next_art += 1;
            }
            Sense::Eq => {
                t.data[r * w + next_art] = 1.0;
                t.basis[r] = next_art;
                identity_col[r] = (next_art, 1.0);
                next_art += 1;
            }
        }
    }
    let first_art = n + slack_count;
    let is_art = |c: usize| c >= first_art;

    if art_count > 0 {
        let mut phase1 = vec![0.0; cols];
        phase1[first_art..].iter_mut().for_each(|v| *v = 1.0);
        t.set_costs(&phase1);
        t.optimize(&vec![true; cols])?;
        let infeasibility = -t.rhs(t.cost_row());
        if infeasibility > FEAS_TOL * (1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max)) {
            return Err(Error::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible;
        // rows where that fails are redundant and stay pinned at zero.
        for r in 0..m {
            if is_art(t.basis[r]) {
                if let Some(c) = (0..first_art).find(|&c| t.at(r, c).abs() > 1e-9) {
                    t.pivot(r, c);
                }
            }
        }
    }

    let mut costs = vec![0.0; cols];
    costs[..n].copy_from_slice(&scaled_objective);
    t.set_costs(&costs);
    let allowed: Vec<bool> = (0..cols).map(|c| !is_art(c)).collect();
    t.optimize(&allowed)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.rhs(r).max(0.0) * col_scale[t.basis[r]];
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let cr = t.cost_row();
    let duals = (0..m)
        .map(|r| {
            let (col, sign) = identity_col[r];
            // Reduced cost of a column equal to sign * e_r is -sign * y_r.
            // Row r was multiplied by rows[r].3 before solving.
            -t.at(cr, col) * sign * rows[r].3
        })
        .collect();
    Ok(LpSolution {
        x,
        objective,
        duals,
        pivots: t.pivots,
    })
}
