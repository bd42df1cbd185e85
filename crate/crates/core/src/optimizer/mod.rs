//! Degree-distribution design by linear programming.
//!
//! With `a_j = t p_j` the delivery-time constraints of every user become
//! linear in `a`:
//!
//! ```text
//! min  sum_j a_j
//! s.t. sum_j j a_j x^(j-1) >= -ln(1 - x) / (1 - eps_i)     x in grid(0, z_i]
//!      a >= 0
//! ```
//!
//! and `t = sum_j a_j`, `p_j = a_j / t`. Since nothing at `x > 0` forces
//! mass onto degree 1, and a peeling decoder cannot start without it, the
//! nonsystematic problem also gets one row per user at `x = 0`:
//! `a_1 >= r / (N (1 - eps_i))`, i.e. at least `r` degree-1 packets expected
//! at every receiver by the server delivery time (see
//! [`LpOptions::start_ripple`]). The systematic variant uses
//! `a_j = (t - 1) p_j`, right-hand sides `(-ln(1 - x) + ln eps_i) / (1 - eps_i)`
//! on `grid(1 - eps_i, z_i]`, and users with `z_i <= 1 - eps_i` are served by
//! the systematic round alone.
//!
//! The problem has at most a few dozen variables but thousands of rows, so
//! [`solve_lp`] runs the simplex on the dual (one row per degree) and reads
//! `a` off the dual's shadow prices.

pub mod simplex;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::degree_model::{grid, server_delivery_time, DegreeDistribution, Scenario};
use crate::error::{Error, Result};
use simplex::{minimize, Constraint, LinearProgram, Sense};

/// Normalized probabilities below this are dropped from solved distributions.
pub const PROBABILITY_DUST: f64 = 1e-6;

/// Highest degree needed for demands up to `z_max`: `ceil(1/(1 - z_max)) - 1`.
pub fn dmax_for(z_max: f64) -> Result<usize> {
    if !(z_max > 0.0) {
        return Err(Error::usage(format!("z_max = {z_max} must be positive")));
    }
    if z_max >= 1.0 {
        return Err(Error::UnsupportedDemand(z_max));
    }
    Ok((crate::ceil_tol(1.0 / (1.0 - z_max)) as usize - 1).max(1))
}

/// Default [`LpOptions::start_ripple`].
pub const DEFAULT_START_RIPPLE: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub systematic: bool,
    pub grid_step: f64,
    /// Replaces `dmax_for(z_max)` (clamped to `N`).
    pub dmax_override: Option<usize>,
    /// Degree-1 packets each user must expect to have received by the
    /// server delivery time; nonsystematic mode only. Zero leaves degree 1
    /// constrained by the grid rows alone.
    pub start_ripple: f64,
}

impl LpOptions {
    pub fn new(systematic: bool) -> Self {
        Self {
            systematic,
            grid_step: crate::DEFAULT_GRID_STEP,
            dmax_override: None,
            start_ripple: DEFAULT_START_RIPPLE,
        }
    }

    pub fn grid_step(mut self, step: f64) -> Self {
        self.grid_step = step;
        self
    }

    pub fn dmax(mut self, dmax: usize) -> Self {
        self.dmax_override = Some(dmax);
        self
    }

    pub fn start_ripple(mut self, r: f64) -> Self {
        self.start_ripple = r;
        self
    }
}

/// One `x` sample of one user's constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub user: usize,
    pub x: f64,
    /// `j x^(j-1)` for `j = 1..=dmax`.
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub var_count: usize,
    pub systematic: bool,
    pub rows: Vec<LpRow>,
    /// Server time already implied by users that impose no rows (served by
    /// the systematic round).
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BindingConstraint {
    pub user: usize,
    pub x: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    /// Optimal server delivery time.
    pub t0: f64,
    pub dist: DegreeDistribution,
    pub dmax_used: usize,
    pub systematic: bool,
    /// Rows tight at the optimum.
    pub binding: Vec<BindingConstraint>,
}

pub fn build_lp(scenario: &Scenario, options: &LpOptions) -> Result<LpProblem> {
    let LpOptions {
        systematic,
        grid_step,
        dmax_override,
        start_ripple,
    } = *options;
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(Error::usage(format!(
            "grid step {grid_step} outside (0, 1)"
        )));
    }
    if !(start_ripple >= 0.0) || !start_ripple.is_finite() {
        return Err(Error::usage(format!(
            "start ripple {start_ripple} must be finite and >= 0"
        )));
    }
    for u in &scenario.users {
        if u.z >= 1.0 {
            return Err(Error::UnsupportedDemand(u.z));
        }
        if u.eps >= 1.0 {
            return Err(Error::DeadChannel(u.eps));
        }
    }
    let dmax = match dmax_override {
        Some(0) => return Err(Error::usage("dmax must be at least 1")),
        Some(d) => d,
        None => dmax_for(scenario.z_max())?.min(scenario.n.max(1)),
    };

    let mut rows = Vec::new();
    let mut floor = 0.0f64;
    for (i, u) in scenario.users.iter().enumerate() {
        let scale = 1.0 / (1.0 - u.eps);
        let (lo, shift) = if systematic {
            if u.z <= 1.0 - u.eps {
                floor = floor.max(u.z * scale);
                continue;
            }
            (1.0 - u.eps, u.eps.ln())
        } else {
            if start_ripple > 0.0 {
                let mut coeffs = vec![0.0; dmax];
                coeffs[0] = 1.0;
                rows.push(LpRow {
                    user: i,
                    x: 0.0,
                    coeffs,
                    rhs: start_ripple / scenario.n as f64 * scale,
                });
            }
            (0.0, 0.0)
        };
        for x in grid(lo, u.z, grid_step) {
            let mut coeffs = Vec::with_capacity(dmax);
            let mut pow = 1.0;
            for j in 1..=dmax {
                coeffs.push(j as f64 * pow);
                pow *= x;
            }
            rows.push(LpRow {
                user: i,
                x,
                coeffs,
                rhs: (-(1.0 - x).ln() + shift) * scale,
            });
        }
    }
    Ok(LpProblem {
        var_count: dmax,
        systematic,
        rows,
        floor,
    })
}

pub fn solve_lp(problem: &LpProblem) -> Result<OptimizationResult> {
    let n = problem.var_count;
    if problem.rows.is_empty() {
        return Ok(OptimizationResult {
            t0: problem.floor,
            dist: DegreeDistribution::point_mass(1)?,
            dmax_used: 1,
            systematic: problem.systematic,
            binding: Vec::new(),
        });
    }

    // Dual: max rhs.y  s.t.  sum_r coeffs_r[j] y_r <= 1 for each degree j.
    let dual = LinearProgram {
        objective: problem.rows.iter().map(|r| -r.rhs).collect(),
        constraints: (0..n)
            .map(|j| Constraint {
                coeffs: problem.rows.iter().map(|r| r.coeffs[j]).collect(),
                sense: Sense::Le,
                rhs: 1.0,
            })
            .collect(),
    };
    let sol = minimize(&dual)?;
    let a: Vec<f64> = sol.duals.iter().map(|y| (-y).max(0.0)).collect();
    let total: f64 = a.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Infeasible);
    }

    let mut binding = Vec::new();
    for r in &problem.rows {
        let lhs: f64 = r.coeffs.iter().zip(&a).map(|(c, v)| c * v).sum();
        let slack = lhs - r.rhs;
        if slack < -1e-6 * r.rhs.abs().max(1.0) {
            return Err(Error::Infeasible);
        }
        if slack <= 1e-7 * r.rhs.abs().max(1.0) {
            binding.push(BindingConstraint {
                user: r.user,
                x: r.x,
                slack,
            });
        }
    }

    let dist = DegreeDistribution::from_weights(&a, PROBABILITY_DUST)?;
    let offset = if problem.systematic { 1.0 } else { 0.0 };
    Ok(OptimizationResult {
        t0: (offset + total).max(problem.floor),
        dmax_used: dist.dmax(),
        dist,
        systematic: problem.systematic,
        binding,
    })
}

/// [`build_lp`] then [`solve_lp`], with the solved distribution checked
/// against the direct analysis: it must meet every grid constraint by `t0`.
pub fn optimize_scenario(scenario: &Scenario, options: &LpOptions) -> Result<OptimizationResult> {
    let problem = build_lp(scenario, options)?;
    let result = solve_lp(&problem)?;
    if !problem.rows.is_empty() {
        let check = server_delivery_time(
            &result.dist,
            scenario,
            options.systematic,
            options.grid_step,
        )?;
        debug_assert!(
            check.t0 <= result.t0 * (1.0 + 1e-4),
            "re-analysis {} vs LP {}",
            check.t0,
            result.t0
        );
    }
    Ok(result)
}

/// Primal form of the same LP, for cross-checking the dual route.
pub fn primal_program(problem: &LpProblem) -> LinearProgram {
    LinearProgram {
        objective: vec![1.0; problem.var_count],
        constraints: problem
            .rows
            .iter()
            .map(|r| Constraint {
                coeffs: r.coeffs.clone(),
                sense: Sense::Ge,
                rhs: r.rhs,
            })
            .collect(),
    }
}
