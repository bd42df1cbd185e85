//! Degree distributions and the asymptotic LT analysis.
//!
//! A degree distribution is stored through its generating polynomial
//! `P(x) = p_1 x + p_2 x^2 + ... + p_dmax x^dmax`. As `N -> inf`, a receiver
//! holding `v N` coded packets with `u N` originals still unknown has an
//! expected ripple of `u (v P'(1-u) + ln u)` (normalized by `N`). Requiring it
//! to stay positive while the first `z N` originals are peeled gives, for a
//! link with erasure rate `eps` after `t N` transmissions,
//!
//! ```text
//! (1 - eps) t P'(x) + ln(1 - x) > 0   for x in (0, z]
//! ```
//!
//! which yields both the delivery time for a demand `z` and the recoverable
//! fraction after `t`. With a systematic round first, the constraint becomes
//! `-ln eps + (1 - eps)(t - 1) P'(x) + ln(1 - x) > 0` for `x in (1 - eps, z]`.
//!
//! Continuous constraints are checked on the grid `step, 2 step, ...` plus the
//! right endpoint; strict inequalities are checked as `>=`.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-9;
/// Slack for the `>=` grid check, absorbing rounding at binding points.
const CONSTRAINT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    /// `probs[d - 1] = Prob[degree = d]`.
    probs: Vec<f64>,
}

impl DegreeDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no degrees".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "p_{} = {p} is not a probability",
                i + 1
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights, dropping entries whose normalized mass
    /// is below `dust`, and trims trailing zeros.
    pub fn from_weights(weights: &[f64], dust: f64) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be nonnegative with positive total".into(),
            ));
        }
        let mut probs: Vec<f64> = weights
            .iter()
            .map(|w| if w / total < dust { 0.0 } else { w / total })
            .collect();
        let kept: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= kept);
        while probs.len() > 1 && probs.last() == Some(&0.0) {
            probs.pop();
        }
        Self::new(probs)
    }

    /// Builds from `(degree, probability)` pairs; degrees start at 1.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        let dmax = pairs.iter().map(|p| p.0).max().unwrap_or(0);
        if dmax == 0 || pairs.iter().any(|p| p.0 == 0) {
            return Err(Error::InvalidDistribution("degrees start at 1".into()));
        }
        let mut probs = alloc::vec![0.0; dmax];
        for &(d, p) in pairs {
            probs[d - 1] += p;
        }
        Self::new(probs)
    }

    pub fn point_mass(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidDistribution("degree 0".into()));
        }
        let mut probs = alloc::vec![0.0; degree];
        probs[degree - 1] = 1.0;
        Ok(Self { probs })
    }

    pub fn dmax(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `Prob[degree = d]`, zero outside the support.
    pub fn prob(&self, degree: usize) -> f64 {
        if degree == 0 {
            0.0
        } else {
            self.probs.get(degree - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn mean_degree(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// `P(x)`
    pub fn eval(&self, x: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, p| (acc + p) * x)
    }

    /// `P'(x)`, Horner form, any real `x`.
    pub fn derivative(&self, x: f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, p)| acc * x + (i + 1) as f64 * p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct User {
    /// Demanded fraction of the content.
    pub z: f64,
    /// Packet erasure rate of the link from the server.
    pub eps: f64,
}

impl User {
    pub fn new(z: f64, eps: f64) -> Self {
        Self { z, eps }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Number of content packets.
    pub n: usize,
    pub payload_bytes: usize,
    pub users: Vec<User>,
}

impl Scenario {
    /// Validates `n >= 1`, a nonempty user list, `0 < z <= 1` and
    /// `0 <= eps <= 1`. A dead link (`eps = 1`) is representable; operations
    /// that cannot handle it report it.
    pub fn new(n: usize, payload_bytes: usize, users: Vec<User>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidScenario("N must be at least 1".into()));
        }
        if users.is_empty() {
            return Err(Error::InvalidScenario("no users".into()));
        }
        for (i, u) in users.iter().enumerate() {
            if !(u.z > 0.0 && u.z <= 1.0) {
                return Err(Error::InvalidScenario(format!(
                    "user {i}: demand z = {} outside (0, 1]",
                    u.z
                )));
            }
            if !(u.eps >= 0.0 && u.eps <= 1.0) {
                return Err(Error::InvalidScenario(format!(
                    "user {i}: erasure rate eps = {} outside [0, 1]",
                    u.eps
                )));
            }
        }
        Ok(Self {
            n,
            payload_bytes,
            users,
        })
    }

    /// The two-user setting used throughout the experiments:
    /// `(15/16, 0.1)` and `(9/16, 0.5)`.
    pub fn reference(n: usize) -> Self {
        Self::new(
            n,
            32,
            alloc::vec![User::new(15.0 / 16.0, 0.1), User::new(9.0 / 16.0, 0.5)],
        )
        .expect("valid reference scenario")
    }

    /// Originals user `i` needs, `ceil(z_i N)`.
    pub fn demand_count(&self, i: usize) -> usize {
        crate::ceil_tol(self.users[i].z * self.n as f64) as usize
    }

    pub fn z_max(&self) -> f64 {
        self.users.iter().map(|u| u.z).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisResult {
    /// Normalized delivery time per user.
    pub per_user: Vec<f64>,
    /// Server delivery time, the maximum over users.
    pub t0: f64,
}

impl AnalysisResult {
    pub fn from_times(per_user: Vec<f64>) -> Self {
        let t0 = per_user.iter().copied().fold(0.0, f64::max);
        Self { per_user, t0 }
    }
}

/// Points `k * step` in `(lo, hi)` followed by `hi` itself.
pub(crate) fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let first = ((lo / step).floor() as i64 + 1).max(1);
    let last_exclusive = hi - step * 1e-9;
    let grid_pts = (first..)
        .map(move |k| k as f64 * step)
        .filter(move |&x| x > lo)
        .take_while(move |&x| x < last_exclusive);
    grid_pts.chain(core::iter::once(hi).filter(move |&h| h > lo))
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step < 1.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("grid step {step} outside (0, 1)")))
    }
}

fn check_demand(z: f64, eps: f64) -> Result<()> {
    if !(z > 0.0) {
        return Err(Error::usage(format!("demand z = {z} must be positive")));
    }
    if z >= 1.0 {
        return Err(Error::UnsupportedDemand(z));
    }
    if !(eps >= 0.0) {
        return Err(Error::usage(format!("erasure rate {eps} is negative")));
    }
    if eps >= 1.0 {
        return Err(Error::DeadChannel(eps));
    }
    Ok(())
}

/// Max over the grid of `num(x) / den(x)`; a zero denominator against a
/// positive numerator gives `+inf`.
fn sup_ratio(
    points: impl Iterator<Item = f64>,
    num: impl Fn(f64) -> f64,
    den: impl Fn(f64) -> f64,
) -> f64 {
    let mut best = 0.0f64;
    for x in points {
        let n = num(x);
        if n <= 0.0 {
            continue;
        }
        let d = den(x);
        if d <= 0.0 {
            return f64::INFINITY;
        }
        best = best.max(n / d);
    }
    best
}

/// `P'(x)` for `x` in `[0, 1]`.
pub fn mgf_derivative(dist: &DegreeDistribution, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::usage(format!("x = {x} outside [0, 1]")));
    }
    Ok(dist.derivative(x))
}

/// Normalized expected ripple `u (v P'(1-u) + ln u)` with `v N` packets
/// received and `u N` originals unrecovered.
pub fn expected_ripple(dist: &DegreeDistribution, v: f64, u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::usage(format!("u = {u} outside (0, 1]")));
    }
    if !(v >= 0.0) {
        return Err(Error::usage(format!("v = {v} is negative")));
    }
    Ok(u * (v * dist.derivative(1.0 - u) + u.ln()))
}

/// Normalized transmissions needed before a user with erasure rate `eps`
/// can peel a `z` fraction of the content. `+inf` if `P'` vanishes where it
/// is needed.
pub fn lt_delivery_time(dist: &DegreeDistribution, z: f64, eps: f64, step: f64) -> Result<f64> {
    check_demand(z, eps)?;
    check_step(step)?;
    Ok(sup_ratio(
        grid(0.0, z, step),
        |x| -(1.0 - x).ln(),
        |x| (1.0 - eps) * dist.derivative(x),
    ))
}

/// Largest grid point up to which the constraint `mass(x) + ln(1 - x) >= 0`
/// holds everywhere, where `mass(x)` is the received mass times `P'(x)`.
pub(crate) fn recoverable_on_grid(mass: impl Fn(f64) -> f64, step: f64) -> f64 {
    let mut reached = 0.0;
    let mut k = 1u64;
    loop {
        let x = k as f64 * step;
        if x >= 1.0 {
            return reached;
        }
        let l = (1.0 - x).ln();
        if mass(x) + l < -CONSTRAINT_SLACK * l.abs().max(1.0) {
            return reached;
        }
        reached = x;
        k += 1;
    }
}

/// Fraction of the content recoverable after `t N` transmissions over a
/// link with erasure rate `eps`.
pub fn lt_recoverable_fraction(dist: &DegreeDistribution, t: f64, eps: f64, step: f64) -> f64 {
    if !(t > 0.0) || !(eps < 1.0) || !(step > 0.0) {
        return 0.0;
    }
    let w = (1.0 - eps) * t;
    recoverable_on_grid(|x| w * dist.derivative(x), step)
}

/// Delivery time with one systematic round before the coded packets drawn
/// from `dist`.
pub fn systematic_delivery_time(
    dist: &DegreeDistribution,
    z: f64,
    eps: f64,
    step: f64,
) -> Result<f64> {
    check_demand(z, eps)?;
    check_step(step)?;
    if z <= 1.0 - eps {
        return Ok(z / (1.0 - eps));
    }
    let ln_eps = eps.ln();
    Ok(1.0
        + sup_ratio(
            grid(1.0 - eps, z, step),
            |x| -(1.0 - x).ln() + ln_eps,
            |x| (1.0 - eps) * dist.derivative(x),
        ))
}

/// Per-user and server delivery times of an LT scheme.
pub fn server_delivery_time(
    dist: &DegreeDistribution,
    scenario: &Scenario,
    systematic: bool,
    step: f64,
) -> Result<AnalysisResult> {
    let per_user = scenario
        .users
        .iter()
        .map(|u| {
            if systematic {
                systematic_delivery_time(dist, u.z, u.eps, step)
            } else {
                lt_delivery_time(dist, u.z, u.eps, step)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisResult::from_times(per_user))
}

/// Degree distribution of a coded packet after the originals a receiver got
/// in the systematic round are substituted out: `P(1 - eps + eps x)`.
#[derive(Debug, Clone, Copy)]
pub struct SideInfoTransform<'a> {
    dist: &'a DegreeDistribution,
    eps: f64,
}

pub fn side_info_transform(dist: &DegreeDistribution, eps: f64) -> Result<SideInfoTransform<'_>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::usage(format!("erasure rate {eps} outside [0, 1]")));
    }
    Ok(SideInfoTransform { dist, eps })
}

impl SideInfoTransform<'_> {
    fn inner(&self, x: f64) -> f64 {
        1.0 - self.eps + self.eps * x
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.dist.eval(self.inner(x))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eps * self.dist.derivative(self.inner(x))
    }
}

/// Normalized expected draws to collect a `z` fraction of distinct coupons,
/// `-ln(1 - z)`.
pub fn coupon_collector_time(z: f64) -> f64 {
    if z >= 1.0 {
        f64::INFINITY
    } else {
        -(1.0 - z).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn dist(p: &[f64]) -> DegreeDistribution {
        DegreeDistribution::new(p.to_vec()).unwrap()
    }

    /// Brute-force sup over a fine grid, with no shared code path.
    fn brute_sup(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        (1..=n)
            .map(|k| lo + (hi - lo) * k as f64 / n as f64)
            .map(f)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn distribution_validation() {
        assert!(DegreeDistribution::new(vec![]).is_err());
        assert!(DegreeDistribution::new(vec![0.5, 0.4]).is_err());
        assert!(DegreeDistribution::new(vec![1.5, -0.5]).is_err());
        let d = DegreeDistribution::from_weights(&[1e-9, 2.0, 2.0, 0.0], 1e-6).unwrap();
        assert_eq!(d.probs(), &[0.0, 0.5, 0.5]);
        let d = DegreeDistribution::from_pairs(&[(3, 1.0)]).unwrap();
        assert_eq!(d, DegreeDistribution::point_mass(3).unwrap());
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(mgf_derivative(&dist(&[1.0]), 0.37).unwrap(), 1.0);
        assert_eq!(mgf_derivative(&dist(&[0.0, 1.0]), 0.5).unwrap(), 1.0);
        let v = mgf_derivative(&dist(&[0.5, 0.5]), 0.3).unwrap();
        assert!((v - 0.8).abs() < 1e-15);
        assert!(mgf_derivative(&dist(&[1.0]), 1.5).is_err());
        assert!(mgf_derivative(&dist(&[1.0]), -0.1).is_err());
    }

    #[test]
    fn ripple_examples() {
        let d = dist(&[0.3, 0.7]);
        assert_eq!(expected_ripple(&d, 2.0, 1.0).unwrap(), 2.0 * 0.3);
        let r = expected_ripple(&dist(&[1.0]), 1.0, 0.5).unwrap();
        assert!((r - 0.153_426_4).abs() < 1e-6);
        assert!(expected_ripple(&d, 0.0, 0.4).unwrap() < 0.0);
        assert!(expected_ripple(&d, 1.0, 0.0).is_err());
    }

    #[test]
    fn delivery_time_examples() {
        let t = lt_delivery_time(&dist(&[1.0]), 0.5, 0.0, 1e-3).unwrap();
        assert!((t - core::f64::consts::LN_2).abs() < 1e-12);

        // -ln(1 - x) / (0.5 + x) brute-forced on a 10^6-point grid.
        let d = dist(&[0.5, 0.5]);
        let oracle = brute_sup(|x| -(1.0 - x).ln() / (0.5 + x), 0.0, 0.8, 1_000_000);
        assert!((oracle - 1.2380).abs() < 1e-4);
        let t = lt_delivery_time(&d, 0.8, 0.0, 1e-3).unwrap();
        assert!((t - oracle).abs() < 1e-9);

        assert_eq!(
            lt_delivery_time(&d, 1.0, 0.0, 1e-3),
            Err(Error::UnsupportedDemand(1.0))
        );
        assert_eq!(
            lt_delivery_time(&d, 0.5, 1.0, 1e-3),
            Err(Error::DeadChannel(1.0))
        );
        // No degree-1 mass: P'(x) vanishes at x -> 0 only, so the time is
        // finite on the grid but large.
        let t = lt_delivery_time(&dist(&[0.0, 1.0]), 0.5, 0.0, 1e-3).unwrap();
        assert!(t.is_finite());
    }

    #[test]
    fn recoverable_fraction_examples() {
        let target = 1.0 - (-1.0f64).exp();
        let z = lt_recoverable_fraction(&dist(&[1.0]), 1.0, 0.0, 1e-3);
        assert!((z - target).abs() <= 1e-3, "{z}");
        assert_eq!(lt_recoverable_fraction(&dist(&[1.0]), 0.0, 0.0, 1e-3), 0.0);
        let z2 = lt_recoverable_fraction(&dist(&[1.0]), 2.0, 0.5, 1e-3);
        assert!((z2 - target).abs() <= 1e-3, "{z2}");
    }

    #[test]
    fn systematic_examples() {
        let d = dist(&[0.2, 0.5, 0.3]);
        let t = systematic_delivery_time(&d, 0.5, 0.1, 1e-3).unwrap();
        assert!((t - 0.5 / 0.9).abs() < 1e-12);

        // Continuity at z = 1 - eps for P(x) = x.
        let eps = 0.3;
        let below = systematic_delivery_time(&dist(&[1.0]), 1.0 - eps, eps, 1e-3).unwrap();
        let above = systematic_delivery_time(&dist(&[1.0]), 1.0 - eps + 1e-9, eps, 1e-3).unwrap();
        assert!((below - 1.0).abs() < 1e-12);
        assert!((above - below).abs() < 1e-6);
    }

    #[test]
    fn side_info_examples() {
        let d = dist(&[0.1, 0.6, 0.3]);
        let s = side_info_transform(&d, 0.0).unwrap();
        assert!((s.eval(0.3) - 1.0).abs() < 1e-15);
        assert_eq!(s.derivative(0.3), 0.0);
        let s = side_info_transform(&d, 1.0).unwrap();
        assert_eq!(s.eval(0.4), d.eval(0.4));
        assert_eq!(s.derivative(0.4), d.derivative(0.4));
    }

    #[test]
    fn coupon_collector_examples() {
        assert_eq!(coupon_collector_time(0.0), 0.0);
        assert!((coupon_collector_time(0.5) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((coupon_collector_time(0.5) / 0.5 - 1.386_294_36).abs() < 1e-8);
        assert!(coupon_collector_time(1.0).is_infinite());
        // -ln(eps)/(1-eps) coincides with the LT time of P(x) = x at z = 1 - eps.
        let eps: f64 = 0.5;
        let lt = lt_delivery_time(&dist(&[1.0]), 1.0 - eps, 0.0, 1e-3).unwrap();
        assert!((lt / (1.0 - eps) - (-eps.ln() / (1.0 - eps))).abs() < 1e-12);
    }

    #[test]
    fn grid_includes_endpoint_and_excludes_lower_bound() {
        let pts: Vec<f64> = grid(0.0, 0.0035, 1e-3).collect();
        assert_eq!(pts.len(), 4);
        assert_eq!(*pts.last().unwrap(), 0.0035);
        let pts: Vec<f64> = grid(0.5, 0.503, 1e-3).collect();
        assert!(pts.iter().all(|&x| x > 0.5));
        assert_eq!(pts.len(), 3);
        assert_eq!(grid(0.6, 0.5, 1e-3).count(), 0);
    }

    fn arb_dist() -> impl Strategy<Value = DegreeDistribution> {
        proptest::collection::vec(0.0f64..1.0, 1..6).prop_filter_map("zero mass", |w| {
            let mut w = w;
            w[0] += 0.05;
            DegreeDistribution::from_weights(&w, 0.0).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn delivery_time_monotone_in_demand_and_loss(
            d in arb_dist(), z1 in 0.05f64..0.9, dz in 0.0f64..0.09,
            e1 in 0.0f64..0.8, de in 0.0f64..0.15,
        ) {
            let step = 1e-3;
            let a = lt_delivery_time(&d, z1, e1, step).unwrap();
            prop_assert!(lt_delivery_time(&d, z1 + dz, e1, step).unwrap() >= a - 1e-12);
            prop_assert!(lt_delivery_time(&d, z1, e1 + de, step).unwrap() >= a - 1e-12);
        }

        #[test]
        fn recoverable_round_trip(d in arb_dist(), z in 0.05f64..0.95, eps in 0.0f64..0.8) {
            let step = 1e-3;
            let t = lt_delivery_time(&d, z, eps, step).unwrap();
            prop_assert!(lt_recoverable_fraction(&d, t, eps, step) >= z - step);
        }

        #[test]
        fn loss_enters_only_through_received_mass(
            d in arb_dist(), z in 0.05f64..0.95, e1 in 0.0f64..0.9, e2 in 0.0f64..0.9,
        ) {
            let step = 1e-3;
            let a = lt_delivery_time(&d, z, e1, step).unwrap() * (1.0 - e1);
            let b = lt_delivery_time(&d, z, e2, step).unwrap() * (1.0 - e2);
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }

        #[test]
        fn ripple_at_u_one(d in arb_dist(), v in 0.0f64..5.0) {
            prop_assert_eq!(expected_ripple(&d, v, 1.0).unwrap(), v * d.prob(1));
        }

        #[test]
        fn side_info_change_of_variables(
            d in arb_dist(), eps in 0.01f64..0.99, t in 1.0f64..4.0, s in 0.001f64..0.999,
        ) {
            let y = 1.0 - eps + eps * s;
            let x = (y - 1.0 + eps) / eps;
            let hat = side_info_transform(&d, eps).unwrap();
            let lhs = (1.0 - eps) * ((t - 1.0) / eps) * hat.derivative(x) + (1.0 - x).ln();
            let rhs = -eps.ln() + (1.0 - eps) * (t - 1.0) * d.derivative(y) + (1.0 - y).ln();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
        }

        #[test]
        fn systematic_costs_at_most_one_extra_round(
            d in arb_dist(), z in 0.05f64..0.95, eps in 0.0f64..0.8,
        ) {
            let step = 1e-3;
            let s = systematic_delivery_time(&d, z, eps, step).unwrap();
            let l = lt_delivery_time(&d, z, eps, step).unwrap();
            prop_assert!(s <= l + 1.0 + 1e-12);
        }
    }
}
