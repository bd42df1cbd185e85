//! Growth codes: a deterministic schedule whose degree rises from 1 as the
//! receiver is expected to have decoded more, scaled for erasures and
//! followed by a fallback mixture of the early degrees.
//!
//! With `R_j = (jN - 1)/(j + 1)`, phase `j` lasts
//!
//! ```text
//! A_j = sum_{s = floor(R_{j-1}) + 1}^{floor(R_j)} C(N, j) / (C(s, j - 1) (N - s))
//! ```
//!
//! packets of degree `j`, the expected wait for a useful degree-`j` packet
//! summed over the decoded counts `s` that phase covers. After phase
//! `m = ceil(1/(1 - z_max))` the encoder draws degrees from
//! `p_j = A_j / sum_{i <= m} A_i`. Packets carry an LT header, so
//! [`BpDecoder`](crate::lt_codec::BpDecoder) decodes them unchanged.

use alloc::format;
use alloc::vec::Vec;

use crate::degree_model::{
    grid, recoverable_on_grid, AnalysisResult, DegreeDistribution, Scenario,
};
use crate::error::{Error, Result};
use crate::lt_codec::encoder::{packet_indices, sample_degree, xor_payloads};
use crate::lt_codec::{CodedPacket, PacketKind};
use crate::rng::{mix, stream, Xorshift64Star};
use crate::special::ln_binomial;
use crate::DEFAULT_CAP_MULTIPLIER;

#[allow(unused_imports)]
use num_traits::Float;

/// `A_1 .. A_{N-1}`; empty for `N < 2`.
pub fn growth_phase_lengths(n: usize) -> Vec<f64> {
    if n < 2 {
        return Vec::new();
    }
    let nn = n as u64;
    // floor(R_j) for j >= 1; floor(R_0) = -1.
    let floor_r = |j: u64| -> i64 { ((j * nn - 1) / (j + 1)) as i64 };
    let mut out = Vec::with_capacity(n - 1);
    let mut prev = -1i64;
    for j in 1..nn {
        let hi = floor_r(j);
        let ln_top = ln_binomial(nn, j);
        let mut a = 0.0;
        for s in (prev + 1)..=hi {
            let s = s as u64;
            a += (ln_top - ln_binomial(s, j - 1)).exp() / (nn - s) as f64;
        }
        out.push(a);
        prev = hi.max(prev);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSchedule {
    n: usize,
    phase_lengths: Vec<f64>,
    scale: f64,
    fallback_m: usize,
    fallback_dist: DegreeDistribution,
    /// Packets sent in phases `1..=fallback_m`.
    counts: Vec<u64>,
    /// `ends[j]` is the number of packets sent by the end of phase `j + 1`.
    ends: Vec<u64>,
}

impl GrowthSchedule {
    pub fn new(n: usize, scale: f64, z_max: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::usage("growth codes need N >= 2"));
        }
        Self::from_phase_lengths(growth_phase_lengths(n), scale, z_max)
    }

    /// Builds a schedule from precomputed `A_1 .. A_{N-1}`.
    pub fn from_phase_lengths(phase_lengths: Vec<f64>, scale: f64, z_max: f64) -> Result<Self> {
        let n = phase_lengths.len() + 1;
        if n < 2 {
            return Err(Error::usage("growth codes need N >= 2"));
        }
        if !(scale >= 1.0) || !scale.is_finite() {
            return Err(Error::usage(format!(
                "scale {scale} must be a finite value >= 1"
            )));
        }
        if !(z_max > 0.0 && z_max <= 1.0) {
            return Err(Error::usage(format!("z_max = {z_max} outside (0, 1]")));
        }
        let m = fallback_stage(z_max).min(n - 1);
        let fallback_dist = DegreeDistribution::from_weights(&phase_lengths[..m], 0.0)?;

        let mut counts = Vec::with_capacity(m);
        let mut ends = Vec::with_capacity(m);
        let mut cum = 0.0;
        let mut sent = 0u64;
        for &a in &phase_lengths[..m] {
            cum += a;
            let end = (scale * cum).floor() as u64;
            counts.push(end - sent);
            ends.push(end);
            sent = end;
        }
        Ok(Self {
            n,
            phase_lengths,
            scale,
            fallback_m: m,
            fallback_dist,
            counts,
            ends,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phase_lengths(&self) -> &[f64] {
        &self.phase_lengths
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn fallback_m(&self) -> usize {
        self.fallback_m
    }

    pub fn fallback_dist(&self) -> &DegreeDistribution {
        &self.fallback_dist
    }

    /// Rounded lengths of phases `1..=fallback_m`.
    pub fn phase_counts(&self) -> &[u64] {
        &self.counts
    }

    /// Packets sent before the fallback mixture takes over.
    pub fn scheduled_len(&self) -> u64 {
        self.ends.last().copied().unwrap_or(0)
    }

    /// Degree of packet `t` if it falls inside the fixed phases.
    pub fn phase_degree(&self, t: u64) -> Option<usize> {
        let j = self.ends.partition_point(|&e| e <= t);
        (j < self.ends.len()).then_some(j + 1)
    }

    /// Expected number of packets of each degree among the first `packets`
    /// sent, fractional in the phase in progress and in the fallback.
    pub fn degree_histogram(&self, packets: f64) -> Vec<f64> {
        let mut hist = alloc::vec![0.0; self.fallback_m];
        let mut start = 0.0;
        for (j, &end) in self.ends.iter().enumerate() {
            let end = end as f64;
            hist[j] = (packets.min(end) - start).max(0.0);
            start = end;
        }
        let extra = (packets - start).max(0.0);
        if extra > 0.0 {
            for (h, &p) in hist.iter_mut().zip(self.fallback_dist.probs()) {
                *h += extra * p;
            }
        }
        hist
    }

    /// `(1 - eps)/N * sum_d c_d d x^(d-1)` for the histogram `c` of the
    /// first `packets` sent: the received mass times `P'(x)` in the ripple
    /// condition.
    fn mass_coefficients(&self, packets: f64, eps: f64) -> Vec<f64> {
        let w = (1.0 - eps) / self.n as f64;
        self.degree_histogram(packets)
            .iter()
            .enumerate()
            .map(|(i, c)| w * c * (i + 1) as f64)
            .collect()
    }
}

/// `ceil(1 / (1 - z_max))`, or unbounded for `z_max = 1`.
fn fallback_stage(z_max: f64) -> usize {
    if z_max >= 1.0 {
        usize::MAX
    } else {
        crate::ceil_tol(1.0 / (1.0 - z_max)) as usize
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Fraction of the content recoverable after `t N` transmissions over a link
/// with erasure rate `eps`, from the ripple condition on the degrees sent so
/// far.
pub fn growth_analytic_recovery(schedule: &GrowthSchedule, t: f64, eps: f64, step: f64) -> f64 {
    if !(t > 0.0) || !(eps < 1.0) || !(step > 0.0) {
        return 0.0;
    }
    let coeffs = schedule.mass_coefficients(t * schedule.n as f64, eps);
    recoverable_on_grid(|x| horner(&coeffs, x), step)
}

/// Smallest normalized time at which the ripple condition holds on the
/// grid over `(0, z]`; `+inf` if not reached within `cap` (normalized).
pub fn growth_delivery_time(
    schedule: &GrowthSchedule,
    z: f64,
    eps: f64,
    step: f64,
    cap: f64,
) -> Result<f64> {
    if !(z > 0.0) || !(step > 0.0 && step < 1.0) {
        return Err(Error::usage(format!(
            "demand {z} or grid step {step} out of range"
        )));
    }
    if z >= 1.0 {
        return Err(Error::UnsupportedDemand(z));
    }
    if !(eps >= 0.0) {
        return Err(Error::usage(format!("erasure rate {eps} is negative")));
    }
    if eps >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let points: Vec<f64> = grid(0.0, z, step).collect();
    let n = schedule.n as f64;
    let holds = |packets: f64| {
        let coeffs = schedule.mass_coefficients(packets, eps);
        points
            .iter()
            .all(|&x| horner(&coeffs, x) + (1.0 - x).ln() >= -1e-12 * (1.0 - x).ln().abs().max(1.0))
    };
    let mut hi = cap * n;
    if !holds(hi) {
        return Ok(f64::INFINITY);
    }
    // The mass is nondecreasing in the packet count, so bisection applies.
    let mut lo = 0.0;
    while hi - lo > 1e-9 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi / n)
}

/// Per-user and server delivery times of a growth schedule.
pub fn growth_analysis(
    schedule: &GrowthSchedule,
    scenario: &Scenario,
    step: f64,
) -> Result<AnalysisResult> {
    let per_user = scenario
        .users
        .iter()
        .map(|u| growth_delivery_time(schedule, u.z, u.eps, step, DEFAULT_CAP_MULTIPLIER))
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisResult::from_times(per_user))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleChoice {
    pub scale: f64,
    pub analysis: AnalysisResult,
}

/// Scale factors from `1/(1 - eps_min)` to `1/(1 - eps_max)` in steps of
/// `scale_step`, both ends included.
pub fn scale_candidates(scenario: &Scenario, scale_step: f64) -> Result<Vec<f64>> {
    if !(scale_step > 0.0) {
        return Err(Error::usage(format!(
            "scale step {scale_step} must be positive"
        )));
    }
    let eps_min = scenario.users.iter().map(|u| u.eps).fold(1.0, f64::min);
    let eps_max = scenario.users.iter().map(|u| u.eps).fold(0.0, f64::max);
    if eps_max >= 1.0 {
        return Err(Error::DeadChannel(eps_max));
    }
    let lo = 1.0 / (1.0 - eps_min);
    let hi = 1.0 / (1.0 - eps_max);
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let s = lo + k as f64 * scale_step;
        if s >= hi - 1e-12 * hi {
            break;
        }
        out.push(s);
        k += 1;
    }
    out.push(hi);
    Ok(out)
}

/// Grid search for the scale minimizing the analytic server delivery time.
/// Ties keep the smaller scale.
pub fn best_scale(scenario: &Scenario, scale_step: f64, grid_step: f64) -> Result<ScaleChoice> {
    if scenario.n < 2 {
        return Err(Error::usage("growth codes need N >= 2"));
    }
    let lengths = growth_phase_lengths(scenario.n);
    let mut best: Option<ScaleChoice> = None;
    for scale in scale_candidates(scenario, scale_step)? {
        let schedule =
            GrowthSchedule::from_phase_lengths(lengths.clone(), scale, scenario.z_max())?;
        let analysis = growth_analysis(&schedule, scenario, grid_step)?;
        if best.as_ref().is_none_or(|b| analysis.t0 < b.analysis.t0) {
            best = Some(ScaleChoice { scale, analysis });
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Stateless growth-code packet source; packet `t` depends only on the
/// schedule, the master seed and `t`.
///
/// Packet `t` uses seed `mix(master_seed, t)`. Inside the fixed phases its
/// degree is the phase index; afterwards it is drawn from the fallback
/// distribution with the generator seeded by `mix(seed, DEGREE)`. Index sets
/// follow [`expand_coding_vector`](crate::lt_codec::expand_coding_vector).
#[derive(Debug, Clone)]
pub struct GrowthEncoder {
    schedule: GrowthSchedule,
    master_seed: u64,
}

impl GrowthEncoder {
    pub fn new(schedule: GrowthSchedule, master_seed: u64) -> Self {
        Self {
            schedule,
            master_seed,
        }
    }

    pub fn schedule(&self) -> &GrowthSchedule {
        &self.schedule
    }

    pub fn header(&self, t: u64) -> PacketKind {
        let seed = mix(self.master_seed, t);
        let degree = self.schedule.phase_degree(t).unwrap_or_else(|| {
            let mut rng = Xorshift64Star::new(mix(seed, stream::DEGREE));
            sample_degree(&self.schedule.fallback_dist, &mut rng)
        });
        PacketKind::Lt {
            seed,
            degree: degree as u16,
        }
    }

    pub fn encode_with_indices(
        &self,
        payloads: &[Vec<u8>],
        t: u64,
    ) -> Result<(CodedPacket, Vec<u32>)> {
        if payloads.len() != self.schedule.n {
            return Err(Error::LengthMismatch {
                expected: self.schedule.n,
                got: payloads.len(),
            });
        }
        let kind = self.header(t);
        let indices = packet_indices(&kind, self.schedule.n)?;
        let payload = xor_payloads(payloads, &indices);
        Ok((CodedPacket { kind, payload }, indices))
    }

    pub fn encode(&self, payloads: &[Vec<u8>], t: u64) -> Result<CodedPacket> {
        self.encode_with_indices(payloads, t).map(|(p, _)| p)
    }
}
