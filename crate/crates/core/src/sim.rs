//! Monte-Carlo broadcast: one packet stream, independent erasures per user,
//! one decoder per user.
//!
//! For master seed `s`, the originals are filled from
//! `Xorshift64Star::new(mix(s, PAYLOAD))`, user `i` drops packets using
//! `Xorshift64Star::new(mix(mix(s, ERASURE), i))` (one `bernoulli(eps_i)`
//! per transmission, drawn whether or not the user is done), and the encoder
//! is seeded with `s` itself. Run `r` of [`average_runs`] uses
//! `s = mix(master_seed, r)`.

use alloc::format;
use alloc::vec::Vec;

use crate::chunked::{ChunkConfig, ChunkDecoder, ChunkEncoder};
use crate::degree_model::{DegreeDistribution, Scenario};
use crate::error::{Error, Result};
use crate::growth::{GrowthEncoder, GrowthSchedule};
use crate::lt_codec::{BpDecoder, CodedPacket, EncoderConfig, LtEncoder};
use crate::rng::{mix, stream, Xorshift64Star};
use crate::DEFAULT_CAP_MULTIPLIER;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Lt(DegreeDistribution),
    LtSystematic(DegreeDistribution),
    Growth(GrowthSchedule),
    Chunked(ChunkConfig),
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Lt(_) => "lt",
            Scheme::LtSystematic(_) => "lt-sys",
            Scheme::Growth(_) => "growth",
            Scheme::Chunked(_) => "chunked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Transmission cap as a multiple of `N`.
    pub cap_multiplier: f64,
    /// Keep per-transmission decoded counts in the trace.
    pub record_trajectories: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            cap_multiplier: DEFAULT_CAP_MULTIPLIER,
            record_trajectories: true,
        }
    }
}

/// Independent memoryless erasures per user.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    eps: Vec<f64>,
    rngs: Vec<Xorshift64Star>,
}

impl ChannelModel {
    pub fn new(scenario: &Scenario, master_seed: u64) -> Self {
        let base = mix(master_seed, stream::ERASURE);
        Self {
            eps: scenario.users.iter().map(|u| u.eps).collect(),
            rngs: (0..scenario.users.len())
                .map(|i| Xorshift64Star::new(mix(base, i as u64)))
                .collect(),
        }
    }

    /// Whether user `i` receives the next packet.
    pub fn delivers(&mut self, i: usize) -> bool {
        !self.rngs[i].bernoulli(self.eps[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    /// `decoded[i][t]`: originals user `i` holds after transmission `t + 1`.
    /// Empty when trajectories are not recorded.
    pub decoded: Vec<Vec<u32>>,
    /// Transmissions until user `i` held `ceil(z_i N)` originals.
    pub delivery: Vec<Option<u64>>,
    pub transmissions_sent: u64,
    /// Every user met its demand before the cap.
    pub complete: bool,
}

impl SimTrace {
    /// `max_i T_i`, if every user finished.
    pub fn server_delivery(&self) -> Option<u64> {
        self.delivery
            .iter()
            .try_fold(0u64, |acc, d| d.map(|d| acc.max(d)))
    }
}

enum Source {
    Lt(LtEncoder),
    Growth(GrowthEncoder),
    Chunked(ChunkEncoder),
}

impl Source {
    fn encode(&self, payloads: &[Vec<u8>], t: u64) -> Result<CodedPacket> {
        match self {
            Source::Lt(e) => e.encode(payloads, t),
            Source::Growth(e) => e.encode(payloads, t),
            Source::Chunked(e) => e.encode(payloads, t),
        }
    }
}

enum Receiver {
    Bp(BpDecoder),
    Chunk(ChunkDecoder),
}

impl Receiver {
    fn ingest(&mut self, packet: &CodedPacket) -> Result<()> {
        match self {
            Receiver::Bp(d) => d.ingest(packet).map(|_| ()),
            Receiver::Chunk(d) => d.ingest(packet).map(|_| ()),
        }
    }

    fn decoded_count(&self) -> usize {
        match self {
            Receiver::Bp(d) => d.decoded_count(),
            Receiver::Chunk(d) => d.decoded_count(),
        }
    }

    fn payload(&self, index: usize) -> Option<&[u8]> {
        match self {
            Receiver::Bp(d) => d.payload(index),
            Receiver::Chunk(d) => d.payload(index),
        }
    }
}

fn build(scheme: &Scheme, scenario: &Scenario, seed: u64) -> Result<(Source, Vec<Receiver>)> {
    let n = scenario.n;
    let b = scenario.payload_bytes;
    let users = scenario.users.len();
    let bp = || {
        (0..users)
            .map(|_| Receiver::Bp(BpDecoder::new(n, b)))
            .collect()
    };
    Ok(match scheme {
        Scheme::Lt(dist) | Scheme::LtSystematic(dist) => {
            let encoder = LtEncoder::new(EncoderConfig {
                n,
                dist: dist.clone(),
                master_seed: seed,
                systematic: matches!(scheme, Scheme::LtSystematic(_)),
            })?;
            (Source::Lt(encoder), bp())
        }
        Scheme::Growth(schedule) => {
            if schedule.n() != n {
                return Err(Error::usage(format!(
                    "growth schedule is for N = {}, scenario has {n}",
                    schedule.n()
                )));
            }
            (
                Source::Growth(GrowthEncoder::new(schedule.clone(), seed)),
                bp(),
            )
        }
        Scheme::Chunked(config) => {
            if config.total() != n {
                return Err(Error::usage(format!(
                    "chunking covers {} packets, scenario has {n}",
                    config.total()
                )));
            }
            let receivers = (0..users)
                .map(|_| Receiver::Chunk(ChunkDecoder::new(*config, b)))
                .collect();
            (Source::Chunked(ChunkEncoder::new(*config, seed)), receivers)
        }
    })
}

/// Runs one broadcast session until every user meets its demand or the cap
/// is reached, then checks every decoded payload against the originals.
pub fn simulate(
    scheme: &Scheme,
    scenario: &Scenario,
    params: &SimParams,
    master_seed: u64,
) -> Result<SimTrace> {
    if !(params.cap_multiplier > 0.0) {
        return Err(Error::usage("cap multiplier must be positive"));
    }
    let n = scenario.n;
    let users = scenario.users.len();
    let mut payload_rng = Xorshift64Star::new(mix(master_seed, stream::PAYLOAD));
    let originals: Vec<Vec<u8>> = (0..n)
        .map(|_| {
            let mut p = alloc::vec![0u8; scenario.payload_bytes];
            payload_rng.fill_bytes(&mut p);
            p
        })
        .collect();
    let (source, mut receivers) = build(scheme, scenario, master_seed)?;
    let mut channel = ChannelModel::new(scenario, master_seed);
    let demand: Vec<usize> = (0..users).map(|i| scenario.demand_count(i)).collect();
    let cap = (params.cap_multiplier * n as f64).ceil() as u64;

    let mut decoded: Vec<Vec<u32>> = alloc::vec![Vec::new(); users];
    let mut delivery: Vec<Option<u64>> = alloc::vec![None; users];
    let mut remaining = users;
    let mut receive = alloc::vec![false; users];
    let mut t = 0u64;
    while remaining > 0 && t < cap {
        for (i, r) in receive.iter_mut().enumerate() {
            *r = channel.delivers(i);
        }
        if receive.iter().any(|&r| r) {
            let packet = source.encode(&originals, t)?;
            for (i, rx) in receivers.iter_mut().enumerate() {
                if receive[i] {
                    rx.ingest(&packet)?;
                }
            }
        }
        t += 1;
        for (i, rx) in receivers.iter().enumerate() {
            let count = rx.decoded_count();
            if params.record_trajectories {
                decoded[i].push(count as u32);
            }
            if delivery[i].is_none() && count >= demand[i] {
                delivery[i] = Some(t);
                remaining -= 1;
            }
        }
    }

    for rx in &receivers {
        for (j, orig) in originals.iter().enumerate() {
            if rx.payload(j).is_some_and(|p| p != orig.as_slice()) {
                return Err(Error::CorruptedStream(format!(
                    "original {j} decoded wrongly"
                )));
            }
        }
    }

    Ok(SimTrace {
        decoded,
        delivery,
        transmissions_sent: t,
        complete: remaining == 0,
    })
}

/// Seed of run `run` under `master_seed`.
pub fn run_seed(master_seed: u64, run: u64) -> u64 {
    mix(master_seed, run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: u64,
    pub seed: u64,
    /// `T_i / N`, absent if user `i` hit the cap.
    pub per_user: Vec<Option<f64>>,
    /// `max_i T_i / N`, absent unless every user finished.
    pub server: Option<f64>,
    pub transmissions_sent: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub runs: usize,
    /// Runs in which some user hit the cap; excluded from every mean.
    pub incomplete: usize,
    /// Mean and sample standard deviation of `T_i / N` per user.
    pub per_user_mean: Vec<f64>,
    pub per_user_std: Vec<f64>,
    /// Mean and sample standard deviation of `max_i T_i / N`.
    pub server_mean: f64,
    pub server_std: f64,
    /// Mean decoded fraction per user after each transmission, over complete
    /// runs; a finished run holds its final value.
    pub mean_trajectories: Vec<Vec<f64>>,
    pub records: Vec<RunRecord>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl RunSummary {
    /// Aggregates traces given in run order.
    pub fn from_traces(scenario: &Scenario, master_seed: u64, traces: &[SimTrace]) -> Self {
        let n = scenario.n as f64;
        let users = scenario.users.len();
        let records: Vec<RunRecord> = traces
            .iter()
            .enumerate()
            .map(|(r, tr)| RunRecord {
                run: r as u64,
                seed: run_seed(master_seed, r as u64),
                per_user: tr
                    .delivery
                    .iter()
                    .map(|d| d.map(|d| d as f64 / n))
                    .collect(),
                server: tr.server_delivery().map(|d| d as f64 / n),
                transmissions_sent: tr.transmissions_sent,
            })
            .collect();
        let complete: Vec<usize> = (0..traces.len()).filter(|&r| traces[r].complete).collect();

        let mut per_user_mean = Vec::with_capacity(users);
        let mut per_user_std = Vec::with_capacity(users);
        for i in 0..users {
            let v: Vec<f64> = complete
                .iter()
                .filter_map(|&r| records[r].per_user[i])
                .collect();
            let (m, s) = mean_std(&v);
            per_user_mean.push(m);
            per_user_std.push(s);
        }
        let server: Vec<f64> = complete.iter().filter_map(|&r| records[r].server).collect();
        let (server_mean, server_std) = mean_std(&server);

        let len = complete
            .iter()
            .map(|&r| traces[r].decoded.first().map_or(0, Vec::len))
            .max()
            .unwrap_or(0);
        let mean_trajectories = (0..users)
            .map(|i| {
                let mut acc = alloc::vec![0.0; len];
                for &r in &complete {
                    let traj = &traces[r].decoded[i];
                    let last = traj.last().copied().unwrap_or(0) as f64;
                    for (t, a) in acc.iter_mut().enumerate() {
                        *a += traj.get(t).map_or(last, |&c| c as f64);
                    }
                }
                let div = complete.len().max(1) as f64 * n;
                acc.iter().map(|a| a / div).collect()
            })
            .collect();

        Self {
            runs: traces.len(),
            incomplete: traces.len() - complete.len(),
            per_user_mean,
            per_user_std,
            server_mean,
            server_std,
            mean_trajectories,
            records,
        }
    }
}

/// Runs `runs` independent sessions in order and aggregates them.
pub fn average_runs(
    scheme: &Scheme,
    scenario: &Scenario,
    params: &SimParams,
    runs: usize,
    master_seed: u64,
) -> Result<RunSummary> {
    if runs == 0 {
        return Err(Error::usage("at least one run is required"));
    }
    let traces = (0..runs as u64)
        .map(|r| simulate(scheme, scenario, params, run_seed(master_seed, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunSummary::from_traces(scenario, master_seed, &traces))
}

/// Normalized time at which a trajectory first reaches `ceil(z N)` decoded.
pub fn time_to_fraction(trajectory: &[f64], z: f64, n: usize) -> Option<f64> {
    let target = crate::ceil_tol(z * n as f64) / n as f64;
    trajectory
        .iter()
        .position(|&f| f >= target - 1e-12)
        .map(|t| (t + 1) as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunked::FieldSize;
    use crate::User;
    use alloc::vec;

    fn scenario(n: usize, users: &[(f64, f64)]) -> Scenario {
        Scenario::new(n, 8, users.iter().map(|&(z, e)| User::new(z, e)).collect()).unwrap()
    }

    fn lt_soliton_like() -> DegreeDistribution {
        DegreeDistribution::new(vec![0.05, 0.5, 0.2, 0.15, 0.1]).unwrap()
    }

    #[test]
    fn lossless_systematic_delivers_exactly_the_demand() {
        let dist = lt_soliton_like();
        for z in [0.1, 0.5, 0.77, 1.0] {
            let sc = scenario(64, &[(z, 0.0)]);
            let tr = simulate(
                &Scheme::LtSystematic(dist.clone()),
                &sc,
                &SimParams::default(),
                3,
            )
            .unwrap();
            assert_eq!(tr.delivery[0], Some(sc.demand_count(0) as u64));
        }
    }

    #[test]
    fn dead_channel_hits_the_cap() {
        let sc = scenario(32, &[(0.5, 1.0)]);
        let params = SimParams {
            cap_multiplier: 3.0,
            ..SimParams::default()
        };
        let schemes = [
            Scheme::Lt(lt_soliton_like()),
            Scheme::LtSystematic(lt_soliton_like()),
            Scheme::Growth(GrowthSchedule::new(32, 1.0, 0.5).unwrap()),
            Scheme::Chunked(ChunkConfig::for_packets(32, 4, FieldSize::Gf256).unwrap()),
        ];
        for s in &schemes {
            let tr = simulate(s, &sc, &params, 1).unwrap();
            assert!(!tr.complete);
            assert_eq!(tr.transmissions_sent, 96);
            assert_eq!(tr.delivery[0], None);
            assert_eq!(tr.server_delivery(), None);
        }
    }

    #[test]
    fn every_scheme_completes_and_is_deterministic() {
        let sc = scenario(64, &[(0.9, 0.1), (0.5, 0.5)]);
        let schemes = [
            Scheme::Lt(lt_soliton_like()),
            Scheme::LtSystematic(lt_soliton_like()),
            Scheme::Growth(GrowthSchedule::new(64, 1.0 / 0.9, 0.9).unwrap()),
            Scheme::Chunked(ChunkConfig::for_packets(64, 8, FieldSize::Gf256).unwrap()),
        ];
        for s in &schemes {
            let a = simulate(s, &sc, &SimParams::default(), 11).unwrap();
            let b = simulate(s, &sc, &SimParams::default(), 11).unwrap();
            assert_eq!(a, b, "{}", s.name());
            assert!(a.complete, "{}", s.name());
            assert_eq!(
                a.server_delivery(),
                a.delivery.iter().map(|d| d.unwrap()).max()
            );
            for (i, traj) in a.decoded.iter().enumerate() {
                assert_eq!(traj.len() as u64, a.transmissions_sent);
                assert!(traj.windows(2).all(|w| w[0] <= w[1]));
                let t = a.delivery[i].unwrap();
                assert!(traj[t as usize - 1] as usize >= sc.demand_count(i));
                if t > 1 {
                    assert!((traj[t as usize - 2] as usize) < sc.demand_count(i));
                }
            }
        }
    }

    #[test]
    fn adding_a_user_keeps_erasures_of_others() {
        let one = scenario(32, &[(0.6, 0.3)]);
        let two = scenario(32, &[(0.6, 0.3), (0.2, 0.7)]);
        let mut a = ChannelModel::new(&one, 5);
        let mut b = ChannelModel::new(&two, 5);
        for _ in 0..1000 {
            assert_eq!(a.delivers(0), b.delivers(0));
            b.delivers(1);
        }
    }

    #[test]
    fn mismatched_scheme_is_rejected() {
        let sc = scenario(32, &[(0.5, 0.1)]);
        assert!(simulate(
            &Scheme::Growth(GrowthSchedule::new(16, 1.0, 0.5).unwrap()),
            &sc,
            &SimParams::default(),
            0
        )
        .is_err());
        assert!(simulate(
            &Scheme::Chunked(ChunkConfig::for_packets(16, 4, FieldSize::Gf256).unwrap()),
            &sc,
            &SimParams::default(),
            0
        )
        .is_err());
    }

    #[test]
    fn summary_of_one_run_matches_the_trace() {
        let sc = scenario(64, &[(0.8, 0.2)]);
        let scheme = Scheme::Lt(lt_soliton_like());
        let s = average_runs(&scheme, &sc, &SimParams::default(), 1, 9).unwrap();
        let tr = simulate(&scheme, &sc, &SimParams::default(), run_seed(9, 0)).unwrap();
        assert_eq!(s.per_user_mean[0], tr.delivery[0].unwrap() as f64 / 64.0);
        assert_eq!(s.per_user_std[0], 0.0);
        assert_eq!(s.records[0].seed, run_seed(9, 0));
    }

    #[test]
    fn more_runs_extend_the_same_records() {
        let sc = scenario(32, &[(0.7, 0.2), (0.4, 0.5)]);
        let scheme = Scheme::Lt(lt_soliton_like());
        let a = average_runs(&scheme, &sc, &SimParams::default(), 4, 2).unwrap();
        let b = average_runs(&scheme, &sc, &SimParams::default(), 8, 2).unwrap();
        assert_eq!(a.records[..], b.records[..4]);
    }

    #[test]
    fn incomplete_runs_are_counted_and_excluded() {
        let sc = scenario(32, &[(0.5, 0.0), (0.5, 1.0)]);
        let params = SimParams {
            cap_multiplier: 2.0,
            ..SimParams::default()
        };
        let s = average_runs(&Scheme::LtSystematic(lt_soliton_like()), &sc, &params, 3, 0).unwrap();
        assert_eq!(s.incomplete, 3);
        assert!(s.server_mean.is_nan());
        assert!(s
            .records
            .iter()
            .all(|r| r.per_user[0].is_some() && r.server.is_none()));
    }

    #[test]
    fn degree_one_collection_matches_coupon_collector() {
        let n = 1024;
        let z = 0.5;
        let sc = scenario(n, &[(z, 0.0)]);
        let params = SimParams {
            record_trajectories: false,
            ..SimParams::default()
        };
        let s = average_runs(
            &Scheme::Lt(DegreeDistribution::point_mass(1).unwrap()),
            &sc,
            &params,
            200,
            4,
        )
        .unwrap();
        let se = s.per_user_std[0] / (200f64).sqrt();
        let expect = crate::degree_model::coupon_collector_time(z);
        assert!(
            (s.per_user_mean[0] - expect).abs() < 3.0 * se,
            "{} vs {expect} (se {se})",
            s.per_user_mean[0]
        );
    }

    #[test]
    fn fraction_lookup() {
        let traj = [0.0, 0.25, 0.5, 0.75, 1.0];
        assert_eq!(time_to_fraction(&traj, 0.5, 4), Some(3.0 / 4.0));
        assert_eq!(time_to_fraction(&traj, 0.3, 4), Some(3.0 / 4.0));
        assert_eq!(time_to_fraction(&traj[..2], 0.9, 4), None);
    }
}
