use alloc::format;
use alloc::vec::Vec;

use super::packet::{CodedPacket, PacketKind};
use crate::degree_model::DegreeDistribution;
use crate::error::{Error, Result};
use crate::rng::{mix, stream, Xorshift64Star};

/// Sorted set of `degree` distinct indices in `[0, n)`, uniformly chosen
/// among all `C(n, degree)` subsets by the generator seeded with `seed`.
///
/// Floyd's algorithm is used for `2 * degree <= n`: for `j` in
/// `n - degree .. n`, draw `r = below(j + 1)` and insert `j` if `r` is already
/// taken, else `r`. Larger degrees use a partial Fisher-Yates shuffle of
/// `0..n`, swapping position `i` with `i + below(n - i)` for
/// `i in 0..degree`.
pub fn expand_coding_vector(seed: u64, degree: usize, n: usize) -> Result<Vec<u32>> {
    if degree == 0 || degree > n {
        return Err(Error::usage(format!("degree {degree} outside [1, {n}]")));
    }
    let mut rng = Xorshift64Star::new(seed);
    let mut out: Vec<u32>;
    if 2 * degree <= n {
        out = Vec::with_capacity(degree);
        for j in (n - degree)..n {
            let r = rng.below(j as u64 + 1) as u32;
            let pick = match out.binary_search(&r) {
                Ok(_) => j as u32,
                Err(_) => r,
            };
            let pos = out.binary_search(&pick).unwrap_err();
            out.insert(pos, pick);
        }
    } else {
        let mut perm: Vec<u32> = (0..n as u32).collect();
        for i in 0..degree {
            let k = i + rng.below((n - i) as u64) as usize;
            perm.swap(i, k);
        }
        perm.truncate(degree);
        perm.sort_unstable();
        out = perm;
    }
    Ok(out)
}

/// Inverse-CDF degree draw.
pub fn sample_degree(dist: &DegreeDistribution, rng: &mut Xorshift64Star) -> usize {
    let u = rng.next_f64();
    let mut cum = 0.0;
    let mut last_positive = 1;
    for (i, &p) in dist.probs().iter().enumerate() {
        if p > 0.0 {
            last_positive = i + 1;
        }
        cum += p;
        if u < cum {
            return i + 1;
        }
    }
    last_positive
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub n: usize,
    pub dist: DegreeDistribution,
    pub master_seed: u64,
    /// Send every original once, uncoded, before any coded packet.
    pub systematic: bool,
}

/// Stateless LT packet source: packet `t` depends only on the configuration
/// and `t`.
///
/// Packet `t` uses seed `mix(master_seed, t)`; its degree is drawn from the
/// generator seeded with `mix(seed, DEGREE)`, and its index set is
/// `expand_coding_vector(seed, degree, n)`.
#[derive(Debug, Clone)]
pub struct LtEncoder {
    config: EncoderConfig,
}

impl LtEncoder {
    pub fn new(config: EncoderConfig) -> Result<Self> {
        if config.n == 0 {
            return Err(Error::usage("N must be at least 1"));
        }
        if config.dist.dmax() > config.n {
            return Err(Error::InvalidDistribution(format!(
                "maximum degree {} exceeds N = {}",
                config.dist.dmax(),
                config.n
            )));
        }
        if config.dist.dmax() > u16::MAX as usize {
            return Err(Error::usage("degrees must fit in 16 bits"));
        }
        Ok(Self { config })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn packet_seed(&self, t: u64) -> u64 {
        mix(self.config.master_seed, t)
    }

    /// Header of packet `t` without the payload.
    pub fn header(&self, t: u64) -> PacketKind {
        if self.config.systematic && t < self.config.n as u64 {
            return PacketKind::Systematic { index: t as u32 };
        }
        let seed = self.packet_seed(t);
        let mut rng = Xorshift64Star::new(mix(seed, stream::DEGREE));
        let degree = sample_degree(&self.config.dist, &mut rng);
        PacketKind::Lt {
            seed,
            degree: degree as u16,
        }
    }

    /// Packet `t` with its payload and expanded index set.
    pub fn encode_with_indices(
        &self,
        payloads: &[Vec<u8>],
        t: u64,
    ) -> Result<(CodedPacket, Vec<u32>)> {
        if payloads.len() != self.config.n {
            return Err(Error::LengthMismatch {
                expected: self.config.n,
                got: payloads.len(),
            });
        }
        let kind = self.header(t);
        let indices = packet_indices(&kind, self.config.n)?;
        let payload = xor_payloads(payloads, &indices);
        Ok((CodedPacket { kind, payload }, indices))
    }

    pub fn encode(&self, payloads: &[Vec<u8>], t: u64) -> Result<CodedPacket> {
        self.encode_with_indices(payloads, t).map(|(p, _)| p)
    }
}

/// Originals combined into a systematic or LT packet.
pub(crate) fn packet_indices(kind: &PacketKind, n: usize) -> Result<Vec<u32>> {
    match kind {
        PacketKind::Systematic { index } => {
            if (*index as usize) < n {
                Ok(alloc::vec![*index])
            } else {
                Err(Error::usage(format!("index {index} outside [0, {n})")))
            }
        }
        PacketKind::Lt { seed, degree } => expand_coding_vector(*seed, *degree as usize, n),
        PacketKind::Chunked { .. } => Err(Error::usage("chunked packet given to an LT decoder")),
    }
}

pub(crate) fn xor_payloads(payloads: &[Vec<u8>], indices: &[u32]) -> Vec<u8> {
    let len = payloads.first().map_or(0, Vec::len);
    let mut out = alloc::vec![0u8; len];
    for &i in indices {
        for (o, s) in out.iter_mut().zip(&payloads[i as usize]) {
            *o ^= *s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn full_degree_selects_everything() {
        for seed in [0u64, 1, 99, u64::MAX] {
            assert_eq!(
                expand_coding_vector(seed, 7, 7).unwrap(),
                (0..7).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn expansion_is_deterministic_sorted_and_distinct() {
        for (degree, n) in [(1, 5), (3, 100), (60, 100), (99, 100)] {
            let a = expand_coding_vector(1234, degree, n).unwrap();
            assert_eq!(a, expand_coding_vector(1234, degree, n).unwrap());
            assert_eq!(a.len(), degree);
            assert!(a.windows(2).all(|w| w[0] < w[1]));
            assert!(a.iter().all(|&i| (i as usize) < n));
        }
        assert!(expand_coding_vector(1, 0, 5).is_err());
        assert!(expand_coding_vector(1, 6, 5).is_err());
    }

    #[test]
    fn single_index_is_uniform() {
        let n = 8;
        let seeds = 100_000u64;
        let mut counts = [0u32; 8];
        for s in 0..seeds {
            counts[expand_coding_vector(mix(77, s), 1, n).unwrap()[0] as usize] += 1;
        }
        let p = 1.0 / n as f64;
        let sigma = (seeds as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - seeds as f64 * p).abs() < 4.0 * sigma,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn pairs_are_uniform_on_both_code_paths() {
        // C(5,2) = 10 subsets (shuffle path) and C(6,2) = 15 (Floyd path).
        for n in [5usize, 6] {
            let mut counts = std::collections::BTreeMap::new();
            let draws = 60_000u64;
            for s in 0..draws {
                let set = if n == 5 {
                    // 2 * 3 > 5 picks the shuffle; take complements of 3-sets.
                    let three = expand_coding_vector(mix(5, s), 3, 5).unwrap();
                    (0..5u32).filter(|i| !three.contains(i)).collect::<Vec<_>>()
                } else {
                    expand_coding_vector(mix(6, s), 2, 6).unwrap()
                };
                *counts.entry(set).or_insert(0u32) += 1;
            }
            let k = if n == 5 { 10.0 } else { 15.0 };
            assert_eq!(counts.len() as f64, k);
            let p = 1.0 / k;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            for &c in counts.values() {
                assert!((c as f64 - draws as f64 * p).abs() < 4.5 * sigma);
            }
        }
    }

    #[test]
    fn degree_sampling() {
        let mut rng = Xorshift64Star::new(5);
        let point = DegreeDistribution::point_mass(3).unwrap();
        assert!((0..1000).all(|_| sample_degree(&point, &mut rng) == 3));

        let half = DegreeDistribution::new(vec![0.5, 0.5]).unwrap();
        let draws = 100_000;
        let mean = (0..draws)
            .map(|_| sample_degree(&half, &mut rng) as f64)
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 1.5).abs() < 0.01, "{mean}");

        let reference = DegreeDistribution::new(vec![0.0195, 0.7814, 0.1991]).unwrap();
        let mean = (0..draws)
            .map(|_| sample_degree(&reference, &mut rng) as f64)
            .sum::<f64>()
            / draws as f64;
        assert!((reference.mean_degree() - 2.1796).abs() < 1e-9);
        assert!((mean - 2.1796).abs() < 0.02, "{mean}");
    }

    fn originals(n: usize, b: usize, seed: u64) -> Vec<Vec<u8>> {
        let mut rng = Xorshift64Star::new(seed);
        (0..n)
            .map(|_| {
                let mut p = vec![0u8; b];
                rng.fill_bytes(&mut p);
                p
            })
            .collect()
    }

    #[test]
    fn systematic_round_sends_originals_in_order() {
        let data = originals(6, 4, 1);
        let enc = LtEncoder::new(EncoderConfig {
            n: 6,
            dist: DegreeDistribution::new(vec![0.5, 0.5]).unwrap(),
            master_seed: 9,
            systematic: true,
        })
        .unwrap();
        for t in 0..6 {
            let p = enc.encode(&data, t).unwrap();
            assert_eq!(p.kind, PacketKind::Systematic { index: t as u32 });
            assert_eq!(p.payload, data[t as usize]);
        }
        assert!(matches!(enc.header(6), PacketKind::Lt { .. }));
    }

    #[test]
    fn payload_is_xor_of_selected_originals() {
        let data = originals(20, 8, 2);
        let enc = LtEncoder::new(EncoderConfig {
            n: 20,
            dist: DegreeDistribution::new(vec![0.3, 0.3, 0.2, 0.2]).unwrap(),
            master_seed: 3,
            systematic: false,
        })
        .unwrap();
        for t in 0..200 {
            let p = enc.encode(&data, t).unwrap();
            let PacketKind::Lt { seed, degree } = p.kind else {
                panic!("expected LT packet");
            };
            let idx = expand_coding_vector(seed, degree as usize, 20).unwrap();
            let mut expect = vec![0u8; 8];
            for i in &idx {
                for (e, s) in expect.iter_mut().zip(&data[*i as usize]) {
                    *e ^= s;
                }
            }
            assert_eq!(p.payload, expect);
            if degree == 1 {
                assert_eq!(p.payload, data[idx[0] as usize]);
            }
        }
    }

    #[test]
    fn oversized_distribution_is_rejected() {
        let cfg = EncoderConfig {
            n: 2,
            dist: DegreeDistribution::point_mass(3).unwrap(),
            master_seed: 0,
            systematic: false,
        };
        assert!(LtEncoder::new(cfg).is_err());
    }
}
