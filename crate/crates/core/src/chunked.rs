//! Chunked random linear codes: the `N` originals are split into `n`
//! disjoint chunks of `h` packets; each coded packet picks a chunk uniformly
//! and carries a uniformly random combination of its originals over GF(q).
//! A receiver decodes a chunk by Gaussian elimination once it holds `h`
//! independent rows for it.

use alloc::format;
use alloc::vec::Vec;

use crate::degree_model::{AnalysisResult, Scenario};
use crate::error::{Error, Result};
use crate::galois::{gf256_add_scaled, Gf256Eliminator, Insert};
use crate::lt_codec::{CodedPacket, PacketKind};
use crate::rng::{mix, stream, Xorshift64Star};
use crate::special::{adaptive_simpson, ln_binomial, ln_regularized_gamma};

#[allow(unused_imports)]
use num_traits::Float;

/// Default absolute tolerance of [`expected_delivery_chunked`].
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

/// Coefficient alphabet. GF(2) rows use only 0 and 1, which GF(256)
/// arithmetic handles unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSize {
    Gf2,
    Gf256,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkConfig {
    chunks: usize,
    h: usize,
    field: FieldSize,
}

impl ChunkConfig {
    pub fn new(chunks: usize, h: usize, field: FieldSize) -> Result<Self> {
        if chunks == 0 || h == 0 {
            return Err(Error::usage(
                "chunk count and chunk size must be at least 1",
            ));
        }
        if chunks > u32::MAX as usize {
            return Err(Error::usage("too many chunks"));
        }
        Ok(Self { chunks, h, field })
    }

    /// Splits `n_total` originals into chunks of `h`.
    pub fn for_packets(n_total: usize, h: usize, field: FieldSize) -> Result<Self> {
        if h == 0 || !n_total.is_multiple_of(h) {
            return Err(Error::usage(format!(
                "chunk size {h} does not divide N = {n_total}"
            )));
        }
        Self::new(n_total / h, h, field)
    }

    pub fn chunks(&self) -> usize {
        self.chunks
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn field(&self) -> FieldSize {
        self.field
    }

    /// Total number of originals, `n h`.
    pub fn total(&self) -> usize {
        self.chunks * self.h
    }
}

/// Stateless chunked packet source.
///
/// Packet `t` seeds a generator with `mix(mix(master_seed, t), CHUNK)`; the
/// chunk is `below(n)` and the `h` coefficients follow, one generator output
/// per 8 bytes for GF(256) (as in `fill_bytes`) or the low bit of one output
/// each for GF(2).
#[derive(Debug, Clone)]
pub struct ChunkEncoder {
    config: ChunkConfig,
    master_seed: u64,
}

impl ChunkEncoder {
    pub fn new(config: ChunkConfig, master_seed: u64) -> Self {
        Self {
            config,
            master_seed,
        }
    }

    pub fn config(&self) -> &ChunkConfig {
        &self.config
    }

    pub fn header(&self, t: u64) -> PacketKind {
        let mut rng = Xorshift64Star::new(mix(mix(self.master_seed, t), stream::CHUNK));
        let chunk = rng.below(self.config.chunks as u64) as u32;
        let mut coeffs = alloc::vec![0u8; self.config.h];
        match self.config.field {
            FieldSize::Gf256 => rng.fill_bytes(&mut coeffs),
            FieldSize::Gf2 => coeffs
                .iter_mut()
                .for_each(|c| *c = (rng.next_u64() & 1) as u8),
        }
        PacketKind::Chunked { chunk, coeffs }
    }

    pub fn encode(&self, payloads: &[Vec<u8>], t: u64) -> Result<CodedPacket> {
        if payloads.len() != self.config.total() {
            return Err(Error::LengthMismatch {
                expected: self.config.total(),
                got: payloads.len(),
            });
        }
        let kind = self.header(t);
        let payload = combine(&self.config, payloads, &kind)?;
        Ok(CodedPacket { kind, payload })
    }
}

/// Coefficient-weighted sum of a chunk's originals.
pub fn combine(config: &ChunkConfig, payloads: &[Vec<u8>], kind: &PacketKind) -> Result<Vec<u8>> {
    let PacketKind::Chunked { chunk, coeffs } = kind else {
        return Err(Error::usage("not a chunked packet"));
    };
    check_header(config, *chunk, coeffs)?;
    let len = payloads.first().map_or(0, Vec::len);
    let mut out = alloc::vec![0u8; len];
    let base = *chunk as usize * config.h;
    for (i, &c) in coeffs.iter().enumerate() {
        gf256_add_scaled(&mut out, &payloads[base + i], c);
    }
    Ok(out)
}

fn check_header(config: &ChunkConfig, chunk: u32, coeffs: &[u8]) -> Result<()> {
    if chunk as usize >= config.chunks {
        return Err(Error::usage(format!(
            "chunk {chunk} outside [0, {})",
            config.chunks
        )));
    }
    if coeffs.len() != config.h {
        return Err(Error::LengthMismatch {
            expected: config.h,
            got: coeffs.len(),
        });
    }
    Ok(())
}

/// Per-chunk Gaussian elimination.
#[derive(Debug, Clone)]
pub struct ChunkDecoder {
    config: ChunkConfig,
    chunks: Vec<Gf256Eliminator>,
    decoded: Vec<bool>,
    decoded_chunks: usize,
}

impl ChunkDecoder {
    pub fn new(config: ChunkConfig, payload_len: usize) -> Self {
        Self {
            config,
            chunks: (0..config.chunks)
                .map(|_| Gf256Eliminator::new(config.h, payload_len))
                .collect(),
            decoded: alloc::vec![false; config.chunks],
            decoded_chunks: 0,
        }
    }

    pub fn rank(&self, chunk: usize) -> usize {
        self.chunks[chunk].rank()
    }

    pub fn is_chunk_decoded(&self, chunk: usize) -> bool {
        self.decoded[chunk]
    }

    pub fn decoded_chunks(&self) -> usize {
        self.decoded_chunks
    }

    /// Originals held, counting only fully decoded chunks.
    pub fn decoded_count(&self) -> usize {
        self.decoded_chunks * self.config.h
    }

    pub fn payload(&self, index: usize) -> Option<&[u8]> {
        let chunk = index / self.config.h;
        if !*self.decoded.get(chunk)? {
            return None;
        }
        self.chunks[chunk].solved_payload(index % self.config.h)
    }

    /// Reduces the packet into its chunk; returns the chunk id if this
    /// packet completed it.
    pub fn ingest(&mut self, packet: &CodedPacket) -> Result<Option<u32>> {
        let PacketKind::Chunked { chunk, coeffs } = &packet.kind else {
            return Err(Error::usage("non-chunked packet given to a chunk decoder"));
        };
        self.ingest_row(*chunk, coeffs.clone(), packet.payload.clone())
    }

    pub fn ingest_row(
        &mut self,
        chunk: u32,
        coeffs: Vec<u8>,
        payload: Vec<u8>,
    ) -> Result<Option<u32>> {
        check_header(&self.config, chunk, &coeffs)?;
        let c = chunk as usize;
        match self.chunks[c].insert(coeffs, payload)? {
            Insert::Inconsistent => Err(Error::CorruptedStream(format!(
                "inconsistent row for chunk {chunk}"
            ))),
            Insert::Dependent => Ok(None),
            Insert::Independent { .. } => {
                if self.chunks[c].is_full_rank() {
                    self.decoded[c] = true;
                    self.decoded_chunks += 1;
                    Ok(Some(chunk))
                } else {
                    Ok(None)
                }
            }
        }
    }
}

/// Transmissions until a receiver with erasure rate `eps` has decoded `k` of
/// the `n` chunks, or `None` past `cap`. Coefficient rows only; payloads are
/// not carried.
pub fn chunk_collection_time(
    config: &ChunkConfig,
    k: usize,
    eps: f64,
    seed: u64,
    cap: u64,
) -> Option<u64> {
    let encoder = ChunkEncoder::new(*config, mix(seed, stream::CHUNK));
    let mut erasures = Xorshift64Star::new(mix(seed, stream::ERASURE));
    let mut decoder = ChunkDecoder::new(*config, 0);
    for t in 0..cap {
        if erasures.bernoulli(eps) {
            continue;
        }
        let PacketKind::Chunked { chunk, coeffs } = encoder.header(t) else {
            unreachable!()
        };
        decoder
            .ingest_row(chunk, coeffs, Vec::new())
            .expect("consistent by construction");
        if decoder.decoded_chunks() >= k {
            return Some(t + 1);
        }
    }
    None
}

/// `P(Bin(n, 1 - g) <= k - 1)` with `ln g` and `ln(1 - g)` given, from
/// precomputed `ln C(n, j)`.
fn fewer_than_k_complete(ln_binom: &[f64], n: usize, ln_g: f64, ln_1mg: f64) -> f64 {
    let mut sum = (n as f64 * ln_g).exp();
    for (j, &lb) in ln_binom.iter().enumerate().skip(1) {
        sum += (lb + (n - j) as f64 * ln_g + j as f64 * ln_1mg).exp();
    }
    sum.min(1.0)
}

/// Expected transmissions until `k` of `n` chunks of size `h` are decoded
/// over a link with erasure rate `eps`, in the large-field limit:
///
/// ```text
/// E = n/(1 - eps) * integral_0^inf P(Bin(n, 1 - g(x)) <= k - 1) dx
/// ```
///
/// with `g(x) = Q(h, x)`, the probability that a Poisson(`x`) count of
/// packets for one chunk falls short of `h`. `tol` bounds the absolute error
/// of `E`.
pub fn expected_delivery_chunked(n: usize, k: usize, h: usize, eps: f64, tol: f64) -> Result<f64> {
    if n == 0 || h == 0 {
        return Err(Error::usage(
            "chunk count and chunk size must be at least 1",
        ));
    }
    if k == 0 || k > n {
        return Err(Error::usage(format!("k = {k} outside [1, {n}]")));
    }
    if !(eps >= 0.0) {
        return Err(Error::usage(format!("erasure rate {eps} is negative")));
    }
    if eps >= 1.0 {
        return Ok(f64::INFINITY);
    }
    if !(tol > 0.0) {
        return Err(Error::usage(format!("tolerance {tol} must be positive")));
    }
    let nn = n as u64;
    let ln_binom: Vec<f64> = (0..k as u64).map(|j| ln_binomial(nn, j)).collect();
    let hf = h as f64;
    let f = |x: f64| {
        let (ln_p, ln_q) = ln_regularized_gamma(hf, x);
        fewer_than_k_complete(&ln_binom, n, ln_q, ln_p)
    };
    let prefactor = n as f64 / (1.0 - eps);
    let int_tol = tol / prefactor;

    let mut x_max = hf + 12.0 * hf.sqrt() + 30.0 * (n as f64).ln();
    while f(x_max) > int_tol * 1e-3 {
        x_max += (x_max - hf).max(hf.sqrt()).max(1.0);
    }
    let panels = 16 + (x_max / hf.sqrt().max(1.0)) as usize;
    Ok(prefactor * adaptive_simpson(&f, 0.0, x_max, int_tol, panels.min(4096)))
}

/// Normalized delivery times `E[T(n, ceil(z_i n), eps_i)] / N`.
pub fn chunked_analysis(
    scenario: &Scenario,
    config: &ChunkConfig,
    tol: f64,
) -> Result<AnalysisResult> {
    if config.total() != scenario.n {
        return Err(Error::usage(format!(
            "chunking covers {} packets, scenario has {}",
            config.total(),
            scenario.n
        )));
    }
    let n = config.chunks;
    let per_user = scenario
        .users
        .iter()
        .map(|u| {
            let k = (crate::ceil_tol(u.z * n as f64) as usize).clamp(1, n);
            Ok(expected_delivery_chunked(n, k, config.h, u.eps, tol)? / scenario.n as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisResult::from_times(per_user))
}

/// Powers of two up to `N` when `N` is one, else every divisor of `N`.
pub fn chunk_size_candidates(n_total: usize) -> Vec<usize> {
    if n_total.is_power_of_two() {
        (0..=n_total.trailing_zeros())
            .map(|e| 1usize << e)
            .collect()
    } else {
        (1..=n_total)
            .filter(|&h| n_total.is_multiple_of(h))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkChoice {
    pub h: usize,
    pub analysis: AnalysisResult,
}

/// Analysis for every candidate chunk size, in increasing `h`.
pub fn chunk_size_table(scenario: &Scenario, tol: f64) -> Result<Vec<ChunkChoice>> {
    chunk_size_candidates(scenario.n)
        .into_iter()
        .map(|h| {
            let config = ChunkConfig::for_packets(scenario.n, h, FieldSize::Gf256)?;
            Ok(ChunkChoice {
                h,
                analysis: chunked_analysis(scenario, &config, tol)?,
            })
        })
        .collect()
}

/// Chunk size minimizing the server delivery time; ties keep the smaller `h`.
pub fn best_chunk_size(scenario: &Scenario, tol: f64) -> Result<ChunkChoice> {
    let table = chunk_size_table(scenario, tol)?;
    let mut best: Option<ChunkChoice> = None;
    for c in table {
        if best.as_ref().is_none_or(|b| c.analysis.t0 < b.analysis.t0) {
            best = Some(c);
        }
    }
    Ok(best.expect("N >= 1 has a candidate"))
}
