//! Deterministic pseudo-random streams.
//!
//! Every random decision in the crate is a pure function of a 64-bit seed so
//! that the sender and every receiver can regenerate the same stream.
//!
//! Seeds are derived with the SplitMix64 finalizer:
//!
//! ```text
//! splitmix64(z):
//!     z = z + 0x9E3779B97F4A7C15
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!     return z ^ (z >> 31)
//!
//! mix(a, b) = splitmix64(a ^ splitmix64(b))
//! ```
//!
//! (all arithmetic wrapping modulo 2^64). A derived seed drives an
//! [`Xorshift64Star`] generator: state `s` is set to `splitmix64(seed)`
//! (replaced by `0x9E3779B97F4A7C15` if zero), and each step computes
//! `s ^= s >> 12; s ^= s << 25; s ^= s >> 27` and outputs
//! `s * 0x2545F4914F6CDD1D`.
//!
//! Uniform floats take the top 53 bits of an output (`(x >> 11) * 2^-53`).
//! Bounded integers use Lemire's multiply-shift with rejection, so they are
//! exactly uniform.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for substream `b` of stream `a`.
#[inline]
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Stream tags used to separate the seed spaces of different consumers.
pub mod stream {
    pub const PAYLOAD: u64 = 0x5041_594C_4F41_4400;
    pub const ERASURE: u64 = 0x4552_4153_5552_4500;
    pub const DEGREE: u64 = 0x4445_4752_4545_0000;
    pub const CHUNK: u64 = 0x4348_554E_4B00_0000;
    pub const RUN: u64 = 0x5255_4E00_0000_0000;
}

#[derive(Debug, Clone)]
pub struct Xorshift64Star {
    state: u64,
}

impl Xorshift64Star {
    pub fn new(seed: u64) -> Self {
        let s = splitmix64(seed);
        Self {
            state: if s == 0 { GOLDEN_GAMMA } else { s },
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let mut s = self.state;
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        self.state = s;
        s.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, bound)`. `bound` must be nonzero.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let mut m = (self.next_u64() as u128) * (bound as u128);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = (self.next_u64() as u128) * (bound as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    #[inline]
    pub fn next_byte(&mut self) -> u8 {
        (self.next_u64() >> 56) as u8
    }

    pub fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }

    /// `true` with probability `p`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}
