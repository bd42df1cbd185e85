use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::encoder::packet_indices;
use super::packet::CodedPacket;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Equation {
    /// Undecoded originals still combined in `payload`.
    indices: Vec<u32>,
    payload: Vec<u8>,
    alive: bool,
}

/// Peeling decoder.
///
/// Received equations are reduced by every original already known. Degree-1
/// equations form the ripple, processed first-in first-out: each decodes one
/// original, which is then substituted into every pending equation holding
/// it. Decoding stalls when the ripple empties.
#[derive(Debug, Clone)]
pub struct BpDecoder {
    n: usize,
    payload_len: usize,
    known: Vec<bool>,
    payloads: Vec<u8>,
    decoded: usize,
    equations: Vec<Equation>,
    /// Original index -> equations that held it when stored.
    adjacency: Vec<Vec<u32>>,
    ripple: VecDeque<u32>,
    pending: usize,
}

impl BpDecoder {
    pub fn new(n: usize, payload_len: usize) -> Self {
        Self {
            n,
            payload_len,
            known: vec![false; n],
            payloads: vec![0; n * payload_len],
            decoded: 0,
            equations: Vec::new(),
            adjacency: vec![Vec::new(); n],
            ripple: VecDeque::new(),
            pending: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn decoded_count(&self) -> usize {
        self.decoded
    }

    pub fn is_complete(&self) -> bool {
        self.decoded == self.n
    }

    pub fn is_decoded(&self, index: usize) -> bool {
        self.known[index]
    }

    pub fn decoded_set(&self) -> &[bool] {
        &self.known
    }

    pub fn payload(&self, index: usize) -> Option<&[u8]> {
        self.known[index].then(|| self.slot(index))
    }

    /// Stored equations of degree two or more.
    pub fn pending_count(&self) -> usize {
        self.pending
    }

    fn slot(&self, index: usize) -> &[u8] {
        &self.payloads[index * self.payload_len..(index + 1) * self.payload_len]
    }

    /// Ingests a systematic or LT packet; returns how many originals became
    /// known.
    pub fn ingest(&mut self, packet: &CodedPacket) -> Result<usize> {
        let indices = packet_indices(&packet.kind, self.n)?;
        self.ingest_indices(&indices, &packet.payload)
    }

    /// Ingests an equation given by its (already expanded) index set.
    pub fn ingest_indices(&mut self, indices: &[u32], payload: &[u8]) -> Result<usize> {
        if payload.len() != self.payload_len {
            return Err(Error::LengthMismatch {
                expected: self.payload_len,
                got: payload.len(),
            });
        }
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= self.n) {
            return Err(Error::usage(format!("index {bad} outside [0, {})", self.n)));
        }
        let mut payload = payload.to_vec();
        let mut remaining = Vec::with_capacity(indices.len());
        for &i in indices {
            if self.known[i as usize] {
                xor_into(&mut payload, self.slot(i as usize));
            } else {
                remaining.push(i);
            }
        }
        match remaining.len() {
            0 => {
                check_zero(&payload)?;
                return Ok(0);
            }
            1 => {
                let id = self.push_equation(remaining, payload);
                self.ripple.push_back(id);
            }
            _ => {
                let id = self.push_equation(remaining, payload);
                for &i in &self.equations[id as usize].indices {
                    self.adjacency[i as usize].push(id);
                }
                self.pending += 1;
            }
        }
        self.peel()
    }

    fn push_equation(&mut self, indices: Vec<u32>, payload: Vec<u8>) -> u32 {
        let id = self.equations.len() as u32;
        self.equations.push(Equation {
            indices,
            payload,
            alive: true,
        });
        id
    }

    fn peel(&mut self) -> Result<usize> {
        let mut newly = 0;
        while let Some(id) = self.ripple.pop_front() {
            let eq = &mut self.equations[id as usize];
            if !eq.alive {
                continue;
            }
            eq.alive = false;
            let index = eq.indices[0] as usize;
            let payload = core::mem::take(&mut eq.payload);
            if self.known[index] {
                // A second degree-1 equation for the same original.
                if payload != self.slot(index) {
                    return Err(Error::CorruptedStream(format!(
                        "conflicting values for original {index}"
                    )));
                }
                continue;
            }
            let w = self.payload_len;
            self.payloads[index * w..(index + 1) * w].copy_from_slice(&payload);
            self.known[index] = true;
            self.decoded += 1;
            newly += 1;

            for eid in core::mem::take(&mut self.adjacency[index]) {
                let eq = &mut self.equations[eid as usize];
                if !eq.alive {
                    continue;
                }
                let Some(pos) = eq.indices.iter().position(|&i| i as usize == index) else {
                    continue;
                };
                eq.indices.swap_remove(pos);
                xor_into(&mut eq.payload, &payload);
                match eq.indices.len() {
                    0 => {
                        eq.alive = false;
                        check_zero(&eq.payload)?;
                    }
                    1 => {
                        self.pending -= 1;
                        self.ripple.push_back(eid);
                    }
                    _ => {}
                }
            }
        }
        Ok(newly)
    }
}

fn xor_into(dst: &mut [u8], src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

fn check_zero(payload: &[u8]) -> Result<()> {
    if payload.iter().all(|&b| b == 0) {
        Ok(())
    } else {
        Err(Error::CorruptedStream(
            "equation reduced to zero with a nonzero payload".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::{BitVector, Gf2Eliminator};
    use crate::lt_codec::PacketKind;
    use crate::rng::Xorshift64Star;

    fn eq(dec: &mut BpDecoder, idx: &[u32], data: &[Vec<u8>]) -> usize {
        let mut p = vec![0u8; data[0].len()];
        for &i in idx {
            xor_into(&mut p, &data[i as usize]);
        }
        dec.ingest_indices(idx, &p).unwrap()
    }

    fn data(n: usize) -> Vec<Vec<u8>> {
        (0..n).map(|i| vec![i as u8 + 1, (i * 7) as u8]).collect()
    }

    #[test]
    fn peel_chain() {
        let d = data(3);
        let mut dec = BpDecoder::new(3, 2);
        assert_eq!(eq(&mut dec, &[1], &d), 1);
        assert_eq!(eq(&mut dec, &[1, 2], &d), 1);
        assert!(dec.is_decoded(2));
        assert_eq!(dec.payload(2), Some(d[2].as_slice()));
    }

    #[test]
    fn no_ripple_no_progress() {
        let d = data(3);
        let mut dec = BpDecoder::new(3, 2);
        assert_eq!(eq(&mut dec, &[1, 2], &d), 0);
        assert_eq!(dec.pending_count(), 1);
        // The late degree-1 packet releases the whole chain.
        assert_eq!(eq(&mut dec, &[0, 1], &d), 0);
        assert_eq!(eq(&mut dec, &[2], &d), 3);
        assert!(dec.is_complete());
        assert_eq!(dec.pending_count(), 0);
    }

    #[test]
    fn inconsistent_stream_is_detected() {
        let d = data(2);
        let mut dec = BpDecoder::new(2, 2);
        eq(&mut dec, &[0], &d);
        assert!(matches!(
            dec.ingest_indices(&[0], &[9, 9]),
            Err(Error::CorruptedStream(_))
        ));
        let mut dec = BpDecoder::new(2, 2);
        eq(&mut dec, &[0, 1], &d);
        eq(&mut dec, &[0], &d);
        assert!(matches!(
            dec.ingest_indices(&[1], &[0, 0]),
            Err(Error::CorruptedStream(_))
        ));
    }

    #[test]
    fn duplicate_degree_one_equations_are_absorbed() {
        let d = data(4);
        let mut dec = BpDecoder::new(4, 2);
        eq(&mut dec, &[0, 1], &d);
        eq(&mut dec, &[1, 2], &d);
        assert_eq!(eq(&mut dec, &[1], &d), 3);
        assert_eq!(eq(&mut dec, &[1], &d), 0);
        assert_eq!(dec.decoded_count(), 3);
    }

    #[test]
    fn rejects_bad_input() {
        let mut dec = BpDecoder::new(3, 2);
        assert!(dec.ingest_indices(&[3], &[0, 0]).is_err());
        assert!(dec.ingest_indices(&[0], &[0]).is_err());
        let chunked = CodedPacket {
            kind: PacketKind::Chunked {
                chunk: 0,
                coeffs: vec![1],
            },
            payload: vec![0, 0],
        };
        assert!(dec.ingest(&chunked).is_err());
    }

    #[test]
    fn decoded_set_is_within_gaussian_elimination_reach() {
        let mut rng = Xorshift64Star::new(21);
        for _ in 0..200 {
            let n = 2 + rng.below(15) as usize;
            let d: Vec<Vec<u8>> = (0..n)
                .map(|_| vec![rng.next_byte(), rng.next_byte()])
                .collect();
            let mut dec = BpDecoder::new(n, 2);
            let mut ge = Gf2Eliminator::new(n, 2);
            for _ in 0..2 * n {
                let degree = 1 + rng.below(3.min(n as u64)) as usize;
                let idx = crate::lt_codec::expand_coding_vector(rng.next_u64(), degree, n).unwrap();
                let mut p = vec![0u8; 2];
                for &i in &idx {
                    xor_into(&mut p, &d[i as usize]);
                }
                dec.ingest_indices(&idx, &p).unwrap();
                ge.insert(BitVector::from_indices(n, &idx), p).unwrap();
                for (i, want) in d.iter().enumerate() {
                    if dec.is_decoded(i) {
                        assert!(ge.is_decodable(i));
                        assert_eq!(dec.payload(i).unwrap(), want.as_slice());
                    }
                }
            }
        }
    }
}
