use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PacketKind {
    /// Original packet `index`, sent uncoded.
    Systematic { index: u32 },
    /// XOR of `degree` originals chosen by [`expand_coding_vector`] from `seed`.
    ///
    /// [`expand_coding_vector`]: super::expand_coding_vector
    Lt { seed: u64, degree: u16 },
    /// GF(256) combination of the originals of one chunk.
    Chunked { chunk: u32, coeffs: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPacket {
    pub kind: PacketKind,
    pub payload: Vec<u8>,
}

const TAG_SYSTEMATIC: u8 = 0;
const TAG_LT: u8 = 1;
const TAG_CHUNKED: u8 = 2;

impl CodedPacket {
    /// Little-endian wire form:
    ///
    /// ```text
    /// u8 tag
    ///   0 systematic: u32 index
    ///   1 lt:         u64 seed, u16 degree
    ///   2 chunked:    u32 chunk, u16 width, width x u8 coefficients
    /// u32 payload length, payload bytes
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.payload.len());
        match &self.kind {
            PacketKind::Systematic { index } => {
                out.push(TAG_SYSTEMATIC);
                out.extend_from_slice(&index.to_le_bytes());
            }
            PacketKind::Lt { seed, degree } => {
                out.push(TAG_LT);
                out.extend_from_slice(&seed.to_le_bytes());
                out.extend_from_slice(&degree.to_le_bytes());
            }
            PacketKind::Chunked { chunk, coeffs } => {
                out.push(TAG_CHUNKED);
                out.extend_from_slice(&chunk.to_le_bytes());
                out.extend_from_slice(&(coeffs.len() as u16).to_le_bytes());
                out.extend_from_slice(coeffs);
            }
        }
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses one packet, returning it and the number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut r = Reader { bytes, pos: 0 };
        let kind = match r.u8()? {
            TAG_SYSTEMATIC => PacketKind::Systematic { index: r.u32()? },
            TAG_LT => PacketKind::Lt {
                seed: r.u64()?,
                degree: r.u16()?,
            },
            TAG_CHUNKED => {
                let chunk = r.u32()?;
                let width = r.u16()? as usize;
                PacketKind::Chunked {
                    chunk,
                    coeffs: r.take(width)?.to_vec(),
                }
            }
            t => return Err(Error::Decode(format!("unknown packet tag {t}"))),
        };
        let len = r.u32()? as usize;
        let payload = r.take(len)?.to_vec();
        Ok((Self { kind, payload }, r.pos))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Decode(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn lt_layout_is_fixed() {
        let p = CodedPacket {
            kind: PacketKind::Lt {
                seed: 0x0102_0304_0506_0708,
                degree: 3,
            },
            payload: vec![0xAA, 0xBB],
        };
        assert_eq!(
            p.to_bytes(),
            [1, 8, 7, 6, 5, 4, 3, 2, 1, 3, 0, 2, 0, 0, 0, 0xAA, 0xBB]
        );
    }

    #[test]
    fn truncated_and_unknown_inputs_are_errors() {
        assert!(CodedPacket::from_bytes(&[]).is_err());
        assert!(CodedPacket::from_bytes(&[9, 0, 0, 0, 0]).is_err());
        assert!(CodedPacket::from_bytes(&[1, 0, 0]).is_err());
        assert!(CodedPacket::from_bytes(&[0, 1, 0, 0, 0, 5, 0, 0, 0, 1]).is_err());
    }

    fn arb_packet() -> impl Strategy<Value = CodedPacket> {
        let kind = prop_oneof![
            any::<u32>().prop_map(|index| PacketKind::Systematic { index }),
            (any::<u64>(), any::<u16>()).prop_map(|(seed, degree)| PacketKind::Lt { seed, degree }),
            (any::<u32>(), proptest::collection::vec(any::<u8>(), 0..40))
                .prop_map(|(chunk, coeffs)| PacketKind::Chunked { chunk, coeffs }),
        ];
        (kind, proptest::collection::vec(any::<u8>(), 0..64))
            .prop_map(|(kind, payload)| CodedPacket { kind, payload })
    }

    proptest! {
        #[test]
        fn wire_round_trip(p in arb_packet(), trailing in proptest::collection::vec(any::<u8>(), 0..4)) {
            let mut bytes = p.to_bytes();
            let len = bytes.len();
            bytes.extend_from_slice(&trailing);
            let (q, used) = CodedPacket::from_bytes(&bytes).unwrap();
            prop_assert_eq!(used, len);
            prop_assert_eq!(q, p);
        }
    }
}
