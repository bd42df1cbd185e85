//! LT encoding with seeded coding vectors, an optional systematic round, and
//! the belief-propagation (peeling) decoder shared with growth codes.

mod decoder;
pub(crate) mod encoder;
mod packet;

pub use decoder::BpDecoder;
pub use encoder::{expand_coding_vector, sample_degree, EncoderConfig, LtEncoder};
pub use packet::{CodedPacket, PacketKind};
