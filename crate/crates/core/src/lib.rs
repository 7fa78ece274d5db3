//! Polar-code encoding and LLR-based SCL decoding with an
//! incremental-redundancy HARQ layer.
//!
//! The crate is organized around five subsystems:
//!
//! - [`polar`]: code construction (Gaussian-approximation density
//!   evolution), encoding, frozen-set selection and bit-type derivation.
//! - [`harq`]: per-transmission bit-type masks and the routing table that
//!   copies newly introduced information bits into their paired
//!   `PC_Frozen` slots, plus the set-based reference scheme used as a
//!   verification oracle.
//! - [`scl`]: fixed-point successive cancellation list decoding over the
//!   mother-code tree, with fast Rate-0 / Rate-1 / repetition / SPC node
//!   processing and HARQ-aware candidate generation.
//! - [`sim`]: QPSK/AWGN link simulation, HARQ session orchestration and
//!   FER estimation.
//! - [`gates`]: closed-form NAND-equivalent gate-count, memory and
//!   latency models.

pub mod crc;
pub mod gates;
pub mod harq;
pub mod polar;
pub mod scl;
pub mod sim;

pub use crc::Crc;
pub use gates::GateModel;
pub use harq::{HarqPlan, NodePartition, ReferenceSets};
pub use polar::{BitTypeMask, CodeConfig, ReliabilityOrder};
pub use scl::{NodeKind, PathState, QuantSpec, SclDecoder};
pub use sim::{LlrBuffer, SessionConfig, SessionResult};

/// A single bit stored as `0` or `1`.
pub type Bit = u8;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Serializes a binary vector as an ASCII `'0'`/`'1'` string, index 1
/// leftmost.
pub fn bits_to_ascii(bits: &[Bit]) -> String {
    bits.iter().map(|&b| if b != 0 { '1' } else { '0' }).collect()
}

/// Parses an ASCII `'0'`/`'1'` string into a binary vector.
pub fn bits_from_ascii(s: &str) -> Result<Vec<Bit>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::InvalidArgument(format!("bad mask char {c:?}"))),
        })
        .collect()
}
