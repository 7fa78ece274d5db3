//! CRC attachment and checking for ACK/NACK decisions and list-path
//! selection.
//!
//! Polynomials follow the 5G NR generator set: gCRC24C for 24 bits,
//! CRC-16-CCITT for 16 and gCRC8 for 8. Length 0 disables the CRC.

use crate::{Bit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crc {
    pub len: usize,
    poly: u32,
}

impl Crc {
    pub fn new(len: usize) -> Result<Self> {
        let poly = match len {
            0 => 0,
            8 => 0x9B,       // x^8+x^7+x^4+x^3+x+1
            16 => 0x1021,    // x^16+x^12+x^5+1
            24 => 0xB2B117,  // gCRC24C
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unsupported CRC length {len}"
                )))
            }
        };
        Ok(Self { len, poly })
    }

    /// Remainder of `bits * x^len` divided by the generator polynomial.
    fn remainder(&self, bits: &[Bit]) -> Vec<Bit> {
        if self.len == 0 {
            return Vec::new();
        }
        let mut reg = vec![0u8; self.len];
        for &b in bits {
            let fb = reg.first().copied().unwrap_or(0) ^ b;
            reg.rotate_left(1);
            reg[self.len - 1] = 0;
            if fb == 1 {
                for (j, r) in reg.iter_mut().enumerate() {
                    *r ^= ((self.poly >> (self.len - 1 - j)) & 1) as u8;
                }
            }
        }
        reg
    }

    /// Appends the CRC remainder to `msg`.
    pub fn attach(&self, msg: &[Bit]) -> Vec<Bit> {
        let mut out = msg.to_vec();
        out.extend(self.remainder(msg));
        out
    }

    /// True iff `payload` (message + CRC) has zero remainder.
    pub fn check(&self, payload: &[Bit]) -> bool {
        if self.len == 0 {
            return true;
        }
        if payload.len() < self.len {
            return false;
        }
        let (msg, tail) = payload.split_at(payload.len() - self.len);
        self.remainder(msg) == tail
    }
}
