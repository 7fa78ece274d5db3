//! Polar code construction, encoding and bit-type derivation.
//!
//! The algebra here is shared by the encoder, the SCL decoder and the
//! HARQ scheduler. Everything works in natural (non-bit-reversed) index
//! order with the standard `[[1,0],[1,1]]` kernel, so the second half of
//! a codeword depends only on the second half of the input vector. The
//! HARQ layer relies on that: the previously transmitted code always
//! occupies the high-index block of the extended mother code.

use crate::{Bit, Error, Result};
use std::ops::Range;

/// Static parameters of one polar code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeConfig {
    /// Mother code length `n = 2^m`.
    pub mother_len: usize,
    /// Post-puncturing code length `N`.
    pub code_len: usize,
    /// Message length excluding CRC.
    pub k: usize,
    /// CRC bit count.
    pub crc_len: usize,
    /// Construction SNR in dB for the Gaussian-approximation build.
    pub design_snr_db: f64,
}

impl CodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.mother_len.is_power_of_two() || self.mother_len < 2 {
            return Err(Error::InvalidArgument(format!(
                "mother length {} is not a power of two >= 2",
                self.mother_len
            )));
        }
        if self.code_len > self.mother_len || self.code_len <= self.mother_len / 2 {
            return Err(Error::InvalidArgument(format!(
                "code length {} does not fit mother length {}",
                self.code_len, self.mother_len
            )));
        }
        if self.k + self.crc_len > self.code_len {
            return Err(Error::InvalidArgument(format!(
                "payload {}+{} exceeds code length {}",
                self.k, self.crc_len, self.code_len
            )));
        }
        Ok(())
    }

    /// Payload length including the CRC.
    pub fn payload_len(&self) -> usize {
        self.k + self.crc_len
    }

    pub fn stages(&self) -> usize {
        self.mother_len.trailing_zeros() as usize
    }
}

/// Per-index bit roles over one mother code.
///
/// `rm` and `pc` mark disjoint subtypes of `fr`; an index with `fr = 0`
/// carries information.
#[derive(Debug, Clone, PartialEq)]
pub struct BitTypeMask {
    /// 1 = frozen of any kind.
    pub fr: Vec<Bit>,
    /// 1 = punctured (rate-matched), never transmitted.
    pub rm: Vec<Bit>,
    /// 1 = PC_Frozen: frozen at the decoder but valued from a routed bit.
    pub pc: Vec<Bit>,
}

impl BitTypeMask {
    pub fn zeros(n: usize) -> Self {
        Self { fr: vec![0; n], rm: vec![0; n], pc: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.fr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fr.is_empty()
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.rm.len() != self.fr.len() || self.pc.len() != self.fr.len() {
            return Err(Error::Internal("mask length mismatch".into()));
        }
        for i in 0..self.fr.len() {
            if self.rm[i] == 1 && self.fr[i] == 0 {
                return Err(Error::Internal(format!("rm[{i}] set without fr")));
            }
            if self.pc[i] == 1 && self.fr[i] == 0 {
                return Err(Error::Internal(format!("pc[{i}] set without fr")));
            }
            if self.rm[i] == 1 && self.pc[i] == 1 {
                return Err(Error::Internal(format!("rm and pc overlap at {i}")));
            }
        }
        Ok(())
    }
}

/// Channels sorted by reliability, least reliable first.
#[derive(Debug, Clone)]
pub struct ReliabilityOrder {
    /// Permutation of `0..n` (0-based), ascending reliability.
    pub order: Vec<usize>,
    /// Per-channel mean LLR under the Gaussian approximation.
    pub means: Vec<f64>,
}

/// Polar transform `u * G^{⊗m}` over GF(2), in place.
///
/// The transform is an involution, so the same butterfly also inverts it.
pub fn encode_in_place(u: &mut [Bit]) -> Result<()> {
    let n = u.len();
    if !n.is_power_of_two() || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "encode length {n} is not a power of two"
        )));
    }
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for j in i..i + h {
                u[j] ^= u[j + h];
            }
            i += 2 * h;
        }
        h *= 2;
    }
    Ok(())
}

/// Polar transform `u * G^{⊗m}` over GF(2).
pub fn encode(u: &[Bit]) -> Result<Vec<Bit>> {
    let mut x = u.to_vec();
    encode_in_place(&mut x)?;
    Ok(x)
}

// Chung's two-branch approximation of E[tanh(x/2)] under N(m, 2m).
fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < 10.0 {
        (-0.4527 * x.powf(0.86) + 0.0218).exp()
    } else {
        (std::f64::consts::PI / x).sqrt() * (-x / 4.0).exp() * (1.0 - 10.0 / (7.0 * x))
    }
}

fn phi_inv(y: f64) -> f64 {
    if y >= 1.0 {
        return 0.0;
    }
    let mut hi = 10.0;
    while phi(hi) > y && hi < 1.0e9 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn ga_check(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    phi_inv(1.0 - (1.0 - phi(a)) * (1.0 - phi(b)))
}

// One polarization step: channel means -> synthesized bit-channel means.
fn ga_recurse(means: &[f64], out: &mut Vec<f64>) {
    let n = means.len();
    if n == 1 {
        out.push(means[0]);
        return;
    }
    let h = n / 2;
    let mut left = Vec::with_capacity(h);
    let mut right = Vec::with_capacity(h);
    for i in 0..h {
        left.push(ga_check(means[i], means[i + h]));
        right.push(means[i] + means[i + h]);
    }
    ga_recurse(&left, out);
    ga_recurse(&right, out);
}

/// Per-channel mean LLRs by Gaussian-approximation density evolution over
/// the punctured code: the leftmost `mother_len - code_len` channel
/// positions start at mean 0 (erasure), the rest at the design-SNR mean.
pub fn ga_means(mother_len: usize, code_len: usize, rate: f64, design_snr_db: f64) -> Vec<f64> {
    let m0 = 4.0 * rate * 10f64.powf(design_snr_db / 10.0);
    let punct = mother_len - code_len;
    let ch: Vec<f64> = (0..mother_len).map(|i| if i < punct { 0.0 } else { m0 }).collect();
    let mut out = Vec::with_capacity(mother_len);
    ga_recurse(&ch, &mut out);
    out
}

/// Gaussian-approximation reliability construction for `config`.
pub fn construct_reliability(config: &CodeConfig) -> Result<ReliabilityOrder> {
    config.validate()?;
    let rate = config.payload_len() as f64 / config.code_len as f64;
    let means = ga_means(config.mother_len, config.code_len, rate, config.design_snr_db);
    let mut order: Vec<usize> = (0..config.mother_len).collect();
    order.sort_by(|&a, &b| means[a].partial_cmp(&means[b]).unwrap().then(a.cmp(&b)));
    Ok(ReliabilityOrder { order, means })
}

/// Frozen-set selection: `rm` marks the leftmost `n - N` indices, `fr`
/// additionally marks the `N - (k + crc)` least reliable non-punctured
/// channels. `pc` starts all zero.
pub fn select_frozen(rel: &ReliabilityOrder, config: &CodeConfig) -> Result<BitTypeMask> {
    config.validate()?;
    let n = config.mother_len;
    let punct = n - config.code_len;
    let mut mask = BitTypeMask::zeros(n);
    for i in 0..punct {
        mask.rm[i] = 1;
        mask.fr[i] = 1;
    }
    let extra = config.code_len - config.payload_len();
    let mut frozen = 0;
    for &ch in &rel.order {
        if frozen == extra {
            break;
        }
        if mask.rm[ch] == 0 {
            mask.fr[ch] = 1;
            frozen += 1;
        }
    }
    Ok(mask)
}

/// Derived bit-type vectors: `iv` (information), `fr_z` (zero-valued
/// frozen, rate-matched included) and `id` (information bits outside the
/// first transmission's code region, i.e. the routed I_Δ positions).
///
/// `round1` is the index range occupied by the first transmission's code
/// inside the current mother code; `id` is forced to zero there.
pub fn derive_bit_types(
    mask: &BitTypeMask,
    round1: Range<usize>,
) -> (Vec<Bit>, Vec<Bit>, Vec<Bit>) {
    let n = mask.len();
    let mut iv = vec![0; n];
    let mut fr_z = vec![0; n];
    let mut id = vec![0; n];
    for i in 0..n {
        iv[i] = 1 - mask.fr[i];
        fr_z[i] = mask.fr[i] & (1 - mask.pc[i]);
        id[i] = if round1.contains(&i) { 0 } else { iv[i] };
    }
    (iv, fr_z, id)
}
