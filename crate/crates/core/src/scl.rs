//! Fixed-point LLR-based successive cancellation list decoding with
//! fast-node processing and HARQ-aware candidate generation.
//!
//! Two traversal modes share one path-selection rule. The full-tree mode
//! recurses to every leaf; the fast mode decodes Rate-0, Rate-1,
//! repetition and SPC sub-trees in a single step. Every selection orders
//! forks by `(path metric, decoded-prefix lexicographic)`, a total order,
//! which makes the two modes produce bit-identical survivor sets
//! whenever internal LLR arithmetic does not saturate.

use crate::crc::Crc;
use crate::harq::{HarqPlan, NodePartition};
use crate::polar::encode;
use crate::{Bit, Error, Result};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Fixed-point widths: `qe` external (channel) LLR bits, `qi` internal
/// LLR bits, `qm` path-metric bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantSpec {
    pub qe: u32,
    pub qi: u32,
    pub qm: u32,
}

impl QuantSpec {
    pub fn validate(&self) -> Result<()> {
        if self.qe < 2 || self.qi < self.qe || self.qi > 30 || self.qm < 1 || self.qm > 31 {
            return Err(Error::InvalidArgument(format!(
                "bad quantization qe={} qi={} qm={}",
                self.qe, self.qi, self.qm
            )));
        }
        Ok(())
    }

    /// Largest representable external LLR magnitude.
    pub fn ext_max(&self) -> i32 {
        (1 << (self.qe - 1)) - 1
    }

    /// Largest representable internal LLR magnitude.
    pub fn int_max(&self) -> i32 {
        (1 << (self.qi - 1)) - 1
    }

    /// Path-metric saturation value.
    pub fn pm_max(&self) -> u32 {
        ((1u64 << self.qm) - 1) as u32
    }

    /// Quantizes a real channel LLR: truncation toward zero, then clamp.
    pub fn quantize_external(&self, llr: f64) -> i32 {
        let m = self.ext_max();
        (llr.trunc() as i64).clamp(-(m as i64), m as i64) as i32
    }
}

/// Min-sum check-node update `f(a, b)`.
pub fn llr_f(a: i32, b: i32) -> i32 {
    let m = a.abs().min(b.abs());
    if (a < 0) != (b < 0) {
        -m
    } else {
        m
    }
}

/// Variable-node update `g(a, b) = b + (1 - 2*beta) * a`, saturated to
/// the internal width (the designated saturation point).
pub fn llr_g(a: i32, b: i32, beta: Bit, int_max: i32) -> i32 {
    let v = if beta == 1 { b - a } else { b + a };
    v.clamp(-int_max, int_max)
}

/// Hard decision: 0 for non-negative LLRs.
pub fn hard(a: i32) -> Bit {
    (a < 0) as Bit
}

fn sat_add(pm: u32, penalty: u64, pm_max: u32) -> u32 {
    (pm as u64 + penalty).min(pm_max as u64) as u32
}

/// Path-metric update: penalty `|alpha|` iff the decision disagrees with
/// the hard decision, saturated at `pm_max`.
pub fn update_pm(pm: u32, alpha: i32, bit: Bit, pm_max: u32) -> u32 {
    if bit != hard(alpha) {
        sat_add(pm, alpha.unsigned_abs() as u64, pm_max)
    } else {
        pm
    }
}

/// One butterfly step up: `[left ^ right, right]`.
pub fn combine_beta(left: &[Bit], right: &[Bit]) -> Vec<Bit> {
    let mut out = Vec::with_capacity(left.len() * 2);
    out.extend(left.iter().zip(right).map(|(l, r)| l ^ r));
    out.extend_from_slice(right);
    out
}

/// Fast-node taxonomy over the node's effective frozen pattern
/// (`PC_Frozen` counts as frozen).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Rate0,
    Rate1,
    Rep,
    Spc,
    Generic,
}

/// Classifies a sub-tree from its frozen mask slice.
pub fn classify_node(fr: &[Bit]) -> NodeKind {
    let n = fr.len();
    if fr.iter().all(|&b| b == 1) {
        return NodeKind::Rate0;
    }
    if fr.iter().all(|&b| b == 0) {
        return NodeKind::Rate1;
    }
    if fr[n - 1] == 0 && fr[..n - 1].iter().all(|&b| b == 1) {
        return NodeKind::Rep;
    }
    if fr[0] == 1 && fr[1..].iter().all(|&b| b == 0) {
        return NodeKind::Spc;
    }
    NodeKind::Generic
}

/// Candidate-generation strategy for fast nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateGen {
    /// Per parent path, the exact `min(L, |codewords|)` smallest-penalty
    /// codewords (plus penalty ties at the boundary). Guarantees
    /// equivalence with the full-tree traversal.
    Exact,
    /// Fixed small candidate lists per node kind, as generated in a
    /// hardware realization.
    Classic,
}

/// Classic fixed candidate lists (pre-shift). `alpha` drives the
/// ML-based entries; Rate-0 and repetition ignore it.
pub fn base_candidates(kind: NodeKind, alpha: &[i32], l_a: usize) -> Vec<Vec<Bit>> {
    let n = alpha.len();
    let mut out: Vec<Vec<Bit>> = match kind {
        NodeKind::Rate0 => vec![vec![0; n]],
        NodeKind::Rep => vec![vec![1; n], vec![0; n]],
        NodeKind::Rate1 => {
            let ml: Vec<Bit> = alpha.iter().map(|&a| hard(a)).collect();
            let weak = weakest_positions(alpha, 2);
            let mut v = vec![ml.clone()];
            for mask in 1..(1usize << weak.len()) {
                let mut c = ml.clone();
                for (b, &pos) in weak.iter().enumerate() {
                    if (mask >> b) & 1 == 1 {
                        c[pos] ^= 1;
                    }
                }
                v.push(c);
            }
            v
        }
        NodeKind::Spc => {
            let mut ml: Vec<Bit> = alpha.iter().map(|&a| hard(a)).collect();
            let weak = weakest_positions(alpha, 4);
            if ml.iter().fold(0, |acc, &b| acc ^ b) == 1 {
                ml[weak[0]] ^= 1;
            }
            let mut v = vec![ml.clone()];
            for i in 0..weak.len() {
                for j in i + 1..weak.len() {
                    let mut c = ml.clone();
                    c[weak[i]] ^= 1;
                    c[weak[j]] ^= 1;
                    v.push(c);
                }
            }
            v
        }
        NodeKind::Generic => Vec::new(),
    };
    out.truncate(l_a.max(1));
    out
}

fn weakest_positions(alpha: &[i32], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..alpha.len()).collect();
    idx.sort_by_key(|&i| (alpha[i].unsigned_abs(), i));
    idx.truncate(count);
    idx
}

/// XORs each base candidate with the encoded `PC_Frozen` pattern
/// (Eq.-style coset shift).
pub fn shift_candidates(base: &[Vec<Bit>], pc_enc: &[Bit]) -> Vec<Vec<Bit>> {
    base.iter()
        .map(|c| c.iter().zip(pc_enc).map(|(a, b)| a ^ b).collect())
        .collect()
}

/// Polar-encodes the routed `PC_Frozen` values of one sub-tree.
pub fn encode_pc_subtree(pc_values: &[Bit], sp: usize, n_v: usize) -> Result<Vec<Bit>> {
    encode(&pc_values[sp..sp + n_v])
}

fn penalty_of(cand: &[Bit], alpha: &[i32]) -> u64 {
    cand.iter()
        .zip(alpha)
        .filter(|(&c, &a)| c != hard(a))
        .map(|(_, &a)| a.unsigned_abs() as u64)
        .sum()
}

// Tie-collection ceiling for the flip-set enumeration; beyond this the
// candidate list is truncated (only reachable with degenerate all-equal
// LLR patterns).
const TIE_CAP: usize = 4096;

/// Enumerates flip sets over `alpha` positions in nondecreasing penalty
/// order: every set whose penalty is at most the `need`-th smallest
/// (matching `parity` when given) is returned.
fn smallest_flip_sets(
    alpha: &[i32],
    need: usize,
    parity: Option<Bit>,
) -> Vec<(u64, Vec<usize>)> {
    let mut mags: Vec<(u64, usize)> =
        alpha.iter().enumerate().map(|(i, &a)| (a.unsigned_abs() as u64, i)).collect();
    mags.sort();
    let mut heap: BinaryHeap<Reverse<(u64, Vec<usize>)>> = BinaryHeap::new();
    heap.push(Reverse((0, Vec::new())));
    let mut out: Vec<(u64, Vec<usize>)> = Vec::new();
    while let Some(Reverse((sum, set))) = heap.pop() {
        if out.len() >= need && sum > out[need - 1].0 {
            break;
        }
        if out.len() >= TIE_CAP {
            break;
        }
        if parity.is_none_or(|p| (set.len() & 1) as Bit == p) {
            out.push((sum, set.iter().map(|&i| mags[i].1).collect()));
        }
        let next = set.last().map_or(0, |&j| j + 1);
        if next < mags.len() {
            let mut grow = set.clone();
            grow.push(next);
            heap.push(Reverse((sum + mags[next].0, grow)));
            if let Some(&last) = set.last() {
                let mut swap = set;
                *swap.last_mut().unwrap() = next;
                heap.push(Reverse((sum - mags[last].0 + mags[next].0, swap)));
            }
        }
    }
    out
}

fn xor_into(mut v: Vec<Bit>, shift: &[Bit]) -> Vec<Bit> {
    for (a, b) in v.iter_mut().zip(shift) {
        *a ^= b;
    }
    v
}

/// Exact per-parent candidate generation: the smallest-penalty codewords
/// of the node's (coset-shifted) code, with penalty ties included.
pub fn exact_candidates(
    kind: NodeKind,
    alpha: &[i32],
    pc_enc: &[Bit],
    list_size: usize,
    fr: &[Bit],
) -> Result<Vec<(Vec<Bit>, u64)>> {
    let n = alpha.len();
    Ok(match kind {
        NodeKind::Rate0 => {
            vec![(pc_enc.to_vec(), penalty_of(pc_enc, alpha))]
        }
        NodeKind::Rep => {
            let mut v: Vec<(Vec<Bit>, u64)> = [0u8, 1u8]
                .iter()
                .map(|&b| {
                    let c = xor_into(vec![b; n], pc_enc);
                    let p = penalty_of(&c, alpha);
                    (c, p)
                })
                .collect();
            v.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            v
        }
        NodeKind::Rate1 | NodeKind::Spc => {
            let target: Vec<Bit> = alpha.iter().map(|&a| hard(a)).collect();
            let parity = if kind == NodeKind::Spc {
                let pt = target.iter().fold(0, |acc, &b| acc ^ b);
                let pe = pc_enc.iter().fold(0, |acc, &b| acc ^ b);
                Some(pt ^ pe)
            } else {
                None
            };
            smallest_flip_sets(alpha, list_size, parity)
                .into_iter()
                .map(|(sum, poss)| {
                    let mut c = target.clone();
                    for p in poss {
                        c[p] ^= 1;
                    }
                    (c, sum)
                })
                .collect()
        }
        NodeKind::Generic => {
            let free: Vec<usize> = (0..n).filter(|&i| fr[i] == 0).collect();
            if free.len() > 16 {
                return Err(Error::InvalidArgument(format!(
                    "generic fast node with {} free bits is too large",
                    free.len()
                )));
            }
            let mut v = Vec::with_capacity(1 << free.len());
            for m in 0..(1usize << free.len()) {
                let mut u = vec![0u8; n];
                for (b, &pos) in free.iter().enumerate() {
                    u[pos] = ((m >> b) & 1) as Bit;
                }
                let c = xor_into(encode(&u)?, pc_enc);
                let p = penalty_of(&c, alpha);
                v.push((c, p));
            }
            v
        }
    })
}

/// One list-decoding path: per-stage LLR and partial-sum buffers, the
/// path metric, the decoded leaf vector and the routed `PC_Frozen`
/// values.
#[derive(Debug, Clone)]
pub struct PathState {
    pub alpha: Vec<Vec<i32>>,
    pub beta: Vec<Vec<Bit>>,
    beta_left: Vec<Vec<Bit>>,
    pub pm: u32,
    pub u_hat: Vec<Bit>,
    pub pc_values: Vec<Bit>,
}

impl PathState {
    fn new(stages: usize, n: usize) -> Self {
        Self {
            alpha: (0..=stages).map(|s| vec![0; 1 << s]).collect(),
            beta: (0..=stages).map(|s| vec![0; 1 << s]).collect(),
            beta_left: (0..stages).map(|s| vec![0; 1 << s]).collect(),
            pm: 0,
            u_hat: Vec::with_capacity(n),
            pc_values: vec![0; n],
        }
    }
}

/// Decoder output for one frame.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    /// Message plus CRC bits, extracted at the payload positions.
    pub payload: Vec<Bit>,
    /// Full decoded leaf vector of the winning path.
    pub u_hat: Vec<Bit>,
    pub crc_ok: bool,
    pub pm: u32,
    pub trace: Vec<String>,
}

/// Successive cancellation list decoder configuration.
#[derive(Debug, Clone)]
pub struct SclDecoder {
    pub list_size: usize,
    pub quant: QuantSpec,
    /// Pick the best CRC-passing path instead of the best-metric path.
    pub crc_aided: bool,
    /// Fast-node traversal; `false` forces the full tree.
    pub fast: bool,
    pub candidates: CandidateGen,
    pub partition: NodePartition,
    /// Record per-node surviving path metrics.
    pub trace: bool,
}

impl SclDecoder {
    pub fn new(list_size: usize, quant: QuantSpec) -> Result<Self> {
        quant.validate()?;
        if list_size == 0 {
            return Err(Error::InvalidArgument("list size must be positive".into()));
        }
        Ok(Self {
            list_size,
            quant,
            crc_aided: true,
            fast: true,
            candidates: CandidateGen::Exact,
            partition: NodePartition::default(),
            trace: false,
        })
    }

    /// Decodes one frame of `plan.mother_len` quantized channel LLRs
    /// (zero at punctured positions).
    pub fn decode(&self, plan: &HarqPlan, llr: &[i32], crc: &Crc) -> Result<DecodeResult> {
        self.quant.validate()?;
        self.partition.validate()?;
        let n = plan.mother_len;
        if llr.len() != n {
            return Err(Error::InvalidArgument(format!(
                "LLR frame length {} != mother length {n}",
                llr.len()
            )));
        }
        let ext = self.quant.ext_max();
        if llr.iter().any(|&v| v.abs() > ext) {
            return Err(Error::InvalidArgument("channel LLR exceeds external width".into()));
        }
        let stages = n.trailing_zeros() as usize;
        let mut root = PathState::new(stages, n);
        root.alpha[stages].copy_from_slice(llr);
        let mut eng = Engine { plan, dec: self, paths: vec![root], trace: Vec::new() };
        eng.decode_node(stages, 0)?;
        let mut order: Vec<usize> = (0..eng.paths.len()).collect();
        order.sort_by(|&a, &b| {
            eng.paths[a]
                .pm
                .cmp(&eng.paths[b].pm)
                .then_with(|| eng.paths[a].u_hat.cmp(&eng.paths[b].u_hat))
        });
        let extract = |p: &PathState| -> Vec<Bit> {
            plan.payload_idx.iter().map(|&i| p.u_hat[i]).collect()
        };
        let mut winner = order[0];
        let mut crc_ok = crc.check(&extract(&eng.paths[winner]));
        if self.crc_aided && !crc_ok {
            for &cand in &order[1..] {
                if crc.check(&extract(&eng.paths[cand])) {
                    winner = cand;
                    crc_ok = true;
                    break;
                }
            }
        }
        let best = &eng.paths[winner];
        Ok(DecodeResult {
            payload: extract(best),
            u_hat: best.u_hat.clone(),
            crc_ok,
            pm: best.pm,
            trace: eng.trace,
        })
    }
}

struct Engine<'a> {
    plan: &'a HarqPlan,
    dec: &'a SclDecoder,
    paths: Vec<PathState>,
    trace: Vec<String>,
}

struct FastFork {
    parent: usize,
    pm: u32,
    shifted: Vec<Bit>,
    u_bits: Vec<Bit>,
}

impl Engine<'_> {
    fn decode_node(&mut self, stage: usize, sp: usize) -> Result<()> {
        if stage == 0 {
            self.leaf(sp);
            return Ok(());
        }
        let n_v = 1 << stage;
        let fr = &self.plan.masks.fr[sp..sp + n_v];
        if self.dec.fast {
            let kind = classify_node(fr);
            if self.dec.partition.is_decodable(n_v, kind) {
                return self.process_fast(stage, sp, kind);
            }
        }
        let half = n_v / 2;
        let int_max = self.dec.quant.int_max();
        for p in &mut self.paths {
            let (lo, hi) = p.alpha.split_at_mut(stage);
            for i in 0..half {
                lo[stage - 1][i] = llr_f(hi[0][i], hi[0][i + half]);
            }
        }
        self.decode_node(stage - 1, sp)?;
        for p in &mut self.paths {
            let left: Vec<Bit> = p.beta[stage - 1].clone();
            p.beta_left[stage - 1].copy_from_slice(&left);
            let (lo, hi) = p.alpha.split_at_mut(stage);
            for i in 0..half {
                lo[stage - 1][i] = llr_g(hi[0][i], hi[0][i + half], left[i], int_max);
            }
        }
        self.decode_node(stage - 1, sp + half)?;
        for p in &mut self.paths {
            for i in 0..half {
                p.beta[stage][i] = p.beta_left[stage - 1][i] ^ p.beta[stage - 1][i];
                p.beta[stage][i + half] = p.beta[stage - 1][i];
            }
        }
        Ok(())
    }

    fn leaf(&mut self, i: usize) {
        let pm_max = self.dec.quant.pm_max();
        if self.plan.masks.fr[i] == 1 {
            for p in &mut self.paths {
                let bit = if self.plan.masks.pc[i] == 1 { p.pc_values[i] } else { 0 };
                p.pm = update_pm(p.pm, p.alpha[0][0], bit, pm_max);
                p.beta[0][0] = bit;
                p.u_hat.push(bit);
                if let Some(t) = self.plan.lut[i] {
                    p.pc_values[t] = bit;
                }
            }
            return;
        }
        let mut forks: Vec<(usize, Bit, u32)> = Vec::with_capacity(2 * self.paths.len());
        for (pi, p) in self.paths.iter().enumerate() {
            for bit in [0u8, 1u8] {
                forks.push((pi, bit, update_pm(p.pm, p.alpha[0][0], bit, pm_max)));
            }
        }
        if forks.len() > self.dec.list_size {
            forks.sort_by(|a, b| {
                a.2.cmp(&b.2)
                    .then_with(|| self.paths[a.0].u_hat.cmp(&self.paths[b.0].u_hat))
                    .then_with(|| a.1.cmp(&b.1))
            });
            forks.truncate(self.dec.list_size);
        }
        let mut next = Vec::with_capacity(forks.len());
        for (pi, bit, pm) in forks {
            let mut p = self.paths[pi].clone();
            p.pm = pm;
            p.beta[0][0] = bit;
            p.u_hat.push(bit);
            if let Some(t) = self.plan.lut[i] {
                p.pc_values[t] = bit;
            }
            next.push(p);
        }
        self.paths = next;
    }

    fn process_fast(&mut self, stage: usize, sp: usize, kind: NodeKind) -> Result<()> {
        let n_v = 1 << stage;
        let pm_max = self.dec.quant.pm_max();
        let fr = &self.plan.masks.fr[sp..sp + n_v];
        let mut forks: Vec<FastFork> = Vec::new();
        for (pi, p) in self.paths.iter().enumerate() {
            let pc_enc = encode_pc_subtree(&p.pc_values, sp, n_v)?;
            let alpha = &p.alpha[stage];
            let cands: Vec<(Vec<Bit>, u64)> = match self.dec.candidates {
                CandidateGen::Exact => {
                    exact_candidates(kind, alpha, &pc_enc, self.dec.list_size, fr)?
                }
                CandidateGen::Classic => {
                    if kind == NodeKind::Generic {
                        exact_candidates(kind, alpha, &pc_enc, self.dec.list_size, fr)?
                    } else {
                        let l_a = classic_budget(kind);
                        shift_candidates(&base_candidates(kind, alpha, l_a), &pc_enc)
                            .into_iter()
                            .map(|c| {
                                let pen = penalty_of(&c, alpha);
                                (c, pen)
                            })
                            .collect()
                    }
                }
            };
            for (shifted, pen) in cands {
                let u_bits = encode(&shifted)?;
                forks.push(FastFork {
                    parent: pi,
                    pm: sat_add(p.pm, pen, pm_max),
                    shifted,
                    u_bits,
                });
            }
        }
        forks.sort_by(|a, b| {
            a.pm.cmp(&b.pm)
                .then_with(|| self.paths[a.parent].u_hat.cmp(&self.paths[b.parent].u_hat))
                .then_with(|| a.u_bits.cmp(&b.u_bits))
        });
        forks.truncate(self.dec.list_size);
        if self.dec.trace {
            let pms: Vec<u32> = forks.iter().map(|f| f.pm).collect();
            self.trace.push(format!("node sp={sp} size={n_v} kind={kind:?} pm={pms:?}"));
        }
        let mut next = Vec::with_capacity(forks.len());
        for f in forks {
            let mut p = self.paths[f.parent].clone();
            p.pm = f.pm;
            p.beta[stage].copy_from_slice(&f.shifted);
            for (off, &ub) in f.u_bits.iter().enumerate() {
                p.u_hat.push(ub);
                if let Some(t) = self.plan.lut[sp + off] {
                    p.pc_values[t] = ub;
                }
            }
            next.push(p);
        }
        self.paths = next;
        Ok(())
    }
}

fn classic_budget(kind: NodeKind) -> usize {
    match kind {
        NodeKind::Rate0 => 1,
        NodeKind::Rep => 2,
        NodeKind::Rate1 => 4,
        NodeKind::Spc => 8,
        NodeKind::Generic => 0,
    }
}
