//! Incremental-redundancy HARQ scheduling: per-transmission bit-type
//! masks and the routing table pairing newly introduced information bits
//! (`I_Δ`) with their `PC_Frozen` partners.
//!
//! Two implementations live here. [`next_transmission`] is the binary
//! vector pipeline used by the encoder and decoder. The set-based scheme
//! ([`ReferenceSets`]) is retained purely as a verification oracle; the
//! two are checked against each other bit-for-bit.
//!
//! Index convention: the previously transmitted code always occupies the
//! high-index suffix of the extended mother code, so extension prepends
//! at the low end and coded bits at previously transmitted positions are
//! unchanged in the extended codeword. Formulas quoted with "first
//! transmission first" orientation are index-reflected accordingly.

use crate::polar::{
    construct_reliability, derive_bit_types, select_frozen, BitTypeMask, CodeConfig,
};
use crate::scl::{classify_node, NodeKind};
use crate::{Bit, Error, Result};
use std::collections::BTreeSet;

/// Per-transmission record: masks, routing table and payload layout.
#[derive(Debug, Clone, PartialEq)]
pub struct HarqPlan {
    /// Transmission index, 1-based.
    pub t: usize,
    /// Punctured code length `N_t`.
    pub code_len: usize,
    /// Mother code length `n_t` (smallest power of two >= `N_t`).
    pub mother_len: usize,
    /// Code length of the first transmission.
    pub first_code_len: usize,
    /// Bit-type masks over the mother code.
    pub masks: BitTypeMask,
    /// Routing table: `lut[i] = Some(j)` copies the decoded bit at `i`
    /// into the `PC_Frozen` slot `j`. Targets always sit at higher index
    /// than their source.
    pub lut: Vec<Option<usize>>,
    /// Positions of the `k + crc` payload bits (the first transmission's
    /// information set, shifted into the current mother code).
    pub payload_idx: Vec<usize>,
    /// The round-1 code parameters (payload size, design SNR).
    pub base: CodeConfig,
}

/// Tree-partition contract shared by encoder and decoder: the smallest
/// decodable sub-tree length and the supported fast-node kinds with
/// their maximum sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePartition {
    pub min_node_size: usize,
    pub max_rate0: usize,
    pub max_rate1: usize,
    pub max_rep: usize,
    pub max_spc: usize,
}

impl Default for NodePartition {
    fn default() -> Self {
        Self {
            min_node_size: 1,
            max_rate0: usize::MAX,
            max_rate1: usize::MAX,
            max_rep: usize::MAX,
            max_spc: usize::MAX,
        }
    }
}

impl NodePartition {
    pub fn validate(&self) -> Result<()> {
        if !self.min_node_size.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "min node size {} is not a power of two",
                self.min_node_size
            )));
        }
        Ok(())
    }

    pub fn max_size(&self, kind: NodeKind) -> usize {
        match kind {
            NodeKind::Rate0 => self.max_rate0,
            NodeKind::Rate1 => self.max_rate1,
            NodeKind::Rep => self.max_rep,
            NodeKind::Spc => self.max_spc,
            NodeKind::Generic => self.min_node_size,
        }
    }

    /// True when the sub-tree `(stage, kind)` is decoded as a single
    /// node instead of being traversed.
    pub fn is_decodable(&self, n_v: usize, kind: NodeKind) -> bool {
        if n_v < 2 {
            return false;
        }
        if n_v <= self.min_node_size {
            return true;
        }
        kind != NodeKind::Generic && n_v <= self.max_size(kind)
    }
}

impl HarqPlan {
    /// Builds the round-1 plan: plain frozen-set selection, no routing.
    pub fn initial(config: &CodeConfig) -> Result<Self> {
        config.validate()?;
        let rel = construct_reliability(config)?;
        let masks = select_frozen(&rel, config)?;
        let payload_idx: Vec<usize> =
            (0..config.mother_len).filter(|&i| masks.fr[i] == 0).collect();
        Ok(Self {
            t: 1,
            code_len: config.code_len,
            mother_len: config.mother_len,
            first_code_len: config.code_len,
            masks,
            lut: vec![None; config.mother_len],
            payload_idx,
            base: *config,
        })
    }

    /// Index range of the first transmission's code inside the current
    /// mother code (`id` is zero there).
    pub fn round1_region(&self) -> std::ops::Range<usize> {
        self.mother_len - self.first_code_len..self.mother_len
    }

    /// Derived bit-type vectors `(iv, fr_z, id)`.
    pub fn bit_types(&self) -> (Vec<Bit>, Vec<Bit>, Vec<Bit>) {
        derive_bit_types(&self.masks, self.round1_region())
    }

    /// Coded positions transmitted in round `t` only (new redundancy).
    pub fn new_coded_region(&self, prev_code_len: usize) -> std::ops::Range<usize> {
        self.mother_len - self.code_len..self.mother_len - prev_code_len
    }

    pub fn check_invariants(&self) -> Result<()> {
        self.masks.check_invariants()?;
        if self.mother_len != self.code_len.next_power_of_two() {
            return Err(Error::Internal("mother length mismatch".into()));
        }
        let mut targets = BTreeSet::new();
        for (i, tgt) in self.lut.iter().enumerate() {
            if let Some(j) = *tgt {
                if self.masks.pc[j] != 1 {
                    return Err(Error::Internal(format!("lut target {j} is not PC_Frozen")));
                }
                if j <= i {
                    return Err(Error::Internal(format!("lut entry {i} -> {j} not ascending")));
                }
                if !targets.insert(j) {
                    return Err(Error::Internal(format!("lut target {j} mapped twice")));
                }
            }
        }
        let pc_count = self.masks.pc.iter().filter(|&&b| b == 1).count();
        if targets.len() != pc_count {
            return Err(Error::Internal("unrouted PC_Frozen slot".into()));
        }
        Ok(())
    }

    /// Serializes the plan as a text manifest: one line per index with
    /// the bit type and the 1-based routing target (0 = unmapped).
    pub fn to_manifest(&self) -> String {
        let (_, _, id) = self.bit_types();
        let mut out = String::new();
        for (i, &id_i) in id.iter().enumerate() {
            let ty = if self.masks.rm[i] == 1 {
                "RM"
            } else if self.masks.pc[i] == 1 {
                "PC"
            } else if self.masks.fr[i] == 1 {
                "FRZ"
            } else if id_i == 1 {
                "ID"
            } else {
                "IV"
            };
            let tgt = self.lut[i].map_or(0, |j| j + 1);
            out.push_str(&format!("{} {} {}\n", i + 1, ty, tgt));
        }
        out
    }
}

/// Step 3 of the mask pipeline: grow the masks to a larger mother code.
/// The extension region (low indices) is frozen and rate-matched; the
/// previous code keeps its values in the high-index suffix.
pub fn extend_masks(prev: &BitTypeMask, n_t: usize) -> Result<BitTypeMask> {
    let n_prev = prev.len();
    if n_t < n_prev || !n_t.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "cannot extend masks from {n_prev} to {n_t}"
        )));
    }
    let delta = n_t - n_prev;
    let mut out = BitTypeMask::zeros(n_t);
    for i in 0..delta {
        out.fr[i] = 1;
        out.rm[i] = 1;
    }
    out.fr[delta..].copy_from_slice(&prev.fr);
    out.rm[delta..].copy_from_slice(&prev.rm);
    out.pc[delta..].copy_from_slice(&prev.pc);
    Ok(out)
}

/// Left-to-right running-sum selection of new `PC_Frozen` bits: the
/// first `popcount(id_new)` channels that were information at `t-1` and
/// are frozen in the fresh length-`N_t` code become `PC_Frozen`.
pub fn compute_pc_mask(
    fr_prev: &[Bit],
    pc_prev: &[Bit],
    fr_star: &[Bit],
    id_new: &[Bit],
) -> Vec<Bit> {
    let budget: usize = id_new.iter().map(|&b| b as usize).sum();
    let mut pc = pc_prev.to_vec();
    let mut taken = 0;
    for i in 0..fr_prev.len() {
        if taken >= budget {
            break;
        }
        if fr_prev[i] == 0 && fr_star[i] == 1 && pc[i] == 0 {
            pc[i] = 1;
            taken += 1;
        }
    }
    pc
}

/// Step-6 frozen-mask update: inside the previously transmitted region
/// the new `PC_Frozen` bits join the frozen set; in the newly
/// transmitted region everything except `id_new` is frozen; untransmitted
/// (rate-matched) positions stay frozen.
pub fn compute_fr_mask(
    fr_prev: &[Bit],
    pc_t: &[Bit],
    pc_prev: &[Bit],
    id_new: &[Bit],
    old_region_start: usize,
) -> Vec<Bit> {
    let n = fr_prev.len();
    let mut fr = vec![0; n];
    for i in 0..n {
        fr[i] = if i >= old_region_start {
            fr_prev[i] | (pc_t[i] & (1 - pc_prev[i]))
        } else {
            1 - id_new[i]
        };
    }
    fr
}

/// Pairs the sorted new `I_Δ` indices with the sorted new `PC_Frozen`
/// indices one-to-one, ascending to ascending. Earlier entries are
/// untouched.
pub fn build_lut(
    lut: &mut [Option<usize>],
    new_id: &[usize],
    new_pc: &[usize],
) -> Result<()> {
    if new_id.len() != new_pc.len() {
        return Err(Error::Internal(format!(
            "scheduler bug: {} new I_delta vs {} new PC_Frozen",
            new_id.len(),
            new_pc.len()
        )));
    }
    for (&src, &tgt) in new_id.iter().zip(new_pc) {
        if lut[src].is_some() {
            return Err(Error::Internal(format!("lut source {src} already mapped")));
        }
        lut[src] = Some(tgt);
    }
    Ok(())
}

/// Removes intra-node routing dependencies: for every routed pair whose
/// source and target fall inside the same decodable node, the source is
/// demoted to a zero-valued frozen bit and the target becomes an
/// information bit again. Rate-0, Rate-1, repetition and SPC nodes are
/// exempt (their layouts cannot contain such a pair).
pub fn resolve_intra_node(
    masks: &mut BitTypeMask,
    lut: &mut [Option<usize>],
    partition: &NodePartition,
) -> Result<()> {
    partition.validate()?;
    let n = masks.len();
    let mut spans: Vec<(usize, usize)> = Vec::new();
    collect_decodable_spans(&masks.fr, 0, n, partition, &mut spans);
    for (start, len) in spans {
        let kind = classify_node(&masks.fr[start..start + len]);
        if kind != NodeKind::Generic {
            continue;
        }
        for (i, slot) in lut.iter_mut().enumerate().skip(start).take(len - 1) {
            if let Some(j) = *slot {
                if j >= start && j < start + len {
                    masks.fr[i] = 1;
                    masks.fr[j] = 0;
                    masks.pc[j] = 0;
                    *slot = None;
                }
            }
        }
    }
    masks.check_invariants()
}

fn collect_decodable_spans(
    fr: &[Bit],
    start: usize,
    len: usize,
    partition: &NodePartition,
    out: &mut Vec<(usize, usize)>,
) {
    let kind = classify_node(&fr[start..start + len]);
    if partition.is_decodable(len, kind) || len == 1 {
        out.push((start, len));
    } else {
        let half = len / 2;
        collect_decodable_spans(fr, start, half, partition, out);
        collect_decodable_spans(fr, start + half, half, partition, out);
    }
}

/// Full step 1-6 pipeline producing the plan for the next transmission.
pub fn next_transmission(
    prev: &HarqPlan,
    code_len: usize,
    partition: &NodePartition,
) -> Result<HarqPlan> {
    if code_len <= prev.code_len {
        return Err(Error::InvalidArgument(format!(
            "retransmission length {} must exceed previous {}",
            code_len, prev.code_len
        )));
    }
    let n_t = code_len.next_power_of_two();
    let delta = n_t - prev.mother_len;

    // Step 1: fresh no-HARQ code of length N_t at the same design SNR.
    let fresh_cfg = CodeConfig {
        mother_len: n_t,
        code_len,
        k: prev.base.k,
        crc_len: prev.base.crc_len,
        design_snr_db: prev.base.design_snr_db,
    };
    let fresh_rel = construct_reliability(&fresh_cfg)?;
    let fresh = select_frozen(&fresh_rel, &fresh_cfg)?;

    // Step 3: extend the previous masks; shift routing and payload.
    let ext = extend_masks(&prev.masks, n_t)?;
    let mut lut: Vec<Option<usize>> = vec![None; n_t];
    for (i, tgt) in prev.lut.iter().enumerate() {
        lut[i + delta] = tgt.map(|j| j + delta);
    }
    let payload_idx: Vec<usize> = prev.payload_idx.iter().map(|&i| i + delta).collect();

    // Step 4: new I_delta = fresh information bits inside the newly
    // transmitted region, then the PC_Frozen selection scan.
    let new_region = n_t - code_len..n_t - prev.code_len;
    let mut id_new = vec![0; n_t];
    for i in new_region.clone() {
        id_new[i] = 1 - fresh.fr[i];
    }
    let pc_t = compute_pc_mask(&ext.fr, &ext.pc, &fresh.fr, &id_new);

    // Step 5: routing table.
    let new_id_idx: Vec<usize> = (0..n_t).filter(|&i| id_new[i] == 1).collect();
    let new_pc_idx: Vec<usize> =
        (0..n_t).filter(|&i| pc_t[i] == 1 && ext.pc[i] == 0).collect();
    build_lut(&mut lut, &new_id_idx, &new_pc_idx)?;

    // Step 6: new frozen mask; step 2: rm comes from the fresh code.
    let fr_t = compute_fr_mask(&ext.fr, &pc_t, &ext.pc, &id_new, n_t - prev.code_len);
    let mut masks = BitTypeMask { fr: fr_t, rm: fresh.rm.clone(), pc: pc_t };

    resolve_intra_node(&mut masks, &mut lut, partition)?;

    let plan = HarqPlan {
        t: prev.t + 1,
        code_len,
        mother_len: n_t,
        first_code_len: prev.first_code_len,
        masks,
        lut,
        payload_idx,
        base: prev.base,
    };
    plan.check_invariants()?;
    Ok(plan)
}

/// The set-based reference scheme, kept as a verification oracle for the
/// mask pipeline. All index sets are 0-based over the mother code.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSets {
    pub code_len: usize,
    pub mother_len: usize,
    pub first_code_len: usize,
    /// Information bit channels `I^t`.
    pub info: BTreeSet<usize>,
    /// Accumulated `PC_Frozen` channels `PF_Δ^t`.
    pub pf_delta: BTreeSet<usize>,
    /// This round's newly added information channels `I_Δ^t`.
    pub i_delta: BTreeSet<usize>,
    /// Punctured channels `RM^t`.
    pub rm: BTreeSet<usize>,
    /// Accumulated one-to-one `I_Δ -> PC_Frozen` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub base: CodeConfig,
}

impl ReferenceSets {
    pub fn initial(config: &CodeConfig) -> Result<Self> {
        let rel = construct_reliability(config)?;
        let masks = select_frozen(&rel, config)?;
        Ok(Self {
            code_len: config.code_len,
            mother_len: config.mother_len,
            first_code_len: config.code_len,
            info: (0..config.mother_len).filter(|&i| masks.fr[i] == 0).collect(),
            pf_delta: BTreeSet::new(),
            i_delta: BTreeSet::new(),
            rm: (0..config.mother_len).filter(|&i| masks.rm[i] == 1).collect(),
            pairs: Vec::new(),
            base: *config,
        })
    }

    /// Frozen set `F^t = S^t \ (I^t ∪ PF_Δ^t)`.
    pub fn frozen(&self) -> BTreeSet<usize> {
        (0..self.mother_len)
            .filter(|i| !self.info.contains(i) && !self.pf_delta.contains(i))
            .collect()
    }

    /// Masks equivalent to this set description: `fr` is everything that
    /// is not information, `pc` the accumulated `PC_Frozen` channels.
    pub fn to_masks(&self) -> BitTypeMask {
        let n = self.mother_len;
        let mut masks = BitTypeMask::zeros(n);
        for i in 0..n {
            if !self.info.contains(&i) {
                masks.fr[i] = 1;
            }
            if self.rm.contains(&i) {
                masks.rm[i] = 1;
            }
            if self.pf_delta.contains(&i) {
                masks.pc[i] = 1;
            }
        }
        masks
    }

    pub fn to_lut(&self) -> Vec<Option<usize>> {
        let mut lut = vec![None; self.mother_len];
        for &(src, tgt) in &self.pairs {
            lut[src] = Some(tgt);
        }
        lut
    }
}

/// Literal steps 2-6 of the set-based scheme.
pub fn reference_update_sets(prev: &ReferenceSets, code_len: usize) -> Result<ReferenceSets> {
    if code_len <= prev.code_len {
        return Err(Error::InvalidArgument("retransmission must grow the code".into()));
    }
    let n_t = code_len.next_power_of_two();
    let delta = n_t - prev.mother_len;
    let shift = |s: &BTreeSet<usize>| -> BTreeSet<usize> { s.iter().map(|&i| i + delta).collect() };
    let info_prev = shift(&prev.info);
    let pf_prev = shift(&prev.pf_delta);
    let pairs_prev: Vec<(usize, usize)> =
        prev.pairs.iter().map(|&(a, b)| (a + delta, b + delta)).collect();

    let fresh_cfg = CodeConfig {
        mother_len: n_t,
        code_len,
        k: prev.base.k,
        crc_len: prev.base.crc_len,
        design_snr_db: prev.base.design_snr_db,
    };
    let fresh_rel = construct_reliability(&fresh_cfg)?;
    let fresh = select_frozen(&fresh_rel, &fresh_cfg)?;
    let info_star: BTreeSet<usize> =
        (0..n_t).filter(|&i| fresh.fr[i] == 0).collect();

    // New information channels: fresh info restricted to the slice
    // between lengths N^{t-1} and N^t, minus the previous info set.
    let new_region = n_t - code_len..n_t - prev.code_len;
    let i_delta: BTreeSet<usize> = info_star
        .iter()
        .copied()
        .filter(|i| new_region.contains(i) && !info_prev.contains(i))
        .collect();

    // PC_Frozen channels: the first |I_delta| previous information
    // channels no longer information in the fresh code, ascending index.
    let pf_new: Vec<usize> = info_prev
        .iter()
        .copied()
        .filter(|i| !info_star.contains(i))
        .take(i_delta.len())
        .collect();
    if pf_new.len() != i_delta.len() {
        return Err(Error::Internal("not enough PC_Frozen candidates".into()));
    }

    let mut pairs = pairs_prev;
    for (&src, &tgt) in i_delta.iter().zip(&pf_new) {
        pairs.push((src, tgt));
    }

    let mut info: BTreeSet<usize> = info_prev;
    for &p in &pf_new {
        info.remove(&p);
    }
    info.extend(i_delta.iter().copied());
    let mut pf_delta = pf_prev;
    pf_delta.extend(pf_new.iter().copied());

    Ok(ReferenceSets {
        code_len,
        mother_len: n_t,
        first_code_len: prev.first_code_len,
        info,
        pf_delta,
        i_delta,
        rm: (0..n_t).filter(|&i| fresh.rm[i] == 1).collect(),
        pairs,
        base: prev.base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_cfg(n: usize, code_len: usize, payload: usize) -> CodeConfig {
        CodeConfig { mother_len: n, code_len, k: payload, crc_len: 0, design_snr_db: 2.0 }
    }

    #[test]
    fn extend_masks_identity_when_same_length() {
        let mut m = BitTypeMask::zeros(4);
        m.fr = vec![1, 0, 1, 0];
        let out = extend_masks(&m, 4).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn extend_masks_prepends_frozen_extension() {
        let mut m = BitTypeMask::zeros(2);
        m.fr = vec![1, 0];
        m.rm = vec![1, 0];
        let out = extend_masks(&m, 4).unwrap();
        assert_eq!(out.fr, vec![1, 1, 1, 0]);
        assert_eq!(out.rm, vec![1, 1, 1, 0]);
        assert_eq!(out.pc, vec![0, 0, 0, 0]);
    }

    #[test]
    fn extend_masks_popcount_grows_by_delta() {
        let mut m = BitTypeMask::zeros(8);
        m.fr = vec![1, 1, 0, 1, 0, 0, 1, 0];
        let before: u8 = m.fr.iter().sum();
        let out = extend_masks(&m, 32).unwrap();
        let after: u8 = out.fr.iter().sum();
        assert_eq!(after as usize - before as usize, 24);
        assert!(extend_masks(&m, 4).is_err());
    }

    #[test]
    fn pc_mask_zero_budget() {
        let pc_prev = vec![0, 1, 0, 0];
        let pc = compute_pc_mask(&[0, 1, 0, 0], &pc_prev, &[1, 1, 1, 0], &[0, 0, 0, 0]);
        assert_eq!(pc, pc_prev);
    }

    #[test]
    fn pc_mask_budget_exceeds_candidates() {
        // Candidates are indices 1 and 3 (info before, frozen in fresh).
        let pc = compute_pc_mask(&[1, 0, 1, 0], &[0; 4], &[1, 1, 1, 1], &[1, 1, 1, 1]);
        assert_eq!(pc, vec![0, 1, 0, 1]);
    }

    #[test]
    fn fr_mask_carries_over_without_changes() {
        let fr_prev = vec![1, 1, 1, 0, 1, 0, 0, 0];
        let fr = compute_fr_mask(&fr_prev, &[0; 8], &[0; 8], &[0; 8], 2);
        assert_eq!(&fr[2..], &fr_prev[2..]);
        assert_eq!(&fr[..2], &[1, 1]);
    }

    #[test]
    fn build_lut_singleton() {
        let mut lut = vec![None; 12];
        build_lut(&mut lut, &[8], &[2]).unwrap();
        assert_eq!(lut[8], Some(2));
        assert!(build_lut(&mut lut, &[1, 2], &[3]).is_err());
    }

    #[test]
    fn initial_plan_has_no_routing() {
        let plan = HarqPlan::initial(&base_cfg(16, 16, 8)).unwrap();
        assert!(plan.lut.iter().all(|t| t.is_none()));
        assert!(plan.masks.pc.iter().all(|&b| b == 0));
        let (_, _, id) = plan.bit_types();
        assert!(id.iter().all(|&b| b == 0));
        plan.check_invariants().unwrap();
    }

    #[test]
    fn toy_extension_matches_oracle() {
        let cfg = base_cfg(8, 8, 4);
        let part = NodePartition::default();
        let plan1 = HarqPlan::initial(&cfg).unwrap();
        let plan2 = next_transmission(&plan1, 12, &part).unwrap();
        let sets1 = ReferenceSets::initial(&cfg).unwrap();
        let sets2 = reference_update_sets(&sets1, 12).unwrap();
        assert_eq!(plan2.masks, sets2.to_masks());
        assert_eq!(plan2.lut, sets2.to_lut());
        plan2.check_invariants().unwrap();
    }

    #[test]
    fn oracle_preserves_information_length() {
        let cfg = base_cfg(8, 8, 4);
        let mut sets = ReferenceSets::initial(&cfg).unwrap();
        assert_eq!(sets.info.len(), 4);
        sets = reference_update_sets(&sets, 16).unwrap();
        assert_eq!(sets.info.len(), 4);
        assert_eq!(sets.pairs.len(), sets.pf_delta.len());
    }

    #[test]
    fn oracle_t1_empty_deltas() {
        let sets = ReferenceSets::initial(&base_cfg(16, 12, 6)).unwrap();
        assert!(sets.pf_delta.is_empty());
        assert!(sets.i_delta.is_empty());
    }

    #[test]
    fn seven_transmission_schedule() {
        let cfg = CodeConfig {
            mother_len: 2048,
            code_len: 2048,
            k: 1024,
            crc_len: 24,
            design_snr_db: 2.0,
        };
        let part = NodePartition::default();
        let mut plan = HarqPlan::initial(&cfg).unwrap();
        for t in 2..=7 {
            plan = next_transmission(&plan, 2048 + 1024 * (t - 1), &part).unwrap();
            assert_eq!(plan.t, t);
            plan.check_invariants().unwrap();
        }
        assert_eq!(plan.code_len, 8192);
        assert_eq!(plan.mother_len, 8192);
    }

    #[test]
    fn monotone_freezing_under_extension() {
        let cfg = base_cfg(16, 16, 8);
        let part = NodePartition::default();
        let mut plan = HarqPlan::initial(&cfg).unwrap();
        for next_len in [20, 28, 40] {
            let next = next_transmission(&plan, next_len, &part).unwrap();
            let delta = next.mother_len - plan.mother_len;
            for i in 0..plan.mother_len {
                if plan.masks.fr[i] == 1 {
                    assert_eq!(next.masks.fr[i + delta], 1, "unfroze index {i}");
                }
            }
            plan = next;
        }
    }

    #[test]
    fn resolve_intra_node_swaps_pair_in_generic_node() {
        // Node span [4, 8) is generic (fr = 0,1,1,0 with a pc at 5) and
        // contains the routed pair 4 -> 5.
        let mut masks = BitTypeMask::zeros(8);
        masks.fr = vec![1, 1, 1, 1, 0, 1, 1, 0];
        masks.pc = vec![0, 0, 0, 0, 0, 1, 0, 0];
        let mut lut: Vec<Option<usize>> = vec![None; 8];
        lut[4] = Some(5);
        let part = NodePartition { min_node_size: 4, ..Default::default() };
        resolve_intra_node(&mut masks, &mut lut, &part).unwrap();
        assert_eq!(masks.fr[4], 1, "source must become Frozen_z");
        assert_eq!(masks.pc[4], 0);
        assert_eq!(masks.fr[5], 0, "target must become information");
        assert_eq!(masks.pc[5], 0);
        assert_eq!(lut[4], None);
        masks.check_invariants().unwrap();
    }

    #[test]
    fn resolve_intra_node_keeps_cross_node_pairs() {
        let mut masks = BitTypeMask::zeros(8);
        masks.fr = vec![1, 1, 0, 1, 0, 1, 1, 0];
        masks.pc = vec![0, 0, 0, 0, 0, 1, 0, 0];
        let mut lut: Vec<Option<usize>> = vec![None; 8];
        lut[2] = Some(5); // source in the left half, target in the right
        let before = (masks.clone(), lut.clone());
        let part = NodePartition { min_node_size: 4, ..Default::default() };
        resolve_intra_node(&mut masks, &mut lut, &part).unwrap();
        assert_eq!((masks, lut), before);
    }

    #[test]
    fn manifest_round_trips_types() {
        let cfg = base_cfg(8, 8, 4);
        let part = NodePartition::default();
        let plan1 = HarqPlan::initial(&cfg).unwrap();
        let plan2 = next_transmission(&plan1, 12, &part).unwrap();
        let manifest = plan2.to_manifest();
        assert_eq!(manifest.lines().count(), plan2.mother_len);
        for (i, line) in manifest.lines().enumerate() {
            let mut it = line.split_whitespace();
            assert_eq!(it.next().unwrap().parse::<usize>().unwrap(), i + 1);
            let ty = it.next().unwrap();
            assert!(["IV", "FRZ", "PC", "RM", "ID"].contains(&ty));
            let tgt: usize = it.next().unwrap().parse().unwrap();
            assert_eq!(tgt, plan2.lut[i].map_or(0, |j| j + 1));
        }
    }
}
