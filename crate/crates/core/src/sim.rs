//! QPSK/AWGN link simulation and HARQ session orchestration.
//!
//! Frames are simulated independently with a counter-based RNG stream
//! per frame, so results are bit-reproducible for a given seed no matter
//! how many worker threads run.

use crate::crc::Crc;
use crate::harq::{next_transmission, HarqPlan, NodePartition};
use crate::polar::{encode, CodeConfig};
use crate::scl::{QuantSpec, SclDecoder};
use crate::{Bit, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Per-dimension noise standard deviation for a given Es/N0 in dB, with
/// unit symbol energy.
pub fn esn0_to_sigma(esn0_db: f64) -> f64 {
    (1.0 / (2.0 * 10f64.powf(esn0_db / 10.0))).sqrt()
}

/// QPSK amplitude per dimension (Gray mapping, Es = 1).
pub const QPSK_AMP: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Gray-maps bit pairs onto unit-energy QPSK symbols.
pub fn qpsk_modulate(bits: &[Bit]) -> Result<Vec<(f64, f64)>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "QPSK needs an even bit count, got {}",
            bits.len()
        )));
    }
    Ok(bits
        .chunks(2)
        .map(|p| {
            let map = |b: Bit| QPSK_AMP * (1.0 - 2.0 * b as f64);
            (map(p[0]), map(p[1]))
        })
        .collect())
}

/// Adds white Gaussian noise with per-dimension deviation `sigma`.
pub fn awgn(symbols: &[(f64, f64)], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite");
    symbols
        .iter()
        .map(|&(i, q)| (i + normal.sample(rng), q + normal.sample(rng)))
        .collect()
}

/// Per-bit channel LLRs `2 * a * y / sigma^2`, two per symbol.
pub fn qpsk_llr(received: &[(f64, f64)], sigma: f64) -> Vec<f64> {
    let scale = 2.0 * QPSK_AMP / (sigma * sigma);
    received.iter().flat_map(|&(i, q)| [scale * i, scale * q]).collect()
}

/// Mother-code-aligned frame of quantized channel LLRs, accumulated
/// across HARQ transmissions. Punctured positions stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrBuffer {
    llr: Vec<i32>,
    filled: Vec<bool>,
}

impl LlrBuffer {
    pub fn new(mother_len: usize) -> Self {
        Self { llr: vec![0; mother_len], filled: vec![false; mother_len] }
    }

    pub fn len(&self) -> usize {
        self.llr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llr.is_empty()
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.llr
    }

    /// Re-aligns the buffer to a larger mother code: previously received
    /// values keep their position relative to the code tail.
    pub fn grow(&mut self, mother_len: usize) -> Result<()> {
        if mother_len < self.llr.len() {
            return Err(Error::InvalidArgument("LLR buffer cannot shrink".into()));
        }
        let delta = mother_len - self.llr.len();
        self.llr.splice(0..0, std::iter::repeat_n(0, delta));
        self.filled.splice(0..0, std::iter::repeat_n(false, delta));
        Ok(())
    }

    /// Stores one received chunk. Filling a position twice is a bug in
    /// the caller's scheduling.
    pub fn fill(&mut self, start: usize, values: &[i32]) -> Result<()> {
        if start + values.len() > self.llr.len() {
            return Err(Error::InvalidArgument("LLR chunk out of range".into()));
        }
        for (off, &v) in values.iter().enumerate() {
            let i = start + off;
            if self.filled[i] {
                return Err(Error::Internal(format!("LLR position {i} filled twice")));
            }
            self.filled[i] = true;
            self.llr[i] = v;
        }
        Ok(())
    }
}

/// Builds the encoder input for one transmission: payload at the
/// information positions, routed copies at `I_Δ` sources, zeros at
/// zero-valued frozen positions.
pub fn build_u(plan: &HarqPlan, payload: &[Bit]) -> Result<Vec<Bit>> {
    if payload.len() != plan.payload_idx.len() {
        return Err(Error::InvalidArgument(format!(
            "payload length {} != {}",
            payload.len(),
            plan.payload_idx.len()
        )));
    }
    let mut u = vec![0u8; plan.mother_len];
    for (&pos, &b) in plan.payload_idx.iter().zip(payload) {
        u[pos] = b;
    }
    // Routing targets sit above their sources, so a reverse sweep
    // resolves chained copies in one pass.
    for src in (0..plan.mother_len).rev() {
        if let Some(tgt) = plan.lut[src] {
            u[src] = u[tgt];
        }
    }
    Ok(u)
}

/// Full HARQ Monte-Carlo session parameters at one operating point.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    /// First-transmission code; later entries of `schedule` extend it.
    pub base: CodeConfig,
    /// Code length after each transmission, starting with the first.
    pub schedule: Vec<usize>,
    pub esn0_db: f64,
    /// Monte-Carlo frame budget.
    pub frames: usize,
    /// Stop early once this many frames failed all transmissions
    /// (0 disables the rule). Checked at batch granularity, so results
    /// stay reproducible for a given configuration.
    pub stop_errors: usize,
    pub seed: u64,
    pub quant: QuantSpec,
    pub list_size: usize,
    pub partition: NodePartition,
    pub fast: bool,
    pub crc_aided: bool,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.quant.validate()?;
        self.partition.validate()?;
        if self.frames == 0 || self.list_size == 0 {
            return Err(Error::InvalidArgument("frames and list size must be positive".into()));
        }
        match self.schedule.first() {
            Some(&first) if first == self.base.code_len => {}
            _ => {
                return Err(Error::InvalidArgument(
                    "schedule must start with the base code length".into(),
                ))
            }
        }
        if !self.schedule.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("schedule must be strictly increasing".into()));
        }
        Ok(())
    }

    /// The per-transmission plans for this schedule.
    pub fn plans(&self) -> Result<Vec<HarqPlan>> {
        let mut plans = vec![HarqPlan::initial(&self.base)?];
        for &len in &self.schedule[1..] {
            let next = next_transmission(plans.last().unwrap(), len, &self.partition)?;
            plans.push(next);
        }
        Ok(plans)
    }
}

/// Session outcome: per-transmission residual frame-error statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub frames: usize,
    /// Frames still undecoded after each transmission.
    pub errors_per_tx: Vec<usize>,
    /// CRC-passing decodes whose payload was nevertheless wrong.
    pub undetected: usize,
    /// Effective information rate `k / N_t` per transmission.
    pub rates_per_tx: Vec<f64>,
    /// Mean transmissions needed per frame (undecoded frames count the
    /// full schedule).
    pub avg_tx: f64,
}

impl SessionResult {
    pub fn fer(&self, t: usize) -> f64 {
        self.errors_per_tx[t] as f64 / self.frames as f64
    }

    /// Wilson 95% interval half-width of the FER after transmission `t`.
    pub fn ci_halfwidth(&self, t: usize) -> f64 {
        let (lo, hi) = wilson_ci(self.errors_per_tx[t], self.frames, 1.96);
        (hi - lo) / 2.0
    }
}

/// Wilson score interval for `errors` out of `n` Bernoulli trials.
pub fn wilson_ci(errors: usize, n: usize, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = errors as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Outcome of one simulated frame.
struct FrameOutcome {
    /// Transmission index (0-based) of the first successful decode.
    success_at: Option<usize>,
    undetected: bool,
}

fn simulate_frame(
    cfg: &SessionConfig,
    plans: &[HarqPlan],
    dec: &SclDecoder,
    crc: &Crc,
    frame: u64,
) -> Result<FrameOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(frame + 1);
    let msg: Vec<Bit> = (0..cfg.base.k).map(|_| rng.gen_range(0..2)).collect();
    let payload = crc.attach(&msg);
    let sigma = esn0_to_sigma(cfg.esn0_db);
    let mut buffer = LlrBuffer::new(plans[0].mother_len);
    let mut prev_code_len = 0usize;
    for (t, plan) in plans.iter().enumerate() {
        buffer.grow(plan.mother_len)?;
        let u = build_u(plan, &payload)?;
        let x = encode(&u)?;
        let start = plan.mother_len - plan.code_len;
        let end = plan.mother_len - prev_code_len;
        let chunk = &x[start..end];
        let tx = awgn(&qpsk_modulate(chunk)?, sigma, &mut rng);
        let quantized: Vec<i32> =
            qpsk_llr(&tx, sigma).iter().map(|&v| cfg.quant.quantize_external(v)).collect();
        buffer.fill(start, &quantized)?;
        prev_code_len = plan.code_len;
        let out = dec.decode(plan, buffer.as_slice(), crc)?;
        if out.crc_ok {
            if out.payload == payload {
                return Ok(FrameOutcome { success_at: Some(t), undetected: false });
            }
            return Ok(FrameOutcome { success_at: None, undetected: true });
        }
    }
    Ok(FrameOutcome { success_at: None, undetected: false })
}

/// Runs the Monte-Carlo HARQ session, frame-parallel and deterministic
/// for a given seed.
pub fn run_harq_session(cfg: &SessionConfig) -> Result<SessionResult> {
    cfg.validate()?;
    let plans = cfg.plans()?;
    let crc = Crc::new(cfg.base.crc_len)?;
    let mut dec = SclDecoder::new(cfg.list_size, cfg.quant)?;
    dec.fast = cfg.fast;
    dec.crc_aided = cfg.crc_aided;
    dec.partition = cfg.partition;
    let txs = plans.len();
    let batch = 512usize;
    let mut outcomes: Vec<FrameOutcome> = Vec::with_capacity(cfg.frames);
    while outcomes.len() < cfg.frames {
        let take = batch.min(cfg.frames - outcomes.len());
        let start = outcomes.len() as u64;
        let chunk: Vec<FrameOutcome> = (start..start + take as u64)
            .into_par_iter()
            .map(|f| simulate_frame(cfg, &plans, &dec, &crc, f))
            .collect::<Result<Vec<_>>>()?;
        outcomes.extend(chunk);
        if cfg.stop_errors > 0 {
            let residual = outcomes.iter().filter(|o| o.success_at.is_none()).count();
            if residual >= cfg.stop_errors {
                break;
            }
        }
    }
    let mut errors_per_tx = vec![0usize; txs];
    let mut undetected = 0usize;
    for o in &outcomes {
        if o.undetected {
            undetected += 1;
        }
        for (t, e) in errors_per_tx.iter_mut().enumerate() {
            let ok = matches!(o.success_at, Some(s) if s <= t);
            if !ok {
                *e += 1;
            }
        }
    }
    let rates_per_tx =
        plans.iter().map(|p| cfg.base.k as f64 / p.code_len as f64).collect();
    let total_tx: usize =
        outcomes.iter().map(|o| o.success_at.map_or(txs, |s| s + 1)).sum();
    Ok(SessionResult {
        frames: outcomes.len(),
        errors_per_tx,
        undetected,
        rates_per_tx,
        avg_tx: total_tx as f64 / outcomes.len() as f64,
    })
}
