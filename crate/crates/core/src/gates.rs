//! Closed-form NAND-equivalent cost, memory and latency model of the
//! HARQ-enabled SCL decoder. Analytic functions only; no synthesis.

use crate::{Error, Result};

/// Primitive gate costs and latencies in NAND-equivalent units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateModel {
    pub not_cost: u64,
    pub and_cost: u64,
    pub or_cost: u64,
    pub nor_cost: u64,
    pub xor_cost: u64,
    pub not_latency: u64,
    pub and_latency: u64,
    pub or_latency: u64,
    pub nor_latency: u64,
    pub xor_latency: u64,
    pub mux2_cost: u64,
    pub mux2_latency: u64,
    /// Comparison of two 6-bit signed-magnitude fixed-point numbers.
    pub comparator6_cost: u64,
    pub half_adder_cost: u64,
}

impl Default for GateModel {
    fn default() -> Self {
        Self {
            not_cost: 1,
            and_cost: 2,
            or_cost: 3,
            nor_cost: 4,
            xor_cost: 4,
            not_latency: 1,
            and_latency: 2,
            or_latency: 2,
            nor_latency: 3,
            xor_latency: 3,
            mux2_cost: 4,
            mux2_latency: 3,
            comparator6_cost: 45,
            half_adder_cost: 6,
        }
    }
}

fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

/// Memory (bits) of data and control signals for plain SCL decoding.
pub fn mem_scl(n: u64, l: u64, qe: u64, qi: u64, qm: u64) -> u64 {
    n * qe + (n - 1) * l * qi + l * qm + (2 * n - 1) * l + 2 * n
}

/// Memory (bits) for the HARQ-enabled SCL decoder.
pub fn mem_scl_harq(n: u64, l: u64, qe: u64, qi: u64, qm: u64) -> u64 {
    n * qe + (n - 1) * l * qi + l * qm + 3 * n + (2 * n - 1) * l + l * n + n * ceil_log2(n)
}

/// HARQ memory overhead in bits: `(L + 1 + ceil(log2 N)) * N`.
pub fn mem_overhead(n: u64, l: u64) -> u64 {
    (l + 1 + ceil_log2(n)) * n
}

/// Overhead as a fraction of the plain-SCL memory.
pub fn mem_overhead_ratio(n: u64, l: u64, qe: u64, qi: u64, qm: u64) -> f64 {
    mem_overhead(n, l) as f64 / mem_scl(n, l, qe, qi, qm) as f64
}

/// Per-node NAND counts of the four HARQ operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGateCosts {
    pub ascend: u64,
    pub candidates: u64,
    pub descend: u64,
    pub routing: u64,
}

/// Multiplexer-tree size for selecting among `i` inputs, in 2-input MUXes.
fn mux_tree(i: u64) -> u64 {
    (1u64 << ceil_log2(i)) * ceil_log2(i)
}

/// Gate costs of the HARQ node operations for a node of `n_v = 2^s` bits
/// starting at 1-based leaf index `sp`.
///
/// The routing sum runs over the printed bounds `i = sp ..= sp + 2^s`;
/// a degenerate index `i = 0` contributes nothing.
pub fn gate_costs_node(n_v: u64, l: u64, l_a: u64, sp: u64, s: u32) -> Result<NodeGateCosts> {
    if n_v != 1u64 << s {
        return Err(Error::InvalidArgument(format!("n_v {n_v} != 2^{s}")));
    }
    let ascend = 4 * (n_v / 2) * ceil_log2(n_v);
    let candidates = 4 * l_a * l;
    let routing: u64 = (sp..=sp + n_v).filter(|&i| i > 0).map(mux_tree).sum::<u64>() * 4;
    Ok(NodeGateCosts { ascend, candidates, descend: ascend, routing })
}

/// Bitonic-sorter cost for selecting among `l * l_a` forked paths.
pub fn gate_sorter(l: u64, l_a: u64, q_pm: u64) -> Result<u64> {
    let n = l * l_a;
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "bitonic sorter needs a power-of-two input count, got {n}"
        )));
    }
    let log = ceil_log2(n);
    let comparator = GateModel::default().comparator6_cost;
    Ok((n / 4) * log * (log + 1) * q_pm * comparator)
}

/// Cascaded-half-adder accumulator cost for the running sum over `n` bits.
pub fn gate_accumulator(n: u64) -> Result<u64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("accumulator needs n >= 3, got {n}")));
    }
    let ha = GateModel::default().half_adder_cost;
    let sum: u64 = (3..=n).map(|i| ceil_log2(i + 1) * ha).sum();
    Ok(sum + ha)
}

/// Latency of the HARQ node operations in NAND units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeLatency {
    pub ascend: u64,
    pub candidates: u64,
    pub descend: u64,
    pub routing: u64,
}

pub fn latency_node(n_v: u64, n: u64) -> NodeLatency {
    let pass = 4 * ceil_log2(n_v);
    NodeLatency { ascend: pass, candidates: pass, descend: pass, routing: 3 * ceil_log2(n) }
}
