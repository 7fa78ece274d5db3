//! Property-based invariants across the construction, scheduling and
//! decoding layers.

use polarq_core::crc::Crc;
use polarq_core::harq::{next_transmission, HarqPlan, NodePartition};
use polarq_core::polar::{encode, CodeConfig};
use polarq_core::scl::{QuantSpec, SclDecoder};
use polarq_core::sim::{build_u, wilson_ci};
use polarq_core::Bit;
use proptest::prelude::*;

fn arb_bits(n: usize) -> impl Strategy<Value = Vec<Bit>> {
    proptest::collection::vec(0u8..2, n)
}

/// Random multi-round HARQ schedule over small codes.
fn arb_schedule() -> impl Strategy<Value = (CodeConfig, Vec<usize>)> {
    (3u32..=5, 1usize..=3).prop_flat_map(|(m, rounds)| {
        let n1 = 1usize << m;
        (2usize..=n1 / 2, proptest::collection::vec(1usize..=12, rounds)).prop_map(
            move |(k, grows)| {
                let base = CodeConfig {
                    mother_len: n1,
                    code_len: n1,
                    k,
                    crc_len: 0,
                    design_snr_db: 2.0,
                };
                let mut schedule = vec![n1];
                let mut len = n1;
                for g in grows {
                    len = (len + g).min(96);
                    if len > *schedule.last().unwrap() {
                        schedule.push(len);
                    }
                }
                (base, schedule)
            },
        )
    })
}

fn plans_for(base: &CodeConfig, schedule: &[usize]) -> Vec<HarqPlan> {
    let part = NodePartition::default();
    let mut plans = vec![HarqPlan::initial(base).unwrap()];
    for &len in &schedule[1..] {
        plans.push(next_transmission(plans.last().unwrap(), len, &part).unwrap());
    }
    plans
}

proptest! {
    #[test]
    fn encode_is_involution(u in (1u32..=7).prop_flat_map(|m| arb_bits(1 << m))) {
        prop_assert_eq!(encode(&encode(&u).unwrap()).unwrap(), u);
    }

    #[test]
    fn plan_invariants_hold_across_rounds((base, schedule) in arb_schedule()) {
        let payload = base.payload_len();
        for plan in plans_for(&base, &schedule) {
            plan.check_invariants().unwrap();
            // The information set always carries exactly the payload.
            let info = plan.masks.fr.iter().filter(|&&b| b == 0).count();
            prop_assert_eq!(info, payload);
            prop_assert_eq!(plan.payload_idx.len(), payload);
            // Bit types partition every index.
            let (iv, fr_z, _) = plan.bit_types();
            for i in 0..plan.mother_len {
                prop_assert_eq!(iv[i] + fr_z[i] + plan.masks.pc[i], 1);
            }
            // Punctured head matches the code length.
            let punct = plan.masks.rm.iter().filter(|&&b| b == 1).count();
            prop_assert_eq!(punct, plan.mother_len - plan.code_len);
        }
    }

    #[test]
    fn transmitted_prefix_never_changes(
        (base, schedule) in arb_schedule(),
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let payload: Vec<Bit> = (0..base.payload_len()).map(|_| rng.gen_range(0..2)).collect();
        let mut prev: Option<Vec<Bit>> = None;
        for plan in plans_for(&base, &schedule) {
            let x = encode(&build_u(&plan, &payload).unwrap()).unwrap();
            let sent = x[plan.mother_len - plan.code_len..].to_vec();
            if let Some(p) = &prev {
                prop_assert_eq!(&sent[sent.len() - p.len()..], p.as_slice());
            }
            prev = Some(sent);
        }
    }

    #[test]
    fn decoded_paths_respect_bit_structure(
        (base, schedule) in arb_schedule(),
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let quant = QuantSpec { qe: 5, qi: 14, qm: 20 };
        let dec = SclDecoder::new(4, quant).unwrap();
        let crc = Crc::new(0).unwrap();
        let plan = plans_for(&base, &schedule).pop().unwrap();
        let llr: Vec<i32> = (0..plan.mother_len)
            .map(|i| if plan.masks.rm[i] == 1 { 0 } else { rng.gen_range(-15..=15) })
            .collect();
        let out = dec.decode(&plan, &llr, &crc).unwrap();
        for i in 0..plan.mother_len {
            if plan.masks.fr[i] == 1 && plan.masks.pc[i] == 0 {
                prop_assert_eq!(out.u_hat[i], 0, "frozen-zero bit {} decoded as 1", i);
            }
            if let Some(t) = plan.lut[i] {
                prop_assert_eq!(out.u_hat[t], out.u_hat[i], "routing {} -> {} violated", i, t);
            }
        }
        // Decoding the clean codeword of any message returns it exactly.
        let payload: Vec<Bit> = (0..base.payload_len()).map(|_| rng.gen_range(0..2)).collect();
        let x = encode(&build_u(&plan, &payload).unwrap()).unwrap();
        let ext = quant.ext_max();
        let clean: Vec<i32> = (0..plan.mother_len)
            .map(|i| {
                if plan.masks.rm[i] == 1 {
                    0
                } else if x[i] == 0 {
                    ext
                } else {
                    -ext
                }
            })
            .collect();
        let out = dec.decode(&plan, &clean, &crc).unwrap();
        prop_assert_eq!(out.payload, payload);
    }

    #[test]
    fn wilson_ci_is_sane(errors in 0usize..=500, extra in 0usize..=5000) {
        let n = errors + extra + 1;
        let (lo, hi) = wilson_ci(errors, n, 1.96);
        let p = errors as f64 / n as f64;
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!((0.0..=1.0).contains(&hi));
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
    }

    #[test]
    fn quantizer_stays_in_range(v in -1e6f64..1e6, qe in 2u32..=8) {
        let q = QuantSpec { qe, qi: qe.max(6), qm: 11 };
        let out = q.quantize_external(v);
        prop_assert!(out.abs() <= q.ext_max());
        if v >= 1.0 {
            prop_assert!(out >= 1 || q.ext_max() < 1);
        }
    }
}
