mod common;

use common::random::random_network;
use gridflow::case_file::{parse_case, parse_case_unchecked, serialize_case, CaseFile, GLOVER5_JSON};
use gridflow_core::fault::{GeneratorSequence, SequenceData, TransformerConnection, TransformerSequence};
use gridflow_core::network::{Branch, BusId, ShuntDevice, ZeroSeqPath};
use gridflow_core::Complex;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_case(seed: u64, n: usize) -> CaseFile {
    let mut net = random_network(seed, n);
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    for b in &mut net.buses {
        b.angle_setpoint = rng.gen_range(-0.5..0.5);
        b.base_kv = [13.8, 138.0, 345.0][rng.gen_range(0..3)];
        if rng.gen_bool(0.3) {
            b.q_gen_min = Some(rng.gen_range(-2.0..0.0));
            b.q_gen_max = Some(rng.gen_range(0.0..3.0));
        }
    }
    for br in &mut net.branches {
        br.mva_limit = rng.gen_range(0.5..20.0);
        br.g_shunt = if rng.gen_bool(0.2) { rng.gen_range(0.0..0.01) } else { 0.0 };
        if rng.gen_bool(0.3) {
            br.zero_seq_path = ZeroSeqPath::Open;
        }
        if rng.gen_bool(0.2) {
            br.in_service = false;
        }
    }
    let mut xf = Branch::transformer(1, 2, 0.001, 0.05, 5.0)
        .with_circuit(9)
        .with_tap(rng.gen_range(0.9..1.1));
    xf.phase_shift = rng.gen_range(-0.2..0.2);
    net.branches.push(xf.clone());
    net.shunts.push(ShuntDevice::new(2, rng.gen_range(0.1..3.0)));
    if rng.gen_bool(0.5) {
        let mut off = ShuntDevice::new(1, 0.5);
        off.in_service = false;
        net.shunts.push(off);
    }
    let sequence = rng.gen_bool(0.7).then(|| SequenceData {
        generators: vec![GeneratorSequence {
            bus: BusId(1),
            x_sub: rng.gen_range(0.05..0.3),
            x_neg: rng.gen_range(0.05..0.3),
            x_zero: rng.gen_range(0.01..0.1),
            z_neutral: Complex::new(rng.gen_range(0.0..0.1), rng.gen_range(0.0..0.1)),
            grounded: rng.gen_bool(0.8),
        }],
        transformers: vec![TransformerSequence {
            key: xf.key(),
            connection: if rng.gen_bool(0.5) {
                TransformerConnection::YgYg
            } else {
                TransformerConnection::Other
            },
            z_neutral: Complex::new(0.0, rng.gen_range(0.0..0.1)),
        }],
    });
    CaseFile {
        network: net,
        notes: (0..rng.gen_range(0..3)).map(|i| format!("note {i}")).collect(),
        sequence,
    }
}

/// Degree conversion may move angles by an ulp; snap them back before
/// comparing everything else exactly.
fn snap_angles(parsed: &mut CaseFile, original: &CaseFile) {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-14 * a.abs().max(1.0);
    for (p, o) in parsed.network.buses.iter_mut().zip(&original.network.buses) {
        assert!(close(p.angle_setpoint, o.angle_setpoint));
        p.angle_setpoint = o.angle_setpoint;
    }
    for (p, o) in parsed.network.branches.iter_mut().zip(&original.network.branches) {
        assert!(close(p.phase_shift, o.phase_shift));
        p.phase_shift = o.phase_shift;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_inverts_serialize(seed in any::<u64>(), n in 2usize..9) {
        let case = random_case(seed, n);
        let text = serialize_case(&case);
        let mut back = parse_case_unchecked(&text).unwrap();
        snap_angles(&mut back, &case);
        prop_assert_eq!(&back, &case);
    }

    #[test]
    fn validation_never_panics(
        values in prop::collection::vec(prop_oneof![Just(0.0), Just(-1.0), Just(1e300), -5.0f64..5.0], 12),
        ids in prop::collection::vec(0u32..8, 6),
    ) {
        let mut doc: serde_json::Value = serde_json::from_str(GLOVER5_JSON).unwrap();
        let fields = ["r", "x", "b_charging", "mva_limit", "tap"];
        for (k, v) in values.iter().enumerate() {
            let br = &mut doc["branches"][k % 5];
            br[fields[k % fields.len()]] = serde_json::json!(v);
        }
        for (k, id) in ids.iter().enumerate() {
            if k % 2 == 0 {
                doc["buses"][k % 5]["id"] = serde_json::json!(id);
            } else {
                doc["branches"][k % 5]["to_bus"] = serde_json::json!(id);
            }
        }
        doc["buses"][1]["v_setpoint"] = serde_json::json!(values[0]);
        let text = serde_json::to_string(&doc).unwrap();
        let parsed = parse_case_unchecked(&text).unwrap();
        let report = parsed.network.validate();
        prop_assert_eq!(report.is_ok(), parse_case(&text).is_ok());
    }
}

#[test]
fn bundled_case_round_trips() {
    let case = parse_case(GLOVER5_JSON).unwrap();
    let text = serialize_case(&case);
    assert_eq!(parse_case(&text).unwrap(), case);
}
