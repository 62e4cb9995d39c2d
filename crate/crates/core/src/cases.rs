//! Built-in test cases.

use alloc::string::String;
use alloc::vec;

use crate::fault::{GeneratorSequence, SequenceData};
use crate::network::{Branch, Bus, BusKind, Network};

/// Five-bus, two-generator study system (100 MVA base; 15 kV generator buses
/// 1 and 3, 345 kV network buses 2, 4 and 5).
///
/// Bus 3 regulates to 1.05 pu. Transformers are listed from their 345 kV
/// terminal so that an off-nominal tap above 1.0 raises the network voltage.
pub fn glover5() -> Network {
    let mut b1 = Bus::new(1, BusKind::Slack, 15.0);
    b1.v_setpoint = 1.0;
    let mut b2 = Bus::new(2, BusKind::PQ, 345.0);
    b2.p_load = 8.0;
    b2.q_load = 2.8;
    let mut b3 = Bus::new(3, BusKind::PV, 15.0);
    b3.v_setpoint = 1.05;
    b3.p_gen = 5.2;
    b3.p_load = 0.8;
    b3.q_load = 0.4;
    b3.q_gen_max = Some(4.0);
    b3.q_gen_min = Some(-2.8);
    let b4 = Bus::new(4, BusKind::PQ, 345.0);
    let b5 = Bus::new(5, BusKind::PQ, 345.0);

    Network {
        name: String::from("glover5"),
        s_base: 100.0,
        buses: vec![b1, b2, b3, b4, b5],
        branches: vec![
            Branch::transformer(5, 1, 0.0015, 0.02, 6.0),
            Branch::transformer(4, 3, 0.00075, 0.01, 10.0),
            Branch::line(2, 4, 0.009, 0.1, 1.72, 12.0),
            Branch::line(2, 5, 0.0045, 0.05, 0.88, 12.0),
            Branch::line(4, 5, 0.00225, 0.025, 0.44, 12.0),
        ],
        shunts: vec![],
    }
}

/// Generator sequence data for [`glover5`]: both machines `X'' = X2 = 0.12`,
/// `X0 = 0.05`, solidly grounded wye.
pub fn glover5_sequence() -> SequenceData {
    SequenceData {
        generators: vec![
            GeneratorSequence::solidly_grounded(1, 0.12, 0.12, 0.05),
            GeneratorSequence::solidly_grounded(3, 0.12, 0.12, 0.05),
        ],
        transformers: vec![],
    }
}
