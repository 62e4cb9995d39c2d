//! Randomized test networks.

#![allow(dead_code)]

use gridflow_core::network::{Branch, Bus, BusKind, Network};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// A connected network with `n` buses: bus 1 is the slack, roughly a third of
/// the rest are PV. A random spanning tree is topped up with extra lines.
pub fn random_network(seed: u64, n: usize) -> Network {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut buses = Vec::with_capacity(n);
    for i in 1..=n as u32 {
        let kind = if i == 1 {
            BusKind::Slack
        } else if rng.gen_bool(0.3) {
            BusKind::PV
        } else {
            BusKind::PQ
        };
        let mut b = Bus::new(i, kind, 138.0);
        match kind {
            BusKind::Slack => b.v_setpoint = rng.gen_range(0.98..1.05),
            BusKind::PV => {
                b.v_setpoint = rng.gen_range(0.98..1.05);
                b.p_gen = rng.gen_range(0.1..0.8);
            }
            BusKind::PQ => {}
        }
        b.p_load = rng.gen_range(0.0..0.6);
        b.q_load = rng.gen_range(0.0..0.25);
        buses.push(b);
    }
    let mut branches = Vec::new();
    let add = |rng: &mut StdRng, f: u32, t: u32, branches: &mut Vec<Branch>| {
        if branches.iter().any(|b: &Branch| {
            (b.from_bus.0, b.to_bus.0) == (f, t) || (b.from_bus.0, b.to_bus.0) == (t, f)
        }) {
            return;
        }
        let r = rng.gen_range(0.002..0.03);
        let x = rng.gen_range(0.02..0.15);
        let b = rng.gen_range(0.0..0.3);
        branches.push(Branch::line(f, t, r, x, b, 0.0));
    };
    for i in 2..=n as u32 {
        let parent = rng.gen_range(1..i);
        add(&mut rng, parent, i, &mut branches);
    }
    for _ in 0..n / 2 {
        let f = rng.gen_range(1..=n as u32);
        let t = rng.gen_range(1..=n as u32);
        if f != t {
            add(&mut rng, f, t, &mut branches);
        }
    }
    Network {
        name: format!("random-{seed}"),
        s_base: 100.0,
        buses,
        branches,
        shunts: vec![],
    }
}
