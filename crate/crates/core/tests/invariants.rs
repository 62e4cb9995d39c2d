mod common;

use gridflow_core::cases::glover5;
use gridflow_core::network::{BranchKey, BusKind, Network, ShuntDevice};
use gridflow_core::powerflow::{
    jacobian, power_injections, solve_power_flow, BusPartition, Schedule, SolveOptions, StateVector,
};
use gridflow_core::scenario::{
    apply_actions, load_shed_sweep, run_scenario, shed_action, shunt_sweep, Action, Baseline, Sequential,
};
use gridflow_core::ybus::{build_ybus, Sequence};
use gridflow_core::{BusId, Error};
use proptest::prelude::*;

/// Relabels bus `i` (by position) as `labels[i]` and stores buses in the order
/// given by `order`.
fn renumber(net: &Network, labels: &[u32], order: &[usize]) -> Network {
    let map = |id: BusId| BusId(labels[net.bus_position(id).unwrap()]);
    let mut out = net.clone();
    out.buses = order
        .iter()
        .map(|&i| {
            let mut b = net.buses[i].clone();
            b.id = BusId(labels[i]);
            b
        })
        .collect();
    for br in &mut out.branches {
        br.from_bus = map(br.from_bus);
        br.to_bus = map(br.to_bus);
    }
    for sh in &mut out.shunts {
        sh.bus = map(sh.bus);
    }
    out
}

fn max_scheduled_gap(net: &Network, kinds: &[BusKind], state: &StateVector) -> f64 {
    let y = build_ybus(net, Sequence::Positive).unwrap();
    let inj = power_injections(&y, state).unwrap();
    let sched = Schedule::from_network(net);
    let mut worst: f64 = 0.0;
    for (i, kind) in kinds.iter().enumerate() {
        match kind {
            BusKind::Slack => {}
            BusKind::PV => worst = worst.max((inj.p[i] - sched.p[i]).abs()),
            BusKind::PQ => {
                worst = worst.max((inj.p[i] - sched.p[i]).abs()).max((inj.q[i] - sched.q[i]).abs());
            }
        }
    }
    worst
}

#[test]
fn glover5_satisfies_power_equations_from_scratch() {
    let net = glover5();
    let sol = solve_power_flow(&net, &SolveOptions::default()).unwrap();
    assert!(max_scheduled_gap(&net, &sol.final_kinds, &sol.state()) < 1e-6);
}

#[test]
fn jacobian_matches_differences_at_every_iterate() {
    let net = glover5();
    let y = build_ybus(&net, Sequence::Positive).unwrap();
    let part = BusPartition::from_network(&net).unwrap();
    let full = solve_power_flow(&net, &SolveOptions::default()).unwrap();
    for k in 1..full.iterations {
        let opts = SolveOptions {
            max_iterations: k,
            ..SolveOptions::default()
        };
        let state = match solve_power_flow(&net, &opts) {
            Err(Error::NonConvergence(nc)) => nc.last_state,
            other => panic!("iterate {k}: {other:?}"),
        };
        let jac = jacobian(&y, &state, &part);
        let x0 = state.unknowns(&part);
        let h = 1e-6;
        for col in 0..x0.len() {
            let (mut sp, mut sm) = (state.clone(), state.clone());
            let (mut xp, mut xm) = (x0.clone(), x0.clone());
            xp[col] += h;
            xm[col] -= h;
            sp.set_unknowns(&part, &xp);
            sm.set_unknowns(&part, &xm);
            let (ip, im) = (power_injections(&y, &sp).unwrap(), power_injections(&y, &sm).unwrap());
            let rows: Vec<f64> = part
                .angle_buses
                .iter()
                .map(|&i| (ip.p[i] - im.p[i]) / (2.0 * h))
                .chain(part.magnitude_buses.iter().map(|&i| (ip.q[i] - im.q[i]) / (2.0 * h)))
                .collect();
            for (row, fd) in rows.iter().enumerate() {
                let an = jac.matrix[(row, col)];
                assert!((an - fd).abs() <= 1e-5 * fd.abs().max(1.0), "iterate {k} J[{row},{col}]");
            }
        }
    }
}

#[test]
fn sweep_points_equal_standalone_runs() {
    let base = Baseline::new(glover5(), SolveOptions::default()).unwrap();
    let qs = [0.0, 0.5, 1.9, 3.0];
    let sweep = shunt_sweep(&base, BusId(2), &qs, &Sequential).unwrap();
    for p in &sweep {
        let acts = if p.parameter == 0.0 {
            vec![]
        } else {
            vec![Action::AddShunt(ShuntDevice::new(2, p.parameter))]
        };
        let alone = run_scenario(&base, "shunt sweep", &acts).unwrap();
        assert_eq!(p.report, alone);
    }
}

#[test]
fn shed_voltage_is_non_decreasing_after_outage() {
    let net = apply_actions(&glover5(), &[Action::RemoveBranch(BranchKey::new(2, 5, 1))]).unwrap();
    let base = Baseline::new(net, SolveOptions::default()).unwrap();
    let sweep = load_shed_sweep(&base, BusId(2), 0.95, 1.0).unwrap();
    let converged: Vec<f64> = sweep.evaluated.iter().filter_map(|p| p.v_mag).collect();
    assert!(converged.len() >= 3);
    assert!(converged.windows(2).all(|w| w[1] >= w[0]), "{converged:?}");

    let dense: Vec<f64> = (60..=100)
        .step_by(2)
        .filter_map(|pct| {
            run_scenario(&base, "shed", &[shed_action(BusId(2), pct as f64)])
                .unwrap()
                .outcome
                .v_mag_at(BusId(2))
        })
        .collect();
    assert!(dense.windows(2).all(|w| w[1] >= w[0]), "{dense:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn renumbering_buses_leaves_voltages_unchanged(seed in 0u64..500, n in 3usize..9, shuffle in any::<u64>()) {
        let net = common::random_network(seed, n);
        let Ok(sol) = solve_power_flow(&net, &SolveOptions::default()) else { return Ok(()) };
        let mut rng = <rand::rngs::StdRng as rand::SeedableRng>::seed_from_u64(shuffle);
        let mut labels: Vec<u32> = (0..n as u32).map(|i| 100 + 7 * i).collect();
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let moved = renumber(&net, &labels, &order);
        let sol2 = solve_power_flow(&moved, &SolveOptions::default()).unwrap();
        for (i, b) in net.buses.iter().enumerate() {
            let a = sol.voltage(b.id).unwrap();
            let c = sol2.voltage(BusId(labels[i])).unwrap();
            prop_assert!((a - c).norm() <= 1e-9, "bus {}: {a} vs {c}", b.id);
        }
    }

    #[test]
    fn converged_states_reproduce_the_schedule(seed in 0u64..500, n in 3usize..9) {
        let net = common::random_network(seed, n);
        if let Ok(sol) = solve_power_flow(&net, &SolveOptions::default()) {
            prop_assert!(max_scheduled_gap(&net, &sol.final_kinds, &sol.state()) <= 1e-6);
        }
    }

    #[test]
    fn scenarios_never_touch_the_base(q in 0.1f64..4.0, factor in 0.0f64..1.5, ratio in 0.9f64..1.1) {
        let base = Baseline::new(glover5(), SolveOptions::default()).unwrap();
        let before = base.clone();
        let acts = [
            Action::AddShunt(ShuntDevice::new(2, q)),
            Action::ScaleLoad { bus: BusId(2), factor },
            Action::SetTap { key: BranchKey::new(5, 1, 1), ratio },
        ];
        let _ = run_scenario(&base, "p", &acts).unwrap();
        let _ = run_scenario(&base, "p", &[Action::RemoveBranch(BranchKey::new(2, 4, 1))]).unwrap();
        prop_assert_eq!(base, before);
    }
}
