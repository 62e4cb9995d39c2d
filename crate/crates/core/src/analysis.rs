//! Quantities derived from a converged power flow.

use alloc::vec::Vec;

use crate::network::{BranchKey, BranchKind, BusId, BusKind, Network, ShuntDevice};
use crate::numerics::Complex;
use crate::powerflow::PowerFlowSolution;
use crate::Error;

/// Complex power entering a branch at each terminal, per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchFlow {
    pub key: BranchKey,
    pub kind: BranchKind,
    pub s_from: Complex,
    pub s_to: Complex,
    /// `s_from + s_to`.
    pub loss: Complex,
    /// `100 * max(|s_from|, |s_to|) / limit`; `None` when the branch has no
    /// MVA limit.
    pub loading_pct: Option<f64>,
}

/// Pi-model terminal flows for every in-service branch, using the same
/// stamping as the admittance matrix.
pub fn branch_flows(network: &Network, solution: &PowerFlowSolution) -> Result<Vec<BranchFlow>, Error> {
    let v = solution.voltages();
    let mut out = Vec::with_capacity(network.branches.len());
    for br in network.branches.iter().filter(|b| b.in_service) {
        let f = solution.index_of(br.from_bus).ok_or(Error::UnknownBus(br.from_bus))?;
        let t = solution.index_of(br.to_bus).ok_or(Error::UnknownBus(br.to_bus))?;
        let y = Complex::new(br.r, br.x).inv();
        let half = Complex::new(br.g_shunt, br.b_charging) * 0.5;
        let a = br.tap;
        let i_from = (y / (a * a) + half) * v[f] - y / a * v[t];
        let i_to = (y + half) * v[t] - y / a * v[f];
        let s_from = v[f] * i_from.conj();
        let s_to = v[t] * i_to.conj();
        let loading_pct = (br.mva_limit > 0.0)
            .then(|| 100.0 * s_from.norm().max(s_to.norm()) / br.mva_limit);
        out.push(BranchFlow {
            key: br.key(),
            kind: br.kind,
            s_from,
            s_to,
            loss: s_from + s_to,
            loading_pct,
        });
    }
    Ok(out)
}

/// Reactive power a shunt capacitor delivers at voltage `v_mag`, in Mvar.
pub fn shunt_delivered_q(shunt: &ShuntDevice, v_mag: f64, s_base: f64) -> f64 {
    v_mag * v_mag * shunt.q_nominal * s_base
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageBounds {
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for VoltageBounds {
    fn default() -> Self {
        Self {
            v_min: 0.95,
            v_max: 1.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub bus: BusId,
    pub v_mag: f64,
    pub side: BoundSide,
    /// The bound that was crossed.
    pub bound: f64,
}

pub fn voltage_report(solution: &PowerFlowSolution, bounds: VoltageBounds) -> Vec<Violation> {
    solution
        .bus_ids
        .iter()
        .zip(&solution.v_mag)
        .filter_map(|(&bus, &v_mag)| {
            if v_mag < bounds.v_min {
                Some(Violation {
                    bus,
                    v_mag,
                    side: BoundSide::Low,
                    bound: bounds.v_min,
                })
            } else if v_mag > bounds.v_max {
                Some(Violation {
                    bus,
                    v_mag,
                    side: BoundSide::High,
                    bound: bounds.v_max,
                })
            } else {
                None
            }
        })
        .collect()
}

/// Generation at each bus in per unit: computed for slack and PV buses,
/// scheduled for PQ buses.
pub fn bus_generation(network: &Network, solution: &PowerFlowSolution) -> Vec<Complex> {
    network
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| match b.kind {
            BusKind::PQ => Complex::new(b.p_gen, b.q_gen),
            BusKind::Slack | BusKind::PV => Complex::new(
                solution.p_injection[i] + b.p_load,
                solution.q_injection[i] + b.q_load,
            ),
        })
        .collect()
}

/// System totals in MW and Mvar.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSummary {
    pub total_gen: Complex,
    pub total_load: Complex,
    /// Sum of branch losses, charging included in the reactive part.
    pub total_loss: Complex,
    /// Reactive power delivered by shunt devices.
    pub shunt_q: f64,
    pub violations: Vec<Violation>,
}

impl SystemSummary {
    /// `gen - load - loss` plus shunt supply; zero for an exact solution.
    pub fn imbalance(&self) -> Complex {
        self.total_gen - self.total_load - self.total_loss + Complex::new(0.0, self.shunt_q)
    }
}

pub fn summarize(
    network: &Network,
    solution: &PowerFlowSolution,
    bounds: VoltageBounds,
) -> Result<SystemSummary, Error> {
    let s_base = network.s_base;
    let total_gen: Complex = bus_generation(network, solution).iter().sum();
    let total_load: Complex = network
        .buses
        .iter()
        .map(|b| Complex::new(b.p_load, b.q_load))
        .sum();
    let total_loss: Complex = branch_flows(network, solution)?.iter().map(|f| f.loss).sum();
    let mut shunt_q = 0.0;
    for sh in network.shunts.iter().filter(|s| s.in_service) {
        let v = solution.v_mag_at(sh.bus).ok_or(Error::UnknownBus(sh.bus))?;
        shunt_q += shunt_delivered_q(sh, v, s_base);
    }
    Ok(SystemSummary {
        total_gen: total_gen * s_base,
        total_load: total_load * s_base,
        total_loss: total_loss * s_base,
        shunt_q,
        violations: voltage_report(solution, bounds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::glover5;
    use crate::network::{Branch, Bus};
    use crate::powerflow::{solve_power_flow, SolveOptions};
    use alloc::string::String;
    use alloc::vec;

    fn base() -> (Network, PowerFlowSolution) {
        let net = glover5();
        let sol = solve_power_flow(&net, &SolveOptions::default()).unwrap();
        (net, sol)
    }

    #[test]
    fn equal_voltages_carry_nothing() {
        let net = Network {
            name: String::new(),
            s_base: 100.0,
            buses: vec![Bus::new(1, BusKind::Slack, 1.0), Bus::new(2, BusKind::PQ, 1.0)],
            branches: vec![Branch::line(1, 2, 0.01, 0.1, 0.0, 100.0)],
            shunts: vec![],
        };
        let sol = solve_power_flow(&net, &SolveOptions::default()).unwrap();
        let f = &branch_flows(&net, &sol).unwrap()[0];
        assert_eq!(f.s_from, Complex::new(0.0, 0.0));
        assert_eq!(f.loss, Complex::new(0.0, 0.0));
        assert_eq!(f.loading_pct, Some(0.0));
    }

    #[test]
    fn glover5_losses_and_loading() {
        let (net, sol) = base();
        let flows = branch_flows(&net, &sol).unwrap();
        let loss_mw: f64 = flows.iter().map(|f| f.loss.re).sum::<f64>() * 100.0;
        assert!((loss_mw - 34.84).abs() < 1.0, "{loss_mw}");
        assert!(flows.iter().all(|f| f.loss.re >= 0.0));
        let pct: Vec<f64> = flows.iter().map(|f| f.loading_pct.unwrap()).collect();
        assert!(pct[0] > 50.0 && pct[1] > 50.0, "{pct:?}");
        assert!(pct[2] < 50.0 && pct[4] < 50.0, "{pct:?}");
    }

    #[test]
    fn shunt_delivery() {
        let sh = ShuntDevice::new(2, 1.9);
        assert!((shunt_delivered_q(&sh, 0.9524, 100.0) - 172.35).abs() < 0.01);
        assert_eq!(shunt_delivered_q(&sh, 1.0, 100.0), 190.0);
        assert_eq!(shunt_delivered_q(&sh, 0.5, 100.0), 47.5);
    }

    #[test]
    fn one_violation_in_base_case() {
        let (_, sol) = base();
        let v = voltage_report(&sol, VoltageBounds::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].bus, BusId(2));
        assert_eq!(v[0].side, BoundSide::Low);
        assert!((v[0].v_mag - 0.834).abs() < 5e-4);
        assert!(voltage_report(&sol, VoltageBounds { v_min: 0.0, v_max: 10.0 }).is_empty());
    }

    #[test]
    fn unloaded_unity_case_has_no_violations() {
        let mut net = glover5();
        for b in &mut net.buses {
            b.p_gen = 0.0;
            b.p_load = 0.0;
            b.q_load = 0.0;
            b.v_setpoint = 1.0;
        }
        for br in &mut net.branches {
            br.b_charging = 0.0;
        }
        let sol = solve_power_flow(&net, &SolveOptions::default()).unwrap();
        assert!(voltage_report(&sol, VoltageBounds::default()).is_empty());
    }

    #[test]
    fn summary_balances() {
        let (net, sol) = base();
        let s = summarize(&net, &sol, VoltageBounds::default()).unwrap();
        assert!(s.imbalance().norm() < 1e-4 * 100.0);
        assert!((s.total_gen.re - s.total_load.re - 34.84).abs() < 1.0);
        assert_eq!(s.violations.len(), 1);
    }
}
