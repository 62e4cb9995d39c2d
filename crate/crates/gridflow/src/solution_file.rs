//! Solution documents: the JSON form of a solved case.
//!
//! Floats are written in shortest round-trip form, so parsing a document and
//! writing it again reproduces the same bytes.

use gridflow_core::analysis::{bus_generation, summarize, BoundSide, BranchFlow, SystemSummary, VoltageBounds};
use gridflow_core::network::Network;
use gridflow_core::powerflow::{LimitDirection, PowerFlowSolution};
use gridflow_core::Error;
use serde::{Deserialize, Serialize};

use crate::case_file::{from_json, KindDto, ParseError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRow {
    pub id: u32,
    pub kind: KindDto,
    pub v_pu: f64,
    pub angle_deg: f64,
    pub p_gen_mw: f64,
    pub q_gen_mvar: f64,
    pub p_load_mw: f64,
    pub q_load_mvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchRow {
    pub from_bus: u32,
    pub to_bus: u32,
    pub circuit: u32,
    pub p_from_mw: f64,
    pub q_from_mvar: f64,
    pub p_to_mw: f64,
    pub q_to_mvar: f64,
    pub loss_mw: f64,
    pub loss_mvar: f64,
    pub loading_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViolationRow {
    pub bus: u32,
    pub v_pu: f64,
    /// `low` or `high`.
    pub side: String,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRow {
    pub gen_mw: f64,
    pub gen_mvar: f64,
    pub load_mw: f64,
    pub load_mvar: f64,
    pub loss_mw: f64,
    pub loss_mvar: f64,
    pub shunt_mvar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSwitchRow {
    pub bus: u32,
    pub iteration: usize,
    /// `upper`, `lower` or `restored`.
    pub direction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDoc {
    pub case: String,
    pub s_base_mva: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch_trace: Vec<f64>,
    pub buses: Vec<BusRow>,
    pub branches: Vec<BranchRow>,
    pub summary: SummaryRow,
    pub violations: Vec<ViolationRow>,
    pub limit_switches: Vec<LimitSwitchRow>,
}

fn branch_row(f: &BranchFlow, s_base: f64) -> BranchRow {
    BranchRow {
        from_bus: f.key.from.0,
        to_bus: f.key.to.0,
        circuit: f.key.circuit,
        p_from_mw: f.s_from.re * s_base,
        q_from_mvar: f.s_from.im * s_base,
        p_to_mw: f.s_to.re * s_base,
        q_to_mvar: f.s_to.im * s_base,
        loss_mw: f.loss.re * s_base,
        loss_mvar: f.loss.im * s_base,
        loading_pct: f.loading_pct,
    }
}

fn summary_row(s: &SystemSummary) -> SummaryRow {
    SummaryRow {
        gen_mw: s.total_gen.re,
        gen_mvar: s.total_gen.im,
        load_mw: s.total_load.re,
        load_mvar: s.total_load.im,
        loss_mw: s.total_loss.re,
        loss_mvar: s.total_loss.im,
        shunt_mvar: s.shunt_q,
    }
}

impl SolutionDoc {
    pub fn build(
        network: &Network,
        solution: &PowerFlowSolution,
        flows: &[BranchFlow],
        bounds: VoltageBounds,
    ) -> Result<Self, Error> {
        let s_base = network.s_base;
        let gen = bus_generation(network, solution);
        let summary = summarize(network, solution, bounds)?;
        let buses = network
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| BusRow {
                id: b.id.0,
                kind: b.kind.into(),
                v_pu: solution.v_mag[i],
                angle_deg: solution.angle[i].to_degrees(),
                p_gen_mw: gen[i].re * s_base,
                q_gen_mvar: gen[i].im * s_base,
                p_load_mw: b.p_load * s_base,
                q_load_mvar: b.q_load * s_base,
            })
            .collect();
        Ok(Self {
            case: network.name.clone(),
            s_base_mva: s_base,
            converged: solution.converged,
            iterations: solution.iterations,
            max_mismatch_trace: solution.max_mismatch_trace.clone(),
            buses,
            branches: flows.iter().map(|f| branch_row(f, s_base)).collect(),
            summary: summary_row(&summary),
            violations: summary
                .violations
                .iter()
                .map(|v| ViolationRow {
                    bus: v.bus.0,
                    v_pu: v.v_mag,
                    side: match v.side {
                        BoundSide::Low => "low".into(),
                        BoundSide::High => "high".into(),
                    },
                    bound: v.bound,
                })
                .collect(),
            limit_switches: solution
                .limit_switches
                .iter()
                .map(|s| LimitSwitchRow {
                    bus: s.bus.0,
                    iteration: s.iteration,
                    direction: match s.direction {
                        LimitDirection::Upper => "upper".into(),
                        LimitDirection::Lower => "lower".into(),
                        LimitDirection::Restored => "restored".into(),
                    },
                })
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ParseError> {
        from_json(text)
    }
}
