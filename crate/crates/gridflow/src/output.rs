//! Text renderings: fixed-width tables for people, CSV and JSON for tools.
//!
//! Tables round for display; CSV and JSON carry full precision.

use std::fmt::Write as _;

use gridflow_core::fault::{FaultKind, FaultResult};
use gridflow_core::ybus::AdmittanceMatrix;
use gridflow_core::Complex;
use serde::{Deserialize, Serialize};

use crate::scenario_file::{ScenarioDoc, SweepDoc};
use crate::solution_file::SolutionDoc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

fn kind_label(k: crate::case_file::KindDto) -> &'static str {
    match k {
        crate::case_file::KindDto::Slack => "Slack",
        crate::case_file::KindDto::Pv => "PV",
        crate::case_file::KindDto::Pq => "PQ",
    }
}

/// Bus results: voltage, angle, load and generation per bus.
pub fn bus_table(doc: &SolutionDoc) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>6} {:>5} {:>9} {:>11} {:>9} {:>9} {:>9} {:>9}",
        "Bus", "Type", "PU Volt", "Angle (deg)", "Load MW", "Load Mvar", "Gen MW", "Gen Mvar"
    );
    for b in &doc.buses {
        let _ = writeln!(
            s,
            "{:>6} {:>5} {:>9.5} {:>11.3} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
            b.id,
            kind_label(b.kind),
            b.v_pu,
            b.angle_deg,
            b.p_load_mw,
            b.q_load_mvar,
            b.p_gen_mw,
            b.q_gen_mvar
        );
    }
    s
}

pub fn branch_table(doc: &SolutionDoc) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5} {:>5} {:>4} {:>9} {:>9} {:>9} {:>9} {:>8} {:>9} {:>8}",
        "From", "To", "Ckt", "MW From", "Mvar From", "MW To", "Mvar To", "MW Loss", "Mvar Loss", "% Limit"
    );
    for b in &doc.branches {
        let pct = b.loading_pct.map_or_else(|| "-".to_string(), |p| format!("{p:.1}"));
        let _ = writeln!(
            s,
            "{:>5} {:>5} {:>4} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>8.2} {:>9.2} {:>8}",
            b.from_bus,
            b.to_bus,
            b.circuit,
            b.p_from_mw,
            b.q_from_mvar,
            b.p_to_mw,
            b.q_to_mvar,
            b.loss_mw,
            b.loss_mvar,
            pct
        );
    }
    s
}

pub fn violations_text(doc: &SolutionDoc) -> String {
    if doc.violations.is_empty() {
        return "no voltage violations\n".to_string();
    }
    let mut s = String::from("voltage violations:\n");
    for v in &doc.violations {
        let rel = if v.side == "low" { "below" } else { "above" };
        let _ = writeln!(s, "  bus {} at {:.5} pu, {rel} {:.3}", v.bus, v.v_pu, v.bound);
    }
    s
}

pub fn summary_text(doc: &SolutionDoc) -> String {
    let m = &doc.summary;
    let mut s = String::new();
    let _ = writeln!(s, "generation {:>10.2} MW {:>10.2} Mvar", m.gen_mw, m.gen_mvar);
    let _ = writeln!(s, "load       {:>10.2} MW {:>10.2} Mvar", m.load_mw, m.load_mvar);
    let _ = writeln!(s, "losses     {:>10.2} MW {:>10.2} Mvar", m.loss_mw, m.loss_mvar);
    if m.shunt_mvar != 0.0 {
        let _ = writeln!(s, "shunts     {:>24.2} Mvar", m.shunt_mvar);
    }
    s
}

fn convergence_line(doc: &SolutionDoc) -> String {
    let last = doc.max_mismatch_trace.last().copied().unwrap_or(0.0);
    format!(
        "{}: converged in {} iteration(s), max mismatch {:.2e} pu\n",
        if doc.case.is_empty() { "case" } else { &doc.case },
        doc.iterations,
        last
    )
}

/// The `solve` view: convergence line and bus table.
pub fn solve_table(doc: &SolutionDoc) -> String {
    let mut s = convergence_line(doc);
    s.push('\n');
    s.push_str(&bus_table(doc));
    s
}

/// The `report` view: buses, branches, totals and violations.
pub fn report_table(doc: &SolutionDoc) -> String {
    let mut s = solve_table(doc);
    s.push('\n');
    s.push_str(&branch_table(doc));
    s.push('\n');
    s.push_str(&summary_text(doc));
    s.push('\n');
    s.push_str(&violations_text(doc));
    s
}

pub fn bus_csv(doc: &SolutionDoc) -> String {
    let mut s = String::from("bus,kind,v_pu,angle_deg,p_load_mw,q_load_mvar,p_gen_mw,q_gen_mvar\n");
    for b in &doc.buses {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            b.id,
            kind_label(b.kind),
            b.v_pu,
            b.angle_deg,
            b.p_load_mw,
            b.q_load_mvar,
            b.p_gen_mw,
            b.q_gen_mvar
        );
    }
    s
}

pub fn branch_csv(doc: &SolutionDoc) -> String {
    let mut s = String::from(
        "from_bus,to_bus,circuit,p_from_mw,q_from_mvar,p_to_mw,q_to_mvar,loss_mw,loss_mvar,loading_pct\n",
    );
    for b in &doc.branches {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            b.from_bus,
            b.to_bus,
            b.circuit,
            b.p_from_mw,
            b.q_from_mvar,
            b.p_to_mw,
            b.q_to_mvar,
            b.loss_mw,
            b.loss_mvar,
            b.loading_pct.map_or_else(String::new, |p| p.to_string())
        );
    }
    s
}

fn complex_2dp(z: Complex) -> String {
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{:.2}{sign}j{:.2}", z.re, z.im.abs())
}

pub fn ybus_table(y: &AdmittanceMatrix) -> String {
    let width = (0..y.dim())
        .flat_map(|i| (0..y.dim()).map(move |j| (i, j)))
        .map(|(i, j)| complex_2dp(y.at(i, j)).len())
        .max()
        .unwrap_or(0)
        .max(4);
    let mut s = format!("{:>5}", "");
    for id in y.bus_ids() {
        let _ = write!(s, " {:>width$}", id.to_string());
    }
    s.push('\n');
    for (i, id) in y.bus_ids().iter().enumerate() {
        let _ = write!(s, "{:>5}", id.to_string());
        for j in 0..y.dim() {
            let _ = write!(s, " {:>width$}", complex_2dp(y.at(i, j)));
        }
        s.push('\n');
    }
    s
}

pub fn ybus_csv(y: &AdmittanceMatrix) -> String {
    let mut s = String::from("row_bus,col_bus,g,b\n");
    for (i, a) in y.bus_ids().iter().enumerate() {
        for (j, b) in y.bus_ids().iter().enumerate() {
            let v = y.at(i, j);
            let _ = writeln!(s, "{a},{b},{},{}", v.re, v.im);
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRow {
    pub kind: String,
    /// `[r, x]`.
    pub z_fault: [f64; 2],
    pub prefault_voltage: [f64; 2],
    /// `[r, x]` per sequence; `None` where the zero-sequence network has no
    /// ground path and the fault does not involve ground.
    pub z_thevenin: [Option<[f64; 2]>; 3],
    pub sequence_currents_pu: [[f64; 2]; 3],
    pub phase_currents_pu: [[f64; 2]; 3],
    pub phase_currents_amps: [f64; 3],
    pub sequence_voltages_pu: [[f64; 2]; 3],
    pub phase_voltages_pu: [[f64; 2]; 3],
    pub base_current_amps: f64,
    pub ground_current_amps: f64,
    pub reported_current_amps: f64,
    pub breaker_amps: Option<f64>,
}

fn pair(z: Complex) -> [f64; 2] {
    [z.re, z.im]
}

fn triple(z: [Complex; 3]) -> [[f64; 2]; 3] {
    [pair(z[0]), pair(z[1]), pair(z[2])]
}

impl FaultRow {
    pub fn new(r: &FaultResult, breaker_amps: Option<f64>) -> Self {
        let finite = |z: Complex| (z.re.is_finite() && z.im.is_finite()).then(|| pair(z));
        Self {
            kind: r.kind.short_name().to_string(),
            z_fault: pair(r.z_fault),
            prefault_voltage: pair(r.prefault_voltage),
            z_thevenin: [finite(r.z_thevenin[0]), finite(r.z_thevenin[1]), finite(r.z_thevenin[2])],
            sequence_currents_pu: triple(r.sequence_currents),
            phase_currents_pu: triple(r.phase_currents),
            phase_currents_amps: r.phase_currents_amps,
            sequence_voltages_pu: triple(r.sequence_voltages),
            phase_voltages_pu: triple(r.phase_voltages),
            base_current_amps: r.base_current_amps,
            ground_current_amps: r.ground_current_amps,
            reported_current_amps: r.reported_current_amps,
            breaker_amps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultDoc {
    pub case: String,
    pub bus: u32,
    /// `flat` or `solved`.
    pub prefault: String,
    pub catalog_amps: Vec<f64>,
    pub faults: Vec<FaultRow>,
}

impl FaultDoc {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fault report serializes");
        s.push('\n');
        s
    }
}

fn kind_title(short: &str) -> String {
    FaultKind::from_short_name(short).map_or_else(|| short.to_string(), |k| k.to_string())
}

fn polar(v: [f64; 2]) -> String {
    let z = Complex::new(v[0], v[1]);
    format!("{:.4}/{:.2}", z.norm(), z.arg().to_degrees())
}

pub fn fault_table(doc: &FaultDoc) -> String {
    let mut s = String::new();
    let prefault = if doc.prefault == "flat" {
        "flat 1.0 pu"
    } else {
        "solved power flow"
    };
    let _ = writeln!(s, "faults at bus {} (prefault: {prefault})", doc.bus);
    if let Some(f) = doc.faults.first() {
        let _ = writeln!(s, "base current {:.2} A", f.base_current_amps);
    }
    s.push('\n');
    let _ = writeln!(
        s,
        "{:<22} {:>10} {:>10} {:>10} {:>10} {:>12} {:>9}",
        "Type", "Ia (A)", "Ib (A)", "Ic (A)", "3I0 (A)", "Reported (A)", "Breaker"
    );
    for f in &doc.faults {
        let breaker = f.breaker_amps.map_or_else(|| "none".to_string(), |b| format!("{b:.0} A"));
        let _ = writeln!(
            s,
            "{:<22} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>12.2} {:>9}",
            kind_title(&f.kind),
            f.phase_currents_amps[0],
            f.phase_currents_amps[1],
            f.phase_currents_amps[2],
            f.ground_current_amps,
            f.reported_current_amps,
            breaker
        );
    }
    s.push('\n');
    let _ = writeln!(
        s,
        "{:<22} {:>14} {:>14} {:>14}",
        "Phase voltage (pu/deg)", "Va", "Vb", "Vc"
    );
    for f in &doc.faults {
        let v = f.phase_voltages_pu;
        let _ = writeln!(
            s,
            "{:<22} {:>14} {:>14} {:>14}",
            kind_title(&f.kind),
            polar(v[0]),
            polar(v[1]),
            polar(v[2])
        );
    }
    s
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

pub fn scenario_table(doc: &ScenarioDoc) -> String {
    let mut s = format!("scenario: {}\nbase case: {}\n", doc.name, doc.base_case);
    let _ = writeln!(s, "actions: {}", doc.actions.len());
    match (&doc.outcome.converged, &doc.outcome.solution) {
        (true, Some(sol)) => {
            s.push('\n');
            s.push_str(&report_table(sol));
        }
        _ => {
            let _ = writeln!(
                s,
                "\nno solution: {}",
                doc.outcome.message.as_deref().unwrap_or("power flow did not converge")
            );
        }
    }
    if let Some(d) = &doc.deltas {
        let _ = writeln!(s, "\nchange from base case: loss {:+.2} MW", d.d_loss_mw);
        for b in &d.dv {
            let _ = writeln!(s, "  bus {:>4} dV {:+.5} pu", b.bus, b.dv_pu);
        }
    }
    if let Some(sw) = &doc.sweep {
        s.push('\n');
        s.push_str(&sweep_table(sw));
    }
    s
}

fn sweep_table(sw: &SweepDoc) -> String {
    let mut s = String::new();
    match sw {
        SweepDoc::Shunt { bus, points } => {
            let _ = writeln!(s, "shunt sweep at bus {bus}");
            let _ = writeln!(s, "{:>12} {:>10} {:>10}", "Q (Mvar)", "V (pu)", "Loss MW");
            for p in points {
                let _ = writeln!(
                    s,
                    "{:>12.1} {:>10} {:>10}",
                    p.parameter * 100.0,
                    opt(p.v_pu, 5),
                    opt(p.loss_mw, 2)
                );
            }
        }
        SweepDoc::Tap { best, grid } => {
            let _ = writeln!(s, "tap sweep over {} settings", grid.len());
            match best {
                Some(b) => {
                    let taps: Vec<String> = b.taps.iter().map(|t| format!("{t:.2}")).collect();
                    let _ = writeln!(
                        s,
                        "selected taps [{}]: V {} pu, loss {} MW",
                        taps.join(", "),
                        opt(b.v_pu, 5),
                        opt(b.loss_mw, 2)
                    );
                }
                None => {
                    let _ = writeln!(s, "no setting meets the voltage target");
                }
            }
            let feasible = grid.iter().filter(|p| p.feasible).count();
            let _ = writeln!(s, "{feasible} of {} settings meet the target", grid.len());
        }
        SweepDoc::LoadShed {
            bus,
            target_v,
            minimal_shed_pct,
            evaluated,
            ..
        } => {
            let _ = writeln!(s, "load shedding at bus {bus}, target {target_v:.3} pu");
            let _ = writeln!(s, "{:>10} {:>10}", "Shed %", "V (pu)");
            for p in evaluated {
                let _ = writeln!(s, "{:>10.1} {:>10}", p.shed_pct, opt(p.v_pu, 5));
            }
            match minimal_shed_pct {
                Some(m) => {
                    let _ = writeln!(s, "minimal shed: {m:.1}%");
                }
                None => {
                    let _ = writeln!(s, "infeasible: target not reached even with all load shed");
                }
            }
        }
    }
    s
}
