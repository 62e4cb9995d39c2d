//! Case data model.
//!
//! All electrical quantities are per unit on the system MVA base; angles are
//! radians. Scheduled injections follow generation minus load:
//! `P_sch = p_gen - p_load`, `Q_sch = q_gen - q_load`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::numerics::sqrt;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BusId(pub u32);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Slack,
    PV,
    PQ,
}

impl fmt::Display for BusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BusKind::Slack => "Slack",
            BusKind::PV => "PV",
            BusKind::PQ => "PQ",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    /// Voltage magnitude setpoint (Slack and PV).
    pub v_setpoint: f64,
    /// Angle setpoint in radians (Slack).
    pub angle_setpoint: f64,
    pub p_gen: f64,
    pub q_gen: f64,
    pub p_load: f64,
    pub q_load: f64,
    pub q_gen_min: Option<f64>,
    pub q_gen_max: Option<f64>,
    /// Line-to-line base voltage in kV.
    pub base_kv: f64,
}

impl Bus {
    /// A PQ bus with no generation or load.
    pub fn new(id: u32, kind: BusKind, base_kv: f64) -> Self {
        Self {
            id: BusId(id),
            kind,
            v_setpoint: 1.0,
            angle_setpoint: 0.0,
            p_gen: 0.0,
            q_gen: 0.0,
            p_load: 0.0,
            q_load: 0.0,
            q_gen_min: None,
            q_gen_max: None,
            base_kv,
        }
    }

    pub fn p_scheduled(&self) -> f64 {
        self.p_gen - self.p_load
    }

    pub fn q_scheduled(&self) -> f64 {
        self.q_gen - self.q_load
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchKind {
    Line,
    Transformer,
}

/// Whether the zero-sequence current can pass through a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroSeqPath {
    Open,
    GroundedThrough,
}

/// Identifies a branch by its endpoints and circuit number. Matching ignores
/// orientation, so `(2, 5, 1)` and `(5, 2, 1)` refer to the same element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchKey {
    pub from: BusId,
    pub to: BusId,
    pub circuit: u32,
}

impl BranchKey {
    pub fn new(from: u32, to: u32, circuit: u32) -> Self {
        Self {
            from: BusId(from),
            to: BusId(to),
            circuit,
        }
    }

    pub fn matches(&self, other: &BranchKey) -> bool {
        self.circuit == other.circuit
            && ((self.from == other.from && self.to == other.to)
                || (self.from == other.to && self.to == other.from))
    }
}

impl fmt::Display for BranchKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{} ({})", self.from, self.to, self.circuit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub circuit: u32,
    pub kind: BranchKind,
    pub r: f64,
    pub x: f64,
    /// Total shunt conductance, split half per end.
    pub g_shunt: f64,
    /// Total charging susceptance, split half per end.
    pub b_charging: f64,
    /// Off-nominal ratio, applied on the from side.
    pub tap: f64,
    /// Phase shift in radians. Only zero is supported by the builders.
    pub phase_shift: f64,
    /// Apparent-power rating, per unit; zero means unlimited.
    pub mva_limit: f64,
    pub in_service: bool,
    pub r0: f64,
    pub x0: f64,
    pub b0_charging: f64,
    pub zero_seq_path: ZeroSeqPath,
}

impl Branch {
    /// Transmission line with zero-sequence data defaulted to `Z0 = 3 Z1`,
    /// `B0 = B1`.
    pub fn line(from: u32, to: u32, r: f64, x: f64, b_charging: f64, mva_limit: f64) -> Self {
        Self {
            from_bus: BusId(from),
            to_bus: BusId(to),
            circuit: 1,
            kind: BranchKind::Line,
            r,
            x,
            g_shunt: 0.0,
            b_charging,
            tap: 1.0,
            phase_shift: 0.0,
            mva_limit,
            in_service: true,
            r0: 3.0 * r,
            x0: 3.0 * x,
            b0_charging: b_charging,
            zero_seq_path: ZeroSeqPath::GroundedThrough,
        }
    }

    /// Grounded-wye/grounded-wye transformer with `Z0 = Z1`.
    pub fn transformer(from: u32, to: u32, r: f64, x: f64, mva_limit: f64) -> Self {
        Self {
            kind: BranchKind::Transformer,
            r0: r,
            x0: x,
            ..Self::line(from, to, r, x, 0.0, mva_limit)
        }
    }

    pub fn with_circuit(mut self, circuit: u32) -> Self {
        self.circuit = circuit;
        self
    }

    pub fn with_tap(mut self, tap: f64) -> Self {
        self.tap = tap;
        self
    }

    pub fn key(&self) -> BranchKey {
        BranchKey {
            from: self.from_bus,
            to: self.to_bus,
            circuit: self.circuit,
        }
    }
}

/// Fixed shunt. `q_nominal` is the reactive injection at 1.0 pu voltage;
/// positive values are capacitive. Delivered Q scales with voltage squared.
#[derive(Debug, Clone, PartialEq)]
pub struct ShuntDevice {
    pub bus: BusId,
    pub q_nominal: f64,
    pub in_service: bool,
}

impl ShuntDevice {
    pub fn new(bus: u32, q_nominal: f64) -> Self {
        Self {
            bus: BusId(bus),
            q_nominal,
            in_service: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub name: String,
    /// System base in MVA.
    pub s_base: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub shunts: Vec<ShuntDevice>,
}

impl Network {
    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn bus_mut(&mut self, id: BusId) -> Option<&mut Bus> {
        self.buses.iter_mut().find(|b| b.id == id)
    }

    /// Position of a bus in `buses`.
    pub fn bus_position(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack(&self) -> Option<&Bus> {
        self.buses.iter().find(|b| b.kind == BusKind::Slack)
    }

    pub fn branch_position(&self, key: &BranchKey) -> Option<usize> {
        self.branches.iter().position(|b| b.key().matches(key))
    }

    /// Base current in amperes at a bus: `S_base / (sqrt(3) * V_base)`.
    pub fn base_current_amps(&self, bus: BusId) -> Result<f64, Error> {
        let b = self.bus(bus).ok_or(Error::UnknownBus(bus))?;
        if b.base_kv.is_nan() || b.base_kv <= 0.0 {
            return Err(Error::Validation(ValidationReport {
                errors: vec![format!("bus {bus}: base_kv must be positive")],
                warnings: Vec::new(),
            }));
        }
        Ok(base_current_amps(self.s_base, b.base_kv))
    }

    /// Runs every check and reports all findings.
    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

pub fn base_current_amps(s_base_mva: f64, base_kv: f64) -> f64 {
    s_base_mva * 1e6 / (sqrt(3.0) * base_kv * 1e3)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<Self, Error> {
        if self.is_ok() {
            Ok(self)
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid network ({} error(s))", self.errors.len())?;
        for e in &self.errors {
            write!(f, "\n  error: {e}")?;
        }
        for w in &self.warnings {
            write!(f, "\n  warning: {w}")?;
        }
        Ok(())
    }
}

fn finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

pub fn validate(net: &Network) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    if !(net.s_base > 0.0 && net.s_base.is_finite()) {
        errors.push(format!("s_base must be positive, got {}", net.s_base));
    }

    let mut seen = BTreeSet::new();
    for b in &net.buses {
        if !seen.insert(b.id) {
            errors.push(format!("duplicate bus id {}", b.id));
        }
        if !finite(&[
            b.v_setpoint,
            b.angle_setpoint,
            b.p_gen,
            b.q_gen,
            b.p_load,
            b.q_load,
            b.base_kv,
        ]) || b.q_gen_min.is_some_and(|q| !q.is_finite())
            || b.q_gen_max.is_some_and(|q| !q.is_finite())
        {
            errors.push(format!("bus {}: non-finite value", b.id));
        }
        if b.kind != BusKind::PQ && (b.v_setpoint.is_nan() || b.v_setpoint <= 0.0) {
            errors.push(format!(
                "bus {}: {} bus needs a positive voltage setpoint",
                b.id, b.kind
            ));
        }
        if let (Some(lo), Some(hi)) = (b.q_gen_min, b.q_gen_max) {
            if lo > hi {
                errors.push(format!("bus {}: q_gen_min {lo} exceeds q_gen_max {hi}", b.id));
            }
        }
        if b.base_kv.is_nan() || b.base_kv <= 0.0 {
            errors.push(format!("bus {}: base_kv must be positive", b.id));
        }
    }

    let slacks: Vec<String> = net
        .buses
        .iter()
        .filter(|b| b.kind == BusKind::Slack)
        .map(|b| format!("{}", b.id))
        .collect();
    match slacks.len() {
        1 => {}
        0 => errors.push(String::from("no slack bus")),
        _ => errors.push(format!(
            "exactly one slack bus required, found buses {}",
            slacks.join(", ")
        )),
    }

    let mut keys = BTreeSet::new();
    for br in &net.branches {
        let key = br.key();
        for end in [br.from_bus, br.to_bus] {
            if !seen.contains(&end) {
                errors.push(format!("branch {key}: unresolved endpoint {end}"));
            }
        }
        if br.from_bus == br.to_bus {
            errors.push(format!("branch {key}: from and to bus are the same"));
        }
        if !finite(&[
            br.r,
            br.x,
            br.g_shunt,
            br.b_charging,
            br.tap,
            br.phase_shift,
            br.mva_limit,
            br.r0,
            br.x0,
            br.b0_charging,
        ]) {
            errors.push(format!("branch {key}: non-finite value"));
        }
        if br.x == 0.0 {
            errors.push(format!("branch {key}: reactance must be non-zero"));
        }
        if !(0.5..=1.5).contains(&br.tap) {
            errors.push(format!("branch {key}: tap {} outside [0.5, 1.5]", br.tap));
        }
        if br.kind == BranchKind::Line && br.tap != 1.0 {
            errors.push(format!("branch {key}: lines cannot carry an off-nominal tap"));
        }
        if br.phase_shift != 0.0 {
            errors.push(format!(
                "branch {key}: phase-shifting transformers are not supported"
            ));
        }
        if br.mva_limit < 0.0 {
            errors.push(format!("branch {key}: negative MVA limit"));
        } else if br.mva_limit == 0.0 {
            warnings.push(format!("branch {key}: zero MVA limit, loading not reported"));
        }
        let (a, b) = if br.from_bus <= br.to_bus {
            (br.from_bus, br.to_bus)
        } else {
            (br.to_bus, br.from_bus)
        };
        if !keys.insert((a, b, br.circuit)) {
            errors.push(format!("duplicate branch {key}"));
        }
    }

    for sh in &net.shunts {
        if !seen.contains(&sh.bus) {
            errors.push(format!("shunt references unknown bus {}", sh.bus));
        }
        if !sh.q_nominal.is_finite() {
            errors.push(format!("shunt at bus {}: non-finite q_nominal", sh.bus));
        }
    }

    for id in disconnected_buses(net) {
        warnings.push(format!("bus {id} disconnected"));
    }

    ValidationReport { errors, warnings }
}

/// Buses with no in-service path to the slack (or to the first bus when the
/// case has no slack).
pub fn disconnected_buses(net: &Network) -> Vec<BusId> {
    let Some(root) = net.slack().or(net.buses.first()).map(|b| b.id) else {
        return Vec::new();
    };
    let mut adj: BTreeMap<BusId, Vec<BusId>> = BTreeMap::new();
    for br in net.branches.iter().filter(|b| b.in_service) {
        adj.entry(br.from_bus).or_default().push(br.to_bus);
        adj.entry(br.to_bus).or_default().push(br.from_bus);
    }
    let mut reached = BTreeSet::from([root]);
    let mut stack = vec![root];
    while let Some(b) = stack.pop() {
        for &n in adj.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
            if reached.insert(n) {
                stack.push(n);
            }
        }
    }
    net.buses
        .iter()
        .map(|b| b.id)
        .filter(|id| !reached.contains(id))
        .collect()
}
