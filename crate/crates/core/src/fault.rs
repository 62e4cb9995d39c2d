//! Short-circuit analysis by symmetrical components.
//!
//! Each sequence network is reduced to its Thevenin impedance at the faulted
//! bus and the sequence networks are interconnected per fault type:
//!
//! | kind        | connection                         |
//! |-------------|------------------------------------|
//! | three-phase | positive only                      |
//! | SLG (a)     | all three in series                |
//! | LL (b-c)    | positive and negative in parallel  |
//! | DLG (b,c)   | all three in parallel              |

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::network::{BranchKey, BusId, BusKind, Network};
use crate::numerics::{sqrt, Complex, DenseMatrix};
use crate::powerflow::PowerFlowSolution;
use crate::ybus::{build_ybus, thevenin_impedance, AdmittanceMatrix, Sequence};
use crate::Error;

/// Sequence reactances of a synchronous machine, per unit on the system base.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSequence {
    pub bus: BusId,
    pub x_sub: f64,
    pub x_neg: f64,
    pub x_zero: f64,
    pub z_neutral: Complex,
    pub grounded: bool,
}

impl GeneratorSequence {
    pub fn solidly_grounded(bus: u32, x_sub: f64, x_neg: f64, x_zero: f64) -> Self {
        Self {
            bus: BusId(bus),
            x_sub,
            x_neg,
            x_zero,
            z_neutral: Complex::new(0.0, 0.0),
            grounded: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformerConnection {
    /// Grounded wye on both sides: zero-sequence current passes through.
    YgYg,
    /// Any winding arrangement that blocks zero-sequence flow between sides.
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformerSequence {
    pub key: BranchKey,
    pub connection: TransformerConnection,
    /// Total neutral impedance in the zero-sequence path.
    pub z_neutral: Complex,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceData {
    pub generators: Vec<GeneratorSequence>,
    /// Overrides for transformer zero-sequence behaviour. Transformers not
    /// listed use the branch's own zero-sequence fields.
    pub transformers: Vec<TransformerSequence>,
}

impl SequenceData {
    pub fn validate(&self, network: &Network) -> Result<(), Error> {
        for g in &self.generators {
            if network.bus(g.bus).is_none() {
                return Err(Error::UnknownBus(g.bus));
            }
            let finite = [g.x_sub, g.x_neg, g.x_zero, g.z_neutral.re, g.z_neutral.im]
                .iter()
                .all(|v| v.is_finite());
            if !finite || g.x_sub <= 0.0 || g.x_neg <= 0.0 || g.x_zero < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "generator at bus {}: reactances must be finite and positive",
                    g.bus
                )));
            }
            if g.z_neutral.re < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "generator at bus {}: neutral resistance is negative",
                    g.bus
                )));
            }
        }
        for t in &self.transformers {
            if network.branch_position(&t.key).is_none() {
                return Err(Error::InvalidInput(format!("no branch {}", t.key)));
            }
        }
        Ok(())
    }
}

/// Pre-fault operating point.
#[derive(Debug, Clone, Copy)]
pub enum Prefault<'a> {
    /// Classical assumption: 1.0 pu everywhere, loads, charging and shunt
    /// devices neglected.
    Flat,
    /// Converged power-flow voltages; loads become constant admittances
    /// `(P - jQ) / |V|^2` in the positive and negative sequences.
    Solved(&'a PowerFlowSolution),
}

/// The three sequence admittance matrices plus pre-fault bus voltages.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceNetworks {
    pub zero: AdmittanceMatrix,
    pub positive: AdmittanceMatrix,
    pub negative: AdmittanceMatrix,
    pub prefault: Vec<Complex>,
    pub base_current_amps: Vec<f64>,
}

impl SequenceNetworks {
    pub fn sequence(&self, seq: Sequence) -> &AdmittanceMatrix {
        match seq {
            Sequence::Zero => &self.zero,
            Sequence::Positive => &self.positive,
            Sequence::Negative => &self.negative,
        }
    }

    pub fn bus_ids(&self) -> &[BusId] {
        self.positive.bus_ids()
    }

    /// Driving-point impedance of one sequence network at `bus`.
    pub fn thevenin(&self, seq: Sequence, bus: BusId) -> Result<Complex, Error> {
        match thevenin_impedance(self.sequence(seq), bus) {
            Err(Error::SingularMatrix { .. }) => Err(Error::UngroundedSystem(seq)),
            other => other,
        }
    }
}

pub fn build_sequence_networks(
    network: &Network,
    data: &SequenceData,
    prefault: Prefault<'_>,
) -> Result<SequenceNetworks, Error> {
    network.validate().into_result()?;
    data.validate(network)?;
    if data.generators.is_empty() {
        return Err(Error::UngroundedSystem(Sequence::Positive));
    }

    let mut net = network.clone();
    if let Prefault::Flat = prefault {
        for br in &mut net.branches {
            br.g_shunt = 0.0;
            br.b_charging = 0.0;
            br.b0_charging = 0.0;
        }
        net.shunts.clear();
    }
    // Transformer overrides act through the zero-sequence branch fields.
    let mut blocked = vec![false; net.branches.len()];
    for t in &data.transformers {
        if let Some(k) = net.branch_position(&t.key) {
            match t.connection {
                TransformerConnection::YgYg => {
                    let br = &mut net.branches[k];
                    br.zero_seq_path = crate::network::ZeroSeqPath::GroundedThrough;
                    br.r0 += 3.0 * t.z_neutral.re;
                    br.x0 += 3.0 * t.z_neutral.im;
                }
                TransformerConnection::Other => blocked[k] = true,
            }
        }
    }
    for (br, &b) in net.branches.iter_mut().zip(&blocked) {
        if b {
            br.zero_seq_path = crate::network::ZeroSeqPath::Open;
        }
    }

    let mut zero = build_ybus(&net, Sequence::Zero)?;
    let mut positive = build_ybus(&net, Sequence::Positive)?;
    let mut negative = build_ybus(&net, Sequence::Negative)?;

    for g in &data.generators {
        positive.add_shunt(g.bus, Complex::new(0.0, g.x_sub).inv())?;
        negative.add_shunt(g.bus, Complex::new(0.0, g.x_neg).inv())?;
        if g.grounded {
            let z0 = Complex::new(0.0, g.x_zero) + g.z_neutral * 3.0;
            if z0.norm() > 0.0 {
                zero.add_shunt(g.bus, z0.inv())?;
            } else {
                return Err(Error::InvalidInput(format!(
                    "generator at bus {}: zero-sequence impedance is zero",
                    g.bus
                )));
            }
        }
    }

    let prefault_v = match prefault {
        Prefault::Flat => vec![Complex::new(1.0, 0.0); net.buses.len()],
        Prefault::Solved(sol) => {
            let mut v = Vec::with_capacity(net.buses.len());
            for bus in &net.buses {
                let vb = sol.voltage(bus.id).ok_or(Error::UnknownBus(bus.id))?;
                v.push(vb);
                let m2 = vb.norm_sqr();
                if (bus.p_load != 0.0 || bus.q_load != 0.0) && m2 > 0.0 {
                    let y_load = Complex::new(bus.p_load, -bus.q_load) / m2;
                    positive.add_shunt(bus.id, y_load)?;
                    negative.add_shunt(bus.id, y_load)?;
                }
            }
            v
        }
    };

    let base_current_amps = net
        .buses
        .iter()
        .map(|b| crate::network::base_current_amps(net.s_base, b.base_kv))
        .collect();

    Ok(SequenceNetworks {
        zero,
        positive,
        negative,
        prefault: prefault_v,
        base_current_amps,
    })
}

/// Returns sequence data that grounds every slack and PV bus through the given
/// reactances, for cases that ship without machine data.
pub fn default_generators(network: &Network, x_sub: f64, x_zero: f64) -> SequenceData {
    SequenceData {
        generators: network
            .buses
            .iter()
            .filter(|b| b.kind != BusKind::PQ)
            .map(|b| GeneratorSequence::solidly_grounded(b.id.0, x_sub, x_sub, x_zero))
            .collect(),
        transformers: Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FaultKind {
    ThreePhase,
    /// Phase a to ground.
    SingleLineToGround,
    /// Phase b to phase c.
    LineToLine,
    /// Phases b and c to ground.
    DoubleLineToGround,
}

impl FaultKind {
    pub const ALL: [FaultKind; 4] = [
        FaultKind::ThreePhase,
        FaultKind::SingleLineToGround,
        FaultKind::LineToLine,
        FaultKind::DoubleLineToGround,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            FaultKind::ThreePhase => "3ph",
            FaultKind::SingleLineToGround => "slg",
            FaultKind::LineToLine => "ll",
            FaultKind::DoubleLineToGround => "dlg",
        }
    }

    pub fn from_short_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.short_name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultKind::ThreePhase => "three-phase",
            FaultKind::SingleLineToGround => "single line-to-ground",
            FaultKind::LineToLine => "line-to-line",
            FaultKind::DoubleLineToGround => "double line-to-ground",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultSpec {
    pub bus: BusId,
    pub kind: FaultKind,
    pub z_fault: Complex,
    /// Overrides the pre-fault voltage taken from the sequence networks.
    pub prefault_voltage: Option<Complex>,
}

impl FaultSpec {
    pub fn bolted(bus: u32, kind: FaultKind) -> Self {
        Self {
            bus: BusId(bus),
            kind,
            z_fault: Complex::new(0.0, 0.0),
            prefault_voltage: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultResult {
    pub bus: BusId,
    pub kind: FaultKind,
    pub z_fault: Complex,
    pub prefault_voltage: Complex,
    /// Thevenin impedances `[Z0, Z1, Z2]`.
    pub z_thevenin: [Complex; 3],
    /// `[I0, I1, I2]`, per unit.
    pub sequence_currents: [Complex; 3],
    /// `[Ia, Ib, Ic]`, per unit.
    pub phase_currents: [Complex; 3],
    /// `|Ia|, |Ib|, |Ic|` in amperes.
    pub phase_currents_amps: [f64; 3],
    /// `[V0, V1, V2]` at the faulted bus, per unit.
    pub sequence_voltages: [Complex; 3],
    /// `[Va, Vb, Vc]` at the faulted bus, per unit.
    pub phase_voltages: [Complex; 3],
    pub base_current_amps: f64,
    /// `3 |I0|` in amperes.
    pub ground_current_amps: f64,
    /// Magnitude used for breaker sizing: `|Ia|` for three-phase and SLG,
    /// `|Ib|` for LL, the ground current `3 |I0|` for DLG.
    pub reported_current_amps: f64,
}

/// `a = 1 / 120 deg`.
pub fn a_operator() -> Complex {
    Complex::new(-0.5, sqrt(3.0) / 2.0)
}

/// The symmetrical-component matrix `A`, mapping `[x0, x1, x2]` to `[xa, xb, xc]`.
pub fn transform_matrix() -> DenseMatrix<Complex> {
    let one = Complex::new(1.0, 0.0);
    let a = a_operator();
    let a2 = a * a;
    DenseMatrix::from_rows(&[&[one, one, one], &[one, a2, a], &[one, a, a2]]).expect("3x3")
}

/// `A^-1 = (1/3) conj(A)`.
pub fn inverse_transform_matrix() -> DenseMatrix<Complex> {
    let mut m = transform_matrix();
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = m[(i, j)].conj() / 3.0;
        }
    }
    m
}

pub fn sequence_to_phase(x: [Complex; 3]) -> [Complex; 3] {
    let a = a_operator();
    let a2 = a * a;
    [x[0] + x[1] + x[2], x[0] + a2 * x[1] + a * x[2], x[0] + a * x[1] + a2 * x[2]]
}

pub fn phase_to_sequence(x: [Complex; 3]) -> [Complex; 3] {
    let a = a_operator();
    let a2 = a * a;
    [
        (x[0] + x[1] + x[2]) / 3.0,
        (x[0] + a * x[1] + a2 * x[2]) / 3.0,
        (x[0] + a2 * x[1] + a * x[2]) / 3.0,
    ]
}

pub fn compute_fault(networks: &SequenceNetworks, spec: &FaultSpec) -> Result<FaultResult, Error> {
    let zf = spec.z_fault;
    if !(zf.re.is_finite() && zf.im.is_finite()) || zf.re < 0.0 {
        return Err(Error::InvalidInput(format!(
            "fault impedance {zf} must be finite with non-negative resistance"
        )));
    }
    let k = networks
        .positive
        .index_of(spec.bus)
        .ok_or(Error::UnknownBus(spec.bus))?;
    let e = spec.prefault_voltage.unwrap_or(networks.prefault[k]);

    let z1 = networks.thevenin(Sequence::Positive, spec.bus)?;
    let z2 = networks.thevenin(Sequence::Negative, spec.bus)?;
    let needs_zero = matches!(
        spec.kind,
        FaultKind::SingleLineToGround | FaultKind::DoubleLineToGround
    );
    let z0 = if needs_zero {
        networks.thevenin(Sequence::Zero, spec.bus)?
    } else {
        match networks.thevenin(Sequence::Zero, spec.bus) {
            Ok(z) => z,
            Err(Error::UngroundedSystem(_)) => Complex::new(f64::INFINITY, 0.0),
            Err(err) => return Err(err),
        }
    };

    let zero = Complex::new(0.0, 0.0);
    let (i0, i1, i2) = match spec.kind {
        FaultKind::ThreePhase => (zero, e / (z1 + zf), zero),
        FaultKind::SingleLineToGround => {
            let i = e / (z0 + z1 + z2 + zf * 3.0);
            (i, i, i)
        }
        FaultKind::LineToLine => {
            let i = e / (z1 + z2 + zf);
            (zero, i, -i)
        }
        FaultKind::DoubleLineToGround => {
            let z0f = z0 + zf * 3.0;
            let i1 = e / (z1 + z2 * z0f / (z2 + z0f));
            (-i1 * z2 / (z2 + z0f), i1, -i1 * z0f / (z2 + z0f))
        }
    };
    let seq_i = [i0, i1, i2];
    let v0 = if i0 == zero { zero } else { -z0 * i0 };
    let seq_v = [v0, e - z1 * i1, -z2 * i2];
    let phase_i = sequence_to_phase(seq_i);
    let phase_v = sequence_to_phase(seq_v);
    let base = networks.base_current_amps[k];
    let amps = [phase_i[0].norm() * base, phase_i[1].norm() * base, phase_i[2].norm() * base];
    let ground = 3.0 * i0.norm() * base;
    let reported = match spec.kind {
        FaultKind::ThreePhase | FaultKind::SingleLineToGround => amps[0],
        FaultKind::LineToLine => amps[1],
        FaultKind::DoubleLineToGround => ground,
    };

    Ok(FaultResult {
        bus: spec.bus,
        kind: spec.kind,
        z_fault: zf,
        prefault_voltage: e,
        z_thevenin: [z0, z1, z2],
        sequence_currents: seq_i,
        phase_currents: phase_i,
        phase_currents_amps: amps,
        sequence_voltages: seq_v,
        phase_voltages: phase_v,
        base_current_amps: base,
        ground_current_amps: ground,
        reported_current_amps: reported,
    })
}

/// Interrupting ratings in amperes, strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakerCatalog {
    ratings_amps: Vec<f64>,
}

impl BreakerCatalog {
    pub fn new(mut ratings_amps: Vec<f64>) -> Result<Self, Error> {
        if ratings_amps.is_empty() || ratings_amps.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidCatalog);
        }
        ratings_amps.sort_by(f64::total_cmp);
        if ratings_amps.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCatalog);
        }
        Ok(Self { ratings_amps })
    }

    pub fn ratings(&self) -> &[f64] {
        &self.ratings_amps
    }
}

impl Default for BreakerCatalog {
    fn default() -> Self {
        Self {
            ratings_amps: vec![1250.0, 1600.0, 2000.0, 2500.0, 3150.0, 4000.0],
        }
    }
}

/// Smallest rating that is at least `current_amps`.
pub fn select_breaker(current_amps: f64, catalog: &BreakerCatalog) -> Result<f64, Error> {
    let largest = *catalog.ratings_amps.last().ok_or(Error::InvalidCatalog)?;
    catalog
        .ratings_amps
        .iter()
        .copied()
        .find(|&r| r >= current_amps)
        .ok_or(Error::NoAdequateRating {
            current_amps,
            largest,
        })
}
