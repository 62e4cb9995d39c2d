//! JSON case files.
//!
//! All electrical quantities are per unit on `s_base_mva` except `base_kv`;
//! angles are in degrees. Unknown keys are rejected. Optional fields take the
//! defaults of [`Branch::line`] and [`Branch::transformer`].

use std::fmt;
use std::path::Path;

use gridflow_core::fault::{GeneratorSequence, SequenceData, TransformerConnection, TransformerSequence};
use gridflow_core::network::{
    Branch, BranchKey, BranchKind, Bus, BusId, BusKind, Network, ShuntDevice, ValidationReport, ZeroSeqPath,
};
use gridflow_core::Complex;
use serde::{Deserialize, Serialize};

/// The bundled five-bus study case.
pub const GLOVER5_JSON: &str = include_str!("../cases/glover5.json");

/// Prefix that selects a bundled case instead of a file.
pub const EMBEDDED_PREFIX: char = '@';

#[derive(Debug, Clone, PartialEq)]
pub struct CaseFile {
    pub network: Network,
    pub notes: Vec<String>,
    pub sequence: Option<SequenceData>,
}

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unknown embedded case '{0}' (available: @glover5)")]
    UnknownEmbedded(String),
    #[error("{0}")]
    Parse(ParseError),
    #[error("invalid case:\n{0}")]
    Validation(ValidationReport),
}

/// Syntax or schema error with its location.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    /// JSON path to the offending value, e.g. `branches[2].x`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at line {}, column {}", self.line, self.column)?;
        if !self.path.is_empty() && self.path != "." {
            write!(f, " ({})", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ParseError {}

/// Deserializes JSON, reporting the path of the first failing field.
pub(crate) fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ParseError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let result: Result<T, _> = serde_path_to_error::deserialize(de);
    let value = result.map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ParseError {
            line: inner.line(),
            column: inner.column(),
            path,
            message: strip_position(&inner.to_string()),
        }
    })?;
    Ok(value)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindDto {
    Slack,
    Pv,
    Pq,
}

impl From<BusKind> for KindDto {
    fn from(k: BusKind) -> Self {
        match k {
            BusKind::Slack => KindDto::Slack,
            BusKind::PV => KindDto::Pv,
            BusKind::PQ => KindDto::Pq,
        }
    }
}

impl From<KindDto> for BusKind {
    fn from(k: KindDto) -> Self {
        match k {
            KindDto::Slack => BusKind::Slack,
            KindDto::Pv => BusKind::PV,
            KindDto::Pq => BusKind::PQ,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn first_circuit() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusDto {
    pub id: u32,
    pub kind: KindDto,
    #[serde(default = "one")]
    pub v_setpoint: f64,
    #[serde(default)]
    pub angle_setpoint_deg: f64,
    #[serde(default)]
    pub p_gen: f64,
    #[serde(default)]
    pub q_gen: f64,
    #[serde(default)]
    pub p_load: f64,
    #[serde(default)]
    pub q_load: f64,
    #[serde(default)]
    pub q_gen_min: Option<f64>,
    #[serde(default)]
    pub q_gen_max: Option<f64>,
    pub base_kv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BranchKindDto {
    #[default]
    Line,
    Transformer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroPathDto {
    Open,
    GroundedThrough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDto {
    pub from_bus: u32,
    pub to_bus: u32,
    #[serde(default = "first_circuit")]
    pub circuit: u32,
    #[serde(default)]
    pub kind: BranchKindDto,
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub g_shunt: f64,
    #[serde(default)]
    pub b_charging: f64,
    #[serde(default = "one")]
    pub tap: f64,
    #[serde(default)]
    pub phase_shift_deg: f64,
    pub mva_limit: f64,
    #[serde(default = "yes")]
    pub in_service: bool,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub x0: Option<f64>,
    #[serde(default)]
    pub b0_charging: Option<f64>,
    #[serde(default)]
    pub zero_seq_path: Option<ZeroPathDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShuntDto {
    pub bus: u32,
    pub q_nominal: f64,
    #[serde(default = "yes")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDto {
    pub bus: u32,
    pub x_sub: f64,
    pub x_neg: f64,
    pub x_zero: f64,
    /// `[r, x]`.
    #[serde(default)]
    pub z_neutral: [f64; 2],
    #[serde(default = "yes")]
    pub grounded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionDto {
    YgYg,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerSeqDto {
    pub from_bus: u32,
    pub to_bus: u32,
    #[serde(default = "first_circuit")]
    pub circuit: u32,
    pub connection: ConnectionDto,
    #[serde(default)]
    pub z_neutral: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceDto {
    #[serde(default)]
    pub generators: Vec<GeneratorDto>,
    #[serde(default)]
    pub transformers: Vec<TransformerSeqDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseDto {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub s_base_mva: f64,
    pub buses: Vec<BusDto>,
    #[serde(default)]
    pub branches: Vec<BranchDto>,
    #[serde(default)]
    pub shunts: Vec<ShuntDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceDto>,
}

impl BranchDto {
    pub fn to_branch(&self) -> Branch {
        let base = match self.kind {
            BranchKindDto::Line => Branch::line(self.from_bus, self.to_bus, self.r, self.x, self.b_charging, self.mva_limit),
            BranchKindDto::Transformer => {
                let mut b = Branch::transformer(self.from_bus, self.to_bus, self.r, self.x, self.mva_limit);
                b.b_charging = self.b_charging;
                b.b0_charging = self.b_charging;
                b
            }
        };
        Branch {
            circuit: self.circuit,
            g_shunt: self.g_shunt,
            tap: self.tap,
            phase_shift: self.phase_shift_deg.to_radians(),
            in_service: self.in_service,
            r0: self.r0.unwrap_or(base.r0),
            x0: self.x0.unwrap_or(base.x0),
            b0_charging: self.b0_charging.unwrap_or(base.b0_charging),
            zero_seq_path: match self.zero_seq_path {
                Some(ZeroPathDto::Open) => ZeroSeqPath::Open,
                Some(ZeroPathDto::GroundedThrough) => ZeroSeqPath::GroundedThrough,
                None => base.zero_seq_path,
            },
            ..base
        }
    }

    pub fn from_branch(b: &Branch) -> Self {
        Self {
            from_bus: b.from_bus.0,
            to_bus: b.to_bus.0,
            circuit: b.circuit,
            kind: match b.kind {
                BranchKind::Line => BranchKindDto::Line,
                BranchKind::Transformer => BranchKindDto::Transformer,
            },
            r: b.r,
            x: b.x,
            g_shunt: b.g_shunt,
            b_charging: b.b_charging,
            tap: b.tap,
            phase_shift_deg: b.phase_shift.to_degrees(),
            mva_limit: b.mva_limit,
            in_service: b.in_service,
            r0: Some(b.r0),
            x0: Some(b.x0),
            b0_charging: Some(b.b0_charging),
            zero_seq_path: Some(match b.zero_seq_path {
                ZeroSeqPath::Open => ZeroPathDto::Open,
                ZeroSeqPath::GroundedThrough => ZeroPathDto::GroundedThrough,
            }),
        }
    }
}

impl CaseDto {
    pub fn into_case(self) -> CaseFile {
        let buses = self
            .buses
            .iter()
            .map(|b| Bus {
                id: BusId(b.id),
                kind: b.kind.into(),
                v_setpoint: b.v_setpoint,
                angle_setpoint: b.angle_setpoint_deg.to_radians(),
                p_gen: b.p_gen,
                q_gen: b.q_gen,
                p_load: b.p_load,
                q_load: b.q_load,
                q_gen_min: b.q_gen_min,
                q_gen_max: b.q_gen_max,
                base_kv: b.base_kv,
            })
            .collect();
        let network = Network {
            name: self.name,
            s_base: self.s_base_mva,
            buses,
            branches: self.branches.iter().map(BranchDto::to_branch).collect(),
            shunts: self
                .shunts
                .iter()
                .map(|s| ShuntDevice {
                    bus: BusId(s.bus),
                    q_nominal: s.q_nominal,
                    in_service: s.in_service,
                })
                .collect(),
        };
        let sequence = self.sequence.map(|s| SequenceData {
            generators: s
                .generators
                .iter()
                .map(|g| GeneratorSequence {
                    bus: BusId(g.bus),
                    x_sub: g.x_sub,
                    x_neg: g.x_neg,
                    x_zero: g.x_zero,
                    z_neutral: Complex::new(g.z_neutral[0], g.z_neutral[1]),
                    grounded: g.grounded,
                })
                .collect(),
            transformers: s
                .transformers
                .iter()
                .map(|t| TransformerSequence {
                    key: BranchKey::new(t.from_bus, t.to_bus, t.circuit),
                    connection: match t.connection {
                        ConnectionDto::YgYg => TransformerConnection::YgYg,
                        ConnectionDto::Other => TransformerConnection::Other,
                    },
                    z_neutral: Complex::new(t.z_neutral[0], t.z_neutral[1]),
                })
                .collect(),
        });
        CaseFile {
            network,
            notes: self.notes,
            sequence,
        }
    }

    /// Materializes every field, defaults included.
    pub fn from_case(case: &CaseFile) -> Self {
        let n = &case.network;
        Self {
            name: n.name.clone(),
            notes: case.notes.clone(),
            s_base_mva: n.s_base,
            buses: n
                .buses
                .iter()
                .map(|b| BusDto {
                    id: b.id.0,
                    kind: b.kind.into(),
                    v_setpoint: b.v_setpoint,
                    angle_setpoint_deg: b.angle_setpoint.to_degrees(),
                    p_gen: b.p_gen,
                    q_gen: b.q_gen,
                    p_load: b.p_load,
                    q_load: b.q_load,
                    q_gen_min: b.q_gen_min,
                    q_gen_max: b.q_gen_max,
                    base_kv: b.base_kv,
                })
                .collect(),
            branches: n.branches.iter().map(BranchDto::from_branch).collect(),
            shunts: n
                .shunts
                .iter()
                .map(|s| ShuntDto {
                    bus: s.bus.0,
                    q_nominal: s.q_nominal,
                    in_service: s.in_service,
                })
                .collect(),
            sequence: case.sequence.as_ref().map(|s| SequenceDto {
                generators: s
                    .generators
                    .iter()
                    .map(|g| GeneratorDto {
                        bus: g.bus.0,
                        x_sub: g.x_sub,
                        x_neg: g.x_neg,
                        x_zero: g.x_zero,
                        z_neutral: [g.z_neutral.re, g.z_neutral.im],
                        grounded: g.grounded,
                    })
                    .collect(),
                transformers: s
                    .transformers
                    .iter()
                    .map(|t| TransformerSeqDto {
                        from_bus: t.key.from.0,
                        to_bus: t.key.to.0,
                        circuit: t.key.circuit,
                        connection: match t.connection {
                            TransformerConnection::YgYg => ConnectionDto::YgYg,
                            TransformerConnection::Other => ConnectionDto::Other,
                        },
                        z_neutral: [t.z_neutral.re, t.z_neutral.im],
                    })
                    .collect(),
            }),
        }
    }
}

/// Parses a case document without validating it.
pub fn parse_case_unchecked(text: &str) -> Result<CaseFile, ParseError> {
    Ok(from_json::<CaseDto>(text)?.into_case())
}

/// Parses and validates a case document. Validation reports every violated
/// invariant at once.
pub fn parse_case(text: &str) -> Result<CaseFile, CaseError> {
    let case = parse_case_unchecked(text).map_err(CaseError::Parse)?;
    let report = case.network.validate();
    if !report.is_ok() {
        return Err(CaseError::Validation(report));
    }
    Ok(case)
}

pub fn serialize_case(case: &CaseFile) -> String {
    let mut s = serde_json::to_string_pretty(&CaseDto::from_case(case)).expect("case serializes");
    s.push('\n');
    s
}

/// Reads the document text for `source`, which is either a path or `@name`
/// for a bundled case.
pub fn read_case_text(source: &str) -> Result<String, CaseError> {
    if let Some(name) = source.strip_prefix(EMBEDDED_PREFIX) {
        return match name {
            "glover5" => Ok(GLOVER5_JSON.to_string()),
            other => Err(CaseError::UnknownEmbedded(other.to_string())),
        };
    }
    std::fs::read_to_string(Path::new(source)).map_err(|e| CaseError::Io {
        path: source.to_string(),
        source: e,
    })
}

pub fn load_case(source: &str) -> Result<CaseFile, CaseError> {
    parse_case(&read_case_text(source)?)
}
