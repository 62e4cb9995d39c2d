//! Scenario files: a base case, ordered actions and an optional sweep.
//!
//! ```json
//! {
//!   "name": "outage 2-5 with shedding",
//!   "base_case": "@glover5",
//!   "actions": [{ "type": "remove_branch", "from_bus": 2, "to_bus": 5 }],
//!   "sweep": { "type": "load_shed", "bus": 2, "target_v": 0.95, "step_pct": 1.0 }
//! }
//! ```
//!
//! A sweep runs against the case with the actions already applied.

use std::path::{Path, PathBuf};

use gridflow_core::analysis::VoltageBounds;
use gridflow_core::network::{BranchKey, BusId, Network, ShuntDevice};
use gridflow_core::powerflow::SolveOptions;
use gridflow_core::scenario::{
    apply_actions, load_shed_sweep, run_scenario, shunt_sweep, tap_sweep, Action, Baseline, LoadShedResult,
    Outcome, PointRunner, ScenarioReport, SweepPoint, TapObjective, TapSweepResult, TapSweepSpec,
};
use gridflow_core::Error;
use serde::{Deserialize, Serialize};

use crate::case_file::{from_json, load_case, BranchDto, CaseError, ParseError, EMBEDDED_PREFIX};
use crate::solution_file::SolutionDoc;

fn first_circuit() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionDto {
    RemoveBranch {
        from_bus: u32,
        to_bus: u32,
        #[serde(default = "first_circuit")]
        circuit: u32,
    },
    AddBranch {
        branch: BranchDto,
    },
    AddShunt {
        bus: u32,
        q_nominal: f64,
    },
    SetShuntQ {
        bus: u32,
        q_nominal: f64,
    },
    SetTap {
        from_bus: u32,
        to_bus: u32,
        #[serde(default = "first_circuit")]
        circuit: u32,
        ratio: f64,
    },
    ScaleLoad {
        bus: u32,
        factor: f64,
    },
    SetLoad {
        bus: u32,
        p: f64,
        q: f64,
    },
}

impl ActionDto {
    pub fn to_action(&self) -> Action {
        match self {
            ActionDto::RemoveBranch { from_bus, to_bus, circuit } => {
                Action::RemoveBranch(BranchKey::new(*from_bus, *to_bus, *circuit))
            }
            ActionDto::AddBranch { branch } => Action::AddBranch(branch.to_branch()),
            ActionDto::AddShunt { bus, q_nominal } => Action::AddShunt(ShuntDevice::new(*bus, *q_nominal)),
            ActionDto::SetShuntQ { bus, q_nominal } => Action::SetShuntQ {
                bus: BusId(*bus),
                q_nominal: *q_nominal,
            },
            ActionDto::SetTap { from_bus, to_bus, circuit, ratio } => Action::SetTap {
                key: BranchKey::new(*from_bus, *to_bus, *circuit),
                ratio: *ratio,
            },
            ActionDto::ScaleLoad { bus, factor } => Action::ScaleLoad {
                bus: BusId(*bus),
                factor: *factor,
            },
            ActionDto::SetLoad { bus, p, q } => Action::SetLoad {
                bus: BusId(*bus),
                p: *p,
                q: *q,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyDto {
    pub from_bus: u32,
    pub to_bus: u32,
    #[serde(default = "first_circuit")]
    pub circuit: u32,
}

impl KeyDto {
    fn key(&self) -> BranchKey {
        BranchKey::new(self.from_bus, self.to_bus, self.circuit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveDto {
    #[default]
    MinLoss,
    MinAdjustment,
}

fn tap_min() -> f64 {
    0.85
}
fn tap_max() -> f64 {
    1.15
}
fn tap_step() -> f64 {
    0.01
}
fn shed_step() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepDto {
    Shunt {
        bus: u32,
        /// Ratings in per unit; zero means no shunt.
        q_values: Vec<f64>,
    },
    Tap {
        transformers: Vec<KeyDto>,
        #[serde(default = "tap_min")]
        min: f64,
        #[serde(default = "tap_max")]
        max: f64,
        #[serde(default = "tap_step")]
        step: f64,
        target_bus: u32,
        target_v: f64,
        #[serde(default)]
        objective: ObjectiveDto,
    },
    LoadShed {
        bus: u32,
        target_v: f64,
        #[serde(default = "shed_step")]
        step_pct: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    /// Case path relative to the scenario file, or `@glover5`.
    pub base_case: String,
    #[serde(default)]
    pub actions: Vec<ActionDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepDto>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(ParseError),
    #[error("base case: {0}")]
    Case(CaseError),
    #[error("{0}")]
    Engine(Error),
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ParseError> {
    from_json(text)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, ScenarioFileError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioFileError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_scenario(&text).map_err(ScenarioFileError::Parse)
}

/// Resolves `base_case` against the directory holding the scenario file.
pub fn resolve_base(base_case: &str, scenario_dir: Option<&Path>) -> String {
    if base_case.starts_with(EMBEDDED_PREFIX) {
        return base_case.to_string();
    }
    let p = PathBuf::from(base_case);
    match scenario_dir {
        Some(dir) if p.is_relative() => dir.join(p).display().to_string(),
        _ => base_case.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepOutcome {
    Shunt { bus: BusId, points: Vec<SweepPoint> },
    Tap(Box<TapSweepResult>),
    LoadShed(LoadShedResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub file: ScenarioFile,
    pub network: Network,
    pub report: ScenarioReport,
    pub sweep: Option<SweepOutcome>,
}

impl ScenarioRun {
    /// Whether the scenario's own solve converged.
    pub fn converged(&self) -> bool {
        matches!(self.report.outcome, Outcome::Converged(_))
    }
}

pub fn run_scenario_file(
    file: &ScenarioFile,
    scenario_dir: Option<&Path>,
    options: &SolveOptions,
    runner: &dyn PointRunner,
) -> Result<ScenarioRun, ScenarioFileError> {
    let case = load_case(&resolve_base(&file.base_case, scenario_dir)).map_err(ScenarioFileError::Case)?;
    let actions: Vec<Action> = file.actions.iter().map(ActionDto::to_action).collect();
    let engine = ScenarioFileError::Engine;
    let baseline = Baseline::new(case.network, options.clone()).map_err(engine)?;
    let report = run_scenario(&baseline, &file.name, &actions).map_err(engine)?;
    let network = apply_actions(&baseline.network, &actions).map_err(engine)?;

    let sweep = match &file.sweep {
        None => None,
        Some(spec) => {
            let base = Baseline::new(network.clone(), options.clone()).map_err(engine)?;
            Some(match spec {
                SweepDto::Shunt { bus, q_values } => SweepOutcome::Shunt {
                    bus: BusId(*bus),
                    points: shunt_sweep(&base, BusId(*bus), q_values, runner).map_err(engine)?,
                },
                SweepDto::Tap {
                    transformers,
                    min,
                    max,
                    step,
                    target_bus,
                    target_v,
                    objective,
                } => {
                    let spec = TapSweepSpec {
                        transformers: transformers.iter().map(KeyDto::key).collect(),
                        min: *min,
                        max: *max,
                        step: *step,
                        target_bus: BusId(*target_bus),
                        target_v: *target_v,
                        objective: match objective {
                            ObjectiveDto::MinLoss => TapObjective::MinLoss,
                            ObjectiveDto::MinAdjustment => TapObjective::MinAdjustment,
                        },
                    };
                    SweepOutcome::Tap(Box::new(tap_sweep(&base, &spec, runner).map_err(engine)?))
                }
                SweepDto::LoadShed { bus, target_v, step_pct } => {
                    SweepOutcome::LoadShed(load_shed_sweep(&base, BusId(*bus), *target_v, *step_pct).map_err(engine)?)
                }
            })
        }
    };
    Ok(ScenarioRun {
        file: file.clone(),
        network,
        report,
        sweep,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDoc {
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusDelta {
    pub bus: u32,
    pub dv_pu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingDelta {
    pub from_bus: u32,
    pub to_bus: u32,
    pub circuit: u32,
    pub d_loading_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltasDoc {
    pub d_loss_mw: f64,
    pub dv: Vec<BusDelta>,
    pub loading: Vec<LoadingDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPointDoc {
    pub parameter: f64,
    pub converged: bool,
    pub v_pu: Option<f64>,
    pub loss_mw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapPointDoc {
    pub taps: Vec<f64>,
    pub converged: bool,
    pub v_pu: Option<f64>,
    pub loss_mw: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShedPointDoc {
    pub shed_pct: f64,
    pub v_pu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SweepDoc {
    Shunt {
        bus: u32,
        points: Vec<SweepPointDoc>,
    },
    Tap {
        best: Option<TapPointDoc>,
        grid: Vec<TapPointDoc>,
    },
    LoadShed {
        bus: u32,
        target_v: f64,
        step_pct: f64,
        minimal_shed_pct: Option<f64>,
        infeasible: bool,
        evaluated: Vec<ShedPointDoc>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub name: String,
    pub base_case: String,
    pub actions: Vec<ActionDto>,
    pub outcome: OutcomeDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<DeltasDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepDoc>,
}

fn outcome_doc(network: &Network, outcome: &Outcome) -> Result<OutcomeDoc, Error> {
    Ok(match outcome {
        Outcome::Converged(s) => OutcomeDoc {
            converged: true,
            message: None,
            trace: None,
            solution: Some(SolutionDoc::build(network, &s.solution, &s.flows, VoltageBounds::default())?),
        },
        Outcome::NotConverged { message, record } => OutcomeDoc {
            converged: false,
            message: Some(message.clone()),
            trace: record.as_ref().map(|r| r.trace.clone()),
            solution: None,
        },
    })
}

impl ScenarioDoc {
    pub fn build(run: &ScenarioRun) -> Result<Self, Error> {
        let r = &run.report;
        let deltas = r.deltas.as_ref().map(|d| DeltasDoc {
            d_loss_mw: d.d_loss_mw,
            dv: d.dv.iter().map(|(b, v)| BusDelta { bus: b.0, dv_pu: *v }).collect(),
            loading: d
                .d_loading_pct
                .iter()
                .map(|(k, v)| LoadingDelta {
                    from_bus: k.from.0,
                    to_bus: k.to.0,
                    circuit: k.circuit,
                    d_loading_pct: *v,
                })
                .collect(),
        });
        let sweep = run.sweep.as_ref().map(|s| match s {
            SweepOutcome::Shunt { bus, points } => SweepDoc::Shunt {
                bus: bus.0,
                points: points
                    .iter()
                    .map(|p| SweepPointDoc {
                        parameter: p.parameter,
                        converged: p.report.outcome.solved().is_some(),
                        v_pu: p.report.outcome.v_mag_at(*bus),
                        loss_mw: p.report.outcome.solved().map(|s| s.loss_mw()),
                    })
                    .collect(),
            },
            SweepOutcome::Tap(t) => {
                let doc = |p: &gridflow_core::scenario::TapPoint| TapPointDoc {
                    taps: p.taps.clone(),
                    converged: p.converged,
                    v_pu: p.v_target,
                    loss_mw: p.loss_mw,
                    feasible: p.feasible,
                };
                SweepDoc::Tap {
                    best: t.best.map(|i| doc(&t.grid[i])),
                    grid: t.grid.iter().map(doc).collect(),
                }
            }
            SweepOutcome::LoadShed(l) => SweepDoc::LoadShed {
                bus: l.bus.0,
                target_v: l.target_v,
                step_pct: l.step_pct,
                minimal_shed_pct: l.minimal_shed_pct,
                infeasible: l.is_infeasible(),
                evaluated: l
                    .evaluated
                    .iter()
                    .map(|p| ShedPointDoc {
                        shed_pct: p.shed_pct,
                        v_pu: p.v_mag,
                    })
                    .collect(),
            },
        });
        Ok(Self {
            name: r.name.clone(),
            base_case: run.file.base_case.clone(),
            actions: run.file.actions.clone(),
            outcome: outcome_doc(&run.network, &r.outcome)?,
            deltas,
            sweep,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridflow_core::scenario::Sequential;

    #[test]
    fn parses_every_action_kind() {
        let text = r#"{"name": "all", "base_case": "@glover5", "actions": [
            {"type": "remove_branch", "from_bus": 2, "to_bus": 5},
            {"type": "add_branch", "branch": {"from_bus": 2, "to_bus": 5, "r": 0.0045, "x": 0.05, "b_charging": 0.88, "mva_limit": 12}},
            {"type": "add_shunt", "bus": 2, "q_nominal": 1.9},
            {"type": "set_shunt_q", "bus": 2, "q_nominal": 1.5},
            {"type": "set_tap", "from_bus": 5, "to_bus": 1, "ratio": 1.05},
            {"type": "scale_load", "bus": 2, "factor": 0.9},
            {"type": "set_load", "bus": 4, "p": 0.1, "q": 0.0}]}"#;
        let f = parse_scenario(text).unwrap();
        assert_eq!(f.actions.len(), 7);
        let run = run_scenario_file(&f, None, &SolveOptions::default(), &Sequential).unwrap();
        assert!(run.converged());
        assert_eq!(run.network.shunts[0].q_nominal, 1.5);
    }

    #[test]
    fn unknown_action_field_is_rejected() {
        let text = r#"{"name": "x", "base_case": "@glover5", "actions": [{"type": "add_shunt", "bus": 2, "q": 1}]}"#;
        let err = parse_scenario(text).unwrap_err();
        assert!(err.path.starts_with("actions[0]"), "{}", err.path);
    }

    #[test]
    fn relative_base_resolves_next_to_file() {
        let dir = Path::new("/data/studies");
        assert_eq!(resolve_base("../case.json", Some(dir)), "/data/studies/../case.json");
        assert_eq!(resolve_base("@glover5", Some(dir)), "@glover5");
        assert_eq!(resolve_base("/abs.json", Some(dir)), "/abs.json");
    }

    #[test]
    fn reports_are_byte_identical() {
        let text = r#"{"name": "shunt", "base_case": "@glover5", "actions": [{"type": "add_shunt", "bus": 2, "q_nominal": 1.9}]}"#;
        let f = parse_scenario(text).unwrap();
        let a = ScenarioDoc::build(&run_scenario_file(&f, None, &SolveOptions::default(), &Sequential).unwrap()).unwrap();
        let b = ScenarioDoc::build(&run_scenario_file(&f, None, &SolveOptions::default(), &Sequential).unwrap()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}
