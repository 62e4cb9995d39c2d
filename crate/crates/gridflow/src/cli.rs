//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable or invalid input, 3 power
//! flow did not converge, 4 fault analysis or breaker selection failed.
//! Data goes to stdout and diagnostics to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use gridflow_core::analysis::{branch_flows, VoltageBounds};
use gridflow_core::fault::{
    build_sequence_networks, compute_fault, select_breaker, FaultKind, FaultSpec, Prefault,
};
use gridflow_core::network::BusId;
use gridflow_core::powerflow::{solve_power_flow, SolveOptions};
use gridflow_core::scenario::{PointRunner, Sequential};
use gridflow_core::ybus::{build_ybus, Sequence};
use gridflow_core::{Complex, Error};

use crate::case_file::{load_case, CaseError, CaseFile};
use crate::catalog::resolve_catalog;
use crate::output::{self, FaultDoc, FaultRow, OutputFormat};
use crate::parallel::PoolRunner;
use crate::scenario_file::{load_scenario, run_scenario_file, ScenarioDoc, ScenarioFileError};
use crate::solution_file::SolutionDoc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_FAULT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "gridflow", version, about = "Power flow, fault and what-if studies on small grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SequenceArg {
    Positive,
    Negative,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FaultTypeArg {
    #[value(name = "3ph")]
    ThreePhase,
    Slg,
    Ll,
    Dlg,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrefaultArg {
    Flat,
    Solved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DocFormat {
    Table,
    Json,
}

#[derive(Debug, clap::Args)]
struct SolveArgs {
    /// Convergence tolerance on the largest mismatch, per unit.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Hold PV buses at their setpoint regardless of reactive limits.
    #[arg(long)]
    no_q_limits: bool,
    /// Fraction of each Newton step to apply.
    #[arg(long, default_value_t = 1.0)]
    damping: f64,
}

impl SolveArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            tolerance: self.tol,
            max_iterations: self.max_iter,
            enforce_q_limits: !self.no_q_limits,
            damping: self.damping,
            ..SolveOptions::default()
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the power flow and print bus voltages.
    Solve {
        /// Case file, or @glover5 for the bundled case.
        #[arg(default_value = "@glover5")]
        case: String,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
        format: OutputFormat,
    },
    /// Print the bus admittance matrix.
    Ybus {
        #[arg(default_value = "@glover5")]
        case: String,
        #[arg(long, value_enum, default_value_t = SequenceArg::Positive)]
        sequence: SequenceArg,
        /// Full-precision CSV instead of the rounded table.
        #[arg(long)]
        csv: bool,
    },
    /// Fault currents at a bus and the breaker rating for each.
    Faults {
        #[arg(default_value = "@glover5")]
        case: String,
        #[arg(long)]
        bus: u32,
        #[arg(long = "type", value_enum, default_value_t = FaultTypeArg::All)]
        kind: FaultTypeArg,
        /// Fault impedance as R+jX in per unit.
        #[arg(long, default_value = "0+j0", allow_hyphen_values = true)]
        zf: String,
        /// TOML breaker catalog; defaults to $GRIDFLOW_CATALOG, then built-in ratings.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Pre-fault state: converged power flow with loads as admittances, or
        /// 1.0 pu with loads and charging neglected.
        #[arg(long, value_enum, default_value_t = PrefaultArg::Flat)]
        prefault: PrefaultArg,
        #[arg(long, value_enum, default_value_t = DocFormat::Table)]
        format: DocFormat,
    },
    /// Run a scenario file.
    Scenario {
        file: PathBuf,
        /// Evaluate sweep points on this many threads.
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long, value_enum, default_value_t = DocFormat::Table)]
        format: DocFormat,
    },
    /// Bus and branch results, totals and voltage violations.
    Report {
        #[arg(default_value = "@glover5")]
        case: String,
        #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
        format: OutputFormat,
        #[arg(long, default_value_t = 0.95)]
        vmin: f64,
        #[arg(long, default_value_t = 1.05)]
        vmax: f64,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Check a case file and list every problem found.
    Validate {
        #[arg(default_value = "@glover5")]
        case: String,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn core_failure(e: Error) -> Failure {
    let code = match &e {
        Error::NonConvergence(_) | Error::SingularJacobian { .. } => EXIT_NO_CONVERGENCE,
        Error::Validation(_) | Error::UnknownBus(_) | Error::NotSupported(_) | Error::ActionRejected(_) => EXIT_INPUT,
        Error::UngroundedSystem(_) | Error::NoAdequateRating { .. } | Error::InvalidCatalog => EXIT_FAULT,
        _ => EXIT_INPUT,
    };
    Failure::new(code, e.to_string())
}

fn case_failure(e: CaseError) -> Failure {
    Failure::new(EXIT_INPUT, e.to_string())
}

fn load(case: &str) -> Result<CaseFile, Failure> {
    load_case(case).map_err(case_failure)
}

/// Parses `R+jX`, `R-jX`, `R`, `jX` or `-jX`.
pub fn parse_complex(text: &str) -> Option<Complex> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    let split = t
        .char_indices()
        .skip(1)
        .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(t.as_bytes()[i - 1], b'e' | b'E'))
        .map(|(i, _)| i)
        .last();
    let (re_part, im_part) = match split {
        Some(i) if t[i..].contains('j') => (&t[..i], &t[i..]),
        _ if t.contains('j') => ("", t.as_str()),
        _ => (t.as_str(), ""),
    };
    let re = if re_part.is_empty() { 0.0 } else { re_part.parse().ok()? };
    let im = if im_part.is_empty() {
        0.0
    } else {
        let (sign, rest) = match im_part.as_bytes()[0] {
            b'+' => (1.0, &im_part[1..]),
            b'-' => (-1.0, &im_part[1..]),
            _ => (1.0, im_part),
        };
        let digits = rest.strip_prefix('j')?;
        let mag: f64 = if digits.is_empty() { 1.0 } else { digits.parse().ok()? };
        sign * mag
    };
    Some(Complex::new(re, im))
}

fn solve_doc(case: &CaseFile, options: &SolveOptions, bounds: VoltageBounds) -> Result<SolutionDoc, Failure> {
    let sol = solve_power_flow(&case.network, options).map_err(core_failure)?;
    let flows = branch_flows(&case.network, &sol).map_err(core_failure)?;
    SolutionDoc::build(&case.network, &sol, &flows, bounds).map_err(core_failure)
}

fn run_command(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let mut emit = |text: &str| -> Result<(), Failure> {
        out.write_all(text.as_bytes())
            .map_err(|e| Failure::new(EXIT_INPUT, format!("write failed: {e}")))
    };
    match cmd {
        Command::Solve { case, solve, format } => {
            let case = load(&case)?;
            let doc = solve_doc(&case, &solve.options(), VoltageBounds::default())?;
            emit(&match format {
                OutputFormat::Table => output::solve_table(&doc),
                OutputFormat::Csv => output::bus_csv(&doc),
                OutputFormat::Json => doc.to_json(),
            })?;
        }
        Command::Report {
            case,
            format,
            vmin,
            vmax,
            solve,
        } => {
            if vmin.is_nan() || vmax.is_nan() || vmin > vmax {
                return Err(Failure::new(EXIT_USAGE, format!("--vmin {vmin} exceeds --vmax {vmax}")));
            }
            let case = load(&case)?;
            let doc = solve_doc(&case, &solve.options(), VoltageBounds { v_min: vmin, v_max: vmax })?;
            emit(&match format {
                OutputFormat::Table => output::report_table(&doc),
                OutputFormat::Csv => {
                    let mut s = output::bus_csv(&doc);
                    s.push('\n');
                    s.push_str(&output::branch_csv(&doc));
                    s
                }
                OutputFormat::Json => doc.to_json(),
            })?;
        }
        Command::Ybus { case, sequence, csv } => {
            let case = load(&case)?;
            let seq = match sequence {
                SequenceArg::Positive => Sequence::Positive,
                SequenceArg::Negative => Sequence::Negative,
                SequenceArg::Zero => Sequence::Zero,
            };
            let y = build_ybus(&case.network, seq).map_err(core_failure)?;
            emit(&if csv { output::ybus_csv(&y) } else { output::ybus_table(&y) })?;
        }
        Command::Validate { case } => {
            let text = crate::case_file::read_case_text(&case).map_err(case_failure)?;
            let parsed = crate::case_file::parse_case_unchecked(&text)
                .map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
            let report = parsed.network.validate();
            if !report.is_ok() {
                return Err(Failure::new(EXIT_INPUT, format!("invalid case:\n{report}")));
            }
            for w in &report.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            emit(&format!(
                "ok: {} buses, {} branches, {} shunts\n",
                parsed.network.buses.len(),
                parsed.network.branches.len(),
                parsed.network.shunts.len()
            ))?;
        }
        Command::Faults {
            case,
            bus,
            kind,
            zf,
            catalog,
            prefault,
            format,
        } => {
            let z_fault = parse_complex(&zf)
                .ok_or_else(|| Failure::new(EXIT_USAGE, format!("cannot read fault impedance '{zf}'; use R+jX")))?;
            let catalog = resolve_catalog(catalog.as_deref()).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
            let case = load(&case)?;
            if case.network.bus(BusId(bus)).is_none() {
                return Err(Failure::new(EXIT_INPUT, format!("unknown bus {bus}")));
            }
            let seq_data = case.sequence.clone().ok_or_else(|| {
                Failure::new(EXIT_FAULT, "case has no sequence data; add a \"sequence\" block")
            })?;
            let solution;
            let pre = match prefault {
                PrefaultArg::Flat => Prefault::Flat,
                PrefaultArg::Solved => {
                    solution = solve_power_flow(&case.network, &SolveOptions::default()).map_err(core_failure)?;
                    Prefault::Solved(&solution)
                }
            };
            let nets = build_sequence_networks(&case.network, &seq_data, pre).map_err(core_failure)?;
            let kinds: Vec<FaultKind> = match kind {
                FaultTypeArg::ThreePhase => vec![FaultKind::ThreePhase],
                FaultTypeArg::Slg => vec![FaultKind::SingleLineToGround],
                FaultTypeArg::Ll => vec![FaultKind::LineToLine],
                FaultTypeArg::Dlg => vec![FaultKind::DoubleLineToGround],
                FaultTypeArg::All => FaultKind::ALL.to_vec(),
            };
            let mut rows = Vec::new();
            let mut selection_errors = Vec::new();
            for k in kinds {
                let spec = FaultSpec {
                    bus: BusId(bus),
                    kind: k,
                    z_fault,
                    prefault_voltage: None,
                };
                let r = compute_fault(&nets, &spec).map_err(|e| Failure::new(EXIT_FAULT, e.to_string()))?;
                let breaker = match select_breaker(r.reported_current_amps, &catalog) {
                    Ok(b) => Some(b),
                    Err(e) => {
                        selection_errors.push(format!("{k}: {e}"));
                        None
                    }
                };
                rows.push(FaultRow::new(&r, breaker));
            }
            let doc = FaultDoc {
                case: case.network.name.clone(),
                bus,
                prefault: match prefault {
                    PrefaultArg::Flat => "flat".into(),
                    PrefaultArg::Solved => "solved".into(),
                },
                catalog_amps: catalog.ratings().to_vec(),
                faults: rows,
            };
            emit(&match format {
                DocFormat::Table => output::fault_table(&doc),
                DocFormat::Json => doc.to_json(),
            })?;
            if !selection_errors.is_empty() {
                return Err(Failure::new(EXIT_FAULT, selection_errors.join("\n")));
            }
        }
        Command::Scenario { file, parallel, format } => {
            if parallel == Some(0) {
                return Err(Failure::new(EXIT_USAGE, "--parallel needs at least one thread"));
            }
            let scenario = load_scenario(&file).map_err(scenario_failure)?;
            let pool;
            let runner: &dyn PointRunner = match parallel {
                Some(n) => {
                    pool = PoolRunner::new(n).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
                    &pool
                }
                None => &Sequential,
            };
            let dir = file.parent().map(Path::to_path_buf);
            let run = run_scenario_file(&scenario, dir.as_deref(), &SolveOptions::default(), runner)
                .map_err(scenario_failure)?;
            let doc = ScenarioDoc::build(&run).map_err(core_failure)?;
            emit(&match format {
                DocFormat::Table => output::scenario_table(&doc),
                DocFormat::Json => doc.to_json(),
            })?;
            if !run.converged() && run.sweep.is_none() {
                let msg = doc
                    .outcome
                    .message
                    .clone()
                    .unwrap_or_else(|| "power flow did not converge".into());
                return Err(Failure::new(EXIT_NO_CONVERGENCE, format!("scenario '{}': {msg}", doc.name)));
            }
        }
    }
    Ok(EXIT_OK)
}

fn scenario_failure(e: ScenarioFileError) -> Failure {
    match e {
        ScenarioFileError::Engine(e) => core_failure(e),
        other => Failure::new(EXIT_INPUT, other.to_string()),
    }
}

/// Runs the CLI with explicit arguments and streams; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run_command(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
