//! What-if studies: ordered edits to a base case, re-solved and compared
//! against the unmodified solution, plus parameter sweeps built on top.
//!
//! Sweep points are independent. Each sweep takes a [`PointRunner`] so callers
//! with threads can evaluate points concurrently; [`Sequential`] runs them in
//! order.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::{branch_flows, summarize, BranchFlow, SystemSummary, VoltageBounds};
use crate::network::{Branch, BranchKey, BranchKind, BusId, Network, ShuntDevice};
use crate::powerflow::{solve_power_flow, NonConvergence, PowerFlowSolution, SolveOptions};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    RemoveBranch(BranchKey),
    AddBranch(Branch),
    AddShunt(ShuntDevice),
    /// Sets the rating of every shunt device at the bus.
    SetShuntQ { bus: BusId, q_nominal: f64 },
    SetTap { key: BranchKey, ratio: f64 },
    /// Multiplies P and Q load at the bus by the same factor.
    ScaleLoad { bus: BusId, factor: f64 },
    SetLoad { bus: BusId, p: f64, q: f64 },
}

fn reject(msg: String) -> Error {
    Error::ActionRejected(msg)
}

fn apply_one(net: &mut Network, action: &Action) -> Result<(), Error> {
    match action {
        Action::RemoveBranch(key) => {
            let k = net
                .branch_position(key)
                .ok_or_else(|| reject(format!("no branch {key} to remove")))?;
            net.branches.remove(k);
        }
        Action::AddBranch(br) => {
            if net.branch_position(&br.key()).is_some() {
                return Err(reject(format!(
                    "branch {} already exists; give the new one another circuit number",
                    br.key()
                )));
            }
            net.branches.push(br.clone());
        }
        Action::AddShunt(sh) => {
            if net.bus(sh.bus).is_none() {
                return Err(reject(format!("no bus {} for shunt", sh.bus)));
            }
            net.shunts.push(sh.clone());
        }
        Action::SetShuntQ { bus, q_nominal } => {
            let mut found = false;
            for sh in net.shunts.iter_mut().filter(|s| s.bus == *bus) {
                sh.q_nominal = *q_nominal;
                found = true;
            }
            if !found {
                return Err(reject(format!("no shunt at bus {bus}")));
            }
        }
        Action::SetTap { key, ratio } => {
            let k = net
                .branch_position(key)
                .ok_or_else(|| reject(format!("no branch {key}")))?;
            let br = &mut net.branches[k];
            if br.kind != BranchKind::Transformer {
                return Err(reject(format!("branch {key} is a line and has no tap")));
            }
            br.tap = *ratio;
        }
        Action::ScaleLoad { bus, factor } => {
            if !(factor.is_finite() && *factor >= 0.0) {
                return Err(reject(format!("load factor {factor} must be finite and non-negative")));
            }
            let b = net.bus_mut(*bus).ok_or_else(|| reject(format!("no bus {bus}")))?;
            b.p_load *= factor;
            b.q_load *= factor;
        }
        Action::SetLoad { bus, p, q } => {
            let b = net.bus_mut(*bus).ok_or_else(|| reject(format!("no bus {bus}")))?;
            b.p_load = *p;
            b.q_load = *q;
        }
    }
    Ok(())
}

/// Applies actions in order to a copy of `base` and validates the result.
pub fn apply_actions(base: &Network, actions: &[Action]) -> Result<Network, Error> {
    let mut net = base.clone();
    for a in actions {
        apply_one(&mut net, a)?;
    }
    net.validate().into_result()?;
    Ok(net)
}

/// A solved operating point with its derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedCase {
    pub solution: PowerFlowSolution,
    pub flows: Vec<BranchFlow>,
    pub summary: SystemSummary,
}

impl SolvedCase {
    pub fn loss_mw(&self) -> f64 {
        self.summary.total_loss.re
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Converged(SolvedCase),
    /// The solver gave up; `record` is present when it ran out of iterations
    /// or diverged, absent for a singular Jacobian.
    NotConverged { message: String, record: Option<NonConvergence> },
}

impl Outcome {
    pub fn solved(&self) -> Option<&SolvedCase> {
        match self {
            Outcome::Converged(s) => Some(s),
            Outcome::NotConverged { .. } => None,
        }
    }

    pub fn v_mag_at(&self, bus: BusId) -> Option<f64> {
        self.solved().and_then(|s| s.solution.v_mag_at(bus))
    }
}

fn solve_case(net: &Network, options: &SolveOptions) -> Result<Outcome, Error> {
    match solve_power_flow(net, options) {
        Ok(solution) => {
            let flows = branch_flows(net, &solution)?;
            let summary = summarize(net, &solution, VoltageBounds::default())?;
            Ok(Outcome::Converged(SolvedCase {
                solution,
                flows,
                summary,
            }))
        }
        Err(Error::NonConvergence(nc)) => Ok(Outcome::NotConverged {
            message: nc.to_string(),
            record: Some(*nc),
        }),
        Err(e @ Error::SingularJacobian { .. }) => Ok(Outcome::NotConverged {
            message: e.to_string(),
            record: None,
        }),
        Err(e) => Err(e),
    }
}

/// The unmodified case and its solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub network: Network,
    pub options: SolveOptions,
    pub outcome: Outcome,
}

impl Baseline {
    pub fn new(network: Network, options: SolveOptions) -> Result<Self, Error> {
        network.validate().into_result()?;
        let outcome = solve_case(&network, &options)?;
        Ok(Self {
            network,
            options,
            outcome,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deltas {
    /// Scenario minus baseline voltage magnitude, per bus.
    pub dv: Vec<(BusId, f64)>,
    pub d_loss_mw: f64,
    /// Loading change for branches present in both cases with a limit.
    pub d_loading_pct: Vec<(BranchKey, f64)>,
}

fn deltas(base: &SolvedCase, case: &SolvedCase) -> Deltas {
    let dv = case
        .solution
        .bus_ids
        .iter()
        .zip(&case.solution.v_mag)
        .filter_map(|(&id, &v)| base.solution.v_mag_at(id).map(|v0| (id, v - v0)))
        .collect();
    let d_loading_pct = case
        .flows
        .iter()
        .filter_map(|f| {
            let b = base.flows.iter().find(|g| g.key == f.key)?;
            Some((f.key, f.loading_pct? - b.loading_pct?))
        })
        .collect();
    Deltas {
        dv,
        d_loss_mw: case.loss_mw() - base.loss_mw(),
        d_loading_pct,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub name: String,
    pub actions: Vec<Action>,
    pub outcome: Outcome,
    /// Present only when both the baseline and the scenario converged.
    pub deltas: Option<Deltas>,
}

/// Applies `actions` to the baseline network, solves and compares. Solver
/// failure is a reported outcome; only invalid actions are errors.
pub fn run_scenario(baseline: &Baseline, name: &str, actions: &[Action]) -> Result<ScenarioReport, Error> {
    let net = apply_actions(&baseline.network, actions)?;
    let outcome = solve_case(&net, &baseline.options)?;
    let deltas = match (baseline.outcome.solved(), outcome.solved()) {
        (Some(b), Some(c)) => Some(deltas(b, c)),
        _ => None,
    };
    Ok(ScenarioReport {
        name: name.to_string(),
        actions: actions.to_vec(),
        outcome,
        deltas,
    })
}

/// Evaluates independent sweep points.
pub trait PointRunner {
    fn run(
        &self,
        points: &[Vec<Action>],
        eval: &(dyn Fn(&[Action]) -> Result<ScenarioReport, Error> + Sync),
    ) -> Vec<Result<ScenarioReport, Error>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl PointRunner for Sequential {
    fn run(
        &self,
        points: &[Vec<Action>],
        eval: &(dyn Fn(&[Action]) -> Result<ScenarioReport, Error> + Sync),
    ) -> Vec<Result<ScenarioReport, Error>> {
        points.iter().map(|p| eval(p)).collect()
    }
}

fn run_points(
    baseline: &Baseline,
    name: &str,
    points: &[Vec<Action>],
    runner: &dyn PointRunner,
) -> Result<Vec<ScenarioReport>, Error> {
    let eval = |acts: &[Action]| run_scenario(baseline, name, acts);
    runner.run(points, &eval).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub parameter: f64,
    pub report: ScenarioReport,
}

/// One scenario per shunt rating at `bus`; a rating of zero adds nothing.
pub fn shunt_sweep(
    baseline: &Baseline,
    bus: BusId,
    q_values: &[f64],
    runner: &dyn PointRunner,
) -> Result<Vec<SweepPoint>, Error> {
    if baseline.network.bus(bus).is_none() {
        return Err(Error::UnknownBus(bus));
    }
    let points: Vec<Vec<Action>> = q_values
        .iter()
        .map(|&q| {
            if q == 0.0 {
                vec![]
            } else {
                vec![Action::AddShunt(ShuntDevice::new(bus.0, q))]
            }
        })
        .collect();
    let reports = run_points(baseline, "shunt sweep", &points, runner)?;
    let mut out: Vec<SweepPoint> = q_values
        .iter()
        .zip(reports)
        .map(|(&parameter, report)| SweepPoint { parameter, report })
        .collect();
    out.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TapObjective {
    /// Lowest total loss among feasible settings.
    #[default]
    MinLoss,
    /// Smallest total deviation from nominal, `sum |tap - 1|`, ties broken by
    /// loss.
    MinAdjustment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TapSweepSpec {
    pub transformers: Vec<BranchKey>,
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub target_bus: BusId,
    /// Settings are feasible when the target bus reaches at least this voltage.
    pub target_v: f64,
    pub objective: TapObjective,
}

impl TapSweepSpec {
    /// Tap values `min + k * step` up to `max`; a step wider than the range
    /// yields `min` alone.
    pub fn values(&self) -> Vec<f64> {
        let n = libm::floor((self.max - self.min) / self.step + 1e-9) as usize;
        (0..=n)
            .map(|k| libm::round((self.min + k as f64 * self.step) * 1e9) / 1e9)
            .collect()
    }

    /// Every combination of tap values, first transformer varying slowest.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let values = self.values();
        let mut grid: Vec<Vec<f64>> = vec![vec![]];
        for _ in &self.transformers {
            grid = grid
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        grid
    }

    fn check(&self) -> Result<(), Error> {
        let ok = self.min.is_finite()
            && self.max.is_finite()
            && self.step.is_finite()
            && self.step > 0.0
            && self.min <= self.max
            && self.min >= 0.5
            && self.max <= 1.5;
        if !ok {
            return Err(Error::InvalidInput(format!(
                "tap range [{}, {}] step {} must lie in [0.5, 1.5] with a positive step",
                self.min, self.max, self.step
            )));
        }
        if self.transformers.is_empty() {
            return Err(Error::InvalidInput("tap sweep needs at least one transformer".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TapPoint {
    pub taps: Vec<f64>,
    pub converged: bool,
    pub v_target: Option<f64>,
    pub loss_mw: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TapSweepResult {
    pub grid: Vec<TapPoint>,
    /// Index into `grid` of the selected setting.
    pub best: Option<usize>,
    pub best_report: Option<ScenarioReport>,
}

pub fn tap_sweep(
    baseline: &Baseline,
    spec: &TapSweepSpec,
    runner: &dyn PointRunner,
) -> Result<TapSweepResult, Error> {
    spec.check()?;
    if baseline.network.bus(spec.target_bus).is_none() {
        return Err(Error::UnknownBus(spec.target_bus));
    }
    let combos = spec.grid();
    let points: Vec<Vec<Action>> = combos
        .iter()
        .map(|taps| {
            spec.transformers
                .iter()
                .zip(taps)
                .map(|(&key, &ratio)| Action::SetTap { key, ratio })
                .collect()
        })
        .collect();
    let reports = run_points(baseline, "tap sweep", &points, runner)?;

    let grid: Vec<TapPoint> = combos
        .iter()
        .zip(&reports)
        .map(|(taps, r)| {
            let solved = r.outcome.solved();
            let v_target = r.outcome.v_mag_at(spec.target_bus);
            TapPoint {
                taps: taps.clone(),
                converged: solved.is_some(),
                v_target,
                loss_mw: solved.map(SolvedCase::loss_mw),
                feasible: v_target.is_some_and(|v| v >= spec.target_v),
            }
        })
        .collect();

    let key = |p: &TapPoint| -> (f64, f64) {
        let loss = p.loss_mw.unwrap_or(f64::INFINITY);
        match spec.objective {
            TapObjective::MinLoss => (loss, 0.0),
            TapObjective::MinAdjustment => {
                // Round so grid-representation noise does not decide ties.
                let adj: f64 = p.taps.iter().map(|t| (t - 1.0).abs()).sum();
                (libm::round(adj * 1e9) / 1e9, loss)
            }
        }
    };
    let mut best: Option<usize> = None;
    for (i, p) in grid.iter().enumerate().filter(|(_, p)| p.feasible) {
        match best {
            Some(b) if key(&grid[b]) <= key(p) => {}
            _ => best = Some(i),
        }
    }
    let best_report = best.map(|i| reports[i].clone());
    Ok(TapSweepResult {
        grid,
        best,
        best_report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShedPoint {
    pub shed_pct: f64,
    pub v_mag: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadShedResult {
    pub bus: BusId,
    pub target_v: f64,
    pub step_pct: f64,
    /// Smallest shed on the grid that meets the target; `None` when even
    /// shedding the whole load does not.
    pub minimal_shed_pct: Option<f64>,
    /// Every point evaluated, sorted by shed percentage.
    pub evaluated: Vec<ShedPoint>,
}

impl LoadShedResult {
    pub fn is_infeasible(&self) -> bool {
        self.minimal_shed_pct.is_none()
    }
}

/// Scales P and Q at `bus` down by `shed_pct` percent.
pub fn shed_action(bus: BusId, shed_pct: f64) -> Action {
    Action::ScaleLoad {
        bus,
        factor: 1.0 - shed_pct / 100.0,
    }
}

/// Finds the smallest shed percentage on a grid of `step_pct` that brings the
/// bus to `target_v`. The voltage is taken as non-decreasing in shed, with a
/// failed solve counted as not meeting the target: the grid is bracketed by
/// doubling and then bisected.
pub fn load_shed_sweep(
    baseline: &Baseline,
    bus: BusId,
    target_v: f64,
    step_pct: f64,
) -> Result<LoadShedResult, Error> {
    let b = baseline.network.bus(bus).ok_or(Error::UnknownBus(bus))?;
    if b.p_load == 0.0 && b.q_load == 0.0 {
        return Err(Error::InvalidInput(format!("bus {bus} carries no load")));
    }
    if !(step_pct.is_finite() && step_pct > 0.0 && step_pct <= 100.0) {
        return Err(Error::InvalidInput(format!("shed step {step_pct}% must be in (0, 100]")));
    }
    let n = libm::ceil(100.0 / step_pct - 1e-9) as usize;
    let pct = |k: usize| (k as f64 * step_pct).min(100.0);
    let mut evaluated: Vec<ShedPoint> = Vec::new();
    let mut meets = |k: usize| -> Result<bool, Error> {
        let shed_pct = pct(k);
        let r = run_scenario(baseline, "load shed", &[shed_action(bus, shed_pct)])?;
        let v = r.outcome.v_mag_at(bus);
        evaluated.push(ShedPoint { shed_pct, v_mag: v });
        Ok(v.is_some_and(|v| v >= target_v))
    };

    let minimal = if meets(0)? {
        Some(0)
    } else {
        // Largest known failing index and smallest known passing index.
        let mut lo = 0usize;
        let mut hi = None;
        let mut k = 1usize;
        while k < n {
            if meets(k)? {
                hi = Some(k);
                break;
            }
            lo = k;
            k *= 2;
        }
        if hi.is_none() && meets(n)? {
            hi = Some(n);
        }
        if let Some(mut h) = hi {
            while h - lo > 1 {
                let mid = lo + (h - lo) / 2;
                if meets(mid)? {
                    h = mid;
                } else {
                    lo = mid;
                }
            }
            Some(h)
        } else {
            None
        }
    };
    evaluated.sort_by(|a, b| a.shed_pct.total_cmp(&b.shed_pct));
    evaluated.dedup_by(|a, b| a.shed_pct == b.shed_pct);
    Ok(LoadShedResult {
        bus,
        target_v,
        step_pct,
        minimal_shed_pct: minimal.map(pct),
        evaluated,
    })
}
