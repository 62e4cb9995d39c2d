//! Polar Newton-Raphson power flow.
//!
//! Unknowns are the angles of every non-slack bus followed by the voltage
//! magnitudes of every PQ bus, both in bus order. Each iteration solves
//!
//! ```text
//! [dP]   [J1 J3] [d angle]
//! [dQ] = [J2 J4] [d |V| ]
//! ```
//!
//! with `J1 = dP/d angle`, `J2 = dQ/d angle`, `J3 = dP/d|V|`, `J4 = dQ/d|V|`,
//! and applies the full (optionally damped) Newton step.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::network::{BusId, BusKind, Network};
use crate::numerics::{cos, sin, Complex, DenseLu, DenseMatrix, LinearSolver};
use crate::ybus::{build_ybus, AdmittanceMatrix, Sequence};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Convergence threshold on the largest absolute mismatch, per unit.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub enforce_q_limits: bool,
    /// Fraction of the Newton step applied each iteration.
    pub damping: f64,
    /// Voltage magnitudes outside this band abort the solve.
    pub v_bounds: (f64, f64),
    /// Consecutive growing mismatches that abort the solve.
    pub max_growth_streak: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 50,
            enforce_q_limits: true,
            damping: 1.0,
            v_bounds: (0.1, 2.0),
            max_growth_streak: 3,
        }
    }
}

/// Which bus positions carry which unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusPartition {
    pub slack: usize,
    /// Non-slack positions in bus order: rows of `dP`, columns of `d angle`.
    pub angle_buses: Vec<usize>,
    /// PQ positions in bus order: rows of `dQ`, columns of `d|V|`.
    pub magnitude_buses: Vec<usize>,
}

impl BusPartition {
    pub fn from_kinds(kinds: &[BusKind]) -> Result<Self, Error> {
        let slacks: Vec<usize> = (0..kinds.len()).filter(|&i| kinds[i] == BusKind::Slack).collect();
        if slacks.len() != 1 {
            return Err(Error::NotSupported(format!(
                "power flow needs exactly one slack bus, found {}",
                slacks.len()
            )));
        }
        Ok(Self {
            slack: slacks[0],
            angle_buses: (0..kinds.len()).filter(|&i| kinds[i] != BusKind::Slack).collect(),
            magnitude_buses: (0..kinds.len()).filter(|&i| kinds[i] == BusKind::PQ).collect(),
        })
    }

    pub fn from_network(net: &Network) -> Result<Self, Error> {
        Self::from_kinds(&net.buses.iter().map(|b| b.kind).collect::<Vec<_>>())
    }

    /// Number of unknowns (rows of the Jacobian).
    pub fn dimension(&self) -> usize {
        self.angle_buses.len() + self.magnitude_buses.len()
    }
}

/// Bus voltages in polar form, one entry per bus position.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub v_mag: Vec<f64>,
    /// Radians.
    pub angle: Vec<f64>,
}

impl StateVector {
    pub fn voltages(&self) -> Vec<Complex> {
        self.v_mag
            .iter()
            .zip(&self.angle)
            .map(|(&m, &a)| Complex::from_polar(m, a))
            .collect()
    }

    /// The unknowns in Jacobian column order.
    pub fn unknowns(&self, part: &BusPartition) -> Vec<f64> {
        part.angle_buses
            .iter()
            .map(|&i| self.angle[i])
            .chain(part.magnitude_buses.iter().map(|&i| self.v_mag[i]))
            .collect()
    }

    pub fn set_unknowns(&mut self, part: &BusPartition, x: &[f64]) {
        let na = part.angle_buses.len();
        for (k, &i) in part.angle_buses.iter().enumerate() {
            self.angle[i] = x[k];
        }
        for (k, &i) in part.magnitude_buses.iter().enumerate() {
            self.v_mag[i] = x[na + k];
        }
    }
}

/// Initial estimate: PQ magnitudes 1.0, regulated magnitudes at setpoint, all
/// angles equal to the slack angle.
pub fn flat_start(network: &Network) -> StateVector {
    let slack_angle = network.slack().map_or(0.0, |b| b.angle_setpoint);
    StateVector {
        v_mag: network
            .buses
            .iter()
            .map(|b| if b.kind == BusKind::PQ { 1.0 } else { b.v_setpoint })
            .collect(),
        angle: vec![slack_angle; network.buses.len()],
    }
}

/// Scheduled net injections per bus position.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl Schedule {
    pub fn from_network(net: &Network) -> Self {
        Self {
            p: net.buses.iter().map(|b| b.p_scheduled()).collect(),
            q: net.buses.iter().map(|b| b.q_scheduled()).collect(),
        }
    }
}

/// Computed real and reactive injections per bus position.
#[derive(Debug, Clone, PartialEq)]
pub struct BusInjections {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Injections from the polar power equations:
///
/// ```text
/// P_i =  sum_j |V_i||V_j||Y_ij| cos(theta_ij - delta_i + delta_j)
/// Q_i = -sum_j |V_i||V_j||Y_ij| sin(theta_ij - delta_i + delta_j)
/// ```
pub fn power_injections(y: &AdmittanceMatrix, state: &StateVector) -> Result<BusInjections, Error> {
    let n = y.dim();
    if state.v_mag.len() != n || state.angle.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state.v_mag.len().min(state.angle.len()),
        });
    }
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let m = y.magnitude(i, j);
            if m == 0.0 {
                continue;
            }
            let t = y.angle(i, j) - state.angle[i] + state.angle[j];
            let k = state.v_mag[i] * state.v_mag[j] * m;
            p[i] += k * cos(t);
            q[i] -= k * sin(t);
        }
    }
    Ok(BusInjections { p, q })
}

/// Injected currents `I = Y V`.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionCurrents(pub Vec<Complex>);

pub fn injection_currents(y: &AdmittanceMatrix, state: &StateVector) -> Result<InjectionCurrents, Error> {
    Ok(InjectionCurrents(y.currents(&state.voltages())?))
}

/// Scheduled minus computed power.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchVector {
    /// One entry per non-slack bus.
    pub dp: Vec<f64>,
    /// One entry per PQ bus.
    pub dq: Vec<f64>,
}

impl MismatchVector {
    pub fn max_abs(&self) -> f64 {
        self.dp
            .iter()
            .chain(&self.dq)
            .fold(0.0, |acc: f64, v| if v.is_nan() { f64::NAN } else { acc.max(v.abs()) })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.dp.iter().chain(&self.dq).copied().collect()
    }
}

pub fn mismatch(schedule: &Schedule, part: &BusPartition, inj: &BusInjections) -> MismatchVector {
    MismatchVector {
        dp: part.angle_buses.iter().map(|&i| schedule.p[i] - inj.p[i]).collect(),
        dq: part.magnitude_buses.iter().map(|&i| schedule.q[i] - inj.q[i]).collect(),
    }
}

/// The assembled Jacobian plus its block sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    pub matrix: DenseMatrix<f64>,
    pub n_angle: usize,
    pub n_magnitude: usize,
}

impl JacobianMatrix {
    fn block(&self, rows: core::ops::Range<usize>, cols: core::ops::Range<usize>) -> DenseMatrix<f64> {
        let mut out = DenseMatrix::zeros(rows.len(), cols.len());
        for (oi, i) in rows.clone().enumerate() {
            for (oj, j) in cols.clone().enumerate() {
                out[(oi, oj)] = self.matrix[(i, j)];
            }
        }
        out
    }

    /// dP / d angle
    pub fn j1(&self) -> DenseMatrix<f64> {
        self.block(0..self.n_angle, 0..self.n_angle)
    }

    /// dQ / d angle
    pub fn j2(&self) -> DenseMatrix<f64> {
        let n = self.n_angle;
        self.block(n..n + self.n_magnitude, 0..n)
    }

    /// dP / d|V|
    pub fn j3(&self) -> DenseMatrix<f64> {
        let n = self.n_angle;
        self.block(0..n, n..n + self.n_magnitude)
    }

    /// dQ / d|V|
    pub fn j4(&self) -> DenseMatrix<f64> {
        let n = self.n_angle;
        self.block(n..n + self.n_magnitude, n..n + self.n_magnitude)
    }
}

/// Analytic partial derivatives of the polar injection equations.
pub fn jacobian(y: &AdmittanceMatrix, state: &StateVector, part: &BusPartition) -> JacobianMatrix {
    let n = y.dim();
    let na = part.angle_buses.len();
    let nm = part.magnitude_buses.len();
    let v = &state.v_mag;
    let d = &state.angle;

    // Per-bus partial sums over j != i.
    let mut sum_sin = vec![0.0; n]; // sum |Vi||Vj||Yij| sin(t_ij)
    let mut sum_cos = vec![0.0; n]; // sum |Vi||Vj||Yij| cos(t_ij)
    for i in 0..n {
        for j in 0..n {
            if i == j || y.magnitude(i, j) == 0.0 {
                continue;
            }
            let t = y.angle(i, j) - d[i] + d[j];
            let k = v[i] * v[j] * y.magnitude(i, j);
            sum_sin[i] += k * sin(t);
            sum_cos[i] += k * cos(t);
        }
    }

    let mut col_of_angle = vec![usize::MAX; n];
    for (k, &i) in part.angle_buses.iter().enumerate() {
        col_of_angle[i] = k;
    }
    let mut col_of_mag = vec![usize::MAX; n];
    for (k, &i) in part.magnitude_buses.iter().enumerate() {
        col_of_mag[i] = na + k;
    }

    let mut jm = DenseMatrix::zeros(na + nm, na + nm);
    let p_rows = part.angle_buses.iter().enumerate().map(|(r, &i)| (r, i, true));
    let q_rows = part.magnitude_buses.iter().enumerate().map(|(r, &i)| (na + r, i, false));
    for (row, i) in p_rows.chain(q_rows).map(|(r, i, is_p)| ((r, is_p), i)) {
        let (r, is_p) = row;
        let ymag_ii = y.magnitude(i, i);
        let th_ii = y.angle(i, i);
        for j in 0..n {
            let (ca, cm) = (col_of_angle[j], col_of_mag[j]);
            if ca == usize::MAX && cm == usize::MAX {
                continue;
            }
            if i == j {
                let (da, dv) = if is_p {
                    (
                        sum_sin[i],
                        2.0 * v[i] * ymag_ii * cos(th_ii) + sum_cos[i] / v[i],
                    )
                } else {
                    (
                        sum_cos[i],
                        -2.0 * v[i] * ymag_ii * sin(th_ii) - sum_sin[i] / v[i],
                    )
                };
                if ca != usize::MAX {
                    jm[(r, ca)] = da;
                }
                if cm != usize::MAX {
                    jm[(r, cm)] = dv;
                }
            } else {
                let m = y.magnitude(i, j);
                if m == 0.0 {
                    continue;
                }
                let t = y.angle(i, j) - d[i] + d[j];
                let (s, c) = (sin(t), cos(t));
                let (da, dv) = if is_p {
                    (-v[i] * v[j] * m * s, v[i] * m * c)
                } else {
                    (-v[i] * v[j] * m * c, -v[i] * m * s)
                };
                if ca != usize::MAX {
                    jm[(r, ca)] = da;
                }
                if cm != usize::MAX {
                    jm[(r, cm)] = dv;
                }
            }
        }
    }
    JacobianMatrix {
        matrix: jm,
        n_angle: na,
        n_magnitude: nm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitDirection {
    /// Switched to PQ with Q fixed at its maximum.
    Upper,
    /// Switched to PQ with Q fixed at its minimum.
    Lower,
    /// Returned to voltage control.
    Restored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSwitch {
    pub bus: BusId,
    pub iteration: usize,
    pub direction: LimitDirection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub bus_ids: Vec<BusId>,
    pub v_mag: Vec<f64>,
    /// Radians.
    pub angle: Vec<f64>,
    /// Net injection (generation minus load) computed from the final state.
    pub p_injection: Vec<f64>,
    pub q_injection: Vec<f64>,
    /// Effective bus types at the end, after any limit switching.
    pub final_kinds: Vec<BusKind>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest absolute mismatch at the start of each iteration.
    pub max_mismatch_trace: Vec<f64>,
    pub limit_switches: Vec<LimitSwitch>,
}

impl PowerFlowSolution {
    pub fn index_of(&self, bus: BusId) -> Option<usize> {
        self.bus_ids.iter().position(|&b| b == bus)
    }

    pub fn voltage(&self, bus: BusId) -> Option<Complex> {
        self.index_of(bus).map(|i| Complex::from_polar(self.v_mag[i], self.angle[i]))
    }

    pub fn v_mag_at(&self, bus: BusId) -> Option<f64> {
        self.index_of(bus).map(|i| self.v_mag[i])
    }

    pub fn voltages(&self) -> Vec<Complex> {
        self.v_mag
            .iter()
            .zip(&self.angle)
            .map(|(&m, &a)| Complex::from_polar(m, a))
            .collect()
    }

    pub fn state(&self) -> StateVector {
        StateVector {
            v_mag: self.v_mag.clone(),
            angle: self.angle.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceReason {
    MaxIterations,
    VoltageOutOfBounds,
    MismatchGrowing,
    NonFinite,
}

impl fmt::Display for DivergenceReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DivergenceReason::MaxIterations => "iteration limit reached",
            DivergenceReason::VoltageOutOfBounds => "voltage magnitude left the plausible band",
            DivergenceReason::MismatchGrowing => "mismatch kept growing",
            DivergenceReason::NonFinite => "non-finite mismatch",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonConvergence {
    pub reason: DivergenceReason,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub last_state: StateVector,
}

impl fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "power flow did not converge after {} iteration(s): {}",
            self.iterations, self.reason
        )?;
        if let Some(last) = self.trace.last() {
            write!(f, " (last max mismatch {last:.3e} pu)")?;
        }
        Ok(())
    }
}

/// Per-bus bookkeeping for PV buses that hit a reactive limit.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Regulation {
    Voltage,
    Clamped { at_upper: bool },
}

pub fn solve_power_flow(network: &Network, options: &SolveOptions) -> Result<PowerFlowSolution, Error> {
    solve_with(network, options, &DenseLu)
}

pub fn solve_with(
    network: &Network,
    options: &SolveOptions,
    solver: &dyn LinearSolver,
) -> Result<PowerFlowSolution, Error> {
    network.validate().into_result()?;
    let y = build_ybus(network, Sequence::Positive)?;
    let mut kinds: Vec<BusKind> = network.buses.iter().map(|b| b.kind).collect();
    let mut part = BusPartition::from_kinds(&kinds)?;
    let mut schedule = Schedule::from_network(network);
    let mut state = flat_start(network);
    let mut regulation = vec![Regulation::Voltage; kinds.len()];
    let mut switches = Vec::new();
    let mut trace = Vec::new();
    let mut growth = 0usize;

    let fail = |reason, iterations, trace: Vec<f64>, state: &StateVector| {
        Error::NonConvergence(Box::new(NonConvergence {
            reason,
            iterations,
            trace,
            last_state: state.clone(),
        }))
    };

    for iter in 0..=options.max_iterations {
        if iter > 0 && options.enforce_q_limits {
            let inj = power_injections(&y, &state)?;
            let changed = apply_q_limits(
                network,
                &inj,
                iter,
                &mut state,
                &mut kinds,
                &mut schedule,
                &mut regulation,
                &mut switches,
            );
            if changed {
                part = BusPartition::from_kinds(&kinds)?;
            }
        }

        let inj = power_injections(&y, &state)?;
        let mm = mismatch(&schedule, &part, &inj);
        let worst = mm.max_abs();
        if let Some(&prev) = trace.last() {
            growth = if worst > prev { growth + 1 } else { 0 };
        }
        trace.push(worst);
        if !worst.is_finite() {
            return Err(fail(DivergenceReason::NonFinite, iter, trace, &state));
        }
        if worst <= options.tolerance {
            return Ok(PowerFlowSolution {
                bus_ids: network.buses.iter().map(|b| b.id).collect(),
                v_mag: state.v_mag,
                angle: state.angle,
                p_injection: inj.p,
                q_injection: inj.q,
                final_kinds: kinds,
                converged: true,
                iterations: iter,
                max_mismatch_trace: trace,
                limit_switches: switches,
            });
        }
        if growth >= options.max_growth_streak {
            return Err(fail(DivergenceReason::MismatchGrowing, iter, trace, &state));
        }
        if iter == options.max_iterations {
            break;
        }

        let jac = jacobian(&y, &state, &part);
        let step = match solver.solve(&jac.matrix, &mm.to_vec()) {
            Ok(s) => s,
            Err(Error::SingularMatrix { .. }) => return Err(Error::SingularJacobian { iteration: iter }),
            Err(e) => return Err(e),
        };
        let mut x = state.unknowns(&part);
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi += options.damping * si;
        }
        state.set_unknowns(&part, &x);

        let (lo, hi) = options.v_bounds;
        if state.v_mag.iter().any(|v| !(*v >= lo && *v <= hi)) {
            return Err(fail(DivergenceReason::VoltageOutOfBounds, iter + 1, trace, &state));
        }
    }
    let iterations = options.max_iterations;
    Err(fail(DivergenceReason::MaxIterations, iterations, trace, &state))
}

/// Switches PV buses whose reactive output violates a limit to PQ at that
/// limit, and restores clamped buses whose voltage has come back past the
/// setpoint. Returns whether anything changed.
#[allow(clippy::too_many_arguments)]
fn apply_q_limits(
    network: &Network,
    inj: &BusInjections,
    iteration: usize,
    state: &mut StateVector,
    kinds: &mut [BusKind],
    schedule: &mut Schedule,
    regulation: &mut [Regulation],
    switches: &mut Vec<LimitSwitch>,
) -> bool {
    let mut changed = false;
    for (i, bus) in network.buses.iter().enumerate() {
        if bus.kind != BusKind::PV {
            continue;
        }
        match regulation[i] {
            Regulation::Voltage => {
                let q_gen = inj.q[i] + bus.q_load;
                let clamp = match (bus.q_gen_max, bus.q_gen_min) {
                    (Some(hi), _) if q_gen > hi => Some((hi, true)),
                    (_, Some(lo)) if q_gen < lo => Some((lo, false)),
                    _ => None,
                };
                if let Some((limit, at_upper)) = clamp {
                    regulation[i] = Regulation::Clamped { at_upper };
                    kinds[i] = BusKind::PQ;
                    schedule.q[i] = limit - bus.q_load;
                    switches.push(LimitSwitch {
                        bus: bus.id,
                        iteration,
                        direction: if at_upper { LimitDirection::Upper } else { LimitDirection::Lower },
                    });
                    changed = true;
                }
            }
            Regulation::Clamped { at_upper } => {
                let recovered = if at_upper {
                    state.v_mag[i] >= bus.v_setpoint
                } else {
                    state.v_mag[i] <= bus.v_setpoint
                };
                if recovered {
                    regulation[i] = Regulation::Voltage;
                    kinds[i] = BusKind::PV;
                    schedule.q[i] = bus.q_scheduled();
                    state.v_mag[i] = bus.v_setpoint;
                    switches.push(LimitSwitch {
                        bus: bus.id,
                        iteration,
                        direction: LimitDirection::Restored,
                    });
                    changed = true;
                }
            }
        }
    }
    changed
}

/// Short human-readable label for a bus kind, used in tables.
pub fn kind_label(kind: BusKind) -> String {
    format!("{kind}")
}
