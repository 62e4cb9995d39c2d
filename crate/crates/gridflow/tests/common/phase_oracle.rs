//! Fault currents from a direct solve of the full three-phase network.
//!
//! Every element is expanded to a 3x3 phase admittance block and every
//! machine becomes a Norton source behind its sequence impedances. The fault
//! adds three current unknowns and three constraint rows, so bolted faults
//! need no large-admittance approximation.

use gridflow_core::fault::{FaultKind, GeneratorSequence, SequenceData, TransformerConnection, TransformerSequence};
use gridflow_core::network::{Branch, BranchKey, Bus, BusKind, ZeroSeqPath};
use gridflow_core::{Complex, Network};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type C = Complex;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn zero() -> C {
    c(0.0, 0.0)
}

fn a() -> C {
    c(-0.5, 3f64.sqrt() / 2.0)
}

/// Phase-domain block for an element with sequence admittances `y0, y1, y2`.
fn phase_block(y0: C, y1: C, y2: C) -> [[C; 3]; 3] {
    let a = a();
    let a2 = a * a;
    let t = [[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), a2, a], [c(1.0, 0.0), a, a2]];
    let ys = [y0, y1, y2];
    let mut out = [[zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            // (T diag(y) T^-1)_ij with T^-1 = conj(T)^T / 3
            *cell = (0..3).map(|s| t[i][s] * ys[s] * t[j][s].conj()).sum::<C>() / 3.0;
        }
    }
    out
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut m: Vec<Vec<C>>, mut rhs: Vec<C>) -> Vec<C> {
    let n = rhs.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
            .unwrap();
        assert!(m[p][col].norm() > 1e-14, "singular phase-domain system");
        m.swap(col, p);
        rhs.swap(col, p);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f == zero() {
                continue;
            }
            let pivot_row = m[col].clone();
            for (dst, src) in m[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            let v = rhs[col];
            rhs[r] -= f * v;
        }
    }
    let mut x = vec![zero(); n];
    for r in (0..n).rev() {
        let s: C = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    x
}

pub struct PhaseFault {
    /// Currents leaving the faulted bus into the fault, phases a, b, c.
    pub currents: [C; 3],
    pub voltages: [C; 3],
}

/// Flat-prefault fault at `bus`: every machine EMF is 1.0 pu positive
/// sequence, loads and line charging are ignored.
pub fn phase_domain_fault(net: &Network, seq: &SequenceData, bus: u32, kind: FaultKind, zf: C) -> PhaseFault {
    let n = net.buses.len();
    let dim = 3 * n + 3;
    let pos = |id: u32| net.buses.iter().position(|b| b.id.0 == id).expect("bus");
    let mut m = vec![vec![zero(); dim]; dim];
    let mut rhs = vec![zero(); dim];

    let stamp = |m: &mut Vec<Vec<C>>, i: usize, j: usize, blk: &[[C; 3]; 3], scale: C| {
        for p in 0..3 {
            for q in 0..3 {
                m[3 * i + p][3 * j + q] += blk[p][q] * scale;
            }
        }
    };

    for br in net.branches.iter().filter(|b| b.in_service) {
        let (f, t) = (pos(br.from_bus.0), pos(br.to_bus.0));
        let y1 = c(br.r, br.x).inv();
        let override_ = seq.transformers.iter().find(|ts| ts.key.matches(&br.key()));
        let y0 = match override_ {
            Some(ts) if ts.connection == TransformerConnection::Other => zero(),
            Some(ts) => (c(br.r0, br.x0) + ts.z_neutral * 3.0).inv(),
            None if br.zero_seq_path == ZeroSeqPath::Open => zero(),
            None => c(br.r0, br.x0).inv(),
        };
        let blk = phase_block(y0, y1, y1);
        let tap = c(br.tap, 0.0);
        let one = c(1.0, 0.0);
        stamp(&mut m, f, f, &blk, one / (tap * tap));
        stamp(&mut m, t, t, &blk, one);
        stamp(&mut m, f, t, &blk, -one / tap);
        stamp(&mut m, t, f, &blk, -one / tap);
    }

    let e = [c(1.0, 0.0), a() * a(), a()];
    for g in &seq.generators {
        let k = pos(g.bus.0);
        let y0 = if g.grounded {
            (c(0.0, g.x_zero) + g.z_neutral * 3.0).inv()
        } else {
            zero()
        };
        let blk = phase_block(y0, c(0.0, g.x_sub).inv(), c(0.0, g.x_neg).inv());
        stamp(&mut m, k, k, &blk, c(1.0, 0.0));
        for p in 0..3 {
            rhs[3 * k + p] += (0..3).map(|q| blk[p][q] * e[q]).sum::<C>();
        }
    }

    let k = pos(bus);
    let v = |p: usize| 3 * k + p;
    let i = |p: usize| 3 * n + p;
    for p in 0..3 {
        m[v(p)][i(p)] += c(1.0, 0.0);
    }
    let one = c(1.0, 0.0);
    let rows = [3 * n, 3 * n + 1, 3 * n + 2];
    match kind {
        FaultKind::ThreePhase => {
            for p in 0..3 {
                m[rows[p]][v(p)] = one;
                m[rows[p]][i(p)] = -zf;
            }
        }
        FaultKind::SingleLineToGround => {
            m[rows[0]][v(0)] = one;
            m[rows[0]][i(0)] = -zf;
            m[rows[1]][i(1)] = one;
            m[rows[2]][i(2)] = one;
        }
        FaultKind::LineToLine => {
            m[rows[0]][i(0)] = one;
            m[rows[1]][i(1)] = one;
            m[rows[1]][i(2)] = one;
            m[rows[2]][v(1)] = one;
            m[rows[2]][v(2)] = -one;
            m[rows[2]][i(1)] = -zf;
        }
        FaultKind::DoubleLineToGround => {
            m[rows[0]][i(0)] = one;
            m[rows[1]][v(1)] = one;
            m[rows[1]][v(2)] = -one;
            m[rows[2]][v(1)] = one;
            m[rows[2]][i(1)] = -zf;
            m[rows[2]][i(2)] = -zf;
        }
    }

    let x = solve_dense(m, rhs);
    PhaseFault {
        currents: [x[i(0)], x[i(1)], x[i(2)]],
        voltages: [x[v(0)], x[v(1)], x[v(2)]],
    }
}

/// Seeded network of `n` buses with lines and nominal-tap transformers of
/// mixed zero-sequence connection, and machines of mixed grounding.
pub fn random_fault_case(seed: u64, n: u32) -> (Network, SequenceData) {
    let mut rng = StdRng::seed_from_u64(seed);
    let buses = (1..=n)
        .map(|id| Bus::new(id, if id == 1 { BusKind::Slack } else { BusKind::PQ }, 138.0))
        .collect();
    let mut branches = Vec::new();
    let mut transformers = Vec::new();
    let mut add = |from: u32, to: u32, rng: &mut StdRng, branches: &mut Vec<Branch>| {
        let circuit = 1 + branches.iter().filter(|b| b.key().matches(&BranchKey::new(from, to, 1))).count() as u32;
        let r = rng.gen_range(0.001..0.03);
        let x = rng.gen_range(0.02..0.3);
        if rng.gen_bool(0.35) {
            let mut b = Branch::transformer(from, to, r, x, 0.0).with_circuit(circuit);
            b.x0 = x * rng.gen_range(0.8..1.0);
            let connection = if rng.gen_bool(0.5) {
                TransformerConnection::YgYg
            } else {
                TransformerConnection::Other
            };
            transformers.push(TransformerSequence {
                key: b.key(),
                connection,
                z_neutral: c(0.0, rng.gen_range(0.0..0.05)),
            });
            branches.push(b);
        } else {
            let mut b = Branch::line(from, to, r, x, rng.gen_range(0.0..0.3), 0.0).with_circuit(circuit);
            b.r0 = r * rng.gen_range(2.0..4.0);
            b.x0 = x * rng.gen_range(2.0..4.0);
            branches.push(b);
        }
    };
    for to in 2..=n {
        let from = rng.gen_range(1..to);
        add(from, to, &mut rng, &mut branches);
    }
    if n > 3 {
        add(2, n, &mut rng, &mut branches);
    }
    let mut generators = vec![GeneratorSequence::solidly_grounded(1, 0.15, 0.14, 0.06)];
    for id in 2..=n {
        if rng.gen_bool(0.5) {
            let grounded = rng.gen_bool(0.7);
            generators.push(GeneratorSequence {
                bus: gridflow_core::BusId(id),
                x_sub: rng.gen_range(0.08..0.3),
                x_neg: rng.gen_range(0.08..0.3),
                x_zero: rng.gen_range(0.02..0.1),
                z_neutral: c(rng.gen_range(0.0..0.02), rng.gen_range(0.0..0.1)),
                grounded,
            });
        }
    }
    let net = Network {
        name: format!("random-{seed}"),
        s_base: 100.0,
        buses,
        branches,
        shunts: vec![],
    };
    (net, SequenceData { generators, transformers })
}
