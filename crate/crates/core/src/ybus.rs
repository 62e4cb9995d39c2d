//! Bus admittance matrix construction.
//!
//! Every in-service branch is a pi section with series admittance
//! `y = 1 / (r + jx)`, an ideal transformer of ratio `tap` on the from side, and
//! half of its total shunt admittance `g + jb` at each end:
//!
//! ```text
//! Y_ff += y / tap^2 + (g + jb) / 2
//! Y_tt += y         + (g + jb) / 2
//! Y_ft -= y / tap
//! Y_tf -= y / tap
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::network::{BusId, Network, ZeroSeqPath};
use crate::numerics::{lu_factor, Complex, DenseMatrix};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sequence {
    Positive,
    Negative,
    Zero,
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sequence::Positive => "positive",
            Sequence::Negative => "negative",
            Sequence::Zero => "zero",
        })
    }
}

/// Dense complex nodal admittance matrix. Rows follow the order of
/// `bus_ids`, which is the bus order of the source network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    bus_ids: Vec<BusId>,
    matrix: DenseMatrix<Complex>,
}

impl AdmittanceMatrix {
    pub fn empty(bus_ids: Vec<BusId>) -> Self {
        let n = bus_ids.len();
        Self {
            bus_ids,
            matrix: DenseMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn bus_ids(&self) -> &[BusId] {
        &self.bus_ids
    }

    pub fn index_of(&self, bus: BusId) -> Option<usize> {
        self.bus_ids.iter().position(|&b| b == bus)
    }

    pub fn matrix(&self) -> &DenseMatrix<Complex> {
        &self.matrix
    }

    /// Entry by row/column position.
    pub fn at(&self, i: usize, j: usize) -> Complex {
        self.matrix[(i, j)]
    }

    /// Entry by bus ids.
    pub fn entry(&self, from: BusId, to: BusId) -> Result<Complex, Error> {
        let i = self.index_of(from).ok_or(Error::UnknownBus(from))?;
        let j = self.index_of(to).ok_or(Error::UnknownBus(to))?;
        Ok(self.matrix[(i, j)])
    }

    /// `|Y_ij|`.
    pub fn magnitude(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)].norm()
    }

    /// `theta_ij = angle(Y_ij)` in radians.
    pub fn angle(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)].arg()
    }

    pub fn add(&mut self, i: usize, j: usize, y: Complex) {
        self.matrix[(i, j)] += y;
    }

    /// Adds a shunt admittance to a bus.
    pub fn add_shunt(&mut self, bus: BusId, y: Complex) -> Result<(), Error> {
        let i = self.index_of(bus).ok_or(Error::UnknownBus(bus))?;
        self.matrix[(i, i)] += y;
        Ok(())
    }

    /// Stamps a two-terminal pi branch.
    pub fn stamp_branch(
        &mut self,
        from: usize,
        to: usize,
        series: Complex,
        shunt_total: Complex,
        tap: f64,
    ) {
        let half = shunt_total * 0.5;
        self.matrix[(from, from)] += series / (tap * tap) + half;
        self.matrix[(to, to)] += series + half;
        self.matrix[(from, to)] -= series / tap;
        self.matrix[(to, from)] -= series / tap;
    }

    /// Current injections `I = Y V`.
    pub fn currents(&self, voltages: &[Complex]) -> Result<Vec<Complex>, Error> {
        self.matrix.mul_vec(voltages)
    }
}

/// Builds the admittance matrix of one sequence network from branch and shunt
/// data. The zero sequence uses `r0`, `x0`, `b0_charging` and skips branches
/// whose zero-sequence path is open; shunt devices appear in the positive and
/// negative sequences only.
pub fn build_ybus(network: &Network, sequence: Sequence) -> Result<AdmittanceMatrix, Error> {
    let mut y = AdmittanceMatrix::empty(network.buses.iter().map(|b| b.id).collect());
    for br in network.branches.iter().filter(|b| b.in_service) {
        if br.phase_shift != 0.0 {
            return Err(Error::NotSupported(format!(
                "phase-shifting transformer {}",
                br.key()
            )));
        }
        let f = y.index_of(br.from_bus).ok_or(Error::UnknownBus(br.from_bus))?;
        let t = y.index_of(br.to_bus).ok_or(Error::UnknownBus(br.to_bus))?;
        let (series, shunt) = match sequence {
            Sequence::Positive | Sequence::Negative => (
                Complex::new(br.r, br.x).inv(),
                Complex::new(br.g_shunt, br.b_charging),
            ),
            Sequence::Zero => {
                if br.zero_seq_path == ZeroSeqPath::Open {
                    continue;
                }
                (
                    Complex::new(br.r0, br.x0).inv(),
                    Complex::new(0.0, br.b0_charging),
                )
            }
        };
        y.stamp_branch(f, t, series, shunt, br.tap);
    }
    if sequence != Sequence::Zero {
        for sh in network.shunts.iter().filter(|s| s.in_service) {
            y.add_shunt(sh.bus, Complex::new(0.0, sh.q_nominal))?;
        }
    }
    Ok(y)
}

/// Driving-point impedance `Z_kk` of `Y^-1`, found by solving `Y z = e_k`.
pub fn thevenin_impedance(y: &AdmittanceMatrix, bus: BusId) -> Result<Complex, Error> {
    let k = y.index_of(bus).ok_or(Error::UnknownBus(bus))?;
    let factors = lu_factor(y.matrix())?;
    let mut e = vec![Complex::new(0.0, 0.0); y.dim()];
    e[k] = Complex::new(1.0, 0.0);
    Ok(factors.solve(&e)?[k])
}
