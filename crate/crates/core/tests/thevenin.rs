use gridflow_core::cases::{glover5, glover5_sequence};
use gridflow_core::fault::{build_sequence_networks, Prefault};
use gridflow_core::network::BusId;
use gridflow_core::numerics::{Complex, DenseMatrix};
use gridflow_core::ybus::Sequence;

/// Gauss-Jordan inverse, independent of the library's LU.
fn invert(m: &DenseMatrix<Complex>) -> DenseMatrix<Complex> {
    let n = m.rows();
    let mut a: Vec<Vec<Complex>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut inv: Vec<Vec<Complex>> = (0..n)
        .map(|i| (0..n).map(|j| Complex::new((i == j) as u8 as f64, 0.0)).collect())
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].norm().total_cmp(&a[y][c].norm())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for j in 0..n {
                    let (ac, ic) = (a[c][j], inv[c][j]);
                    a[r][j] -= f * ac;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    let flat: Vec<Complex> = inv.into_iter().flatten().collect();
    DenseMatrix::from_row_major(n, n, flat).unwrap()
}

#[test]
fn thevenin_matches_explicit_inverse_for_every_bus_and_sequence() {
    let seq = build_sequence_networks(&glover5(), &glover5_sequence(), Prefault::Flat).unwrap();
    for s in [Sequence::Zero, Sequence::Positive, Sequence::Negative] {
        let z = invert(seq.sequence(s).matrix());
        for (k, &bus) in seq.bus_ids().iter().enumerate() {
            let zt = seq.thevenin(s, bus).unwrap();
            assert!((zt - z[(k, k)]).norm() < 1e-10 * z[(k, k)].norm(), "{s} bus {bus}");
        }
    }
}

#[test]
fn positive_thevenin_at_bus2_is_inductive() {
    let seq = build_sequence_networks(&glover5(), &glover5_sequence(), Prefault::Flat).unwrap();
    let z = seq.thevenin(Sequence::Positive, BusId(2)).unwrap();
    assert!(z.im > 0.0 && z.re >= 0.0);
}
