use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::grid::{Impedance, Network};

/// 2×2 nodal admittance of a branch, ordered (from, to).
pub type Stamp = [[Complex64; 2]; 2];

pub fn branch_stamp(z: &Impedance) -> Stamp {
    let ys = z.z().inv();
    [[ys + z.shunt_from(), -ys], [-ys, ys + z.shunt_to()]]
}

/// Stamp of a branch with a shunt fault `y_fault` at fraction `location` from
/// the from-end; the fault node is eliminated by Kron reduction.
pub fn faulted_stamp(z: &Impedance, location: f64, y_fault: Complex64) -> Stamp {
    let y1 = (z.z() * location).inv();
    let y2 = (z.z() * (1.0 - location)).inv();
    let ykk = y1 + y2 + y_fault;
    [
        [y1 + z.shunt_from() - y1 * y1 / ykk, -(y1 * y2) / ykk],
        [-(y1 * y2) / ykk, y2 + z.shunt_to() - y2 * y2 / ykk],
    ]
}

pub fn add_stamp(y: &mut DMatrix<Complex64>, i: usize, j: usize, s: &Stamp) {
    y[(i, i)] += s[0][0];
    y[(i, j)] += s[0][1];
    y[(j, i)] += s[1][0];
    y[(j, j)] += s[1][1];
}

/// Bus admittance matrix of the in-service branches.
pub fn build_ybus(net: &Network) -> DMatrix<Complex64> {
    let n = net.buses().len();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for br in net.branches().iter().filter(|b| b.in_service()) {
        let i = net.bus_index(&br.from).unwrap();
        let j = net.bus_index(&br.to).unwrap();
        add_stamp(&mut y, i, j, &branch_stamp(&br.impedance));
    }
    y
}

/// Current entering the branch at its from-end (`at_from`) or to-end.
pub fn terminal_current(s: &Stamp, v_from: Complex64, v_to: Complex64, at_from: bool) -> Complex64 {
    if at_from {
        s[0][0] * v_from + s[0][1] * v_to
    } else {
        s[1][0] * v_from + s[1][1] * v_to
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fault_with_zero_admittance_matches_plain_branch() {
        let z = Impedance {
            s_base_mva: 100.0,
            r: 0.01,
            x: 0.1,
            r0: 0.0,
            x0: 0.0,
            g_i: 0.001,
            b_i: 0.02,
            g_j: 0.0,
            b_j: 0.03,
        };
        let a = branch_stamp(&z);
        let b = faulted_stamp(&z, 0.37, Complex64::new(0.0, 0.0));
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j]).norm() < 1e-9);
            }
        }
    }
}
