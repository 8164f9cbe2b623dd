// SPDX-License-Identifier: Apache-2.0

//! Defining matrices of the single-qubit gates.

use core::f64::consts::FRAC_1_SQRT_2;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;

use num_complex::Complex64;

use crate::circuit::GateKind;

pub type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Matrix of a single-qubit gate; `None` for multi-qubit kinds, measure and barrier.
pub fn single_qubit_matrix(kind: GateKind, params: &[f64]) -> Option<Matrix2> {
    let theta = params.first().copied().unwrap_or(0.0);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let m = match kind {
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, -I], [I, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::H => [[h, h], [h, -h]],
        GateKind::S => [[ONE, ZERO], [ZERO, I]],
        GateKind::Sdg => [[ONE, ZERO], [ZERO, -I]],
        GateKind::T => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, core::f64::consts::FRAC_PI_4)]],
        GateKind::Tdg => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, -core::f64::consts::FRAC_PI_4)]],
        GateKind::Rx => {
            [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]]
        }
        GateKind::Ry => {
            [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
        }
        GateKind::Rz => {
            [[Complex64::from_polar(1.0, -theta / 2.0), ZERO], [ZERO, Complex64::from_polar(1.0, theta / 2.0)]]
        }
        _ => return None,
    };
    Some(m)
}

pub fn matmul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[ZERO; 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn identity() -> Matrix2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

/// True if `a = e^{iφ} b` for some global phase φ, within `tol` per entry.
pub fn equal_up_to_phase(a: &Matrix2, b: &Matrix2, tol: f64) -> bool {
    // Pick the largest entry of `b` to fix the phase.
    let (mut br, mut bc) = (0, 0);
    for r in 0..2 {
        for c in 0..2 {
            if b[r][c].norm() > b[br][bc].norm() {
                br = r;
                bc = c;
            }
        }
    }
    if b[br][bc].norm() < 1e-15 {
        return false;
    }
    let phase = a[br][bc] / b[br][bc];
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    (0..2).all(|r| (0..2).all(|c| (a[r][c] - phase * b[r][c]).norm() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_unitary(m: &Matrix2) -> bool {
        let dag = [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]];
        equal_up_to_phase(&matmul(m, &dag), &identity(), 1e-12) && (matmul(m, &dag)[0][0] - ONE).norm() < 1e-12
    }

    #[test]
    fn all_single_qubit_matrices_are_unitary() {
        for kind in GateKind::ALL {
            if let Some(m) = single_qubit_matrix(kind, &[0.731]) {
                assert!(is_unitary(&m), "{kind} not unitary");
            }
        }
    }

    #[test]
    fn s_squared_is_z_and_t_squared_is_s() {
        let s = single_qubit_matrix(GateKind::S, &[]).unwrap();
        let t = single_qubit_matrix(GateKind::T, &[]).unwrap();
        let z = single_qubit_matrix(GateKind::Z, &[]).unwrap();
        assert!(equal_up_to_phase(&matmul(&s, &s), &z, 1e-12));
        assert!(equal_up_to_phase(&matmul(&t, &t), &s, 1e-12));
    }

    #[test]
    fn rx_pi_is_x_up_to_phase() {
        let rx = single_qubit_matrix(GateKind::Rx, &[core::f64::consts::PI]).unwrap();
        let x = single_qubit_matrix(GateKind::X, &[]).unwrap();
        assert!(equal_up_to_phase(&rx, &x, 1e-12));
        assert!(!equal_up_to_phase(&rx, &identity(), 1e-6));
    }
}
