//! Gate matrices and their application to sparse state vectors.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;

use super::layout::Layout;
use super::qvec::QVec;
use crate::error::{Error, Result};
use crate::lang::ast::Gate;
use crate::lang::validate::check_gate_dims;

/// Dense unitary stored column-wise as sparse (row, entry) lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    dim: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
    name: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Unitary {
    pub fn from_rows(rows: &[Vec<Complex64>], name: &str) -> Self {
        let dim = rows.len();
        let mut cols = vec![Vec::new(); dim];
        for (i, row) in rows.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                if *a != c(0.0, 0.0) {
                    cols[j].push((i, *a));
                }
            }
        }
        Unitary {
            dim,
            cols,
            name: name.to_string(),
        }
    }

    /// Builds the matrix of `gate` acting on registers of dimensions `dims`.
    pub fn of_gate(gate: &Gate, dims: &[usize]) -> Result<Self> {
        check_gate_dims(gate, dims).map_err(Error::Dimension)?;
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let h = c(FRAC_1_SQRT_2, 0.0);
        let rows = match gate {
            Gate::H => vec![vec![h, h], vec![h, -h]],
            Gate::X => vec![vec![z, o], vec![o, z]],
            Gate::T => vec![vec![o, z], vec![z, Complex64::from_polar(1.0, FRAC_PI_4)]],
            Gate::Cnot => vec![
                vec![o, z, z, z],
                vec![z, o, z, z],
                vec![z, z, z, o],
                vec![z, z, o, z],
            ],
            Gate::Cz => vec![
                vec![o, z, z, z],
                vec![z, o, z, z],
                vec![z, z, o, z],
                vec![z, z, z, -o],
            ],
            Gate::Shift => shift_rows(dims[1]),
            Gate::Matrix(m) => m.rows.clone(),
        };
        Ok(Self::from_rows(&rows, gate.name()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.cols[j]
            .iter()
            .find(|(r, _)| *r == i)
            .map(|(_, a)| *a)
            .unwrap_or(c(0.0, 0.0))
    }

    /// Applies the unitary to the listed registers, identity elsewhere.
    pub fn apply(&self, layout: &Layout, regs: &[usize], v: &QVec) -> Result<QVec> {
        let dims: Vec<usize> = regs.iter().map(|r| layout.reg_dim(*r)).collect();
        if dims.iter().product::<usize>() != self.dim {
            return Err(Error::Dimension(format!(
                "{} has dimension {} but the registers span {}",
                self.name,
                self.dim,
                dims.iter().product::<usize>()
            )));
        }
        // Local strides: first target register is most significant.
        let mut local_strides = vec![1usize; regs.len()];
        for k in (0..regs.len().saturating_sub(1)).rev() {
            local_strides[k] = local_strides[k + 1] * dims[k + 1];
        }
        let mut out = Vec::with_capacity(v.entries().len() * 2);
        for (idx, a) in v.entries() {
            let mut local = 0usize;
            let mut rest = *idx;
            for (k, r) in regs.iter().enumerate() {
                let d = layout.digit(*idx, *r);
                local += d as usize * local_strides[k];
                rest -= d * layout.stride(*r);
            }
            for (i, u) in &self.cols[local] {
                let mut target = rest;
                for (k, r) in regs.iter().enumerate() {
                    let d = (i / local_strides[k]) % dims[k];
                    target += d as u64 * layout.stride(*r);
                }
                out.push((target, u * a));
            }
        }
        Ok(QVec::from_entries(out))
    }
}

/// Conditional shift on a cycle of length n; index coin·n + position,
/// coin 0 moves left and coin 1 moves right.
fn shift_rows(n: usize) -> Vec<Vec<Complex64>> {
    let mut rows = vec![vec![c(0.0, 0.0); 2 * n]; 2 * n];
    for i in 0..n {
        rows[(i + n - 1) % n][i] = c(1.0, 0.0);
        rows[n + (i + 1) % n][n + i] = c(1.0, 0.0);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::{MatrixLit, VarKind};

    fn layout(dims: &[usize]) -> Layout {
        Layout::new(dims.iter().enumerate().map(|(i, d)| (format!("r{i}"), VarKind::Qreg(*d)))).unwrap()
    }

    #[test]
    fn hadamard_on_amplitudes() {
        let l = layout(&[2]);
        let (a, b) = (c(0.6, 0.0), c(0.0, 0.8));
        let v = QVec::from_dense(&[a, b]);
        let h = Unitary::of_gate(&Gate::H, &[2]).unwrap();
        let w = h.apply(&l, &[0], &v).unwrap();
        assert!((w.amp(0) - (a + b) * FRAC_1_SQRT_2).norm() < 1e-15);
        assert!((w.amp(1) - (a - b) * FRAC_1_SQRT_2).norm() < 1e-15);
    }

    #[test]
    fn cnot_control_first() {
        let l = layout(&[2, 2]);
        let cnot = Unitary::of_gate(&Gate::Cnot, &[2, 2]).unwrap();
        assert_eq!(cnot.apply(&l, &[0, 1], &QVec::basis(2)).unwrap(), QVec::basis(3));
        // Reversed register order swaps control and target.
        assert_eq!(cnot.apply(&l, &[1, 0], &QVec::basis(2)).unwrap(), QVec::basis(2));
        assert_eq!(cnot.apply(&l, &[1, 0], &QVec::basis(1)).unwrap(), QVec::basis(3));
    }

    #[test]
    fn identity_matrix_is_identity() {
        let l = layout(&[3, 2]);
        let rows: Vec<Vec<Complex64>> = (0..3)
            .map(|i| (0..3).map(|j| c((i == j) as u8 as f64, 0.0)).collect())
            .collect();
        let u = Unitary::of_gate(&Gate::Matrix(MatrixLit { rows }), &[3]).unwrap();
        let v = QVec::from_dense(&[c(0.5, 0.0), c(0.0, 0.5), c(0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        assert_eq!(u.apply(&l, &[0], &v).unwrap(), v);
    }

    #[test]
    fn shift_is_a_permutation() {
        for n in 2..6 {
            let s = Unitary::of_gate(&Gate::Shift, &[2, n]).unwrap();
            for i in 0..2 * n {
                for j in 0..2 * n {
                    let mut acc = c(0.0, 0.0);
                    for k in 0..2 * n {
                        acc += s.entry(k, i).conj() * s.entry(k, j);
                    }
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((acc - expect).norm() < 1e-12);
                }
                assert_eq!(s.cols[i].len(), 1);
            }
        }
        // Coin L at position 1 of a 3-cycle moves to position 0; coin R at 2 wraps to 0.
        let s = Unitary::of_gate(&Gate::Shift, &[2, 3]).unwrap();
        assert_eq!(s.entry(0, 1), c(1.0, 0.0));
        assert_eq!(s.entry(3, 5), c(1.0, 0.0));
    }
}
