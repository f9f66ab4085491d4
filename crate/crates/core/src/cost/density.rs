//! Subdensity matrices under the Löwner order and finitely supported maps
//! from classical stores to them.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::{CostStructure, ExtReal, ORDER_TOL};
use crate::error::{Error, Result};
use crate::state::QVec;

#[derive(Debug, Clone, PartialEq)]
pub struct SubDensity(pub DMatrix<Complex64>);

impl SubDensity {
    pub fn zero(dim: usize) -> Self {
        SubDensity(DMatrix::zeros(dim, dim))
    }

    /// Outer product |φ⟩⟨φ|.
    pub fn pure(v: &QVec, dim: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for (i, a) in v.entries() {
            for (j, b) in v.entries() {
                m[(*i as usize, *j as usize)] = a * b.conj();
            }
        }
        SubDensity(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        min_eig(&self.0)
    }

    /// Hermitian within 1e-9, eigenvalues ≥ −1e-9 and trace ≤ 1 + 1e-9.
    pub fn is_valid(&self) -> bool {
        let herm = (&self.0 - self.0.adjoint()).iter().all(|z| z.norm() <= 1e-9);
        herm && self.min_eigenvalue() >= -ORDER_TOL && self.trace() <= 1.0 + ORDER_TOL
    }
}

fn min_eig(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `A ≤ B` iff `B − A` is positive semi-definite (threshold −1e-9).
pub fn loewner_leq(a: &SubDensity, b: &SubDensity) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("Löwner comparison of {} and {}", a.dim(), b.dim())));
    }
    Ok(min_eig(&(&b.0 - &a.0)) >= -ORDER_TOL)
}

/// Finitely supported map from classical stores to subdensity matrices;
/// absent keys denote the zero matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub dim: usize,
    pub entries: BTreeMap<Vec<i64>, SubDensity>,
}

impl DensityMap {
    pub fn empty(dim: usize) -> Self {
        DensityMap {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn singleton(store: Vec<i64>, m: SubDensity) -> Self {
        let dim = m.dim();
        DensityMap {
            dim,
            entries: [(store, m)].into(),
        }
    }

    pub fn get(&self, k: &[i64]) -> SubDensity {
        self.entries.get(k).cloned().unwrap_or_else(|| SubDensity::zero(self.dim))
    }

    pub fn total_trace(&self) -> f64 {
        self.entries.values().map(|m| m.trace()).sum()
    }

    /// Adds `w·other` in place.
    pub fn add_scaled(&mut self, w: f64, other: &DensityMap) {
        if w == 0.0 {
            return;
        }
        for (k, m) in &other.entries {
            let e = self
                .entries
                .entry(k.clone())
                .or_insert_with(|| SubDensity::zero(other.dim));
            e.0 += &m.0 * Complex64::new(w, 0.0);
        }
    }

    /// Largest entrywise modulus of `self − other` over the union of keys.
    pub fn max_abs_diff(&self, other: &DensityMap) -> f64 {
        let mut worst: f64 = 0.0;
        for k in self.entries.keys().chain(other.entries.keys()) {
            let d = &self.get(k).0 - &other.get(k).0;
            worst = d.iter().map(|z| z.norm()).fold(worst, f64::max);
        }
        worst
    }

    pub fn is_valid(&self) -> bool {
        self.entries.values().all(|m| m.dim() == self.dim && m.is_valid()) && self.total_trace() <= 1.0 + ORDER_TOL
    }
}

impl Serialize for DensityMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<(Vec<i64>, Vec<Vec<[f64; 2]>>)> = self
            .entries
            .iter()
            .map(|(k, m)| {
                let rows = (0..m.dim())
                    .map(|i| (0..m.dim()).map(|j| [m.0[(i, j)].re, m.0[(i, j)].im]).collect())
                    .collect();
                (k.clone(), rows)
            })
            .collect();
        let mut st = s.serialize_struct("DensityMap", 2)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}

/// The density-map cost structure with forgetful cost addition.
#[derive(Debug, Clone, Copy)]
pub struct DensityMaps {
    pub dim: usize,
}

impl CostStructure for DensityMaps {
    type Elem = DensityMap;

    fn name(&self) -> &'static str {
        "denot"
    }

    fn bot(&self) -> DensityMap {
        DensityMap::empty(self.dim)
    }

    fn convex(&self, r: f64, a: &DensityMap, b: &DensityMap) -> DensityMap {
        let r = r.clamp(0.0, 1.0);
        if r == 1.0 {
            return a.clone();
        }
        if r == 0.0 {
            return b.clone();
        }
        let mut out = DensityMap::empty(self.dim);
        out.add_scaled(r, a);
        out.add_scaled(1.0 - r, b);
        out
    }

    fn cost_add(&self, _c: ExtReal, a: &DensityMap) -> DensityMap {
        a.clone()
    }

    fn leq(&self, a: &DensityMap, b: &DensityMap) -> bool {
        a.entries
            .keys()
            .chain(b.entries.keys())
            .all(|k| loewner_leq(&a.get(k), &b.get(k)).unwrap_or(false))
    }

    fn approx_eq(&self, a: &DensityMap, b: &DensityMap, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    fn magnitude(&self, a: &DensityMap) -> f64 {
        a.total_trace()
    }
}
