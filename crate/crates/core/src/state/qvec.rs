//! Sparse amplitude vectors over a register layout.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::layout::Layout;
use crate::error::{Error, Result};

/// Amplitudes with squared modulus below this are dropped.
pub const PRUNE_SQ: f64 = 1e-28;

/// Sparse state vector: basis index and amplitude, sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct QVec {
    amps: Vec<(u64, Complex64)>,
}

impl QVec {
    pub fn basis(idx: u64) -> Self {
        QVec {
            amps: vec![(idx, Complex64::new(1.0, 0.0))],
        }
    }

    /// Builds from arbitrary entries: sorts, merges duplicates and prunes.
    pub fn from_entries(mut entries: Vec<(u64, Complex64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut amps: Vec<(u64, Complex64)> = Vec::with_capacity(entries.len());
        for (i, a) in entries {
            match amps.last_mut() {
                Some((j, b)) if *j == i => *b += a,
                _ => amps.push((i, a)),
            }
        }
        amps.retain(|(_, a)| a.norm_sqr() >= PRUNE_SQ);
        QVec { amps }
    }

    pub fn from_dense(v: &[Complex64]) -> Self {
        Self::from_entries(v.iter().enumerate().map(|(i, a)| (i as u64, *a)).collect())
    }

    pub fn to_dense(&self, dim: u64) -> Result<Vec<Complex64>> {
        if dim > 1 << 20 {
            return Err(Error::Dimension(format!("dense view of dimension {dim} exceeds 2^20")));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); dim as usize];
        for (i, a) in &self.amps {
            v[*i as usize] = *a;
        }
        Ok(v)
    }

    pub fn entries(&self) -> &[(u64, Complex64)] {
        &self.amps
    }

    pub fn amp(&self, idx: u64) -> Complex64 {
        match self.amps.binary_search_by_key(&idx, |e| e.0) {
            Ok(k) => self.amps[k].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &QVec) -> Complex64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = Complex64::new(0.0, 0.0);
        while i < self.amps.len() && j < other.amps.len() {
            let (a, b) = (self.amps[i], other.amps[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.1.conj() * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn scaled(&self, s: f64) -> QVec {
        QVec {
            amps: self.amps.iter().map(|(i, a)| (*i, a * s)).collect(),
        }
    }

    pub fn normalized(&self) -> QVec {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(1.0 / n)
    }

    /// Splits by a predicate on basis indices.
    pub fn split(&self, pred: impl Fn(u64) -> bool) -> (QVec, QVec) {
        let (yes, no): (Vec<_>, Vec<_>) = self.amps.iter().partition(|(i, _)| pred(*i));
        (QVec { amps: yes }, QVec { amps: no })
    }

    pub fn check_layout(&self, layout: &Layout) -> Result<()> {
        if let Some((i, _)) = self.amps.iter().find(|(i, _)| *i >= layout.dim()) {
            return Err(Error::State(format!(
                "basis index {i} out of range for dimension {}",
                layout.dim()
            )));
        }
        Ok(())
    }
}
