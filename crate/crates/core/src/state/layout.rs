use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lang::ast::{is_generated_name, Program, VarKind};

/// Slot assignment for classical variables and the mixed-radix layout of
/// the quantum registers (first declared register is most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    vars: Vec<(String, VarKind)>,
    regs: Vec<(String, usize)>,
    strides: Vec<u64>,
    var_index: HashMap<String, usize>,
    reg_index: HashMap<String, usize>,
    dim: u64,
}

impl Layout {
    pub fn new(decls: impl IntoIterator<Item = (String, VarKind)>) -> Result<Self> {
        let mut vars = Vec::new();
        let mut regs = Vec::new();
        for (name, kind) in decls {
            match kind {
                VarKind::Qreg(d) => regs.push((name, d)),
                k => vars.push((name, k)),
            }
        }
        let mut strides = vec![0u64; regs.len()];
        let mut acc: u64 = 1;
        for (i, (name, d)) in regs.iter().enumerate().rev() {
            strides[i] = acc;
            acc = acc.checked_mul(*d as u64).filter(|v| *v < (1u64 << 62)).ok_or_else(|| {
                Error::Dimension(format!("total quantum dimension overflows at register `{name}`"))
            })?;
        }
        let var_index = vars.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();
        let reg_index = regs.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();
        Ok(Layout {
            vars,
            regs,
            strides,
            var_index,
            reg_index,
            dim: acc,
        })
    }

    pub fn of_program(p: &Program) -> Result<Self> {
        Self::new(p.decls.iter().map(|d| (d.name.clone(), d.kind)))
    }

    pub fn vars(&self) -> &[(String, VarKind)] {
        &self.vars
    }

    pub fn regs(&self) -> &[(String, usize)] {
        &self.regs
    }

    pub fn var_slot(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn reg_slot(&self, name: &str) -> Option<usize> {
        self.reg_index.get(name).copied()
    }

    pub fn var_kind(&self, slot: usize) -> VarKind {
        self.vars[slot].1
    }

    pub fn reg_dim(&self, reg: usize) -> usize {
        self.regs[reg].1
    }

    pub fn stride(&self, reg: usize) -> u64 {
        self.strides[reg]
    }

    /// Total dimension of the quantum state space.
    pub fn dim(&self) -> u64 {
        self.dim
    }

    /// Digit of register `reg` in basis index `idx`.
    pub fn digit(&self, idx: u64, reg: usize) -> u64 {
        (idx / self.strides[reg]) % self.regs[reg].1 as u64
    }

    /// Classical slots visible to users (generated names excluded).
    pub fn user_vars(&self) -> impl Iterator<Item = (usize, &str, VarKind)> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, (n, _))| !is_generated_name(n))
            .map(|(i, (n, k))| (i, n.as_str(), *k))
    }
}
