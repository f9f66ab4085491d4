use std::collections::HashMap;

use num_complex::Complex64;

use super::Expectation;
use crate::cost::ExtReal;
use crate::error::{Error, Result};
use crate::state::{CExpr, Layout, MachineState};

/// Evaluates the continuation at a (store-updated) state.
pub type KappaFn<'a> = &'a dyn Fn(&MachineState) -> Result<f64>;

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Ind(CExpr),
    Arith(CExpr),
    Quad { regs: Vec<usize>, sub_dims: Vec<u64>, q: Vec<Vec<Complex64>> },
    Add(Vec<Node>),
    Mul(Vec<Node>),
    Scale(f64, Box<Node>),
    Max(Vec<Node>),
    Min(Vec<Node>),
    Kappa(Vec<(usize, i64)>),
}

/// An expectation resolved against a layout.
#[derive(Debug, Clone)]
pub struct CompiledExpectation {
    node: Node,
    layout: Layout,
    has_kappa: bool,
}

const HERMITIAN_TOL: f64 = 1e-9;

fn unknown(name: &str) -> Error {
    Error::UnknownIdent {
        name: name.to_string(),
        span: Default::default(),
    }
}

impl CompiledExpectation {
    pub fn compile(e: &Expectation, layout: &Layout) -> Result<Self> {
        fn go(e: &Expectation, l: &Layout) -> Result<Node> {
            let all = |v: &[Expectation]| v.iter().map(|c| go(c, l)).collect::<Result<Vec<_>>>();
            Ok(match e {
                Expectation::Const(c) => Node::Const(c.get()),
                Expectation::Ind(b) => Node::Ind(CExpr::compile(b, l)?),
                Expectation::Arith(a) => Node::Arith(CExpr::compile(a, l)?),
                Expectation::QuadForm { regs, matrix } => {
                    let slots = regs
                        .iter()
                        .map(|r| l.reg_slot(r).ok_or_else(|| unknown(r)))
                        .collect::<Result<Vec<_>>>()?;
                    let mut sorted = slots.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    if sorted.len() != slots.len() {
                        return Err(Error::Expectation("quadform registers must be distinct".into()));
                    }
                    let dim: usize = slots.iter().map(|r| l.reg_dim(*r)).product();
                    if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
                        return Err(Error::Dimension(format!(
                            "quadform matrix must be {dim}×{dim} for registers {regs:?}"
                        )));
                    }
                    for i in 0..dim {
                        for j in 0..dim {
                            if (matrix[i][j] - matrix[j][i].conj()).norm() > HERMITIAN_TOL {
                                return Err(Error::Expectation(format!("quadform matrix is not Hermitian at ({i},{j})")));
                            }
                        }
                    }
                    let mut sub_dims = vec![1u64; slots.len()];
                    let mut acc = 1u64;
                    for k in (0..slots.len()).rev() {
                        sub_dims[k] = acc;
                        acc *= l.reg_dim(slots[k]) as u64;
                    }
                    Node::Quad {
                        regs: slots,
                        sub_dims,
                        q: matrix.clone(),
                    }
                }
                Expectation::Add(v) => Node::Add(all(v)?),
                Expectation::Mul(v) => Node::Mul(all(v)?),
                Expectation::Max(v) => Node::Max(all(v)?),
                Expectation::Min(v) => Node::Min(all(v)?),
                Expectation::Scale(r, e) => {
                    if !(*r >= 0.0) || r.is_infinite() {
                        return Err(Error::Expectation(format!("scale factor {r} must be finite and non-negative")));
                    }
                    Node::Scale(*r, Box::new(go(e, l)?))
                }
                Expectation::Kappa(up) => Node::Kappa(
                    up.iter()
                        .map(|(v, c)| Ok((l.var_slot(v).ok_or_else(|| unknown(v))?, *c)))
                        .collect::<Result<Vec<_>>>()?,
                ),
            })
        }
        Ok(CompiledExpectation {
            node: go(e, layout)?,
            layout: layout.clone(),
            has_kappa: e.has_kappa(),
        })
    }

    pub fn has_kappa(&self) -> bool {
        self.has_kappa
    }

    /// Evaluates an expectation without continuation placeholders.
    pub fn eval(&self, s: &MachineState) -> Result<ExtReal> {
        self.eval_with(s, None)
    }

    /// Evaluates with `kappa` standing for the placeholder.
    pub fn eval_with(&self, s: &MachineState, kappa: Option<KappaFn<'_>>) -> Result<ExtReal> {
        let v = self.raw(&self.node, s, kappa)?;
        if v.is_nan() || v < -HERMITIAN_TOL {
            return Err(Error::Expectation(format!("expectation evaluates to {v}, below zero")));
        }
        Ok(ExtReal::new(v.max(0.0)))
    }

    fn raw(&self, n: &Node, s: &MachineState, kappa: Option<KappaFn<'_>>) -> Result<f64> {
        Ok(match n {
            Node::Const(c) => *c,
            Node::Ind(b) => b.eval_bool(&s.store)? as u8 as f64,
            Node::Arith(a) => a.eval(&s.store)?.max(0) as f64,
            Node::Quad { regs, sub_dims, q } => self.quad(regs, sub_dims, q, s),
            Node::Add(v) => {
                let mut acc = 0.0;
                for c in v {
                    acc += self.raw(c, s, kappa)?;
                }
                acc
            }
            Node::Mul(v) => {
                let mut acc = 1.0;
                for c in v {
                    let x = self.raw(c, s, kappa)?;
                    if x == 0.0 {
                        return Ok(0.0);
                    }
                    acc *= x;
                }
                acc
            }
            Node::Scale(r, e) => {
                if *r == 0.0 {
                    0.0
                } else {
                    r * self.raw(e, s, kappa)?
                }
            }
            Node::Max(v) => {
                let mut acc = f64::NEG_INFINITY;
                for c in v {
                    acc = acc.max(self.raw(c, s, kappa)?);
                }
                if v.is_empty() {
                    0.0
                } else {
                    acc
                }
            }
            Node::Min(v) => {
                let mut acc = f64::INFINITY;
                for c in v {
                    acc = acc.min(self.raw(c, s, kappa)?);
                }
                acc
            }
            Node::Kappa(up) => {
                let k = kappa.ok_or_else(|| Error::Expectation("continuation placeholder without a continuation".into()))?;
                if up.is_empty() {
                    k(s)?
                } else {
                    let mut t = s.clone();
                    for (slot, v) in up {
                        t.store[*slot] = *v;
                    }
                    k(&t)?
                }
            }
        })
    }

    fn quad(&self, regs: &[usize], sub_dims: &[u64], q: &[Vec<Complex64>], s: &MachineState) -> f64 {
        let l = &self.layout;
        let mut groups: HashMap<u64, Vec<(usize, Complex64)>> = HashMap::new();
        for (idx, a) in s.qvec.entries() {
            let mut sub = 0u64;
            let mut rest = *idx;
            for (k, r) in regs.iter().enumerate() {
                let d = l.digit(*idx, *r);
                sub += d * sub_dims[k];
                rest -= d * l.stride(*r);
            }
            groups.entry(rest).or_default().push((sub as usize, *a));
        }
        let mut total = 0.0;
        for g in groups.values() {
            for (i, a) in g {
                for (j, b) in g {
                    total += (a.conj() * q[*i][*j] * b).re;
                }
            }
        }
        total
    }
}
