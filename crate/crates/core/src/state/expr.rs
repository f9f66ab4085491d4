//! Slot-resolved classical expressions and their evaluation.

use std::sync::Arc;

use super::layout::Layout;
use crate::error::{Error, Result};
use crate::lang::ast::{BinOp, Expr};
use crate::lang::pretty::expr_to_string;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    Slot(usize),
    Const(i64),
    Not(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
}

/// Classical expression with variables resolved to store slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CExpr {
    node: Node,
    src: Arc<str>,
}

impl CExpr {
    pub fn compile(e: &Expr, layout: &Layout) -> Result<Self> {
        fn go(e: &Expr, l: &Layout) -> Result<Node> {
            Ok(match e {
                Expr::Var(v) => Node::Slot(l.var_slot(v).ok_or_else(|| Error::UnknownIdent {
                    name: v.clone(),
                    span: Default::default(),
                })?),
                Expr::Int(i) => Node::Const(*i),
                Expr::Bool(b) => Node::Const(*b as i64),
                Expr::Not(a) => Node::Not(Box::new(go(a, l)?)),
                Expr::Bin(op, a, b) => Node::Bin(*op, Box::new(go(a, l)?), Box::new(go(b, l)?)),
            })
        }
        Ok(CExpr {
            node: go(e, layout)?,
            src: expr_to_string(e).into(),
        })
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    /// Evaluates to an integer; Booleans evaluate to 0 or 1.
    pub fn eval(&self, store: &[i64]) -> Result<i64> {
        fn go(n: &Node, s: &[i64]) -> Option<i64> {
            Some(match n {
                Node::Slot(i) => s[*i],
                Node::Const(c) => *c,
                Node::Not(a) => (go(a, s)? == 0) as i64,
                Node::Bin(op, a, b) => {
                    let x = go(a, s)?;
                    // Short-circuit keeps `false && overflow` well defined.
                    match op {
                        BinOp::And if x == 0 => return Some(0),
                        BinOp::Or if x != 0 => return Some(1),
                        _ => {}
                    }
                    let y = go(b, s)?;
                    match op {
                        BinOp::Add => x.checked_add(y)?,
                        BinOp::Sub => x.checked_sub(y)?,
                        BinOp::Mul => x.checked_mul(y)?,
                        BinOp::Eq => (x == y) as i64,
                        BinOp::Le => (x <= y) as i64,
                        BinOp::Lt => (x < y) as i64,
                        BinOp::And | BinOp::Or => (y != 0) as i64,
                    }
                }
            })
        }
        go(&self.node, store).ok_or_else(|| Error::Overflow(self.src.to_string()))
    }

    pub fn eval_bool(&self, store: &[i64]) -> Result<bool> {
        Ok(self.eval(store)? != 0)
    }

    /// Store slots read by the expression.
    pub fn slots(&self) -> Vec<usize> {
        fn go(n: &Node, out: &mut Vec<usize>) {
            match n {
                Node::Slot(i) => out.push(*i),
                Node::Const(_) => {}
                Node::Not(a) => go(a, out),
                Node::Bin(_, a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = Vec::new();
        go(&self.node, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }
}
