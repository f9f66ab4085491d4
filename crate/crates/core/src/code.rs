//! Programs lowered to an arena of nodes with slot-resolved operands.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lang::ast::{Gate, LoopLabel, Program, Span, Stmt, StmtKind};
use crate::lang::{expand_macros, parse_expr, parse_program, validate, VarSets};
use crate::state::{CExpr, Layout, Unitary};

pub type NodeId = u32;

#[derive(Debug, Clone)]
pub enum Node {
    Skip,
    Assign {
        slot: usize,
        expr: CExpr,
    },
    Apply {
        gate: Arc<Unitary>,
        source: Gate,
        regs: Vec<usize>,
    },
    Measure {
        slot: usize,
        reg: usize,
        zero_test: bool,
    },
    Consume(CExpr),
    Seq(NodeId, NodeId),
    If {
        cond: CExpr,
        then: NodeId,
        els: NodeId,
    },
    While {
        cond: CExpr,
        body: NodeId,
        label: Option<LoopLabel>,
    },
    Summarized {
        name: String,
        bind: Vec<(String, String)>,
        body: NodeId,
    },
}

/// A validated, macro-free program in arena form.
#[derive(Debug, Clone)]
pub struct Code {
    pub layout: Arc<Layout>,
    pub program: Program,
    pub varsets: VarSets,
    nodes: Vec<Node>,
    spans: Vec<Span>,
    has_loop: Vec<bool>,
    root: NodeId,
}

impl Code {
    /// Parses, expands, validates and lowers program text.
    pub fn compile(text: &str) -> Result<Self> {
        Self::from_program(&parse_program(text)?)
    }

    pub fn from_program(p: &Program) -> Result<Self> {
        let p = expand_macros(p)?;
        let varsets = validate(&p)?;
        let layout = Arc::new(Layout::of_program(&p)?);
        let mut code = Code {
            layout,
            program: p.clone(),
            varsets,
            nodes: Vec::new(),
            spans: Vec::new(),
            has_loop: Vec::new(),
            root: 0,
        };
        code.root = code.lower(&p.body)?;
        Ok(code)
    }

    /// Lowers an additional statement over the same layout (for example a
    /// sub-statement checked in isolation).
    pub fn add_stmt(&mut self, s: &Stmt) -> Result<NodeId> {
        self.lower(s)
    }

    fn push(&mut self, n: Node, span: Span) -> NodeId {
        let has_loop = match &n {
            Node::While { .. } => true,
            Node::Seq(a, b) => self.has_loop[*a as usize] || self.has_loop[*b as usize],
            Node::If { then, els, .. } => self.has_loop[*then as usize] || self.has_loop[*els as usize],
            Node::Summarized { body, .. } => self.has_loop[*body as usize],
            _ => false,
        };
        self.nodes.push(n);
        self.spans.push(span);
        self.has_loop.push(has_loop);
        (self.nodes.len() - 1) as NodeId
    }

    fn slot(&self, v: &str, span: Span) -> Result<usize> {
        self.layout.var_slot(v).ok_or_else(|| Error::UnknownIdent {
            name: v.to_string(),
            span,
        })
    }

    fn reg(&self, v: &str, span: Span) -> Result<usize> {
        self.layout.reg_slot(v).ok_or_else(|| Error::UnknownIdent {
            name: v.to_string(),
            span,
        })
    }

    fn lower(&mut self, s: &Stmt) -> Result<NodeId> {
        let span = s.span;
        let l = self.layout.clone();
        let node = match &s.kind {
            StmtKind::Skip => Node::Skip,
            StmtKind::Assign { var, expr } => Node::Assign {
                slot: self.slot(var, span)?,
                expr: CExpr::compile(expr, &l)?,
            },
            StmtKind::Apply { regs, gate } => {
                let regs = regs.iter().map(|r| self.reg(r, span)).collect::<Result<Vec<_>>>()?;
                let dims: Vec<usize> = regs.iter().map(|r| l.reg_dim(*r)).collect();
                Node::Apply {
                    gate: Arc::new(Unitary::of_gate(gate, &dims)?),
                    source: gate.clone(),
                    regs,
                }
            }
            StmtKind::Measure { var, reg } => Node::Measure {
                slot: self.slot(var, span)?,
                reg: self.reg(reg, span)?,
                zero_test: false,
            },
            StmtKind::MeasureZero { var, reg } => Node::Measure {
                slot: self.slot(var, span)?,
                reg: self.reg(reg, span)?,
                zero_test: true,
            },
            StmtKind::Consume(e) => Node::Consume(CExpr::compile(e, &l)?),
            StmtKind::Seq(a, b) => {
                let a = self.lower(a)?;
                let b = self.lower(b)?;
                Node::Seq(a, b)
            }
            StmtKind::If { cond, then, els } => {
                let then = self.lower(then)?;
                let els = self.lower(els)?;
                Node::If {
                    cond: CExpr::compile(cond, &l)?,
                    then,
                    els,
                }
            }
            StmtKind::While { cond, body, label } => {
                let body = self.lower(body)?;
                Node::While {
                    cond: CExpr::compile(cond, &l)?,
                    body,
                    label: label.clone(),
                }
            }
            StmtKind::Summarized { name, bind, body } => {
                let body = self.lower(body)?;
                Node::Summarized {
                    name: name.clone(),
                    bind: bind.clone(),
                    body,
                }
            }
            StmtKind::InitZero(_) | StmtKind::InitPlus(_) | StmtKind::Call { .. } => {
                return Err(Error::Invalid(format!("unexpanded macro or sugar at {span}")))
            }
        };
        Ok(self.push(node, span))
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn span(&self, id: NodeId) -> Span {
        self.spans[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_loop(&self, id: NodeId) -> bool {
        self.has_loop[id as usize]
    }

    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        match self.node(id) {
            Node::Seq(a, b) => vec![*a, *b],
            Node::If { then, els, .. } => vec![*then, *els],
            Node::While { body, .. } | Node::Summarized { body, .. } => vec![*body],
            _ => Vec::new(),
        }
    }

    /// Pre-order traversal of the subtree at `id`.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut todo = vec![id];
        while let Some(n) = todo.pop() {
            out.push(n);
            let mut cs = self.children(n);
            cs.reverse();
            todo.extend(cs);
        }
        out
    }

    /// Classical slots written and registers measured or acted on.
    pub fn footprint(&self, id: NodeId) -> (Vec<usize>, Vec<usize>) {
        let (mut slots, mut regs) = (Vec::new(), Vec::new());
        for n in self.subtree(id) {
            match self.node(n) {
                Node::Assign { slot, .. } => slots.push(*slot),
                Node::Measure { slot, reg, .. } => {
                    slots.push(*slot);
                    regs.push(*reg);
                }
                Node::Apply { regs: r, .. } => regs.extend(r),
                _ => {}
            }
        }
        slots.sort_unstable();
        slots.dedup();
        regs.sort_unstable();
        regs.dedup();
        (slots, regs)
    }

    /// Reconstructs the statement at `id`.
    pub fn to_stmt(&self, id: NodeId) -> Stmt {
        let l = &self.layout;
        let var = |s: usize| l.vars()[s].0.clone();
        let reg = |r: usize| l.regs()[r].0.clone();
        let expr = |e: &CExpr| parse_expr(e.source()).expect("compiled expressions print back");
        let kind = match self.node(id) {
            Node::Skip => StmtKind::Skip,
            Node::Assign { slot, expr: e } => StmtKind::Assign {
                var: var(*slot),
                expr: expr(e),
            },
            Node::Apply { source, regs, .. } => StmtKind::Apply {
                regs: regs.iter().map(|r| reg(*r)).collect(),
                gate: source.clone(),
            },
            Node::Measure { slot, reg: r, zero_test } => {
                if *zero_test {
                    StmtKind::MeasureZero {
                        var: var(*slot),
                        reg: reg(*r),
                    }
                } else {
                    StmtKind::Measure {
                        var: var(*slot),
                        reg: reg(*r),
                    }
                }
            }
            Node::Consume(e) => StmtKind::Consume(expr(e)),
            Node::Seq(a, b) => StmtKind::Seq(Box::new(self.to_stmt(*a)), Box::new(self.to_stmt(*b))),
            Node::If { cond, then, els } => StmtKind::If {
                cond: expr(cond),
                then: Box::new(self.to_stmt(*then)),
                els: Box::new(self.to_stmt(*els)),
            },
            Node::While { cond, body, label } => StmtKind::While {
                cond: expr(cond),
                body: Box::new(self.to_stmt(*body)),
                label: label.clone(),
            },
            Node::Summarized { name, bind, body } => StmtKind::Summarized {
                name: name.clone(),
                bind: bind.clone(),
                body: Box::new(self.to_stmt(*body)),
            },
        };
        Stmt::new(kind, self.span(id))
    }

    /// Loop nodes in pre-order.
    pub fn loops(&self, id: NodeId) -> Vec<NodeId> {
        self.subtree(id)
            .into_iter()
            .filter(|n| matches!(self.node(*n), Node::While { .. }))
            .collect()
    }

    /// Unwraps a top-level sequence into its elements.
    pub fn flatten_seq(&self, id: NodeId) -> Vec<NodeId> {
        match self.node(id) {
            Node::Seq(a, b) => {
                let mut v = self.flatten_seq(*a);
                v.extend(self.flatten_seq(*b));
                v
            }
            _ => vec![id],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::pretty::stmt_to_string;

    #[test]
    fn lowering_round_trips() {
        let src = "bool x; int t; qreg q[2];\n\
            t = 0; x = true; while (x && t < 5) { q *= H; x = meas(q); t = t + 1; consume(2 * t) }";
        let code = Code::compile(src).unwrap();
        assert_eq!(stmt_to_string(&code.to_stmt(code.root())), stmt_to_string(&code.program.body));
        assert!(code.has_loop(code.root()));
        let (slots, regs) = code.footprint(code.root());
        assert_eq!(slots.len(), 2);
        assert_eq!(regs, vec![0]);
    }
}
