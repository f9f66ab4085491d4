//! Well-formedness and typing of macro-free programs.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::ast::*;
use crate::error::{Error, Result};

/// Variable sets of a program: Booleans, integers and registers, plus the
/// total quantum dimension. Generated names (containing `__`) are omitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarSets {
    pub bools: BTreeSet<String>,
    pub ints: BTreeSet<String>,
    pub qregs: BTreeSet<String>,
    pub dim: u128,
}

pub(crate) struct Env<'a> {
    kinds: HashMap<&'a str, VarKind>,
}

impl<'a> Env<'a> {
    pub(crate) fn new(p: &'a Program) -> Result<Self> {
        let mut kinds = HashMap::new();
        for d in &p.decls {
            if kinds.insert(d.name.as_str(), d.kind).is_some() {
                return Err(Error::Duplicate {
                    name: d.name.clone(),
                    span: d.span,
                });
            }
            if let VarKind::Qreg(n) = d.kind {
                if n < 2 {
                    return Err(Error::Type {
                        span: d.span,
                        msg: format!("register `{}` has dimension {n} < 2", d.name),
                    });
                }
            }
        }
        Ok(Env { kinds })
    }

    fn kind(&self, name: &str, span: Span) -> Result<VarKind> {
        self.kinds.get(name).copied().ok_or_else(|| Error::UnknownIdent {
            name: name.to_string(),
            span,
        })
    }

    pub(crate) fn type_of(&self, e: &Expr, span: Span) -> Result<ExprType> {
        match e {
            Expr::Int(_) => Ok(ExprType::Int),
            Expr::Bool(_) => Ok(ExprType::Bool),
            Expr::Var(v) => match self.kind(v, span)? {
                VarKind::Bool => Ok(ExprType::Bool),
                VarKind::Int => Ok(ExprType::Int),
                VarKind::Qreg(_) => Err(Error::Type {
                    span,
                    msg: format!("register `{v}` used in a classical expression"),
                }),
            },
            Expr::Not(inner) => {
                self.expect(inner, ExprType::Bool, span)?;
                Ok(ExprType::Bool)
            }
            Expr::Bin(op, a, b) => {
                let (arg, res) = op.signature();
                if matches!(op, BinOp::Eq) {
                    // Equality also compares Booleans.
                    let ta = self.type_of(a, span)?;
                    self.expect(b, ta, span)?;
                    return Ok(res);
                }
                self.expect(a, arg, span)?;
                self.expect(b, arg, span)?;
                Ok(res)
            }
        }
    }

    pub(crate) fn expect(&self, e: &Expr, t: ExprType, span: Span) -> Result<()> {
        let got = self.type_of(e, span)?;
        if got != t {
            return Err(Error::Type {
                span,
                msg: format!("expected {t} expression, found {got} in `{}`", super::pretty::expr_to_string(e)),
            });
        }
        Ok(())
    }

    fn reg_dim(&self, name: &str, span: Span) -> Result<usize> {
        match self.kind(name, span)? {
            VarKind::Qreg(n) => Ok(n),
            _ => Err(Error::Type {
                span,
                msg: format!("`{name}` is not a quantum register"),
            }),
        }
    }

    fn check(&self, s: &Stmt) -> Result<()> {
        let span = s.span;
        match &s.kind {
            StmtKind::Skip => Ok(()),
            StmtKind::Assign { var, expr } => {
                let t = match self.kind(var, span)? {
                    VarKind::Bool => ExprType::Bool,
                    VarKind::Int => ExprType::Int,
                    VarKind::Qreg(_) => {
                        return Err(Error::Type {
                            span,
                            msg: format!("cannot assign a classical value to register `{var}`"),
                        })
                    }
                };
                self.expect(expr, t, span)
            }
            StmtKind::Apply { regs, gate } => {
                let mut dims = Vec::new();
                for (i, r) in regs.iter().enumerate() {
                    if regs[..i].contains(r) {
                        return Err(Error::Arity {
                            span,
                            msg: format!("register `{r}` repeated"),
                        });
                    }
                    dims.push(self.reg_dim(r, span)?);
                }
                check_gate_dims(gate, &dims).map_err(|msg| Error::Arity { span, msg })
            }
            StmtKind::Measure { var, reg } => {
                self.bool_target(var, span)?;
                let d = self.reg_dim(reg, span)?;
                if d != 2 {
                    return Err(Error::Type {
                        span,
                        msg: format!("meas needs a two-dimensional register, `{reg}` has {d}"),
                    });
                }
                Ok(())
            }
            StmtKind::MeasureZero { var, reg } => {
                self.bool_target(var, span)?;
                self.reg_dim(reg, span).map(|_| ())
            }
            StmtKind::Consume(e) => self.expect(e, ExprType::Int, span),
            StmtKind::Seq(a, b) => {
                self.check(a)?;
                self.check(b)
            }
            StmtKind::If { cond, then, els } => {
                self.expect(cond, ExprType::Bool, span)?;
                self.check(then)?;
                self.check(els)
            }
            StmtKind::While { cond, body, .. } => {
                self.expect(cond, ExprType::Bool, span)?;
                self.check(body)
            }
            StmtKind::Summarized { bind, body, .. } => {
                for (_, to) in bind {
                    self.kind(to, span)?;
                }
                self.check(body)
            }
            StmtKind::InitZero(_) | StmtKind::InitPlus(_) | StmtKind::Call { .. } => Err(Error::Invalid(
                format!("statement at {span} must be macro-expanded before validation"),
            )),
        }
    }

    fn bool_target(&self, var: &str, span: Span) -> Result<()> {
        match self.kind(var, span)? {
            VarKind::Bool => Ok(()),
            _ => Err(Error::Type {
                span,
                msg: format!("measurement outcome needs a bool variable, `{var}` is not one"),
            }),
        }
    }
}

/// Checks that the gate acts on registers of the given dimensions.
pub fn check_gate_dims(gate: &Gate, dims: &[usize]) -> Result<(), String> {
    if let Some(a) = gate.arity() {
        if a != dims.len() {
            return Err(format!("{} acts on {a} registers, got {}", gate.name(), dims.len()));
        }
    }
    match gate {
        Gate::H | Gate::X | Gate::T | Gate::Cnot | Gate::Cz => {
            if dims.iter().any(|d| *d != 2) {
                return Err(format!("{} needs two-dimensional registers", gate.name()));
            }
        }
        Gate::Shift => {
            if dims[0] != 2 {
                return Err("SHIFT needs a two-dimensional coin register first".into());
            }
        }
        Gate::Matrix(m) => {
            if dims.is_empty() {
                return Err("matrix gate needs at least one register".into());
            }
            let total: usize = dims.iter().product();
            if m.dim() != total {
                return Err(format!(
                    "matrix has dimension {} but the registers span {total}",
                    m.dim()
                ));
            }
            let mut worst: f64 = 0.0;
            for i in 0..total {
                for j in 0..total {
                    let mut acc = num_complex::Complex64::new(0.0, 0.0);
                    for k in 0..total {
                        acc += m.rows[k][i].conj() * m.rows[k][j];
                    }
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((acc - target).norm());
                }
            }
            if worst > 1e-9 {
                return Err(format!("matrix is not unitary (deviation {worst:.3e})"));
            }
        }
    }
    Ok(())
}

/// Validates a macro-free program and returns its variable sets.
pub fn validate(p: &Program) -> Result<VarSets> {
    if !p.procs.is_empty() || !p.body.is_macro_free() {
        return Err(Error::Invalid("program must be macro-expanded before validation".into()));
    }
    let env = Env::new(p)?;
    env.check(&p.body)?;
    let mut vs = VarSets {
        bools: BTreeSet::new(),
        ints: BTreeSet::new(),
        qregs: BTreeSet::new(),
        dim: 1,
    };
    for d in &p.decls {
        if let VarKind::Qreg(n) = d.kind {
            vs.dim = vs.dim.saturating_mul(n as u128);
        }
        if is_generated_name(&d.name) {
            continue;
        }
        match d.kind {
            VarKind::Bool => vs.bools.insert(d.name.clone()),
            VarKind::Int => vs.ints.insert(d.name.clone()),
            VarKind::Qreg(_) => vs.qregs.insert(d.name.clone()),
        };
    }
    Ok(vs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::expand::expand_macros;
    use crate::lang::parser::parse_program;

    fn vs(src: &str) -> Result<VarSets> {
        validate(&expand_macros(&parse_program(src)?)?)
    }

    #[test]
    fn coin_toss_sets() {
        let v = vs("bool x; qreg q[2]; x = true; while (x) { q *= H; x = meas(q); consume(1) }").unwrap();
        assert_eq!(v.bools, ["x".to_string()].into());
        assert!(v.ints.is_empty());
        assert_eq!(v.qregs, ["q".to_string()].into());
        assert_eq!(v.dim, 2);
    }

    #[test]
    fn rus_sets_hide_scratch() {
        let v = vs("bool x; qreg q[2]; qreg q'[2]; x = true; while (x) { q = |+>; q *= T; x = meas(q) }")
            .unwrap();
        assert_eq!(v.bools, ["x".to_string()].into());
        assert_eq!(v.dim, 4);
    }

    #[test]
    fn type_errors() {
        assert!(matches!(vs("bool x; int y; x = meas(y)"), Err(Error::Type { .. })));
        assert!(matches!(vs("bool x; int y; y = x + 1"), Err(Error::Type { .. })));
        assert!(matches!(vs("bool x; consume(x)"), Err(Error::Type { .. })));
        assert!(matches!(vs("bool x; qreg q[3]; x = meas(q)"), Err(Error::Type { .. })));
        assert!(matches!(vs("x = 1"), Err(Error::UnknownIdent { .. })));
        assert!(matches!(vs("qreg q[2]; q, q *= CNOT"), Err(Error::Arity { .. })));
        assert!(matches!(vs("qreg q[2]; q *= CNOT"), Err(Error::Arity { .. })));
        assert!(matches!(vs("qreg q[2]; q *= [[1, 1], [0, 1]]"), Err(Error::Arity { .. })));
        assert!(vs("qreg q[2]; qreg p[3]; bool x; x = measzero(p); q, p *= SHIFT").is_ok());
    }
}
