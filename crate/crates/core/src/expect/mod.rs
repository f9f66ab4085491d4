//! Expectations: evaluable functions from machine states to ℝ^{+∞}.

mod compiled;
mod sexpr;
pub mod suite;

pub use compiled::{CompiledExpectation, KappaFn};
pub use sexpr::{parse_expectation, to_sexpr, SExp};
pub use suite::StateSuite;

use num_complex::Complex64;

use crate::cost::ExtReal;
use crate::error::{Error, Result};
use crate::lang::ast::{Expr, Stmt};
use crate::state::{Layout, MachineState};

/// Expectation syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expectation {
    Const(ExtReal),
    /// `⟦b⟧ ∈ {0, 1}`.
    Ind(Expr),
    /// `max(⟦a⟧, 0)`.
    Arith(Expr),
    /// `⟨φ|(Q ⊗ I)|φ⟩` with `Q` acting on `regs` in the given order.
    QuadForm { regs: Vec<String>, matrix: Vec<Vec<Complex64>> },
    Add(Vec<Expectation>),
    Mul(Vec<Expectation>),
    Scale(f64, Box<Expectation>),
    Max(Vec<Expectation>),
    Min(Vec<Expectation>),
    /// The continuation placeholder `κ[x₁:=v₁, …]`.
    Kappa(Vec<(String, i64)>),
}

impl Expectation {
    pub fn constant(c: f64) -> Self {
        Expectation::Const(ExtReal::new(c))
    }

    pub fn zero() -> Self {
        Expectation::Const(ExtReal::ZERO)
    }

    pub fn ind(b: Expr) -> Self {
        Expectation::Ind(b)
    }

    pub fn add(a: Expectation, b: Expectation) -> Self {
        Expectation::Add(vec![a, b])
    }

    pub fn mul(a: Expectation, b: Expectation) -> Self {
        Expectation::Mul(vec![a, b])
    }

    pub fn scale(r: f64, e: Expectation) -> Self {
        Expectation::Scale(r, Box::new(e))
    }

    pub fn kappa() -> Self {
        Expectation::Kappa(Vec::new())
    }

    fn children(&self) -> &[Expectation] {
        match self {
            Expectation::Add(v) | Expectation::Mul(v) | Expectation::Max(v) | Expectation::Min(v) => v,
            Expectation::Scale(_, e) => std::slice::from_ref(&**e),
            _ => &[],
        }
    }

    pub fn any(&self, pred: &impl Fn(&Expectation) -> bool) -> bool {
        pred(self) || self.children().iter().any(|c| c.any(pred))
    }

    pub fn has_kappa(&self) -> bool {
        self.any(&|e| matches!(e, Expectation::Kappa(_)))
    }

    /// Classical variables and registers the expectation reads.
    pub fn mentioned_names(&self) -> Vec<String> {
        fn go(e: &Expectation, out: &mut Vec<String>) {
            match e {
                Expectation::Ind(b) | Expectation::Arith(b) => b.for_each_var(&mut |v| out.push(v.to_string())),
                Expectation::QuadForm { regs, .. } => out.extend(regs.iter().cloned()),
                Expectation::Kappa(up) => out.extend(up.iter().map(|u| u.0.clone())),
                _ => e.children().iter().for_each(|c| go(c, out)),
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Renames variables and registers.
    pub fn rename(&mut self, map: &dyn Fn(&str) -> Option<String>) {
        match self {
            Expectation::Ind(b) | Expectation::Arith(b) => b.rename(map),
            Expectation::QuadForm { regs, .. } => {
                for r in regs {
                    if let Some(n) = map(r) {
                        *r = n;
                    }
                }
            }
            Expectation::Kappa(up) => {
                for (v, _) in up {
                    if let Some(n) = map(v) {
                        *v = n;
                    }
                }
            }
            Expectation::Add(v) | Expectation::Mul(v) | Expectation::Max(v) | Expectation::Min(v) => {
                v.iter_mut().for_each(|c| c.rename(map))
            }
            Expectation::Scale(_, e) => e.rename(map),
            Expectation::Const(_) => {}
        }
    }

    /// Replaces every `κ[u]` by `k` with the updates `u` applied as a
    /// substitution.
    pub fn instantiate_kappa(&self, k: &Expectation) -> Result<Expectation> {
        Ok(match self {
            Expectation::Kappa(up) => {
                let mut out = k.clone();
                for (v, c) in up {
                    out = substitute(&out, v, &Expr::Int(*c))?;
                }
                out
            }
            Expectation::Add(v) => Expectation::Add(v.iter().map(|c| c.instantiate_kappa(k)).collect::<Result<_>>()?),
            Expectation::Mul(v) => Expectation::Mul(v.iter().map(|c| c.instantiate_kappa(k)).collect::<Result<_>>()?),
            Expectation::Max(v) => Expectation::Max(v.iter().map(|c| c.instantiate_kappa(k)).collect::<Result<_>>()?),
            Expectation::Min(v) => Expectation::Min(v.iter().map(|c| c.instantiate_kappa(k)).collect::<Result<_>>()?),
            Expectation::Scale(r, e) => Expectation::Scale(*r, Box::new(e.instantiate_kappa(k)?)),
            other => other.clone(),
        })
    }
}

impl std::fmt::Display for Expectation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&to_sexpr(self))
    }
}

/// Evaluates `f` at `σ` without a continuation.
pub fn eval_expectation(f: &Expectation, layout: &Layout, s: &MachineState) -> Result<ExtReal> {
    CompiledExpectation::compile(f, layout)?.eval(s)
}

/// True iff `e` has no quadratic form, so it cannot depend on the quantum
/// state. The continuation placeholder counts as classical.
pub fn classical_check(e: &Expectation) -> bool {
    !e.any(&|n| matches!(n, Expectation::QuadForm { .. }))
}

/// Syntactic independence `e ⊥ stm`: `e` mentions no classical variable
/// the statement writes and no register it measures or acts on, and has no
/// continuation placeholder. A quadratic form is never independent of a
/// statement that measures: through entanglement, measuring one register
/// changes the reduced state of the others.
pub fn independence_check(e: &Expectation, stm: &Stmt) -> bool {
    if e.has_kappa() {
        return false;
    }
    if !classical_check(e) && stm.measures() {
        return false;
    }
    let written = stm.assigned_vars();
    let touched = stm.touched_regs();
    e.mentioned_names()
        .iter()
        .all(|n| !written.contains(n) && !touched.contains(n))
}

fn subst_expr(e: &Expr, x: &str, by: &Expr) -> Expr {
    match e {
        Expr::Var(v) if v == x => by.clone(),
        Expr::Var(_) | Expr::Int(_) | Expr::Bool(_) => e.clone(),
        Expr::Not(a) => Expr::not(subst_expr(a, x, by)),
        Expr::Bin(op, a, b) => Expr::bin(*op, subst_expr(a, x, by), subst_expr(b, x, by)),
    }
}

/// Syntactic substitution `f[x := e]`. Continuation placeholders are not
/// supported because their meaning depends on the continuation.
pub fn substitute(f: &Expectation, x: &str, by: &Expr) -> Result<Expectation> {
    let rec = |v: &[Expectation]| v.iter().map(|c| substitute(c, x, by)).collect::<Result<Vec<_>>>();
    Ok(match f {
        Expectation::Const(_) | Expectation::QuadForm { .. } => f.clone(),
        Expectation::Ind(b) => Expectation::Ind(subst_expr(b, x, by)),
        Expectation::Arith(a) => Expectation::Arith(subst_expr(a, x, by)),
        Expectation::Add(v) => Expectation::Add(rec(v)?),
        Expectation::Mul(v) => Expectation::Mul(rec(v)?),
        Expectation::Max(v) => Expectation::Max(rec(v)?),
        Expectation::Min(v) => Expectation::Min(rec(v)?),
        Expectation::Scale(r, e) => Expectation::Scale(*r, Box::new(substitute(e, x, by)?)),
        Expectation::Kappa(_) => {
            return Err(Error::Expectation("cannot substitute into a continuation placeholder".into()))
        }
    })
}

/// `⟦b⟧·e` as an expectation.
pub fn guarded(b: Expr, e: Expectation) -> Expectation {
    Expectation::mul(Expectation::Ind(b), e)
}

/// `⟦¬b⟧·e`.
pub fn guarded_not(b: Expr, e: Expectation) -> Expectation {
    guarded(Expr::not(b), e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::state::QVec;

    fn ct_layout() -> Layout {
        Layout::new([
            ("x".to_string(), crate::lang::ast::VarKind::Bool),
            ("q".to_string(), crate::lang::ast::VarKind::Qreg(2)),
        ])
        .unwrap()
    }

    #[test]
    fn coin_toss_invariant_value() {
        let l = ct_layout();
        let g = parse_expectation("(mul (ind x) (add (const 1) (quadform (q) [[1,-1],[-1,1]])))").unwrap();
        let (a, b) = (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let s = MachineState {
            store: vec![1],
            qvec: QVec::from_dense(&[a, b]),
        };
        let v = eval_expectation(&g, &l, &s).unwrap().get();
        assert!((v - (1.0 + (a - b).norm_sqr())).abs() < 1e-12);
        let s0 = s.with_var(0, 0);
        assert_eq!(eval_expectation(&g, &l, &s0).unwrap().get(), 0.0);
    }

    #[test]
    fn walk_quadform_at_position_one() {
        let l = Layout::new([
            ("x".to_string(), crate::lang::ast::VarKind::Bool),
            ("c".to_string(), crate::lang::ast::VarKind::Qreg(2)),
            ("p".to_string(), crate::lang::ast::VarKind::Qreg(2)),
        ])
        .unwrap();
        let g = parse_expectation("(add 1 (quadform (c p) [[0,0,0,0],[0,1,0,0],[0,0,0,0],[0,0,0,1]]))").unwrap();
        let s = MachineState {
            store: vec![1],
            qvec: QVec::basis(1),
        };
        assert_eq!(eval_expectation(&g, &l, &s).unwrap().get(), 2.0);
    }

    #[test]
    fn negative_results_are_rejected() {
        let l = ct_layout();
        let g = parse_expectation("(add 1 (quadform (q) [[-3,0],[0,0]]))").unwrap();
        let s = MachineState {
            store: vec![0],
            qvec: QVec::basis(0),
        };
        assert!(matches!(eval_expectation(&g, &l, &s), Err(Error::Expectation(_))));
    }

    #[test]
    fn classicality_and_independence() {
        let e = parse_expectation("(mul (ind x) 8/3)").unwrap();
        assert!(classical_check(&e));
        assert!(!classical_check(&parse_expectation("(quadform (q) [[1,0],[0,1]])").unwrap()));
        assert!(classical_check(&Expectation::constant(5.0)));
        let p = parse_program("int x; int y; x = x + 3").unwrap();
        assert!(independence_check(&parse_expectation("(arith y)").unwrap(), &p.body));
        assert!(!independence_check(&parse_expectation("(arith x)").unwrap(), &p.body));
        assert!(independence_check(&Expectation::constant(2.0), &p.body));
        let m = parse_program("bool b; qreg q[2]; qreg r[2]; q *= H; q, r *= CNOT; b = meas(q)").unwrap();
        let on_r = parse_expectation("(quadform (r) [[1,0],[0,0]])").unwrap();
        assert!(!independence_check(&on_r, &m.body));
        let u = parse_program("qreg q[2]; qreg r[2]; q *= H").unwrap();
        assert!(independence_check(&on_r, &u.body));
    }

    #[test]
    fn kappa_instantiation() {
        let g = parse_expectation("(add (mul (ind (not x)) (add 36 (kappa (x 1)))) (mul (ind x) (kappa)))").unwrap();
        let k = parse_expectation("(mul (ind x) 10)").unwrap();
        let inst = g.instantiate_kappa(&k).unwrap();
        assert!(!inst.has_kappa());
        let l = ct_layout();
        let s = MachineState {
            store: vec![0],
            qvec: QVec::basis(0),
        };
        assert_eq!(eval_expectation(&inst, &l, &s).unwrap().get(), 46.0);
        assert_eq!(eval_expectation(&inst, &l, &s.with_var(0, 1)).unwrap().get(), 10.0);
    }
}
