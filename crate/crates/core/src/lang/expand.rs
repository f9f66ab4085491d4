//! Macro inlining, sugar removal and loop labelling.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::ast::*;
use crate::error::{Error, Result};

/// Shared scratch bit used by the `q = |0>` desugaring.
pub const RESET_VAR: &str = "__reset";

type Subst = BTreeMap<String, String>;

struct Expander<'a> {
    prog: &'a Program,
    kinds: HashMap<String, VarKind>,
    new_decls: Vec<Decl>,
    counters: HashMap<String, usize>,
    main_loops: usize,
    uses_reset: bool,
}

fn rename_stmt(s: &mut Stmt, map: &Subst) {
    let r = |v: &mut String| {
        if let Some(n) = map.get(v.as_str()) {
            *v = n.clone();
        }
    };
    let rexpr = |e: &mut Expr| e.rename(&|v| map.get(v).cloned());
    match &mut s.kind {
        StmtKind::Skip => {}
        StmtKind::Assign { var, expr } => {
            r(var);
            rexpr(expr);
        }
        StmtKind::Apply { regs, .. } => regs.iter_mut().for_each(r),
        StmtKind::Measure { var, reg } | StmtKind::MeasureZero { var, reg } => {
            r(var);
            r(reg);
        }
        StmtKind::Consume(e) => rexpr(e),
        StmtKind::Seq(a, b) => {
            rename_stmt(a, map);
            rename_stmt(b, map);
        }
        StmtKind::If { cond, then, els } => {
            rexpr(cond);
            rename_stmt(then, map);
            rename_stmt(els, map);
        }
        StmtKind::While { cond, body, label } => {
            rexpr(cond);
            rename_stmt(body, map);
            if let Some(l) = label {
                l.bind.iter_mut().for_each(|(_, to)| r(to));
            }
        }
        StmtKind::Summarized { bind, body, .. } => {
            bind.iter_mut().for_each(|(_, to)| r(to));
            rename_stmt(body, map);
        }
        StmtKind::InitZero(q) | StmtKind::InitPlus(q) => r(q),
        StmtKind::Call { args, .. } => args.iter_mut().for_each(r),
    }
}

/// Assigns `prefix.i` labels (pre-order) to unlabelled loops, not descending
/// into macro calls.
fn label_loops(s: &mut Stmt, prefix: &str, next: &mut usize, bind: &[(String, String)]) {
    if let StmtKind::While { label, .. } = &mut s.kind {
        if label.is_none() {
            *label = Some(LoopLabel {
                name: format!("{prefix}.{next}"),
                bind: bind.to_vec(),
            });
        }
        *next += 1;
    }
    match &mut s.kind {
        StmtKind::Seq(a, b) => {
            label_loops(a, prefix, next, bind);
            label_loops(b, prefix, next, bind);
        }
        StmtKind::If { then, els, .. } => {
            label_loops(then, prefix, next, bind);
            label_loops(els, prefix, next, bind);
        }
        StmtKind::While { body, .. } | StmtKind::Summarized { body, .. } => {
            label_loops(body, prefix, next, bind)
        }
        _ => {}
    }
}

impl<'a> Expander<'a> {
    fn fresh(&mut self, base: &str, proc: &str, n: usize) -> String {
        let mut name = format!("{base}__{proc}{n}");
        while self.kinds.contains_key(&name) {
            name.push('_');
        }
        name
    }

    fn expand(&mut self, s: Stmt, stack: &mut Vec<String>) -> Result<Stmt> {
        let span = s.span;
        let kind = match s.kind {
            StmtKind::Seq(a, b) => StmtKind::Seq(
                Box::new(self.expand(*a, stack)?),
                Box::new(self.expand(*b, stack)?),
            ),
            StmtKind::If { cond, then, els } => StmtKind::If {
                cond,
                then: Box::new(self.expand(*then, stack)?),
                els: Box::new(self.expand(*els, stack)?),
            },
            StmtKind::While { cond, body, label } => StmtKind::While {
                cond,
                body: Box::new(self.expand(*body, stack)?),
                label,
            },
            StmtKind::Summarized { name, mut bind, body } => {
                if bind.is_empty() {
                    if let StmtKind::Call { name: callee, args } = &body.kind {
                        if let Some(p) = self.prog.proc(callee) {
                            bind = p
                                .params
                                .iter()
                                .zip(args)
                                .map(|(pa, a)| (pa.name.clone(), a.clone()))
                                .collect();
                        }
                    }
                }
                StmtKind::Summarized {
                    name,
                    bind,
                    body: Box::new(self.expand(*body, stack)?),
                }
            }
            StmtKind::InitZero(q) => {
                self.uses_reset = true;
                let meas = Stmt::new(
                    StmtKind::Measure {
                        var: RESET_VAR.into(),
                        reg: q.clone(),
                    },
                    span,
                );
                let flip = Stmt::new(
                    StmtKind::Apply {
                        regs: vec![q],
                        gate: Gate::X,
                    },
                    span,
                );
                let cond = Stmt::new(
                    StmtKind::If {
                        cond: Expr::var(RESET_VAR),
                        then: Box::new(flip),
                        els: Box::new(Stmt::new(StmtKind::Skip, span)),
                    },
                    span,
                );
                return Ok(Stmt::seq(meas, cond));
            }
            StmtKind::InitPlus(q) => {
                let zero = self.expand(Stmt::new(StmtKind::InitZero(q.clone()), span), stack)?;
                let h = Stmt::new(
                    StmtKind::Apply {
                        regs: vec![q],
                        gate: Gate::H,
                    },
                    span,
                );
                return Ok(Stmt::seq(zero, h));
            }
            StmtKind::Call { name, args } => return self.inline(&name, &args, span, stack),
            other => other,
        };
        Ok(Stmt::new(kind, span))
    }

    fn inline(&mut self, name: &str, args: &[String], span: Span, stack: &mut Vec<String>) -> Result<Stmt> {
        let proc = self
            .prog
            .proc(name)
            .ok_or_else(|| Error::Macro(format!("call to undeclared proc `{name}` at {span}")))?;
        if stack.iter().any(|p| p == name) {
            return Err(Error::Macro(format!(
                "recursive macro: {} -> {name}",
                stack.join(" -> ")
            )));
        }
        if proc.params.len() != args.len() {
            return Err(Error::Macro(format!(
                "proc `{name}` expects {} arguments, got {} at {span}",
                proc.params.len(),
                args.len()
            )));
        }
        let mut map = Subst::new();
        for (pa, a) in proc.params.iter().zip(args) {
            let kind = self.kinds.get(a).ok_or_else(|| Error::UnknownIdent {
                name: a.clone(),
                span,
            })?;
            let ok = matches!(
                (pa.kind, kind),
                (ParamKind::Qreg, VarKind::Qreg(_))
                    | (ParamKind::Bool, VarKind::Bool)
                    | (ParamKind::Int, VarKind::Int)
            );
            if !ok {
                return Err(Error::Type {
                    span,
                    msg: format!("argument `{a}` does not match parameter `{}` of `{name}`", pa.name),
                });
            }
            map.insert(pa.name.clone(), a.clone());
        }
        let n = {
            let c = self.counters.entry(name.to_string()).or_insert(0);
            *c += 1;
            *c
        };
        for l in &proc.locals {
            let fresh = self.fresh(&l.name, name, n);
            self.kinds.insert(fresh.clone(), l.kind);
            self.new_decls.push(Decl {
                name: fresh.clone(),
                kind: l.kind,
                span: l.span,
            });
            map.insert(l.name.clone(), fresh);
        }
        let mut body = proc.body.clone();
        let bind: Vec<(String, String)> = map.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
        label_loops(&mut body, name, &mut 0, &bind);
        // Loop labels carry proc-local names; the renaming below maps their
        // targets, so reset them to the identity first.
        fn identity_targets(s: &mut Stmt) {
            if let StmtKind::While { label: Some(l), .. } = &mut s.kind {
                for (from, to) in &mut l.bind {
                    *to = from.clone();
                }
            }
            for c in match &mut s.kind {
                StmtKind::Seq(a, b) => vec![a.as_mut(), b.as_mut()],
                StmtKind::If { then, els, .. } => vec![then.as_mut(), els.as_mut()],
                StmtKind::While { body, .. } | StmtKind::Summarized { body, .. } => vec![body.as_mut()],
                _ => vec![],
            } {
                identity_targets(c);
            }
        }
        identity_targets(&mut body);
        rename_stmt(&mut body, &map);
        stack.push(name.to_string());
        let out = self.expand(body, stack)?;
        stack.pop();
        Ok(out)
    }
}

/// Inlines all macro calls, removes `|0>`/`|+>` sugar and labels loops.
/// The result has no procs and is a fixed point of this function.
pub fn expand_macros(p: &Program) -> Result<Program> {
    let mut kinds = HashMap::new();
    let mut seen = HashSet::new();
    for d in &p.decls {
        if !seen.insert(d.name.clone()) {
            return Err(Error::Duplicate {
                name: d.name.clone(),
                span: d.span,
            });
        }
        kinds.insert(d.name.clone(), d.kind);
    }
    let mut proc_names = HashSet::new();
    for pr in &p.procs {
        if !proc_names.insert(pr.name.as_str()) {
            return Err(Error::Macro(format!("proc `{}` defined twice", pr.name)));
        }
        let mut local = HashSet::new();
        for n in pr.params.iter().map(|x| &x.name).chain(pr.locals.iter().map(|l| &l.name)) {
            if !local.insert(n) {
                return Err(Error::Macro(format!("duplicate name `{n}` in proc `{}`", pr.name)));
            }
        }
    }
    let mut ex = Expander {
        prog: p,
        kinds,
        new_decls: Vec::new(),
        counters: HashMap::new(),
        main_loops: 0,
        uses_reset: p.decl(RESET_VAR).is_some(),
    };
    let mut body = p.body.clone();
    let mut next = ex.main_loops;
    label_loops(&mut body, "main", &mut next, &[]);
    ex.main_loops = next;
    let body = ex.expand(body, &mut Vec::new())?;
    let mut decls = p.decls.clone();
    decls.extend(ex.new_decls);
    if ex.uses_reset && p.decl(RESET_VAR).is_none() {
        decls.push(Decl {
            name: RESET_VAR.into(),
            kind: VarKind::Bool,
            span: Span::default(),
        });
    }
    Ok(Program {
        decls,
        procs: Vec::new(),
        body,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_program;
    use crate::lang::pretty::stmt_to_string;

    #[test]
    fn plus_desugars_to_zero_then_h() {
        let p = parse_program("qreg q[2]; q = |+>").unwrap();
        let e = expand_macros(&p).unwrap();
        let parts: Vec<_> = e.body.flatten_seq().into_iter().map(|s| s.kind.clone()).collect();
        assert_eq!(parts.len(), 3);
        assert_eq!(
            parts[0],
            StmtKind::Measure {
                var: RESET_VAR.into(),
                reg: "q".into()
            }
        );
        assert!(matches!(parts[1], StmtKind::If { .. }));
        assert_eq!(
            parts[2],
            StmtKind::Apply {
                regs: vec!["q".into()],
                gate: Gate::H
            }
        );
        assert!(e.decl(RESET_VAR).is_some());
    }

    #[test]
    fn macro_free_program_is_unchanged() {
        let p = parse_program("bool x; qreg q[2]; q *= H; x = meas(q)").unwrap();
        let e = expand_macros(&p).unwrap();
        assert_eq!(e.body, p.body);
        assert_eq!(e.decls, p.decls);
    }

    #[test]
    fn call_sites_get_fresh_locals() {
        let src = "qreg a[2]; qreg b[2]; qreg c[2]; bool x;\n\
            proc f(qreg q, qreg r, bool y) { qreg t[2]; t = |+>; q, t *= CZ; y = meas(t) }\n\
            call f(a, b, x); call f(b, c, x)";
        let e = expand_macros(&parse_program(src).unwrap()).unwrap();
        let names: Vec<_> = e.decls.iter().map(|d| d.name.clone()).collect();
        assert!(names.contains(&"t__f1".to_string()));
        assert!(names.contains(&"t__f2".to_string()));
        let text = stmt_to_string(&e.body);
        assert!(text.contains("a, t__f1 *= CZ"));
        assert!(text.contains("b, t__f2 *= CZ"));
        let twice = expand_macros(&e).unwrap();
        assert_eq!(twice, e);
    }

    #[test]
    fn recursion_and_arity_are_rejected() {
        let p = parse_program("bool x; proc f(bool y) { call g(y) } proc g(bool z) { call f(z) } call f(x)")
            .unwrap();
        assert!(matches!(expand_macros(&p), Err(Error::Macro(m)) if m.contains("recursive")));
        let p = parse_program("bool x; proc f(bool y) { skip } call f(x, x)").unwrap();
        assert!(matches!(expand_macros(&p), Err(Error::Macro(_))));
        let p = parse_program("bool x; call nope(x)").unwrap();
        assert!(matches!(expand_macros(&p), Err(Error::Macro(_))));
    }

    #[test]
    fn loop_labels_follow_definition_site() {
        let src = "bool x; bool z;\n\
            proc f(bool y) { while (y) { y = false } }\n\
            while (x) { call f(z) }; call f(x)";
        let e = expand_macros(&parse_program(src).unwrap()).unwrap();
        let mut labels = Vec::new();
        e.body.walk(&mut |s| {
            if let StmtKind::While { label: Some(l), .. } = &s.kind {
                labels.push((l.name.clone(), l.bind.clone()));
            }
        });
        assert_eq!(labels[0].0, "main.0");
        assert_eq!(labels[1], ("f.0".into(), vec![("y".into(), "z".into())]));
        assert_eq!(labels[2], ("f.0".into(), vec![("y".into(), "x".into())]));
    }

    #[test]
    fn summary_on_call_binds_params() {
        let src = "bool x; qreg a[2];\n\
            proc f(qreg q, bool y) { y = meas(q) }\n\
            proc g(qreg q, bool w) { @summary(f) { call f(q, w) } }\n\
            call g(a, x)";
        let e = expand_macros(&parse_program(src).unwrap()).unwrap();
        let StmtKind::Summarized { name, bind, .. } = &e.body.kind else {
            panic!("{:?}", e.body.kind)
        };
        assert_eq!(name, "f");
        assert_eq!(bind, &vec![("q".to_string(), "a".to_string()), ("y".into(), "x".into())]);
    }
}
