//! Pretty printer producing text that parses back to the same AST.

use std::fmt::Write;

use super::ast::*;
use super::matrix::format_matrix;

pub fn expr_to_string(e: &Expr) -> String {
    match e {
        Expr::Var(v) => v.clone(),
        Expr::Int(i) => i.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Not(inner) => format!("!{}", atomic(inner)),
        Expr::Bin(op, a, b) => format!("({} {} {})", expr_to_string(a), op.symbol(), expr_to_string(b)),
    }
}

fn atomic(e: &Expr) -> String {
    match e {
        Expr::Int(i) if *i < 0 => format!("({i})"),
        _ => expr_to_string(e),
    }
}

fn gate_to_string(g: &Gate) -> String {
    match g {
        Gate::Matrix(m) => format_matrix(&m.rows),
        other => other.name().to_string(),
    }
}

fn decl_to_string(d: &Decl) -> String {
    match d.kind {
        VarKind::Bool => format!("bool {};", d.name),
        VarKind::Int => format!("int {};", d.name),
        VarKind::Qreg(n) => format!("qreg {}[{}];", d.name, n),
    }
}

fn write_stmt(out: &mut String, s: &Stmt, indent: usize) {
    let pad = "  ".repeat(indent);
    match &s.kind {
        StmtKind::Seq(..) => {
            let parts = s.flatten_seq();
            for (i, p) in parts.iter().enumerate() {
                write_stmt(out, p, indent);
                if i + 1 < parts.len() {
                    out.push(';');
                }
                out.push('\n');
            }
            // Drop the newline after the last element; the caller adds its own.
            out.pop();
            return;
        }
        StmtKind::Skip => write!(out, "{pad}skip"),
        StmtKind::Assign { var, expr } => write!(out, "{pad}{var} = {}", expr_to_string(expr)),
        StmtKind::Apply { regs, gate } => {
            write!(out, "{pad}{} *= {}", regs.join(", "), gate_to_string(gate))
        }
        StmtKind::Measure { var, reg } => write!(out, "{pad}{var} = meas({reg})"),
        StmtKind::MeasureZero { var, reg } => write!(out, "{pad}{var} = measzero({reg})"),
        StmtKind::Consume(e) => write!(out, "{pad}consume({})", expr_to_string(e)),
        StmtKind::If { cond, then, els } => {
            writeln!(out, "{pad}if ({}) {{", expr_to_string(cond)).ok();
            write_stmt(out, then, indent + 1);
            writeln!(out, "\n{pad}}} else {{").ok();
            write_stmt(out, els, indent + 1);
            write!(out, "\n{pad}}}")
        }
        StmtKind::While { cond, body, .. } => {
            writeln!(out, "{pad}while ({}) {{", expr_to_string(cond)).ok();
            write_stmt(out, body, indent + 1);
            write!(out, "\n{pad}}}")
        }
        StmtKind::Summarized { name, bind, body } => {
            if bind.is_empty() {
                writeln!(out, "{pad}@summary({name}) {{").ok();
            } else {
                let b: Vec<String> = bind.iter().map(|(a, b)| format!("{a} = {b}")).collect();
                writeln!(out, "{pad}@summary({name}; {}) {{", b.join(", ")).ok();
            }
            write_stmt(out, body, indent + 1);
            write!(out, "\n{pad}}}")
        }
        StmtKind::InitZero(q) => write!(out, "{pad}{q} = |0>"),
        StmtKind::InitPlus(q) => write!(out, "{pad}{q} = |+>"),
        StmtKind::Call { name, args } => write!(out, "{pad}call {name}({})", args.join(", ")),
    }
    .ok();
}

pub fn stmt_to_string(s: &Stmt) -> String {
    let mut out = String::new();
    write_stmt(&mut out, s, 0);
    out
}

pub fn program_to_string(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.decls {
        out.push_str(&decl_to_string(d));
        out.push('\n');
    }
    for pr in &p.procs {
        let params: Vec<String> = pr
            .params
            .iter()
            .map(|pa| {
                let k = match pa.kind {
                    ParamKind::Bool => "bool",
                    ParamKind::Int => "int",
                    ParamKind::Qreg => "qreg",
                };
                format!("{k} {}", pa.name)
            })
            .collect();
        writeln!(out, "proc {}({}) {{", pr.name, params.join(", ")).ok();
        for l in &pr.locals {
            writeln!(out, "  {}", decl_to_string(l)).ok();
        }
        write_stmt(&mut out, &pr.body, 1);
        out.push_str("\n}\n");
    }
    write_stmt(&mut out, &p.body, 0);
    out.push('\n');
    out
}

/// Copy of the program with all source positions reset, for structural comparison.
pub fn strip_spans(p: &Program) -> Program {
    fn go(s: &Stmt) -> Stmt {
        let kind = match &s.kind {
            StmtKind::Seq(a, b) => StmtKind::Seq(Box::new(go(a)), Box::new(go(b))),
            StmtKind::If { cond, then, els } => StmtKind::If {
                cond: cond.clone(),
                then: Box::new(go(then)),
                els: Box::new(go(els)),
            },
            StmtKind::While { cond, body, label } => StmtKind::While {
                cond: cond.clone(),
                body: Box::new(go(body)),
                label: label.clone(),
            },
            StmtKind::Summarized { name, bind, body } => StmtKind::Summarized {
                name: name.clone(),
                bind: bind.clone(),
                body: Box::new(go(body)),
            },
            other => other.clone(),
        };
        Stmt::new(kind, Span::default())
    }
    let strip_decl = |d: &Decl| Decl {
        span: Span::default(),
        ..d.clone()
    };
    Program {
        decls: p.decls.iter().map(strip_decl).collect(),
        procs: p
            .procs
            .iter()
            .map(|pr| Proc {
                name: pr.name.clone(),
                params: pr.params.clone(),
                locals: pr.locals.iter().map(strip_decl).collect(),
                body: go(&pr.body),
                span: Span::default(),
            })
            .collect(),
        body: go(&p.body),
    }
}
