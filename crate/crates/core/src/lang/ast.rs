//! Abstract syntax of the quantum while-language.

use std::fmt;

use num_complex::Complex64;

/// Source position (1-based line and column).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Bool,
    Int,
    /// Quantum register of the given dimension (a qubit is `Qreg(2)`).
    Qreg(usize),
}

impl VarKind {
    pub fn is_classical(self) -> bool {
        !matches!(self, VarKind::Qreg(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decl {
    pub name: String,
    pub kind: VarKind,
    pub span: Span,
}

/// Kind of a procedure parameter. Register parameters take their dimension
/// from the argument at each call site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Bool,
    Int,
    Qreg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
}

/// A statement macro, inlined at every call site.
#[derive(Debug, Clone, PartialEq)]
pub struct Proc {
    pub name: String,
    pub params: Vec<Param>,
    pub locals: Vec<Decl>,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub decls: Vec<Decl>,
    pub procs: Vec<Proc>,
    pub body: Stmt,
}

impl Program {
    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn proc(&self, name: &str) -> Option<&Proc> {
        self.procs.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Le,
    Lt,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Le => "<=",
            BinOp::Lt => "<",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Operand type and result type.
    pub fn signature(self) -> (ExprType, ExprType) {
        use ExprType::*;
        match self {
            BinOp::Add | BinOp::Sub | BinOp::Mul => (Int, Int),
            BinOp::Eq | BinOp::Le | BinOp::Lt => (Int, Bool),
            BinOp::And | BinOp::Or => (Bool, Bool),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExprType {
    Bool,
    Int,
}

impl fmt::Display for ExprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExprType::Bool => "bool",
            ExprType::Int => "int",
        })
    }
}

/// Classical expression. Arithmetic and Boolean forms share one tree and
/// are separated by `validate`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    Int(i64),
    Bool(bool),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn not(e: Expr) -> Self {
        Expr::Not(Box::new(e))
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Var(v) => f(v),
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Not(e) => e.for_each_var(f),
            Expr::Bin(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }

    pub fn rename(&mut self, map: &dyn Fn(&str) -> Option<String>) {
        match self {
            Expr::Var(v) => {
                if let Some(n) = map(v) {
                    *v = n;
                }
            }
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Not(e) => e.rename(map),
            Expr::Bin(_, a, b) => {
                a.rename(map);
                b.rename(map);
            }
        }
    }
}

/// Dense complex matrix literal, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixLit {
    pub rows: Vec<Vec<Complex64>>,
}

impl MatrixLit {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H,
    X,
    T,
    Cnot,
    Cz,
    /// Conditional shift on a cycle: first register is the coin (dim 2),
    /// second the position register of any dimension.
    Shift,
    Matrix(MatrixLit),
}

impl Gate {
    /// Number of registers the gate acts on, when fixed by the gate.
    pub fn arity(&self) -> Option<usize> {
        match self {
            Gate::H | Gate::X | Gate::T => Some(1),
            Gate::Cnot | Gate::Cz | Gate::Shift => Some(2),
            Gate::Matrix(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::X => "X",
            Gate::T => "T",
            Gate::Cnot => "CNOT",
            Gate::Cz => "CZ",
            Gate::Shift => "SHIFT",
            Gate::Matrix(_) => "matrix",
        }
    }
}

/// Origin of a loop: the body it was written in (`main` or a proc name),
/// its pre-order index there, and the renaming applied by inlining.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LoopLabel {
    pub name: String,
    pub bind: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Skip,
    Assign {
        var: String,
        expr: Expr,
    },
    Apply {
        regs: Vec<String>,
        gate: Gate,
    },
    /// `x = meas(q)` on a two-dimensional register.
    Measure {
        var: String,
        reg: String,
    },
    /// `x = measzero(q)`: outcome 0 iff the register reads 0, otherwise 1.
    MeasureZero {
        var: String,
        reg: String,
    },
    Consume(Expr),
    Seq(Box<Stmt>, Box<Stmt>),
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Box<Stmt>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
        label: Option<LoopLabel>,
    },
    /// Statement annotated with a named summary. `bind` maps the summary's
    /// variable names to program variables.
    Summarized {
        name: String,
        bind: Vec<(String, String)>,
        body: Box<Stmt>,
    },
    /// Sugar `q = |0>`.
    InitZero(String),
    /// Sugar `q = |+>`.
    InitPlus(String),
    /// Macro call `call f(args)`.
    Call {
        name: String,
        args: Vec<String>,
    },
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }

    pub fn skip() -> Self {
        Stmt::new(StmtKind::Skip, Span::default())
    }

    pub fn seq(a: Stmt, b: Stmt) -> Self {
        let span = a.span;
        Stmt::new(StmtKind::Seq(Box::new(a), Box::new(b)), span)
    }

    /// Right-nested sequence of the given statements (`skip` when empty).
    pub fn seq_all(mut stmts: Vec<Stmt>) -> Self {
        let Some(mut acc) = stmts.pop() else {
            return Stmt::skip();
        };
        while let Some(s) = stmts.pop() {
            acc = Stmt::seq(s, acc);
        }
        acc
    }

    /// Flattened view of a (possibly nested) sequence.
    pub fn flatten_seq(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        fn go<'a>(s: &'a Stmt, out: &mut Vec<&'a Stmt>) {
            if let StmtKind::Seq(a, b) = &s.kind {
                go(a, out);
                go(b, out);
            } else {
                out.push(s);
            }
        }
        go(self, &mut out);
        out
    }

    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::Seq(a, b) => vec![a, b],
            StmtKind::If { then, els, .. } => vec![then, els],
            StmtKind::While { body, .. } | StmtKind::Summarized { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn contains_loop(&self) -> bool {
        let mut found = false;
        self.walk(&mut |s| found |= matches!(s.kind, StmtKind::While { .. }));
        found
    }

    pub fn is_macro_free(&self) -> bool {
        let mut ok = true;
        self.walk(&mut |s| {
            ok &= !matches!(
                s.kind,
                StmtKind::Call { .. } | StmtKind::InitZero(_) | StmtKind::InitPlus(_)
            )
        });
        ok
    }

    /// Classical variables written by the statement.
    /// True if the statement contains a measurement, including the one in
    /// the reset sugar.
    pub fn measures(&self) -> bool {
        let mut found = false;
        self.walk(&mut |s| {
            found |= matches!(
                s.kind,
                StmtKind::Measure { .. } | StmtKind::MeasureZero { .. } | StmtKind::InitZero(_) | StmtKind::InitPlus(_)
            )
        });
        found
    }

    pub fn assigned_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |s| match &s.kind {
            StmtKind::Assign { var, .. }
            | StmtKind::Measure { var, .. }
            | StmtKind::MeasureZero { var, .. } => out.push(var.clone()),
            _ => {}
        });
        out.sort();
        out.dedup();
        out
    }

    /// Registers measured or acted on by a unitary.
    pub fn touched_regs(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |s| match &s.kind {
            StmtKind::Measure { reg, .. }
            | StmtKind::MeasureZero { reg, .. }
            | StmtKind::InitZero(reg)
            | StmtKind::InitPlus(reg) => out.push(reg.clone()),
            StmtKind::Apply { regs, .. } => out.extend(regs.iter().cloned()),
            _ => {}
        });
        out.sort();
        out.dedup();
        out
    }

    /// Every variable or register name mentioned anywhere in the statement.
    pub fn mentioned_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk(&mut |s| match &s.kind {
            StmtKind::Assign { var, expr } => {
                out.push(var.clone());
                expr.for_each_var(&mut |v| out.push(v.to_string()));
            }
            StmtKind::Apply { regs, .. } => out.extend(regs.iter().cloned()),
            StmtKind::Measure { var, reg } | StmtKind::MeasureZero { var, reg } => {
                out.push(var.clone());
                out.push(reg.clone());
            }
            StmtKind::Consume(e) => e.for_each_var(&mut |v| out.push(v.to_string())),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => {
                cond.for_each_var(&mut |v| out.push(v.to_string()))
            }
            StmtKind::InitZero(r) | StmtKind::InitPlus(r) => out.push(r.clone()),
            StmtKind::Call { args, .. } => out.extend(args.iter().cloned()),
            _ => {}
        });
        out.sort();
        out.dedup();
        out
    }
}

/// Names beginning with `__` are reserved for generated variables.
pub fn is_internal_name(name: &str) -> bool {
    name.starts_with("__")
}

/// Names produced by macro inlining carry a `__` separator.
pub fn is_generated_name(name: &str) -> bool {
    name.contains("__")
}
