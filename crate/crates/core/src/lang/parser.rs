//! Recursive-descent parser for program files.

use super::ast::*;
use super::matrix::parse_matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Sym(&'static str),
    Ket0,
    KetPlus,
    Matrix(String),
    Summary,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

const SYMBOLS: &[&str] = &[
    "*=", "==", "!=", "<=", ">=", "&&", "||", "=", "<", ">", "!", "+", "-", "*", "(", ")", "{",
    "}", "[", "]", ";", ",",
];

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        if rest.starts_with("|0>") || rest.starts_with("|0⟩") {
            out.push(Token { tok: Tok::Ket0, span });
            advance(&mut i, &mut line, &mut col, 3);
            continue;
        }
        if rest.starts_with("|+>") || rest.starts_with("|+⟩") {
            out.push(Token { tok: Tok::KetPlus, span });
            advance(&mut i, &mut line, &mut col, 3);
            continue;
        }
        if c == '@' {
            let word: String = chars[i + 1..]
                .iter()
                .take_while(|c| c.is_alphanumeric() || **c == '_')
                .collect();
            if word != "summary" {
                return Err(Error::syntax(span, format!("unknown annotation `@{word}`")));
            }
            out.push(Token { tok: Tok::Summary, span });
            advance(&mut i, &mut line, &mut col, 1 + word.len());
            continue;
        }
        if c == '[' && chars.get(i + 1).is_some_and(|n| *n == '[' || n.is_whitespace()) {
            // Matrix literal: read up to the bracket that closes the outer one.
            let mut depth = 0i32;
            let mut j = i;
            while j < chars.len() {
                match chars[j] {
                    '[' => depth += 1,
                    ']' => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
                j += 1;
            }
            if j == chars.len() {
                return Err(Error::syntax(span, "unterminated matrix literal"));
            }
            let lit: String = chars[i..=j].iter().collect();
            out.push(Token { tok: Tok::Matrix(lit), span });
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        if c.is_ascii_digit() {
            let digits: String = chars[i..].iter().take_while(|c| c.is_ascii_digit()).collect();
            let v: u64 = digits
                .parse()
                .map_err(|_| Error::syntax(span, format!("integer literal `{digits}` too large")))?;
            out.push(Token { tok: Tok::Int(v), span });
            advance(&mut i, &mut line, &mut col, digits.len());
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let word: String = chars[i..]
                .iter()
                .take_while(|c| c.is_alphanumeric() || **c == '_' || **c == '\'')
                .collect();
            let n = word.chars().count();
            out.push(Token { tok: Tok::Ident(word), span });
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        let uni = match c {
            '¬' => Some("!"),
            '∧' => Some("&&"),
            '∨' => Some("||"),
            '≤' => Some("<="),
            '≥' => Some(">="),
            '≠' => Some("!="),
            _ => None,
        };
        if let Some(sym) = uni {
            out.push(Token { tok: Tok::Sym(sym), span });
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| {
            let s: Vec<char> = s.chars().collect();
            chars[i..].starts_with(&s)
        });
        match sym {
            Some(s) => {
                out.push(Token { tok: Tok::Sym(s), span });
                advance(&mut i, &mut line, &mut col, s.len());
            }
            None => return Err(Error::syntax(span, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

const KEYWORDS: &[&str] = &[
    "skip", "if", "else", "while", "consume", "meas", "measzero", "call", "true", "false", "bool",
    "int", "qreg", "proc",
];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Ket0 => "`|0>`".into(),
            Tok::KetPlus => "`|+>`".into(),
            Tok::Matrix(_) => "matrix literal".into(),
            Tok::Summary => "`@summary`".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn err<T>(&self, expected: &str) -> Result<T> {
        Err(Error::syntax(
            self.span(),
            format!("expected {expected}, found {}", Self::describe(self.peek())),
        ))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("identifier"),
        }
    }

    fn nat(&mut self) -> Result<u64> {
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.err("natural number"),
        }
    }

    fn var_decl(&mut self) -> Result<Option<Decl>> {
        let span = self.span();
        let kind = if self.is_kw("bool") {
            self.bump();
            VarKind::Bool
        } else if self.is_kw("int") {
            self.bump();
            VarKind::Int
        } else if self.is_kw("qreg") {
            self.bump();
            let name = self.ident()?;
            self.expect_sym("[")?;
            let dim = self.nat()?;
            self.expect_sym("]")?;
            self.expect_sym(";")?;
            if dim < 2 {
                return Err(Error::Type {
                    span,
                    msg: format!("register `{name}` has dimension {dim} < 2"),
                });
            }
            return Ok(Some(Decl {
                name,
                kind: VarKind::Qreg(dim as usize),
                span,
            }));
        } else {
            return Ok(None);
        };
        let name = self.ident()?;
        self.expect_sym(";")?;
        Ok(Some(Decl { name, kind, span }))
    }

    fn program(&mut self) -> Result<Program> {
        let mut decls = Vec::new();
        let mut procs = Vec::new();
        loop {
            if self.is_kw("proc") {
                procs.push(self.proc_def()?);
            } else if let Some(d) = self.var_decl()? {
                decls.push(d);
            } else {
                break;
            }
        }
        let body = self.stmt_seq()?;
        if *self.peek() != Tok::Eof {
            return self.err("`;` or end of input");
        }
        Ok(Program { decls, procs, body })
    }

    fn proc_def(&mut self) -> Result<Proc> {
        let span = self.span();
        self.expect_kw("proc")?;
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                let kind = if self.is_kw("qreg") {
                    ParamKind::Qreg
                } else if self.is_kw("bool") {
                    ParamKind::Bool
                } else if self.is_kw("int") {
                    ParamKind::Int
                } else {
                    return self.err("parameter type (`qreg`, `bool` or `int`)");
                };
                self.bump();
                params.push(Param {
                    name: self.ident()?,
                    kind,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym("{")?;
        let mut locals = Vec::new();
        while let Some(d) = self.var_decl()? {
            locals.push(d);
        }
        let body = self.stmt_seq()?;
        self.expect_sym("}")?;
        Ok(Proc {
            name,
            params,
            locals,
            body,
            span,
        })
    }

    fn block(&mut self) -> Result<Stmt> {
        self.expect_sym("{")?;
        let s = self.stmt_seq()?;
        self.expect_sym("}")?;
        Ok(s)
    }

    fn stmt_seq(&mut self) -> Result<Stmt> {
        let mut stmts = vec![self.stmt()?];
        while self.eat_sym(";") {
            if self.is_sym("}") || *self.peek() == Tok::Eof {
                break;
            }
            stmts.push(self.stmt()?);
        }
        Ok(Stmt::seq_all(stmts))
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Summary => {
                self.bump();
                self.expect_sym("(")?;
                let name = self.ident()?;
                let mut bind = Vec::new();
                if self.eat_sym(";") {
                    loop {
                        let from = self.ident()?;
                        self.expect_sym("=")?;
                        let to = self.ident()?;
                        bind.push((from, to));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym(")")?;
                let body = self.block()?;
                StmtKind::Summarized {
                    name,
                    bind,
                    body: Box::new(body),
                }
            }
            Tok::Ident(kw) if kw == "skip" => {
                self.bump();
                StmtKind::Skip
            }
            Tok::Ident(kw) if kw == "consume" => {
                self.bump();
                self.expect_sym("(")?;
                let e = self.expr()?;
                self.expect_sym(")")?;
                StmtKind::Consume(e)
            }
            Tok::Ident(kw) if kw == "if" => return self.if_stmt(),
            Tok::Ident(kw) if kw == "while" => {
                self.bump();
                self.expect_sym("(")?;
                let cond = self.expr()?;
                self.expect_sym(")")?;
                let body = self.block()?;
                StmtKind::While {
                    cond,
                    body: Box::new(body),
                    label: None,
                }
            }
            Tok::Ident(kw) if kw == "call" => {
                self.bump();
                let name = self.ident()?;
                self.expect_sym("(")?;
                let mut args = Vec::new();
                if !self.is_sym(")") {
                    loop {
                        args.push(self.ident()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym(")")?;
                StmtKind::Call { name, args }
            }
            Tok::Ident(_) => {
                let first = self.ident()?;
                if self.is_sym(",") || self.is_sym("*=") {
                    let mut regs = vec![first];
                    while self.eat_sym(",") {
                        regs.push(self.ident()?);
                    }
                    self.expect_sym("*=")?;
                    let gate = self.gate()?;
                    StmtKind::Apply { regs, gate }
                } else {
                    self.expect_sym("=")?;
                    match self.peek().clone() {
                        Tok::Ket0 => {
                            self.bump();
                            StmtKind::InitZero(first)
                        }
                        Tok::KetPlus => {
                            self.bump();
                            StmtKind::InitPlus(first)
                        }
                        Tok::Ident(kw)
                            if (kw == "meas" || kw == "measzero")
                                && *self.peek_at(1) == Tok::Sym("(") =>
                        {
                            self.bump();
                            self.expect_sym("(")?;
                            let reg = self.ident()?;
                            self.expect_sym(")")?;
                            if kw == "meas" {
                                StmtKind::Measure { var: first, reg }
                            } else {
                                StmtKind::MeasureZero { var: first, reg }
                            }
                        }
                        _ => StmtKind::Assign {
                            var: first,
                            expr: self.expr()?,
                        },
                    }
                }
            }
            _ => return self.err("statement"),
        };
        Ok(Stmt::new(kind, span))
    }

    fn if_stmt(&mut self) -> Result<Stmt> {
        let span = self.span();
        self.expect_kw("if")?;
        self.expect_sym("(")?;
        let cond = self.expr()?;
        self.expect_sym(")")?;
        let then = self.block()?;
        self.expect_kw("else")?;
        let els = if self.is_kw("if") {
            self.if_stmt()?
        } else {
            self.block()?
        };
        Ok(Stmt::new(
            StmtKind::If {
                cond,
                then: Box::new(then),
                els: Box::new(els),
            },
            span,
        ))
    }

    fn gate(&mut self) -> Result<Gate> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Matrix(text) => {
                self.bump();
                let rows = parse_matrix(&text).map_err(|m| Error::syntax(span, m))?;
                Ok(Gate::Matrix(MatrixLit { rows }))
            }
            Tok::Ident(name) => {
                let g = match name.as_str() {
                    "H" => Gate::H,
                    "X" => Gate::X,
                    "T" => Gate::T,
                    "CNOT" => Gate::Cnot,
                    "CZ" => Gate::Cz,
                    "SHIFT" => Gate::Shift,
                    _ => {
                        return Err(Error::syntax(span, format!("unknown unitary `{name}`")));
                    }
                };
                self.bump();
                Ok(g)
            }
            _ => self.err("unitary"),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_sym("||") {
            lhs = Expr::bin(BinOp::Or, lhs, self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_sym("&&") {
            lhs = Expr::bin(BinOp::And, lhs, self.not_expr()?);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.eat_sym("!") {
            return Ok(Expr::not(self.not_expr()?));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Sym(s @ ("==" | "!=" | "<=" | "<" | ">=" | ">")) => *s,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.add_expr()?;
        if matches!(self.peek(), Tok::Sym("==" | "!=" | "<=" | "<" | ">=" | ">")) {
            return Err(Error::syntax(self.span(), "comparisons are non-associative"));
        }
        Ok(match op {
            "==" => Expr::bin(BinOp::Eq, lhs, rhs),
            "!=" => Expr::not(Expr::bin(BinOp::Eq, lhs, rhs)),
            "<=" => Expr::bin(BinOp::Le, lhs, rhs),
            "<" => Expr::bin(BinOp::Lt, lhs, rhs),
            ">=" => Expr::bin(BinOp::Le, rhs, lhs),
            _ => Expr::bin(BinOp::Lt, rhs, lhs),
        })
    }

    fn add_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            if self.eat_sym("+") {
                lhs = Expr::bin(BinOp::Add, lhs, self.mul_expr()?);
            } else if self.eat_sym("-") {
                lhs = Expr::bin(BinOp::Sub, lhs, self.mul_expr()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn mul_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while self.eat_sym("*") {
            lhs = Expr::bin(BinOp::Mul, lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        let span = self.span();
        if self.eat_sym("-") {
            if let Tok::Int(v) = *self.peek() {
                self.bump();
                if v > i64::MAX as u64 + 1 {
                    return Err(Error::syntax(span, "integer literal out of range"));
                }
                return Ok(Expr::Int((v as i128).wrapping_neg() as i64));
            }
            let e = self.unary()?;
            return Ok(Expr::bin(BinOp::Sub, Expr::Int(0), e));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                i64::try_from(v)
                    .map(Expr::Int)
                    .map_err(|_| Error::syntax(span, "integer literal out of range"))
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(_) => Ok(Expr::Var(self.ident()?)),
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => self.err("expression"),
        }
    }
}

/// Parses a complete program file.
pub fn parse_program(text: &str) -> Result<Program> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    p.program()
}

/// Parses a single classical expression (used by fixtures and the CLI).
pub fn parse_expr(text: &str) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.err("end of expression");
    }
    Ok(e)
}
