//! S-expression reader and printer for expectations.

use std::fmt::Write;

use super::Expectation;
use crate::cost::ExtReal;
use crate::error::{Error, Result};
use crate::lang::ast::{BinOp, Expr, Span};
use crate::lang::matrix::{format_complex, parse_matrix, parse_real};
use crate::lang::parse_expr;
use crate::lang::pretty::expr_to_string;

/// Generic s-expression.
#[derive(Debug, Clone, PartialEq)]
pub enum SExp {
    Atom(String, Span),
    Str(String, Span),
    Matrix(String, Span),
    List(Vec<SExp>, Span),
}

impl SExp {
    pub fn span(&self) -> Span {
        match self {
            SExp::Atom(_, s) | SExp::Str(_, s) | SExp::Matrix(_, s) | SExp::List(_, s) => *s,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            SExp::Atom(a, _) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[SExp]> {
        match self {
            SExp::List(v, _) => Some(v),
            _ => None,
        }
    }

    /// Head symbol of a list form.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|v| v.first()).and_then(|h| h.atom())
    }

    /// Reads every top-level form of `text`. Comments run from `;` or `//`
    /// to the end of the line.
    pub fn parse_all(text: &str) -> Result<Vec<SExp>> {
        let mut r = Reader {
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
        };
        let mut out = Vec::new();
        loop {
            r.skip_ws();
            if r.pos >= r.chars.len() {
                return Ok(out);
            }
            out.push(r.read()?);
        }
    }
}

struct Reader {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
}

impl Reader {
    fn span(&self) -> Span {
        Span {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            let comment = c == ';' || (c == '/' && self.chars.get(self.pos + 1) == Some(&'/'));
            if comment {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                return;
            }
        }
    }

    fn read(&mut self) -> Result<SExp> {
        self.skip_ws();
        let span = self.span();
        match self.peek() {
            None => Err(Error::syntax(span, "unexpected end of input")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return Err(Error::syntax(span, "unclosed `(`")),
                        Some(')') => {
                            self.bump();
                            return Ok(SExp::List(items, span));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => Err(Error::syntax(span, "unexpected `)`")),
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(Error::syntax(span, "unterminated string")),
                        Some('"') => return Ok(SExp::Str(s, span)),
                        Some(c) => s.push(c),
                    }
                }
            }
            Some('[') => {
                let mut depth = 0usize;
                let mut s = String::new();
                loop {
                    let c = self.bump().ok_or_else(|| Error::syntax(span, "unterminated matrix literal"))?;
                    s.push(c);
                    match c {
                        '[' => depth += 1,
                        ']' => {
                            depth -= 1;
                            if depth == 0 {
                                return Ok(SExp::Matrix(s, span));
                            }
                        }
                        _ => {}
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"' | '[' | ';') {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(SExp::Atom(s, span))
            }
        }
    }
}

/// Parses one expectation.
pub fn parse_expectation(text: &str) -> Result<Expectation> {
    let forms = SExp::parse_all(text)?;
    match forms.as_slice() {
        [one] => Expectation::from_sexp(one),
        [] => Err(Error::syntax(Span::default(), "empty expectation")),
        more => Err(Error::syntax(more[1].span(), "trailing input after expectation")),
    }
}

fn number(s: &SExp) -> Result<f64> {
    s.atom()
        .and_then(parse_real)
        .ok_or_else(|| Error::syntax(s.span(), "expected a number"))
}

fn arity(span: Span, head: &str, want: usize, got: usize) -> Result<()> {
    if want != got {
        return Err(Error::Arity {
            span,
            msg: format!("`{head}` takes {want} argument(s), got {got}"),
        });
    }
    Ok(())
}

/// Classical sub-expression: identifier, integer, `true`/`false`, a quoted
/// program-syntax expression, or a prefix form.
fn classical(s: &SExp) -> Result<Expr> {
    match s {
        SExp::Atom(a, span) => match a.as_str() {
            "true" => Ok(Expr::Bool(true)),
            "false" => Ok(Expr::Bool(false)),
            _ => {
                if let Ok(i) = a.parse::<i64>() {
                    Ok(Expr::Int(i))
                } else if a.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_') {
                    Ok(Expr::Var(a.clone()))
                } else {
                    Err(Error::syntax(*span, format!("bad classical atom `{a}`")))
                }
            }
        },
        SExp::Str(t, _) => parse_expr(t),
        SExp::Matrix(_, span) => Err(Error::syntax(*span, "matrix in classical expression")),
        SExp::List(items, span) => {
            let head = s
                .head()
                .ok_or_else(|| Error::syntax(*span, "expected an operator"))?
                .to_string();
            let args = items[1..].iter().map(classical).collect::<Result<Vec<_>>>()?;
            let fold = |op: BinOp, args: Vec<Expr>| -> Result<Expr> {
                let mut it = args.into_iter();
                let first = it.next().ok_or_else(|| Error::Arity {
                    span: *span,
                    msg: format!("`{head}` needs arguments"),
                })?;
                Ok(it.fold(first, |a, b| Expr::bin(op, a, b)))
            };
            let two = |args: Vec<Expr>| -> Result<(Expr, Expr)> {
                arity(*span, &head, 2, args.len())?;
                let mut it = args.into_iter();
                Ok((it.next().unwrap(), it.next().unwrap()))
            };
            Ok(match head.as_str() {
                "not" | "!" => {
                    arity(*span, &head, 1, args.len())?;
                    Expr::not(args.into_iter().next().unwrap())
                }
                "and" | "&&" => fold(BinOp::And, args)?,
                "or" | "||" => fold(BinOp::Or, args)?,
                "+" | "add" => fold(BinOp::Add, args)?,
                "*" | "mul" => fold(BinOp::Mul, args)?,
                "-" | "sub" => fold(BinOp::Sub, args)?,
                "eq" | "==" => {
                    let (a, b) = two(args)?;
                    Expr::bin(BinOp::Eq, a, b)
                }
                "le" | "<=" => {
                    let (a, b) = two(args)?;
                    Expr::bin(BinOp::Le, a, b)
                }
                "lt" | "<" => {
                    let (a, b) = two(args)?;
                    Expr::bin(BinOp::Lt, a, b)
                }
                "ge" | ">=" => {
                    let (a, b) = two(args)?;
                    Expr::bin(BinOp::Le, b, a)
                }
                "gt" | ">" => {
                    let (a, b) = two(args)?;
                    Expr::bin(BinOp::Lt, b, a)
                }
                _ => return Err(Error::syntax(*span, format!("unknown operator `{head}`"))),
            })
        }
    }
}

impl Expectation {
    pub fn from_sexp(s: &SExp) -> Result<Expectation> {
        let (items, span) = match s {
            SExp::Atom(..) => return Ok(Expectation::Const(nonneg(number(s)?, s.span())?)),
            SExp::List(items, span) => (items, *span),
            _ => return Err(Error::syntax(s.span(), "expected an expectation")),
        };
        let head = s.head().ok_or_else(|| Error::syntax(span, "expected a form name"))?;
        let args = &items[1..];
        let many = |args: &[SExp]| -> Result<Vec<Expectation>> {
            if args.is_empty() {
                return Err(Error::Arity {
                    span,
                    msg: format!("`{head}` needs at least one argument"),
                });
            }
            args.iter().map(Expectation::from_sexp).collect()
        };
        Ok(match head {
            "const" => {
                arity(span, head, 1, args.len())?;
                Expectation::Const(nonneg(number(&args[0])?, span)?)
            }
            "ind" => {
                arity(span, head, 1, args.len())?;
                Expectation::Ind(classical(&args[0])?)
            }
            "arith" => {
                arity(span, head, 1, args.len())?;
                Expectation::Arith(classical(&args[0])?)
            }
            "quadform" => {
                arity(span, head, 2, args.len())?;
                let regs = args[0]
                    .list()
                    .ok_or_else(|| Error::syntax(args[0].span(), "expected a register list"))?
                    .iter()
                    .map(|r| {
                        r.atom()
                            .map(str::to_string)
                            .ok_or_else(|| Error::syntax(r.span(), "expected a register name"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let matrix = match &args[1] {
                    SExp::Matrix(m, sp) => parse_matrix(m).map_err(|e| Error::syntax(*sp, e))?,
                    other => return Err(Error::syntax(other.span(), "expected a matrix literal")),
                };
                Expectation::QuadForm { regs, matrix }
            }
            "add" | "+" => Expectation::Add(many(args)?),
            "mul" | "*" => Expectation::Mul(many(args)?),
            "max" => Expectation::Max(many(args)?),
            "min" => Expectation::Min(many(args)?),
            "scale" => {
                arity(span, head, 2, args.len())?;
                let r = number(&args[0])?;
                if !(r >= 0.0) || r.is_infinite() {
                    return Err(Error::Expectation(format!("scale factor {r} must be finite and non-negative")));
                }
                Expectation::Scale(r, Box::new(Expectation::from_sexp(&args[1])?))
            }
            "kappa" => Expectation::Kappa(
                args.iter()
                    .map(|a| {
                        let pair = a.list().filter(|p| p.len() == 2);
                        let (v, c) = pair
                            .and_then(|p| Some((p[0].atom()?, p[1].atom()?)))
                            .ok_or_else(|| Error::syntax(a.span(), "expected `(var value)`"))?;
                        let c = match c {
                            "true" => 1,
                            "false" => 0,
                            _ => c.parse().map_err(|_| Error::syntax(a.span(), format!("bad value `{c}`")))?,
                        };
                        Ok((v.to_string(), c))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => return Err(Error::syntax(span, format!("unknown expectation form `{head}`"))),
        })
    }
}

fn nonneg(v: f64, span: Span) -> Result<ExtReal> {
    ExtReal::try_new(v).ok_or_else(|| Error::syntax(span, format!("constant {v} is negative")))
}

fn real(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:?}")
    }
}

/// Canonical text form; [`parse_expectation`] reads it back.
pub fn to_sexpr(e: &Expectation) -> String {
    let mut out = String::new();
    write_sexpr(e, &mut out);
    out
}

fn write_sexpr(e: &Expectation, out: &mut String) {
    let list = |name: &str, v: &[Expectation], out: &mut String| {
        out.push('(');
        out.push_str(name);
        for c in v {
            out.push(' ');
            write_sexpr(c, out);
        }
        out.push(')');
    };
    match e {
        Expectation::Const(c) => out.push_str(&real(c.get())),
        Expectation::Ind(b) => {
            let _ = write!(out, "(ind \"{}\")", expr_to_string(b));
        }
        Expectation::Arith(a) => {
            let _ = write!(out, "(arith \"{}\")", expr_to_string(a));
        }
        Expectation::QuadForm { regs, matrix } => {
            let rows: Vec<String> = matrix
                .iter()
                .map(|r| format!("[{}]", r.iter().map(|z| format_complex(*z)).collect::<Vec<_>>().join(",")))
                .collect();
            let _ = write!(out, "(quadform ({}) [{}])", regs.join(" "), rows.join(","));
        }
        Expectation::Add(v) => list("add", v, out),
        Expectation::Mul(v) => list("mul", v, out),
        Expectation::Max(v) => list("max", v, out),
        Expectation::Min(v) => list("min", v, out),
        Expectation::Scale(r, e) => {
            let _ = write!(out, "(scale {} ", real(*r));
            write_sexpr(e, out);
            out.push(')');
        }
        Expectation::Kappa(up) => {
            out.push_str("(kappa");
            for (v, c) in up {
                let _ = write!(out, " ({v} {c})");
            }
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_forms_and_comments() {
        let e = parse_expectation(
            "; coin toss\n(mul (ind x) // guard\n (add (const 1) (quadform (q) [[1, -1], [-1, 1]])))",
        )
        .unwrap();
        match &e {
            Expectation::Mul(v) => assert_eq!(v.len(), 2),
            _ => panic!("{e:?}"),
        }
        assert_eq!(parse_expectation(&to_sexpr(&e)).unwrap(), e);
    }

    #[test]
    fn fractions_infinity_and_strings() {
        assert_eq!(parse_expectation("8/3").unwrap(), Expectation::constant(8.0 / 3.0));
        assert_eq!(parse_expectation("(const inf)").unwrap(), Expectation::Const(ExtReal::INF));
        let a = parse_expectation("(ind \"0 <= t && t < 8\")").unwrap();
        let b = parse_expectation("(ind (and (le 0 t) (lt t 8)))").unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_expectation(&to_sexpr(&a)).unwrap(), a);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_expectation("(mul (ind x)").is_err());
        assert!(parse_expectation("(const -1)").is_err());
        assert!(parse_expectation("(frob 1)").is_err());
        assert!(parse_expectation("(scale 1)").is_err());
        assert!(parse_expectation("1 2").is_err());
    }

    #[test]
    fn kappa_updates() {
        let e = parse_expectation("(kappa (x true) (t 3))").unwrap();
        assert_eq!(e, Expectation::Kappa(vec![("x".into(), 1), ("t".into(), 3)]));
        assert_eq!(parse_expectation(&to_sexpr(&e)).unwrap(), e);
    }
}
