//! Random programs, expectations and matrices for property and law tests.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::expect::suite::haar_vector;
use crate::expect::Expectation;
use crate::lang::ast::{BinOp, Expr};
use crate::state::Layout;

/// Shape limits for generated programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenOpts {
    /// Nesting depth of compound statements.
    pub max_depth: usize,
    /// Number of quantum registers, at least 1.
    pub max_regs: usize,
    /// Allow `while` loops (counter-bounded or coin-toss).
    pub loops: bool,
}

impl Default for GenOpts {
    fn default() -> Self {
        GenOpts {
            max_depth: 4,
            max_regs: 3,
            loops: true,
        }
    }
}

const BOOLS: [&str; 2] = ["b0", "b1"];
const MAX_COUNTERS: usize = 6;

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    opts: GenOpts,
    regs: Vec<(String, usize)>,
    counters: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn qubits(&self) -> Vec<String> {
        self.regs.iter().filter(|r| r.1 == 2).map(|r| r.0.clone()).collect()
    }

    fn bool_var(&mut self) -> &'static str {
        BOOLS.choose(self.rng).unwrap()
    }

    fn cond(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => self.bool_var().to_string(),
            1 => format!("!{}", self.bool_var()),
            2 => format!("i0 < {}", self.rng.gen_range(-1..4)),
            _ => format!("{} && i0 >= 0", self.bool_var()),
        }
    }

    fn leaf(&mut self) -> String {
        let qubits = self.qubits();
        let reg = self.regs.choose(self.rng).unwrap().0.clone();
        match self.rng.gen_range(0..11) {
            0 => "skip".into(),
            1 => format!("consume({})", self.rng.gen_range(0..4)),
            2 => "consume(i0)".into(),
            3 if !qubits.is_empty() => {
                let q = qubits.choose(self.rng).unwrap().to_string();
                format!("{} = meas({q})", self.bool_var())
            }
            4 => format!("{} = measzero({reg})", self.bool_var()),
            5 if !qubits.is_empty() => {
                let q = qubits.choose(self.rng).unwrap().to_string();
                format!("{q} *= {}", ["H", "X", "T"].choose(self.rng).unwrap())
            }
            6 if qubits.len() >= 2 => {
                let pair: Vec<&String> = qubits.choose_multiple(self.rng, 2).collect();
                format!("{}, {} *= {}", pair[0], pair[1], ["CNOT", "CZ"].choose(self.rng).unwrap())
            }
            7 => {
                let b = self.bool_var();
                format!("{b} = !{b}")
            }
            8 => format!("i0 = i0 + {}", self.rng.gen_range(-2..3)),
            9 if !qubits.is_empty() => {
                let q = qubits.choose(self.rng).unwrap().to_string();
                format!("{q} = {}", ["|0>", "|+>"].choose(self.rng).unwrap())
            }
            _ => format!("{} = b0 || i0 > 1", self.bool_var()),
        }
    }

    fn stmt(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.leaf();
        }
        let kinds = if self.opts.loops { 4 } else { 2 };
        match self.rng.gen_range(0..kinds) {
            0 => format!("{}; {}", self.stmt(depth - 1), self.stmt(depth - 1)),
            1 => {
                let c = self.cond();
                format!("if ({c}) {{ {} }} else {{ {} }}", self.stmt(depth - 1), self.stmt(depth - 1))
            }
            2 if self.counters < MAX_COUNTERS => {
                let k = format!("c{}", self.counters);
                self.counters += 1;
                let bound = self.rng.gen_range(1..4);
                let c = self.cond();
                format!(
                    "{k} = 0; while ({k} < {bound} && ({c})) {{ {}; {k} = {k} + 1 }}",
                    self.stmt(depth - 1)
                )
            }
            _ => match self.qubits().first().cloned() {
                Some(q) => {
                    let b = self.bool_var();
                    format!("{b} = true; while ({b}) {{ {q} *= H; {b} = meas({q}); consume(1) }}")
                }
                None => self.leaf(),
            },
        }
    }
}

/// Program text over `bool b0, b1; int i0, c0..; qreg q0[..] ..`. One
/// register may have dimension 3; loops are bounded by private counters
/// or are coin tosses, so every program terminates almost surely.
pub fn random_program(rng: &mut impl Rng, opts: GenOpts) -> String {
    let nregs = rng.gen_range(1..=opts.max_regs.max(1));
    let regs: Vec<(String, usize)> = (0..nregs)
        .map(|i| (format!("q{i}"), if i > 0 && rng.gen_bool(0.2) { 3 } else { 2 }))
        .collect();
    let mut g = Gen {
        rng,
        opts,
        regs,
        counters: 0,
    };
    let body = g.stmt(opts.max_depth);
    let mut text = String::from("bool b0; bool b1; int i0;\n");
    for i in 0..g.counters {
        text += &format!("int c{i};\n");
    }
    for (r, d) in &g.regs {
        text += &format!("qreg {r}[{d}];\n");
    }
    text + &body
}

/// A single counter-bounded loop `while (k < B && c) { body; k = k + 1 }`
/// with a loop-free random body; the counter `k` is declared last.
pub fn random_loop_program(rng: &mut impl Rng, opts: GenOpts) -> String {
    let inner = GenOpts { loops: false, ..opts };
    let text = random_program(rng, inner);
    let (decls, body) = text.rsplit_once(";\n").expect("declarations precede the body");
    let mut g = Gen {
        rng,
        opts: inner,
        regs: Vec::new(),
        counters: 0,
    };
    let cond = g.cond();
    let bound = g.rng.gen_range(1..4);
    format!("{decls};\nint k;\nwhile (k < {bound} && ({cond})) {{ {body}; k = k + 1 }}")
}

/// Random positive semi-definite Hermitian matrix with eigenvalues in [0, scale].
pub fn random_psd(dim: usize, scale: f64, rng: &mut impl Rng) -> Vec<Vec<Complex64>> {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for _ in 0..rng.gen_range(1..=dim) {
        let v = haar_vector(dim, rng);
        let w = rng.gen_range(0.0..scale);
        for i in 0..dim {
            for j in 0..dim {
                m[i][j] += v[i] * v[j].conj() * w;
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            m[i][j] = m[j][i].conj();
        }
        m[i][i].im = 0.0;
    }
    m
}

/// Random non-negative expectation over the classical variables and
/// registers of `layout`. With `quantum = false` no quadratic forms occur.
pub fn random_expectation(layout: &Layout, quantum: bool, depth: usize, rng: &mut impl Rng) -> Expectation {
    let bools: Vec<String> = layout
        .user_vars()
        .filter(|v| v.2 == crate::lang::ast::VarKind::Bool)
        .map(|v| v.1.to_string())
        .collect();
    let ints: Vec<String> = layout
        .user_vars()
        .filter(|v| v.2 == crate::lang::ast::VarKind::Int)
        .map(|v| v.1.to_string())
        .collect();
    fn go(layout: &Layout, bools: &[String], ints: &[String], quantum: bool, depth: usize, rng: &mut impl Rng) -> Expectation {
        let leaf = depth == 0 || rng.gen_bool(0.35);
        if leaf {
            return match rng.gen_range(0..5) {
                0 => Expectation::constant(rng.gen_range(0.0..3.0)),
                1 if !bools.is_empty() => {
                    let b = Expr::var(bools.choose(rng).unwrap());
                    Expectation::Ind(if rng.gen_bool(0.5) { b } else { Expr::not(b) })
                }
                2 if !ints.is_empty() => {
                    let i = Expr::var(ints.choose(rng).unwrap());
                    Expectation::Arith(Expr::bin(BinOp::Add, i, Expr::Int(rng.gen_range(-1..3))))
                }
                3 | 4 if quantum && !layout.regs().is_empty() => {
                    let (name, d) = layout.regs().choose(rng).unwrap().clone();
                    Expectation::QuadForm {
                        regs: vec![name],
                        matrix: random_psd(d, 3.0, rng),
                    }
                }
                _ => Expectation::constant(rng.gen_range(0.0..2.0)),
            };
        }
        let mut sub = || go(layout, bools, ints, quantum, depth - 1, rng);
        let (a, b) = (sub(), sub());
        match rng.gen_range(0..5) {
            0 => Expectation::Add(vec![a, b]),
            1 => Expectation::Mul(vec![a, b]),
            2 => Expectation::scale(rng.gen_range(0.0..2.0), a),
            3 => Expectation::Max(vec![a, b]),
            _ => Expectation::Min(vec![a, b]),
        }
    }
    go(layout, &bools, &ints, quantum, depth, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::Code;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_programs_compile() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let text = random_program(&mut rng, GenOpts::default());
            let code = Code::compile(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert!(code.layout.regs().len() <= 3);
        }
    }

    #[test]
    fn loop_free_option() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let opts = GenOpts {
                loops: false,
                ..GenOpts::default()
            };
            let code = Code::compile(&random_program(&mut rng, opts)).unwrap();
            assert!(!code.has_loop(code.root()));
        }
    }

    #[test]
    fn loop_programs_have_a_single_root_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let text = random_loop_program(&mut rng, GenOpts::default());
            let code = Code::compile(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert!(matches!(code.node(code.root()), crate::code::Node::While { .. }), "{text}");
        }
    }

    #[test]
    fn psd_matrices_are_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_psd(3, 2.0, &mut rng);
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[i][j] - m[j][i].conj()).norm() < 1e-12);
            }
        }
    }
}
