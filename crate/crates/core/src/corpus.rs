//! The bundled case-study corpus and its expected-versus-computed table.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::code::Code;
use crate::cost::{ExpectedCost, FixpointCfg};
use crate::error::{Error, Result};
use crate::expect::{parse_expectation, Expectation};
use crate::invariant::{bound_whole_program, CheckOpts, Checker, InvariantFile};
use crate::pars::{ecost_approx, Config, ExpandOpts};
use crate::qet::{wp_eval, with_big_stack};
use crate::state::{MachineState, QVec};

/// Files every corpus directory must provide.
pub const REQUIRED: &[&str] = &[
    "ct.qw",
    "ct.inv",
    "rus.qw",
    "rus.inv",
    "fuse.qw",
    "fuse.sum",
    "chain4.qw",
    "chain4.inv",
    "chain_k4.qw",
    "chain_k4.inv",
    "walk_n2.qw",
    "walk_n2.inv",
    "walk_n3.qw",
    "walk_n3.inv",
];

const BUNDLED: &[(&str, &str)] = &[
    ("ct.qw", include_str!("../../../corpus/ct.qw")),
    ("ct.inv", include_str!("../../../corpus/ct.inv")),
    ("rus.qw", include_str!("../../../corpus/rus.qw")),
    ("rus.inv", include_str!("../../../corpus/rus.inv")),
    ("fuse.qw", include_str!("../../../corpus/fuse.qw")),
    ("fuse.sum", include_str!("../../../corpus/fuse.sum")),
    ("chain4.qw", include_str!("../../../corpus/chain4.qw")),
    ("chain4.inv", include_str!("../../../corpus/chain4.inv")),
    ("chain_k4.qw", include_str!("../../../corpus/chain_k4.qw")),
    ("chain_k4.inv", include_str!("../../../corpus/chain_k4.inv")),
    ("walk_n2.qw", include_str!("../../../corpus/walk_n2.qw")),
    ("walk_n2.inv", include_str!("../../../corpus/walk_n2.inv")),
    ("walk_n3.qw", include_str!("../../../corpus/walk_n3.qw")),
    ("walk_n3.inv", include_str!("../../../corpus/walk_n3.inv")),
];

/// Corpus file contents by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    files: BTreeMap<String, String>,
}

impl Corpus {
    pub fn bundled() -> Self {
        Corpus {
            files: BUNDLED.iter().map(|(n, t)| (n.to_string(), t.to_string())).collect(),
        }
    }

    /// Reads the required files from `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::Usage(format!("{} is not a directory", dir.display())));
        }
        let mut files = BTreeMap::new();
        let mut missing = Vec::new();
        for name in REQUIRED {
            match std::fs::read_to_string(dir.join(name)) {
                Ok(t) => {
                    files.insert(name.to_string(), t);
                }
                Err(_) => missing.push(*name),
            }
        }
        if !missing.is_empty() {
            return Err(Error::Usage(format!(
                "corpus directory {} is missing {}",
                dir.display(),
                missing.join(", ")
            )));
        }
        Ok(Corpus { files })
    }

    pub fn get(&self, name: &str) -> Result<&str> {
        self.files
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| Error::Usage(format!("corpus file {name} missing")))
    }

    /// Replaces one file, for negative controls.
    pub fn with_file(mut self, name: &str, text: &str) -> Self {
        self.files.insert(name.to_string(), text.to_string());
        self
    }

    pub fn program(&self, name: &str) -> Result<Code> {
        Code::compile(self.get(name)?)
    }

    pub fn invariants(&self, name: &str) -> Result<InvariantFile> {
        InvariantFile::parse(self.get(name)?)
    }
}

/// One line of the corpus table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    pub quantity: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
    /// Wall time; left out of JSON so reports are reproducible.
    #[serde(skip)]
    pub millis: u128,
}

/// Knobs for the corpus run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusOpts {
    pub seed: u64,
    pub tol: f64,
    /// Forward steps for the length-4 chain.
    pub chain_steps: usize,
    pub branch_cap: usize,
}

impl Default for CorpusOpts {
    fn default() -> Self {
        CorpusOpts {
            seed: 0,
            tol: 1e-6,
            chain_steps: 5000,
            branch_cap: ExpandOpts::default().branch_cap,
        }
    }
}

struct Table {
    rows: Vec<Row>,
    clock: Instant,
}

impl Table {
    fn push(&mut self, scenario: &str, quantity: &str, expected: String, computed: String, pass: bool) {
        self.rows.push(Row {
            scenario: scenario.into(),
            quantity: quantity.into(),
            expected,
            computed,
            pass,
            millis: self.clock.elapsed().as_millis(),
        });
        self.clock = Instant::now();
    }

    fn value(&mut self, scenario: &str, quantity: &str, expected: f64, computed: f64, tol: f64) {
        let pass = (computed - expected).abs() <= tol;
        self.push(scenario, quantity, format!("{expected:.9}"), format!("{computed:.9}"), pass);
    }

    fn error(&mut self, scenario: &str, quantity: &str, expected: String, e: Error) {
        self.push(scenario, quantity, expected, format!("error: {e}"), false);
    }
}

fn basis_state(code: &Code, idx: u64) -> MachineState {
    MachineState {
        qvec: QVec::basis(idx),
        ..MachineState::zero(&code.layout)
    }
}

fn check_opts(o: &CorpusOpts, random_states: usize) -> CheckOpts {
    CheckOpts {
        tol: 1e-9,
        seed: o.seed,
        random_states,
        ..CheckOpts::default()
    }
}

/// Certifies the file and bounds the program at `init`.
fn certified_bound(t: &mut Table, scenario: &str, code: &Code, file: &InvariantFile, init: &MachineState, expected: f64, o: &CorpusOpts, suite: usize) {
    match bound_whole_program(code, file, std::slice::from_ref(init), check_opts(o, suite)) {
        Ok(r) => {
            for c in &r.certification.reports {
                t.push(scenario, &format!("{} {}", c.kind, c.subject), "Pass".into(), c.headline(), c.passed());
            }
            match r.bounds.first() {
                Some(b) => t.value(scenario, "certified bound", expected, b.get(), o.tol),
                None => t.push(scenario, "certified bound", format!("{expected:.9}"), "not certified".into(), false),
            }
        }
        Err(e) => t.error(scenario, "certified bound", format!("{expected:.9}"), e),
    }
}

fn backward(code: &Code, init: &MachineState) -> Result<f64> {
    let cfg = FixpointCfg::default();
    let r = with_big_stack(|| wp_eval(code, &ExpectedCost, code.root(), &Expectation::zero(), init, &cfg))?;
    Ok(r.value.get())
}

fn forward(code: &Code, init: &MachineState, n: usize, o: &CorpusOpts) -> Result<(f64, f64)> {
    let opts = ExpandOpts {
        branch_cap: o.branch_cap,
        ..ExpandOpts::default()
    };
    let (c, m) = ecost_approx(code, Config::start(code, code.root(), init.clone()), n, &opts)?;
    Ok((c.get(), m))
}

fn engines(t: &mut Table, scenario: &str, what: &str, code: &Code, init: &MachineState, n: usize, expected: f64, o: &CorpusOpts) {
    match backward(code, init) {
        Ok(v) => t.value(scenario, &format!("backward {what}"), expected, v, o.tol),
        Err(e) => t.error(scenario, &format!("backward {what}"), format!("{expected:.9}"), e),
    }
    match forward(code, init, n, o) {
        Ok((v, _)) => t.value(scenario, &format!("forward n={n} {what}"), expected, v, o.tol),
        Err(e) => t.error(scenario, &format!("forward n={n} {what}"), format!("{expected:.9}"), e),
    }
}

fn scenario<F: FnOnce(&mut Table) -> Result<()>>(t: &mut Table, name: &str, f: F) {
    if let Err(e) = f(t) {
        t.error(name, "setup", "ok".into(), e);
    }
}

/// Runs every case study and returns the table.
pub fn run_corpus(c: &Corpus, o: &CorpusOpts) -> Vec<Row> {
    let mut t = Table {
        rows: Vec::new(),
        clock: Instant::now(),
    };

    scenario(&mut t, "ct", |t| {
        let code = c.program("ct.qw")?;
        let file = c.invariants("ct.inv")?;
        // (α, β) = (0, 1): 1 + |α − β|² = 2
        let init = basis_state(&code, 1);
        engines(t, "ct", "from |1>", &code, &init, 800, 2.0, o);
        let plus = MachineState {
            qvec: QVec::from_dense(&[num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2]),
            ..init.clone()
        };
        engines(t, "ct", "from |+>", &code, &plus, 800, 1.0, o);
        certified_bound(t, "ct", &code, &file, &init, 2.0, o, 200);
        Ok(())
    });

    scenario(&mut t, "rus", |t| {
        let code = c.program("rus.qw")?;
        let file = c.invariants("rus.inv")?;
        let init = MachineState::zero(&code.layout);
        engines(t, "rus", "T-count", &code, &init, 800, 8.0 / 3.0, o);
        certified_bound(t, "rus", &code, &file, &init, 8.0 / 3.0, o, 200);
        Ok(())
    });

    scenario(&mut t, "fuse", |t| {
        let code = c.program("fuse.qw")?;
        let file = c.invariants("fuse.sum")?;
        let mut ch = Checker::new(&code, &file, vec![MachineState::zero(&code.layout)], check_opts(o, 200))?;
        let rep = ch.certify()?;
        for r in &rep.reports {
            t.push("fuse", &format!("summary {}", r.subject), "Pass".into(), r.headline(), r.passed());
        }
        if rep.reports.is_empty() {
            t.push("fuse", "summary fuse", "Pass".into(), "no summary checked".into(), false);
        }
        Ok(())
    });

    scenario(&mut t, "chain4", |t| {
        let code = c.program("chain4.qw")?;
        let file = c.invariants("chain4.inv")?;
        let init = MachineState::zero(&code.layout);
        certified_bound(t, "chain4", &code, &file, &init, 36.0, o, 100);
        Ok(())
    });

    scenario(&mut t, "chain_k4", |t| {
        let code = c.program("chain_k4.qw")?;
        let file = c.invariants("chain_k4.inv")?;
        let init = MachineState::zero(&code.layout);
        certified_bound(t, "chain_k4", &code, &file, &init, 1184.0, o, 100);
        let n = o.chain_steps;
        match forward(&code, &init, n, o) {
            Ok((v, m)) => {
                t.push("chain_k4", &format!("forward n={n} cost"), "<= 1184".into(), format!("{v:.6}"), v <= 1184.0 + o.tol);
                t.push("chain_k4", &format!("forward n={n} terminal mass"), ">= 0.99".into(), format!("{m:.6}"), m >= 0.99);
            }
            Err(e) => t.error("chain_k4", &format!("forward n={n}"), "<= 1184".into(), e),
        }
        Ok(())
    });

    scenario(&mut t, "walk_n2", |t| {
        let code = c.program("walk_n2.qw")?;
        let file = c.invariants("walk_n2.inv")?;
        let at1 = basis_state(&code, 1);
        let at0 = basis_state(&code, 0);
        engines(t, "walk_n2", "from position 1", &code, &at1, 800, 2.0, o);
        engines(t, "walk_n2", "from position 0", &code, &at0, 800, 1.0, o);
        certified_bound(t, "walk_n2", &code, &file, &at1, 2.0, o, 200);
        Ok(())
    });

    scenario(&mut t, "walk_n3", |t| {
        let code = c.program("walk_n3.qw")?;
        let file = c.invariants("walk_n3.inv")?;
        let init = basis_state(&code, 1);
        let expected = expectation_at(&file, &code, &init.with_var(0, 1))?;
        certified_bound(t, "walk_n3", &code, &file, &init, expected, o, 49);
        engines(t, "walk_n3", "from position 1", &code, &init, 2000, expected, o);
        Ok(())
    });

    t.rows
}

fn expectation_at(file: &InvariantFile, code: &Code, s: &MachineState) -> Result<f64> {
    let g = file
        .invariants
        .get("main.0")
        .ok_or_else(|| Error::Invalid("walk invariant missing".into()))?;
    Ok(crate::expect::eval_expectation(g, &code.layout, s)?.get())
}

/// Parses an expectation argument: inline s-expression or the names
/// `zero`/`one`.
pub fn parse_cont(text: &str) -> Result<Expectation> {
    match text {
        "zero" => Ok(Expectation::zero()),
        "one" => Ok(Expectation::constant(1.0)),
        _ => parse_expectation(text),
    }
}

/// Renders rows as an aligned text table.
pub fn render(rows: &[Row]) -> String {
    let w = |f: &dyn Fn(&Row) -> usize, min: usize| rows.iter().map(f).max().unwrap_or(0).max(min);
    let (ws, wq, we) = (
        w(&|r| r.scenario.len(), 8),
        w(&|r| r.quantity.chars().count(), 8),
        w(&|r| r.expected.len(), 8),
    );
    let mut out = format!("{:ws$}  {:wq$}  {:we$}  {}\n", "scenario", "quantity", "expected", "computed");
    for r in rows {
        out += &format!(
            "{:ws$}  {:wq$}  {:we$}  {}  [{}] {}ms\n",
            r.scenario,
            r.quantity,
            r.expected,
            r.computed,
            if r.pass { "ok" } else { "FAIL" },
            r.millis
        );
    }
    out
}
