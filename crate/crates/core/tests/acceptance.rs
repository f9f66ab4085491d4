//! Acceptance gate: one line per criterion, non-zero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use num_complex::Complex64;
use qet_core::code::Code;
use qet_core::corpus::Corpus;
use qet_core::cost::{ExpectedCost, FixpointCfg};
use qet_core::denot::strong_adequacy_check;
use qet_core::expect::suite::{haar_vector, random_state};
use qet_core::expect::Expectation;
use qet_core::invariant::{bound_whole_program, CheckOpts, Checker};
use qet_core::pars::{ecost_approx, Config, ExpandOpts};
use qet_core::qet::wp_eval;
use qet_core::state::{MachineState, QVec};

struct Gate {
    lines: Vec<(bool, String)>,
}

impl Gate {
    fn report(&mut self, id: u32, title: &str, start: Instant, budget: Option<Duration>, checks: Vec<(bool, String)>) {
        let elapsed = start.elapsed();
        let mut ok = checks.iter().all(|c| c.0);
        let mut notes: Vec<String> = checks.iter().map(|(p, m)| format!("{}{m}", if *p { "" } else { "FAILED " })).collect();
        if let Some(b) = budget {
            if elapsed > b {
                ok = false;
                notes.push(format!("FAILED runtime {:.1}s exceeds {:.0}s", elapsed.as_secs_f64(), b.as_secs_f64()));
            }
        }
        let line = format!(
            "criterion {id} {} {title} ({:.1}s): {}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            notes.join("; ")
        );
        println!("{line}");
        self.lines.push((ok, line));
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn backward(code: &Code, s: &MachineState, cfg: &FixpointCfg) -> f64 {
    wp_eval(code, &ExpectedCost, code.root(), &Expectation::zero(), s, cfg).unwrap().value.get()
}

fn forward(code: &Code, s: &MachineState, n: usize) -> (f64, f64) {
    let (c, m) = ecost_approx(code, Config::start(code, code.root(), s.clone()), n, &ExpandOpts::default()).unwrap();
    (c.get(), m)
}

fn opts(random_states: usize) -> CheckOpts {
    CheckOpts {
        random_states,
        ..CheckOpts::default()
    }
}

fn coin_toss(g: &mut Gate, corpus: &Corpus) {
    let t = Instant::now();
    let code = corpus.program("ct.qw").unwrap();
    let cfg = FixpointCfg {
        max_iter: 200,
        ..FixpointCfg::default()
    };
    let mut rng = common::rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let v = haar_vector(2, &mut rng);
        let (a, b) = (v[0], v[1]);
        let s = MachineState {
            qvec: QVec::from_dense(&[a, b]),
            ..MachineState::zero(&code.layout)
        };
        let expected = 1.0 + (a - b).norm_sqr();
        worst = worst.max((backward(&code, &s, &cfg) - expected).abs());
        worst = worst.max((forward(&code, &s, 800).0 - expected).abs());
    }
    g.report(
        1,
        "coin toss 1 + |a - b|^2 over 100 random states",
        t,
        Some(Duration::from_secs(5)),
        vec![(worst <= 1e-6, format!("max deviation {worst:.2e} (tol 1e-6)"))],
    );
}

fn rus(g: &mut Gate, corpus: &Corpus) {
    let t = Instant::now();
    let code = corpus.program("rus.qw").unwrap();
    let file = corpus.invariants("rus.inv").unwrap();
    let mut rng = common::rng(2);
    let mut states = vec![MachineState::zero(&code.layout)];
    states.extend((0..9).map(|_| random_state(&code.layout, &mut rng)));
    let mut worst: f64 = 0.0;
    for s in &states {
        worst = worst.max((backward(&code, s, &FixpointCfg::default()) - 8.0 / 3.0).abs());
        worst = worst.max((forward(&code, s, 800).0 - 8.0 / 3.0).abs());
    }
    let cert = bound_whole_program(&code, &file, &states[..1], opts(200)).unwrap();
    let bound = cert.bounds.first().map(|b| b.get());
    g.report(
        2,
        "repeat-until-success expected T-count 8/3",
        t,
        Some(Duration::from_secs(5)),
        vec![
            (worst <= 1e-6, format!("max engine deviation over {} states {worst:.2e}", states.len())),
            (
                cert.certification.all_passed,
                cert.certification.reports.iter().map(|r| r.headline()).collect::<Vec<_>>().join(", "),
            ),
            (
                bound.is_some_and(|b| close(b, 8.0 / 3.0, 1e-6)),
                format!("certified bound {bound:?}"),
            ),
        ],
    );
}

fn fuse(g: &mut Gate, corpus: &Corpus) {
    let t = Instant::now();
    let code = corpus.program("fuse.qw").unwrap();
    let file = corpus.invariants("fuse.sum").unwrap();
    let mut ch = Checker::new(&code, &file, vec![MachineState::zero(&code.layout)], opts(200)).unwrap();
    let rep = ch.certify().unwrap();
    let worst = rep.reports.iter().map(|r| r.worst_residual.abs()).fold(0.0, f64::max);
    let equality = rep.reports.iter().all(|r| r.kind == "summary" && !r.conditional);
    g.report(
        3,
        "fusion summary cost 1, x := 1 w.p. 1/4",
        t,
        None,
        vec![
            (rep.all_passed && !rep.reports.is_empty(), format!("{} summary checks passed", rep.reports.len())),
            (equality && worst <= 1e-9, format!("equality residual {worst:.2e} (tol 1e-9)")),
        ],
    );
}

fn chain(g: &mut Gate, corpus: &Corpus) {
    let t = Instant::now();
    let c4 = corpus.program("chain4.qw").unwrap();
    let f4 = corpus.invariants("chain4.inv").unwrap();
    let r4 = bound_whole_program(&c4, &f4, &[MachineState::zero(&c4.layout)], opts(100)).unwrap();
    let b4 = r4.bounds.first().map(|b| b.get());

    let ck = corpus.program("chain_k4.qw").unwrap();
    let fk = corpus.invariants("chain_k4.inv").unwrap();
    let init = MachineState::zero(&ck.layout);
    let rk = bound_whole_program(&ck, &fk, std::slice::from_ref(&init), opts(100)).unwrap();
    let bk = rk.bounds.first().map(|b| b.get());
    let (cost, mass) = forward(&ck, &init, 5000);
    g.report(
        4,
        "chained fusions: 36 per chain, 148 (k + 4) = 1184 for k = 4",
        t,
        Some(Duration::from_secs(60)),
        vec![
            (b4.is_some_and(|b| close(b, 36.0, 1e-6)), format!("chain4 certified bound {b4:?}")),
            (bk.is_some_and(|b| close(b, 1184.0, 1e-6)), format!("k=4 certified bound {bk:?}")),
            (cost <= 1184.0, format!("forward cost at n=5000 {cost:.4} <= 1184")),
            (mass >= 0.99, format!("forward terminal mass at n=5000 {mass:.6} >= 0.99")),
        ],
    );
}

fn walk(g: &mut Gate, corpus: &Corpus) {
    let t = Instant::now();
    let c2 = corpus.program("walk_n2.qw").unwrap();
    let f2 = corpus.invariants("walk_n2.inv").unwrap();
    let basis = |code: &Code, i: u64| MachineState {
        qvec: QVec::basis(i),
        ..MachineState::zero(&code.layout)
    };
    let mut checks = Vec::new();
    for (pos, expected) in [(1, 2.0), (0, 1.0)] {
        let s = basis(&c2, pos);
        let b = backward(&c2, &s, &FixpointCfg::default());
        let (f, _) = forward(&c2, &s, 800);
        checks.push((
            close(b, expected, 1e-6) && close(f, expected, 1e-6),
            format!("n=2 from position {pos}: backward {b:.9}, forward {f:.9}, expected {expected}"),
        ));
    }
    let r2 = bound_whole_program(&c2, &f2, &[basis(&c2, 1)], opts(200)).unwrap();
    checks.push((r2.certification.all_passed, format!("n=2 invariant: {}", r2.certification.reports[0].headline())));

    let c3 = corpus.program("walk_n3.qw").unwrap();
    let f3 = corpus.invariants("walk_n3.inv").unwrap();
    let r3 = bound_whole_program(&c3, &f3, &[basis(&c3, 1)], opts(49)).unwrap();
    let suite = r3.certification.reports.first().map(|r| r.suite_size).unwrap_or(0);
    checks.push((
        r3.certification.all_passed && suite == 50,
        format!("n=3 invariant: {}", r3.certification.reports[0].headline()),
    ));
    g.report(5, "quantum walk invariants and costs 2 / 1", t, None, checks);
}

fn approximants(g: &mut Gate) {
    let t = Instant::now();
    let o = common::approximant_equality(50, 30, 6);
    g.report(6, "step-indexed transformer equals forward approximants", t, None, vec![(o.passed(), o.line())]);
}

fn laws(g: &mut Gate) {
    let t = Instant::now();
    let outcomes = [
        common::continuity(500, 71),
        common::monotonicity(500, 72),
        common::distributivity(500, 73),
        common::upper_invariant(500, 74),
        common::separation(500, 75),
        common::linearity(500, 76),
        common::constancy(500, 77),
        common::constant_propagation(500, 78),
    ];
    let checks = outcomes.iter().map(|o| (o.passed() && o.instances == 500, o.line())).collect();
    g.report(7, "transformer and cost-transformer laws", t, None, checks);
}

fn algebra(g: &mut Gate) {
    let t = Instant::now();
    let checks = common::algebra(1000, 8).iter().map(|o| (o.passed() && o.instances == 1000, o.line())).collect();
    g.report(8, "barycentric and cost-structure identities", t, None, checks);
}

fn adequacy(g: &mut Gate, corpus: &Corpus) {
    let t = Instant::now();
    let mut checks = Vec::new();
    let mut rng = common::rng(9);
    for name in ["ct.qw", "rus.qw"] {
        let code = corpus.program(name).unwrap();
        let mut states = vec![MachineState::zero(&code.layout)];
        states.extend((0..3).map(|_| random_state(&code.layout, &mut rng)));
        for s in &states {
            let r = strong_adequacy_check(&code, s, 60, 1e-6).unwrap();
            checks.push((
                r.holds,
                format!("{name}: gap {:.2e} <= residual {:.2e} + 1e-6", r.gap, r.residual_mass),
            ));
        }
    }
    // a state that makes the coin toss run long enough to leave residual mass
    let code = corpus.program("ct.qw").unwrap();
    let s = MachineState {
        qvec: QVec::from_dense(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]),
        ..MachineState::zero(&code.layout)
    };
    let r = strong_adequacy_check(&code, &s, 60, 1e-6).unwrap();
    checks.push((
        r.holds,
        format!("ct.qw from |1>: gap {:.2e} <= residual {:.2e} + 1e-6", r.gap, r.residual_mass),
    ));
    g.report(9, "strong adequacy at depth 60", t, None, checks);
}

fn main() {
    let corpus = Corpus::bundled();
    let mut g = Gate { lines: Vec::new() };
    coin_toss(&mut g, &corpus);
    rus(&mut g, &corpus);
    fuse(&mut g, &corpus);
    chain(&mut g, &corpus);
    walk(&mut g, &corpus);
    approximants(&mut g);
    laws(&mut g);
    algebra(&mut g);
    adequacy(&mut g, &corpus);
    let failed = g.lines.iter().filter(|l| !l.0).count();
    println!("acceptance: {} of {} criteria passed", g.lines.len() - failed, g.lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
