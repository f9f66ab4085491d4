//! Randomized law suites shared by the `laws` and `acceptance` targets.

#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qet_core::code::{Code, Node, NodeId};
use qet_core::cost::{
    convex_sum, CostStructure, DensityMap, DensityMaps, ExpectedCost, ExpectedValue, ExtReal, FixpointCfg, Probability,
    SubDensity,
};
use qet_core::expect::suite::random_state;
use qet_core::expect::{independence_check, CompiledExpectation, Expectation};
use qet_core::gen::{random_expectation, random_loop_program, random_program, random_psd, GenOpts};
use qet_core::pars::{ecost_approx, expand, expected_value_approx, step, Config, ExpandOpts};
use qet_core::qet::{wp_eval_with, wp_step_indexed_expect, NoHooks};
use qet_core::state::MachineState;
use qet_core::Result;

pub const TOL: f64 = 1e-9;

/// Outcome of one randomized law.
#[derive(Debug, Clone)]
pub struct LawOutcome {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl LawOutcome {
    fn new(name: &'static str) -> Self {
        LawOutcome {
            name,
            instances: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.instances += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn line(&self) -> String {
        format!(
            "{}: {}/{} instances{}",
            self.name,
            self.instances - self.failures,
            self.instances,
            self.first_failure.as_deref().map(|f| format!("; first failure: {f}")).unwrap_or_default()
        )
    }
}

pub fn close(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

pub fn below(a: f64, b: f64) -> bool {
    a <= b || close(a, b)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A compiled loop-free program with a random depth in `1..=4`.
pub fn loop_free(rng: &mut ChaCha8Rng) -> Code {
    let opts = GenOpts {
        max_depth: rng.gen_range(1..=4),
        loops: false,
        ..GenOpts::default()
    };
    Code::compile(&random_program(rng, opts)).expect("generated program compiles")
}

/// `qet[node]{f}(σ)` on the calling thread.
pub fn qet<C: CostStructure<Elem = ExtReal>>(code: &Code, cs: &C, node: NodeId, f: &Expectation, s: &MachineState) -> Result<f64> {
    let c = CompiledExpectation::compile(f, &code.layout)?;
    let k = move |s: &MachineState| c.eval(s);
    Ok(wp_eval_with(code, cs, node, &k, s, &FixpointCfg::default(), &NoHooks)?.value.get())
}

fn ecost(code: &Code, f: &Expectation, s: &MachineState) -> f64 {
    qet(code, &ExpectedCost, code.root(), f, s).expect("evaluation succeeds")
}

fn evalue(code: &Code, f: &Expectation, s: &MachineState) -> f64 {
    qet(code, &ExpectedValue, code.root(), f, s).expect("evaluation succeeds")
}

fn eval(code: &Code, f: &Expectation, s: &MachineState) -> f64 {
    CompiledExpectation::compile(f, &code.layout).unwrap().eval(s).unwrap().get()
}

fn sample(code: &Code, quantum: bool, rng: &mut ChaCha8Rng) -> (Expectation, MachineState) {
    let depth = rng.gen_range(0..=3);
    (random_expectation(&code.layout, quantum, depth, rng), random_state(&code.layout, rng))
}

/// `f ≤ g ⟹ qet{f} ≤ qet{g}`, with `g = f + h` for a random `h`, at
/// several states per instance.
pub fn monotonicity(n: usize, seed: u64) -> LawOutcome {
    let mut out = LawOutcome::new("monotonicity");
    let mut rng = rng(seed);
    for _ in 0..n {
        let code = loop_free(&mut rng);
        let f = random_expectation(&code.layout, true, 2, &mut rng);
        let h = random_expectation(&code.layout, true, 2, &mut rng);
        let g = Expectation::add(f.clone(), h);
        let mut ok = true;
        let mut detail = String::new();
        for _ in 0..4 {
            let s = random_state(&code.layout, &mut rng);
            for (lo, hi) in [(ecost(&code, &f, &s), ecost(&code, &g, &s)), (evalue(&code, &f, &s), evalue(&code, &g, &s))] {
                if !below(lo, hi) {
                    ok = false;
                    detail = format!("{lo} > {hi} for {}", qet_core::lang::program_to_string(&code.program));
                }
            }
        }
        out.record(ok, || detail);
    }
    out
}

/// `qet{f +_p g} = qet{f} +_p qet{g}` for both real-valued instances.
pub fn distributivity(n: usize, seed: u64) -> LawOutcome {
    let mut out = LawOutcome::new("distributivity");
    let mut rng = rng(seed);
    for _ in 0..n {
        let code = loop_free(&mut rng);
        let (f, s) = sample(&code, true, &mut rng);
        let g = random_expectation(&code.layout, true, 2, &mut rng);
        let p: f64 = rng.gen_range(0.0..=1.0);
        let mix = Expectation::add(Expectation::scale(p, f.clone()), Expectation::scale(1.0 - p, g.clone()));
        let lhs = ecost(&code, &mix, &s);
        let rhs = p * ecost(&code, &f, &s) + (1.0 - p) * ecost(&code, &g, &s);
        let lhs_v = evalue(&code, &mix, &s);
        let rhs_v = p * evalue(&code, &f, &s) + (1.0 - p) * evalue(&code, &g, &s);
        out.record(close(lhs, rhs) && close(lhs_v, rhs_v), || format!("p={p}: {lhs} vs {rhs}, {lhs_v} vs {rhs_v}"));
    }
    out
}

/// For the chain `f_i = min(f, 2^i)`: transformed values are non-decreasing
/// in `i` and reach `qet{f}` once the cut exceeds `f`.
pub fn continuity(n: usize, seed: u64) -> LawOutcome {
    let mut out = LawOutcome::new("continuity");
    let mut rng = rng(seed);
    for _ in 0..n {
        let code = loop_free(&mut rng);
        let (f, s) = sample(&code, true, &mut rng);
        let limit = ecost(&code, &f, &s);
        let mut prev = 0.0;
        let mut ok = true;
        let mut last = 0.0;
        for i in 0..=40 {
            let fi = Expectation::Min(vec![f.clone(), Expectation::constant(2f64.powi(i))]);
            let v = ecost(&code, &fi, &s);
            ok &= below(prev, v);
            prev = v;
            last = v;
        }
        ok &= close(last, limit);
        out.record(ok, || format!("sup {last} vs {limit}"));
    }
    out
}

/// Upper-invariant law on counter-bounded loops. The candidate is the
/// forward engine's exact value plus random slack; the premises are
/// checked at every reachable loop head and, when they hold, the backward
/// value must lie below the candidate.
pub fn upper_invariant(n: usize, seed: u64) -> LawOutcome {
    let mut out = LawOutcome::new("upper invariant");
    let mut rng = rng(seed);
    let mut vacuous = 0;
    while out.instances < n {
        let text = random_loop_program(
            &mut rng,
            GenOpts {
                max_depth: 3,
                ..GenOpts::default()
            },
        );
        let code = Code::compile(&text).expect("generated loop compiles");
        let root = code.root();
        let (cond, body) = match code.node(root) {
            Node::While { cond, body, .. } => (cond.clone(), *body),
            _ => unreachable!("generator emits a root loop"),
        };
        let f = random_expectation(&code.layout, true, 2, &mut rng);
        let slack_const = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..3.0) };
        let slack = Expectation::add(
            Expectation::constant(slack_const),
            if rng.gen_bool(0.5) {
                random_expectation(&code.layout, true, 1, &mut rng)
            } else {
                Expectation::zero()
            },
        );
        let s0 = random_state(&code.layout, &mut rng);
        let g = ForwardCandidate::new(&code, &f, &slack);

        let heads = loop_heads(&code, &s0);
        let mut premises = true;
        for h in &heads {
            let gh = g.at(h);
            if cond.eval_bool(&h.store).unwrap() {
                let k = |t: &MachineState| -> Result<ExtReal> { Ok(ExtReal::new(g.at(t))) };
                let v = wp_eval_with(&code, &ExpectedCost, body, &k, h, &FixpointCfg::default(), &NoHooks)
                    .unwrap()
                    .value
                    .get();
                premises &= below(v, gh);
            } else {
                premises &= below(eval(&code, &f, h), gh);
            }
        }
        if !premises {
            vacuous += 1;
            if vacuous > 50 * n {
                break;
            }
            continue;
        }
        let lhs = ecost(&code, &f, &s0);
        let rhs = g.at(&s0);
        out.record(below(lhs, rhs), || format!("{lhs} > {rhs} for {text}"));
    }
    out
}

/// `g(σ) = ecost(σ) + E_nf(σ)[f] + slack(σ)` by exhaustive forward expansion.
struct ForwardCandidate<'a> {
    code: &'a Code,
    f: Expectation,
    slack: Expectation,
    memo: Mutex<HashMap<qet_core::state::StateKey, f64>>,
}

impl<'a> ForwardCandidate<'a> {
    fn new(code: &'a Code, f: &Expectation, slack: &Expectation) -> Self {
        ForwardCandidate {
            code,
            f: f.clone(),
            slack: slack.clone(),
            memo: Mutex::new(HashMap::new()),
        }
    }

    fn at(&self, s: &MachineState) -> f64 {
        let key = s.key();
        if let Some(v) = self.memo.lock().unwrap().get(&key) {
            return *v;
        }
        let code = self.code;
        let r = expand(code, vec![(1.0, Config::start(code, code.root(), s.clone()))], 10_000, &ExpandOpts::default()).unwrap();
        assert!(r.running.is_empty(), "counter-bounded loop terminates");
        let ev: f64 = r.terminal.iter().map(|(w, t)| w * eval(code, &self.f, t)).sum();
        let v = r.cost.get() + ev + eval(code, &self.slack, s);
        self.memo.lock().unwrap().insert(key, v);
        v
    }
}

/// States at which the root loop is entered, found by forward exploration.
fn loop_heads(code: &Code, s0: &MachineState) -> Vec<MachineState> {
    let root = code.root();
    let mut seen = std::collections::HashSet::new();
    let mut heads = Vec::new();
    let mut frontier = vec![Config::start(code, root, s0.clone())];
    while let Some(c) = frontier.pop() {
        if let Config::Running { stack, state } = &c {
            if stack.as_slice() == [root] {
                if !seen.insert(state.key()) {
                    continue;
                }
                heads.push(state.clone());
            }
            let (_, succ) = step(code, &c).unwrap();
            frontier.extend(succ.into_iter().map(|(_, n)| n));
        }
    }
    heads
}

/// `qect{f} = qect{0} + qev{f}`.
pub fn separation(n: usize, seed: u64) -> LawOutcome {
    let mut out = LawOutcome::new("separation");
    let mut rng = rng(seed);
    for _ in 0..n {
        let code = loop_free(&mut rng);
        let (f, s) = sample(&code, true, &mut rng);
        let lhs = ecost(&code, &f, &s);
        let rhs = ecost(&code, &Expectation::zero(), &s) + evalue(&code, &f, &s);
        out.record(close(lhs, rhs), || format!("{lhs} vs {rhs}"));
    }
    out
}

/// `qect{f + g} = qect{f} + qev{g} ≤ qect{f} + qect{g}`.
pub fn linearity(n: usize, seed: u64) -> LawOutcome {
    let mut out = LawOutcome::new("linearity");
    let mut rng = rng(seed);
    for _ in 0..n {
        let code = loop_free(&mut rng);
        let (f, s) = sample(&code, true, &mut rng);
        let g = random_expectation(&code.layout, true, 2, &mut rng);
        let lhs = ecost(&code, &Expectation::add(f.clone(), g.clone()), &s);
        let mid = ecost(&code, &f, &s) + evalue(&code, &g, &s);
        let rhs = ecost(&code, &f, &s) + ecost(&code, &g, &s);
        out.record(close(lhs, mid) && below(mid, rhs), || format!("{lhs} / {mid} / {rhs}"));
    }
    out
}

/// A loop-free program and an expectation passing the independence check.
fn independent_pair(rng: &mut ChaCha8Rng) -> (Code, Expectation) {
    loop {
        let code = loop_free(rng);
        let stm = code.to_stmt(code.root());
        for _ in 0..20 {
            let f = random_expectation(&code.layout, true, rng.gen_range(0..=2), rng);
            if independence_check(&f, &stm) {
                return (code, f);
            }
        }
    }
}

/// For `f ⊥ stm`: `qect{f·g} = qect{0} + f·qev{g} ≤ max(1, f)·qect{g}`.
pub fn constancy(n: usize, seed: u64) -> LawOutcome {
    let mut out = LawOutcome::new("constancy");
    let mut rng = rng(seed);
    for _ in 0..n {
        let (code, f) = independent_pair(&mut rng);
        let (g, s) = sample(&code, true, &mut rng);
        let fs = eval(&code, &f, &s);
        let lhs = ecost(&code, &Expectation::mul(f.clone(), g.clone()), &s);
        let mid = ecost(&code, &Expectation::zero(), &s) + fs * evalue(&code, &g, &s);
        let rhs = fs.max(1.0) * ecost(&code, &g, &s);
        out.record(close(lhs, mid) && below(mid, rhs), || format!("{lhs} / {mid} / {rhs}"));
    }
    out
}

/// For `f ⊥ stm`: `qect{f + g} = qev{1}·f + qect{g} ≤ f + qect{g}`.
pub fn constant_propagation(n: usize, seed: u64) -> LawOutcome {
    let mut out = LawOutcome::new("constant propagation");
    let mut rng = rng(seed);
    for _ in 0..n {
        let (code, f) = independent_pair(&mut rng);
        let (g, s) = sample(&code, true, &mut rng);
        let fs = eval(&code, &f, &s);
        let lhs = ecost(&code, &Expectation::add(f.clone(), g.clone()), &s);
        let term = evalue(&code, &Expectation::constant(1.0), &s);
        let mid = term * fs + ecost(&code, &g, &s);
        let rhs = fs + ecost(&code, &g, &s);
        out.record(close(lhs, mid) && below(mid, rhs), || format!("{lhs} / {mid} / {rhs}"));
    }
    out
}

/// `QET^(n){f} = ecost^[n] + E_{nf^[n]} f` for random programs with loops,
/// every `n ≤ max_n`.
pub fn approximant_equality(programs: usize, max_n: usize, seed: u64) -> LawOutcome {
    let mut out = LawOutcome::new("approximant equality");
    let mut rng = rng(seed);
    let opts = ExpandOpts::default();
    for _ in 0..programs {
        let code = Code::compile(&random_program(&mut rng, GenOpts::default())).expect("generated program compiles");
        let (f, s) = sample(&code, true, &mut rng);
        let cfg = Config::start(&code, code.root(), s);
        let mut ok = true;
        let mut detail = String::new();
        for n in 0..=max_n {
            let back = wp_step_indexed_expect(&code, &ExpectedCost, &cfg, &f, n).unwrap().get();
            let cost = ecost_approx(&code, cfg.clone(), n, &opts).unwrap().0.get();
            let ev = expected_value_approx(&code, cfg.clone(), &f, n, &opts).unwrap().get();
            if !close(back, cost + ev) {
                ok = false;
                detail = format!("n={n}: {back} vs {}", cost + ev);
            }
        }
        out.record(ok, || detail);
    }
    out
}

// ---- algebra -------------------------------------------------------------

fn ext_sample(rng: &mut ChaCha8Rng, unit: bool) -> ExtReal {
    if unit {
        return ExtReal::new(rng.gen_range(0.0..=1.0));
    }
    match rng.gen_range(0..20) {
        0 => ExtReal::INF,
        1 => ExtReal::ZERO,
        _ => ExtReal::new(rng.gen_range(0.0..50.0)),
    }
}

fn cost_sample(rng: &mut ChaCha8Rng) -> ExtReal {
    match rng.gen_range(0..20) {
        0 => ExtReal::INF,
        1 => ExtReal::ZERO,
        _ => ExtReal::new(rng.gen_range(0.0..20.0)),
    }
}

fn weight(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen_range(0.0..1.0),
    }
}

/// Barycentric and cost-structure identities for one instance, with
/// equality meaning `approx_eq` and, for ordered comparisons, `leq` both ways.
fn axioms<C: CostStructure>(name: &'static str, cs: &C, n: usize, rng: &mut ChaCha8Rng, gen: &dyn Fn(&mut ChaCha8Rng) -> C::Elem) -> LawOutcome {
    let mut out = LawOutcome::new(name);
    let eq = |a: &C::Elem, b: &C::Elem| {
        let scale = cs.magnitude(a).max(cs.magnitude(b)).max(1.0);
        cs.approx_eq(a, b, TOL * scale) && cs.leq(a, b) && cs.leq(b, a)
    };
    for _ in 0..n {
        let (a, b, c) = (gen(rng), gen(rng), gen(rng));
        let (r, p) = (weight(rng), weight(rng));
        let (c1, c2) = (cost_sample(rng), cost_sample(rng));
        let mut bad = Vec::new();
        if !eq(&cs.convex(1.0, &a, &b), &a) {
            bad.push("a +_1 b = a");
        }
        if !eq(&cs.convex(r, &a, &b), &cs.convex(1.0 - r, &b, &a)) {
            bad.push("a +_r b = b +_{1-r} a");
        }
        if !eq(&cs.convex(r, &a, &a), &a) {
            bad.push("a +_r a = a");
        }
        if p < 1.0 && r < 1.0 {
            let lhs = cs.convex(r, &cs.convex(p, &a, &b), &c);
            let inner = (r - p * r) / (1.0 - p * r);
            let rhs = cs.convex(p * r, &a, &cs.convex(inner, &b, &c));
            if !eq(&lhs, &rhs) {
                bad.push("associativity");
            }
        }
        if !eq(&cs.cost_add(ExtReal::ZERO, &a), &a) {
            bad.push("0 +^ s = s");
        }
        if !eq(&cs.cost_add(c1, &cs.cost_add(c2, &a)), &cs.cost_add(c1 + c2, &a)) {
            bad.push("c +^ (d +^ s) = (c + d) +^ s");
        }
        let lhs = cs.convex(r, &cs.cost_add(c1, &a), &cs.cost_add(c2, &b));
        let rhs = cs.cost_add(ExtReal::convex(r, c1, c2), &cs.convex(r, &a, &b));
        if !eq(&lhs, &rhs) {
            bad.push("convex exchange");
        }
        let sum = convex_sum(cs, &[(r, a.clone()), (1.0 - r, b.clone())]).unwrap();
        if !eq(&sum, &cs.convex(r, &a, &b)) {
            bad.push("binary convex sum");
        }
        out.record(bad.is_empty(), || bad.join(", "));
    }
    out
}

pub fn random_density_map(dim: usize, rng: &mut ChaCha8Rng) -> DensityMap {
    let entries = rng.gen_range(0..=3);
    let mut m = DensityMap::empty(dim);
    let mut budget: f64 = 1.0;
    for _ in 0..entries {
        let key = vec![rng.gen_range(0..=1), rng.gen_range(-1..=2)];
        let mat = random_psd(dim, 1.0, rng);
        let tr: f64 = (0..dim).map(|i| mat[i][i].re).sum();
        let share = rng.gen_range(0.0..=budget);
        budget -= share;
        let scale = if tr > 0.0 { share / tr } else { 0.0 };
        let sub = SubDensity(nalgebra::DMatrix::from_fn(dim, dim, |i, j| mat[i][j] * Complex64::new(scale, 0.0)));
        let single = DensityMap::singleton(key, sub);
        m.add_scaled(1.0, &single);
    }
    m
}

pub fn algebra(n: usize, seed: u64) -> Vec<LawOutcome> {
    let mut rng = rng(seed);
    vec![
        axioms("ecost axioms", &ExpectedCost, n, &mut rng, &|r| ext_sample(r, false)),
        axioms("value axioms", &ExpectedValue, n, &mut rng, &|r| ext_sample(r, false)),
        axioms("wp axioms", &Probability, n, &mut rng, &|r| ext_sample(r, true)),
        axioms("density-map axioms", &DensityMaps { dim: 2 }, n, &mut rng, &|r| random_density_map(2, r)),
        axioms("density-map axioms (dim 4)", &DensityMaps { dim: 4 }, n, &mut rng, &|r| random_density_map(4, r)),
    ]
}
