//! Upper-invariant and summary checking.
//!
//! Invariant files hold s-expression forms:
//!
//! ```text
//! (post <expectation>)                      ; defaults to 0
//! (invariant <loop label> <expectation>)    ; may use (kappa ...) placeholders
//! (summary <name> (cost c) (outcome p ((x 1))) ... (le))
//! ```
//!
//! Checks are pointwise on a state suite, so a pass means "holds on the
//! suite", never a proof.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::code::{Code, Node, NodeId};
use crate::cost::{ExpectedCost, ExtReal, FixpointCfg};
use crate::error::{Error, Result};
use crate::expect::suite::sparse_random_qvec;
use crate::expect::{classical_check, CompiledExpectation, Expectation, SExp, StateSuite};
use crate::lang::ast::{is_generated_name, BinOp, Expr, VarKind};
use crate::qet::{wp_eval_with, with_big_stack, Hooks, KFn, WpStatus};
use crate::state::{MachineState, StateKey};

/// A classical abstraction of a statement: `qect[stm]{κ} = c + Σ pᵢ·κ[uᵢ]`
/// (or `≤` when `le` is set).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub cost: f64,
    pub outcomes: Vec<(f64, Vec<(String, i64)>)>,
    pub le: bool,
}

impl Summary {
    pub fn validate(&self) -> Result<()> {
        if !(self.cost >= 0.0) {
            return Err(Error::Invalid(format!("summary `{}` has negative cost", self.name)));
        }
        let total: f64 = self.outcomes.iter().map(|o| o.0).sum();
        if self.outcomes.iter().any(|o| !(o.0 >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Weights(format!(
                "summary `{}` outcome probabilities sum to {total}",
                self.name
            )));
        }
        Ok(())
    }
}

/// Contents of an invariant/summary file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantFile {
    pub post: Option<Expectation>,
    pub invariants: IndexMap<String, Expectation>,
    pub summaries: IndexMap<String, Summary>,
}

fn form_err(s: &SExp, msg: impl Into<String>) -> Error {
    Error::syntax(s.span(), msg)
}

fn num(s: &SExp) -> Result<f64> {
    s.atom()
        .and_then(crate::lang::matrix::parse_real)
        .ok_or_else(|| form_err(s, "expected a number"))
}

fn updates(s: &SExp) -> Result<Vec<(String, i64)>> {
    let items = s.list().ok_or_else(|| form_err(s, "expected an update list"))?;
    items
        .iter()
        .map(|u| {
            let p = u.list().filter(|p| p.len() == 2).ok_or_else(|| form_err(u, "expected `(var value)`"))?;
            let v = p[0].atom().ok_or_else(|| form_err(&p[0], "expected a variable"))?;
            let c = match p[1].atom() {
                Some("true") => 1,
                Some("false") => 0,
                Some(a) => a.parse().map_err(|_| form_err(&p[1], "expected an integer"))?,
                None => return Err(form_err(&p[1], "expected a value")),
            };
            Ok((v.to_string(), c))
        })
        .collect()
}

impl InvariantFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = InvariantFile::default();
        for form in SExp::parse_all(text)? {
            let items = form.list().ok_or_else(|| form_err(&form, "expected a form"))?;
            match form.head() {
                Some("post") => {
                    if items.len() != 2 {
                        return Err(form_err(&form, "`post` takes one expectation"));
                    }
                    out.post = Some(Expectation::from_sexp(&items[1])?);
                }
                Some("invariant") => {
                    let label = items
                        .get(1)
                        .and_then(|l| l.atom())
                        .ok_or_else(|| form_err(&form, "`invariant` needs a loop label"))?;
                    let e = items.get(2).ok_or_else(|| form_err(&form, "`invariant` needs an expectation"))?;
                    if items.len() != 3 {
                        return Err(form_err(&form, "`invariant` takes a label and one expectation"));
                    }
                    if out.invariants.insert(label.to_string(), Expectation::from_sexp(e)?).is_some() {
                        return Err(Error::Duplicate {
                            name: label.to_string(),
                            span: form.span(),
                        });
                    }
                }
                Some("summary") => {
                    let name = items
                        .get(1)
                        .and_then(|l| l.atom())
                        .ok_or_else(|| form_err(&form, "`summary` needs a name"))?;
                    let mut sm = Summary {
                        name: name.to_string(),
                        cost: 0.0,
                        outcomes: Vec::new(),
                        le: false,
                    };
                    for part in &items[2..] {
                        let p = part.list().unwrap_or(&[]);
                        match part.head() {
                            Some("cost") if p.len() == 2 => sm.cost = num(&p[1])?,
                            Some("outcome") if p.len() == 3 => sm.outcomes.push((num(&p[1])?, updates(&p[2])?)),
                            Some("le") if p.len() == 1 => sm.le = true,
                            Some("note") => {}
                            _ => return Err(form_err(part, "expected (cost c), (outcome p (...)), (le) or (note ...)")),
                        }
                    }
                    sm.validate()?;
                    if out.summaries.insert(name.to_string(), sm).is_some() {
                        return Err(Error::Duplicate {
                            name: name.to_string(),
                            span: form.span(),
                        });
                    }
                }
                Some("note") => {}
                _ => return Err(form_err(&form, "expected post, invariant, summary or note")),
            }
        }
        Ok(out)
    }

    pub fn post_or_zero(&self) -> Expectation {
        self.post.clone().unwrap_or_else(Expectation::zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of one pointwise check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub subject: String,
    pub kind: &'static str,
    pub verdict: Verdict,
    /// Relies on other certified invariants or summaries.
    pub conditional: bool,
    pub suite_size: usize,
    pub seed: u64,
    pub basis_size: usize,
    /// Per state: smallest `rhs − lhs` over premises and basis elements.
    pub residuals: Vec<f64>,
    pub worst_residual: f64,
    pub worst_state: Option<usize>,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(subject: String, kind: &'static str, suite: &StateSuite, basis_size: usize, residuals: Vec<f64>, tol: f64) -> Self {
        let (worst_state, worst_residual) = residuals
            .iter()
            .enumerate()
            .fold((None, f64::INFINITY), |(wi, wv), (i, v)| if *v < wv { (Some(i), *v) } else { (wi, wv) });
        let verdict = if worst_residual >= -tol { Verdict::Pass } else { Verdict::Fail };
        CheckReport {
            subject,
            kind,
            verdict,
            conditional: false,
            suite_size: suite.len(),
            seed: suite.seed,
            basis_size,
            residuals,
            worst_residual,
            worst_state,
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// "Pass on suite (N states, seed S)" or "Fail ...".
    pub fn headline(&self) -> String {
        let cond = if self.conditional { ", conditional" } else { "" };
        match self.verdict {
            Verdict::Pass => format!(
                "{} {}: Pass on suite ({} states, seed {}{cond})",
                self.kind, self.subject, self.suite_size, self.seed
            ),
            Verdict::Fail => format!(
                "{} {}: Fail (worst residual {:.6e} at state {}, suite {} states, seed {})",
                self.kind,
                self.subject,
                self.worst_residual,
                self.worst_state.map_or("-".into(), |i| i.to_string()),
                self.suite_size,
                self.seed
            ),
        }
    }
}

/// Scaled slack `rhs − lhs` with relative tolerance handling for large values.
fn slack(rhs: f64, lhs: f64) -> f64 {
    if rhs.is_infinite() {
        return f64::INFINITY;
    }
    if lhs.is_infinite() {
        return f64::NEG_INFINITY;
    }
    (rhs - lhs) / rhs.abs().max(1.0)
}

/// Check parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOpts {
    pub tol: f64,
    pub seed: u64,
    /// Random states added to the fixtures.
    pub random_states: usize,
    /// Quantum states probed per classicality guard: random basis states
    /// with one register in random superposition.
    pub guard_samples: usize,
}

impl Default for CheckOpts {
    fn default() -> Self {
        CheckOpts {
            tol: 1e-9,
            seed: 0,
            random_states: 200,
            guard_samples: 2,
        }
    }
}

/// Functions a classical continuation may observe at a statement: the
/// constant 1, Boolean indicators and their negations, pairwise products
/// of Boolean indicators, and clamped integer forms. Generated names are
/// excluded.
pub fn classical_basis(code: &Code) -> Vec<Expectation> {
    let mut basis = vec![Expectation::constant(1.0)];
    let mut bools = Vec::new();
    for (_, name, kind) in code.layout.user_vars() {
        let v = Expr::var(name);
        match kind {
            VarKind::Bool => {
                basis.push(Expectation::Ind(v.clone()));
                basis.push(Expectation::Ind(Expr::not(v.clone())));
                bools.push(v);
            }
            VarKind::Int => {
                basis.push(Expectation::Arith(v.clone()));
                basis.push(Expectation::Arith(Expr::bin(BinOp::Sub, Expr::Int(0), v.clone())));
                basis.push(Expectation::Ind(Expr::bin(BinOp::Eq, v.clone(), Expr::Int(0))));
                basis.push(Expectation::Ind(Expr::bin(BinOp::Lt, v.clone(), Expr::Int(0))));
            }
            VarKind::Qreg(_) => {}
        }
    }
    for i in 0..bools.len() {
        for j in i + 1..bools.len() {
            basis.push(Expectation::mul(
                Expectation::Ind(bools[i].clone()),
                Expectation::Ind(bools[j].clone()),
            ));
        }
    }
    basis
}

struct LoopInv {
    label: String,
    expr: Expectation,
    compiled: CompiledExpectation,
    parametric: bool,
    cond: crate::state::CExpr,
}

/// Hooks replacing certified loops and summarized statements.
struct CertHooks<'a> {
    loops: &'a HashMap<NodeId, LoopInv>,
    summaries: &'a HashMap<NodeId, (Summary, Vec<(usize, i64)>)>,
    certified_labels: &'a HashSet<String>,
    certified_summaries: &'a HashSet<String>,
    opts: CheckOpts,
    guard_failures: std::sync::Mutex<Vec<String>>,
}

impl CertHooks<'_> {
    fn guard(&self, code: &Code, what: &str, s: &MachineState, k: KFn<'_, ExtReal>) -> Result<()> {
        if self.opts.guard_samples == 0 {
            return Ok(());
        }
        let base = k(s)?.get();
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed ^ s.key_hash());
        for _ in 0..self.opts.guard_samples {
            let t = MachineState {
                store: s.store.clone(),
                qvec: sparse_random_qvec(&code.layout, 1, &mut rng),
            };
            let v = k(&t)?.get();
            if (v - base).abs() > 1e-9 * base.abs().max(1.0) && !(v.is_infinite() && base.is_infinite()) {
                let msg = format!("continuation of {what} depends on the quantum state ({base} vs {v})");
                self.guard_failures.lock().expect("guard log").push(msg.clone());
                return Err(Error::Refused(msg));
            }
        }
        Ok(())
    }
}

impl Hooks<ExtReal> for CertHooks<'_> {
    fn on_loop(&self, code: &Code, node: NodeId, s: &MachineState, k: KFn<'_, ExtReal>) -> Option<Result<ExtReal>> {
        let inv = self.loops.get(&node)?;
        if !self.certified_labels.contains(&inv.label) {
            return None;
        }
        Some((|| {
            if inv.parametric {
                self.guard(code, &format!("loop {}", inv.label), s, k)?;
                inv.compiled.eval_with(s, Some(&|t: &MachineState| Ok(k(t)?.get())))
            } else {
                let g = inv.compiled.eval(s)?;
                if !inv.cond.eval_bool(&s.store)? && !ExpectedCost.leq_ext(k(s)?, g) {
                    return Err(Error::Refused(format!(
                        "invariant of loop {} is below its continuation at an exit state",
                        inv.label
                    )));
                }
                Ok(g)
            }
        })())
    }

    fn on_summary(&self, code: &Code, node: NodeId, s: &MachineState, k: KFn<'_, ExtReal>) -> Option<Result<ExtReal>> {
        let (sm, _) = self.summaries.get(&node)?;
        if !self.certified_summaries.contains(&sm.name) {
            return None;
        }
        Some((|| {
            self.guard(code, &format!("summary {}", sm.name), s, k)?;
            apply_summary(&self.summaries[&node], s, k)
        })())
    }
}

trait ExtLeq {
    fn leq_ext(&self, a: ExtReal, b: ExtReal) -> bool;
}

impl ExtLeq for ExpectedCost {
    fn leq_ext(&self, a: ExtReal, b: ExtReal) -> bool {
        use crate::cost::CostStructure;
        self.leq(&a, &b)
    }
}

/// `c + Σ pᵢ·k(σ[uᵢ])`.
fn apply_summary(
    (sm, slots): &(Summary, Vec<(usize, i64)>),
    s: &MachineState,
    k: &dyn Fn(&MachineState) -> Result<ExtReal>,
) -> Result<ExtReal> {
    let mut acc = ExtReal::new(sm.cost);
    let mut offset = 0;
    for (p, ups) in &sm.outcomes {
        let mut t = s.clone();
        for (slot, v) in &slots[offset..offset + ups.len()] {
            t.store[*slot] = *v;
        }
        offset += ups.len();
        acc = acc + ExtReal::mul(*p, k(&t)?);
    }
    Ok(acc)
}

fn bind_map(bind: &[(String, String)]) -> impl Fn(&str) -> Option<String> + '_ {
    move |n: &str| bind.iter().find(|(f, _)| f == n).map(|(_, t)| t.clone())
}

/// Certification state for one program and invariant file.
pub struct Checker<'a> {
    pub code: &'a Code,
    pub file: &'a InvariantFile,
    pub suite: StateSuite,
    pub opts: CheckOpts,
    loops: HashMap<NodeId, LoopInv>,
    summaries: HashMap<NodeId, (Summary, Vec<(usize, i64)>)>,
    certified_labels: HashSet<String>,
    certified_summaries: HashSet<String>,
    post: CompiledExpectation,
}

/// Result of certifying every loop and summary of a program.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertReport {
    pub reports: Vec<CheckReport>,
    pub all_passed: bool,
}

/// Certified bound of a whole program on a set of states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub certification: CertReport,
    pub bounds: Vec<ExtReal>,
}

impl<'a> Checker<'a> {
    /// Resolves invariants and summaries against the program. The suite
    /// holds `fixtures` followed by `opts.random_states` random states.
    pub fn new(code: &'a Code, file: &'a InvariantFile, fixtures: Vec<MachineState>, opts: CheckOpts) -> Result<Self> {
        for s in &fixtures {
            s.check(&code.layout)?;
        }
        let suite = StateSuite::generate(&code.layout, fixtures, opts.random_states, opts.seed);
        let mut loops = HashMap::new();
        let mut summaries = HashMap::new();
        let mut labels_seen = HashSet::new();
        for n in code.subtree(code.root()) {
            match code.node(n) {
                Node::While { label: Some(l), cond, .. } => {
                    labels_seen.insert(l.name.clone());
                    if let Some(e) = file.invariants.get(&l.name) {
                        let mut e = e.clone();
                        e.rename(&bind_map(&l.bind));
                        let compiled = CompiledExpectation::compile(&e, &code.layout)?;
                        loops.insert(
                            n,
                            LoopInv {
                                label: l.name.clone(),
                                parametric: e.has_kappa(),
                                expr: e,
                                compiled,
                                cond: cond.clone(),
                            },
                        );
                    }
                }
                Node::Summarized { name, bind, .. } => {
                    if let Some(sm) = file.summaries.get(name) {
                        let map = bind_map(bind);
                        let mut slots = Vec::new();
                        for (_, ups) in &sm.outcomes {
                            for (v, c) in ups {
                                let target = map(v).unwrap_or_else(|| v.clone());
                                let slot = code.layout.var_slot(&target).ok_or_else(|| Error::UnknownIdent {
                                    name: target.clone(),
                                    span: code.span(n),
                                })?;
                                slots.push((slot, *c));
                            }
                        }
                        summaries.insert(n, (sm.clone(), slots));
                    }
                }
                _ => {}
            }
        }
        for label in file.invariants.keys() {
            if !labels_seen.contains(label) {
                return Err(Error::Invalid(format!("invariant for unknown loop label `{label}`")));
            }
        }
        let post = file.post_or_zero();
        if post.has_kappa() {
            return Err(Error::Expectation("post expectation cannot use (kappa)".into()));
        }
        Ok(Checker {
            code,
            file,
            post: CompiledExpectation::compile(&post, &code.layout)?,
            suite,
            opts,
            loops,
            summaries,
            certified_labels: HashSet::new(),
            certified_summaries: HashSet::new(),
        })
    }

    fn hooks(&self) -> CertHooks<'_> {
        CertHooks {
            loops: &self.loops,
            summaries: &self.summaries,
            certified_labels: &self.certified_labels,
            certified_summaries: &self.certified_summaries,
            opts: self.opts,
            guard_failures: std::sync::Mutex::new(Vec::new()),
        }
    }

    /// Exact `qect[node]{k}(σ)` with certified pieces substituted.
    fn exact(&self, hooks: &CertHooks<'_>, node: NodeId, k: &(dyn Fn(&MachineState) -> Result<ExtReal> + Sync), s: &MachineState) -> Result<ExtReal> {
        let r = wp_eval_with(self.code, &ExpectedCost, node, k, s, &FixpointCfg::default(), hooks)?;
        if r.status != WpStatus::Exact {
            return Err(Error::Refused(format!(
                "statement at {} contains a loop without a certified invariant",
                self.code.span(node)
            )));
        }
        Ok(r.value)
    }

    fn per_state<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&MachineState) -> Result<f64> + Sync,
    {
        self.suite
            .states
            .par_iter()
            .map(|s| with_big_stack(|| f(s)))
            .collect()
    }

    fn is_tail(&self, node: NodeId) -> bool {
        self.code.flatten_seq(self.code.root()).last() == Some(&node)
    }

    /// Checks the two premises of the upper-invariant law for a loop:
    /// `⟦¬b⟧·f ≤ g` and `⟦b⟧·qect[body]{g} ≤ g`. A parametric `g` is
    /// checked for every basis continuation `κ` with `f = κ`; otherwise
    /// `f` is the post expectation and the loop must be in tail position.
    pub fn check_upper_invariant(&self, node: NodeId) -> Result<CheckReport> {
        let Node::While { cond, body, .. } = self.code.node(node) else {
            return Err(Error::Invalid("not a loop".into()));
        };
        let inv = self
            .loops
            .get(&node)
            .ok_or_else(|| Error::Invalid(format!("no invariant for loop at {}", self.code.span(node))))?;
        let hooks = self.hooks();
        let layout = &self.code.layout;
        let pairs: Vec<(CompiledExpectation, CompiledExpectation)> = if inv.parametric {
            classical_basis(self.code)
                .iter()
                .map(|k| {
                    Ok((
                        CompiledExpectation::compile(k, layout)?,
                        CompiledExpectation::compile(&inv.expr.instantiate_kappa(k)?, layout)?,
                    ))
                })
                .collect::<Result<_>>()?
        } else {
            if !self.is_tail(node) {
                return Err(Error::Refused(format!(
                    "loop {} is not in tail position; its invariant must be parametric (use kappa)",
                    inv.label
                )));
            }
            vec![(self.post.clone(), inv.compiled.clone())]
        };
        let residuals = self.per_state(|s| {
            let mut worst = f64::INFINITY;
            for (f, g) in &pairs {
                let gv = g.eval(s)?.get();
                let lhs = if cond.eval_bool(&s.store)? {
                    let gk = |t: &MachineState| g.eval(t);
                    self.exact(&hooks, *body, &gk, s)?.get()
                } else {
                    f.eval(s)?.get()
                };
                worst = worst.min(slack(gv, lhs));
            }
            Ok(worst)
        })?;
        let mut r = CheckReport::new(inv.label.clone(), "invariant", &self.suite, pairs.len(), residuals, self.opts.tol);
        r.conditional = self.code.has_loop(*body) || self.code.subtree(*body).iter().any(|n| self.summaries.contains_key(n));
        if inv.parametric {
            r.notes.push("parametric in the continuation; checked over the classical basis".into());
        }
        Ok(r)
    }

    /// Checks `qect[stm]{κ} = c + Σ pᵢ·κ[uᵢ]` (or `≤`) for every basis
    /// continuation. Statements with loops need certified invariants for
    /// them and are reported as conditional.
    pub fn check_summary(&self, node: NodeId) -> Result<CheckReport> {
        let entry = self
            .summaries
            .get(&node)
            .ok_or_else(|| Error::Invalid(format!("no summary for statement at {}", self.code.span(node))))?;
        let Node::Summarized { body, .. } = self.code.node(node) else {
            unreachable!()
        };
        let derived = self.code.has_loop(*body);
        let basis: Vec<CompiledExpectation> = classical_basis(self.code)
            .iter()
            .map(|k| CompiledExpectation::compile(k, &self.code.layout))
            .collect::<Result<_>>()?;
        let hooks = self.hooks();
        let le = entry.0.le || derived;
        let residuals = self.per_state(|s| {
            let mut worst = f64::INFINITY;
            for k in &basis {
                let kf = |t: &MachineState| k.eval(t);
                let lhs = self.exact(&hooks, *body, &kf, s)?.get();
                let rhs = apply_summary(entry, s, &kf)?.get();
                let r = slack(rhs, lhs);
                worst = worst.min(if le { r } else { -r.abs() });
            }
            Ok(worst)
        })?;
        let mut r = CheckReport::new(entry.0.name.clone(), "summary", &self.suite, basis.len(), residuals, self.opts.tol);
        r.conditional = derived || self.code.subtree(*body).iter().skip(1).any(|n| self.summaries.contains_key(n));
        if derived && !entry.0.le {
            r.notes.push("statement contains loops: checked as an inequality".into());
        }
        Ok(r)
    }

    /// Certifies every summary and invariant bottom-up. Each summary name
    /// and loop label is checked once, at its first occurrence in
    /// post-order; inlined copies are renamings of it.
    pub fn certify(&mut self) -> Result<CertReport> {
        let order = post_order(self.code, self.code.root());
        let mut reports = Vec::new();
        let mut done_labels = HashSet::new();
        let mut done_summaries = HashSet::new();
        for n in order {
            if let Some(inv) = self.loops.get(&n) {
                if done_labels.insert(inv.label.clone()) {
                    let r = self.check_upper_invariant(n)?;
                    if r.passed() {
                        self.certified_labels.insert(inv.label.clone());
                    }
                    reports.push(r);
                }
            } else if let Some((sm, _)) = self.summaries.get(&n) {
                if done_summaries.insert(sm.name.clone()) {
                    let r = self.check_summary(n)?;
                    if r.passed() {
                        self.certified_summaries.insert(sm.name.clone());
                    }
                    reports.push(r);
                }
            }
        }
        let all_passed = reports.iter().all(|r| r.passed());
        Ok(CertReport { reports, all_passed })
    }

    /// Upper bound on `qect[program]{post}` at each state, composing exact
    /// evaluation with certified invariants and summaries. Requires every
    /// loop to be covered.
    pub fn bound_states(&self, states: &[MachineState]) -> Result<Vec<ExtReal>> {
        let hooks = self.hooks();
        let post = |t: &MachineState| self.post.eval(t);
        states
            .par_iter()
            .map(|s| {
                s.check(&self.code.layout)?;
                with_big_stack(|| self.exact(&hooks, self.code.root(), &post, s))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::Refused(m) if m.contains("without a certified invariant") => {
                    Error::Refused(format!("missing or failed invariant: {m}"))
                }
                other => other,
            })
    }

    pub fn certified_labels(&self) -> &HashSet<String> {
        &self.certified_labels
    }
}

fn post_order(code: &Code, root: NodeId) -> Vec<NodeId> {
    let mut out = Vec::new();
    fn go(code: &Code, n: NodeId, out: &mut Vec<NodeId>) {
        for c in code.children(n) {
            go(code, c, out);
        }
        out.push(n);
    }
    go(code, root, &mut out);
    out
}

/// Certifies all invariants and summaries, then bounds the program at `states`.
pub fn bound_whole_program(
    code: &Code,
    file: &InvariantFile,
    states: &[MachineState],
    opts: CheckOpts,
) -> Result<BoundReport> {
    let mut ch = Checker::new(code, file, states.to_vec(), opts)?;
    let certification = ch.certify()?;
    if !certification.all_passed {
        return Ok(BoundReport {
            certification,
            bounds: Vec::new(),
        });
    }
    let bounds = ch.bound_states(states)?;
    Ok(BoundReport { certification, bounds })
}

/// Distinct classical keys, used to spot-check determinism of reports.
pub fn suite_keys(suite: &StateSuite) -> Vec<StateKey> {
    suite.states.iter().map(|s| s.key()).collect()
}

/// True iff every summary and invariant in the file is classical where it
/// has to be: summaries apply only to classical continuations.
pub fn classical_summaries_only(e: &Expectation) -> bool {
    classical_check(e)
}

/// Checks that generated names do not appear in user-facing expectations.
pub fn mentions_generated(e: &Expectation) -> bool {
    e.mentioned_names().iter().any(|n| is_generated_name(n))
}
