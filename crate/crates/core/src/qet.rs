//! Backward evaluation of the quantum expectation transformer.
//!
//! `qet[stm]{f}(σ)` is evaluated by symbolic execution of `stm` from `σ`.
//! Loop-free code yields a finite expression over the cost structure.
//! Each loop entered at a state becomes an unknown `X(loop, k, σ)` whose
//! defining expression is `qet[body]{X}(σ) +_{⟦b⟧} k(σ)`; the system is
//! solved by Kleene iteration from ⊥. Unknowns are discovered lazily, one
//! back-edge per round, so the root value after round `n` never exceeds
//! the `n`-th Kleene iterate and infinite state spaces stay tractable.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::code::{Code, Node, NodeId};
use crate::cost::{
    kleene_sup_pending, Approximant, CostStructure, DensityMap, DensityMaps, ExtReal, FixpointCfg, Probability,
    SubDensity,
};
use crate::error::{Error, Result};
use crate::expect::{CompiledExpectation, Expectation};
use crate::pars::{step, Config, ConfigKey};
use crate::state::{measure, MachineState, StateKey};

/// Largest quantum dimension for density-matrix evaluation.
pub const DENOT_DIM_CAP: u64 = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WpStatus {
    /// No loop was iterated: the value is exact.
    Exact,
    /// Iteration converged numerically; the value is a lower bound.
    ConvergedLowerBound,
    /// The iteration cap was hit; the value is a lower bound.
    IterationCapLowerBound,
    /// Iterates crossed the divergence ceiling.
    Divergent,
}

impl WpStatus {
    pub fn is_lower_bound(self) -> bool {
        !matches!(self, WpStatus::Exact)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WpResult<E> {
    pub value: E,
    pub status: WpStatus,
    pub iterations: usize,
    /// Number of (loop, continuation, state) unknowns created.
    pub unknowns: usize,
    /// Mass still at ⊥ in the final iterate.
    pub pending: f64,
}

/// Continuation: an evaluable function from states to the cost structure.
pub type ContFn<'a, E> = &'a (dyn Fn(&MachineState) -> Result<E> + Sync);

/// Evaluates the continuation reached after the hooked statement.
pub type KFn<'a, E> = &'a dyn Fn(&MachineState) -> Result<E>;

/// Lets callers replace loops or summarized statements by known values.
pub trait Hooks<E>: Sync {
    /// Value of `qet[loop]{k}(σ)` if the caller has one.
    fn on_loop(&self, _code: &Code, _node: NodeId, _s: &MachineState, _k: KFn<'_, E>) -> Option<Result<E>> {
        None
    }

    /// Value of `qet[@summary stm]{k}(σ)` if the caller has one.
    fn on_summary(&self, _code: &Code, _node: NodeId, _s: &MachineState, _k: KFn<'_, E>) -> Option<Result<E>> {
        None
    }
}

/// Hooks that never fire.
pub struct NoHooks;

impl<E> Hooks<E> for NoHooks {}

type ContId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ContNode {
    Top,
    Then(NodeId, ContId),
    LoopHead(NodeId, ContId),
}

const TOP: ContId = 0;

#[derive(Debug, Clone)]
enum Ex<E> {
    Const(E),
    Var(u32),
    Cost(ExtReal, Box<Ex<E>>),
    Convex(f64, Box<Ex<E>>, Box<Ex<E>>),
}

struct Unknown<E> {
    cont: ContId,
    state: MachineState,
    expr: Option<Ex<E>>,
}

struct Engine<'a, C: CostStructure> {
    code: &'a Code,
    cs: &'a C,
    f: ContFn<'a, C::Elem>,
    hooks: &'a dyn Hooks<C::Elem>,
    conts: RefCell<(Vec<ContNode>, HashMap<ContNode, ContId>)>,
    index: RefCell<HashMap<(ContId, StateKey), u32>>,
    unknowns: RefCell<Vec<Unknown<C::Elem>>>,
    exact_memo: RefCell<HashMap<(ContId, StateKey), C::Elem>>,
}

impl<'a, C: CostStructure> Engine<'a, C> {
    fn new(code: &'a Code, cs: &'a C, f: ContFn<'a, C::Elem>, hooks: &'a dyn Hooks<C::Elem>) -> Self {
        Engine {
            code,
            cs,
            f,
            hooks,
            conts: RefCell::new((vec![ContNode::Top], [(ContNode::Top, TOP)].into())),
            index: RefCell::new(HashMap::new()),
            unknowns: RefCell::new(Vec::new()),
            exact_memo: RefCell::new(HashMap::new()),
        }
    }

    fn intern(&self, c: ContNode) -> ContId {
        let mut t = self.conts.borrow_mut();
        if let Some(id) = t.1.get(&c) {
            return *id;
        }
        let id = t.0.len() as ContId;
        t.0.push(c);
        t.1.insert(c, id);
        id
    }

    fn cont(&self, id: ContId) -> ContNode {
        self.conts.borrow().0[id as usize]
    }

    fn unknown(&self, cont: ContId, s: &MachineState) -> u32 {
        let key = (cont, s.key());
        if let Some(i) = self.index.borrow().get(&key) {
            return *i;
        }
        let mut us = self.unknowns.borrow_mut();
        let i = us.len() as u32;
        us.push(Unknown {
            cont,
            state: s.clone(),
            expr: None,
        });
        self.index.borrow_mut().insert(key, i);
        i
    }

    fn build_cont(&self, k: ContId, s: &MachineState) -> Result<Ex<C::Elem>> {
        match self.cont(k) {
            ContNode::Top => Ok(Ex::Const((self.f)(s)?)),
            ContNode::Then(n, k2) => self.build_stmt(n, k2, s),
            ContNode::LoopHead(..) => Ok(Ex::Var(self.unknown(k, s))),
        }
    }

    /// Evaluates continuation `k` at `s`, which must not need any unknown.
    fn exact_cont(&self, k: ContId, s: &MachineState) -> Result<C::Elem> {
        let key = (k, s.key());
        if let Some(v) = self.exact_memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let ex = self.build_cont(k, s)?;
        let v = self.eval_closed(&ex)?;
        self.exact_memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    fn eval_closed(&self, ex: &Ex<C::Elem>) -> Result<C::Elem> {
        Ok(match ex {
            Ex::Const(e) => e.clone(),
            Ex::Var(_) => {
                return Err(Error::Refused(
                    "a continuation used by a hook contains a loop without invariant".into(),
                ))
            }
            Ex::Cost(c, a) => self.cs.cost_add(*c, &self.eval_closed(a)?),
            Ex::Convex(r, a, b) => self.cs.convex(*r, &self.eval_closed(a)?, &self.eval_closed(b)?),
        })
    }

    fn build_stmt(&self, n: NodeId, k: ContId, s: &MachineState) -> Result<Ex<C::Elem>> {
        let code = self.code;
        match code.node(n) {
            Node::Skip => self.build_cont(k, s),
            Node::Assign { slot, expr } => self.build_cont(k, &s.with_var(*slot, expr.eval(&s.store)?)),
            Node::Apply { gate, regs, .. } => {
                let t = MachineState {
                    store: s.store.clone(),
                    qvec: gate.apply(&code.layout, regs, &s.qvec)?,
                };
                self.build_cont(k, &t)
            }
            Node::Measure { slot, reg, zero_test } => {
                let bs = measure(&code.layout, *reg, *slot, *zero_test, s)?;
                match bs.as_slice() {
                    [one] => self.build_cont(k, &one.state),
                    [zero, one] => Ok(Ex::Convex(
                        zero.prob,
                        Box::new(self.build_cont(k, &zero.state)?),
                        Box::new(self.build_cont(k, &one.state)?),
                    )),
                    _ => unreachable!("measurement has one or two branches"),
                }
            }
            Node::Consume(e) => {
                let c = e.eval(&s.store)?.max(0) as f64;
                Ok(Ex::Cost(ExtReal::new(c), Box::new(self.build_cont(k, s)?)))
            }
            Node::Seq(a, b) => {
                let k2 = self.intern(ContNode::Then(*b, k));
                self.build_stmt(*a, k2, s)
            }
            Node::If { cond, then, els } => {
                let pick = if cond.eval_bool(&s.store)? { *then } else { *els };
                self.build_stmt(pick, k, s)
            }
            Node::Summarized { body, .. } => {
                let kf = |t: &MachineState| self.exact_cont(k, t);
                match self.hooks.on_summary(code, n, s, &kf) {
                    Some(v) => Ok(Ex::Const(v?)),
                    None => self.build_stmt(*body, k, s),
                }
            }
            Node::While { .. } => {
                let kf = |t: &MachineState| self.exact_cont(k, t);
                match self.hooks.on_loop(code, n, s, &kf) {
                    Some(v) => Ok(Ex::Const(v?)),
                    None => {
                        let head = self.intern(ContNode::LoopHead(n, k));
                        Ok(Ex::Var(self.unknown(head, s)))
                    }
                }
            }
        }
    }

    /// Defining expression of an unknown.
    fn build_unknown(&self, cont: ContId, s: &MachineState) -> Result<Ex<C::Elem>> {
        let ContNode::LoopHead(n, k) = self.cont(cont) else {
            unreachable!("unknowns sit at loop heads")
        };
        let Node::While { cond, body, .. } = self.code.node(n) else {
            unreachable!()
        };
        if cond.eval_bool(&s.store)? {
            self.build_stmt(*body, cont, s)
        } else {
            self.build_cont(k, s)
        }
    }

    fn eval(&self, ex: &Ex<C::Elem>, vals: &[(C::Elem, f64)]) -> (C::Elem, f64) {
        match ex {
            Ex::Const(e) => (e.clone(), 0.0),
            Ex::Var(i) => vals
                .get(*i as usize)
                .cloned()
                .unwrap_or_else(|| (self.cs.bot(), 1.0)),
            Ex::Cost(c, a) => {
                let (v, p) = self.eval(a, vals);
                (self.cs.cost_add(*c, &v), p)
            }
            Ex::Convex(r, a, b) => {
                let (va, pa) = self.eval(a, vals);
                let (vb, pb) = self.eval(b, vals);
                (self.cs.convex(*r, &va, &vb), r * pa + (1.0 - r) * pb)
            }
        }
    }

    fn solve(&self, root: NodeId, s: &MachineState, cfg: &FixpointCfg) -> Result<WpResult<C::Elem>> {
        cfg.validate()?;
        let root_ex = self.build_stmt(root, TOP, s)?;
        if self.unknowns.borrow().is_empty() {
            let (value, _) = self.eval(&root_ex, &[]);
            return Ok(WpResult {
                value,
                status: WpStatus::Exact,
                iterations: 0,
                unknowns: 0,
                pending: 0.0,
            });
        }
        let mut vals: Vec<(C::Elem, f64)> = Vec::new();
        let mut last_pending = 1.0;
        let rounds = std::iter::from_fn(|| {
            Some((|| -> Result<Approximant<C::Elem>> {
                // Build every unknown discovered in the previous round.
                let todo: Vec<(usize, ContId, MachineState)> = self
                    .unknowns
                    .borrow()
                    .iter()
                    .enumerate()
                    .filter(|(_, u)| u.expr.is_none())
                    .map(|(i, u)| (i, u.cont, u.state.clone()))
                    .collect();
                for (i, cont, st) in todo {
                    let ex = self.build_unknown(cont, &st)?;
                    self.unknowns.borrow_mut()[i].expr = Some(ex);
                }
                let us = self.unknowns.borrow();
                let next: Vec<(C::Elem, f64)> = us
                    .iter()
                    .map(|u| match &u.expr {
                        Some(ex) => self.eval(ex, &vals),
                        None => (self.cs.bot(), 1.0),
                    })
                    .collect();
                for (i, (old, new)) in vals.iter().zip(&next).enumerate() {
                    if !self.cs.leq(&old.0, &new.0) {
                        return Err(Error::ChainViolation(format!(
                            "loop iterate decreased at unknown {i}: {:?} then {:?}",
                            old.0, new.0
                        )));
                    }
                }
                drop(us);
                vals = next;
                let (value, pending) = self.eval(&root_ex, &vals);
                last_pending = pending;
                Ok(Approximant { value, pending })
            })())
        });
        let out = kleene_sup_pending(self.cs, rounds, cfg)?;
        let status = if out.divergent {
            WpStatus::Divergent
        } else if out.converged {
            WpStatus::ConvergedLowerBound
        } else {
            WpStatus::IterationCapLowerBound
        };
        Ok(WpResult {
            value: out.value,
            status,
            iterations: out.iterations,
            unknowns: self.unknowns.borrow().len(),
            pending: if out.divergent { 0.0 } else { last_pending },
        })
    }
}

/// Runs `f` on a thread with a large stack; evaluation recurses along
/// execution paths.
pub fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|scope| {
        let h = std::thread::Builder::new()
            .stack_size(1 << 29)
            .spawn_scoped(scope, f)
            .expect("spawn evaluation thread");
        match h.join() {
            Ok(v) => v,
            Err(e) => std::panic::resume_unwind(e),
        }
    })
}

/// `qet[stm]{k}(σ)` for a general continuation and hooks. Runs on the
/// calling thread.
pub fn wp_eval_with<C: CostStructure>(
    code: &Code,
    cs: &C,
    node: NodeId,
    k: ContFn<'_, C::Elem>,
    s: &MachineState,
    cfg: &FixpointCfg,
    hooks: &dyn Hooks<C::Elem>,
) -> Result<WpResult<C::Elem>> {
    s.check(&code.layout)?;
    Engine::new(code, cs, k, hooks).solve(node, s, cfg)
}

/// Compiles an expectation into a continuation over a real-valued structure.
fn real_cont(code: &Code, f: &Expectation, unit: bool) -> Result<impl Fn(&MachineState) -> Result<ExtReal> + Sync> {
    if f.has_kappa() {
        return Err(Error::Expectation("continuation placeholder outside an invariant".into()));
    }
    let c = CompiledExpectation::compile(f, &code.layout)?;
    Ok(move |s: &MachineState| {
        let v = c.eval(s)?;
        if unit && v.get() > 1.0 + 1e-9 {
            return Err(Error::Expectation(format!("probability expectation takes value {v} > 1")));
        }
        Ok(v)
    })
}

/// `qet[stm]{f}(σ)` over a real-valued cost structure with a DSL
/// expectation. Iterates loops per `cfg`.
pub fn wp_eval<C: CostStructure<Elem = ExtReal>>(
    code: &Code,
    cs: &C,
    node: NodeId,
    f: &Expectation,
    s: &MachineState,
    cfg: &FixpointCfg,
) -> Result<WpResult<ExtReal>> {
    let unit = cs.name() == Probability.name();
    let k = real_cont(code, f, unit)?;
    with_big_stack(|| wp_eval_with(code, cs, node, &k, s, cfg, &NoHooks))
}

/// The Appendix-B approximant `QET^(n){f}` of a configuration: ⊥ at
/// `n = 0`, `f(σ)` on terminal configurations, and `c +̂ Σ p·QET^(n−1)`
/// over one forward step otherwise.
pub fn wp_step_indexed<C: CostStructure>(
    code: &Code,
    cs: &C,
    cfg0: &Config,
    f: ContFn<'_, C::Elem>,
    n: usize,
) -> Result<C::Elem> {
    fn go<C: CostStructure>(
        code: &Code,
        cs: &C,
        c: &Config,
        f: ContFn<'_, C::Elem>,
        n: usize,
        memo: &mut HashMap<(ConfigKey, usize), C::Elem>,
    ) -> Result<C::Elem> {
        if n == 0 {
            return Ok(cs.bot());
        }
        if let Config::Terminal(s) = c {
            return f(s);
        }
        let key = (c.key(), n);
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let (cost, succ) = step(code, c)?;
        let mut pairs = Vec::with_capacity(succ.len());
        for (p, nc) in &succ {
            pairs.push((*p, go(code, cs, nc, f, n - 1, memo)?));
        }
        let v = cs.cost_add(ExtReal::new(cost), &crate::cost::convex_sum(cs, &pairs)?);
        memo.insert(key, v.clone());
        Ok(v)
    }
    with_big_stack(|| go(code, cs, cfg0, f, n, &mut HashMap::new()))
}

/// Step-indexed approximant for a DSL expectation over a real-valued structure.
pub fn wp_step_indexed_expect<C: CostStructure<Elem = ExtReal>>(
    code: &Code,
    cs: &C,
    cfg0: &Config,
    f: &Expectation,
    n: usize,
) -> Result<ExtReal> {
    let k = real_cont(code, f, false)?;
    wp_step_indexed(code, cs, cfg0, &k, n)
}

/// The continuation `h(s, φ) = {s ↦ |φ⟩⟨φ|}` of the denotational semantics.
pub fn denot_unit(dim: usize) -> impl Fn(&MachineState) -> Result<DensityMap> + Sync {
    move |s: &MachineState| Ok(DensityMap::singleton(s.store.clone(), SubDensity::pure(&s.qvec, dim)))
}

/// Density-map structure for a program, refusing large state spaces.
pub fn denot_structure(code: &Code) -> Result<DensityMaps> {
    let dim = code.layout.dim();
    if dim > DENOT_DIM_CAP {
        return Err(Error::Dimension(format!(
            "quantum dimension {dim} exceeds the density-matrix cap {DENOT_DIM_CAP}"
        )));
    }
    Ok(DensityMaps { dim: dim as usize })
}

/// Denotation `⟦stm, σ⟧` as a density map, by Kleene iteration.
pub fn wp_denotational(code: &Code, node: NodeId, s: &MachineState, cfg: &FixpointCfg) -> Result<WpResult<DensityMap>> {
    let cs = denot_structure(code)?;
    let h = denot_unit(cs.dim);
    with_big_stack(|| wp_eval_with(code, &cs, node, &h, s, cfg, &NoHooks))
}

/// Evaluates `wp_eval` over many states in parallel; results are in state order.
pub fn wp_eval_many<C: CostStructure<Elem = ExtReal>>(
    code: &Code,
    cs: &C,
    node: NodeId,
    f: &Expectation,
    states: &[MachineState],
    cfg: &FixpointCfg,
) -> Result<Vec<WpResult<ExtReal>>> {
    let k = Arc::new(real_cont(code, f, cs.name() == Probability.name())?);
    states
        .par_iter()
        .map(|s| with_big_stack(|| wp_eval_with(code, cs, node, &*k, s, cfg, &NoHooks)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{ExpectedCost, ExpectedValue};
    use crate::expect::parse_expectation;
    use crate::state::QVec;
    use num_complex::Complex64;

    const CT: &str = "bool x; qreg q[2]; while (x) { q *= H; x = meas(q); consume(1) }";

    fn ct_state(a: Complex64, b: Complex64) -> MachineState {
        MachineState {
            store: vec![1],
            qvec: QVec::from_dense(&[a, b]),
        }
    }

    #[test]
    fn loop_free_clauses_are_exact() {
        let code = Code::compile("bool x; int t; qreg q[2]; t = 3; consume(t + 1); q *= H; x = meas(q)").unwrap();
        let f = parse_expectation("(add (arith t) (scale 10 (ind x)))").unwrap();
        let s = MachineState::zero(&code.layout);
        let r = wp_eval(&code, &ExpectedCost, code.root(), &f, &s, &FixpointCfg::default()).unwrap();
        assert_eq!(r.status, WpStatus::Exact);
        assert!((r.value.get() - (4.0 + 3.0 + 5.0)).abs() < 1e-12);
        let r = wp_eval(&code, &ExpectedValue, code.root(), &f, &s, &FixpointCfg::default()).unwrap();
        assert!((r.value.get() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn coin_toss_cost() {
        let code = Code::compile(CT).unwrap();
        let (a, b) = (Complex64::new(0.6, 0.0), Complex64::new(0.0, -0.8));
        let r = wp_eval(
            &code,
            &ExpectedCost,
            code.root(),
            &Expectation::zero(),
            &ct_state(a, b),
            &FixpointCfg::default(),
        )
        .unwrap();
        assert_eq!(r.status, WpStatus::ConvergedLowerBound);
        assert!((r.value.get() - (1.0 + (a - b).norm_sqr())).abs() < 1e-6);
    }

    #[test]
    fn long_deterministic_loop_does_not_stop_on_plateau() {
        let code = Code::compile("int t; while (t < 500) { t = t + 1 }; consume(t)").unwrap();
        let s = MachineState::zero(&code.layout);
        let r = wp_eval(&code, &ExpectedCost, code.root(), &Expectation::zero(), &s, &FixpointCfg::default()).unwrap();
        assert_eq!(r.status, WpStatus::ConvergedLowerBound);
        assert_eq!(r.value.get(), 500.0);
    }

    #[test]
    fn capped_and_divergent_loops() {
        let code = Code::compile("bool x; while (true) { consume(1) }").unwrap();
        let s = MachineState::zero(&code.layout);
        let cfg = FixpointCfg {
            max_iter: 50,
            ..Default::default()
        };
        let r = wp_eval(&code, &ExpectedCost, code.root(), &Expectation::zero(), &s, &cfg).unwrap();
        assert_eq!(r.status, WpStatus::IterationCapLowerBound);
        assert!(r.value.get() <= 50.0);
        let cfg = FixpointCfg {
            max_iter: 100,
            ceiling: 20.0,
            ..Default::default()
        };
        let r = wp_eval(&code, &ExpectedCost, code.root(), &Expectation::zero(), &s, &cfg).unwrap();
        assert_eq!(r.status, WpStatus::Divergent);
        assert!(r.value.is_infinite());
    }

    #[test]
    fn nested_loops() {
        let code = Code::compile("int i; int j; while (i < 3) { j = 0; while (j < 2) { j = j + 1; consume(1) }; i = i + 1 }").unwrap();
        let s = MachineState::zero(&code.layout);
        let r = wp_eval(&code, &ExpectedCost, code.root(), &Expectation::zero(), &s, &FixpointCfg::default()).unwrap();
        assert_eq!(r.value.get(), 6.0);
    }

    #[test]
    fn probability_range_is_validated() {
        let code = Code::compile("bool x; skip").unwrap();
        let s = MachineState::zero(&code.layout);
        let f = Expectation::constant(2.0);
        assert!(wp_eval(&code, &Probability, code.root(), &f, &s, &FixpointCfg::default()).is_err());
    }

    #[test]
    fn step_indexed_base_cases() {
        let code = Code::compile(CT).unwrap();
        let s = ct_state(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        let c = Config::start(&code, code.root(), s.clone());
        let f = Expectation::constant(3.0);
        assert_eq!(wp_step_indexed_expect(&code, &ExpectedCost, &c, &f, 0).unwrap(), ExtReal::ZERO);
        let t = Config::Terminal(s);
        assert_eq!(wp_step_indexed_expect(&code, &ExpectedCost, &t, &f, 1).unwrap(), ExtReal::new(3.0));
    }

    #[test]
    fn denotation_of_flip() {
        let code = Code::compile("bool x; qreg q[2]; q *= X").unwrap();
        let s = MachineState::zero(&code.layout);
        let r = wp_denotational(&code, code.root(), &s, &FixpointCfg::default()).unwrap();
        let m = r.value.get(&[0]);
        assert!((m.0[(1, 1)].re - 1.0).abs() < 1e-12);
        assert!(m.0[(0, 0)].norm() < 1e-12);
    }
}
