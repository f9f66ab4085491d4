//! Forward semantics: single steps, the lifted weighted relation and the
//! step-indexed cost and normal-form approximants.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;

use crate::code::{Code, Node, NodeId};
use crate::cost::ExtReal;
use crate::error::Result;
use crate::expect::{eval_expectation, Expectation};
use crate::state::{measure, MachineState, StateKey};

pub const DEFAULT_BRANCH_CAP: usize = 1_000_000;
pub const DEFAULT_CEILING: f64 = 1e12;

/// A configuration: statement stack (top last) plus state, or a final state.
#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Running { stack: Vec<NodeId>, state: MachineState },
    Terminal(MachineState),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConfigKey {
    pub stack: Option<Vec<NodeId>>,
    pub state: StateKey,
}

impl Config {
    /// Running configuration for `stack` with sequences and summary
    /// annotations unfolded; these carry no step of their own.
    pub fn running(code: &Code, mut stack: Vec<NodeId>, state: MachineState) -> Config {
        normalize(code, &mut stack);
        if stack.is_empty() {
            Config::Terminal(state)
        } else {
            Config::Running { stack, state }
        }
    }

    pub fn start(code: &Code, node: NodeId, state: MachineState) -> Config {
        Config::running(code, vec![node], state)
    }

    pub fn state(&self) -> &MachineState {
        match self {
            Config::Running { state, .. } | Config::Terminal(state) => state,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Config::Terminal(_))
    }

    pub fn key(&self) -> ConfigKey {
        match self {
            Config::Running { stack, state } => ConfigKey {
                stack: Some(stack.clone()),
                state: state.key(),
            },
            Config::Terminal(s) => ConfigKey {
                stack: None,
                state: s.key(),
            },
        }
    }
}

fn normalize(code: &Code, stack: &mut Vec<NodeId>) {
    while let Some(&top) = stack.last() {
        match code.node(top) {
            Node::Seq(a, b) => {
                stack.pop();
                stack.push(*b);
                stack.push(*a);
            }
            Node::Summarized { body, .. } => {
                stack.pop();
                stack.push(*body);
            }
            _ => return,
        }
    }
}

/// Weighted list of configurations.
pub type SubDist = Vec<(f64, Config)>;

/// One reduction step of a running configuration: its cost and successor
/// distribution. Terminal configurations are returned unchanged at cost 0.
pub fn step(code: &Code, cfg: &Config) -> Result<(f64, SubDist)> {
    let Config::Running { stack, state } = cfg else {
        return Ok((0.0, vec![(1.0, cfg.clone())]));
    };
    let top = *stack.last().expect("running configurations are non-empty");
    let mut rest = stack.clone();
    rest.pop();
    let next = |rest: Vec<NodeId>, s: MachineState| Config::running(code, rest, s);
    Ok(match code.node(top) {
        Node::Skip => (0.0, vec![(1.0, next(rest, state.clone()))]),
        Node::Assign { slot, expr } => {
            let v = expr.eval(&state.store)?;
            (0.0, vec![(1.0, next(rest, state.with_var(*slot, v)))])
        }
        Node::Apply { gate, regs, .. } => {
            let qvec = gate.apply(&code.layout, regs, &state.qvec)?;
            let s = MachineState {
                store: state.store.clone(),
                qvec,
            };
            (0.0, vec![(1.0, next(rest, s))])
        }
        Node::Measure { slot, reg, zero_test } => {
            let branches = measure(&code.layout, *reg, *slot, *zero_test, state)?;
            let out = branches
                .into_iter()
                .map(|b| (b.prob, next(rest.clone(), b.state)))
                .collect();
            (0.0, out)
        }
        Node::Consume(e) => {
            let v = e.eval(&state.store)?;
            (v.max(0) as f64, vec![(1.0, next(rest, state.clone()))])
        }
        Node::If { cond, then, els } => {
            let pick = if cond.eval_bool(&state.store)? { *then } else { *els };
            rest.push(pick);
            (0.0, vec![(1.0, next(rest, state.clone()))])
        }
        Node::While { cond, body, .. } => {
            if cond.eval_bool(&state.store)? {
                rest.push(top);
                rest.push(*body);
            }
            (0.0, vec![(1.0, next(rest, state.clone()))])
        }
        Node::Seq(..) | Node::Summarized { .. } => unreachable!("normalized away"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub dropped_mass: f64,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub steps: usize,
    /// Expected cost accumulated over the steps (∞ past the ceiling).
    pub cost: ExtReal,
    pub terminal: Vec<(f64, MachineState)>,
    pub running: SubDist,
    pub terminal_mass: f64,
    pub residual_mass: f64,
    pub truncation: Option<Truncation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpandOpts {
    pub branch_cap: usize,
    pub ceiling: f64,
}

impl Default for ExpandOpts {
    fn default() -> Self {
        ExpandOpts {
            branch_cap: DEFAULT_BRANCH_CAP,
            ceiling: DEFAULT_CEILING,
        }
    }
}

fn merge_into(map: &mut IndexMap<ConfigKey, (f64, Config)>, w: f64, c: Config) {
    map.entry(c.key()).and_modify(|e| e.0 += w).or_insert((w, c));
}

/// Applies the lifted relation `n` times. Terminal configurations are
/// frozen; equal configurations are merged; the running support is capped
/// at `branch_cap` by dropping the lightest branches (reported).
pub fn expand(code: &Code, d: SubDist, n: usize, opts: &ExpandOpts) -> Result<ExpansionReport> {
    let mut terminal: IndexMap<ConfigKey, (f64, Config)> = IndexMap::new();
    let mut running: IndexMap<ConfigKey, (f64, Config)> = IndexMap::new();
    for (w, c) in d {
        if c.is_terminal() {
            merge_into(&mut terminal, w, c);
        } else {
            merge_into(&mut running, w, c);
        }
    }
    let mut cost = 0.0f64;
    let mut truncation: Option<Truncation> = None;
    for _ in 0..n {
        if running.is_empty() {
            break;
        }
        let current: Vec<(f64, Config)> = running.drain(..).map(|(_, v)| v).collect();
        let stepped: Vec<Result<(f64, SubDist)>> = if current.len() > 64 {
            current.par_iter().map(|(_, c)| step(code, c)).collect()
        } else {
            current.iter().map(|(_, c)| step(code, c)).collect()
        };
        for ((w, _), res) in current.iter().zip(stepped) {
            let (c, succ) = res?;
            cost += w * c;
            for (p, nc) in succ {
                if nc.is_terminal() {
                    merge_into(&mut terminal, w * p, nc);
                } else {
                    merge_into(&mut running, w * p, nc);
                }
            }
        }
        if running.len() > opts.branch_cap {
            let mut entries: Vec<_> = running.drain(..).collect();
            entries.sort_by(|a, b| b.1 .0.total_cmp(&a.1 .0));
            let dropped: f64 = entries[opts.branch_cap..].iter().map(|e| e.1 .0).sum();
            entries.truncate(opts.branch_cap);
            running.extend(entries);
            let t = truncation.get_or_insert(Truncation {
                dropped_mass: 0.0,
                events: 0,
            });
            t.dropped_mass += dropped;
            t.events += 1;
        }
    }
    let collect_terminal = |m: IndexMap<ConfigKey, (f64, Config)>| -> Vec<(f64, MachineState)> {
        m.into_values()
            .map(|(w, c)| match c {
                Config::Terminal(s) => (w, s),
                Config::Running { .. } => unreachable!(),
            })
            .collect()
    };
    let terminal = collect_terminal(terminal);
    let running: SubDist = running.into_values().collect();
    let terminal_mass = terminal.iter().map(|t| t.0).sum();
    let residual_mass = running.iter().map(|t| t.0).sum();
    let cost = if cost > opts.ceiling { ExtReal::INF } else { ExtReal::new(cost) };
    Ok(ExpansionReport {
        steps: n,
        cost,
        terminal,
        running,
        terminal_mass,
        residual_mass,
        truncation,
    })
}

/// `ecost^[n]` of a configuration together with the terminal mass after `n` steps.
pub fn ecost_approx(code: &Code, cfg: Config, n: usize, opts: &ExpandOpts) -> Result<(ExtReal, f64)> {
    let r = expand(code, vec![(1.0, cfg)], n, opts)?;
    Ok((r.cost, r.terminal_mass))
}

/// `nf^[n]`: the terminal part after `n − 1` steps (empty for `n = 0`).
pub fn nf_approx(code: &Code, cfg: Config, n: usize, opts: &ExpandOpts) -> Result<Vec<(f64, MachineState)>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(expand(code, vec![(1.0, cfg)], n - 1, opts)?.terminal)
}

/// Expected value of `f` over `nf^[n]`.
pub fn expected_value_approx(code: &Code, cfg: Config, f: &Expectation, n: usize, opts: &ExpandOpts) -> Result<ExtReal> {
    let nf = nf_approx(code, cfg, n, opts)?;
    let mut acc = ExtReal::ZERO;
    for (w, s) in &nf {
        acc = acc + ExtReal::mul(*w, eval_expectation(f, &code.layout, s)?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::QVec;

    const CT: &str = "bool x; qreg q[2]; while (x) { q *= H; x = meas(q); consume(1) }";

    fn ct_at_one() -> (Code, Config) {
        let code = Code::compile(CT).unwrap();
        let s = MachineState {
            store: vec![1],
            qvec: QVec::basis(1),
        };
        let c = Config::start(&code, code.root(), s);
        (code, c)
    }

    #[test]
    fn single_steps() {
        let code = Code::compile("bool x; skip").unwrap();
        let s = MachineState::zero(&code.layout);
        let (c, d) = step(&code, &Config::start(&code, code.root(), s.clone())).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(d, vec![(1.0, Config::Terminal(s.clone()))]);
        let code = Code::compile("bool x; consume(1)").unwrap();
        let (c, d) = step(&code, &Config::start(&code, code.root(), s.clone())).unwrap();
        assert_eq!(c, 1.0);
        assert!(d[0].1.is_terminal());
        let code = Code::compile("bool x; consume(0 - 4)").unwrap();
        assert_eq!(step(&code, &Config::start(&code, code.root(), s)).unwrap().0, 0.0);
    }

    #[test]
    fn coin_toss_reduction_listing() {
        let (code, c) = ct_at_one();
        let opts = ExpandOpts::default();
        let r0 = expand(&code, vec![(1.0, c.clone())], 0, &opts).unwrap();
        assert_eq!(r0.cost, ExtReal::ZERO);
        assert_eq!(r0.running.len(), 1);
        let r4 = expand(&code, vec![(1.0, c.clone())], 4, &opts).unwrap();
        assert_eq!(r4.cost, ExtReal::ONE);
        assert_eq!(r4.terminal_mass, 0.0);
        assert_eq!(r4.running.len(), 2);
        assert!(r4.running.iter().all(|(w, _)| (w - 0.5).abs() < 1e-12));
        let r8 = expand(&code, vec![(1.0, c)], 8, &opts).unwrap();
        assert!((r8.cost.get() - 1.5).abs() < 1e-12);
        assert!((r8.terminal_mass - 0.5).abs() < 1e-12);
        assert!((r8.terminal_mass + r8.residual_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diverging_program_has_empty_normal_form() {
        let code = Code::compile("bool x; while (true) { skip }").unwrap();
        let c = Config::start(&code, code.root(), MachineState::zero(&code.layout));
        let nf = nf_approx(&code, c, 50, &ExpandOpts::default()).unwrap();
        assert!(nf.is_empty());
    }

    #[test]
    fn branch_cap_is_reported() {
        let code = Code::compile("bool x; qreg a[2]; qreg b[2]; a *= H; b *= H; x = meas(a); x = meas(b); skip").unwrap();
        let c = Config::start(&code, code.root(), MachineState::zero(&code.layout));
        let opts = ExpandOpts {
            branch_cap: 1,
            ..Default::default()
        };
        let r = expand(&code, vec![(1.0, c)], 5, &opts).unwrap();
        let t = r.truncation.unwrap();
        assert!(t.dropped_mass > 0.0);
        assert!((r.terminal_mass + r.residual_mass + t.dropped_mass - 1.0).abs() < 1e-12);
    }
}
