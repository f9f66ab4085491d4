use serde::{Deserialize, Serialize};

use super::{CostStructure, ORDER_TOL};
use crate::error::{Error, Result};

/// Controls fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixpointCfg {
    pub max_iter: usize,
    pub tol: f64,
    pub ceiling: f64,
}

impl Default for FixpointCfg {
    fn default() -> Self {
        FixpointCfg {
            max_iter: 10_000,
            tol: 1e-9,
            ceiling: 1e12,
        }
    }
}

impl FixpointCfg {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 || !(self.tol > 0.0) || !(self.ceiling > 0.0) {
            return Err(Error::Invalid("fixpoint config needs max_iter ≥ 1, tol > 0, ceiling > 0".into()));
        }
        Ok(())
    }
}

/// One iterate together with the mass that has not yet left the
/// approximation (the weight still sitting at ⊥).
#[derive(Debug, Clone, PartialEq)]
pub struct Approximant<E> {
    pub value: E,
    pub pending: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KleeneOutcome<E> {
    pub value: E,
    pub converged: bool,
    pub divergent: bool,
    pub iterations: usize,
}

/// Supremum of an ω-chain, certified numerically: stops when two
/// successive iterates agree within `tol`, when an iterate exceeds the
/// ceiling (reported as the top element), or after `max_iter` iterates.
pub fn kleene_sup<C: CostStructure + ?Sized>(
    cs: &C,
    seq: impl IntoIterator<Item = C::Elem>,
    cfg: &FixpointCfg,
) -> Result<KleeneOutcome<C::Elem>> {
    kleene_sup_pending(
        cs,
        seq.into_iter().map(|value| Ok(Approximant { value, pending: 0.0 })),
        cfg,
    )
}

/// Like [`kleene_sup`], but iterates also carry their pending mass and
/// convergence additionally requires it to be below `tol`. This rules out
/// stopping on plateaus where mass has not reached the exit yet.
pub fn kleene_sup_pending<C: CostStructure + ?Sized>(
    cs: &C,
    seq: impl IntoIterator<Item = Result<Approximant<C::Elem>>>,
    cfg: &FixpointCfg,
) -> Result<KleeneOutcome<C::Elem>> {
    let mut prev: Option<C::Elem> = None;
    let mut iterations = 0;
    for item in seq.into_iter().take(cfg.max_iter) {
        let Approximant { value, pending } = item?;
        iterations += 1;
        if cs.magnitude(&value) > cfg.ceiling {
            if let Some(top) = cs.top() {
                return Ok(KleeneOutcome {
                    value: top,
                    converged: true,
                    divergent: true,
                    iterations,
                });
            }
        }
        if let Some(p) = &prev {
            if !cs.leq(p, &value) {
                return Err(Error::ChainViolation(format!(
                    "iterate {iterations} is not above its predecessor ({p:?} vs {value:?})"
                )));
            }
            if cs.approx_eq(p, &value, cfg.tol) && pending <= cfg.tol.max(ORDER_TOL) {
                return Ok(KleeneOutcome {
                    value,
                    converged: true,
                    divergent: false,
                    iterations,
                });
            }
        }
        prev = Some(value);
    }
    Ok(KleeneOutcome {
        value: prev.unwrap_or_else(|| cs.bot()),
        converged: false,
        divergent: false,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{ExpectedCost, ExtReal};

    #[test]
    fn constant_sequence_converges_after_two() {
        let a = ExtReal::new(3.0);
        let out = kleene_sup(&ExpectedCost, std::iter::repeat(a), &FixpointCfg::default()).unwrap();
        assert!(out.converged && !out.divergent);
        assert_eq!(out.iterations, 2);
        assert_eq!(out.value, a);
    }

    #[test]
    fn geometric_partial_sums() {
        let seq = (1..).map(|n| ExtReal::new(2.0 - 0.5f64.powi(n - 1)));
        let out = kleene_sup(&ExpectedCost, seq, &FixpointCfg::default()).unwrap();
        assert!(out.converged);
        assert!((out.value.get() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn unbounded_chain_diverges() {
        let cfg = FixpointCfg {
            ceiling: 1e6,
            max_iter: 10_000_000,
            ..Default::default()
        };
        let seq = (1..).map(|n| ExtReal::new(n as f64));
        let out = kleene_sup(&ExpectedCost, seq, &cfg).unwrap();
        assert!(out.divergent && out.converged);
        assert!(out.value.is_infinite());
    }

    #[test]
    fn decreasing_sequence_is_a_chain_violation() {
        let seq = [2.0, 1.0].map(ExtReal::new);
        let err = kleene_sup(&ExpectedCost, seq, &FixpointCfg::default()).unwrap_err();
        assert!(matches!(err, Error::ChainViolation(_)));
    }

    #[test]
    fn cap_reports_unconverged() {
        let cfg = FixpointCfg {
            max_iter: 5,
            ..Default::default()
        };
        let seq = (1..).map(|n| ExtReal::new(n as f64));
        let out = kleene_sup(&ExpectedCost, seq, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.value, ExtReal::new(5.0));
    }
}
