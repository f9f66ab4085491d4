//! Density-map denotations and the strong-adequacy cross-check.

use serde::Serialize;

use crate::code::Code;
use crate::cost::{loewner_leq, CostStructure, DensityMap, FixpointCfg};
use crate::error::Result;
use crate::pars::{nf_approx, Config, ExpandOpts};
use crate::qet::{denot_structure, denot_unit, wp_denotational, wp_step_indexed, WpStatus};
use crate::state::MachineState;

/// Denotation of a configuration next to the forward mixture at depth `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenotReport {
    pub steps: usize,
    pub initial: MachineState,
    /// Limit denotation by Kleene iteration.
    pub denotation: DensityMap,
    pub denotation_status: WpStatus,
    pub iterations: usize,
    /// `Σ p_τ·⟦τ⟧` over `nf^[n]`.
    pub forward_mixture: DensityMap,
    /// Step-indexed approximant at the same depth.
    pub step_indexed: DensityMap,
    pub terminal_mass: f64,
    pub residual_mass: f64,
    /// Entrywise `max |⟦μ⟧ − mixture|`.
    pub gap: f64,
    /// Entrywise `max |step-indexed − mixture|`; zero up to rounding.
    pub matched_gap: f64,
    /// `mixture ≤ ⟦μ⟧` in the pointwise Löwner order.
    pub loewner_ordered: bool,
    pub tol: f64,
    pub holds: bool,
}

/// Compares `⟦stm, σ⟧` with the forward mixture of normal forms after
/// `n` steps: the gap must not exceed the residual running mass.
pub fn strong_adequacy_check(code: &Code, s: &MachineState, n: usize, tol: f64) -> Result<DenotReport> {
    s.check(&code.layout)?;
    let cs = denot_structure(code)?;
    let unit = denot_unit(cs.dim);
    let cfg = Config::start(code, code.root(), s.clone());

    let nf = nf_approx(code, cfg.clone(), n, &ExpandOpts::default())?;
    let mut mixture = cs.bot();
    for (w, t) in &nf {
        mixture.add_scaled(*w, &unit(t)?);
    }
    let terminal_mass: f64 = nf.iter().map(|t| t.0).sum();
    let residual_mass = (1.0 - terminal_mass).max(0.0);

    let step_indexed = wp_step_indexed(code, &cs, &cfg, &unit, n)?;
    let den = wp_denotational(code, code.root(), s, &FixpointCfg::default())?;

    let gap = den.value.max_abs_diff(&mixture);
    let matched_gap = step_indexed.max_abs_diff(&mixture);
    let mut loewner_ordered = true;
    for k in den.value.entries.keys().chain(mixture.entries.keys()) {
        loewner_ordered &= loewner_leq(&mixture.get(k), &den.value.get(k))?;
    }
    let holds = gap <= residual_mass + tol && matched_gap <= tol && loewner_ordered;
    Ok(DenotReport {
        steps: n,
        initial: s.clone(),
        denotation: den.value,
        denotation_status: den.status,
        iterations: den.iterations,
        forward_mixture: mixture,
        step_indexed,
        terminal_mass,
        residual_mass,
        gap,
        matched_gap,
        loewner_ordered,
        tol,
        holds,
    })
}
