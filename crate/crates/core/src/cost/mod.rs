//! Cost structures: ordered convex domains with cost addition.

mod density;
mod extreal;
mod kleene;

pub use density::{loewner_leq, DensityMap, DensityMaps, SubDensity};
pub use extreal::ExtReal;
pub use kleene::{kleene_sup, kleene_sup_pending, Approximant, FixpointCfg, KleeneOutcome};

use std::fmt::Debug;

use crate::error::{Error, Result};

/// Tolerance of the numeric partial orders.
pub const ORDER_TOL: f64 = 1e-9;

/// An ω-Kegelspitze with a cost addition `c +̂ a`.
pub trait CostStructure: Send + Sync {
    type Elem: Clone + Debug + Send + Sync + PartialEq;

    fn name(&self) -> &'static str;

    fn bot(&self) -> Self::Elem;

    /// Barycentric sum `a +_r b`. Weights outside [0,1] are clamped.
    fn convex(&self, r: f64, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    fn cost_add(&self, c: ExtReal, a: &Self::Elem) -> Self::Elem;

    /// Partial order up to [`ORDER_TOL`].
    fn leq(&self, a: &Self::Elem, b: &Self::Elem) -> bool;

    fn approx_eq(&self, a: &Self::Elem, b: &Self::Elem, tol: f64) -> bool;

    /// Size used for divergence detection (value or total trace).
    fn magnitude(&self, a: &Self::Elem) -> f64;

    /// Top element reported on divergence, if the structure has one.
    fn top(&self) -> Option<Self::Elem> {
        None
    }

    /// Scalar action `r·a = a +_r ⊥`.
    fn scale(&self, r: f64, a: &Self::Elem) -> Self::Elem {
        self.convex(r, a, &self.bot())
    }
}

/// `(ℝ^{+∞}, +)`: expected cost.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpectedCost;

/// `(ℝ^{+∞}, +_f)`: cost addition forgets the cost (expected value).
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpectedValue;

/// `([0,1], +_f)`: weakest pre-expectation of probabilities.
#[derive(Debug, Clone, Copy, Default)]
pub struct Probability;

fn ext_leq(a: ExtReal, b: ExtReal) -> bool {
    let (a, b) = (a.get(), b.get());
    if b.is_infinite() {
        return true;
    }
    a <= b + ORDER_TOL * b.abs().max(1.0)
}

fn ext_eq(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    let (a, b) = (a.get(), b.get());
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

impl CostStructure for ExpectedCost {
    type Elem = ExtReal;
    fn name(&self) -> &'static str {
        "ecost"
    }
    fn bot(&self) -> ExtReal {
        ExtReal::ZERO
    }
    fn convex(&self, r: f64, a: &ExtReal, b: &ExtReal) -> ExtReal {
        ExtReal::convex(r, *a, *b)
    }
    fn cost_add(&self, c: ExtReal, a: &ExtReal) -> ExtReal {
        c + *a
    }
    fn leq(&self, a: &ExtReal, b: &ExtReal) -> bool {
        ext_leq(*a, *b)
    }
    fn approx_eq(&self, a: &ExtReal, b: &ExtReal, tol: f64) -> bool {
        ext_eq(*a, *b, tol)
    }
    fn magnitude(&self, a: &ExtReal) -> f64 {
        a.get()
    }
    fn top(&self) -> Option<ExtReal> {
        Some(ExtReal::INF)
    }
}

impl CostStructure for ExpectedValue {
    type Elem = ExtReal;
    fn name(&self) -> &'static str {
        "value"
    }
    fn bot(&self) -> ExtReal {
        ExtReal::ZERO
    }
    fn convex(&self, r: f64, a: &ExtReal, b: &ExtReal) -> ExtReal {
        ExtReal::convex(r, *a, *b)
    }
    fn cost_add(&self, _c: ExtReal, a: &ExtReal) -> ExtReal {
        *a
    }
    fn leq(&self, a: &ExtReal, b: &ExtReal) -> bool {
        ext_leq(*a, *b)
    }
    fn approx_eq(&self, a: &ExtReal, b: &ExtReal, tol: f64) -> bool {
        ext_eq(*a, *b, tol)
    }
    fn magnitude(&self, a: &ExtReal) -> f64 {
        a.get()
    }
    fn top(&self) -> Option<ExtReal> {
        Some(ExtReal::INF)
    }
}

impl CostStructure for Probability {
    type Elem = ExtReal;
    fn name(&self) -> &'static str {
        "wp"
    }
    fn bot(&self) -> ExtReal {
        ExtReal::ZERO
    }
    fn convex(&self, r: f64, a: &ExtReal, b: &ExtReal) -> ExtReal {
        ExtReal::new(ExtReal::convex(r, *a, *b).get().min(1.0))
    }
    fn cost_add(&self, _c: ExtReal, a: &ExtReal) -> ExtReal {
        *a
    }
    fn leq(&self, a: &ExtReal, b: &ExtReal) -> bool {
        ext_leq(*a, *b)
    }
    fn approx_eq(&self, a: &ExtReal, b: &ExtReal, tol: f64) -> bool {
        ext_eq(*a, *b, tol)
    }
    fn magnitude(&self, a: &ExtReal) -> f64 {
        a.get()
    }
}

/// Convex sum `Σ r_i·a_i` following the inductive definition: ⊥ when
/// empty, `a_n` when `r_n = 1`, and `a_n +_{r_n} Σ_{i<n} (r_i/(1−r_n))·a_i`
/// otherwise.
pub fn convex_sum<C: CostStructure + ?Sized>(cs: &C, pairs: &[(f64, C::Elem)]) -> Result<C::Elem> {
    let total: f64 = pairs.iter().map(|p| p.0).sum();
    if pairs.iter().any(|p| !(p.0 >= 0.0)) || total > 1.0 + ORDER_TOL {
        return Err(Error::Weights(format!("weights must be non-negative with sum ≤ 1, got {total}")));
    }
    // Unfold the recursion into the weights used at each level, then fold
    // back from the innermost sum.
    let mut levels: Vec<(f64, usize)> = Vec::with_capacity(pairs.len());
    let mut scale = 1.0;
    let mut k = pairs.len();
    let mut innermost = cs.bot();
    while k > 0 {
        k -= 1;
        let r = (pairs[k].0 / scale).min(1.0);
        if r >= 1.0 {
            innermost = pairs[k].1.clone();
            break;
        }
        levels.push((r, k));
        scale *= 1.0 - r;
    }
    let mut acc = innermost;
    for (r, idx) in levels.into_iter().rev() {
        acc = cs.convex(r, &pairs[idx].1, &acc);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convex_sum_examples() {
        let cs = ExpectedCost;
        assert_eq!(convex_sum(&cs, &[]).unwrap(), ExtReal::ZERO);
        assert_eq!(convex_sum(&cs, &[(1.0, ExtReal::new(7.0))]).unwrap(), ExtReal::new(7.0));
        let v = convex_sum(&cs, &[(0.5, ExtReal::new(2.0)), (0.25, ExtReal::new(4.0))]).unwrap();
        assert!((v.get() - (0.5 * 2.0 + 0.25 * 4.0)).abs() < 1e-15);
        assert!(convex_sum(&cs, &[(0.7, ExtReal::ZERO), (0.7, ExtReal::ZERO)]).is_err());
    }

    #[test]
    fn zero_weight_ignores_infinity() {
        let cs = ExpectedCost;
        let v = convex_sum(&cs, &[(0.0, ExtReal::INF), (0.5, ExtReal::new(2.0))]).unwrap();
        assert_eq!(v, ExtReal::new(1.0));
    }

    #[test]
    fn forgetful_cost_addition() {
        assert_eq!(ExpectedValue.cost_add(ExtReal::new(3.0), &ExtReal::new(1.5)), ExtReal::new(1.5));
        assert_eq!(ExpectedCost.cost_add(ExtReal::new(3.0), &ExtReal::new(1.5)), ExtReal::new(4.5));
    }
}
