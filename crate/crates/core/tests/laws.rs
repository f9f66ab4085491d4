//! Transformer and cost-transformer laws on randomized instances.

mod common;

use common::LawOutcome;
use qet_core::code::Code;
use qet_core::cost::{ExpectedCost, ExpectedValue};
use qet_core::expect::Expectation;
use qet_core::state::MachineState;

const N: usize = 500;

fn assert_law(o: LawOutcome) {
    println!("{}", o.line());
    assert_eq!(o.instances, N, "{}", o.line());
    assert!(o.passed(), "{}", o.line());
}

#[test]
fn monotonicity() {
    assert_law(common::monotonicity(N, 11));
}

#[test]
fn distributivity() {
    assert_law(common::distributivity(N, 12));
}

#[test]
fn continuity() {
    assert_law(common::continuity(N, 13));
}

#[test]
fn upper_invariant() {
    assert_law(common::upper_invariant(N, 14));
}

#[test]
fn separation() {
    assert_law(common::separation(N, 21));
}

#[test]
fn linearity() {
    assert_law(common::linearity(N, 22));
}

#[test]
fn constancy() {
    assert_law(common::constancy(N, 23));
}

#[test]
fn constant_propagation() {
    assert_law(common::constant_propagation(N, 24));
}

#[test]
fn approximant_equality() {
    let o = common::approximant_equality(50, 30, 31);
    println!("{}", o.line());
    assert!(o.passed(), "{}", o.line());
}

/// `consume(1)` with `f = g = 0`: the equality part of constancy holds, but
/// a bound of the form `min(1, f)·qect{g}` would claim `1 ≤ 0`.
#[test]
fn constancy_bound_with_min_has_counterexample() {
    let code = Code::compile("bool x; qreg q[2]; consume(1)").unwrap();
    let s = MachineState::zero(&code.layout);
    let zero = Expectation::zero();
    let lhs = common::qet(&code, &ExpectedCost, code.root(), &Expectation::mul(zero.clone(), zero.clone()), &s).unwrap();
    let mid = common::qet(&code, &ExpectedCost, code.root(), &zero, &s).unwrap()
        + 0.0 * common::qet(&code, &ExpectedValue, code.root(), &zero, &s).unwrap();
    let min_form = 0f64.min(1.0) * common::qet(&code, &ExpectedCost, code.root(), &zero, &s).unwrap();
    let max_form = 0f64.max(1.0) * common::qet(&code, &ExpectedCost, code.root(), &zero, &s).unwrap();
    assert_eq!(lhs, 1.0);
    assert_eq!(mid, 1.0);
    assert!(mid > min_form);
    assert!(mid <= max_form);
}
