//! Barycentric and cost-structure identities for every instance.

mod common;

#[test]
fn axioms_hold_for_every_instance() {
    let outcomes = common::algebra(1000, 41);
    for o in &outcomes {
        println!("{}", o.line());
    }
    for o in &outcomes {
        assert_eq!(o.instances, 1000);
        assert!(o.passed(), "{}", o.line());
    }
}
