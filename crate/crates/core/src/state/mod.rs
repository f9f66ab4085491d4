//! Classical stores, sparse quantum states, gates and measurement.

pub mod expr;
pub mod gates;
pub mod layout;
pub mod machine;
pub mod qvec;

pub use expr::CExpr;
pub use gates::Unitary;
pub use layout::Layout;
pub use machine::{measure, state_from_json, state_to_json, Branch, MachineState, StateKey};
pub use qvec::QVec;
