//! Front end: syntax, parsing, macro expansion and validation.

pub mod ast;
pub mod expand;
pub mod matrix;
pub mod parser;
pub mod pretty;
pub mod validate;

pub use ast::{Expr, Program, Stmt, StmtKind};
pub use expand::expand_macros;
pub use parser::{parse_expr, parse_program};
pub use pretty::{program_to_string, stmt_to_string};
pub use validate::{validate, VarSets};
