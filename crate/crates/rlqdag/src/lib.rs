//! Recursive logical query DAGs: a factorized store of equivalent μ-RA
//! plans, grouped rewrite rules, a term-at-a-time baseline enumerator, an
//! in-memory evaluator and a simple cost model.

pub mod annotations;
pub mod baseline;
pub mod bundled;
pub mod check;
pub mod cost;
pub mod dump;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod plans;
pub mod store;
pub mod syntax;
pub mod term;
pub mod transforms;

pub use error::{EvalError, ParseError, TermError};
pub use store::{Annotation, EqId, Op, Store};
pub use term::{Catalog, FilterExpr, Name, Schema, Term};
