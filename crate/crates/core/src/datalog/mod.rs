//! Datalog with stratified negation and order comparisons over finite
//! databases.

mod ast;
mod database;
mod error;
mod eval;
pub mod io;
pub mod kinds;
mod parser;
mod stratify;
mod validate;
mod value;

pub use ast::{
    delta_name, split_delta, Atom, CmpOp, Constraint, Literal, Program, Rule, Schema, Sign, Term,
};
pub use database::{apply_delta, diff, ApplyMode, Database, Delta, Relation, Tuple};
pub use error::{Error, Result};
pub(crate) use eval::fire;
pub use eval::{constraint_violations, derivable, evaluate, solve, Bindings};
pub use parser::{parse_document, parse_program, DeclItem, Directive, Document, DIRECTIVES};
pub use stratify::{stratification, stratify, Stratification};
pub use validate::{check as validate_program, limited_vars};
pub use value::{Kind, Value};
