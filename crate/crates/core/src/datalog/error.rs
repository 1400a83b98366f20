use thiserror::Error;

use super::ast::Literal;
use super::value::Value;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },

    #[error("predicate `{pred}` used with arity {found}, expected {expected}")]
    ArityClash {
        pred: String,
        expected: usize,
        found: usize,
    },

    #[error("unsafe variable `{var}` in rule `{rule}`")]
    UnsafeVariable { var: String, rule: String },

    #[error("anonymous variable not allowed here: `{rule}`")]
    MisplacedAnonymous { rule: String },

    #[error("program is not stratifiable: negative cycle {}", cycle.join(" -> "))]
    NotStratifiable { cycle: Vec<String> },

    #[error("cannot compare {lhs:?} with {rhs:?} in `{literal}`: values of different kinds")]
    CrossKind {
        literal: Literal,
        lhs: Value,
        rhs: Value,
    },

    #[error("relation `{relation}`: tuple {tuple:?} has arity {found}, expected {expected}")]
    TupleArity {
        relation: String,
        tuple: Vec<Value>,
        expected: usize,
        found: usize,
    },

    #[error("relation `{relation}` has arity {left} on one side and {right} on the other")]
    SchemaMismatch {
        relation: String,
        left: usize,
        right: usize,
    },

    #[error("cannot delete {tuple:?} from `{relation}`: not present")]
    DeleteMissing { relation: String, tuple: Vec<Value> },

    #[error("cannot insert {tuple:?} into `{relation}`: already present")]
    InsertExisting { relation: String, tuple: Vec<Value> },

    #[error("delta both inserts and deletes {tuple:?} in `{relation}`")]
    OverlappingDelta { relation: String, tuple: Vec<Value> },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {msg}")]
    Data { path: String, msg: String },
}
