//! PostgreSQL text for an updatable view: the `CREATE VIEW` of the derived
//! definition, an `INSTEAD OF` trigger, and the PL/pgSQL procedure that
//! runs the update strategy. [`subset`] evaluates the SELECT fragment the
//! emitter uses, so emitted queries can be checked without a database.
//!
//! ```
//! use dejima::putback::{derive_get, DeriveConfig, PutStrategy};
//! use dejima::sqlgen::emit_view;
//!
//! let put = PutStrategy::parse("union", "
//! view: v(a)
//! sources: s1(a), s2(a)
//! -s1(X) :- s1(X), not v(X).
//! -s2(X) :- s2(X), not v(X).
//! +s1(X) :- v(X), not s1(X), not s2(X).
//! ").unwrap();
//! let bx = derive_get(&put, &DeriveConfig::default()).unwrap();
//! assert_eq!(
//!     emit_view(&bx).unwrap(),
//!     "CREATE OR REPLACE VIEW v AS\n   SELECT a FROM s1\n   UNION\n   SELECT a FROM s2\n"
//! );
//! ```

mod emit;
pub mod subset;

use thiserror::Error;

pub use emit::{
    emit, emit_proc, emit_trigger, emit_view, put_queries, sql_literal, view_query, DeltaQuery,
    PutSql, SqlArtifacts,
};

#[derive(Debug, Error)]
pub enum SqlError {
    #[error("view `{0}` is defined recursively")]
    Recursive(String),

    #[error("view `{0}` has no defining rule")]
    EmptyView(String),

    #[error("cannot translate: {0}")]
    Unsupported(String),

    #[error("`{0}` uses a variable no atom or equality binds")]
    Unsafe(String),

    #[error("SQL parse error: {0}")]
    Parse(String),

    #[error("SQL evaluation error: {0}")]
    Eval(String),
}
