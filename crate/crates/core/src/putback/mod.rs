//! Update strategies over delta relations, derivation of the view
//! definition they determine, and the round-trip laws.
//!
//! ```
//! use dejima::putback::{derive_get, DeriveConfig, PutStrategy};
//!
//! let put = PutStrategy::parse("union", "
//! view: v(a)
//! sources: s1(a), s2(a)
//! -s1(X) :- s1(X), not v(X).
//! -s2(X) :- s2(X), not v(X).
//! +s1(X) :- v(X), not s1(X), not s2(X).
//! ").unwrap();
//! let bx = derive_get(&put, &DeriveConfig::default()).unwrap();
//! assert_eq!(bx.get.to_string(), "v(X) :- s1(X).\nv(X) :- s2(X).\n");
//! ```

mod derive;
pub mod laws;
mod strategy;

use thiserror::Error;

use crate::datalog::{self, Database};

pub use derive::{
    derive_get, swap, verify_residuals, BxPair, DeriveConfig, Origin, ResidualCheck, Swapped,
};
pub use laws::{
    check_getput, check_putget, check_uniqueness, law_universe, run_getput, run_laws, run_putget,
    GetPutOutcome, LawConfig, LawReport, PutGetOutcome, Status, Uniqueness,
};
pub use strategy::{PutStrategy, Witness};

#[derive(Debug, Error)]
pub enum PutbackError {
    #[error(transparent)]
    Datalog(#[from] datalog::Error),

    #[error("malformed strategy: {0}")]
    Strategy(String),

    #[error("update refused by guard `{guard}` with {witness}")]
    Guard { guard: String, witness: Witness },

    #[error("no view definition can be derived: no rule negates `{view}` exactly once")]
    DerivationImpossible { view: String },

    #[error("unsupported constraint `{constraint}`: {reason}")]
    UnsupportedForm { constraint: String, reason: String },

    #[error("residual `{constraint}` is violated with {witness}")]
    ResidualViolated {
        constraint: String,
        witness: Witness,
        counterexample: Box<Database>,
        view: Box<Database>,
    },
}
