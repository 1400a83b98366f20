//! Peers that share tables ("dejima tables") with their neighbours.
//!
//! Each side of a link owns a put strategy whose view is the shared table;
//! the view definition is derived when the link is created. A local update
//! is propagated breadth-first: the receiving peer puts the changed table
//! into its base, checks that its view now equals the sender's, and forwards
//! whatever changed on its other links. The first refusal undoes the whole
//! transaction on every peer it touched.

mod network;
mod script;
mod topology;
mod txlog;

use thiserror::Error;

use crate::datalog;
use crate::putback::PutbackError;

pub use network::{
    AbortReason, DejimaLink, Outcome, Peer, PeerNetwork, SyncMessage, TxnResult, UndoLog,
};
pub use script::{parse_script, script_to_json, simulate, ScriptTxn, Simulation};
pub use topology::{DirResources, LinkSpec, PeerSpec, Resources, Topology};
pub use txlog::{record_json, to_jsonl};

#[derive(Debug, Error)]
pub enum DejimaError {
    #[error(transparent)]
    Putback(#[from] PutbackError),

    #[error(transparent)]
    Datalog(#[from] datalog::Error),

    #[error("unknown peer `{0}`")]
    UnknownPeer(String),

    #[error("`{0}` has no link to `{1}`")]
    UnknownLink(String, String),

    #[error("peer `{0}` is declared twice")]
    DuplicatePeer(String),

    #[error("cannot link {a} and {b}: {detail}")]
    SchemaMismatch {
        a: String,
        b: String,
        detail: String,
    },

    #[error("shared table `{table}` clashes with a relation or table already at {peer}")]
    NameClash { peer: String, table: String },

    #[error("topology: {0}")]
    Topology(String),

    #[error("initial synchronization of {a}-{b} failed: {reason}")]
    InitialSync {
        a: String,
        b: String,
        reason: String,
    },

    #[error("script step {index}: {message}")]
    Script { index: usize, message: String },
}
