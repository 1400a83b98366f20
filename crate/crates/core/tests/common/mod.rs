//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use dejima::datalog::{Database, Schema};
use dejima::putback::{derive_get, BxPair, DeriveConfig, PutStrategy};
use dejima::scenario::{self, Mutation};

pub const SEED: u64 = 42;

pub fn put(name: &str) -> PutStrategy {
    scenario::strategy(name)
        .unwrap_or_else(|| panic!("no bundled strategy {name}"))
        .unwrap()
}

pub fn derive(name: &str) -> BxPair {
    derive_get(&put(name), &DeriveConfig::default()).unwrap()
}

pub fn bundled_names() -> Vec<&'static str> {
    scenario::STRATEGIES.iter().map(|(n, _)| *n).collect()
}

/// A mutated strategy paired with the view definition of the strategy it
/// was mutated from.
pub fn mutant_pair(m: &Mutation) -> BxPair {
    let mutated = PutStrategy::parse(m.name, m.text).unwrap();
    BxPair::with_get(mutated, derive(m.base).get)
}

/// Schemas for the SQL catalog: the sources plus the view under the name the
/// emitted put queries read it from.
pub fn sql_schemas(put: &PutStrategy, updated: &str) -> BTreeMap<String, Schema> {
    let mut schemas = put.source_schemas();
    schemas.insert(updated.to_string(), put.view_schema());
    schemas
}

/// `db` with relation `from` renamed to `to`.
pub fn renamed(db: &Database, from: &str, to: &str) -> Database {
    let mut out = db.clone();
    if let Some(rel) = out.remove_relation(from) {
        out.set_relation(to, rel);
    }
    out
}

/// A snapshot that also distinguishes declared-but-empty relations.
pub fn exact(bases: &BTreeMap<String, Database>) -> String {
    format!("{bases:?}")
}

pub fn squash(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
