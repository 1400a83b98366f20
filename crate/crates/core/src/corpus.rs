//! Finite universes of relation instances.
//!
//! Each column draws from a small typed domain: the constants the program
//! relates to it plus a few fresh values of the same kind. Instances
//! respect declared keys: a keyed relation holds at most one tuple per key
//! value. Universes enumerate every instance when there are few enough and
//! otherwise sample with a caller-supplied RNG.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, RngExt};
use rust_decimal::Decimal;

use crate::datalog::kinds::ColumnKinds;
use crate::datalog::{Database, Delta, Kind, Schema, Tuple, Value};

/// Fresh values of `kind`, skipping anything in `avoid`.
pub fn fresh_values(kind: Kind, n: usize, avoid: &BTreeSet<Value>) -> Vec<Value> {
    let candidates = (0i64..).map(|i| match kind {
        Kind::Int => Value::Int(i),
        Kind::Decimal => Value::decimal(Decimal::new(i * 10 + 5, 1)),
        Kind::Str => Value::str(symbol(i as usize)),
    });
    candidates.filter(|v| !avoid.contains(v)).take(n).collect()
}

/// `a`, `b`, ..., `z`, `a1`, `b1`, ...
fn symbol(i: usize) -> String {
    let letter = (b'a' + (i % 26) as u8) as char;
    match i / 26 {
        0 => letter.to_string(),
        round => format!("{letter}{round}"),
    }
}

/// One independent choice in an instance: a key value (or, for unkeyed
/// relations, a single tuple) is absent or holds one of `options`.
#[derive(Debug, Clone)]
struct Slot {
    relation: String,
    options: Vec<Tuple>,
}

#[derive(Debug, Clone)]
pub struct Universe {
    schemas: BTreeMap<String, Schema>,
    domains: BTreeMap<String, Vec<Vec<Value>>>,
    slots: Vec<Slot>,
}

impl Universe {
    /// `fresh` new values per column on top of its constants, truncated to
    /// `max_per_column` values when given.
    pub fn new(
        schemas: impl IntoIterator<Item = (String, Schema)>,
        kinds: &ColumnKinds,
        fresh: usize,
        max_per_column: Option<usize>,
    ) -> Self {
        let schemas: BTreeMap<String, Schema> = schemas.into_iter().collect();
        let mut domains = BTreeMap::new();
        for (name, schema) in &schemas {
            let cols = (0..schema.arity())
                .map(|p| {
                    let consts = kinds.constants(name, p);
                    let mut dom: Vec<Value> = consts.iter().cloned().collect();
                    dom.extend(fresh_values(kinds.kind(name, p), fresh, &consts));
                    if let Some(max) = max_per_column {
                        dom.truncate(max.max(1));
                    }
                    dom
                })
                .collect();
            domains.insert(name.clone(), cols);
        }
        Self::build(schemas, domains)
    }

    fn build(
        schemas: BTreeMap<String, Schema>,
        domains: BTreeMap<String, Vec<Vec<Value>>>,
    ) -> Self {
        let mut u = Universe {
            schemas,
            domains,
            slots: Vec::new(),
        };
        u.slots = u.compute_slots();
        u
    }

    pub fn schemas(&self) -> &BTreeMap<String, Schema> {
        &self.schemas
    }

    pub fn domain(&self, relation: &str, column: usize) -> &[Value] {
        &self.domains[relation][column]
    }

    /// Universe restricted to the named relations.
    pub fn restrict<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Universe {
        let keep: BTreeSet<&str> = names.into_iter().collect();
        Self::build(
            self.schemas
                .iter()
                .filter(|(n, _)| keep.contains(n.as_str()))
                .map(|(n, s)| (n.clone(), s.clone()))
                .collect(),
            self.domains
                .iter()
                .filter(|(n, _)| keep.contains(n.as_str()))
                .map(|(n, d)| (n.clone(), d.clone()))
                .collect(),
        )
    }

    fn key_of(&self, relation: &str) -> &[usize] {
        &self.schemas[relation].key
    }

    fn product(columns: &[&[Value]]) -> Vec<Tuple> {
        let mut out: Vec<Tuple> = vec![Vec::new()];
        for col in columns {
            out = out
                .iter()
                .flat_map(|prefix| {
                    col.iter().map(move |v| {
                        let mut t = prefix.clone();
                        t.push(v.clone());
                        t
                    })
                })
                .collect();
        }
        out
    }

    /// Every tuple the domains allow for `relation`.
    pub fn tuples(&self, relation: &str) -> Vec<Tuple> {
        let cols: Vec<&[Value]> = self.domains[relation].iter().map(Vec::as_slice).collect();
        Self::product(&cols)
    }

    fn compute_slots(&self) -> Vec<Slot> {
        let mut slots = Vec::new();
        for (name, schema) in &self.schemas {
            let all = self.tuples(name);
            if schema.key.is_empty() || schema.key.len() == schema.arity() {
                slots.extend(all.into_iter().map(|t| Slot {
                    relation: name.clone(),
                    options: vec![t],
                }));
            } else {
                let mut by_key: BTreeMap<Vec<Value>, Vec<Tuple>> = BTreeMap::new();
                for t in all {
                    let k = schema.key.iter().map(|&i| t[i].clone()).collect();
                    by_key.entry(k).or_default().push(t);
                }
                slots.extend(by_key.into_values().map(|options| Slot {
                    relation: name.clone(),
                    options,
                }));
            }
        }
        slots
    }

    fn empty_instance(&self) -> Database {
        let mut db = Database::new();
        for (name, schema) in &self.schemas {
            db.declare(name, schema.arity()).expect("fresh database");
        }
        db
    }

    /// Number of distinct instances, saturating at `u128::MAX`.
    pub fn instance_count(&self) -> u128 {
        self.slots.iter().fold(1u128, |acc, s| {
            acc.saturating_mul(s.options.len() as u128 + 1)
        })
    }

    /// All instances, or `None` when there are more than `limit`.
    pub fn enumerate(&self, limit: usize) -> Option<Vec<Database>> {
        if self.instance_count() > limit as u128 {
            return None;
        }
        let slots = &self.slots;
        let mut choice = vec![0usize; slots.len()];
        let mut out = Vec::new();
        loop {
            let mut db = self.empty_instance();
            for (slot, &c) in slots.iter().zip(&choice) {
                if c > 0 {
                    db.insert(&slot.relation, slot.options[c - 1].clone())
                        .expect("domain tuples match arity");
                }
            }
            out.push(db);
            let mut i = 0;
            loop {
                if i == slots.len() {
                    return Some(out);
                }
                choice[i] += 1;
                if choice[i] <= slots[i].options.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }

    /// A random instance; each slot is filled with probability one half.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Database {
        let mut db = self.empty_instance();
        for slot in &self.slots {
            if rng.random_bool(0.5) {
                let t = slot.options.choose(rng).expect("slots are non-empty");
                db.insert(&slot.relation, t.clone())
                    .expect("domain tuples match arity");
            }
        }
        db
    }

    /// Up to `limit` instances: all of them if they fit, else a seeded sample.
    pub fn instances<R: Rng + ?Sized>(&self, limit: usize, rng: &mut R) -> (Vec<Database>, bool) {
        match self.enumerate(limit) {
            Some(all) => (all, true),
            None => ((0..limit).map(|_| self.random(rng)).collect(), false),
        }
    }

    fn key_values(&self, relation: &str, t: &[Value]) -> Vec<Value> {
        self.key_of(relation)
            .iter()
            .map(|&i| t[i].clone())
            .collect()
    }

    fn keyed(&self, relation: &str) -> bool {
        let s = &self.schemas[relation];
        !s.key.is_empty() && s.key.len() < s.arity()
    }

    /// All single-tuple edits of `relation` in `db` that keep its key.
    pub fn edits(&self, relation: &str, db: &Database) -> Vec<Edit> {
        let present: Vec<&Tuple> = db.tuples(relation).collect();
        let used: BTreeSet<Vec<Value>> = present
            .iter()
            .map(|t| self.key_values(relation, t))
            .collect();
        let mut out: Vec<Edit> = present.iter().map(|t| Edit::Delete((*t).clone())).collect();
        for t in self.tuples(relation) {
            if db.contains(relation, &t) {
                continue;
            }
            let k = self.key_values(relation, &t);
            if !self.keyed(relation) || !used.contains(&k) {
                out.push(Edit::Insert(t));
            } else {
                let old = present
                    .iter()
                    .find(|p| self.key_values(relation, p) == k)
                    .expect("key is in use");
                out.push(Edit::Replace((*old).clone(), t));
            }
        }
        out
    }

    /// A uniformly chosen single-tuple edit, if any exists.
    pub fn random_edit<R: Rng + ?Sized>(
        &self,
        relation: &str,
        db: &Database,
        rng: &mut R,
    ) -> Option<Edit> {
        self.edits(relation, db).choose(rng).cloned()
    }

    /// A single insertion or deletion on one relation of the universe.
    pub fn random_single_delta<R: Rng + ?Sized>(
        &self,
        db: &Database,
        rng: &mut R,
    ) -> Option<(String, Edit)> {
        let mut options = Vec::new();
        for name in self.schemas.keys() {
            for e in self.edits(name, db) {
                if !matches!(e, Edit::Replace(..)) {
                    options.push((name.clone(), e));
                }
            }
        }
        if options.is_empty() {
            None
        } else {
            let i = rng.random_range(0..options.len());
            Some(options.swap_remove(i))
        }
    }
}

/// A single-tuple change to one relation. `Replace` keeps the key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Edit {
    Insert(Tuple),
    Delete(Tuple),
    Replace(Tuple, Tuple),
}

impl Edit {
    pub fn to_delta(&self, relation: &str) -> Delta {
        let mut d = Delta::new();
        match self {
            Edit::Insert(t) => d.add_insert(relation, t.clone()),
            Edit::Delete(t) => d.add_delete(relation, t.clone()),
            Edit::Replace(old, new) => d
                .add_delete(relation, old.clone())
                .and_then(|_| d.add_insert(relation, new.clone())),
        }
        .expect("edit tuples are distinct");
        d
    }
}
