//! Finite relations, databases, and deltas between them.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};

use super::error::{Error, Result};
use super::value::Value;

pub type Tuple = Vec<Value>;

/// A set of tuples of one arity.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Relation {
    arity: usize,
    tuples: BTreeSet<Tuple>,
}

impl Relation {
    pub fn new(arity: usize) -> Self {
        Relation {
            arity,
            tuples: BTreeSet::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &BTreeSet<Tuple> {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Value]) -> bool {
        self.tuples.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter()
    }

    /// Returns whether the tuple was new.
    pub fn insert(&mut self, name: &str, t: Tuple) -> Result<bool> {
        if t.len() != self.arity {
            return Err(Error::TupleArity {
                relation: name.to_string(),
                expected: self.arity,
                found: t.len(),
                tuple: t,
            });
        }
        Ok(self.tuples.insert(t))
    }

    pub fn remove(&mut self, t: &[Value]) -> bool {
        self.tuples.remove(t)
    }
}

/// Named relations. Equality ignores empty relations, so a database that
/// declares an empty `v/1` equals one that omits `v`.
#[derive(Debug, Clone, Default)]
pub struct Database {
    relations: BTreeMap<String, Relation>,
}

impl PartialEq for Database {
    fn eq(&self, other: &Self) -> bool {
        let a = self.relations.iter().filter(|(_, r)| !r.is_empty());
        let b = other.relations.iter().filter(|(_, r)| !r.is_empty());
        a.eq(b)
    }
}

impl Eq for Database {}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a database from literal tuples; panics on inconsistent arity.
    /// An empty list has no arity and declares nothing. Intended for tests
    /// and examples.
    pub fn from_facts<'a>(facts: impl IntoIterator<Item = (&'a str, Vec<Tuple>)>) -> Self {
        let mut db = Database::new();
        for (name, tuples) in facts {
            for t in tuples {
                db.insert(name, t).expect("consistent arity");
            }
        }
        db
    }

    /// Ensures `name` exists with the given arity.
    pub fn declare(&mut self, name: &str, arity: usize) -> Result<&mut Relation> {
        match self.relations.entry(name.to_string()) {
            Entry::Occupied(e) => {
                let r = e.into_mut();
                if r.arity != arity {
                    return Err(Error::SchemaMismatch {
                        relation: name.to_string(),
                        left: r.arity,
                        right: arity,
                    });
                }
                Ok(r)
            }
            Entry::Vacant(e) => Ok(e.insert(Relation::new(arity))),
        }
    }

    pub fn insert(&mut self, name: &str, t: Tuple) -> Result<bool> {
        let arity = t.len();
        self.declare(name, arity)?.insert(name, t)
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Relation> {
        self.relations.get_mut(name)
    }

    pub fn contains(&self, name: &str, t: &[Value]) -> bool {
        self.relations.get(name).is_some_and(|r| r.contains(t))
    }

    pub fn set_relation(&mut self, name: &str, rel: Relation) {
        self.relations.insert(name.to_string(), rel);
    }

    pub fn remove_relation(&mut self, name: &str) -> Option<Relation> {
        self.relations.remove(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    /// Tuples of `name`, empty when absent.
    pub fn tuples(&self, name: &str) -> impl Iterator<Item = &Tuple> {
        self.relations
            .get(name)
            .into_iter()
            .flat_map(Relation::iter)
    }

    pub fn len(&self, name: &str) -> usize {
        self.relations.get(name).map_or(0, Relation::len)
    }

    pub fn total_tuples(&self) -> usize {
        self.relations.values().map(Relation::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.values().all(Relation::is_empty)
    }

    /// A copy keeping only the named relations.
    pub fn restrict<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Database {
        let mut out = Database::new();
        for n in names {
            if let Some(r) = self.relations.get(n) {
                out.relations.insert(n.to_string(), r.clone());
            }
        }
        out
    }

    /// Union of two databases; arities must agree on shared names.
    pub fn merged(&self, other: &Database) -> Result<Database> {
        let mut out = self.clone();
        for (name, rel) in &other.relations {
            let target = out.declare(name, rel.arity)?;
            for t in rel.iter() {
                target.tuples.insert(t.clone());
            }
        }
        Ok(out)
    }
}

/// Per-relation insertions and deletions. For every relation the two sets
/// are disjoint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Delta {
    insert: Database,
    delete: Database,
}

impl Delta {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a delta, rejecting a tuple that is both inserted and deleted.
    pub fn from_parts(insert: Database, delete: Database) -> Result<Delta> {
        for (name, rel) in insert.relations() {
            if let Some(t) = rel.iter().find(|t| delete.contains(name, t)) {
                return Err(Error::OverlappingDelta {
                    relation: name.to_string(),
                    tuple: t.clone(),
                });
            }
        }
        Ok(Delta { insert, delete })
    }

    pub fn inserts(&self) -> &Database {
        &self.insert
    }

    pub fn deletes(&self) -> &Database {
        &self.delete
    }

    pub fn add_insert(&mut self, name: &str, t: Tuple) -> Result<()> {
        if self.delete.contains(name, &t) {
            return Err(Error::OverlappingDelta {
                relation: name.to_string(),
                tuple: t,
            });
        }
        self.insert.insert(name, t).map(drop)
    }

    pub fn add_delete(&mut self, name: &str, t: Tuple) -> Result<()> {
        if self.insert.contains(name, &t) {
            return Err(Error::OverlappingDelta {
                relation: name.to_string(),
                tuple: t,
            });
        }
        self.delete.insert(name, t).map(drop)
    }

    pub fn is_empty(&self) -> bool {
        self.insert.is_empty() && self.delete.is_empty()
    }

    /// Relations touched by a non-empty insert or delete set.
    pub fn touched(&self) -> BTreeSet<&str> {
        self.insert
            .relations()
            .chain(self.delete.relations())
            .filter(|(_, r)| !r.is_empty())
            .map(|(n, _)| n)
            .collect()
    }

    pub fn restrict<'a>(&self, names: impl IntoIterator<Item = &'a str> + Clone) -> Delta {
        Delta {
            insert: self.insert.restrict(names.clone()),
            delete: self.delete.restrict(names),
        }
    }

    /// Swaps insertions and deletions.
    pub fn inverse(&self) -> Delta {
        Delta {
            insert: self.delete.clone(),
            delete: self.insert.clone(),
        }
    }

    /// Renames relations (used when moving a delta between schemas with
    /// different relation names).
    pub fn renamed(&self, f: impl Fn(&str) -> String) -> Delta {
        let rename = |db: &Database| {
            let mut out = Database::new();
            for (n, r) in db.relations() {
                out.set_relation(&f(n), r.clone());
            }
            out
        };
        Delta {
            insert: rename(&self.insert),
            delete: rename(&self.delete),
        }
    }
}

/// How [`apply_delta`] treats deletions of absent tuples and insertions of
/// present ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApplyMode {
    #[default]
    Strict,
    Lenient,
}

/// `after - before` as insertions and `before - after` as deletions.
pub fn diff(after: &Database, before: &Database) -> Result<Delta> {
    let mut delta = Delta::new();
    let names: BTreeSet<&str> = after.names().chain(before.names()).collect();
    for name in names {
        let (a, b) = (after.get(name), before.get(name));
        if let (Some(a), Some(b)) = (a, b) {
            if a.arity != b.arity && !a.is_empty() && !b.is_empty() {
                return Err(Error::SchemaMismatch {
                    relation: name.to_string(),
                    left: a.arity,
                    right: b.arity,
                });
            }
        }
        let arity = a.or(b).map_or(0, Relation::arity);
        let empty = Relation::new(arity);
        let a = a.unwrap_or(&empty);
        let b = b.unwrap_or(&empty);
        let ins: BTreeSet<Tuple> = a.tuples.difference(&b.tuples).cloned().collect();
        let del: BTreeSet<Tuple> = b.tuples.difference(&a.tuples).cloned().collect();
        if !ins.is_empty() {
            delta.insert.set_relation(
                name,
                Relation {
                    arity: a.arity,
                    tuples: ins,
                },
            );
        }
        if !del.is_empty() {
            delta.delete.set_relation(
                name,
                Relation {
                    arity: b.arity,
                    tuples: del,
                },
            );
        }
    }
    Ok(delta)
}

/// Removes the deletions, then adds the insertions.
pub fn apply_delta(db: &Database, delta: &Delta, mode: ApplyMode) -> Result<Database> {
    let mut out = db.clone();
    for (name, rel) in delta.delete.relations() {
        for t in rel.iter() {
            let removed = out.get_mut(name).is_some_and(|r| r.remove(t));
            if !removed && mode == ApplyMode::Strict {
                return Err(Error::DeleteMissing {
                    relation: name.to_string(),
                    tuple: t.clone(),
                });
            }
        }
    }
    for (name, rel) in delta.insert.relations() {
        let target = out.declare(name, rel.arity)?;
        for t in rel.iter() {
            if !target.tuples.insert(t.clone()) && mode == ApplyMode::Strict {
                return Err(Error::InsertExisting {
                    relation: name.to_string(),
                    tuple: t.clone(),
                });
            }
        }
    }
    Ok(out)
}
