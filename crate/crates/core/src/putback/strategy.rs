use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::datalog::kinds::{self, ColumnKinds};
use crate::datalog::{
    apply_delta, constraint_violations, delta_name, evaluate, parse_document, split_delta,
    ApplyMode, Bindings, Database, Delta, Document, Program, Schema, Sign,
};

use super::PutbackError;

/// A view update strategy: rules whose heads are `+s` / `-s` for updatable
/// sources `s`, read over the sources, reference relations, and the updated
/// view. Constraints (`false :- ...`) are guards: an updated view that
/// satisfies a guard body is refused.
#[derive(Debug, Clone, PartialEq)]
pub struct PutStrategy {
    pub name: String,
    pub program: Program,
    pub view: String,
    pub sources: BTreeSet<String>,
    pub references: BTreeSet<String>,
}

impl PutStrategy {
    /// Parses a strategy file: `view:`, `sources:` and optional
    /// `references:` / `keys:` headers, then rules.
    pub fn parse(name: &str, text: &str) -> Result<Self, PutbackError> {
        let doc = parse_document(text)?;
        Self::from_document(name, doc)
    }

    pub fn from_document(name: &str, doc: Document) -> Result<Self, PutbackError> {
        let views: Vec<_> = doc.items("view").collect();
        let [view] = views.as_slice() else {
            return Err(PutbackError::Strategy(format!(
                "expected exactly one `view:` declaration, found {}",
                views.len()
            )));
        };
        let sources: BTreeSet<String> = doc.items("sources").map(|i| i.pred.clone()).collect();
        let references: BTreeSet<String> =
            doc.items("references").map(|i| i.pred.clone()).collect();
        Self::new(name, doc.program.clone(), &view.pred, sources, references)
    }

    pub fn new(
        name: &str,
        program: Program,
        view: &str,
        sources: BTreeSet<String>,
        references: BTreeSet<String>,
    ) -> Result<Self, PutbackError> {
        if sources.is_empty() {
            return Err(PutbackError::Strategy("no `sources:` declared".into()));
        }
        if let Some(both) = sources.intersection(&references).next() {
            return Err(PutbackError::Strategy(format!(
                "`{both}` is declared both as a source and as a reference"
            )));
        }
        if sources.contains(view) || references.contains(view) {
            return Err(PutbackError::Strategy(format!(
                "view `{view}` is also declared as a source or reference"
            )));
        }
        for rule in &program.rules {
            match split_delta(&rule.head.pred) {
                Some((_, base)) if sources.contains(base) => {}
                Some((_, base)) => {
                    return Err(PutbackError::Strategy(format!(
                        "rule `{rule}` updates `{base}`, which is not a declared source"
                    )))
                }
                None => {
                    return Err(PutbackError::Strategy(format!(
                        "rule `{rule}` does not define a delta relation"
                    )))
                }
            }
        }
        let known: BTreeSet<&str> = sources
            .iter()
            .chain(&references)
            .map(String::as_str)
            .chain([view])
            .collect();
        for pred in program.predicates().keys() {
            if split_delta(pred).is_none() && !known.contains(pred) {
                return Err(PutbackError::Strategy(format!(
                    "predicate `{pred}` is neither the view, a source, nor a reference"
                )));
            }
        }
        let preds = program.predicates();
        for (base_arity, delta) in program.rules.iter().filter_map(|r| {
            split_delta(&r.head.pred).map(|(_, b)| (preds.get(b).copied(), &r.head))
        }) {
            if let Some(n) = base_arity {
                if n != delta.arity() {
                    return Err(crate::datalog::Error::ArityClash {
                        pred: delta.pred.clone(),
                        expected: n,
                        found: delta.arity(),
                    }
                    .into());
                }
            }
        }
        Ok(PutStrategy {
            name: name.to_string(),
            program,
            view: view.to_string(),
            sources,
            references,
        })
    }

    /// Declared (or positional) schema of any relation the strategy reads.
    pub fn schema(&self, relation: &str) -> Schema {
        if let Some(s) = self.program.schemas.get(relation) {
            return s.clone();
        }
        let arity = self
            .program
            .predicates()
            .get(relation)
            .copied()
            .or_else(|| {
                [Sign::Insert, Sign::Delete].iter().find_map(|&s| {
                    self.program
                        .predicates()
                        .get(delta_name(s, relation).as_str())
                        .copied()
                })
            })
            .unwrap_or(0);
        Schema::positional(arity)
    }

    /// Schemas of sources and references: the input of the view definition.
    pub fn source_schemas(&self) -> BTreeMap<String, Schema> {
        self.sources
            .iter()
            .chain(&self.references)
            .map(|n| (n.clone(), self.schema(n)))
            .collect()
    }

    pub fn view_schema(&self) -> Schema {
        self.schema(&self.view)
    }

    /// Column kinds across the strategy and, when given, a view definition.
    pub fn column_kinds(&self, get: Option<&Program>) -> ColumnKinds {
        let mut combined = self.program.clone();
        if let Some(g) = get {
            combined.rules.extend(g.rules.iter().cloned());
            combined.constraints.extend(g.constraints.iter().cloned());
        }
        let aliases: Vec<(String, String)> = self
            .sources
            .iter()
            .flat_map(|s| {
                [Sign::Insert, Sign::Delete]
                    .into_iter()
                    .map(move |sign| (delta_name(sign, s), s.clone()))
            })
            .collect();
        kinds::infer(&combined, &aliases)
    }

    /// Source part of `db`: updatable sources plus references.
    pub fn source_part(&self, db: &Database) -> Database {
        db.restrict(
            self.sources
                .iter()
                .chain(&self.references)
                .map(String::as_str),
        )
    }

    /// The delta the strategy computes for `source` and the updated `view`.
    pub fn put_eval(&self, source: &Database, view: &Database) -> Result<Delta, PutbackError> {
        let mut edb = self.source_part(source);
        let view_rel = view.restrict([self.view.as_str()]);
        edb = edb.merged(&view_rel)?;
        let model = evaluate(&self.program, &edb)?;
        if let Some((i, witness)) = constraint_violations(&self.program.constraints, &model)?
            .into_iter()
            .next()
        {
            return Err(PutbackError::Guard {
                guard: self.program.constraints[i].to_string(),
                witness: Witness(witness),
            });
        }
        let mut delta = Delta::new();
        for s in &self.sources {
            for t in model.tuples(&delta_name(Sign::Delete, s)) {
                delta.add_delete(s, t.clone())?;
            }
            for t in model.tuples(&delta_name(Sign::Insert, s)) {
                delta.add_insert(s, t.clone())?;
            }
        }
        Ok(delta)
    }

    /// `source` with the computed delta applied (strictly); references pass
    /// through unchanged.
    pub fn put_apply(&self, source: &Database, view: &Database) -> Result<Database, PutbackError> {
        let delta = self.put_eval(source, view)?;
        Ok(apply_delta(
            &self.source_part(source),
            &delta,
            ApplyMode::Strict,
        )?)
    }
}

impl fmt::Display for PutStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let decl = |f: &mut fmt::Formatter<'_>, n: &str| {
            write!(f, "{n}({})", self.schema(n).attrs.join(", "))
        };
        f.write_str("view: ")?;
        decl(f, &self.view)?;
        for (kw, set) in [("sources", &self.sources), ("references", &self.references)] {
            if set.is_empty() {
                continue;
            }
            write!(f, "\n{kw}: ")?;
            for (i, n) in set.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                decl(f, n)?;
            }
        }
        let keyed: Vec<(&String, &Schema)> = self
            .program
            .schemas
            .iter()
            .filter(|(_, s)| !s.key.is_empty())
            .collect();
        if !keyed.is_empty() {
            f.write_str("\nkeys: ")?;
            for (i, (n, s)) in keyed.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                let attrs: Vec<&str> = s.key.iter().map(|&k| s.attrs[k].as_str()).collect();
                write!(f, "{n}({})", attrs.join(", "))?;
            }
        }
        write!(f, "\n\n{}", self.program)
    }
}

/// Variable bindings under which a guard fired.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness(pub Bindings);

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        f.write_str(&parts.join(", "))
    }
}
