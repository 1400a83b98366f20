//! Incremental get and put.
//!
//! [`GetPlan::propagate`] turns a change to the extensional relations into
//! the change of every derived relation. A stratum that is not recursive
//! and does not negate a changed relation is maintained with delta rules:
//! each rule is fired once per changed body atom, with that atom reading
//! only the inserted (or deleted) tuples. Insertion candidates are kept if
//! they were absent before; deletion candidates are kept if no rule derives
//! them any more. Other strata are recomputed and diffed.
//!
//! Put strategies already compute deltas, so [`inc_put`] evaluates the
//! strategy against the updated view.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::datalog::{
    apply_delta, derivable, diff, evaluate, fire, stratification, ApplyMode, Database, Delta,
    Literal, Program, Relation, Result, Rule,
};
use crate::putback::laws::law_universe;
use crate::putback::{BxPair, PutbackError};

#[derive(Debug, Clone)]
struct StratumPlan {
    preds: BTreeSet<String>,
    rules: Vec<Rule>,
    /// No rule body reads a predicate of the same stratum.
    flat: bool,
}

/// A program prepared for incremental maintenance.
#[derive(Debug, Clone)]
pub struct GetPlan {
    strata: Vec<StratumPlan>,
}

/// Result of [`GetPlan::propagate`].
#[derive(Debug, Clone)]
pub struct Propagation {
    /// Changes to derived relations.
    pub delta: Delta,
    /// The model after the change: extensional and derived relations.
    pub model: Database,
    /// Indices of strata that were recomputed instead of maintained.
    pub recomputed: Vec<usize>,
}

impl GetPlan {
    pub fn new(program: &Program) -> Result<Self> {
        let strat = stratification(program)?;
        let idb = program.idb();
        let strata = strat
            .strata
            .iter()
            .map(|level| {
                let preds: BTreeSet<String> = level
                    .iter()
                    .filter(|p| idb.contains(p.as_str()))
                    .cloned()
                    .collect();
                let mut rules: Vec<Rule> = program
                    .rules
                    .iter()
                    .filter(|r| preds.contains(&r.head.pred))
                    .cloned()
                    .collect();
                rules.sort();
                rules.dedup();
                let flat = rules.iter().all(|r| {
                    r.body
                        .iter()
                        .filter_map(Literal::atom)
                        .all(|a| !preds.contains(&a.pred))
                });
                StratumPlan { preds, rules, flat }
            })
            .collect();
        Ok(GetPlan { strata })
    }

    /// Maintains `old_model` (a full model of the program) under a change to
    /// its extensional relations.
    pub fn propagate(&self, old_model: &Database, edb_delta: &Delta) -> Result<Propagation> {
        let mut model = apply_delta(old_model, edb_delta, ApplyMode::Strict)?;
        let mut changed = edb_delta.clone();
        let mut derived = Delta::new();
        let mut recomputed = Vec::new();
        for (idx, stratum) in self.strata.iter().enumerate() {
            let touched = changed.touched();
            let reads_change = |r: &&Rule| {
                r.body
                    .iter()
                    .filter_map(Literal::atom)
                    .any(|a| touched.contains(a.pred.as_str()))
            };
            if !stratum.rules.iter().any(|r| reads_change(&r)) {
                continue;
            }
            let negates_change = stratum.rules.iter().any(|r| {
                r.body
                    .iter()
                    .any(|l| matches!(l, Literal::Neg(a) if touched.contains(a.pred.as_str())))
            });
            let step = if stratum.flat && !negates_change {
                delta_rules(stratum, old_model, &model, &changed)?
            } else {
                recomputed.push(idx);
                recompute(stratum, old_model, &model)?
            };
            if step.is_empty() {
                continue;
            }
            model = apply_delta(&model, &step, ApplyMode::Strict)?;
            for (name, rel) in step.inserts().relations() {
                for t in rel.iter() {
                    changed.add_insert(name, t.clone())?;
                    derived.add_insert(name, t.clone())?;
                }
            }
            for (name, rel) in step.deletes().relations() {
                for t in rel.iter() {
                    changed.add_delete(name, t.clone())?;
                    derived.add_delete(name, t.clone())?;
                }
            }
        }
        Ok(Propagation {
            delta: derived,
            model,
            recomputed,
        })
    }
}

fn delta_rules(
    stratum: &StratumPlan,
    old: &Database,
    new: &Database,
    changed: &Delta,
) -> Result<Delta> {
    let mut out = Delta::new();
    for rule in &stratum.rules {
        let head = &rule.head.pred;
        for (i, lit) in rule.body.iter().enumerate() {
            let Literal::Pos(atom) = lit else { continue };
            if let Some(ins) = nonempty(changed.inserts(), &atom.pred) {
                for t in fire(rule, new, Some((i, ins)))? {
                    if !old.contains(head, &t) && !out.inserts().contains(head, &t) {
                        out.add_insert(head, t)?;
                    }
                }
            }
            if let Some(del) = nonempty(changed.deletes(), &atom.pred) {
                for t in fire(rule, old, Some((i, del)))? {
                    if !out.deletes().contains(head, &t)
                        && !derivable(&stratum.rules, head, &t, new)?
                    {
                        out.add_delete(head, t)?;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn nonempty<'a>(db: &'a Database, name: &str) -> Option<&'a Relation> {
    db.get(name).filter(|r| !r.is_empty())
}

fn recompute(stratum: &StratumPlan, old: &Database, new: &Database) -> Result<Delta> {
    let mut base = new.clone();
    for p in &stratum.preds {
        base.remove_relation(p);
    }
    let evaluated = evaluate(&Program::new(stratum.rules.clone()), &base)?;
    let names = || stratum.preds.iter().map(String::as_str);
    diff(&evaluated.restrict(names()), &old.restrict(names()))
}

/// Change of the view caused by `source_delta`.
pub fn inc_get(
    bx: &BxPair,
    source: &Database,
    source_delta: &Delta,
) -> Result<Delta, PutbackError> {
    let plan = GetPlan::new(&bx.get)?;
    let old_model = evaluate(&bx.get, &bx.put.source_part(source))?;
    let relevant = source_delta.restrict(
        bx.put
            .sources
            .iter()
            .chain(&bx.put.references)
            .map(String::as_str),
    );
    // Changes outside the view's inputs must still apply cleanly.
    apply_delta(source, source_delta, ApplyMode::Strict)?;
    let p = plan.propagate(&old_model, &relevant)?;
    Ok(p.delta.restrict([bx.view()]))
}

/// Source change induced by changing the view by `view_delta`.
pub fn inc_put(
    bx: &BxPair,
    source: &Database,
    view: &Database,
    view_delta: &Delta,
) -> Result<Delta, PutbackError> {
    let updated = apply_delta(view, view_delta, ApplyMode::Strict)?;
    bx.put.put_eval(source, &updated)
}

/// Recompute oracle for [`inc_get`].
pub fn get_oracle(
    bx: &BxPair,
    source: &Database,
    source_delta: &Delta,
) -> Result<Delta, PutbackError> {
    let after = apply_delta(source, source_delta, ApplyMode::Strict)?;
    Ok(diff(&bx.get_view(&after)?, &bx.get_view(source)?)?)
}

/// Recompute oracle for [`inc_put`]: the difference made by a full put.
pub fn put_oracle(
    bx: &BxPair,
    source: &Database,
    view: &Database,
    view_delta: &Delta,
) -> Result<Delta, PutbackError> {
    let updated = apply_delta(view, view_delta, ApplyMode::Strict)?;
    let after = bx.put.put_apply(source, &updated)?;
    Ok(diff(&after, &bx.put.source_part(source))?)
}

/// Equality and timing of incremental against recomputed results.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub strategy: String,
    pub seed: u64,
    pub cases: usize,
    pub get_equal: usize,
    pub put_equal: usize,
    /// View edits both paths refused before an accepted one was found.
    pub put_refused: usize,
    pub inc_get_us: u128,
    pub full_get_us: u128,
    pub inc_put_us: u128,
    pub full_put_us: u128,
}

impl BenchReport {
    pub fn all_equal(&self) -> bool {
        self.get_equal == self.cases && self.put_equal == self.cases
    }
}

/// Runs `cases` random single-tuple source changes and view edits through
/// both paths. The materialized model is computed outside the timed region
/// for the incremental get; the full get recomputes the view after the change.
pub fn bench(
    bx: &BxPair,
    cases: usize,
    seed: u64,
    domain: usize,
) -> Result<BenchReport, PutbackError> {
    let universe = law_universe(bx, domain);
    let sources = universe.restrict(
        universe
            .schemas()
            .keys()
            .filter(|n| *n != bx.view())
            .map(String::as_str),
    );
    let plan = GetPlan::new(&bx.get)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BenchReport {
        strategy: bx.put.name.clone(),
        seed,
        cases,
        get_equal: 0,
        put_equal: 0,
        put_refused: 0,
        inc_get_us: 0,
        full_get_us: 0,
        inc_put_us: 0,
        full_put_us: 0,
    };
    let (mut t_inc_get, mut t_full_get, mut t_inc_put, mut t_full_put) = (
        Duration::ZERO,
        Duration::ZERO,
        Duration::ZERO,
        Duration::ZERO,
    );
    for _ in 0..cases {
        let source = sources.random(&mut rng);
        let old_model = evaluate(&bx.get, &source)?;
        if let Some((rel, edit)) = sources.random_single_delta(&source, &mut rng) {
            let d = edit.to_delta(&rel);
            let start = Instant::now();
            let inc = plan.propagate(&old_model, &d)?.delta.restrict([bx.view()]);
            t_inc_get += start.elapsed();
            let start = Instant::now();
            let full = get_oracle(bx, &source, &d)?;
            t_full_get += start.elapsed();
            report.get_equal += usize::from(inc == full);
        } else {
            report.get_equal += 1;
        }
    }

    // Put cases use accepted edits: a source's view edits are tried in random
    // order until the recomputing path accepts one.
    let mut put_cases = 0;
    for _ in 0..cases.saturating_mul(20) {
        if put_cases == cases {
            break;
        }
        let source = sources.random(&mut rng);
        let view = bx.get_view(&source)?;
        let mut edits = universe.edits(bx.view(), &view);
        edits.shuffle(&mut rng);
        for edit in edits {
            let vd = edit.to_delta(bx.view());
            let start = Instant::now();
            let inc = inc_put(bx, &source, &view, &vd);
            t_inc_put += start.elapsed();
            let start = Instant::now();
            let full = put_oracle(bx, &source, &view, &vd);
            t_full_put += start.elapsed();
            match (inc, full) {
                (Err(_), Err(_)) => {
                    report.put_refused += 1;
                    continue;
                }
                (Ok(a), Ok(b)) => report.put_equal += usize::from(a == b),
                _ => {}
            }
            put_cases += 1;
            break;
        }
    }
    report.inc_get_us = t_inc_get.as_micros();
    report.full_get_us = t_full_get.as_micros();
    report.inc_put_us = t_inc_put.as_micros();
    report.full_put_us = t_full_put.as_micros();
    Ok(report)
}
