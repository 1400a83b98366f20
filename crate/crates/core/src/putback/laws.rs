//! GetPut, PutGet and uniqueness checks, singly and over seeded corpora.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::corpus::{Edit, Universe};
use crate::datalog::io::{database_to_json, delta_to_json};
use crate::datalog::{apply_delta, diff, ApplyMode, Database, Delta, Program};

use super::{BxPair, PutStrategy, PutbackError};

#[derive(Debug, Clone, PartialEq)]
pub enum GetPutOutcome {
    Pass,
    /// The non-empty delta put computed for the unchanged view.
    Counterexample(Delta),
    /// Put refused the unchanged view (guard, inconsistent or inapplicable delta).
    Refused(String),
}

/// `put(s, get(s)) = s`: the delta for the unchanged view must be empty.
pub fn check_getput(bx: &BxPair, source: &Database) -> Result<GetPutOutcome, PutbackError> {
    let view = bx.get_view(source)?;
    match bx.put.put_eval(source, &view) {
        Ok(d) if d.is_empty() => Ok(GetPutOutcome::Pass),
        Ok(d) => Ok(GetPutOutcome::Counterexample(d)),
        Err(PutbackError::Datalog(e)) if !is_refusal(&e) => Err(e.into()),
        Err(e) => Ok(GetPutOutcome::Refused(e.to_string())),
    }
}

fn is_refusal(e: &crate::datalog::Error) -> bool {
    use crate::datalog::Error::*;
    matches!(
        e,
        OverlappingDelta { .. } | DeleteMissing { .. } | InsertExisting { .. }
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum PutGetOutcome {
    Pass,
    /// A guard refused the updated view.
    Rejected {
        guard: String,
    },
    /// Put accepted the view but get does not give it back.
    Counterexample {
        view_after: Database,
        /// Tuples of the updated view that get lost.
        missing: Database,
        /// Tuples get produces that the updated view lacks.
        extra: Database,
    },
    /// Put produced an inconsistent or inapplicable delta.
    Failed(String),
}

impl PutGetOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, PutGetOutcome::Pass)
    }
}

/// `get(put(s, v)) = v`.
pub fn check_putget(
    bx: &BxPair,
    source: &Database,
    view: &Database,
) -> Result<PutGetOutcome, PutbackError> {
    let updated = match bx.put.put_apply(source, view) {
        Ok(s) => s,
        Err(PutbackError::Guard { guard, witness }) => {
            return Ok(PutGetOutcome::Rejected {
                guard: format!("{guard} [{witness}]"),
            })
        }
        Err(PutbackError::Datalog(e)) if is_refusal(&e) => {
            return Ok(PutGetOutcome::Failed(e.to_string()))
        }
        Err(e) => return Err(e),
    };
    let view_after = bx.get_view(&updated)?;
    let wanted = view.restrict([bx.view()]);
    if view_after == wanted {
        return Ok(PutGetOutcome::Pass);
    }
    let d = diff(&view_after, &wanted)?;
    Ok(PutGetOutcome::Counterexample {
        view_after,
        missing: d.deletes().clone(),
        extra: d.inserts().clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Vacuous,
}

/// Corpus settings for the law suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LawConfig {
    pub seed: u64,
    pub corpus_size: usize,
    /// Values per column, constants included.
    pub domain: usize,
    /// Candidate edits tried per accepted edit before giving up.
    pub attempts_per_case: usize,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig {
            seed: 42,
            corpus_size: 500,
            domain: 4,
            attempts_per_case: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LawReport {
    pub law: &'static str,
    pub status: Status,
    pub corpus_size: usize,
    pub seed: u64,
    /// Cases that passed.
    pub passed: usize,
    /// Cases that failed.
    pub failed: usize,
    /// Edits the strategy refused through a guard (PutGet only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejected: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Json>,
}

impl LawReport {
    fn new(law: &'static str, cfg: &LawConfig) -> Self {
        LawReport {
            law,
            status: Status::Vacuous,
            corpus_size: cfg.corpus_size,
            seed: cfg.seed,
            passed: 0,
            failed: 0,
            rejected: None,
            counterexample: None,
        }
    }

    fn fail(&mut self, example: Json) {
        self.failed += 1;
        self.counterexample.get_or_insert(example);
    }

    fn finish(mut self) -> Self {
        self.status = if self.failed > 0 || (self.corpus_size > 0 && self.passed < self.corpus_size)
        {
            Status::Fail
        } else if self.corpus_size == 0 {
            Status::Vacuous
        } else {
            Status::Pass
        };
        self
    }
}

/// The source/view universe the law suite draws from.
pub fn law_universe(bx: &BxPair, domain: usize) -> Universe {
    let kinds = bx.put.column_kinds(Some(&bx.get));
    let mut schemas = bx.put.source_schemas();
    schemas.insert(bx.view().to_string(), bx.put.view_schema());
    Universe::new(schemas, &kinds, domain, Some(domain))
}

fn edit_json(view: &str, e: &Edit) -> Json {
    let d = e.to_delta(view);
    delta_to_json(&d)
}

/// GetPut over `corpus_size` random sources.
pub fn run_getput(bx: &BxPair, cfg: &LawConfig) -> Result<LawReport, PutbackError> {
    let universe = law_universe(bx, cfg.domain);
    let sources = universe.restrict(
        universe
            .schemas()
            .keys()
            .filter(|n| *n != bx.view())
            .map(String::as_str),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = LawReport::new("GetPut", cfg);
    for _ in 0..cfg.corpus_size {
        let source = sources.random(&mut rng);
        match check_getput(bx, &source)? {
            GetPutOutcome::Pass => report.passed += 1,
            GetPutOutcome::Counterexample(d) => report.fail(json!({
                "source": database_to_json(&source),
                "delta": delta_to_json(&d),
            })),
            GetPutOutcome::Refused(reason) => report.fail(json!({
                "source": database_to_json(&source),
                "error": reason,
            })),
        }
    }
    Ok(report.finish())
}

/// PutGet over `corpus_size` accepted single-tuple edits of `get(source)`.
/// For each random source the view edits are tried in random order until
/// the strategy accepts one, so the accepted edit is uniform over the edits
/// its guards allow. Refused edits are counted in `rejected`.
pub fn run_putget(bx: &BxPair, cfg: &LawConfig) -> Result<LawReport, PutbackError> {
    let universe = law_universe(bx, cfg.domain);
    let sources = universe.restrict(
        universe
            .schemas()
            .keys()
            .filter(|n| *n != bx.view())
            .map(String::as_str),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut report = LawReport::new("PutGet", cfg);
    let mut rejected = 0;
    let budget = cfg.corpus_size.saturating_mul(cfg.attempts_per_case);
    for _ in 0..budget {
        if report.passed + report.failed >= cfg.corpus_size {
            break;
        }
        let source = sources.random(&mut rng);
        let view = bx.get_view(&source)?;
        let mut edits = universe.edits(bx.view(), &view);
        edits.shuffle(&mut rng);
        for edit in edits {
            let updated = apply_delta(&view, &edit.to_delta(bx.view()), ApplyMode::Strict)?;
            let case = |extra: Json| {
                let mut j = json!({
                    "source": database_to_json(&source),
                    "view": database_to_json(&view),
                    "edit": edit_json(bx.view(), &edit),
                });
                j.as_object_mut()
                    .unwrap()
                    .extend(extra.as_object().unwrap().clone());
                j
            };
            match check_putget(bx, &source, &updated)? {
                PutGetOutcome::Pass => report.passed += 1,
                PutGetOutcome::Rejected { .. } => {
                    rejected += 1;
                    continue;
                }
                PutGetOutcome::Counterexample {
                    view_after,
                    missing,
                    extra,
                } => report.fail(case(json!({
                    "view_after": database_to_json(&view_after),
                    "missing": database_to_json(&missing),
                    "extra": database_to_json(&extra),
                }))),
                PutGetOutcome::Failed(reason) => report.fail(case(json!({ "error": reason }))),
            }
            break;
        }
    }
    report.rejected = Some(rejected);
    Ok(report.finish())
}

/// Both laws over the configured corpus.
pub fn run_laws(bx: &BxPair, cfg: &LawConfig) -> Result<[LawReport; 2], PutbackError> {
    Ok([run_getput(bx, cfg)?, run_putget(bx, cfg)?])
}

/// Outcome of comparing candidate view definitions for one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Uniqueness {
    /// Candidates that failed a law on the corpus, with the reason.
    pub excluded: Vec<(usize, String)>,
    /// Well-behaved candidates.
    pub kept: Vec<usize>,
    /// Two kept candidates that disagree on a corpus source.
    pub witness: Option<(usize, usize, Database)>,
}

impl Uniqueness {
    pub fn is_pass(&self) -> bool {
        self.witness.is_none()
    }
}

/// Excludes candidates that fail GetPut or PutGet (on one seeded edit per
/// source), then requires the rest to agree on every source of `corpus`.
pub fn check_uniqueness(
    put: &PutStrategy,
    candidates: &[Program],
    corpus: &[Database],
    seed: u64,
) -> Result<Uniqueness, PutbackError> {
    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    'candidates: for (i, get) in candidates.iter().enumerate() {
        let bx = BxPair::with_get(put.clone(), get.clone());
        let universe = law_universe(&bx, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for source in corpus {
            let gp = check_getput(&bx, source)?;
            if gp != GetPutOutcome::Pass {
                excluded.push((i, format!("GetPut fails: {gp:?}")));
                continue 'candidates;
            }
            let view = bx.get_view(source)?;
            if let Some(edit) = universe.random_edit(bx.view(), &view, &mut rng) {
                let updated = apply_delta(&view, &edit.to_delta(bx.view()), ApplyMode::Strict)?;
                match check_putget(&bx, source, &updated)? {
                    PutGetOutcome::Pass | PutGetOutcome::Rejected { .. } => {}
                    other => {
                        excluded.push((i, format!("PutGet fails: {other:?}")));
                        continue 'candidates;
                    }
                }
            }
        }
        kept.push(i);
    }
    let mut witness = None;
    if let Some((&first, rest)) = kept.split_first() {
        let reference = BxPair::with_get(put.clone(), candidates[first].clone());
        'sources: for source in corpus {
            let expected = reference.get_view(source)?;
            for &j in rest {
                let other = BxPair::with_get(put.clone(), candidates[j].clone());
                if other.get_view(source)? != expected {
                    witness = Some((first, j, source.clone()));
                    break 'sources;
                }
            }
        }
    }
    Ok(Uniqueness {
        excluded,
        kept,
        witness,
    })
}
