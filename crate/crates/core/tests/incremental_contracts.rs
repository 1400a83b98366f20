//! Incremental get and put against full recomputation, stated as the two
//! maintenance contracts: get(w(S)) = w'(get(S)) and put(S, u(V)) = u'(V).

mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dejima::datalog::{
    apply_delta, diff, evaluate, parse_program, ApplyMode, Database, Delta, Value,
};
use dejima::incremental::{inc_get, inc_put, GetPlan};
use dejima::putback::law_universe;

use common::*;

const CASES: usize = 500;

/// Applies `inc_get` to the old view and compares with the view of the
/// changed source.
fn get_contract(name: &str) {
    let bx = derive(name);
    let universe = law_universe(&bx, 4);
    let sources = universe.restrict(
        bx.put
            .sources
            .iter()
            .chain(&bx.put.references)
            .map(String::as_str),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checked = 0;
    while checked < CASES {
        let source = sources.random(&mut rng);
        let Some((rel, edit)) = sources.random_single_delta(&source, &mut rng) else {
            continue;
        };
        let w = edit.to_delta(&rel);
        let changed = apply_delta(&source, &w, ApplyMode::Strict).unwrap();
        let lhs = bx.get_view(&changed).unwrap();
        let w_view = inc_get(&bx, &source, &w).unwrap();
        let rhs = apply_delta(&bx.get_view(&source).unwrap(), &w_view, ApplyMode::Strict).unwrap();
        assert_eq!(lhs, rhs, "{name}: source {source:?}, change {w:?}");
        checked += 1;
    }
}

/// Applies `inc_put` to the source and compares with putting back the
/// edited view. Edits the strategy refuses are skipped, and a source with
/// no accepted edit is replaced.
fn put_contract(name: &str) {
    let bx = derive(name);
    let universe = law_universe(&bx, 4);
    let sources = universe.restrict(
        bx.put
            .sources
            .iter()
            .chain(&bx.put.references)
            .map(String::as_str),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut checked, mut refused) = (0, 0);
    while checked < CASES {
        let source = sources.random(&mut rng);
        let view = bx.get_view(&source).unwrap();
        let mut edits = universe.edits(bx.view(), &view);
        edits.shuffle(&mut rng);
        for edit in edits {
            let u = edit.to_delta(bx.view());
            let updated = apply_delta(&view, &u, ApplyMode::Strict).unwrap();
            let full = bx.put.put_apply(&source, &updated);
            let inc = inc_put(&bx, &source, &view, &u);
            match (full, inc) {
                (Ok(lhs), Ok(u_src)) => {
                    let rhs = apply_delta(&bx.put.source_part(&source), &u_src, ApplyMode::Strict)
                        .unwrap();
                    assert_eq!(lhs, rhs, "{name}: source {source:?}, edit {u:?}");
                    checked += 1;
                    break;
                }
                (Err(_), Err(_)) => refused += 1,
                (full, inc) => panic!("{name}: paths disagree on refusal: {full:?} vs {inc:?}"),
            }
        }
    }
    assert!(refused < CASES * 100, "{name}: {refused} refusals");
}

macro_rules! contracts {
    ($($get:ident, $put:ident => $name:literal;)*) => {
        $(#[test]
        fn $get() {
            get_contract($name);
        }
        #[test]
        fn $put() {
            put_contract($name);
        })*
    };
}

contracts! {
    union_get, union_put => "union";
    union_both_get, union_both_put => "union_both";
    mediator_get, mediator_put => "rideshare_mediator";
    mediator2_get, mediator2_put => "rideshare_mediator2";
    provider_get, provider_put => "rideshare_provider";
    provider_rebook_get, provider_rebook_put => "rideshare_provider_rebook";
    provider2_get, provider2_put => "rideshare_provider2";
}

const PROGRAMS: &[&str] = &[
    // Join and projection, maintained with delta rules.
    "p(X, Z) :- e(X, Y), f(Y, Z).",
    // Negation of a relation that may change.
    "p(X, Y) :- e(X, Y), not f(X, Y).",
    // Two layers, the second negating the first.
    "q(X) :- e(X, _).\np(X, Y) :- f(X, Y), not q(Y).",
    // Recursion.
    "p(X, Y) :- e(X, Y).\np(X, Z) :- p(X, Y), e(Y, Z).",
    // Comparison and a constant.
    "p(X, Y) :- e(X, Y), X < Y.\np(X, 0) :- f(X, 0).",
];

fn arb_facts() -> impl Strategy<Value = Vec<(bool, i64, i64)>> {
    prop::collection::vec((any::<bool>(), 0i64..4, 0i64..4), 0..10)
}

fn to_db(facts: &[(bool, i64, i64)]) -> Database {
    let mut db = Database::new();
    db.declare("e", 2).unwrap();
    db.declare("f", 2).unwrap();
    for &(first, a, b) in facts {
        db.insert(
            if first { "e" } else { "f" },
            vec![Value::Int(a), Value::Int(b)],
        )
        .unwrap();
    }
    db
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    /// Multi-tuple changes on every program shape: the propagated model and
    /// delta equal those of evaluating from scratch.
    #[test]
    fn propagation_matches_recomputation(
        program in 0..PROGRAMS.len(),
        before in arb_facts(),
        after in arb_facts(),
    ) {
        let p = parse_program(PROGRAMS[program]).unwrap();
        let (before, after) = (to_db(&before), to_db(&after));
        let edb_delta: Delta = diff(&after, &before).unwrap();
        let old = evaluate(&p, &before).unwrap();
        let new = evaluate(&p, &after).unwrap();
        let plan = GetPlan::new(&p).unwrap();
        let prop = plan.propagate(&old, &edb_delta).unwrap();
        prop_assert_eq!(&prop.model, &new);
        let idb: Vec<&str> = p.idb().into_iter().collect();
        let expected = diff(&new.restrict(idb.iter().copied()), &old.restrict(idb.iter().copied())).unwrap();
        prop_assert_eq!(prop.delta, expected);
    }
}
