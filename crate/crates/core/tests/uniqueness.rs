//! Well-behaved view definitions for one put agree on every source.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dejima::corpus::Universe;
use dejima::datalog::{parse_program, Database, Program, Value};
use dejima::putback::{check_uniqueness, BxPair};

use common::*;

/// The derived definition, two written by hand, and two that break a law.
fn candidates() -> Vec<Program> {
    let mut out = vec![derive("union").get];
    for text in [
        "v(X) :- s2(X).\nv(X) :- s1(X), not s2(X).",
        "v(X) :- s1(X).\nv(Y) :- s2(Y), not s1(Y).\nv(Z) :- s1(Z), s2(Z).",
        "v(X) :- s2(X).",
        "v(X) :- s1(X), not s2(X).",
    ] {
        out.push(parse_program(text).unwrap());
    }
    out
}

fn corpus(n: usize) -> Vec<Database> {
    let put = put("union");
    let universe = Universe::new(put.source_schemas(), &put.column_kinds(None), 6, None);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..n).map(|_| universe.random(&mut rng)).collect()
}

#[test]
fn well_behaved_candidates_agree_on_200_sources() {
    let u = check_uniqueness(&put("union"), &candidates(), &corpus(200), SEED).unwrap();
    assert_eq!(u.kept, vec![0, 1, 2]);
    let excluded: Vec<usize> = u.excluded.iter().map(|(i, _)| *i).collect();
    assert_eq!(excluded, vec![3, 4]);
    assert!(u.is_pass(), "{:?}", u.witness);
}

#[test]
fn a_single_candidate_is_trivially_unique() {
    let u = check_uniqueness(&put("union"), &candidates()[..1], &corpus(20), SEED).unwrap();
    assert_eq!(u.kept, vec![0]);
    assert!(u.is_pass());
}

fn arb_unary() -> impl Strategy<Value = Vec<Vec<Value>>> {
    prop::collection::btree_set("[a-f]", 0..6)
        .prop_map(|s| s.into_iter().map(|x| vec![Value::str(x)]).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Off the seeded corpus, the kept candidates still compute the same view.
    #[test]
    fn kept_candidates_agree_everywhere(s1 in arb_unary(), s2 in arb_unary()) {
        let source = Database::from_facts([("s1", s1), ("s2", s2)]);
        let put = put("union");
        let views: Vec<Database> = candidates()[..3]
            .iter()
            .map(|g| BxPair::with_get(put.clone(), g.clone()).get_view(&source).unwrap())
            .collect();
        prop_assert_eq!(&views[0], &views[1]);
        prop_assert_eq!(&views[0], &views[2]);
    }
}
