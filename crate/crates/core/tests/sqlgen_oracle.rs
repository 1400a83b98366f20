//! Emitted SQL against the golden listings, and the SQL-subset evaluator as
//! an oracle for the emitted queries.

mod common;

use std::fs;
use std::path::Path;

use proptest::prelude::*;
use rust_decimal::Decimal;

use dejima::datalog::{parse_program, Database, Value};
use dejima::putback::{BxPair, PutStrategy};
use dejima::sqlgen::{
    emit, emit_proc, emit_trigger, emit_view, sql_literal, subset, view_query, SqlError,
};

use common::*;

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/golden")
        .join(name);
    fs::read_to_string(p).unwrap()
}

#[test]
fn union_view_matches_the_golden_listing() {
    let view = emit_view(&derive("union")).unwrap();
    assert_eq!(squash(&view), squash(&golden("union.view.sql")));
}

#[test]
fn union_trigger_matches_the_golden_listing() {
    let trigger = emit_trigger(&put("union"));
    assert_eq!(squash(&trigger), squash(&golden("union.trigger.sql")));
}

#[test]
fn keyed_views_also_route_updates() {
    let trigger = emit_trigger(&put("rideshare_mediator"));
    assert!(trigger.contains("INSTEAD OF INSERT OR UPDATE OR DELETE ON prov1_public"));
    let proc = emit_proc(&put("rideshare_mediator")).unwrap();
    assert!(proc.contains("ELSIF TG_OP = 'UPDATE' THEN"));
    assert!(proc.contains("DELETE FROM prov1_public_updated WHERE vid = OLD.vid;"));
}

#[test]
fn guards_become_exceptions() {
    let proc = emit_proc(&put("rideshare_provider")).unwrap();
    assert_eq!(proc.matches("RAISE EXCEPTION").count(), 3);
    assert_eq!(
        emit_proc(&put("union"))
            .unwrap()
            .matches("RAISE EXCEPTION")
            .count(),
        0
    );
}

#[test]
fn rideshare_views() {
    let mediator = emit_view(&derive("rideshare_mediator")).unwrap();
    assert_eq!(
        squash(&mediator),
        "CREATE OR REPLACE VIEW prov1_public AS SELECT vid, area, rid FROM all_vehicles WHERE cid = 1"
    );
    let provider = emit_view(&derive("rideshare_provider")).unwrap();
    assert_eq!(
        squash(&provider),
        "CREATE OR REPLACE VIEW prov1_public AS SELECT DISTINCT vehicles.vid, area_map.area, \
         vehicles.rid FROM vehicles, area_map WHERE area_map.loc = vehicles.loc"
    );
}

#[test]
fn every_emitted_view_parses_back() {
    for name in bundled_names() {
        let bx = derive(name);
        let sql = emit(&bx).unwrap();
        let (view, _) = subset::parse_view(&sql.view).unwrap();
        assert_eq!(view, bx.view());
        assert!(sql
            .trigger
            .contains(&format!("EXECUTE PROCEDURE {}_proc();", bx.view())));
        assert!(sql.proc.trim_end().ends_with("$$;"));
    }
}

const PAIR: &str = "
view: v(x, y)
sources: e(x, y), f(x, y)
-e(X, Y) :- e(X, Y), not v(X, Y).
+e(X, Y) :- v(X, Y), not e(X, Y).
";

/// View definitions exercising joins, self-joins, negation, comparisons,
/// constants and projection.
const GETS: &[&str] = &[
    "v(X, Y) :- e(X, Y), f(Y, X).",
    "v(X, Y) :- e(X, Z), e(Z, Y).",
    "v(X, Y) :- e(X, Y), not f(X, _).",
    "v(X, 1) :- e(X, Y), Y < 2.",
    "v(X, Y) :- f(X, Y), X = Y.\nv(X, Y) :- e(X, Y), not f(Y, Y).",
    "v(X, X) :- e(X, _).",
    "v(X, Y) :- e(X, Y), Y = 2, X <= Y.",
    "v(X, Y) :- e(X, Y), not e(Y, X), X <> Y.",
    "v(X, Y) :- e(X, Y).\nv(X, Y) :- f(X, Y).\nv(X, Y) :- e(X, Z), f(Z, Y).",
];

fn hand_pair(get: &str) -> BxPair {
    BxPair::with_get(
        PutStrategy::parse("pair", PAIR).unwrap(),
        parse_program(get).unwrap(),
    )
}

fn arb_db() -> impl Strategy<Value = Database> {
    prop::collection::vec((any::<bool>(), 0i64..4, 0i64..4), 0..14).prop_map(|facts| {
        let mut db = Database::new();
        db.declare("e", 2).unwrap();
        db.declare("f", 2).unwrap();
        for (first, a, b) in facts {
            db.insert(
                if first { "e" } else { "f" },
                vec![Value::Int(a), Value::Int(b)],
            )
            .unwrap();
        }
        db
    })
}

fn sql_rows(bx: &BxPair, db: &Database) -> Vec<Vec<Value>> {
    let (_, query) = subset::parse_view(&emit_view(bx).unwrap()).unwrap();
    let schemas = bx.put.source_schemas();
    let mut rows = subset::eval_query(
        &query,
        &subset::Catalog {
            db,
            schemas: &schemas,
        },
    )
    .unwrap();
    rows.sort();
    rows
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Rows are compared as a sorted list, so a missing DISTINCT shows up as
    /// a duplicate.
    #[test]
    fn emitted_views_agree_with_datalog(get in 0..GETS.len(), db in arb_db()) {
        let bx = hand_pair(GETS[get]);
        let expected: Vec<_> = bx.get_view(&db).unwrap().tuples("v").cloned().collect();
        prop_assert_eq!(sql_rows(&bx, &db), expected, "{}", GETS[get]);
    }

    #[test]
    fn literals_round_trip(s in "[a-z' %;]{0,8}", n in -50i64..50, scale in 0u32..3) {
        let values = [
            Value::str(s),
            Value::Int(n),
            Value::decimal(Decimal::new(n, scale)),
        ];
        for v in values {
            let q = subset::parse_query(&format!("SELECT {}", sql_literal(&v))).unwrap();
            let schemas = Default::default();
            let rows = subset::eval_query(&q, &subset::Catalog { db: &Database::new(), schemas: &schemas }).unwrap();
            prop_assert_eq!(rows, vec![vec![v]]);
        }
    }
}

#[test]
fn untranslatable_views_are_errors() {
    let recursive = hand_pair("v(X, Y) :- e(X, Y).\nv(X, Z) :- v(X, Y), e(Y, Z).");
    assert!(matches!(
        view_query(&recursive),
        Err(SqlError::Recursive(_))
    ));
    let layered = hand_pair("w(X) :- f(X, _).\nv(X, Y) :- e(X, Y), not w(X).");
    assert!(matches!(
        view_query(&layered),
        Err(SqlError::Unsupported(_))
    ));
    let empty = BxPair::with_get(
        PutStrategy::parse("pair", PAIR).unwrap(),
        Default::default(),
    );
    assert!(matches!(emit_view(&empty), Err(SqlError::EmptyView(_))));
}

#[test]
fn subset_errors() {
    assert!(matches!(
        subset::parse_query("SELECT FROM"),
        Err(SqlError::Parse(_))
    ));
    assert!(matches!(
        subset::parse_view("SELECT 1"),
        Err(SqlError::Parse(_))
    ));
    let q = subset::parse_query("SELECT a FROM missing").unwrap();
    let schemas = Default::default();
    let cat = subset::Catalog {
        db: &Database::new(),
        schemas: &schemas,
    };
    assert!(matches!(
        subset::eval_query(&q, &cat),
        Err(SqlError::Eval(_))
    ));
}
