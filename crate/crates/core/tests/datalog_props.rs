//! Property tests for the rule engine. The semi-naive evaluator is compared
//! against a deliberately naive fixpoint written here, which re-runs every
//! rule over the full database until nothing changes.

use std::collections::{BTreeMap, BTreeSet};

use dejima::datalog::{
    apply_delta, diff, evaluate, parse_program, ApplyMode, Atom, CmpOp, Database, Literal, Program,
    Rule, Term, Value,
};
use proptest::prelude::*;
use rust_decimal::Decimal;

type Facts = BTreeMap<String, BTreeSet<Vec<Value>>>;
type Env = BTreeMap<String, Value>;

const VARS: [&str; 3] = ["X", "Y", "Z"];
const EDB: [&str; 2] = ["e0", "e1"];

fn term_value(t: &Term, env: &Env) -> Option<Value> {
    match t {
        Term::Const(v) => Some(v.clone()),
        Term::Var(v) => env.get(v).cloned(),
        Term::Anon => None,
    }
}

fn matches(args: &[Term], tuple: &[Value], env: &Env) -> Option<Env> {
    let mut env = env.clone();
    for (t, v) in args.iter().zip(tuple) {
        match t {
            Term::Anon => {}
            Term::Const(c) if c == v => {}
            Term::Const(_) => return None,
            Term::Var(x) => match env.get(x) {
                Some(b) if b != v => return None,
                Some(_) => {}
                None => {
                    env.insert(x.clone(), v.clone());
                }
            },
        }
    }
    Some(env)
}

fn holds(op: CmpOp, l: &Value, r: &Value) -> bool {
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Lt => l < r,
        CmpOp::Le => l <= r,
    }
}

/// Every satisfying assignment, joining positive atoms left to right and
/// filtering with negations and comparisons afterwards.
fn assignments(body: &[Literal], facts: &Facts) -> Vec<Env> {
    let empty = BTreeSet::new();
    let mut envs = vec![Env::new()];
    for lit in body {
        if let Literal::Pos(a) = lit {
            let rel = facts.get(&a.pred).unwrap_or(&empty);
            envs = envs
                .iter()
                .flat_map(|env| rel.iter().filter_map(|t| matches(&a.args, t, env)))
                .collect();
        }
    }
    envs.retain(|env| {
        body.iter().all(|lit| match lit {
            Literal::Pos(_) => true,
            Literal::Neg(a) => {
                let rel = facts.get(&a.pred).unwrap_or(&empty);
                !rel.iter().any(|t| matches(&a.args, t, env).is_some())
            }
            Literal::Cmp(op, l, r) => {
                let (l, r) = (term_value(l, env).unwrap(), term_value(r, env).unwrap());
                holds(*op, &l, &r)
            }
        })
    });
    envs
}

/// Least fixpoint of each layer in turn.
fn naive(rules: &[Rule], layers: &[&[&str]], edb: &Database) -> Facts {
    let mut facts: Facts = edb
        .relations()
        .map(|(n, r)| (n.to_string(), r.iter().cloned().collect()))
        .collect();
    for layer in layers {
        loop {
            let mut changed = false;
            for rule in rules
                .iter()
                .filter(|r| layer.contains(&r.head.pred.as_str()))
            {
                for env in assignments(&rule.body, &facts) {
                    let t: Vec<Value> = rule
                        .head
                        .args
                        .iter()
                        .map(|a| term_value(a, &env).unwrap())
                        .collect();
                    changed |= facts.entry(rule.head.pred.clone()).or_default().insert(t);
                }
            }
            if !changed {
                break;
            }
        }
    }
    facts.retain(|_, s| !s.is_empty());
    facts
}

fn as_facts(db: &Database) -> Facts {
    db.relations()
        .filter(|(_, r)| !r.is_empty())
        .map(|(n, r)| (n.to_string(), r.iter().cloned().collect()))
        .collect()
}

fn arb_term() -> impl Strategy<Value = Term> {
    prop_oneof![
        6 => (0..VARS.len()).prop_map(|i| Term::var(VARS[i])),
        1 => (0i64..3).prop_map(|n| Term::Const(Value::Int(n))),
        1 => Just(Term::Anon),
    ]
}

fn arb_atom(preds: &'static [&'static str]) -> impl Strategy<Value = Atom> {
    ((0..preds.len()), arb_term(), arb_term())
        .prop_map(move |(p, a, b)| Atom::new(preds[p], vec![a, b]))
}

fn bound_vars(atoms: &[Atom]) -> Vec<String> {
    let set: BTreeSet<String> = atoms
        .iter()
        .flat_map(|a| a.vars().map(str::to_string))
        .collect();
    set.into_iter().collect()
}

/// A safe rule: head and negated/compared variables all occur in a positive
/// atom. `neg` lists the predicates the rule may negate.
fn arb_rule(
    head: &'static str,
    pos: &'static [&'static str],
    neg: &'static [&'static str],
) -> impl Strategy<Value = Rule> {
    (
        prop::collection::vec(arb_atom(pos), 1..=3),
        prop::option::of(arb_atom(neg)),
        prop::option::of((0..4usize, 0..8usize, 0..8usize)),
        0..8usize,
        0..8usize,
    )
        .prop_map(move |(atoms, negated, cmp, h0, h1)| {
            let bound = bound_vars(&atoms);
            let pick = |i: usize| -> Term {
                if bound.is_empty() {
                    Term::Const(Value::Int(i as i64 % 3))
                } else {
                    Term::var(bound[i % bound.len()].clone())
                }
            };
            let mut body: Vec<Literal> = atoms.into_iter().map(Literal::Pos).collect();
            if let Some(a) = negated {
                let args = a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(_) if !bound.is_empty() => {
                            let i = VARS.iter().position(|v| Some(*v) == t.as_var()).unwrap();
                            pick(i)
                        }
                        Term::Var(_) => Term::Anon,
                        other => other.clone(),
                    })
                    .collect();
                body.push(Literal::Neg(Atom::new(a.pred, args)));
            }
            if let Some((op, l, r)) = cmp {
                let op = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le][op];
                let r = if r % 3 == 0 {
                    Term::Const(Value::Int(1))
                } else {
                    pick(r)
                };
                body.push(Literal::Cmp(op, pick(l), r));
            }
            Rule::new(Atom::new(head, vec![pick(h0), pick(h1)]), body)
        })
}

/// `p0` is recursive over the inputs; `p1` may negate `p0`, so it sits in a
/// higher stratum.
fn arb_program() -> impl Strategy<Value = Program> {
    (
        prop::collection::vec(arb_rule("p0", &["e0", "e1", "p0"], &["e0", "e1"]), 1..=3),
        prop::collection::vec(
            arb_rule("p1", &["e0", "e1", "p0", "p1"], &["e1", "p0"]),
            0..=2,
        ),
    )
        .prop_map(|(a, b)| Program::new(a.into_iter().chain(b).collect()))
}

fn arb_db(preds: &'static [&'static str]) -> impl Strategy<Value = Database> {
    prop::collection::vec(((0..preds.len()), 0i64..4, 0i64..4), 0..12).prop_map(move |facts| {
        let mut db = Database::new();
        for p in preds {
            db.declare(p, 2).unwrap();
        }
        for (p, a, b) in facts {
            db.insert(preds[p], vec![Value::Int(a), Value::Int(b)])
                .unwrap();
        }
        db
    })
}

fn positive_program() -> impl Strategy<Value = Program> {
    prop::collection::vec(arb_rule("p0", &["e0", "e1", "p0"], &["e0"]), 1..=3).prop_map(|rules| {
        let rules = rules
            .into_iter()
            .map(|r| {
                let body = r
                    .body
                    .into_iter()
                    .filter(|l| !matches!(l, Literal::Neg(_)))
                    .collect();
                Rule::new(r.head, body)
            })
            .collect();
        Program::new(rules)
    })
}

fn superset(db: &Database, extra: &Database) -> Database {
    db.merged(extra).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn seminaive_matches_naive_fixpoint(p in arb_program(), db in arb_db(&EDB)) {
        let model = evaluate(&p, &db).unwrap();
        let expected = naive(&p.rules, &[&["p0"], &["p1"]], &db);
        prop_assert_eq!(as_facts(&model), expected, "program:\n{}", p);
    }

    #[test]
    fn printed_programs_parse_back(p in arb_program()) {
        let text = p.to_string();
        let back = parse_program(&text).unwrap();
        prop_assert_eq!(&back.rules, &p.rules);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn evaluation_is_idempotent(p in arb_program(), db in arb_db(&EDB)) {
        let once = evaluate(&p, &db).unwrap();
        let twice = evaluate(&p, &once).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn positive_programs_are_monotone(
        p in positive_program(),
        db in arb_db(&EDB),
        extra in arb_db(&EDB),
    ) {
        let small = as_facts(&evaluate(&p, &db).unwrap());
        let big = as_facts(&evaluate(&p, &superset(&db, &extra)).unwrap());
        for (name, tuples) in &small {
            let empty = BTreeSet::new();
            prop_assert!(tuples.is_subset(big.get(name).unwrap_or(&empty)), "{name} shrank");
        }
    }
}

fn arb_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<i64>().prop_map(Value::Int),
        (any::<i64>(), 0u32..6).prop_map(|(n, s)| Value::decimal(Decimal::new(n, s))),
        "\\PC{0,8}".prop_map(Value::str),
        "[a-z][a-z0-9_]{0,5}".prop_map(Value::str),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn constants_print_and_parse_back(values in prop::collection::vec(arb_value(), 1..4)) {
        let fact = Rule::new(
            Atom::new("r", values.iter().cloned().map(Term::Const).collect()),
            vec![],
        );
        let back = parse_program(&fact.to_string()).unwrap();
        prop_assert_eq!(&back.rules, &vec![fact]);
    }

    #[test]
    fn diff_then_apply_round_trips(a in arb_db(&EDB), b in arb_db(&EDB)) {
        let d = diff(&a, &b).unwrap();
        prop_assert_eq!(apply_delta(&b, &d, ApplyMode::Strict).unwrap(), a.clone());
        let back = diff(&b, &a).unwrap();
        prop_assert_eq!(apply_delta(&a, &back, ApplyMode::Strict).unwrap(), b.clone());
        prop_assert!(diff(&a, &a).unwrap().is_empty());
    }
}

#[test]
fn oracle_agrees_on_transitive_closure() {
    let p = parse_program("p0(X, Y) :- e0(X, Y).\np0(X, Z) :- p0(X, Y), e0(Y, Z).").unwrap();
    let db = Database::from_facts([(
        "e0",
        vec![
            vec![Value::Int(1), Value::Int(2)],
            vec![Value::Int(2), Value::Int(3)],
            vec![Value::Int(3), Value::Int(1)],
        ],
    )]);
    let facts = naive(&p.rules, &[&["p0"]], &db);
    assert_eq!(facts["p0"].len(), 9);
    assert_eq!(as_facts(&evaluate(&p, &db).unwrap()), facts);
}
