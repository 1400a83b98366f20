//! Stratified evaluation: reachability with negation and a comparison.
//!
//! cargo run --example evaluate

use dejima::datalog::{evaluate, parse_program, stratify, Database, Value};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let program = parse_program(
        "reach(X, Y) :- edge(X, Y).
         reach(X, Z) :- reach(X, Y), edge(Y, Z).
         node(X) :- edge(X, _).
         node(Y) :- edge(_, Y).
         unreachable(X, Y) :- node(X), node(Y), X <> Y, not reach(X, Y).",
    )?;
    for (i, level) in stratify(&program)?.iter().enumerate() {
        println!("stratum {i}: {level:?}");
    }

    let edge = |a: &str, b: &str| vec![Value::str(a), Value::str(b)];
    let db = Database::from_facts([("edge", vec![edge("a", "b"), edge("b", "c"), edge("d", "a")])]);
    let model = evaluate(&program, &db)?;
    for rel in ["reach", "unreachable"] {
        for t in model.tuples(rel) {
            println!("{rel}({}, {})", t[0], t[1]);
        }
    }
    Ok(())
}
