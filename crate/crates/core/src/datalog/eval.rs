//! Bottom-up evaluation: stratum by stratum, semi-naive within a stratum.
//!
//! Comparisons are filters over bound values; equality with a constant or
//! a bound variable also binds. Predicates with neither facts nor rules
//! evaluate as empty relations.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Atom, CmpOp, Constraint, Literal, Program, Rule, Term};
use super::database::{Database, Relation, Tuple};
use super::error::{Error, Result};
use super::stratify::stratification;
use super::value::Value;

pub type Bindings = BTreeMap<String, Value>;

/// Extends `edb` with the least model of every stratum, in order.
pub fn evaluate(program: &Program, edb: &Database) -> Result<Database> {
    let strat = stratification(program)?;
    let mut db = edb.clone();
    for rule in &program.rules {
        db.declare(&rule.head.pred, rule.head.arity())?;
    }
    let rules: BTreeSet<&Rule> = program.rules.iter().collect();
    for stratum in &strat.strata {
        let in_stratum: Vec<&Rule> = rules
            .iter()
            .copied()
            .filter(|r| stratum.contains(&r.head.pred))
            .collect();
        if !in_stratum.is_empty() {
            eval_stratum(&in_stratum, stratum, &mut db)?;
        }
    }
    Ok(db)
}

fn eval_stratum(rules: &[&Rule], stratum: &BTreeSet<String>, db: &mut Database) -> Result<()> {
    let mut delta: BTreeMap<String, Relation> = BTreeMap::new();
    for rule in rules {
        for t in fire(rule, db, None)? {
            if !db.contains(&rule.head.pred, &t) {
                delta
                    .entry(rule.head.pred.clone())
                    .or_insert_with(|| Relation::new(rule.head.arity()))
                    .insert(&rule.head.pred, t)?;
            }
        }
    }
    let recursive: Vec<&&Rule> = rules
        .iter()
        .filter(|r| {
            r.body
                .iter()
                .any(|l| l.is_positive_atom() && stratum.contains(&l.atom().unwrap().pred))
        })
        .collect();

    loop {
        for (name, rel) in &delta {
            for t in rel.iter() {
                db.insert(name, t.clone())?;
            }
        }
        if recursive.is_empty() || delta.values().all(Relation::is_empty) {
            return Ok(());
        }
        let mut next: BTreeMap<String, Relation> = BTreeMap::new();
        for rule in &recursive {
            for (i, lit) in rule.body.iter().enumerate() {
                let Literal::Pos(atom) = lit else { continue };
                let Some(d) = delta.get(&atom.pred).filter(|d| !d.is_empty()) else {
                    continue;
                };
                for t in fire(rule, db, Some((i, d)))? {
                    if !db.contains(&rule.head.pred, &t) {
                        next.entry(rule.head.pred.clone())
                            .or_insert_with(|| Relation::new(rule.head.arity()))
                            .insert(&rule.head.pred, t)?;
                    }
                }
            }
        }
        delta = next;
    }
}

/// Head tuples produced by one rule. `pinned` reads body literal `i` from
/// the given relation instead of the database.
pub(crate) fn fire(
    rule: &Rule,
    db: &Database,
    pinned: Option<(usize, &Relation)>,
) -> Result<Vec<Tuple>> {
    let solutions = solve_pinned(&rule.body, db, Bindings::new(), pinned)?;
    Ok(solutions
        .iter()
        .map(|b| instantiate(&rule.head, b))
        .collect())
}

pub(crate) fn instantiate(head: &Atom, b: &Bindings) -> Tuple {
    head.args
        .iter()
        .map(|t| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => b[v].clone(),
            Term::Anon => unreachable!("validated: no anonymous head terms"),
        })
        .collect()
}

/// All variable assignments satisfying `body` over `db`, extending `seed`.
pub fn solve(body: &[Literal], db: &Database, seed: Bindings) -> Result<Vec<Bindings>> {
    solve_pinned(body, db, seed, None)
}

pub(crate) fn solve_pinned(
    body: &[Literal],
    db: &Database,
    seed: Bindings,
    pinned: Option<(usize, &Relation)>,
) -> Result<Vec<Bindings>> {
    let mut frontier = vec![seed];
    let mut done = vec![false; body.len()];
    // Atoms in written order; filters as soon as their variables are bound.
    for i in 0..body.len() {
        frontier = run_ready_filters(body, db, &mut done, frontier)?;
        if frontier.is_empty() {
            return Ok(frontier);
        }
        let Literal::Pos(atom) = &body[i] else {
            continue;
        };
        done[i] = true;
        let rel = match pinned {
            Some((p, r)) if p == i => Some(r),
            _ => db.get(&atom.pred),
        };
        let Some(rel) = rel else {
            return Ok(Vec::new());
        };
        let mut next = Vec::new();
        for b in &frontier {
            for t in rel.iter() {
                if let Some(nb) = match_atom(atom, t, b) {
                    next.push(nb);
                }
            }
        }
        frontier = next;
    }
    frontier = run_ready_filters(body, db, &mut done, frontier)?;
    if !frontier.is_empty() {
        if let Some(i) = done.iter().position(|d| !d) {
            unreachable!("validated body left `{}` with unbound variables", body[i]);
        }
    }
    Ok(frontier)
}

fn run_ready_filters(
    body: &[Literal],
    db: &Database,
    done: &mut [bool],
    mut frontier: Vec<Bindings>,
) -> Result<Vec<Bindings>> {
    // Which variables are bound is uniform across the frontier, so the first
    // binding set decides readiness.
    let Some(sample) = frontier.first() else {
        return Ok(frontier);
    };
    let mut bound: BTreeSet<String> = sample.keys().cloned().collect();
    let mut progress = true;
    while progress && !frontier.is_empty() {
        progress = false;
        for (i, lit) in body.iter().enumerate() {
            if done[i] {
                continue;
            }
            match lit {
                Literal::Pos(_) => {}
                Literal::Neg(atom) => {
                    if atom.vars().all(|v| bound.contains(v)) {
                        done[i] = true;
                        progress = true;
                        frontier.retain(|b| negation_holds(atom, db, b));
                    }
                }
                Literal::Cmp(op, l, r) => {
                    let lb = term_bound(l, &bound);
                    let rb = term_bound(r, &bound);
                    if lb && rb {
                        done[i] = true;
                        progress = true;
                        let mut kept = Vec::with_capacity(frontier.len());
                        for b in frontier {
                            if compare(lit, *op, &resolve(l, &b), &resolve(r, &b))? {
                                kept.push(b);
                            }
                        }
                        frontier = kept;
                    } else if *op == CmpOp::Eq && (lb || rb) {
                        let (free, given) = if lb { (r, l) } else { (l, r) };
                        let Term::Var(name) = free else { continue };
                        done[i] = true;
                        progress = true;
                        for b in &mut frontier {
                            let v = resolve(given, b);
                            b.insert(name.clone(), v);
                        }
                        bound.insert(name.clone());
                    }
                }
            }
        }
    }
    Ok(frontier)
}

fn term_bound(t: &Term, bound: &BTreeSet<String>) -> bool {
    match t {
        Term::Const(_) => true,
        Term::Var(v) => bound.contains(v),
        Term::Anon => false,
    }
}

fn resolve(t: &Term, b: &Bindings) -> Value {
    match t {
        Term::Const(c) => c.clone(),
        Term::Var(v) => b[v].clone(),
        Term::Anon => unreachable!("validated: no anonymous comparison terms"),
    }
}

fn compare(lit: &Literal, op: CmpOp, l: &Value, r: &Value) -> Result<bool> {
    match l.compare(r) {
        Some(ord) => Ok(op.holds(ord)),
        None => Err(Error::CrossKind {
            literal: lit.clone(),
            lhs: l.clone(),
            rhs: r.clone(),
        }),
    }
}

fn match_atom(atom: &Atom, t: &[Value], b: &Bindings) -> Option<Bindings> {
    let mut out: Option<Bindings> = None;
    for (term, v) in atom.args.iter().zip(t) {
        match term {
            Term::Anon => {}
            Term::Const(c) => {
                if c != v {
                    return None;
                }
            }
            Term::Var(name) => {
                let cur = out.as_ref().unwrap_or(b);
                match cur.get(name) {
                    Some(bound) if bound != v => return None,
                    Some(_) => {}
                    None => {
                        out.get_or_insert_with(|| b.clone())
                            .insert(name.clone(), v.clone());
                    }
                }
            }
        }
    }
    Some(out.unwrap_or_else(|| b.clone()))
}

fn negation_holds(atom: &Atom, db: &Database, b: &Bindings) -> bool {
    !db.tuples(&atom.pred)
        .any(|t| match_atom(atom, t, b).is_some())
}

/// First satisfying assignment of each violated constraint, by index.
pub fn constraint_violations(
    constraints: &[Constraint],
    db: &Database,
) -> Result<Vec<(usize, Bindings)>> {
    let mut out = Vec::new();
    for (i, c) in constraints.iter().enumerate() {
        if let Some(b) = solve(&c.body, db, Bindings::new())?.into_iter().next() {
            out.push((i, b));
        }
    }
    Ok(out)
}

/// Whether some rule for `pred` derives `tuple` from `db`.
pub fn derivable(rules: &[Rule], pred: &str, tuple: &[Value], db: &Database) -> Result<bool> {
    for rule in rules.iter().filter(|r| r.head.pred == pred) {
        let mut seed = Bindings::new();
        let mut ok = true;
        for (term, v) in rule.head.args.iter().zip(tuple) {
            match term {
                Term::Const(c) => ok &= c == v,
                Term::Var(name) => match seed.get(name) {
                    Some(prev) => ok &= prev == v,
                    None => {
                        seed.insert(name.clone(), v.clone());
                    }
                },
                Term::Anon => {}
            }
        }
        if ok && !solve(&rule.body, db, seed)?.is_empty() {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    fn s(x: &str) -> Value {
        Value::str(x)
    }

    fn ints(xs: &[i64]) -> Vec<Tuple> {
        xs.iter().map(|&x| vec![Value::Int(x)]).collect()
    }

    #[test]
    fn union_view() {
        let p = parse_program("v(X) :- s1(X).\nv(X) :- s2(X).").unwrap();
        let db = Database::from_facts([("s1", ints(&[1, 2])), ("s2", ints(&[2, 3]))]);
        let out = evaluate(&p, &db).unwrap();
        assert_eq!(
            out.get("v").unwrap().tuples(),
            &ints(&[1, 2, 3]).into_iter().collect()
        );
        // Input untouched.
        assert!(db.get("v").is_none());
    }

    #[test]
    fn union_of_empty_sources() {
        let p = parse_program("v(X) :- s1(X).\nv(X) :- s2(X).").unwrap();
        let out = evaluate(&p, &Database::new()).unwrap();
        assert!(out.get("v").unwrap().is_empty());
    }

    #[test]
    fn provider_join() {
        let p =
            parse_program("prov1_public(V, A, R) :- vehicles(V, L, R), area_map(L, A).").unwrap();
        let db = Database::from_facts([
            ("vehicles", vec![vec![s("v1"), s("l1"), s("r0")]]),
            ("area_map", vec![vec![s("l1"), s("a1")]]),
        ]);
        let out = evaluate(&p, &db).unwrap();
        assert_eq!(
            out.get("prov1_public")
                .unwrap()
                .iter()
                .cloned()
                .collect::<Vec<_>>(),
            vec![vec![s("v1"), s("a1"), s("r0")]]
        );
    }

    #[test]
    fn transitive_closure() {
        let p = parse_program("t(X, Y) :- e(X, Y).\nt(X, Z) :- t(X, Y), e(Y, Z).").unwrap();
        let e: Vec<Tuple> = (0..5)
            .map(|i| vec![Value::Int(i), Value::Int(i + 1)])
            .collect();
        let out = evaluate(&p, &Database::from_facts([("e", e)])).unwrap();
        assert_eq!(out.len("t"), 15);
    }

    #[test]
    fn negation_and_comparison() {
        let p = parse_program("p(X) :- q(X), not r(X), X > 1.").unwrap_err();
        // `>` is not part of the language
        assert!(matches!(p, Error::Syntax { .. }));
        let p = parse_program("p(X) :- q(X), not r(X), 1 < X.").unwrap();
        let db = Database::from_facts([("q", ints(&[1, 2, 3])), ("r", ints(&[3]))]);
        let out = evaluate(&p, &db).unwrap();
        assert_eq!(
            out.get("p").unwrap().tuples(),
            &ints(&[2]).into_iter().collect()
        );
    }

    #[test]
    fn negation_with_anonymous() {
        let p = parse_program("p(X) :- q(X), not r(X, _).").unwrap();
        let db = Database::from_facts([
            ("q", vec![vec![s("a")], vec![s("b")]]),
            ("r", vec![vec![s("a"), s("z")]]),
        ]);
        let out = evaluate(&p, &db).unwrap();
        assert_eq!(
            out.get("p").unwrap().iter().cloned().collect::<Vec<_>>(),
            vec![vec![s("b")]]
        );
    }

    #[test]
    fn cross_kind_comparison_is_an_error() {
        let p = parse_program("p(X) :- q(X), X < 3.").unwrap();
        let db = Database::from_facts([("q", vec![vec![s("a")]])]);
        assert!(matches!(evaluate(&p, &db), Err(Error::CrossKind { .. })));
    }

    #[test]
    fn equality_binds_constant_column() {
        let p = parse_program("p(C, X) :- q(X), C = 1.").unwrap();
        let db = Database::from_facts([("q", vec![vec![s("a")]])]);
        let out = evaluate(&p, &db).unwrap();
        assert!(out.contains("p", &[Value::Int(1), s("a")]));
    }

    #[test]
    fn unknown_predicates_are_empty() {
        let p = parse_program("p(X) :- q(X), not missing(X).\nr(X) :- missing(X).").unwrap();
        let db = Database::from_facts([("q", vec![vec![s("a")]])]);
        let out = evaluate(&p, &db).unwrap();
        assert_eq!(out.len("p"), 1);
        assert_eq!(out.len("r"), 0);
    }

    #[test]
    fn constraints_report_witness() {
        let p = parse_program("false :- q(X), not r(X).").unwrap();
        let db = Database::from_facts([("q", vec![vec![s("a")]])]);
        let v = constraint_violations(&p.constraints, &db).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].1["X"], s("a"));
    }

    #[test]
    fn derivable_checks_one_tuple() {
        let p = parse_program("v(X) :- s1(X).\nv(X) :- s2(X).").unwrap();
        let db = Database::from_facts([("s2", ints(&[4]))]);
        assert!(derivable(&p.rules, "v", &[Value::Int(4)], &db).unwrap());
        assert!(!derivable(&p.rules, "v", &[Value::Int(5)], &db).unwrap());
    }
}
