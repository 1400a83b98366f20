//! Static checks: consistent arities and range restriction.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{CmpOp, Literal, Program, Rule, Term};
use super::error::{Error, Result};

pub fn check(program: &Program) -> Result<()> {
    check_arities(program)?;
    for rule in &program.rules {
        check_rule(rule)?;
    }
    for c in &program.constraints {
        check_body(&c.body, &[], &c.to_string())?;
    }
    Ok(())
}

fn check_arities(program: &Program) -> Result<()> {
    let mut seen: BTreeMap<&str, usize> = program
        .schemas
        .iter()
        .map(|(k, s)| (k.as_str(), s.arity()))
        .collect();
    let atoms = program
        .rules
        .iter()
        .flat_map(|r| std::iter::once(&r.head).chain(r.body.iter().filter_map(Literal::atom)))
        .chain(
            program
                .constraints
                .iter()
                .flat_map(|c| c.body.iter().filter_map(Literal::atom)),
        );
    for atom in atoms {
        let expected = *seen.entry(atom.pred.as_str()).or_insert(atom.arity());
        if expected != atom.arity() {
            return Err(Error::ArityClash {
                pred: atom.pred.clone(),
                expected,
                found: atom.arity(),
            });
        }
    }
    Ok(())
}

/// Variables bound by the body: those in positive atoms, closed under
/// equality with constants and with already bound variables.
pub fn limited_vars(body: &[Literal]) -> BTreeSet<&str> {
    let mut limited: BTreeSet<&str> = body
        .iter()
        .filter(|l| l.is_positive_atom())
        .flat_map(|l| l.atom().unwrap().vars())
        .collect();
    loop {
        let before = limited.len();
        for l in body {
            if let Literal::Cmp(CmpOp::Eq, a, b) = l {
                match (a, b) {
                    (Term::Var(x), Term::Const(_)) | (Term::Const(_), Term::Var(x)) => {
                        limited.insert(x);
                    }
                    (Term::Var(x), Term::Var(y)) => {
                        if limited.contains(x.as_str()) {
                            limited.insert(y);
                        } else if limited.contains(y.as_str()) {
                            limited.insert(x);
                        }
                    }
                    _ => {}
                }
            }
        }
        if limited.len() == before {
            return limited;
        }
    }
}

fn check_rule(rule: &Rule) -> Result<()> {
    if rule.head.args.contains(&Term::Anon) {
        return Err(Error::MisplacedAnonymous {
            rule: rule.to_string(),
        });
    }
    let head_vars: Vec<&str> = rule.head.vars().collect();
    check_body(&rule.body, &head_vars, &rule.to_string())
}

fn check_body(body: &[Literal], head_vars: &[&str], text: &str) -> Result<()> {
    let limited = limited_vars(body);
    let mut needs: Vec<&str> = head_vars.to_vec();
    for l in body {
        match l {
            Literal::Pos(_) => {}
            Literal::Neg(a) => needs.extend(a.vars()),
            Literal::Cmp(_, x, y) => {
                if *x == Term::Anon || *y == Term::Anon {
                    return Err(Error::MisplacedAnonymous {
                        rule: text.to_string(),
                    });
                }
                needs.extend(x.as_var());
                needs.extend(y.as_var());
            }
        }
    }
    match needs.into_iter().find(|v| !limited.contains(v)) {
        Some(v) => Err(Error::UnsafeVariable {
            var: v.to_string(),
            rule: text.to_string(),
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use crate::datalog::parse_program;
    use crate::datalog::Error;

    #[test]
    fn equality_with_constant_binds() {
        parse_program(
            "+all_vehicles(C, V, A, R) :- prov1_public(V, A, R), C = 1, not all_vehicles(C, V, A, R).",
        )
        .unwrap();
    }

    #[test]
    fn comparison_alone_does_not_bind() {
        let e = parse_program("p(X) :- q(Y), X < Y.").unwrap_err();
        assert!(matches!(e, Error::UnsafeVariable { var, .. } if var == "X"));
    }

    #[test]
    fn equality_chain_binds() {
        parse_program("p(X) :- q(Y), X = Z, Z = Y.").unwrap();
    }

    #[test]
    fn anonymous_in_head_rejected() {
        assert!(matches!(
            parse_program("p(_) :- q(X).").unwrap_err(),
            Error::MisplacedAnonymous { .. }
        ));
    }

    #[test]
    fn anonymous_inside_negation_allowed() {
        parse_program("p(X) :- q(X), not r(X, _).").unwrap();
    }

    #[test]
    fn unsafe_constraint() {
        assert!(parse_program("false :- not q(X).").is_err());
    }
}
