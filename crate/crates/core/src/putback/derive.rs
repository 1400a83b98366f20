use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Universe;
use crate::datalog::{
    evaluate, limited_vars, solve, stratify, validate_program, Bindings, Constraint, Database,
    Literal, Program, Rule, Term,
};

use super::{PutStrategy, PutbackError};

/// Where a constraint of the derivation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    /// Delta rule at this index, with its head replaced by `false`.
    Rule(usize),
    /// Guard constraint at this index.
    Guard(usize),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Rule(i) => write!(f, "rule {}", i + 1),
            Origin::Guard(i) => write!(f, "guard {}", i + 1),
        }
    }
}

/// A constraint left after swapping, and how it was verified.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCheck {
    pub constraint: Constraint,
    pub origin: Origin,
    /// Source instances the constraint was checked on.
    pub instances: usize,
    /// Whether those were all instances of the bounded universe.
    pub exhaustive: bool,
}

/// Bounds for residual verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeriveConfig {
    /// Fresh values per column on top of the strategy's constants.
    pub bound: usize,
    /// Instance cap; larger universes are sampled.
    pub cap: usize,
    pub seed: u64,
}

impl Default for DeriveConfig {
    fn default() -> Self {
        DeriveConfig {
            bound: 3,
            cap: 10_000,
            seed: 42,
        }
    }
}

/// A strategy paired with a view definition.
#[derive(Debug, Clone)]
pub struct BxPair {
    pub put: PutStrategy,
    pub get: Program,
    pub residuals: Vec<ResidualCheck>,
}

impl BxPair {
    /// Pairs `put` with an arbitrary view definition, unchecked.
    pub fn with_get(put: PutStrategy, get: Program) -> Self {
        BxPair {
            put,
            get,
            residuals: Vec::new(),
        }
    }

    pub fn view(&self) -> &str {
        &self.put.view
    }

    /// The view relation computed from `source`.
    pub fn get_view(&self, source: &Database) -> Result<Database, PutbackError> {
        let model = evaluate(&self.get, &self.put.source_part(source))?;
        let mut out = model.restrict([self.view()]);
        out.declare(self.view(), self.put.view_schema().arity())?;
        Ok(out)
    }
}

/// Result of the syntactic half of derivation.
#[derive(Debug, Clone)]
pub struct Swapped {
    pub get: Program,
    pub residuals: Vec<(Constraint, Origin)>,
}

/// Turns delta rules into `false :- body` constraints and swaps every
/// constraint with a single negated view literal (and no other view
/// occurrence) into a view rule. The rest are residuals.
pub fn swap(put: &PutStrategy) -> Result<Swapped, PutbackError> {
    let constraints = put
        .program
        .rules
        .iter()
        .enumerate()
        .map(|(i, r)| {
            (
                Constraint {
                    body: r.body.clone(),
                },
                Origin::Rule(i),
            )
        })
        .chain(
            put.program
                .constraints
                .iter()
                .enumerate()
                .map(|(i, c)| (c.clone(), Origin::Guard(i))),
        );

    let mut rules: Vec<Rule> = Vec::new();
    let mut residuals = Vec::new();
    for (c, origin) in constraints {
        let negated: Vec<usize> = c
            .body
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Literal::Neg(a) if a.pred == put.view))
            .map(|(i, _)| i)
            .collect();
        let positive = c
            .body
            .iter()
            .any(|l| matches!(l, Literal::Pos(a) if a.pred == put.view));
        let unsupported = |reason: &str| PutbackError::UnsupportedForm {
            constraint: format!("{c} ({origin})"),
            reason: reason.to_string(),
        };
        match (negated.as_slice(), positive) {
            ([], _) => residuals.push((c, origin)),
            ([_], true) => return Err(unsupported("the view occurs both negated and positively")),
            ([i], false) => {
                let Literal::Neg(head) = &c.body[*i] else {
                    unreachable!()
                };
                if head.args.iter().any(|t| matches!(t, Term::Anon)) {
                    return Err(unsupported(
                        "the negated view literal has anonymous arguments",
                    ));
                }
                let mut body = c.body.clone();
                body.remove(*i);
                let bound = limited_vars(&body);
                if let Some(v) = head.vars().find(|v| !bound.contains(v)) {
                    return Err(unsupported(&format!(
                        "variable `{v}` of the view literal is not bound by the rest of the body"
                    )));
                }
                rules.push(Rule::new(head.clone(), body));
            }
            (_, _) => return Err(unsupported("more than one negated view literal")),
        }
    }
    if rules.is_empty() {
        return Err(PutbackError::DerivationImpossible {
            view: put.view.clone(),
        });
    }
    let mut get = Program::new(rules);
    get.schemas = put.source_schemas();
    get.schemas.insert(put.view.clone(), put.view_schema());
    validate_program(&get)?;
    stratify(&get)?;
    Ok(Swapped { get, residuals })
}

/// Checks every residual against the view computed by `get` on each source
/// instance of the bounded universe.
pub fn verify_residuals(
    put: &PutStrategy,
    get: &Program,
    residuals: &[(Constraint, Origin)],
    cfg: &DeriveConfig,
) -> Result<Vec<ResidualCheck>, PutbackError> {
    if residuals.is_empty() {
        return Ok(Vec::new());
    }
    let kinds = put.column_kinds(Some(get));
    let universe = Universe::new(put.source_schemas(), &kinds, cfg.bound, None);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (instances, exhaustive) = universe.instances(cfg.cap, &mut rng);
    for db in &instances {
        let model = evaluate(get, db)?;
        for (c, origin) in residuals {
            if let Some(b) = solve(&c.body, &model, Bindings::new())?.into_iter().next() {
                return Err(PutbackError::ResidualViolated {
                    constraint: format!("{c} ({origin})"),
                    witness: super::Witness(b),
                    counterexample: Box::new(db.clone()),
                    view: Box::new(model.restrict([put.view.as_str()])),
                });
            }
        }
    }
    Ok(residuals
        .iter()
        .map(|(c, origin)| ResidualCheck {
            constraint: c.clone(),
            origin: *origin,
            instances: instances.len(),
            exhaustive,
        })
        .collect())
}

/// Derives the view definition of `put` and verifies its residuals.
pub fn derive_get(put: &PutStrategy, cfg: &DeriveConfig) -> Result<BxPair, PutbackError> {
    let Swapped { get, residuals } = swap(put)?;
    let residuals = verify_residuals(put, &get, &residuals, cfg)?;
    Ok(BxPair {
        put: put.clone(),
        get,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    fn strategy(text: &str) -> PutStrategy {
        PutStrategy::parse("t", text).unwrap()
    }

    const UNION: &str = "view: v(a)\nsources: s1(a), s2(a)\n\
        -s1(X) :- s1(X), not v(X).\n\
        -s2(X) :- s2(X), not v(X).\n\
        +s1(X) :- v(X), not s1(X), not s2(X).\n";

    #[test]
    fn union_swaps_two_rules_and_keeps_one_residual() {
        let bx = derive_get(&strategy(UNION), &DeriveConfig::default()).unwrap();
        let expected = parse_program("v(X) :- s1(X).\nv(X) :- s2(X).").unwrap();
        assert!(bx.get.equivalent_syntax(&expected), "{}", bx.get);
        assert_eq!(bx.residuals.len(), 1);
        assert_eq!(bx.residuals[0].origin, Origin::Rule(2));
        assert!(bx.residuals[0].exhaustive);
        assert_eq!(bx.residuals[0].instances, 64);
    }

    #[test]
    fn positive_only_strategy_cannot_be_derived() {
        let s = strategy("view: v(a)\nsources: s(a)\n+s(X) :- v(X), not s(X).\n");
        assert!(matches!(
            derive_get(&s, &DeriveConfig::default()),
            Err(PutbackError::DerivationImpossible { .. })
        ));
    }

    #[test]
    fn two_negated_view_literals_are_unsupported() {
        let s = strategy(
            "view: v(a, b)\nsources: s(a, b)\n-s(X, Y) :- s(X, Y), not v(X, Y), not v(Y, X).\n",
        );
        let err = derive_get(&s, &DeriveConfig::default()).unwrap_err();
        assert!(matches!(err, PutbackError::UnsupportedForm { .. }), "{err}");
    }

    #[test]
    fn mixed_polarity_is_unsupported() {
        let s = strategy("view: v(a)\nsources: s(a), t(a)\n-s(X) :- s(X), not v(X), t(Y), v(Y).\n");
        let err = derive_get(&s, &DeriveConfig::default()).unwrap_err();
        assert!(
            err.to_string().contains("both negated and positively"),
            "{err}"
        );
    }

    #[test]
    fn violated_residual_reports_a_counterexample() {
        // The view follows s1, but insertions go to s2 only: any element of
        // s1 missing from s2 violates the insertion residual.
        let s = strategy(
            "view: v(a)\nsources: s1(a), s2(a)\n\
             -s1(X) :- s1(X), not v(X).\n\
             +s2(X) :- v(X), not s2(X).\n",
        );
        match derive_get(&s, &DeriveConfig::default()) {
            Err(PutbackError::ResidualViolated {
                counterexample: source,
                view,
                ..
            }) => {
                let x = source.tuples("s1").find(|t| !source.contains("s2", t));
                assert!(x.is_some(), "{source:?}");
                assert!(view.contains("v", x.unwrap()));
            }
            other => panic!("expected a residual violation, got {other:?}"),
        }
    }

    #[test]
    fn derivation_ignores_rule_order() {
        let reordered = "view: v(a)\nsources: s1(a), s2(a)\n\
            +s1(Y) :- v(Y), not s2(Y), not s1(Y).\n\
            -s2(Z) :- s2(Z), not v(Z).\n\
            -s1(X) :- s1(X), not v(X).\n";
        let a = derive_get(&strategy(UNION), &DeriveConfig::default()).unwrap();
        let b = derive_get(&strategy(reordered), &DeriveConfig::default()).unwrap();
        assert_eq!(a.get.normalized(), b.get.normalized());
    }
}
