//! Abstract syntax of the rule language.
//!
//! A [`Program`] is a list of rules, a list of integrity constraints
//! (`false :- body.`), and the relation schemas declared in its header.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Value),
    Var(String),
    /// `_`: a fresh variable at every occurrence.
    Anon,
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Var(v) => f.write_str(v),
            Term::Anon => f.write_str("_"),
        }
    }
}

/// Which half of a delta relation a predicate name denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Insert,
    Delete,
}

impl Sign {
    pub fn sigil(self) -> char {
        match self {
            Sign::Insert => '+',
            Sign::Delete => '-',
        }
    }
}

/// Name of the delta relation `+p` / `-p`.
pub fn delta_name(sign: Sign, pred: &str) -> String {
    format!("{}{}", sign.sigil(), pred)
}

/// Splits `+p` / `-p` into its sign and base predicate.
pub fn split_delta(name: &str) -> Option<(Sign, &str)> {
    if let Some(rest) = name.strip_prefix('+') {
        Some((Sign::Insert, rest))
    } else {
        name.strip_prefix('-').map(|rest| (Sign::Delete, rest))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            pred: pred.into(),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    /// Builtin comparison. Never negated: `not (X < Y)` is written `Y <= X`.
    Cmp(CmpOp, Term, Term),
}

impl Literal {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            Literal::Cmp(..) => None,
        }
    }

    pub fn is_positive_atom(&self) -> bool {
        matches!(self, Literal::Pos(_))
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.args.iter().collect(),
            Literal::Cmp(_, l, r) => vec![l, r],
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Cmp(op, l, r) => write!(f, "{l} {} {r}", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Literal>) -> Self {
        Rule { head, body }
    }

    /// Consistent renaming of variables to `V0, V1, ...` in order of first
    /// occurrence (head first).
    pub fn normalized(&self) -> Rule {
        let mut names = HashMap::new();
        let mut rename = |t: &Term| match t {
            Term::Var(v) => {
                let n = names.len();
                Term::Var(
                    names
                        .entry(v.clone())
                        .or_insert_with(|| format!("V{n}"))
                        .clone(),
                )
            }
            other => other.clone(),
        };
        let head = Atom::new(
            self.head.pred.clone(),
            self.head.args.iter().map(&mut rename).collect(),
        );
        let body = self
            .body
            .iter()
            .map(|l| match l {
                Literal::Pos(a) => Literal::Pos(Atom::new(
                    a.pred.clone(),
                    a.args.iter().map(&mut rename).collect(),
                )),
                Literal::Neg(a) => Literal::Neg(Atom::new(
                    a.pred.clone(),
                    a.args.iter().map(&mut rename).collect(),
                )),
                Literal::Cmp(op, l, r) => Literal::Cmp(*op, rename(l), rename(r)),
            })
            .collect();
        Rule { head, body }
    }
}

fn write_body(f: &mut fmt::Formatter<'_>, body: &[Literal]) -> fmt::Result {
    for (i, l) in body.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{l}")?;
    }
    Ok(())
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            write_body(f, &self.body)?;
        }
        f.write_str(".")
    }
}

/// An integrity constraint `false :- body.`: the body must have no solution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub body: Vec<Literal>,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("false :- ")?;
        write_body(f, &self.body)?;
        f.write_str(".")
    }
}

/// Attribute names and key columns of a relation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    pub attrs: Vec<String>,
    /// Column indices forming a key; empty means the whole tuple.
    pub key: Vec<usize>,
}

impl Schema {
    pub fn new<S: Into<String>>(attrs: impl IntoIterator<Item = S>) -> Self {
        Schema {
            attrs: attrs.into_iter().map(Into::into).collect(),
            key: Vec::new(),
        }
    }

    /// Positional `a1..an` names for undeclared relations.
    pub fn positional(arity: usize) -> Self {
        Schema::new((1..=arity).map(|i| format!("a{i}")))
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub constraints: Vec<Constraint>,
    pub schemas: BTreeMap<String, Schema>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Self {
        Program {
            rules,
            ..Default::default()
        }
    }

    /// Predicates defined by at least one rule.
    pub fn idb(&self) -> BTreeSet<&str> {
        self.rules.iter().map(|r| r.head.pred.as_str()).collect()
    }

    /// Every predicate mentioned anywhere, with its arity.
    pub fn predicates(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for (name, s) in &self.schemas {
            out.insert(name.as_str(), s.arity());
        }
        let bodies = self
            .rules
            .iter()
            .flat_map(|r| r.body.iter())
            .chain(self.constraints.iter().flat_map(|c| c.body.iter()));
        for a in self
            .rules
            .iter()
            .map(|r| &r.head)
            .chain(bodies.filter_map(Literal::atom))
        {
            out.entry(a.pred.as_str()).or_insert(a.arity());
        }
        out
    }

    /// Declared schema, or positional names when undeclared.
    pub fn schema_of(&self, pred: &str) -> Option<Schema> {
        if let Some(s) = self.schemas.get(pred) {
            return Some(s.clone());
        }
        self.predicates().get(pred).map(|&n| Schema::positional(n))
    }

    /// Rules renamed canonically, sorted, and deduplicated; constraints
    /// likewise. Two programs equal after normalization differ only by rule
    /// order and variable names.
    pub fn normalized(&self) -> Program {
        let rules: BTreeSet<Rule> = self.rules.iter().map(Rule::normalized).collect();
        let constraints: BTreeSet<Constraint> = self
            .constraints
            .iter()
            .map(|c| {
                let r = Rule::new(Atom::new("", vec![]), c.body.clone()).normalized();
                Constraint { body: r.body }
            })
            .collect();
        Program {
            rules: rules.into_iter().collect(),
            constraints: constraints.into_iter().collect(),
            schemas: self.schemas.clone(),
        }
    }

    /// Rule-and-constraint equality up to order and variable renaming.
    pub fn equivalent_syntax(&self, other: &Program) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        a.rules == b.rules && a.constraints == b.constraints
    }
}

/// Rules and constraints only; schema declarations are not printed.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        for c in &self.constraints {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
