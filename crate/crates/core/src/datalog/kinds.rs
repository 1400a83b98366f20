//! Column kind inference.
//!
//! Columns linked through a shared variable or an equality must hold the
//! same kind of value; a constant in a column (or compared with it) fixes
//! the kind. Unconstrained columns default to strings. Used to build typed
//! random instances that never trip cross-kind comparison errors.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::{Literal, Program, Rule, Term};
use super::value::{Kind, Value};

/// A column: relation name plus position.
pub type Column = (String, usize);

#[derive(Debug, Clone, Default)]
pub struct ColumnKinds {
    kinds: BTreeMap<Column, Kind>,
    constants: BTreeMap<Column, BTreeSet<Value>>,
}

impl ColumnKinds {
    pub fn kind(&self, rel: &str, pos: usize) -> Kind {
        self.kinds
            .get(&(rel.to_string(), pos))
            .copied()
            .unwrap_or(Kind::Str)
    }

    /// Constants the program relates to this column.
    pub fn constants(&self, rel: &str, pos: usize) -> BTreeSet<Value> {
        self.constants
            .get(&(rel.to_string(), pos))
            .cloned()
            .unwrap_or_default()
    }
}

#[derive(Default)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn add(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Infers kinds for every column of every predicate in `program`.
/// `aliases` lists predicates that share a schema (e.g. `+p`, `-p` and `p`).
pub fn infer(program: &Program, aliases: &[(String, String)]) -> ColumnKinds {
    let mut uf = UnionFind::default();
    let mut col_node: HashMap<Column, usize> = HashMap::new();
    let mut consts: Vec<(usize, Value)> = Vec::new();

    let mut col = |uf: &mut UnionFind, rel: &str, pos: usize| {
        *col_node
            .entry((rel.to_string(), pos))
            .or_insert_with(|| uf.add())
    };

    for (name, arity) in program.predicates() {
        for p in 0..arity {
            col(&mut uf, name, p);
        }
    }
    for (a, b) in aliases {
        let arity = program.predicates().get(a.as_str()).copied().unwrap_or(0);
        for p in 0..arity {
            let x = col(&mut uf, a, p);
            let y = col(&mut uf, b, p);
            uf.union(x, y);
        }
    }

    let bodies: Vec<(Option<&Rule>, &Vec<Literal>)> = program
        .rules
        .iter()
        .map(|r| (Some(r), &r.body))
        .chain(program.constraints.iter().map(|c| (None, &c.body)))
        .collect();
    for (rule, body) in bodies {
        let mut var_node: HashMap<String, usize> = HashMap::new();
        let mut link =
            |uf: &mut UnionFind, t: &Term, node: usize, consts: &mut Vec<(usize, Value)>| match t {
                Term::Var(v) => {
                    let n = *var_node.entry(v.clone()).or_insert(node);
                    uf.union(n, node);
                }
                Term::Const(c) => consts.push((node, c.clone())),
                Term::Anon => {}
            };
        let atoms = rule
            .map(|r| &r.head)
            .into_iter()
            .chain(body.iter().filter_map(Literal::atom));
        for atom in atoms {
            for (p, t) in atom.args.iter().enumerate() {
                let node = col(&mut uf, &atom.pred, p);
                link(&mut uf, t, node, &mut consts);
            }
        }
        for lit in body {
            if let Literal::Cmp(_, l, r) = lit {
                let node = uf.add();
                link(&mut uf, l, node, &mut consts);
                link(&mut uf, r, node, &mut consts);
            }
        }
    }

    let mut class_kind: HashMap<usize, Kind> = HashMap::new();
    let mut class_consts: HashMap<usize, BTreeSet<Value>> = HashMap::new();
    for (node, c) in consts {
        let root = uf.find(node);
        class_kind.entry(root).or_insert(c.kind());
        class_consts.entry(root).or_default().insert(c);
    }

    let mut out = ColumnKinds::default();
    for (column, node) in col_node {
        let root = uf.find(node);
        if let Some(k) = class_kind.get(&root) {
            out.kinds.insert(column.clone(), *k);
        }
        if let Some(cs) = class_consts.get(&root) {
            let same_kind = cs
                .iter()
                .filter(|c| Some(c.kind()) == class_kind.get(&root).copied())
                .cloned()
                .collect();
            out.constants.insert(column, same_kind);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    #[test]
    fn equality_with_integer_types_column() {
        let p = parse_program("prov1_public(V, A, R) :- all_vehicles(C, V, A, R), C = 1.").unwrap();
        let k = infer(&p, &[]);
        assert_eq!(k.kind("all_vehicles", 0), Kind::Int);
        assert_eq!(k.kind("all_vehicles", 1), Kind::Str);
        assert_eq!(
            k.constants("all_vehicles", 0),
            BTreeSet::from([Value::Int(1)])
        );
    }

    #[test]
    fn kinds_flow_through_shared_variables() {
        let p = parse_program("p(X) :- q(X, Y), r(Y), Y < 3.").unwrap();
        let k = infer(&p, &[]);
        assert_eq!(k.kind("q", 1), Kind::Int);
        assert_eq!(k.kind("r", 0), Kind::Int);
        assert_eq!(k.kind("q", 0), Kind::Str);
    }

    #[test]
    fn aliases_share_columns() {
        let p = parse_program("+s(X) :- v(X), X = 2.\nw(Y) :- s(Y).").unwrap();
        let k = infer(&p, &[("+s".into(), "s".into())]);
        assert_eq!(k.kind("w", 0), Kind::Int);
    }
}
