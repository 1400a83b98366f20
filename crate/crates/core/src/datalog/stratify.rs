//! Stratification of programs with negation.
//!
//! Predicates are grouped by strongly connected components of the
//! dependency graph. A component containing a negative edge makes the
//! program unstratifiable. Each predicate gets the smallest stratum that is
//! at least that of its positive dependencies and strictly above that of its
//! negative ones.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;

use super::ast::{Literal, Program};
use super::error::{Error, Result};

/// Predicates in evaluation order, with the stratum index of each.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Stratification {
    pub strata: Vec<BTreeSet<String>>,
    pub stratum_of: BTreeMap<String, usize>,
}

/// Returns strata in evaluation order. An empty program yields no strata.
pub fn stratify(program: &Program) -> Result<Vec<BTreeSet<String>>> {
    stratification(program).map(|s| s.strata)
}

pub fn stratification(program: &Program) -> Result<Stratification> {
    let mut graph: DiGraph<String, bool> = DiGraph::new();
    let mut index: HashMap<String, NodeIndex> = HashMap::new();
    let mut node = |g: &mut DiGraph<String, bool>, name: &str| {
        *index
            .entry(name.to_string())
            .or_insert_with(|| g.add_node(name.to_string()))
    };
    for name in program.predicates().keys() {
        node(&mut graph, name);
    }
    for rule in &program.rules {
        let head = node(&mut graph, &rule.head.pred);
        for lit in &rule.body {
            let (atom, negative) = match lit {
                Literal::Pos(a) => (a, false),
                Literal::Neg(a) => (a, true),
                Literal::Cmp(..) => continue,
            };
            let dep = node(&mut graph, &atom.pred);
            graph.add_edge(dep, head, negative);
        }
    }

    let sccs = tarjan_scc(&graph);
    let mut component = vec![0usize; graph.node_count()];
    for (ci, scc) in sccs.iter().enumerate() {
        for &n in scc {
            component[n.index()] = ci;
        }
    }

    for e in graph.edge_references() {
        if *e.weight() && component[e.source().index()] == component[e.target().index()] {
            return Err(Error::NotStratifiable {
                cycle: negative_cycle(&graph, &component, e.source(), e.target()),
            });
        }
    }

    // tarjan_scc yields components in reverse topological order.
    let mut level = vec![0usize; sccs.len()];
    for ci in (0..sccs.len()).rev() {
        let mut lv = 0;
        for &n in &sccs[ci] {
            for e in graph.edges_directed(n, petgraph::Direction::Incoming) {
                let src = component[e.source().index()];
                if src != ci {
                    lv = lv.max(level[src] + usize::from(*e.weight()));
                }
            }
        }
        level[ci] = lv;
    }

    let mut out = Stratification::default();
    for (ci, scc) in sccs.iter().enumerate() {
        for &n in scc {
            let lv = level[ci];
            if out.strata.len() <= lv {
                out.strata.resize_with(lv + 1, BTreeSet::new);
            }
            out.strata[lv].insert(graph[n].clone());
            out.stratum_of.insert(graph[n].clone(), lv);
        }
    }
    Ok(out)
}

/// A cycle `from -> to -> ... -> from` inside one component.
fn negative_cycle(
    graph: &DiGraph<String, bool>,
    component: &[usize],
    from: NodeIndex,
    to: NodeIndex,
) -> Vec<String> {
    let comp = component[from.index()];
    let mut prev: HashMap<NodeIndex, NodeIndex> = HashMap::new();
    let mut queue = VecDeque::from([to]);
    let mut seen = BTreeSet::from([to]);
    while let Some(n) = queue.pop_front() {
        if n == from {
            break;
        }
        for m in graph.neighbors(n) {
            if component[m.index()] == comp && seen.insert(m) {
                prev.insert(m, n);
                queue.push_back(m);
            }
        }
    }
    let mut path = vec![from];
    let mut cur = from;
    while cur != to {
        cur = prev[&cur];
        path.push(cur);
    }
    path.reverse();
    let mut names: Vec<String> = std::iter::once(from)
        .chain(path)
        .map(|n| graph[n].clone())
        .collect();
    if from == to {
        names.truncate(2);
    }
    names
}
