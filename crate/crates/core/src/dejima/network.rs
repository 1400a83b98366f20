use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::datalog::{apply_delta, ApplyMode, Database, Delta};
use crate::incremental::{inc_get, inc_put};
use crate::putback::{derive_get, BxPair, DeriveConfig, PutStrategy};

use super::DejimaError;

/// One side of a link: the shared table as seen from the owning peer.
#[derive(Debug, Clone)]
pub struct DejimaLink {
    pub neighbor: String,
    pub table: String,
    pub bx: BxPair,
}

#[derive(Debug, Clone)]
pub struct Peer {
    pub name: String,
    pub base: Database,
    pub links: BTreeMap<String, DejimaLink>,
}

/// A change to a shared table travelling from one peer to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncMessage {
    pub txn_id: u64,
    pub origin: String,
    pub from: String,
    pub to: String,
    /// Peers the change has passed through, origin first.
    pub hop_path: Vec<String>,
    pub payload: Delta,
    /// Propagation round, starting at 1 for messages sent by the origin.
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbortReason {
    /// The receiver's strategy refused the change or could not reproduce it.
    Rejected(String),
    /// The receiver's copy of the shared table did not match the sender's.
    Diverged(String),
    /// The change reached a peer it had already updated.
    Loop(Vec<String>),
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::Rejected(m) => write!(f, "rejected: {m}"),
            AbortReason::Diverged(m) => write!(f, "shared table diverged: {m}"),
            AbortReason::Loop(path) => write!(f, "propagation loop: {}", path.join(" -> ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Committed,
    Aborted { peer: String, reason: AbortReason },
}

#[derive(Debug, Clone)]
pub struct TxnResult {
    pub txn_id: u64,
    pub origin: String,
    pub outcome: Outcome,
    /// Base-table changes in the order they were applied (undone if aborted).
    pub applied: Vec<(String, Delta)>,
    pub messages: Vec<SyncMessage>,
    pub rounds: usize,
}

impl TxnResult {
    pub fn committed(&self) -> bool {
        self.outcome == Outcome::Committed
    }
}

/// Inverse base deltas of one transaction, in application order.
#[derive(Debug, Clone, Default)]
pub struct UndoLog {
    pub txn_id: u64,
    pub entries: Vec<(String, Delta)>,
}

impl UndoLog {
    fn rollback(&self, net: &mut PeerNetwork) {
        for (peer, inverse) in self.entries.iter().rev() {
            let p = net
                .peers
                .get_mut(peer)
                .expect("undo entries name known peers");
            p.base = apply_delta(&p.base, inverse, ApplyMode::Strict)
                .expect("inverse of an applied delta applies");
        }
    }
}

/// Peers, their links, and the transactions run so far.
#[derive(Debug, Clone, Default)]
pub struct PeerNetwork {
    peers: BTreeMap<String, Peer>,
    next_txn: u64,
    log: Vec<TxnResult>,
}

type Step = Result<(), (String, AbortReason)>;

impl PeerNetwork {
    pub fn new() -> Self {
        PeerNetwork {
            next_txn: 1,
            ..Default::default()
        }
    }

    pub fn add_peer(&mut self, name: &str, base: Database) -> Result<(), DejimaError> {
        if self.peers.contains_key(name) {
            return Err(DejimaError::DuplicatePeer(name.to_string()));
        }
        self.peers.insert(
            name.to_string(),
            Peer {
                name: name.to_string(),
                base,
                links: BTreeMap::new(),
            },
        );
        Ok(())
    }

    /// Links `a` and `b` through the table both strategies name as their view,
    /// deriving each side's view definition.
    pub fn link(
        &mut self,
        a: &str,
        put_a: PutStrategy,
        b: &str,
        put_b: PutStrategy,
        cfg: &DeriveConfig,
    ) -> Result<(), DejimaError> {
        let mismatch = |detail: String| DejimaError::SchemaMismatch {
            a: a.to_string(),
            b: b.to_string(),
            detail,
        };
        if a == b {
            return Err(mismatch("a peer cannot link to itself".into()));
        }
        if put_a.view != put_b.view {
            return Err(mismatch(format!(
                "tables differ: `{}` and `{}`",
                put_a.view, put_b.view
            )));
        }
        let (sa, sb) = (put_a.view_schema(), put_b.view_schema());
        if sa.attrs != sb.attrs {
            return Err(mismatch(format!(
                "`{}` has attributes ({}) on one side and ({}) on the other",
                put_a.view,
                sa.attrs.join(", "),
                sb.attrs.join(", ")
            )));
        }
        for (peer, put) in [(a, &put_a), (b, &put_b)] {
            let p = self.peer(peer)?;
            if p.links.contains_key(if peer == a { b } else { a }) {
                return Err(DejimaError::Topology(format!(
                    "{a} and {b} are already linked"
                )));
            }
            let clash =
                p.base.get(&put.view).is_some() || p.links.values().any(|l| l.table == put.view);
            if clash {
                return Err(DejimaError::NameClash {
                    peer: peer.to_string(),
                    table: put.view.clone(),
                });
            }
        }
        let table = put_a.view.clone();
        let bx_a = derive_get(&put_a, cfg)?;
        let bx_b = derive_get(&put_b, cfg)?;
        for (me, other, bx) in [(a, b, bx_a), (b, a, bx_b)] {
            self.peers.get_mut(me).expect("checked above").links.insert(
                other.to_string(),
                DejimaLink {
                    neighbor: other.to_string(),
                    table: table.clone(),
                    bx,
                },
            );
        }
        Ok(())
    }

    pub fn peer(&self, name: &str) -> Result<&Peer, DejimaError> {
        self.peers
            .get(name)
            .ok_or_else(|| DejimaError::UnknownPeer(name.to_string()))
    }

    pub fn peers(&self) -> impl Iterator<Item = &Peer> {
        self.peers.values()
    }

    /// Every link once, as `(a, b)` with `a < b`.
    pub fn links(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for p in self.peers.values() {
            for n in p.links.keys() {
                if p.name < *n {
                    out.push((p.name.clone(), n.clone()));
                }
            }
        }
        out
    }

    fn link_of(&self, peer: &str, neighbor: &str) -> Result<&DejimaLink, DejimaError> {
        self.peer(peer)?
            .links
            .get(neighbor)
            .ok_or_else(|| DejimaError::UnknownLink(peer.to_string(), neighbor.to_string()))
    }

    /// The shared table `peer` exposes to `neighbor`, computed from its base.
    pub fn dejima_table(&self, peer: &str, neighbor: &str) -> Result<Database, DejimaError> {
        let link = self.link_of(peer, neighbor)?;
        Ok(link.bx.get_view(&self.peer(peer)?.base)?)
    }

    /// Links whose two sides currently disagree.
    pub fn inconsistent_links(&self) -> Result<Vec<(String, String)>, DejimaError> {
        let mut out = Vec::new();
        for (a, b) in self.links() {
            if self.dejima_table(&a, &b)? != self.dejima_table(&b, &a)? {
                out.push((a, b));
            }
        }
        Ok(out)
    }

    /// Base tables of every peer.
    pub fn bases(&self) -> BTreeMap<String, Database> {
        self.peers
            .iter()
            .map(|(n, p)| (n.clone(), p.base.clone()))
            .collect()
    }

    pub fn log(&self) -> &[TxnResult] {
        &self.log
    }

    /// Applies `delta` to `peer`'s base and propagates it across the network.
    /// If any peer refuses, every touched peer is restored.
    pub fn local_update(&mut self, peer: &str, delta: &Delta) -> Result<TxnResult, DejimaError> {
        self.transaction(peer, delta, None)
    }

    /// Makes the initiator's side of the link equal to the other side by
    /// putting the other side's table into the initiator's base, then
    /// propagates that change over the initiator's remaining links.
    pub fn initial_sync(
        &mut self,
        a: &str,
        b: &str,
        initiator: &str,
    ) -> Result<TxnResult, DejimaError> {
        let other = match initiator {
            x if x == a => b,
            x if x == b => a,
            _ => {
                return Err(DejimaError::Topology(format!(
                    "initiator {initiator} is not an end of link {a}-{b}"
                )))
            }
        };
        let sync_err = |reason: String| DejimaError::InitialSync {
            a: a.to_string(),
            b: b.to_string(),
            reason,
        };
        let wanted = self.dejima_table(other, initiator)?;
        let link = self.link_of(initiator, other)?;
        let base = &self.peer(initiator)?.base;
        let delta = link
            .bx
            .put
            .put_eval(base, &wanted)
            .map_err(|e| sync_err(e.to_string()))?;
        let after =
            apply_delta(base, &delta, ApplyMode::Strict).map_err(|e| sync_err(e.to_string()))?;
        let reached = link.bx.get_view(&after)?;
        if reached != wanted {
            return Err(sync_err(format!(
                "{initiator}'s strategy cannot reproduce {other}'s table; it reaches {}",
                crate::datalog::io::write_json(&reached).trim_end()
            )));
        }
        let result = self.transaction(initiator, &delta, Some(other))?;
        if let Outcome::Aborted { peer, reason } = &result.outcome {
            return Err(sync_err(format!(
                "{peer} refused the propagated change: {reason}"
            )));
        }
        Ok(result)
    }

    fn transaction(
        &mut self,
        origin: &str,
        delta: &Delta,
        skip: Option<&str>,
    ) -> Result<TxnResult, DejimaError> {
        let before = self.peer(origin)?.base.clone();
        let after = apply_delta(&before, delta, ApplyMode::Strict)?;
        let txn_id = self.next_txn;
        self.next_txn += 1;
        let mut result = TxnResult {
            txn_id,
            origin: origin.to_string(),
            outcome: Outcome::Committed,
            applied: Vec::new(),
            messages: Vec::new(),
            rounds: 0,
        };
        let mut undo = UndoLog {
            txn_id,
            entries: Vec::new(),
        };
        self.peers.get_mut(origin).expect("peer exists").base = after;
        undo.entries.push((origin.to_string(), delta.inverse()));
        result.applied.push((origin.to_string(), delta.clone()));

        match self.propagate(&mut result, &mut undo, &before, delta, skip) {
            Ok(Ok(())) => {}
            Ok(Err((peer, reason))) => {
                undo.rollback(self);
                result.outcome = Outcome::Aborted { peer, reason };
            }
            Err(e) => {
                undo.rollback(self);
                return Err(e);
            }
        }
        self.log.push(result.clone());
        Ok(result)
    }

    fn propagate(
        &mut self,
        result: &mut TxnResult,
        undo: &mut UndoLog,
        origin_before: &Database,
        delta: &Delta,
        skip: Option<&str>,
    ) -> Result<Step, DejimaError> {
        let origin = result.origin.clone();
        let mut queue = VecDeque::new();
        let mut touched = BTreeSet::from([origin.clone()]);
        for (n, link) in &self.peer(&origin)?.links {
            if Some(n.as_str()) == skip {
                continue;
            }
            let payload = inc_get(&link.bx, origin_before, delta)?;
            if !payload.is_empty() {
                queue.push_back(SyncMessage {
                    txn_id: result.txn_id,
                    origin: origin.clone(),
                    from: origin.clone(),
                    to: n.clone(),
                    hop_path: vec![origin.clone()],
                    payload,
                    round: 1,
                });
            }
        }

        while let Some(msg) = queue.pop_front() {
            result.messages.push(msg.clone());
            result.rounds = result.rounds.max(msg.round);
            if !touched.insert(msg.to.clone()) {
                let mut path = msg.hop_path.clone();
                path.push(msg.to.clone());
                return Ok(Err((msg.to, AbortReason::Loop(path))));
            }
            let receiver = self.peer(&msg.to)?;
            let link = self.link_of(&msg.to, &msg.from)?;
            let base = receiver.base.clone();
            let current = link.bx.get_view(&base)?;
            let target = match apply_delta(&current, &msg.payload, ApplyMode::Strict) {
                Ok(t) => t,
                Err(e) => return Ok(Err((msg.to, AbortReason::Diverged(e.to_string())))),
            };
            let base_delta = match inc_put(&link.bx, &base, &current, &msg.payload) {
                Ok(d) => d,
                Err(e) => return Ok(Err((msg.to, AbortReason::Rejected(e.to_string())))),
            };
            let new_base = match apply_delta(&base, &base_delta, ApplyMode::Strict) {
                Ok(b) => b,
                Err(e) => return Ok(Err((msg.to, AbortReason::Rejected(e.to_string())))),
            };
            if link.bx.get_view(&new_base)? != target {
                let reason = AbortReason::Rejected(format!(
                    "the change to `{}` is not reproduced by {}'s base tables",
                    link.table, msg.to
                ));
                return Ok(Err((msg.to, reason)));
            }
            let mut forwards = Vec::new();
            for (n, out) in &receiver.links {
                if *n == msg.from {
                    continue;
                }
                let payload = inc_get(&out.bx, &base, &base_delta)?;
                if !payload.is_empty() {
                    let mut hop_path = msg.hop_path.clone();
                    hop_path.push(msg.to.clone());
                    forwards.push(SyncMessage {
                        txn_id: result.txn_id,
                        origin: origin.clone(),
                        from: msg.to.clone(),
                        to: n.clone(),
                        hop_path,
                        payload,
                        round: msg.round + 1,
                    });
                }
            }
            self.peers.get_mut(&msg.to).expect("receiver exists").base = new_base;
            undo.entries.push((msg.to.clone(), base_delta.inverse()));
            result.applied.push((msg.to.clone(), base_delta));
            queue.extend(forwards);
        }
        Ok(Ok(()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::Value;

    fn union_pair() -> (PutStrategy, PutStrategy) {
        let text = |v: &str| {
            format!(
                "view: {v}(a)\nsources: s1(a), s2(a)\n\
                 -s1(X) :- s1(X), not {v}(X).\n\
                 -s2(X) :- s2(X), not {v}(X).\n\
                 +s1(X) :- {v}(X), not s1(X), not s2(X).\n"
            )
        };
        (
            PutStrategy::parse("a", &text("d")).unwrap(),
            PutStrategy::parse("b", &text("d")).unwrap(),
        )
    }

    fn one(rel: &str, v: &str) -> Database {
        Database::from_facts([(rel, vec![vec![Value::str(v)]])])
    }

    #[test]
    fn single_peer_network_is_valid() {
        let mut net = PeerNetwork::new();
        net.add_peer("solo", one("s1", "x")).unwrap();
        assert!(net.links().is_empty());
        let mut d = Delta::new();
        d.add_insert("s1", vec![Value::str("y")]).unwrap();
        let r = net.local_update("solo", &d).unwrap();
        assert!(r.committed());
        assert!(r.messages.is_empty());
    }

    #[test]
    fn updates_cross_a_link() {
        let (pa, pb) = union_pair();
        let mut net = PeerNetwork::new();
        net.add_peer("a", one("s1", "x")).unwrap();
        net.add_peer("b", one("s2", "x")).unwrap();
        net.link("a", pa, "b", pb, &DeriveConfig::default())
            .unwrap();
        assert!(net.inconsistent_links().unwrap().is_empty());
        let mut d = Delta::new();
        d.add_insert("s2", vec![Value::str("y")]).unwrap();
        let r = net.local_update("a", &d).unwrap();
        assert!(r.committed());
        assert_eq!(r.messages.len(), 1);
        assert!(net
            .peer("b")
            .unwrap()
            .base
            .contains("s1", &[Value::str("y")]));
        assert!(net.inconsistent_links().unwrap().is_empty());
    }

    #[test]
    fn mismatched_tables_are_refused() {
        let (pa, _) = union_pair();
        let pb = PutStrategy::parse(
            "b",
            "view: d(a, b)\nsources: s(a, b)\n-s(X, Y) :- s(X, Y), not d(X, Y).\n",
        )
        .unwrap();
        let mut net = PeerNetwork::new();
        net.add_peer("a", Database::new()).unwrap();
        net.add_peer("b", Database::new()).unwrap();
        let err = net
            .link("a", pa, "b", pb, &DeriveConfig::default())
            .unwrap_err();
        assert!(matches!(err, DejimaError::SchemaMismatch { .. }), "{err}");
    }

    #[test]
    fn cycle_aborts_and_restores() {
        let (pa, _) = union_pair();
        let mut net = PeerNetwork::new();
        for p in ["a", "b", "c"] {
            net.add_peer(p, Database::new()).unwrap();
        }
        let rename = |s: &PutStrategy, v: &str| {
            PutStrategy::parse(v, &s.to_string().replace("d(", &format!("{v}("))).unwrap()
        };
        let cfg = DeriveConfig::default();
        net.link("a", rename(&pa, "ab"), "b", rename(&pa, "ab"), &cfg)
            .unwrap();
        net.link("b", rename(&pa, "bc"), "c", rename(&pa, "bc"), &cfg)
            .unwrap();
        net.link("c", rename(&pa, "ca"), "a", rename(&pa, "ca"), &cfg)
            .unwrap();
        let before = net.bases();
        let mut d = Delta::new();
        d.add_insert("s1", vec![Value::str("x")]).unwrap();
        let r = net.local_update("a", &d).unwrap();
        assert!(matches!(
            r.outcome,
            Outcome::Aborted {
                reason: AbortReason::Loop(_),
                ..
            }
        ));
        assert_eq!(net.bases(), before);
    }
}
