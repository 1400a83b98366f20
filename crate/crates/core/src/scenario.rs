//! Bundled strategies, their mutants, and the ride-sharing network.
//!
//! The ride-sharing alliance has a mediator holding `all_vehicles(cid, vid,
//! area, rid)` and two providers holding `vehicles(vid, loc, rid)` and
//! `area_map(loc, area)`. Provider `k` shares `provk_public(vid, area, rid)`
//! with the mediator, which stores those rows under company id `k`. A rid
//! of `none` means the vehicle is free.

use rand::seq::IndexedRandom;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datalog::{io, Database, Delta, Tuple, Value};
use crate::dejima::{DejimaError, PeerNetwork, Resources, ScriptTxn, Topology};
use crate::putback::{DeriveConfig, PutStrategy, PutbackError};

macro_rules! fixture {
    ($path:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/", $path))
    };
}

/// Bundled strategies by name.
pub const STRATEGIES: &[(&str, &str)] = &[
    ("union", fixture!("strategies/union.strategy")),
    ("union_both", fixture!("strategies/union_both.strategy")),
    (
        "rideshare_mediator",
        fixture!("strategies/rideshare_mediator.strategy"),
    ),
    (
        "rideshare_mediator2",
        fixture!("strategies/rideshare_mediator2.strategy"),
    ),
    (
        "rideshare_provider",
        fixture!("strategies/rideshare_provider.strategy"),
    ),
    (
        "rideshare_provider_rebook",
        fixture!("strategies/rideshare_provider_rebook.strategy"),
    ),
    (
        "rideshare_provider2",
        fixture!("strategies/rideshare_provider2.strategy"),
    ),
];

/// A strategy with one deliberate fault.
#[derive(Debug, Clone, Copy)]
pub struct Mutation {
    pub name: &'static str,
    /// Bundled strategy it was mutated from; its derived view definition is
    /// the one the mutant is checked against.
    pub base: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const MUTATIONS: &[Mutation] = &[
    Mutation {
        name: "union_drop_negation_rule1",
        base: "union",
        description: "first deletion rule ignores the view",
        text: fixture!("mutations/union_drop_negation_rule1.strategy"),
    },
    Mutation {
        name: "union_insert_ignores_s2",
        base: "union",
        description: "insertion into s1 ignores s2",
        text: fixture!("mutations/union_insert_ignores_s2.strategy"),
    },
    Mutation {
        name: "union_no_delete_s2",
        base: "union",
        description: "deletions never reach s2",
        text: fixture!("mutations/union_no_delete_s2.strategy"),
    },
    Mutation {
        name: "mediator_wrong_company",
        base: "rideshare_mediator",
        description: "deletion rule selects company 2",
        text: fixture!("mutations/mediator_wrong_company.strategy"),
    },
    Mutation {
        name: "provider_drop_inequality",
        base: "rideshare_provider",
        description: "insertion rule drops the rid inequality",
        text: fixture!("mutations/provider_drop_inequality.strategy"),
    },
];

pub const RIDESHARE_TOPOLOGY: &str = fixture!("rideshare/topology.toml");

/// The committed 50-step script, generated by [`generate_script`] with the
/// default [`ScriptConfig`].
pub const RIDESHARE_SCRIPT: &str = fixture!("rideshare/script.json");

const RIDESHARE_DATA: &[(&str, &str, &str)] = &[
    (
        "data/mediator",
        "all_vehicles",
        fixture!("rideshare/data/mediator/all_vehicles.csv"),
    ),
    (
        "data/provider1",
        "area_map",
        fixture!("rideshare/data/provider1/area_map.csv"),
    ),
    (
        "data/provider1",
        "vehicles",
        fixture!("rideshare/data/provider1/vehicles.csv"),
    ),
    (
        "data/provider2",
        "area_map",
        fixture!("rideshare/data/provider2/area_map.csv"),
    ),
    (
        "data/provider2",
        "vehicles",
        fixture!("rideshare/data/provider2/vehicles.csv"),
    ),
];

pub fn strategy_text(name: &str) -> Option<&'static str> {
    STRATEGIES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn strategy(name: &str) -> Option<Result<PutStrategy, PutbackError>> {
    strategy_text(name).map(|t| PutStrategy::parse(name, t))
}

/// Every bundled strategy, parsed.
pub fn bundled() -> Vec<PutStrategy> {
    STRATEGIES
        .iter()
        .map(|(n, t)| PutStrategy::parse(n, t).expect("bundled strategies parse"))
        .collect()
}

pub fn mutation(name: &str) -> Option<&'static Mutation> {
    MUTATIONS.iter().find(|m| m.name == name)
}

/// Topology paths resolved against the embedded fixtures.
#[derive(Debug, Clone, Copy, Default)]
pub struct Embedded;

impl Resources for Embedded {
    fn text(&self, path: &str) -> Result<String, DejimaError> {
        let name = path
            .strip_prefix("../strategies/")
            .and_then(|p| p.strip_suffix(".strategy"));
        name.and_then(strategy_text)
            .map(str::to_string)
            .ok_or_else(|| DejimaError::Topology(format!("no bundled file `{path}`")))
    }

    fn database(&self, path: &str) -> Result<Database, DejimaError> {
        let mut db = Database::new();
        let mut found = false;
        for (dir, rel, csv) in RIDESHARE_DATA {
            if *dir == path {
                found = true;
                io::read_csv_relation(&mut db, rel, csv)?;
            }
        }
        if !found {
            return Err(DejimaError::Topology(format!("no bundled data `{path}`")));
        }
        Ok(db)
    }
}

/// The three-peer network after both links have been synchronized.
pub fn rideshare_network(cfg: &DeriveConfig) -> Result<PeerNetwork, DejimaError> {
    Topology::from_toml(RIDESHARE_TOPOLOGY)?.build(&Embedded, cfg)
}

pub fn rideshare_script() -> Vec<ScriptTxn> {
    crate::dejima::parse_script(RIDESHARE_SCRIPT).expect("bundled script parses")
}

#[derive(Debug, Clone, Copy)]
pub struct ScriptConfig {
    pub seed: u64,
    pub steps: usize,
    /// Step at which the mediator rebooks a booked company-1 vehicle, which
    /// provider 1's guard refuses.
    pub rebook_at: usize,
}

impl Default for ScriptConfig {
    fn default() -> Self {
        ScriptConfig {
            seed: 42,
            steps: 50,
            rebook_at: 25,
        }
    }
}

const MEDIATOR: &str = "mediator";
const PROVIDERS: [&str; 2] = ["provider1", "provider2"];

/// A seeded script for the ride-sharing network: mediator bookings and
/// provider releases, reassignments, moves and additions, plus one rebook
/// that must be refused. Steps are simulated on a copy of `net` so each one
/// applies to the state the previous ones leave.
pub fn generate_script(
    net: &PeerNetwork,
    cfg: &ScriptConfig,
) -> Result<Vec<ScriptTxn>, DejimaError> {
    let mut sim = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut next_rid = 10;
    let mut script = Vec::with_capacity(cfg.steps);
    let mut rebooked = false;
    while script.len() < cfg.steps {
        let step = if !rebooked && script.len() >= cfg.rebook_at {
            match rebook(&sim, &mut rng, &mut next_rid) {
                Some(s) => {
                    rebooked = true;
                    s
                }
                None => match book(&sim, &mut rng, &mut next_rid, Some(1)) {
                    Some(s) => s,
                    None => continue,
                },
            }
        } else {
            let choice = match rng.random_range(0..5) {
                0 => book(&sim, &mut rng, &mut next_rid, None),
                1 => release(&sim, &mut rng),
                2 => reassign(&sim, &mut rng, &mut next_rid),
                3 => relocate(&sim, &mut rng),
                _ => add(&sim, &mut rng),
            };
            match choice {
                Some(s) => s,
                None => continue,
            }
        };
        sim.local_update(&step.peer, &step.delta)?;
        script.push(step);
    }
    Ok(script)
}

fn s(v: &Value) -> String {
    v.to_field()
}

fn replace(rel: &str, old: &Tuple, new: Tuple) -> Delta {
    let mut d = Delta::new();
    d.add_delete(rel, old.clone()).expect("distinct tuples");
    d.add_insert(rel, new).expect("distinct tuples");
    d
}

fn is_free(rid: &Value) -> bool {
    *rid == Value::str("none")
}

fn mediator_rows<R: Rng>(
    net: &PeerNetwork,
    rng: &mut R,
    pick: impl Fn(&Tuple) -> bool,
) -> Option<Tuple> {
    let base = &net.peer(MEDIATOR).ok()?.base;
    let rows: Vec<&Tuple> = base.tuples("all_vehicles").filter(|t| pick(t)).collect();
    rows.choose(rng).map(|t| (*t).clone())
}

fn book<R: Rng>(
    net: &PeerNetwork,
    rng: &mut R,
    next_rid: &mut usize,
    company: Option<i64>,
) -> Option<ScriptTxn> {
    let row = mediator_rows(net, rng, |t| {
        is_free(&t[3]) && company.is_none_or(|c| t[0] == Value::Int(c))
    })?;
    let rid = format!("r{next_rid}");
    *next_rid += 1;
    let mut new = row.clone();
    new[3] = Value::str(&rid);
    Some(ScriptTxn {
        peer: MEDIATOR.into(),
        note: format!("mediator books {} for {rid}", s(&row[1])),
        delta: replace("all_vehicles", &row, new),
    })
}

fn rebook<R: Rng>(net: &PeerNetwork, rng: &mut R, next_rid: &mut usize) -> Option<ScriptTxn> {
    let row = mediator_rows(net, rng, |t| !is_free(&t[3]) && t[0] == Value::Int(1))?;
    let rid = format!("r{next_rid}");
    *next_rid += 1;
    let mut new = row.clone();
    new[3] = Value::str(&rid);
    Some(ScriptTxn {
        peer: MEDIATOR.into(),
        note: format!(
            "mediator rebooks {} from {} to {rid} (refused)",
            s(&row[1]),
            s(&row[3])
        ),
        delta: replace("all_vehicles", &row, new),
    })
}

fn provider_row<R: Rng>(
    net: &PeerNetwork,
    rng: &mut R,
    pick: impl Fn(&Tuple) -> bool,
) -> Option<(&'static str, Tuple)> {
    let peer = *PROVIDERS.choose(rng)?;
    let base = &net.peer(peer).ok()?.base;
    let rows: Vec<&Tuple> = base.tuples("vehicles").filter(|t| pick(t)).collect();
    rows.choose(rng).map(|t| (peer, (*t).clone()))
}

fn release<R: Rng>(net: &PeerNetwork, rng: &mut R) -> Option<ScriptTxn> {
    let (peer, row) = provider_row(net, rng, |t| !is_free(&t[2]))?;
    let mut new = row.clone();
    new[2] = Value::str("none");
    Some(ScriptTxn {
        peer: peer.into(),
        note: format!("{peer} releases {} from {}", s(&row[0]), s(&row[2])),
        delta: replace("vehicles", &row, new),
    })
}

fn reassign<R: Rng>(net: &PeerNetwork, rng: &mut R, next_rid: &mut usize) -> Option<ScriptTxn> {
    let (peer, row) = provider_row(net, rng, |t| !is_free(&t[2]))?;
    let rid = format!("r{next_rid}");
    *next_rid += 1;
    let mut new = row.clone();
    new[2] = Value::str(&rid);
    Some(ScriptTxn {
        peer: peer.into(),
        note: format!("{peer} reassigns {} to {rid}", s(&row[0])),
        delta: replace("vehicles", &row, new),
    })
}

fn relocate<R: Rng>(net: &PeerNetwork, rng: &mut R) -> Option<ScriptTxn> {
    let (peer, row) = provider_row(net, rng, |_| true)?;
    let base = &net.peer(peer).ok()?.base;
    let locs: Vec<&Value> = base
        .tuples("area_map")
        .map(|t| &t[0])
        .filter(|l| **l != row[1])
        .collect();
    let loc = (*locs.choose(rng)?).clone();
    let mut new = row.clone();
    new[1] = loc;
    Some(ScriptTxn {
        peer: peer.into(),
        note: format!("{peer} moves {} to {}", s(&row[0]), s(&new[1])),
        delta: replace("vehicles", &row, new),
    })
}

fn add<R: Rng>(net: &PeerNetwork, rng: &mut R) -> Option<ScriptTxn> {
    let peer = *PROVIDERS.choose(rng)?;
    let base = &net.peer(peer).ok()?.base;
    let prefix = if peer == PROVIDERS[0] { "v" } else { "u" };
    let taken = |v: &str| base.tuples("vehicles").any(|t| t[0] == Value::str(v));
    let vid = (1..).map(|i| format!("{prefix}{i}")).find(|v| !taken(v))?;
    let locs: Vec<&Value> = base.tuples("area_map").map(|t| &t[0]).collect();
    let loc = (*locs.choose(rng)?).clone();
    let mut d = Delta::new();
    d.add_insert(
        "vehicles",
        vec![Value::str(&vid), loc.clone(), Value::str("none")],
    )
    .expect("fresh delta");
    Some(ScriptTxn {
        peer: peer.into(),
        note: format!("{peer} adds {vid} at {}", s(&loc)),
        delta: d,
    })
}
