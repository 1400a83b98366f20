use serde_json::{json, Value as Json};

use crate::datalog::io::{database_to_json, delta_from_json};
use crate::datalog::Delta;

use super::{DejimaError, PeerNetwork, TxnResult};

/// One scripted local update.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptTxn {
    pub peer: String,
    pub note: String,
    pub delta: Delta,
}

/// Reads `[{"peer": .., "note": .., "insert": {..}, "delete": {..}}, ...]`.
pub fn parse_script(text: &str) -> Result<Vec<ScriptTxn>, DejimaError> {
    let err = |index, message: String| DejimaError::Script { index, message };
    let j: Json = serde_json::from_str(text).map_err(|e| err(0, e.to_string()))?;
    let Json::Array(steps) = j else {
        return Err(err(0, "expected an array of transactions".into()));
    };
    steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let peer = step
                .get("peer")
                .and_then(Json::as_str)
                .ok_or_else(|| err(i, "missing `peer`".into()))?;
            let note = step.get("note").and_then(Json::as_str).unwrap_or_default();
            Ok(ScriptTxn {
                peer: peer.to_string(),
                note: note.to_string(),
                delta: delta_from_json(step).map_err(|m| err(i, m))?,
            })
        })
        .collect()
}

/// Pretty JSON with a trailing newline; parses back with [`parse_script`].
pub fn script_to_json(script: &[ScriptTxn]) -> String {
    let steps: Vec<Json> = script
        .iter()
        .map(|t| {
            json!({
                "peer": t.peer,
                "note": t.note,
                "insert": database_to_json(t.delta.inserts()),
                "delete": database_to_json(t.delta.deletes()),
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&Json::Array(steps)).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Default)]
pub struct Simulation {
    pub results: Vec<TxnResult>,
    pub committed: usize,
    pub aborted: usize,
    /// Steps after which some link was inconsistent, with the links.
    pub inconsistent: Vec<(usize, Vec<(String, String)>)>,
}

/// Runs every step in order, checking link consistency after each.
pub fn simulate(net: &mut PeerNetwork, script: &[ScriptTxn]) -> Result<Simulation, DejimaError> {
    let mut sim = Simulation::default();
    for (i, step) in script.iter().enumerate() {
        let r = net
            .local_update(&step.peer, &step.delta)
            .map_err(|e| DejimaError::Script {
                index: i,
                message: e.to_string(),
            })?;
        if r.committed() {
            sim.committed += 1;
        } else {
            sim.aborted += 1;
        }
        let bad = net.inconsistent_links()?;
        if !bad.is_empty() {
            sim.inconsistent.push((i, bad));
        }
        sim.results.push(r);
    }
    Ok(sim)
}
