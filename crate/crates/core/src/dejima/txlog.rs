use serde_json::{json, Value as Json};

use crate::datalog::io::delta_to_json;

use super::{AbortReason, Outcome, TxnResult};

/// One transaction as a JSON object with sorted keys.
pub fn record_json(r: &TxnResult) -> Json {
    let mut rec = json!({
        "txn_id": r.txn_id,
        "origin": r.origin,
        "messages": r.messages.len(),
        "rounds": r.rounds,
    });
    match &r.outcome {
        Outcome::Committed => {
            rec["outcome"] = json!("committed");
            let mut deltas = serde_json::Map::new();
            for (peer, d) in &r.applied {
                deltas.insert(peer.clone(), delta_to_json(d));
            }
            rec["deltas"] = Json::Object(deltas);
        }
        Outcome::Aborted { peer, reason } => {
            rec["outcome"] = json!("aborted");
            rec["rejected_by"] = json!(peer);
            rec["reason"] = json!(reason.to_string());
            if let AbortReason::Loop(path) = reason {
                rec["loop"] = json!(path);
            }
        }
    }
    rec
}

/// One JSON object per line, in transaction order.
pub fn to_jsonl<'a>(results: impl IntoIterator<Item = &'a TxnResult>) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&record_json(r).to_string());
        out.push('\n');
    }
    out
}
