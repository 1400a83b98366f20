//! Three peers, two shared tables, and the bundled 50-step script. The
//! rebooking step is refused by provider 1 and rolled back everywhere.
//!
//! cargo run --release --example dejima_rideshare

use dejima::dejima::{simulate, to_jsonl, Outcome};
use dejima::putback::DeriveConfig;
use dejima::scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut net = scenario::rideshare_network(&DeriveConfig::default())?;
    for r in net.log() {
        println!(
            "initial sync from {}: {} peer(s) updated",
            r.origin,
            r.applied.len()
        );
    }
    let script = scenario::rideshare_script();
    let sim = simulate(&mut net, &script)?;
    for (step, r) in script.iter().zip(&sim.results) {
        if let Outcome::Aborted { peer, reason } = &r.outcome {
            println!("step {:?} aborted at {peer}: {reason}", step.note);
        }
    }
    println!(
        "{} committed, {} aborted, inconsistent steps: {:?}",
        sim.committed, sim.aborted, sim.inconsistent
    );
    print!(
        "last entries of the log:\n{}",
        to_jsonl(net.log().iter().rev().take(2))
    );
    Ok(())
}
