//! GetPut and PutGet for every bundled strategy with its derived view.
//!
//! cargo run --release --example laws

use dejima::putback::{derive_get, run_laws, DeriveConfig, LawConfig};
use dejima::scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = LawConfig::default();
    for put in scenario::bundled() {
        let bx = derive_get(&put, &DeriveConfig::default())?;
        for r in run_laws(&bx, &cfg)? {
            println!(
                "{:<28} {:<7} {:?}: {}/{} passed, {} rejected by guards",
                put.name,
                r.law,
                r.status,
                r.passed,
                r.corpus_size,
                r.rejected.unwrap_or(0)
            );
        }
    }
    Ok(())
}
