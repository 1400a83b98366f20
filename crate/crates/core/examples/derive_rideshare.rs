//! The two sides of the ride-sharing link define the same shared table
//! from different base tables.
//!
//! cargo run --example derive_rideshare

use std::time::Instant;

use dejima::putback::{derive_get, DeriveConfig};
use dejima::scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in [
        "rideshare_mediator",
        "rideshare_provider",
        "rideshare_provider_rebook",
    ] {
        let put = scenario::strategy(name).expect("bundled")?;
        let start = Instant::now();
        let bx = derive_get(&put, &DeriveConfig::default())?;
        println!("{name} ({:.0?}):\n{}", start.elapsed(), bx.get);
        for r in &bx.residuals {
            println!(
                "  checked {} ({}) on {} instances",
                r.constraint, r.origin, r.instances
            );
        }
        println!();
    }
    Ok(())
}
