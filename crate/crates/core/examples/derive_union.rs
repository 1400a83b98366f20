//! Derives the view definition of the union strategy and shows how the
//! leftover constraint was verified.
//!
//! cargo run --example derive_union

use dejima::putback::{derive_get, swap, DeriveConfig};
use dejima::scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let put = scenario::strategy("union").expect("bundled")?;
    println!("strategy:\n{}", put.program);

    let swapped = swap(&put)?;
    println!("swapped view rules:\n{}", swapped.get);

    let bx = derive_get(&put, &DeriveConfig::default())?;
    for r in &bx.residuals {
        println!(
            "residual from {}: {}\n  holds on {} source instances (exhaustive: {})",
            r.origin, r.constraint, r.instances, r.exhaustive
        );
    }

    // A strategy whose leftover constraint does not hold under the derived view.
    let bad = dejima::putback::PutStrategy::parse(
        "bad",
        "view: v(a)\nsources: s1(a), s2(a)\n\
         -s1(X) :- s1(X), not v(X).\n\
         +s2(X) :- v(X), not s2(X).\n",
    )?;
    match derive_get(&bad, &DeriveConfig::default()) {
        Ok(_) => println!("unexpectedly derived"),
        Err(e) => println!("\nrejected strategy: {e}"),
    }
    Ok(())
}
