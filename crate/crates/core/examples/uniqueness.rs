//! Candidate view definitions for the union strategy: the ones that obey
//! both laws agree on every source, whatever their syntax.
//!
//! cargo run --release --example uniqueness

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dejima::corpus::Universe;
use dejima::datalog::parse_program;
use dejima::putback::{check_uniqueness, derive_get, DeriveConfig};
use dejima::scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let put = scenario::strategy("union").expect("bundled")?;
    let derived = derive_get(&put, &DeriveConfig::default())?.get;
    let candidates = vec![
        derived,
        parse_program("v(X) :- s2(X).\nv(X) :- s1(X), not s2(X).")?,
        parse_program("v(X) :- s1(X).")?,
        parse_program("v(X) :- s1(X), s2(X).")?,
    ];
    let universe = Universe::new(put.source_schemas(), &put.column_kinds(None), 6, None);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let corpus: Vec<_> = (0..200).map(|_| universe.random(&mut rng)).collect();
    let u = check_uniqueness(&put, &candidates, &corpus, 42)?;
    for (i, why) in &u.excluded {
        println!("candidate {i} excluded: {why}");
    }
    println!(
        "well-behaved: {:?}; agree on all 200 sources: {}",
        u.kept,
        u.is_pass()
    );
    Ok(())
}
