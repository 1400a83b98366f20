//! Each bundled mutation breaks at least one law; the first counterexample
//! is printed.
//!
//! cargo run --release --example mutations

use dejima::putback::{derive_get, run_laws, BxPair, DeriveConfig, LawConfig, PutStrategy, Status};
use dejima::scenario::{self, MUTATIONS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for m in MUTATIONS {
        let base = scenario::strategy(m.base).expect("bundled")?;
        let get = derive_get(&base, &DeriveConfig::default())?.get;
        let bx = BxPair::with_get(PutStrategy::parse(m.name, m.text)?, get);
        println!("{} ({})", m.name, m.description);
        for r in run_laws(&bx, &LawConfig::default())? {
            let mark = if r.status == Status::Fail {
                "FAIL"
            } else {
                "pass"
            };
            println!("  {:<7} {mark} {}/{}", r.law, r.passed, r.corpus_size);
            if let Some(c) = r.counterexample {
                println!("    {c}");
            }
        }
    }
    Ok(())
}
