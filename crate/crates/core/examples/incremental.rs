//! Delta propagation through a derived view, compared with recomputation.
//!
//! cargo run --release --example incremental

use dejima::datalog::{evaluate, Delta, Value};
use dejima::incremental::{bench, inc_get, GetPlan};
use dejima::putback::{derive_get, DeriveConfig};
use dejima::scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let put = scenario::strategy("rideshare_provider").expect("bundled")?;
    let bx = derive_get(&put, &DeriveConfig::default())?;

    let network = scenario::rideshare_network(&DeriveConfig::default())?;
    let source = network.peer("provider1")?.base.clone();

    // v2 moves from l2 (north) to l3 (south).
    let mut d = Delta::new();
    d.add_delete(
        "vehicles",
        vec![Value::str("v2"), Value::str("l2"), Value::str("r1")],
    )?;
    d.add_insert(
        "vehicles",
        vec![Value::str("v2"), Value::str("l3"), Value::str("r1")],
    )?;
    let view_delta = inc_get(&bx, &source, &d)?;
    println!(
        "view inserts: {:?}",
        view_delta
            .inserts()
            .tuples("prov1_public")
            .collect::<Vec<_>>()
    );
    println!(
        "view deletes: {:?}",
        view_delta
            .deletes()
            .tuples("prov1_public")
            .collect::<Vec<_>>()
    );

    let plan = GetPlan::new(&bx.get)?;
    let p = plan.propagate(&evaluate(&bx.get, &source)?, &d)?;
    println!("strata recomputed: {:?}\n", p.recomputed);

    for name in ["union", "rideshare_mediator", "rideshare_provider"] {
        let put = scenario::strategy(name).expect("bundled")?;
        let bx = derive_get(&put, &DeriveConfig::default())?;
        let r = bench(&bx, 500, 42, 4)?;
        println!("{}", serde_json::to_string(&r)?);
    }
    Ok(())
}
