//! PostgreSQL text for the union view and a ride-sharing provider, with the
//! emitted view checked against Datalog on one database.
//!
//! cargo run --example emit_sql

use std::collections::BTreeMap;

use dejima::datalog::{Database, Value};
use dejima::putback::{derive_get, DeriveConfig};
use dejima::scenario;
use dejima::sqlgen::{emit, subset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let union = derive_get(
        &scenario::strategy("union").expect("bundled")?,
        &DeriveConfig::default(),
    )?;
    let sql = emit(&union)?;
    println!("{}\n{}\n{}", sql.view, sql.trigger, sql.proc);

    let db = Database::from_facts([
        ("s1", vec![vec![Value::str("a")], vec![Value::str("b")]]),
        ("s2", vec![vec![Value::str("b")], vec![Value::str("c")]]),
    ]);
    let schemas: BTreeMap<_, _> = union.put.source_schemas();
    let (_, query) = subset::parse_view(&sql.view)?;
    let rows = subset::eval_query(
        &query,
        &subset::Catalog {
            db: &db,
            schemas: &schemas,
        },
    )?;
    let datalog: Vec<_> = union.get_view(&db)?.tuples("v").cloned().collect();
    println!("SQL rows {rows:?}\nDatalog  {datalog:?}");

    let provider = derive_get(
        &scenario::strategy("rideshare_provider_rebook").expect("bundled")?,
        &DeriveConfig::default(),
    )?;
    println!("\n{}", emit(&provider)?.view);
    Ok(())
}
