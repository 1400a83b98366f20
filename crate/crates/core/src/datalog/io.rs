//! Database interchange: a directory of header-less CSV files (one per
//! relation, named `<relation>.csv`) or one JSON object
//! `{"relation": [[v, ...], ...]}`.
//!
//! Writers sort tuples, so equal databases serialize to identical bytes.
//! CSV cells carry no type: on reading, a cell that parses as an integer is
//! an integer, one that parses as a decimal is a decimal, anything else is a
//! string. JSON keeps the distinction between numbers and strings.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde_json::{Map, Number, Value as Json};

use super::database::{Database, Delta};
use super::error::{Error, Result};
use super::value::Value;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn data_err(path: &Path, msg: impl ToString) -> Error {
    Error::Data {
        path: path.display().to_string(),
        msg: msg.to_string(),
    }
}

/// Reads every `*.csv` file in `dir`. Empty files produce no relation.
pub fn read_csv_dir(dir: &Path) -> Result<Database> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io_err(dir))?;
    entries.sort_by_key(|e| e.file_name());
    let mut db = Database::new();
    for entry in entries {
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| data_err(&path, "non UTF-8 file name"))?
            .to_string();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        read_csv_relation(&mut db, &name, &text).map_err(|e| match e {
            Error::Data { msg, .. } => data_err(&path, msg),
            other => other,
        })?;
    }
    Ok(db)
}

/// Adds the rows of one CSV document to relation `name`.
pub fn read_csv_relation(db: &mut Database, name: &str, text: &str) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    for record in reader.records() {
        let record = record.map_err(|e| data_err(Path::new(name), e))?;
        let tuple: Vec<Value> = record.iter().map(Value::infer).collect();
        db.insert(name, tuple)?;
    }
    Ok(())
}

/// One relation as CSV text, tuples in sorted order.
pub fn relation_to_csv(db: &Database, name: &str) -> String {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_writer(Vec::new());
    for t in db.tuples(name) {
        if t.is_empty() {
            // A zero-arity fact is an empty line; the csv crate would skip it.
            writer.write_record([""]).expect("in-memory write");
        } else {
            writer
                .write_record(t.iter().map(Value::to_field))
                .expect("in-memory write");
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Writes one `<relation>.csv` per relation (empty relations give empty files).
pub fn write_csv_dir(db: &Database, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for name in db.names() {
        let path = dir.join(format!("{name}.csv"));
        fs::write(&path, relation_to_csv(db, name)).map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => Json::Number((*i).into()),
        Value::Decimal(d) => Json::Number(
            Number::from_str(&d.to_string()).expect("decimal renders as a JSON number"),
        ),
        Value::Str(s) => Json::String(s.clone()),
    }
}

pub fn value_from_json(j: &Json) -> std::result::Result<Value, String> {
    match j {
        Json::String(s) => Ok(Value::Str(s.clone())),
        Json::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Value::Int(i))
            } else {
                Decimal::from_str(&n.to_string())
                    .or_else(|_| Decimal::from_scientific(&n.to_string()))
                    .map(Value::decimal)
                    .map_err(|e| format!("number {n} out of range: {e}"))
            }
        }
        other => Err(format!("unsupported JSON value {other}")),
    }
}

pub fn database_to_json(db: &Database) -> Json {
    let mut map = Map::new();
    for (name, rel) in db.relations() {
        let rows = rel
            .iter()
            .map(|t| Json::Array(t.iter().map(value_to_json).collect()))
            .collect();
        map.insert(name.to_string(), Json::Array(rows));
    }
    Json::Object(map)
}

pub fn database_from_json(j: &Json) -> std::result::Result<Database, String> {
    let Json::Object(map) = j else {
        return Err("expected an object of relations".into());
    };
    let mut db = Database::new();
    for (name, rows) in map {
        let Json::Array(rows) = rows else {
            return Err(format!("relation `{name}` is not an array"));
        };
        for row in rows {
            let Json::Array(cells) = row else {
                return Err(format!("relation `{name}` has a non-array row"));
            };
            let tuple = cells
                .iter()
                .map(value_from_json)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            db.insert(name, tuple).map_err(|e| e.to_string())?;
        }
    }
    Ok(db)
}

/// `{"insert": {...}, "delete": {...}}`.
pub fn delta_to_json(delta: &Delta) -> Json {
    serde_json::json!({
        "insert": database_to_json(delta.inserts()),
        "delete": database_to_json(delta.deletes()),
    })
}

pub fn delta_from_json(j: &Json) -> std::result::Result<Delta, String> {
    let part = |key: &str| match j.get(key) {
        Some(v) => database_from_json(v),
        None => Ok(Database::new()),
    };
    Delta::from_parts(part("insert")?, part("delete")?).map_err(|e| e.to_string())
}

pub fn write_json(db: &Database) -> String {
    let mut s = serde_json::to_string_pretty(&database_to_json(db)).expect("serializable");
    s.push('\n');
    s
}

pub fn read_json(text: &str) -> Result<Database> {
    let j: Json = serde_json::from_str(text).map_err(|e| data_err(Path::new("<json>"), e))?;
    database_from_json(&j).map_err(|m| data_err(Path::new("<json>"), m))
}

/// Reads a `.json` file or a CSV directory.
pub fn read_database(path: &Path) -> Result<Database> {
    if path.is_dir() {
        read_csv_dir(path)
    } else {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        read_json(&text).map_err(|e| match e {
            Error::Data { msg, .. } => data_err(path, msg),
            other => other,
        })
    }
}
