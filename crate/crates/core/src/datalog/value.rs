//! Scalar constants stored in relations.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;

/// The kind of a scalar. Comparisons are only defined between values of the
/// same kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Int,
    Decimal,
    Str,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Int => "integer",
            Kind::Decimal => "decimal",
            Kind::Str => "string",
        })
    }
}

/// A constant. The derived `Ord` sorts first by kind and is used only for
/// storage and serialization order; builtin comparisons go through
/// [`Value::compare`], which refuses to order values of different kinds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    /// Always stored normalized (no trailing zeros), so structural equality
    /// coincides with numeric equality.
    Decimal(Decimal),
    Str(String),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn decimal(d: Decimal) -> Self {
        Value::Decimal(d.normalize())
    }

    pub fn kind(&self) -> Kind {
        match self {
            Value::Int(_) => Kind::Int,
            Value::Decimal(_) => Kind::Decimal,
            Value::Str(_) => Kind::Str,
        }
    }

    /// Orders two values of the same kind; `None` across kinds.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Decimal(a), Value::Decimal(b)) => Some(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    /// Reads an untyped text field: integers first, then decimals, otherwise
    /// a string.
    pub fn infer(field: &str) -> Value {
        if let Ok(i) = field.parse::<i64>() {
            return Value::Int(i);
        }
        if looks_decimal(field) {
            if let Ok(d) = Decimal::from_str(field) {
                return Value::decimal(d);
            }
        }
        Value::Str(field.to_string())
    }

    /// The text written to CSV cells (no quoting).
    pub fn to_field(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Decimal(d) => decimal_text(d),
            Value::Str(s) => s.clone(),
        }
    }

    /// Whether a string can be written bare in the rule language.
    pub(crate) fn is_bare_symbol(s: &str) -> bool {
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_lowercase() => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !matches!(s, "not" | "false")
    }
}

/// Decimal text that always has a fractional part, so `5` written as a
/// decimal reads back as a decimal and not an integer.
fn decimal_text(d: &Decimal) -> String {
    let s = d.to_string();
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

fn looks_decimal(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let mut parts = body.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    matches!(frac, Some(f) if !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
        && !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
}

/// Renders the value as rule-language source text.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Decimal(d) => f.write_str(&decimal_text(d)),
            Value::Str(s) if Value::is_bare_symbol(s) => f.write_str(s),
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_kind_values_do_not_compare() {
        assert_eq!(Value::Int(1).compare(&Value::str("1")), None);
        assert_ne!(Value::Int(1), Value::str("1"));
        assert_eq!(Value::Int(1).compare(&Value::Int(2)), Some(Ordering::Less));
    }

    #[test]
    fn decimals_normalize() {
        let a = Value::infer("1.50");
        let b = Value::infer("1.5");
        assert_eq!(a, b);
        assert_eq!(a.kind(), Kind::Decimal);
        assert_eq!(a.to_field(), "1.5");
        let whole = Value::infer("2.00");
        assert_eq!(whole.to_field(), "2.0");
        assert_eq!(whole.to_string(), "2.0");
        assert_eq!(Value::infer(&whole.to_field()), whole);
    }

    #[test]
    fn inference() {
        assert_eq!(Value::infer("-3"), Value::Int(-3));
        assert_eq!(Value::infer("v1"), Value::str("v1"));
        assert_eq!(Value::infer("1."), Value::str("1."));
        assert_eq!(Value::infer(""), Value::str(""));
    }

    #[test]
    fn display_quotes_non_symbols() {
        assert_eq!(Value::str("abc").to_string(), "abc");
        assert_eq!(Value::str("Abc").to_string(), "\"Abc\"");
        assert_eq!(Value::str("not").to_string(), "\"not\"");
        assert_eq!(Value::str("a \"b\"").to_string(), "\"a \\\"b\\\"\"");
    }
}
