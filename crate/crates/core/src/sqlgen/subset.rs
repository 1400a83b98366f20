//! Parser and evaluator for the SELECT subset the emitter produces:
//! `SELECT [DISTINCT] items [FROM t [AS a], ...] [WHERE c AND ...]`,
//! joined by `UNION`, with comparisons, `[NOT] EXISTS (subquery)`, column
//! references and literals. Used to check emitted text against the rules
//! it came from.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rust_decimal::Decimal;

use crate::datalog::{CmpOp, Database, Schema, Tuple, Value};

use super::SqlError;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Col { table: Option<String>, name: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Cmp(CmpOp, bool, Expr, Expr),
    Exists { negated: bool, query: Box<Query> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Select {
    pub distinct: bool,
    pub items: Vec<(Expr, Option<String>)>,
    pub from: Vec<(String, String)>,
    pub conds: Vec<Cond>,
}

/// SELECTs joined by UNION.
#[derive(Debug, Clone, PartialEq)]
pub struct Query(pub Vec<Select>);

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Num(String),
    Sym(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, SqlError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Word(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit()
            || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit))
        {
            let start = i;
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            out.push(Tok::Num(chars[start..i].iter().collect()));
        } else if c == '\'' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(SqlError::Parse("unterminated string".into())),
                    Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                        s.push('\'');
                        i += 2;
                    }
                    Some('\'') => {
                        i += 1;
                        break;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push(Tok::Str(s));
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let sym = match two.as_str() {
                "<>" => Some("<>"),
                "<=" => Some("<="),
                ">=" => Some(">="),
                "!=" => Some("<>"),
                _ => None,
            };
            if let Some(s) = sym {
                out.push(Tok::Sym(s));
                i += 2;
                continue;
            }
            let one = match c {
                '(' => "(",
                ')' => ")",
                ',' => ",",
                '.' => ".",
                '=' => "=",
                '<' => "<",
                '>' => ">",
                '*' => "*",
                ';' => ";",
                other => return Err(SqlError::Parse(format!("unexpected character `{other}`"))),
            };
            out.push(Tok::Sym(one));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn keyword(&mut self, kw: &str) -> bool {
        match self.peek() {
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw) => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    fn sym(&mut self, s: &str) -> bool {
        if self.peek()
            == Some(&Tok::Sym(match s {
                "(" => "(",
                ")" => ")",
                "," => ",",
                "." => ".",
                ";" => ";",
                _ => return false,
            }))
        {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn need_sym(&mut self, s: &str) -> Result<(), SqlError> {
        if self.sym(s) {
            Ok(())
        } else {
            Err(self.error(&format!("`{s}`")))
        }
    }

    fn error(&self, want: &str) -> SqlError {
        SqlError::Parse(format!("expected {want}, found {:?}", self.peek()))
    }

    fn ident(&mut self) -> Result<String, SqlError> {
        const RESERVED: &[&str] = &[
            "select", "from", "where", "and", "union", "as", "not", "exists", "distinct",
        ];
        match self.peek() {
            Some(Tok::Word(w)) if !RESERVED.contains(&w.to_ascii_lowercase().as_str()) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error("an identifier")),
        }
    }

    fn query(&mut self) -> Result<Query, SqlError> {
        let mut selects = vec![self.select()?];
        while self.keyword("UNION") {
            selects.push(self.select()?);
        }
        Ok(Query(selects))
    }

    fn select(&mut self) -> Result<Select, SqlError> {
        if !self.keyword("SELECT") {
            return Err(self.error("SELECT"));
        }
        let distinct = self.keyword("DISTINCT");
        let mut items = Vec::new();
        loop {
            let e = self.expr()?;
            let alias = if self.keyword("AS") {
                Some(self.ident()?)
            } else {
                None
            };
            items.push((e, alias));
            if !self.sym(",") {
                break;
            }
        }
        let mut from = Vec::new();
        if self.keyword("FROM") {
            loop {
                let t = self.ident()?;
                let alias = if self.keyword("AS") {
                    self.ident()?
                } else {
                    t.clone()
                };
                from.push((t, alias));
                if !self.sym(",") {
                    break;
                }
            }
        }
        let mut conds = Vec::new();
        if self.keyword("WHERE") {
            loop {
                conds.push(self.cond()?);
                if !self.keyword("AND") {
                    break;
                }
            }
        }
        Ok(Select {
            distinct,
            items,
            from,
            conds,
        })
    }

    fn cond(&mut self) -> Result<Cond, SqlError> {
        let negated = self.keyword("NOT");
        if self.keyword("EXISTS") {
            self.need_sym("(")?;
            let q = self.query()?;
            self.need_sym(")")?;
            return Ok(Cond::Exists {
                negated,
                query: Box::new(q),
            });
        }
        let l = self.expr()?;
        let (op, flip) = match self.peek() {
            Some(Tok::Sym(s)) => match *s {
                "=" => (CmpOp::Eq, false),
                "<>" => (CmpOp::Ne, false),
                "<" => (CmpOp::Lt, false),
                "<=" => (CmpOp::Le, false),
                ">" => (CmpOp::Lt, true),
                ">=" => (CmpOp::Le, true),
                _ => return Err(self.error("a comparison")),
            },
            _ => return Err(self.error("a comparison")),
        };
        self.pos += 1;
        let r = self.expr()?;
        let (l, r) = if flip { (r, l) } else { (l, r) };
        Ok(Cond::Cmp(op, negated, l, r))
    }

    fn expr(&mut self) -> Result<Expr, SqlError> {
        match self.peek().cloned() {
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Expr::Lit(Value::Str(s)))
            }
            Some(Tok::Num(n)) => {
                self.pos += 1;
                if let Ok(i) = n.parse::<i64>() {
                    Ok(Expr::Lit(Value::Int(i)))
                } else {
                    Decimal::from_str(&n)
                        .map(|d| Expr::Lit(Value::decimal(d)))
                        .map_err(|e| SqlError::Parse(format!("number `{n}`: {e}")))
                }
            }
            _ => {
                let first = self.ident()?;
                if self.sym(".") {
                    Ok(Expr::Col {
                        table: Some(first),
                        name: self.ident()?,
                    })
                } else {
                    Ok(Expr::Col {
                        table: None,
                        name: first,
                    })
                }
            }
        }
    }
}

/// Parses a query, ignoring one trailing `;`.
pub fn parse_query(text: &str) -> Result<Query, SqlError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let q = p.query()?;
    p.sym(";");
    if p.pos != p.toks.len() {
        return Err(p.error("end of query"));
    }
    Ok(q)
}

/// Parses `CREATE OR REPLACE VIEW name AS query;` into its name and query.
pub fn parse_view(text: &str) -> Result<(String, Query), SqlError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    for kw in ["CREATE", "OR", "REPLACE", "VIEW"] {
        if !p.keyword(kw) {
            return Err(p.error(kw));
        }
    }
    let name = p.ident()?;
    if !p.keyword("AS") {
        return Err(p.error("AS"));
    }
    let q = p.query()?;
    p.sym(";");
    if p.pos != p.toks.len() {
        return Err(p.error("end of statement"));
    }
    Ok((name, q))
}

/// Tables the evaluator reads: tuples plus column names.
pub struct Catalog<'a> {
    pub db: &'a Database,
    pub schemas: &'a BTreeMap<String, Schema>,
}

struct Frame<'a> {
    rows: Vec<(&'a str, &'a [String], &'a Tuple)>,
    parent: Option<&'a Frame<'a>>,
}

impl Frame<'_> {
    fn resolve(&self, table: Option<&str>, name: &str) -> Result<Value, SqlError> {
        let mut hits = self.rows.iter().filter_map(|(alias, attrs, t)| {
            if table.is_some_and(|a| a != *alias) {
                return None;
            }
            attrs.iter().position(|a| a == name).map(|i| t[i].clone())
        });
        match (hits.next(), hits.next()) {
            (Some(v), None) => Ok(v),
            (Some(_), Some(_)) => Err(SqlError::Eval(format!("column `{name}` is ambiguous"))),
            (None, _) => match self.parent {
                Some(p) => p.resolve(table, name),
                None => Err(SqlError::Eval(format!(
                    "unknown column `{}{name}`",
                    table.map(|t| format!("{t}.")).unwrap_or_default()
                ))),
            },
        }
    }

    fn value(&self, e: &Expr) -> Result<Value, SqlError> {
        match e {
            Expr::Lit(v) => Ok(v.clone()),
            Expr::Col { table, name } => self.resolve(table.as_deref(), name),
        }
    }
}

/// Rows of `q`. A SELECT without DISTINCT keeps duplicates; UNION removes
/// them.
pub fn eval_query(q: &Query, cat: &Catalog<'_>) -> Result<Vec<Tuple>, SqlError> {
    eval_in(q, cat, None)
}

fn eval_in(
    q: &Query,
    cat: &Catalog<'_>,
    parent: Option<&Frame<'_>>,
) -> Result<Vec<Tuple>, SqlError> {
    if q.0.len() == 1 {
        return eval_select(&q.0[0], cat, parent);
    }
    let mut set = BTreeSet::new();
    for s in &q.0 {
        set.extend(eval_select(s, cat, parent)?);
    }
    Ok(set.into_iter().collect())
}

fn eval_select(
    s: &Select,
    cat: &Catalog<'_>,
    parent: Option<&Frame<'_>>,
) -> Result<Vec<Tuple>, SqlError> {
    let mut tables = Vec::new();
    for (t, alias) in &s.from {
        let schema = cat
            .schemas
            .get(t)
            .ok_or_else(|| SqlError::Eval(format!("unknown table `{t}`")))?;
        let rows: Vec<&Tuple> = cat.db.tuples(t).collect();
        tables.push((alias.as_str(), schema.attrs.as_slice(), rows));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; tables.len()];
    if tables.iter().any(|(_, _, rows)| rows.is_empty()) {
        return Ok(out);
    }
    loop {
        let frame = Frame {
            rows: tables
                .iter()
                .zip(&idx)
                .map(|((a, attrs, rows), &i)| (*a, *attrs, rows[i]))
                .collect(),
            parent,
        };
        if holds(&s.conds, &frame, cat)? {
            let row = s
                .items
                .iter()
                .map(|(e, _)| frame.value(e))
                .collect::<Result<Tuple, _>>()?;
            out.push(row);
        }
        let mut k = 0;
        loop {
            if k == tables.len() {
                if s.distinct {
                    let set: BTreeSet<Tuple> = out.into_iter().collect();
                    return Ok(set.into_iter().collect());
                }
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < tables[k].2.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn holds(conds: &[Cond], frame: &Frame<'_>, cat: &Catalog<'_>) -> Result<bool, SqlError> {
    for c in conds {
        let ok = match c {
            Cond::Cmp(op, negated, l, r) => {
                let (a, b) = (frame.value(l)?, frame.value(r)?);
                let ord = a
                    .compare(&b)
                    .ok_or_else(|| SqlError::Eval(format!("cannot compare {a} with {b}")))?;
                op.holds(ord) != *negated
            }
            Cond::Exists { negated, query } => {
                let rows = eval_in(query, cat, Some(frame))?;
                rows.is_empty() == *negated
            }
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}
