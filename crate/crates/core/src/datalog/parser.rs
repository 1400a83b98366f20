//! Parser for the rule language.
//!
//! ```text
//! view: v(a)
//! sources: s1(a), s2(a)
//!
//! -s1(X) :- s1(X), not v(X).
//! -s2(X) :- s2(X), -v(X).
//! +s1(X) :- v(X), not s1(X), not s2(X).
//! false :- v(X), X = "forbidden".
//! ```
//!
//! Header directives occupy a whole line (`name: item, item`). Variables
//! start with an uppercase letter and may carry trailing primes (`R'`);
//! lowercase identifiers and double-quoted strings are string constants.
//! In a body, `not p(..)` and `-p(..)` both mean negation; in a head, `+p`
//! and `-p` name the insertion and deletion relations of `p`.

use rust_decimal::Decimal;
use std::str::FromStr;

use super::ast::{Atom, CmpOp, Constraint, Literal, Program, Rule, Schema, Term};
use super::error::{Error, Result};
use super::validate;
use super::value::Value;

/// Recognized header directive keywords.
pub const DIRECTIVES: &[&str] = &["view", "sources", "references", "schema", "keys"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclItem {
    pub pred: String,
    /// `None` when only the name was given.
    pub attrs: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub keyword: String,
    pub items: Vec<DeclItem>,
    pub line: usize,
}

/// A parsed source file: header directives plus the validated program.
#[derive(Debug, Clone)]
pub struct Document {
    pub directives: Vec<Directive>,
    pub program: Program,
}

impl Document {
    pub fn items<'a>(&'a self, keyword: &'a str) -> impl Iterator<Item = &'a DeclItem> + 'a {
        self.directives
            .iter()
            .filter(move |d| d.keyword == keyword)
            .flat_map(|d| d.items.iter())
    }
}

/// Parses and validates a program (arity consistency and safety).
pub fn parse_program(text: &str) -> Result<Program> {
    parse_document(text).map(|d| d.program)
}

pub fn parse_document(text: &str) -> Result<Document> {
    let mut directives = Vec::new();
    let mut body = String::with_capacity(text.len());
    for (idx, line) in text.lines().enumerate() {
        match directive_keyword(line) {
            Some((kw, rest)) => {
                let mut p = Parser::new(rest, idx + 1, line.len() - rest.len() + 1);
                let items = p.decl_items()?;
                directives.push(Directive {
                    keyword: kw.to_string(),
                    items,
                    line: idx + 1,
                });
                body.push('\n');
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }

    let mut program = Parser::new(&body, 1, 1).program()?;
    apply_schemas(&mut program, &directives)?;
    validate::check(&program)?;
    Ok(Document {
        directives,
        program,
    })
}

fn directive_keyword(line: &str) -> Option<(&str, &str)> {
    let trimmed = line.trim_start();
    let end = trimmed
        .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
        .unwrap_or(trimmed.len());
    let word = &trimmed[..end];
    if word.is_empty() || !word.starts_with(|c: char| c.is_ascii_lowercase()) {
        return None;
    }
    let after = trimmed[end..].trim_start();
    let rest = after.strip_prefix(':')?;
    if rest.starts_with('-') {
        return None;
    }
    // Unknown keywords still parse as directives so they get reported.
    Some((word, rest))
}

fn apply_schemas(program: &mut Program, directives: &[Directive]) -> Result<()> {
    for d in directives {
        if !DIRECTIVES.contains(&d.keyword.as_str()) {
            return Err(Error::Syntax {
                line: d.line,
                col: 1,
                msg: format!("unknown directive `{}:`", d.keyword),
            });
        }
        if d.keyword == "keys" {
            continue;
        }
        for item in &d.items {
            if let Some(attrs) = &item.attrs {
                let schema = Schema::new(attrs.iter().cloned());
                if let Some(prev) = program.schemas.get(&item.pred) {
                    if prev.attrs != schema.attrs {
                        return Err(Error::ArityClash {
                            pred: item.pred.clone(),
                            expected: prev.arity(),
                            found: schema.arity(),
                        });
                    }
                }
                program.schemas.insert(item.pred.clone(), schema);
            }
        }
    }
    for d in directives.iter().filter(|d| d.keyword == "keys") {
        for item in &d.items {
            let schema = program
                .schemas
                .get_mut(&item.pred)
                .ok_or_else(|| Error::Syntax {
                    line: d.line,
                    col: 1,
                    msg: format!(
                        "key declared for `{}` which has no attribute schema",
                        item.pred
                    ),
                })?;
            let mut key = Vec::new();
            for attr in item.attrs.iter().flatten() {
                let pos =
                    schema
                        .attrs
                        .iter()
                        .position(|a| a == attr)
                        .ok_or_else(|| Error::Syntax {
                            line: d.line,
                            col: 1,
                            msg: format!("`{}` has no attribute `{attr}`", item.pred),
                        })?;
                key.push(pos);
            }
            schema.key = key;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Anon,
    Int(i64),
    Dec(Decimal),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    If,
    Plus,
    Minus,
    Cmp(CmpOp),
    Bottom,
    Eof,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    peeked: Option<(Tok, usize, usize)>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, line: usize, col: usize) -> Self {
        Parser {
            src,
            pos: 0,
            line,
            col,
            peeked: None,
        }
    }

    fn err<T>(&self, line: usize, col: usize, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn bump_char(&mut self) -> Option<char> {
        let c = self.src[self.pos..].chars().next()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_char2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => {
                    self.bump_char();
                }
                Some('%') => self.skip_line(),
                Some('/') if self.peek_char2() == Some('/') => self.skip_line(),
                _ => break,
            }
        }
    }

    fn skip_line(&mut self) {
        while let Some(c) = self.bump_char() {
            if c == '\n' {
                break;
            }
        }
    }

    fn lex(&mut self) -> Result<(Tok, usize, usize)> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek_char() else {
            return Ok((Tok::Eof, line, col));
        };
        let tok = match c {
            '(' => self.single(Tok::LParen),
            ')' => self.single(Tok::RParen),
            ',' => self.single(Tok::Comma),
            '.' => self.single(Tok::Dot),
            '+' => self.single(Tok::Plus),
            '⊥' => self.single(Tok::Bottom),
            '≠' => self.single(Tok::Cmp(CmpOp::Ne)),
            '≤' => self.single(Tok::Cmp(CmpOp::Le)),
            '¬' => self.single(Tok::Ident("not".into())),
            '=' => self.single(Tok::Cmp(CmpOp::Eq)),
            '-' => {
                if self.peek_char2().is_some_and(|d| d.is_ascii_digit()) {
                    self.number()?
                } else {
                    self.single(Tok::Minus)
                }
            }
            ':' => {
                self.bump_char();
                if self.peek_char() == Some('-') {
                    self.bump_char();
                    Tok::If
                } else {
                    return self.err(line, col, "expected `:-`");
                }
            }
            '<' => {
                self.bump_char();
                match self.peek_char() {
                    Some('=') => self.single(Tok::Cmp(CmpOp::Le)),
                    Some('>') => self.single(Tok::Cmp(CmpOp::Ne)),
                    _ => Tok::Cmp(CmpOp::Lt),
                }
            }
            '!' => {
                self.bump_char();
                if self.peek_char() == Some('=') {
                    self.single(Tok::Cmp(CmpOp::Ne))
                } else {
                    return self.err(line, col, "expected `!=`");
                }
            }
            '"' => self.string(line, col)?,
            c if c.is_ascii_digit() => self.number()?,
            c if c.is_alphabetic() || c == '_' => self.word(),
            other => return self.err(line, col, format!("unexpected character `{other}`")),
        };
        Ok((tok, line, col))
    }

    fn single(&mut self, tok: Tok) -> Tok {
        self.bump_char();
        tok
    }

    fn word(&mut self) -> Tok {
        let start = self.pos;
        while let Some(c) = self.peek_char() {
            if c.is_alphanumeric() || c == '_' {
                self.bump_char();
            } else {
                break;
            }
        }
        while self.peek_char() == Some('\'') {
            self.bump_char();
        }
        let w = &self.src[start..self.pos];
        if w == "_" {
            Tok::Anon
        } else if w.starts_with(|c: char| c.is_uppercase() || c == '_') {
            Tok::Var(w.to_string())
        } else if w == "false" {
            Tok::Bottom
        } else {
            Tok::Ident(w.to_string())
        }
    }

    fn number(&mut self) -> Result<Tok> {
        let (line, col) = (self.line, self.col);
        let start = self.pos;
        if self.peek_char() == Some('-') {
            self.bump_char();
        }
        while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
            self.bump_char();
        }
        let is_dec =
            self.peek_char() == Some('.') && self.peek_char2().is_some_and(|c| c.is_ascii_digit());
        if is_dec {
            self.bump_char();
            while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                self.bump_char();
            }
        }
        let text = &self.src[start..self.pos];
        if is_dec {
            match Decimal::from_str(text) {
                Ok(d) => Ok(Tok::Dec(d.normalize())),
                Err(e) => self.err(line, col, format!("bad decimal `{text}`: {e}")),
            }
        } else {
            match text.parse() {
                Ok(i) => Ok(Tok::Int(i)),
                Err(e) => self.err(line, col, format!("bad integer `{text}`: {e}")),
            }
        }
    }

    fn string(&mut self, line: usize, col: usize) -> Result<Tok> {
        self.bump_char();
        let mut out = String::new();
        loop {
            match self.bump_char() {
                None => return self.err(line, col, "unterminated string"),
                Some('"') => return Ok(Tok::Str(out)),
                Some('\\') => match self.bump_char() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some(c @ ('"' | '\\')) => out.push(c),
                    _ => return self.err(self.line, self.col, "bad escape"),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn peek(&mut self) -> Result<&Tok> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lex()?);
        }
        Ok(&self.peeked.as_ref().unwrap().0)
    }

    fn next(&mut self) -> Result<(Tok, usize, usize)> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lex(),
        }
    }

    fn program(&mut self) -> Result<Program> {
        let mut program = Program::default();
        while *self.peek()? != Tok::Eof {
            match self.clause()? {
                Clause::Rule(r) => program.rules.push(r),
                Clause::Constraint(c) => program.constraints.push(c),
            }
        }
        Ok(program)
    }

    fn clause(&mut self) -> Result<Clause> {
        let (t, line, col) = self.next()?;
        let head = match t {
            Tok::Bottom => None,
            Tok::If => {
                // `:- body.` is a headless constraint.
                let body = self.body()?;
                return Ok(Clause::Constraint(Constraint { body }));
            }
            Tok::Plus | Tok::Minus => {
                let sigil = if t == Tok::Plus { '+' } else { '-' };
                let (name, l2, c2) = self.next()?;
                let Tok::Ident(name) = name else {
                    return self.err(l2, c2, "expected predicate after delta sigil");
                };
                Some(self.atom_args(format!("{sigil}{name}"))?)
            }
            Tok::Ident(name) if name != "not" => Some(self.atom_args(name)?),
            other => {
                return self.err(
                    line,
                    col,
                    format!("expected rule head, found {}", describe(&other)),
                )
            }
        };
        let (t, line, col) = self.next()?;
        let body = match t {
            Tok::Dot => Vec::new(),
            Tok::If => self.body()?,
            other => {
                return self.err(
                    line,
                    col,
                    format!("expected `:-` or `.`, found {}", describe(&other)),
                )
            }
        };
        Ok(match head {
            Some(head) => Clause::Rule(Rule { head, body }),
            None => Clause::Constraint(Constraint { body }),
        })
    }

    fn body(&mut self) -> Result<Vec<Literal>> {
        let mut body = vec![self.literal()?];
        loop {
            let (t, line, col) = self.next()?;
            match t {
                Tok::Comma => body.push(self.literal()?),
                Tok::Dot => return Ok(body),
                other => {
                    return self.err(
                        line,
                        col,
                        format!("expected `,` or `.`, found {}", describe(&other)),
                    )
                }
            }
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        let negated = match self.peek()? {
            Tok::Minus => {
                self.next()?;
                true
            }
            Tok::Ident(w) if w == "not" => {
                self.next()?;
                true
            }
            _ => false,
        };
        let (t, line, col) = self.next()?;
        if negated {
            let Tok::Ident(name) = t else {
                return self.err(line, col, "negation applies to predicates only; write comparisons in the complementary form");
            };
            return Ok(Literal::Neg(self.atom_args(name)?));
        }
        if let Tok::Ident(name) = &t {
            // A lowercase identifier followed by `(` or a non-operator is an atom;
            // followed by a comparison operator it is a string constant.
            if !matches!(self.peek()?, Tok::Cmp(_)) {
                return Ok(Literal::Pos(self.atom_args(name.clone())?));
            }
        }
        if t == Tok::Plus {
            return self.err(line, col, "delta relations may only appear in rule heads");
        }
        let lhs = self.term_from(t, line, col)?;
        let (op, l2, c2) = self.next()?;
        let Tok::Cmp(op) = op else {
            return self.err(
                l2,
                c2,
                format!("expected comparison, found {}", describe(&op)),
            );
        };
        let rhs = self.term()?;
        Ok(Literal::Cmp(op, lhs, rhs))
    }

    fn atom_args(&mut self, pred: String) -> Result<Atom> {
        let mut args = Vec::new();
        if *self.peek()? == Tok::LParen {
            self.next()?;
            if *self.peek()? == Tok::RParen {
                self.next()?;
                return Ok(Atom::new(pred, args));
            }
            loop {
                args.push(self.term()?);
                let (t, line, col) = self.next()?;
                match t {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    other => {
                        return self.err(
                            line,
                            col,
                            format!("expected `,` or `)`, found {}", describe(&other)),
                        )
                    }
                }
            }
        }
        Ok(Atom::new(pred, args))
    }

    fn term(&mut self) -> Result<Term> {
        let (t, line, col) = self.next()?;
        self.term_from(t, line, col)
    }

    fn term_from(&self, t: Tok, line: usize, col: usize) -> Result<Term> {
        Ok(match t {
            Tok::Var(v) => Term::Var(v),
            Tok::Anon => Term::Anon,
            Tok::Int(i) => Term::Const(Value::Int(i)),
            Tok::Dec(d) => Term::Const(Value::Decimal(d)),
            Tok::Str(s) | Tok::Ident(s) => Term::Const(Value::Str(s)),
            other => {
                return self.err(
                    line,
                    col,
                    format!("expected term, found {}", describe(&other)),
                )
            }
        })
    }

    fn decl_items(&mut self) -> Result<Vec<DeclItem>> {
        let mut items = Vec::new();
        if *self.peek()? == Tok::Eof {
            return Ok(items);
        }
        loop {
            let (t, line, col) = self.next()?;
            let Tok::Ident(pred) = t else {
                return self.err(
                    line,
                    col,
                    format!("expected relation name, found {}", describe(&t)),
                );
            };
            let mut attrs = None;
            if *self.peek()? == Tok::LParen {
                self.next()?;
                let mut names = Vec::new();
                loop {
                    let (t, line, col) = self.next()?;
                    match t {
                        Tok::Ident(a) | Tok::Var(a) => names.push(a),
                        Tok::RParen if names.is_empty() => break,
                        other => {
                            return self.err(
                                line,
                                col,
                                format!("expected attribute name, found {}", describe(&other)),
                            )
                        }
                    }
                    let (t, line, col) = self.next()?;
                    match t {
                        Tok::Comma => continue,
                        Tok::RParen => break,
                        other => {
                            return self.err(
                                line,
                                col,
                                format!("expected `,` or `)`, found {}", describe(&other)),
                            )
                        }
                    }
                }
                attrs = Some(names);
            }
            items.push(DeclItem { pred, attrs });
            let (t, line, col) = self.next()?;
            match t {
                Tok::Comma => continue,
                Tok::Eof => return Ok(items),
                other => {
                    return self.err(
                        line,
                        col,
                        format!("expected `,` or end of line, found {}", describe(&other)),
                    )
                }
            }
        }
    }
}

enum Clause {
    Rule(Rule),
    Constraint(Constraint),
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Var(s) => format!("variable `{s}`"),
        Tok::Anon => "`_`".into(),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Dec(d) => format!("`{d}`"),
        Tok::Str(s) => format!("\"{s}\""),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::If => "`:-`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Cmp(op) => format!("`{}`", op.symbol()),
        Tok::Bottom => "`false`".into(),
        Tok::Eof => "end of input".into(),
    }
}
