use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::datalog::{delta_name, Atom, CmpOp, Literal, Sign, Term, Value};
use crate::putback::{BxPair, PutStrategy};

use super::SqlError;

/// Rendered statements for one updatable view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlArtifacts {
    pub view: String,
    pub trigger: String,
    pub proc: String,
}

/// One delta relation of a put strategy as a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaQuery {
    pub sign: Sign,
    pub source: String,
    /// Temporary table holding the delta inside the procedure.
    pub table: String,
    pub query: String,
}

/// The queries the trigger procedure runs, before they are wrapped in
/// PL/pgSQL. Every reference to the view reads [`PutSql::updated`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PutSql {
    pub updated: String,
    /// Guard text and a query that returns a row when the guard fires.
    pub guards: Vec<(String, String)>,
    pub deltas: Vec<DeltaQuery>,
}

pub fn sql_literal(v: &Value) -> String {
    match v {
        Value::Str(s) => format!("'{}'", s.replace('\'', "''")),
        other => other.to_field(),
    }
}

struct Ctx<'a> {
    attrs: &'a dyn Fn(&str) -> Vec<String>,
    table: &'a dyn Fn(&str) -> String,
}

/// Column name an expression produces: the part after the last dot.
fn output_name(expr: &str) -> &str {
    expr.rsplit('.').next().unwrap_or(expr)
}

/// One rule (or constraint, with an empty head) as a single-line SELECT.
fn select(
    head: &[Term],
    head_attrs: &[String],
    body: &[Literal],
    distinct: bool,
    ctx: &Ctx<'_>,
) -> Result<String, SqlError> {
    let pos: Vec<&Atom> = body
        .iter()
        .filter_map(|l| match l {
            Literal::Pos(a) => Some(a),
            _ => None,
        })
        .collect();
    let has_neg = body.iter().any(|l| matches!(l, Literal::Neg(_)));
    let qualify = pos.len() > 1 || has_neg;

    let mut used: BTreeMap<&str, usize> = BTreeMap::new();
    for a in &pos {
        *used.entry(a.pred.as_str()).or_default() += 1;
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut aliases: BTreeSet<String> = BTreeSet::new();
    let mut from = Vec::new();
    let mut bound: HashMap<&str, String> = HashMap::new();
    let mut conds = Vec::new();

    for a in &pos {
        let k = seen.entry(a.pred.as_str()).or_default();
        *k += 1;
        let alias = if used[a.pred.as_str()] == 1 {
            a.pred.clone()
        } else {
            format!("{}_{}", a.pred, k)
        };
        let table = (ctx.table)(&a.pred);
        from.push(if table == alias {
            table
        } else {
            format!("{table} AS {alias}")
        });
        let attrs = (ctx.attrs)(&a.pred);
        for (arg, attr) in a.args.iter().zip(&attrs) {
            let col = if qualify {
                format!("{alias}.{attr}")
            } else {
                attr.clone()
            };
            match arg {
                Term::Var(v) => match bound.get(v.as_str()) {
                    Some(e) => conds.push(format!("{col} = {e}")),
                    None => {
                        bound.insert(v, col);
                    }
                },
                Term::Const(c) => conds.push(format!("{col} = {}", sql_literal(c))),
                Term::Anon => {}
            }
        }
        aliases.insert(alias);
    }

    let term_expr = |t: &Term, bound: &HashMap<&str, String>| match t {
        Term::Const(c) => Some(sql_literal(c)),
        Term::Var(v) => bound.get(v.as_str()).cloned(),
        Term::Anon => None,
    };
    let mut cmps: Vec<&Literal> = body
        .iter()
        .filter(|l| matches!(l, Literal::Cmp(..)))
        .collect();
    // Equalities bind variables that no atom binds, as in `C = 1`.
    loop {
        let before = cmps.len();
        cmps.retain(|l| {
            let Literal::Cmp(op, lhs, rhs) = l else {
                return true;
            };
            if *op != CmpOp::Eq {
                return true;
            }
            for (x, y) in [(lhs, rhs), (rhs, lhs)] {
                if let Term::Var(v) = x {
                    if !bound.contains_key(v.as_str()) {
                        if let Some(e) = term_expr(y, &bound) {
                            bound.insert(v, e);
                            return false;
                        }
                    }
                }
            }
            true
        });
        if cmps.len() == before {
            break;
        }
    }
    for l in cmps {
        let Literal::Cmp(op, lhs, rhs) = l else {
            unreachable!()
        };
        let (Some(a), Some(b)) = (term_expr(lhs, &bound), term_expr(rhs, &bound)) else {
            return Err(SqlError::Unsafe(l.to_string()));
        };
        conds.push(format!("{a} {} {b}", op.symbol()));
    }

    for l in body {
        let Literal::Neg(a) = l else { continue };
        let mut alias = a.pred.clone();
        let mut k = 1;
        while aliases.contains(&alias) {
            k += 1;
            alias = format!("{}_{k}", a.pred);
        }
        aliases.insert(alias.clone());
        let table = (ctx.table)(&a.pred);
        let mut sub = Vec::new();
        for (arg, attr) in a.args.iter().zip((ctx.attrs)(&a.pred)) {
            match arg {
                Term::Anon => {}
                t => match term_expr(t, &bound) {
                    Some(e) => sub.push(format!("{alias}.{attr} = {e}")),
                    None => return Err(SqlError::Unsafe(l.to_string())),
                },
            }
        }
        let from = if table == alias {
            table
        } else {
            format!("{table} AS {alias}")
        };
        conds.push(if sub.is_empty() {
            format!("NOT EXISTS (SELECT 1 FROM {from})")
        } else {
            format!(
                "NOT EXISTS (SELECT 1 FROM {from} WHERE {})",
                sub.join(" AND ")
            )
        });
    }

    let mut items = Vec::new();
    for (t, attr) in head.iter().zip(head_attrs) {
        let e = term_expr(t, &bound).ok_or_else(|| SqlError::Unsafe(format!("head term {t}")))?;
        items.push(if output_name(&e) == attr {
            e
        } else {
            format!("{e} AS {attr}")
        });
    }
    if items.is_empty() {
        items.push("1".into());
    }
    let mut s = String::from("SELECT ");
    if distinct {
        s.push_str("DISTINCT ");
    }
    s.push_str(&items.join(", "));
    if !from.is_empty() {
        s.push_str(" FROM ");
        s.push_str(&from.join(", "));
    }
    if !conds.is_empty() {
        s.push_str(" WHERE ");
        s.push_str(&conds.join(" AND "));
    }
    Ok(s)
}

/// Whether a rule's answers can repeat as rows: some variable of its
/// positive atoms is projected away and not pinned to a constant.
fn projects(head: &Atom, body: &[Literal]) -> bool {
    let mut kept: BTreeSet<&str> = head.vars().collect();
    for l in body {
        if let Literal::Cmp(CmpOp::Eq, a, b) = l {
            match (a, b) {
                (Term::Var(v), Term::Const(_)) | (Term::Const(_), Term::Var(v)) => {
                    kept.insert(v);
                }
                _ => {}
            }
        }
    }
    body.iter()
        .filter_map(|l| match l {
            Literal::Pos(a) => Some(a),
            _ => None,
        })
        .flat_map(|a| a.args.iter())
        .any(|t| matches!(t, Term::Var(v) if !kept.contains(v.as_str())) || matches!(t, Term::Anon))
}

/// SELECTs of `pred`'s rules; one SELECT gets DISTINCT if it projects.
fn union_of(
    rules: &[&crate::datalog::Rule],
    head_attrs: &[String],
    ctx: &Ctx<'_>,
) -> Result<Vec<String>, SqlError> {
    let single = rules.len() == 1;
    rules
        .iter()
        .map(|r| {
            select(
                &r.head.args,
                head_attrs,
                &r.body,
                single && projects(&r.head, &r.body),
                ctx,
            )
        })
        .collect()
}

/// The view definition as a query: one SELECT per rule, joined by UNION.
pub fn view_query(bx: &BxPair) -> Result<Vec<String>, SqlError> {
    let view = bx.view();
    let idb = bx.get.idb();
    for r in &bx.get.rules {
        if r.head.pred != view {
            return Err(SqlError::Unsupported(format!(
                "intermediate relation `{}`",
                r.head.pred
            )));
        }
        for a in r.body.iter().filter_map(Literal::atom) {
            if idb.contains(a.pred.as_str()) {
                return Err(SqlError::Recursive(view.to_string()));
            }
        }
    }
    let rules: Vec<_> = bx.get.rules.iter().collect();
    if rules.is_empty() {
        return Err(SqlError::EmptyView(view.to_string()));
    }
    let attrs = |p: &str| bx.put.schema(p).attrs;
    let table = |p: &str| p.to_string();
    let ctx = Ctx {
        attrs: &attrs,
        table: &table,
    };
    union_of(&rules, &bx.put.view_schema().attrs, &ctx)
}

fn indent_union(selects: &[String], pad: &str) -> String {
    selects
        .iter()
        .map(|s| format!("{pad}{s}"))
        .collect::<Vec<_>>()
        .join(&format!("\n{pad}UNION\n"))
}

/// `CREATE OR REPLACE VIEW` for the derived view definition, without a
/// terminating semicolon.
pub fn emit_view(bx: &BxPair) -> Result<String, SqlError> {
    let selects = view_query(bx)?;
    Ok(format!(
        "CREATE OR REPLACE VIEW {} AS\n{}\n",
        bx.view(),
        indent_union(&selects, "   ")
    ))
}

/// The strategy's guards and delta relations as queries over the sources
/// and the updated view.
pub fn put_queries(put: &PutStrategy) -> Result<PutSql, SqlError> {
    let updated = format!("{}_updated", put.view);
    let attrs = |p: &str| put.schema(p).attrs;
    let table = |p: &str| {
        if p == put.view {
            updated.clone()
        } else {
            p.to_string()
        }
    };
    let ctx = Ctx {
        attrs: &attrs,
        table: &table,
    };
    let mut guards = Vec::new();
    for c in &put.program.constraints {
        guards.push((c.to_string(), select(&[], &[], &c.body, false, &ctx)?));
    }
    let mut deltas = Vec::new();
    for s in &put.sources {
        for (sign, tag) in [(Sign::Delete, "del"), (Sign::Insert, "ins")] {
            let name = delta_name(sign, s);
            let rules: Vec<_> = put
                .program
                .rules
                .iter()
                .filter(|r| r.head.pred == name)
                .collect();
            if rules.is_empty() {
                continue;
            }
            let selects = union_of(&rules, &put.schema(s).attrs, &ctx)?;
            deltas.push(DeltaQuery {
                sign,
                source: s.clone(),
                table: format!("{}_{tag}_{s}", put.view),
                query: selects.join("\nUNION\n"),
            });
        }
    }
    Ok(PutSql {
        updated,
        guards,
        deltas,
    })
}

fn view_keyed(put: &PutStrategy) -> bool {
    let s = put.view_schema();
    !s.key.is_empty() && s.key.len() < s.arity()
}

/// `INSTEAD OF` trigger routing view writes to the procedure.
pub fn emit_trigger(put: &PutStrategy) -> String {
    let ops = if view_keyed(put) {
        "INSERT OR UPDATE OR DELETE"
    } else {
        "INSERT OR DELETE"
    };
    format!(
        "CREATE TRIGGER {v}_trigger\n   INSTEAD OF {ops} ON {v}\n   FOR EACH ROW\n   EXECUTE PROCEDURE {v}_proc();\n",
        v = put.view
    )
}

/// PL/pgSQL procedure: copy the view, apply the row change to the copy,
/// check the guards, compute every delta, then write the sources.
pub fn emit_proc(put: &PutStrategy) -> Result<String, SqlError> {
    let q = put_queries(put)?;
    let v = &put.view;
    let schema = put.view_schema();
    let cols = schema.attrs.join(", ");
    let row = |rec: &str, which: &[usize]| -> String {
        which
            .iter()
            .map(|&i| format!("{} = {rec}.{}", schema.attrs[i], schema.attrs[i]))
            .collect::<Vec<_>>()
            .join(" AND ")
    };
    let new_vals = schema
        .attrs
        .iter()
        .map(|a| format!("NEW.{a}"))
        .collect::<Vec<_>>()
        .join(", ");
    let all: Vec<usize> = (0..schema.arity()).collect();
    let upd = &q.updated;

    let mut out = format!(
        "CREATE OR REPLACE FUNCTION {v}_proc() RETURNS trigger\nLANGUAGE plpgsql AS $$\nBEGIN\n"
    );
    out += &format!("   DROP TABLE IF EXISTS {upd};\n");
    out += &format!("   CREATE TEMPORARY TABLE {upd} AS SELECT * FROM {v};\n");
    out += "   IF TG_OP = 'INSERT' THEN\n";
    out += &format!("      INSERT INTO {upd} ({cols}) VALUES ({new_vals});\n");
    out += "   ELSIF TG_OP = 'DELETE' THEN\n";
    out += &format!("      DELETE FROM {upd} WHERE {};\n", row("OLD", &all));
    if view_keyed(put) {
        out += "   ELSIF TG_OP = 'UPDATE' THEN\n";
        out += &format!(
            "      DELETE FROM {upd} WHERE {};\n",
            row("OLD", &schema.key)
        );
        out += &format!("      INSERT INTO {upd} ({cols}) VALUES ({new_vals});\n");
    }
    out += "   END IF;\n";
    for (text, query) in &q.guards {
        out += &format!("   IF EXISTS ({query}) THEN\n");
        out += &format!(
            "      RAISE EXCEPTION 'update of {v} refused by guard: %', {};\n",
            sql_literal(&Value::str(text.clone()))
        );
        out += "   END IF;\n";
    }
    for d in &q.deltas {
        out += &format!("   DROP TABLE IF EXISTS {};\n", d.table);
        out += &format!("   CREATE TEMPORARY TABLE {} AS\n", d.table);
        out += &format!(
            "{};\n",
            indent_union(
                &d.query
                    .split("\nUNION\n")
                    .map(str::to_string)
                    .collect::<Vec<_>>(),
                "      "
            )
        );
    }
    for d in q.deltas.iter().filter(|d| d.sign == Sign::Delete) {
        let cols = put.schema(&d.source).attrs;
        let lhs = if cols.len() == 1 {
            cols[0].clone()
        } else {
            format!("({})", cols.join(", "))
        };
        out += &format!(
            "   DELETE FROM {} WHERE {lhs} IN (SELECT {} FROM {});\n",
            d.source,
            cols.join(", "),
            d.table
        );
    }
    for d in q.deltas.iter().filter(|d| d.sign == Sign::Insert) {
        out += &format!("   INSERT INTO {} SELECT * FROM {};\n", d.source, d.table);
    }
    out += "   RETURN NULL;\nEND;\n$$;\n";
    Ok(out)
}

pub fn emit(bx: &BxPair) -> Result<SqlArtifacts, SqlError> {
    Ok(SqlArtifacts {
        view: emit_view(bx)?,
        trigger: emit_trigger(&bx.put),
        proc: emit_proc(&bx.put)?,
    })
}
