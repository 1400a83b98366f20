//! The `dejima` command line.
//!
//! Exit codes: 0 on success, 1 when a derivation, law, consistency or
//! equivalence check fails, 2 on unreadable or malformed input.
//!
//! Strategy arguments are file paths; a name that is not a file but
//! matches a bundled strategy or mutation is loaded from the bundle. A
//! mutation is checked against the view definition derived from the
//! strategy it mutates. The topology argument `rideshare` names the
//! bundled network.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::datalog::{
    self, constraint_violations, evaluate, io, parse_document, parse_program, stratification,
    validate_program, Program,
};
use crate::dejima::{self, DejimaError, PeerNetwork, ScriptTxn, Topology};
use crate::incremental;
use crate::putback::{
    self, derive_get, BxPair, DeriveConfig, LawConfig, PutStrategy, PutbackError, Status,
};
use crate::scenario;
use crate::sqlgen;

#[derive(Debug, Parser)]
#[command(
    name = "dejima",
    version,
    about = "Datalog view update strategies and Dejima peers"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Fresh values per column when verifying derived view definitions.
    #[arg(long, global = true, default_value_t = 3)]
    pub bound: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, validate and stratify a program or strategy.
    Check { file: String },
    /// Derive the view definition of a strategy.
    Derive { strategy: String },
    /// Evaluate a program over a CSV directory or JSON database.
    Eval {
        program: PathBuf,
        data: PathBuf,
        /// Write the model as CSV files here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check GetPut and PutGet on a random corpus.
    Lawtest {
        strategy: String,
        #[arg(long, default_value_t = 500)]
        corpus_size: usize,
        /// View definition to pair with instead of the derived one.
        #[arg(long)]
        get: Option<PathBuf>,
    },
    /// Build a peer network and run a transaction script over it.
    Simulate {
        topology: String,
        /// JSON script; defaults to the bundled one for `rideshare`.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Generate a script of this many steps instead of reading one.
        #[arg(long, conflicts_with = "script")]
        generate: Option<usize>,
        /// Write every peer's final tables as CSV under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the transaction log (JSON lines) here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Emit the SQL view, trigger and procedure for a strategy.
    Emit {
        strategy: String,
        /// Write `<view>.view.sql`, `<view>.trigger.sql`, `<view>.proc.sql` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare incremental and recomputed get and put on random changes.
    BenchIncremental {
        strategy: String,
        #[arg(long, default_value_t = 500)]
        cases: usize,
    },
}

/// A command outcome that is not plain success.
#[derive(Debug)]
enum Failure {
    /// A check ran and failed; the report is still printed.
    Check(String),
    Input(String),
}

impl From<datalog::Error> for Failure {
    fn from(e: datalog::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<PutbackError> for Failure {
    fn from(e: PutbackError) -> Self {
        match e {
            PutbackError::Datalog(d) => d.into(),
            PutbackError::Strategy(_) => Failure::Input(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

impl From<DejimaError> for Failure {
    fn from(e: DejimaError) -> Self {
        match e {
            DejimaError::Putback(p) => p.into(),
            DejimaError::InitialSync { .. } => Failure::Check(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<sqlgen::SqlError> for Failure {
    fn from(e: sqlgen::SqlError) -> Self {
        Failure::Check(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// A strategy argument: the strategy and, for mutations, the bundled
/// strategy whose view definition it is checked against.
fn load_strategy(arg: &str) -> Result<(PutStrategy, Option<PutStrategy>), Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
        return Ok((PutStrategy::parse(name, &read(path)?)?, None));
    }
    if let Some(s) = scenario::strategy(arg) {
        return Ok((s?, None));
    }
    if let Some(m) = scenario::mutation(arg) {
        let base = scenario::strategy(m.base).expect("mutation bases are bundled")?;
        return Ok((PutStrategy::parse(m.name, m.text)?, Some(base)));
    }
    Err(Failure::Input(format!(
        "`{arg}` is neither a file nor a bundled strategy or mutation"
    )))
}

/// Derives the view definition for a strategy argument (from the base for
/// mutations).
fn load_pair(arg: &str, cfg: &DeriveConfig) -> Result<BxPair, Failure> {
    let (put, base) = load_strategy(arg)?;
    Ok(match base {
        Some(b) => BxPair::with_get(put, derive_get(&b, cfg)?.get),
        None => derive_get(&put, cfg)?,
    })
}

struct Ctx<'a> {
    cli: &'a Cli,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn derive_cfg(&self) -> DeriveConfig {
        DeriveConfig {
            bound: self.cli.bound,
            seed: self.cli.seed,
            ..DeriveConfig::default()
        }
    }

    fn emit(&mut self, json: &Json, text: impl FnOnce() -> String) {
        let s = match self.cli.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Text => text(),
        };
        let _ = self.out.write_all(s.as_bytes());
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let mut ctx = Ctx { cli: &cli, out };
    let result = match &cli.command {
        Command::Check { file } => check(&mut ctx, file),
        Command::Derive { strategy } => derive(&mut ctx, strategy),
        Command::Eval { program, data, out } => eval(&mut ctx, program, data, out.as_deref()),
        Command::Lawtest {
            strategy,
            corpus_size,
            get,
        } => lawtest(&mut ctx, strategy, *corpus_size, get.as_deref()),
        Command::Simulate {
            topology,
            script,
            generate,
            out,
            log,
        } => simulate(
            &mut ctx,
            topology,
            script.as_deref(),
            *generate,
            out.as_deref(),
            log.as_deref(),
        ),
        Command::Emit { strategy, out } => emit(&mut ctx, strategy, out.as_deref()),
        Command::BenchIncremental { strategy, cases } => bench(&mut ctx, strategy, *cases),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Check(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(Failure::Input(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

fn check(ctx: &mut Ctx<'_>, file: &str) -> Result<(), Failure> {
    let path = Path::new(file);
    let text = if path.is_file() {
        read(path)?
    } else if let Some(t) = scenario::strategy_text(file) {
        t.to_string()
    } else {
        return Err(Failure::Input(format!("{file}: no such file")));
    };
    let doc = parse_document(&text)?;
    if doc.items("view").next().is_some() {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(file);
        let put = PutStrategy::from_document(name, doc)?;
        validate_program(&put.program)?;
        let strata = stratification(&put.program)?.strata;
        let json = json!({
            "kind": "strategy",
            "view": put.view,
            "sources": put.sources,
            "references": put.references,
            "rules": put.program.rules.len(),
            "guards": put.program.constraints.len(),
            "strata": strata,
        });
        ctx.emit(&json, || {
            format!(
                "strategy {}: view {}, {} rule(s), {} guard(s), {} strat{}\n",
                put.name,
                put.view,
                put.program.rules.len(),
                put.program.constraints.len(),
                strata.len(),
                if strata.len() == 1 { "um" } else { "a" }
            )
        });
    } else {
        let program = doc.program;
        validate_program(&program)?;
        let strata = stratification(&program)?.strata;
        let json = json!({
            "kind": "program",
            "rules": program.rules.len(),
            "constraints": program.constraints.len(),
            "strata": strata,
        });
        ctx.emit(&json, || {
            let mut s = format!(
                "program: {} rule(s), {} constraint(s)\n",
                program.rules.len(),
                program.constraints.len()
            );
            for (i, level) in strata.iter().enumerate() {
                let names: Vec<&str> = level.iter().map(String::as_str).collect();
                s += &format!("stratum {i}: {}\n", names.join(", "));
            }
            s
        });
    }
    Ok(())
}

fn derive(ctx: &mut Ctx<'_>, arg: &str) -> Result<(), Failure> {
    let (put, _) = load_strategy(arg)?;
    let cfg = ctx.derive_cfg();
    match derive_get(&put, &cfg) {
        Ok(bx) => {
            let residuals: Vec<Json> = bx
                .residuals
                .iter()
                .map(|r| {
                    json!({
                        "constraint": r.constraint.to_string(),
                        "origin": r.origin.to_string(),
                        "instances": r.instances,
                        "exhaustive": r.exhaustive,
                    })
                })
                .collect();
            let json = json!({
                "strategy": put.name,
                "view": put.view,
                "get": bx.get.to_string(),
                "residuals": residuals,
                "bound": cfg.bound,
                "seed": cfg.seed,
            });
            ctx.emit(&json, || {
                let mut s = bx.get.to_string();
                for r in &bx.residuals {
                    s += &format!(
                        "% residual ({}) {} checked on {} {}instances\n",
                        r.origin,
                        r.constraint,
                        r.instances,
                        if r.exhaustive { "(all) " } else { "sampled " }
                    );
                }
                s
            });
            Ok(())
        }
        Err(e @ PutbackError::ResidualViolated { .. }) => {
            if let PutbackError::ResidualViolated {
                constraint,
                witness,
                counterexample,
                view,
            } = &e
            {
                let json = json!({
                    "strategy": put.name,
                    "error": "residual_violated",
                    "constraint": constraint,
                    "witness": witness.to_string(),
                    "source": io::database_to_json(counterexample),
                    "view": io::database_to_json(view),
                });
                ctx.emit(&json, || {
                    format!(
                        "residual {constraint} violated with {witness}\nsource: {}view: {}",
                        io::write_json(counterexample),
                        io::write_json(view)
                    )
                });
            }
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn eval(ctx: &mut Ctx<'_>, program: &Path, data: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let program: Program = parse_program(&read(program)?)?;
    validate_program(&program)?;
    let db = io::read_database(data)?;
    let model = evaluate(&program, &db)?;
    if let Some(dir) = out {
        io::write_csv_dir(&model, dir)?;
    }
    let violations = constraint_violations(&program.constraints, &model)?;
    let json = json!({
        "model": io::database_to_json(&model),
        "violations": violations
            .iter()
            .map(|(i, b)| format!("{} with {}", program.constraints[*i], putback::Witness(b.clone())))
            .collect::<Vec<_>>(),
    });
    ctx.emit(&json, || {
        let mut s = String::new();
        for name in model.names() {
            for t in model.tuples(name) {
                let args: Vec<String> = t.iter().map(ToString::to_string).collect();
                s += &format!("{name}({}).\n", args.join(", "));
            }
        }
        for (i, b) in &violations {
            s += &format!(
                "% violated: {} with {}\n",
                program.constraints[*i],
                putback::Witness(b.clone())
            );
        }
        s
    });
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} constraint violation(s)",
            violations.len()
        )))
    }
}

fn lawtest(
    ctx: &mut Ctx<'_>,
    arg: &str,
    corpus_size: usize,
    get: Option<&Path>,
) -> Result<(), Failure> {
    let bx = match get {
        Some(p) => {
            let (put, _) = load_strategy(arg)?;
            let get = parse_program(&read(p)?)?;
            validate_program(&get)?;
            BxPair::with_get(put, get)
        }
        None => load_pair(arg, &ctx.derive_cfg())?,
    };
    let cfg = LawConfig {
        seed: ctx.cli.seed,
        corpus_size,
        ..LawConfig::default()
    };
    let reports = putback::run_laws(&bx, &cfg)?;
    let json = serde_json::to_value(&reports).expect("serializable");
    ctx.emit(&json, || {
        let mut s = String::new();
        for r in &reports {
            s += &format!(
                "{}: {} ({}/{} passed{})\n",
                r.law,
                serde_json::to_value(r.status)
                    .expect("serializable")
                    .as_str()
                    .unwrap_or("?"),
                r.passed,
                r.corpus_size,
                r.rejected
                    .map(|n| format!(", {n} rejected"))
                    .unwrap_or_default()
            );
            if let Some(c) = &r.counterexample {
                s += &format!("  counterexample: {c}\n");
            }
        }
        s
    });
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| r.status == Status::Fail)
        .map(|r| r.law)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} failed for {}",
            failed.join(" and "),
            bx.put.name
        )))
    }
}

fn load_network(arg: &str, cfg: &DeriveConfig) -> Result<(PeerNetwork, bool), Failure> {
    if arg == "rideshare" && !Path::new(arg).exists() {
        return Ok((scenario::rideshare_network(cfg)?, true));
    }
    let (topo, res) = Topology::load(Path::new(arg))?;
    Ok((topo.build(&res, cfg)?, false))
}

fn simulate(
    ctx: &mut Ctx<'_>,
    topology: &str,
    script: Option<&Path>,
    generate: Option<usize>,
    out: Option<&Path>,
    log: Option<&Path>,
) -> Result<(), Failure> {
    let (mut net, bundled) = load_network(topology, &ctx.derive_cfg())?;
    let steps: Vec<ScriptTxn> = match (script, generate) {
        (Some(p), _) => dejima::parse_script(&read(p)?)?,
        (None, Some(n)) if bundled => scenario::generate_script(
            &net,
            &scenario::ScriptConfig {
                seed: ctx.cli.seed,
                steps: n,
                rebook_at: n / 2,
            },
        )?,
        (None, Some(_)) => {
            return Err(Failure::Input(
                "--generate is only available for the bundled rideshare network".into(),
            ))
        }
        (None, None) if bundled => scenario::rideshare_script(),
        (None, None) => Vec::new(),
    };
    let sim = dejima::simulate(&mut net, &steps)?;
    let all = net.log().to_vec();
    if let Some(path) = log {
        write_file(path, &dejima::to_jsonl(&all))?;
    }
    if let Some(dir) = out {
        for p in net.peers() {
            io::write_csv_dir(&p.base, &dir.join(&p.name))?;
        }
    }
    let json = json!({
        "transactions": all.iter().map(dejima::record_json).collect::<Vec<_>>(),
        "committed": sim.committed,
        "aborted": sim.aborted,
        "inconsistent_steps": sim.inconsistent.iter().map(|(i, _)| i).collect::<Vec<_>>(),
    });
    ctx.emit(&json, || {
        let mut s = String::new();
        for r in &all {
            s += &match &r.outcome {
                dejima::Outcome::Committed => format!(
                    "txn {} from {}: committed, {} message(s), {} round(s)\n",
                    r.txn_id,
                    r.origin,
                    r.messages.len(),
                    r.rounds
                ),
                dejima::Outcome::Aborted { peer, reason } => format!(
                    "txn {} from {}: aborted at {peer}: {reason}\n",
                    r.txn_id, r.origin
                ),
            };
        }
        s += &format!(
            "{} step(s): {} committed, {} aborted; links consistent after every step: {}\n",
            steps.len(),
            sim.committed,
            sim.aborted,
            sim.inconsistent.is_empty()
        );
        s
    });
    if sim.inconsistent.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "links inconsistent after {} step(s)",
            sim.inconsistent.len()
        )))
    }
}

fn emit(ctx: &mut Ctx<'_>, arg: &str, out: Option<&Path>) -> Result<(), Failure> {
    let bx = load_pair(arg, &ctx.derive_cfg())?;
    let sql = sqlgen::emit(&bx)?;
    let v = bx.view().to_string();
    if let Some(dir) = out {
        write_file(&dir.join(format!("{v}.view.sql")), &sql.view)?;
        write_file(&dir.join(format!("{v}.trigger.sql")), &sql.trigger)?;
        write_file(&dir.join(format!("{v}.proc.sql")), &sql.proc)?;
    }
    let json = json!({ "view": sql.view, "trigger": sql.trigger, "proc": sql.proc });
    ctx.emit(&json, || {
        format!("{}\n{}\n{}", sql.view, sql.trigger, sql.proc)
    });
    Ok(())
}

fn bench(ctx: &mut Ctx<'_>, arg: &str, cases: usize) -> Result<(), Failure> {
    let bx = load_pair(arg, &ctx.derive_cfg())?;
    let report = incremental::bench(&bx, cases, ctx.cli.seed, LawConfig::default().domain)?;
    let json = serde_json::to_value(&report).expect("serializable");
    ctx.emit(&json, || {
        format!(
            "{}: get {}/{} equal ({} us incremental, {} us recomputed); put {}/{} equal, {} refused ({} us incremental, {} us recomputed)\n",
            report.strategy,
            report.get_equal,
            report.cases,
            report.inc_get_us,
            report.full_get_us,
            report.put_equal,
            report.cases,
            report.put_refused,
            report.inc_put_us,
            report.full_put_us
        )
    });
    if report.all_equal() {
        Ok(())
    } else {
        Err(Failure::Check(
            "incremental and recomputed results differ".into(),
        ))
    }
}
