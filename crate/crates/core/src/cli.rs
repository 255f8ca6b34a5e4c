//! Command-line entry points. `dispatch` parses arguments, runs one command
//! and returns the process exit code.
//!
//! Exit codes: 0 success, 1 a negative verdict (distinguished, or a failed
//! composition check), 2 public interfaces differ, 64 usage, 65 invalid
//! input (source, script or move), 66 unreadable file, 70 internal error.

use std::fmt::Write as _;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::bisim::{bisimilar, BisimError, Verdict};
use crate::compose::{check_composition, ComposeError, Composite};
use crate::fixtures;
use crate::lang::{load_module, load_pair, LangError, ResolvedModule};
use crate::lts::explore;
use crate::nominal::{Name, NameSet};
use crate::sls::{replay, MoveBudget, StoreUpdate, SystemMove, Trace};
use crate::wire::{
    composition_report_to_json, label_to_json, module_to_json, parse_script, value_from_json, verdict_to_json,
    TraceLog, TraceStyle,
};

#[derive(Parser, Debug)]
#[command(name = "sysgame", version, about = "Play, explore and compare modules as the system that hosts them")]
pub struct Cli {
    /// Output style.
    #[arg(long, global = true, value_enum, default_value_t = TraceStyle::Text)]
    pub format: TraceStyle,
    /// Worker threads for exploration (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// Bounds on the moves the system tries.
#[derive(Args, Debug, Clone)]
pub struct BudgetArgs {
    /// Labels along any explored path.
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    /// Integer constants the system may send.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0i64, 1])]
    pub ints: Vec<i64>,
    /// Fresh locations per move.
    #[arg(long, default_value_t = 1)]
    pub fresh: usize,
    /// Largest tuple the system sends.
    #[arg(long, default_value_t = 2)]
    pub width: usize,
    /// Internal steps allowed per program turn.
    #[arg(long, default_value_t = 10_000)]
    pub fuel: usize,
}

impl BudgetArgs {
    pub fn budget(&self) -> MoveBudget {
        MoveBudget { ints: self.ints.clone(), fresh_locs: self.fresh, width: self.width, depth: self.depth, fuel: self.fuel }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and resolve a module and summarize it.
    Parse { file: PathBuf },
    /// Call one exported function and run to the first answer.
    Run {
        file: PathBuf,
        /// Function identifier or name (`prot` or `f0`).
        #[arg(long)]
        call: String,
        /// Argument as JSON: a number, a name, or an array.
        #[arg(long, default_value = "[]")]
        arg: String,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
    },
    /// Replay a move script against a module.
    Trace {
        file: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
    },
    /// Explore the labelled transition system of a module.
    Explore {
        file: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Bounded bisimilarity of two modules.
    Bisim {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Write the distinguishing run as JSON lines.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Compose two modules semantically.
    Compose {
        a: PathBuf,
        b: PathBuf,
        /// Check the composite against the linked module.
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Replay the secrecy attack on the bundled prot module.
    AttackDemo {
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
    },
    /// Serve the session API over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Invalid(String),
    NoInput(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 64,
            Failure::Invalid(_) => 65,
            Failure::NoInput(_) => 66,
            Failure::Internal(_) => 70,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invalid(m) | Failure::NoInput(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<LangError> for Failure {
    fn from(e: LangError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<(i32, String), Failure>;

/// Runs the command line `args` (program name first). Regular output goes
/// to `out`, diagnostics to `err`.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::{DisplayHelp, DisplayVersion};
            if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let _ = write!(err, "{e}");
            return 64;
        }
    };
    let result = match cli.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(Failure::Usage(e.to_string())),
        },
        None => run(&cli),
    };
    match result {
        Ok((code, text)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(f) => {
            let _ = writeln!(err, "sysgame: {}", f.message());
            f.code()
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::NoInput(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<ResolvedModule, Failure> {
    load_module(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Outcome {
    let style = cli.format;
    match &cli.command {
        Command::Parse { file } => parse_cmd(&load(file)?, style),
        Command::Run { file, call, arg, fuel } => run_cmd(&load(file)?, call, arg, *fuel, style),
        Command::Trace { file, script, fuel } => {
            let m = load(file)?;
            let script = parse_script(&read(script)?).map_err(|e| Failure::Invalid(format!("{}: {e}", script.display())))?;
            let trace = replay_checked(&m, &script, *fuel)?;
            Ok((0, TraceLog::from_trace(&trace).format(style)))
        }
        Command::Explore { file, budget } => explore_cmd(&load(file)?, &budget.budget(), style),
        Command::Bisim { a, b, budget, witness } => bisim_cmd(&load(a)?, &load(b)?, &budget.budget(), witness.as_deref(), style),
        Command::Compose { a, b, check, budget } => {
            let (m1, m2) = load_pair(&read(a)?, &read(b)?)?;
            compose_cmd(&m1, &m2, *check, &budget.budget(), style)
        }
        Command::AttackDemo { fuel } => attack_demo(*fuel, style),
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.to_string()))?;
            eprintln!("listening on http://{addr}");
            rt.block_on(crate::session::http::serve(*addr)).map_err(|e| Failure::NoInput(format!("{addr}: {e}")))?;
            Ok((0, String::new()))
        }
    }
}

fn replay_checked(m: &ResolvedModule, script: &[SystemMove], fuel: usize) -> Result<Trace, Failure> {
    replay(m, script, fuel).map_err(|e| Failure::Invalid(format!("{e} (after {} label(s))", e.prefix.labels.len())))
}

fn rendered(m: &ResolvedModule, n: Name) -> String {
    match m.symbol(n) {
        Some(s) => format!("{s}={n}"),
        None => n.to_string(),
    }
}

fn rendered_set(m: &ResolvedModule, s: &NameSet) -> String {
    s.iter().map(|n| rendered(m, *n)).collect::<Vec<_>>().join(", ")
}

fn parse_cmd(m: &ResolvedModule, style: TraceStyle) -> Outcome {
    if style == TraceStyle::Jsonl {
        return Ok((0, format!("{}\n", module_to_json(m))));
    }
    let mut o = String::new();
    let _ = writeln!(o, "exports   {}", rendered_set(m, &m.exports));
    let _ = writeln!(o, "imports   {}", rendered_set(m, &m.imports));
    let _ = writeln!(o, "declared  {}", rendered_set(m, &m.declared));
    let _ = writeln!(o, "private   {}", rendered_set(m, &m.private()));
    let _ = writeln!(o, "store     {{{}}}", m.init_store);
    for (f, d) in &m.defs {
        let _ = writeln!(o, "function  {} of arity {}", rendered(m, *f), d.params.len());
    }
    Ok((0, o))
}

fn run_cmd(m: &ResolvedModule, call: &str, arg: &str, fuel: usize, style: TraceStyle) -> Outcome {
    let f = call
        .parse::<Name>()
        .ok()
        .or_else(|| m.symbols.iter().find(|(_, s)| s.as_str() == call).map(|(n, _)| *n))
        .ok_or_else(|| Failure::Invalid(format!("no function {call:?} in the module")))?;
    let arg: serde_json::Value = serde_json::from_str(arg).map_err(|e| Failure::Usage(format!("--arg: {e}")))?;
    let arg = value_from_json(&arg).map_err(|e| Failure::Usage(format!("--arg: {e}")))?;
    let mv = SystemMove::Call { f, arg, k: Name::cont(0), store: StoreUpdate::new() };
    let trace = replay_checked(m, &[mv], fuel)?;
    Ok((0, TraceLog::from_trace(&trace).format(style)))
}

fn explore_cmd(m: &ResolvedModule, b: &MoveBudget, style: TraceStyle) -> Outcome {
    let start = Instant::now();
    let lts = explore(m, b);
    let elapsed = start.elapsed();
    let mut o = String::new();
    let labelled = lts.labelled_edges().count();
    match style {
        TraceStyle::Text => {
            let _ = writeln!(
                o,
                "{} states, {} labelled edges, depth {}{} ({:.2?})",
                lts.nodes.len(),
                labelled,
                b.depth,
                if lts.truncated { ", truncated" } else { "" },
                elapsed
            );
            for e in lts.labelled_edges() {
                let _ = writeln!(o, "{:>5} -> {:<5} {}", e.from, e.to, e.label.as_ref().expect("labelled"));
            }
        }
        TraceStyle::Jsonl => {
            let _ = writeln!(o, "{}", json!({ "states": lts.nodes.len(), "edges": labelled, "depth": b.depth, "truncated": lts.truncated }));
            for e in lts.labelled_edges() {
                let _ = writeln!(o, "{}", json!({ "from": e.from, "to": e.to, "label": label_to_json(e.label.as_ref().expect("labelled")) }));
            }
        }
    }
    Ok((0, o))
}

fn bisim_cmd(m1: &ResolvedModule, m2: &ResolvedModule, b: &MoveBudget, witness: Option<&Path>, style: TraceStyle) -> Outcome {
    let verdict = match bisimilar(m1, m2, b) {
        Ok(v) => v,
        Err(e @ BisimError::PublicInterfaceMismatch { .. }) => {
            let text = match style {
                TraceStyle::Text => format!("{e}\n"),
                TraceStyle::Jsonl => format!("{}\n", json!({ "verdict": "interface-mismatch", "message": e.to_string() })),
            };
            return Ok((2, text));
        }
        Err(BisimError::Lang(e)) => return Err(e.into()),
    };
    if let (Some(path), Verdict::Distinguished(w)) = (witness, &verdict) {
        let log = TraceLog { labels: w.labels(w.side).to_vec(), halt: None };
        std::fs::write(path, log.format(TraceStyle::Jsonl)).map_err(|e| Failure::NoInput(format!("{}: {e}", path.display())))?;
    }
    let code = if verdict.is_bisimilar() { 0 } else { 1 };
    let text = match style {
        TraceStyle::Text => with_newline(verdict.to_string()),
        TraceStyle::Jsonl => format!("{}\n", verdict_to_json(&verdict)),
    };
    Ok((code, text))
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn compose_cmd(m1: &ResolvedModule, m2: &ResolvedModule, check: bool, b: &MoveBudget, style: TraceStyle) -> Outcome {
    let comp = Composite::new(m1, m2, b.clone()).map_err(|e| match e {
        ComposeError::Lang(e) => Failure::from(e),
        e => Failure::Invalid(e.to_string()),
    })?;
    if !check {
        let lts = comp.explore();
        let labelled = lts.labelled_edges().count();
        let summary = json!({ "states": lts.nodes.len(), "edges": lts.edges.len(), "labelled": labelled, "truncated": lts.truncated });
        return Ok((0, match style {
            TraceStyle::Text => format!(
                "{} states, {} edges ({} labelled){}\n",
                lts.nodes.len(),
                lts.edges.len(),
                labelled,
                if lts.truncated { ", truncated" } else { "" }
            ),
            TraceStyle::Jsonl => format!("{summary}\n"),
        }));
    }
    let report = check_composition(&comp).map_err(|e| Failure::Internal(e.to_string()))?;
    let code = if report.holds() { 0 } else { 1 };
    Ok((code, match style {
        TraceStyle::Text => with_newline(report.to_string()),
        TraceStyle::Jsonl => format!("{}\n", composition_report_to_json(&report)),
    }))
}

const ATTACK_NOTES: [&str; 6] = [
    "the system calls prot with continuation k",
    "prot calls read with a fresh continuation k'",
    "the system returns from read with a fresh location",
    "prot returns the key location, now public",
    "the system reuses k' to return from read a second time, passing the key",
    "the key matches, so prot returns the secret",
];

/// Replays the bundled attack script on the bundled prot module.
pub fn attack_trace(fuel: usize) -> Result<Trace, Failure> {
    let m = load_module(fixtures::PROT)?;
    let script = parse_script(fixtures::ATTACK).map_err(|e| Failure::Internal(e.to_string()))?;
    replay_checked(&m, &script, fuel)
}

fn attack_demo(fuel: usize, style: TraceStyle) -> Outcome {
    let trace = attack_trace(fuel)?;
    if trace.labels.len() != ATTACK_NOTES.len() {
        return Err(Failure::Internal(format!("attack produced {} labels", trace.labels.len())));
    }
    let mut o = String::new();
    let mut known = NameSet::new();
    for (i, (l, st)) in trace.labels.iter().zip(&trace.states).enumerate() {
        let public = st.public();
        let new = public.difference(&known).locations();
        match style {
            TraceStyle::Text => {
                let _ = writeln!(o, "{}. {}", i + 1, ATTACK_NOTES[i]);
                let _ = writeln!(o, "   {} {}\n      {{{}}}", l.dir, l.action, l.store);
                if !new.is_empty() {
                    let _ = writeln!(o, "   disclosed: {new}");
                }
            }
            TraceStyle::Jsonl => {
                let line = json!({
                    "step": i + 1,
                    "note": ATTACK_NOTES[i],
                    "label": label_to_json(l),
                    "disclosed": new.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
                });
                let _ = writeln!(o, "{line}");
            }
        }
        known = public;
    }
    Ok((0, o))
}
