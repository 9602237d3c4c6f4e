use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use setrw::automaton::export_dot;
use setrw::engine::{rewrite_outermost, EngineOptions};
use setrw::fuzz::{selftest, FuzzConfig};
use setrw::rewriter::{
    normalize, normalize_nonlinear, oracle_normalize_until, BuiltinStrategy, Counters, RewriteError, RewriteOptions,
    RewriteOrder,
};
use setrw::syntax::to_string;
use setrw::{construct, parse_term, parse_trs, ConstructionOptions, DependencyKind, SetAutomaton, TermId, TermPool, Trs};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Violation(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Violation(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<RewriteError> for CliError {
    fn from(e: RewriteError) -> Self {
        match e {
            RewriteError::Invariant(_) => CliError::Internal(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

enum RunFailure {
    Construct(String),
    Rewrite(RewriteError),
}

impl From<RunFailure> for CliError {
    fn from(f: RunFailure) -> Self {
        match f {
            RunFailure::Construct(e) => CliError::Domain(e),
            RunFailure::Rewrite(e) => e.into(),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "setrw", version, about = "Term rewriting with set automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Engine {
    /// Depth-first stack engine
    Stack,
    /// Configuration-tree rewriter with non-linear support
    Reference,
    /// Configuration-tree rewriter for left-linear systems
    ReferenceLinear,
    /// Brute-force rewriting
    Oracle,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Relation {
    Standard,
    Outermost,
}

impl From<Relation> for DependencyKind {
    fn from(r: Relation) -> Self {
        match r {
            Relation::Standard => DependencyKind::Standard,
            Relation::Outermost => DependencyKind::OutermostPreserving,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    ReduceOnDiscovery,
    ExploreAll,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrderArg {
    Outermost,
    Innermost,
}

#[derive(clap::Args, Clone, Debug)]
struct EngineArgs {
    #[arg(long, value_enum, default_value = "stack")]
    engine: Engine,
    /// Dependency relation used to build the automaton
    #[arg(long, value_enum, default_value = "standard")]
    relation: Relation,
    /// Action selection for the reference engines
    #[arg(long, value_enum, default_value = "reduce-on-discovery")]
    strategy: StrategyArg,
    /// Redex order for the oracle
    #[arg(long, value_enum, default_value = "outermost")]
    order: OrderArg,
    #[arg(long, default_value_t = 1_000_000_000)]
    max_steps: u64,
    /// Run the engine's internal consistency checks (slow)
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite a term to normal form
    Rewrite {
        trs: PathBuf,
        /// Term text, or @FILE to read it from a file
        term: String,
        #[command(flatten)]
        engine: EngineArgs,
        /// Time limit in seconds
        #[arg(long)]
        timeout: Option<f64>,
        /// Print the engine's actions to standard error
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        json: bool,
    },
    /// Print the automaton of a rewrite system as a DOT graph
    Dot {
        trs: PathBuf,
        #[arg(long, value_enum, default_value = "standard")]
        relation: Relation,
        /// Print size statistics instead of the graph
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run every NAME.trs / NAME.term pair in a directory, checking
    /// NAME.expected when present
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        /// Time limit per benchmark in seconds
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long)]
        json: bool,
    },
    /// Compare all engines against brute force on random systems
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        /// Disable pruning in the reference engines (the run should fail)
        #[arg(long, hide = true)]
        skip_prune: bool,
    },
}

#[derive(Serialize)]
struct RunReport {
    term: String,
    normal_form: String,
    rewrite_steps: u64,
    symbol_inspections: u64,
    consistency_checks: u64,
    construct_ms: f64,
    rewrite_ms: f64,
}

#[derive(Serialize)]
struct BenchRow {
    name: String,
    engine: String,
    status: String,
    rewrite_steps: Option<u64>,
    symbol_inspections: Option<u64>,
    construct_ms: f64,
    rewrite_ms: f64,
}

#[derive(Serialize)]
struct DotStats {
    states: usize,
    symbols: usize,
    rules: usize,
    transition_cells: usize,
    branches: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

fn load_trs(path: &Path) -> Result<(TermPool, Trs)> {
    parse_trs(&read(path)?).map_err(|e| CliError::Domain(format!("{}:{e}", path.display())))
}

fn load_term(pool: &mut TermPool, arg: &str) -> Result<TermId> {
    let (text, origin) = match arg.strip_prefix('@') {
        Some(path) => (read(Path::new(path))?, path.to_string()),
        None => (arg.to_string(), "term".to_string()),
    };
    let t = parse_term(pool, text.trim()).map_err(|e| CliError::Domain(format!("{origin}:{e}")))?;
    if !pool.is_ground(t) {
        return Err(CliError::Domain(format!("{origin}: the term to rewrite must be ground")));
    }
    Ok(t)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn build(pool: &TermPool, trs: &Trs, relation: Relation) -> Result<SetAutomaton> {
    construct(pool, trs, &ConstructionOptions::with_relation(relation.into())).map_err(|e| CliError::Domain(e.to_string()))
}

/// One normalization with the selected engine; returns the normal form,
/// counters and the construction and rewrite times.
fn run_engine(
    pool: &mut TermPool,
    trs: &Trs,
    t: TermId,
    args: &EngineArgs,
    deadline: Option<Duration>,
    trace: bool,
) -> std::result::Result<(TermId, Counters, Duration, Duration), (RunFailure, Duration, Duration)> {
    let start = Instant::now();
    let automaton = match args.engine {
        Engine::Oracle => None,
        _ => Some(
            construct(pool, trs, &ConstructionOptions::with_relation(args.relation.into()))
                .map_err(|e| (RunFailure::Construct(e.to_string()), start.elapsed(), Duration::ZERO))?,
        ),
    };
    let construct_time = start.elapsed();
    let start = Instant::now();
    let deadline = deadline.map(|d| start + d);
    let mut strategy = match args.strategy {
        StrategyArg::ReduceOnDiscovery => BuiltinStrategy::ReduceOnDiscovery,
        StrategyArg::ExploreAll => BuiltinStrategy::ExploreAllThenReduce,
    };
    let ropts = RewriteOptions {
        max_steps: args.max_steps,
        deadline,
        check_invariants: args.check,
        trace,
        ..Default::default()
    };
    let result = match (args.engine, &automaton) {
        (Engine::Stack, Some(a)) => {
            let opts = EngineOptions {
                max_steps: args.max_steps,
                deadline,
                check_invariants: args.check,
                trace,
            };
            rewrite_outermost(a, trs, pool, t, &opts).map(|o| {
                for i in &o.inspections {
                    eprintln!("inspect\t{}\t{}\tafter {} steps", i.position, pool.signature().fn_name(i.symbol), i.steps_before);
                }
                (o.term, o.counters)
            })
        }
        (Engine::Reference | Engine::ReferenceLinear, Some(a)) => {
            let out = if matches!(args.engine, Engine::Reference) {
                normalize_nonlinear(a, trs, pool, t, &mut strategy, ropts)
            } else {
                normalize(a, trs, pool, t, &mut strategy, ropts)
            };
            out.map(|o| {
                for step in &o.trace {
                    let rule = step.rule.map(|r| r.to_string()).unwrap_or_default();
                    let state = step.state.map(|s| s.to_string()).unwrap_or_default();
                    eprintln!("{:?}\t{}\t{rule}\t{state}", step.kind, step.position);
                }
                (o.term, o.counters)
            })
        }
        _ => {
            let order = match args.order {
                OrderArg::Outermost => RewriteOrder::LeftmostOutermost,
                OrderArg::Innermost => RewriteOrder::LeftmostInnermost,
            };
            oracle_normalize_until(pool, trs, t, order, args.max_steps, deadline).map(|o| {
                let counters = Counters {
                    rewrite_steps: o.steps,
                    ..Default::default()
                };
                (o.term, counters)
            })
        }
    };
    let rewrite_time = start.elapsed();
    match result {
        Ok((nf, c)) => Ok((nf, c, construct_time, rewrite_time)),
        Err(e) => Err((RunFailure::Rewrite(e), construct_time, rewrite_time)),
    }
}

fn print_row<T: Serialize>(json: bool, header: &[&str], row: &T, out: &mut impl Write) -> Result<()> {
    let value = serde_json::to_value(row).map_err(|e| CliError::Internal(e.to_string()))?;
    let line = if json {
        value.to_string()
    } else {
        header
            .iter()
            .map(|k| match &value[*k] {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Null => "-".into(),
                serde_json::Value::Number(n) if n.is_f64() => format!("{:.3}", n.as_f64().unwrap_or(0.0)),
                v => v.to_string(),
            })
            .collect::<Vec<_>>()
            .join("\t")
    };
    writeln!(out, "{line}").map_err(|e| CliError::Domain(e.to_string()))
}

fn header(json: bool, fields: &[&str], out: &mut impl Write) -> Result<()> {
    if !json {
        writeln!(out, "{}", fields.join("\t")).map_err(|e| CliError::Domain(e.to_string()))?;
    }
    Ok(())
}

const REPORT_FIELDS: [&str; 7] = [
    "term",
    "normal_form",
    "rewrite_steps",
    "symbol_inspections",
    "consistency_checks",
    "construct_ms",
    "rewrite_ms",
];

const BENCH_FIELDS: [&str; 7] = [
    "name",
    "engine",
    "status",
    "rewrite_steps",
    "symbol_inspections",
    "construct_ms",
    "rewrite_ms",
];

fn cmd_rewrite(trs_path: &Path, term: &str, args: &EngineArgs, timeout: Option<f64>, trace: bool, json: bool) -> Result<()> {
    let (mut pool, trs) = load_trs(trs_path)?;
    let t = load_term(&mut pool, term)?;
    let (nf, c, construct_time, rewrite_time) =
        run_engine(&mut pool, &trs, t, args, timeout.map(Duration::from_secs_f64), trace).map_err(|(e, _, _)| CliError::from(e))?;
    let report = RunReport {
        term: to_string(&pool, t),
        normal_form: to_string(&pool, nf),
        rewrite_steps: c.rewrite_steps,
        symbol_inspections: c.symbol_inspections,
        consistency_checks: c.consistency_checks,
        construct_ms: ms(construct_time),
        rewrite_ms: ms(rewrite_time),
    };
    let mut out = std::io::stdout().lock();
    header(json, &REPORT_FIELDS, &mut out)?;
    print_row(json, &REPORT_FIELDS, &report, &mut out)
}

fn cmd_dot(trs_path: &Path, relation: Relation, stats: bool, json: bool) -> Result<()> {
    let (pool, trs) = load_trs(trs_path)?;
    let a = build(&pool, &trs, relation)?;
    let mut out = std::io::stdout().lock();
    if !stats {
        return write!(out, "{}", export_dot(&pool, &a)).map_err(|e| CliError::Domain(e.to_string()));
    }
    let st = a.stats();
    let row = DotStats {
        states: st.states,
        symbols: st.symbols,
        rules: st.rules,
        transition_cells: st.transition_cells,
        branches: st.branch_count,
    };
    if st.transition_cells != st.symbols * st.states {
        return Err(CliError::Internal(format!("{} transition cells for {} symbols and {} states", st.transition_cells, st.symbols, st.states)));
    }
    let fields = ["states", "symbols", "rules", "transition_cells", "branches"];
    header(json, &fields, &mut out)?;
    print_row(json, &fields, &row, &mut out)
}

fn cmd_bench(dir: &Path, args: &EngineArgs, timeout: f64, json: bool) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Domain(format!("{}: {e}", dir.display())))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "trs"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    names.sort();
    let engine = args
        .engine
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let mut out = std::io::stdout().lock();
    header(json, &BENCH_FIELDS, &mut out)?;
    let (mut dnf, mut wrong) = (0, 0);
    for name in names {
        let (mut pool, trs) = load_trs(&dir.join(format!("{name}.trs")))?;
        let t = load_term(&mut pool, &format!("@{}", dir.join(format!("{name}.term")).display()))?;
        let expected_path = dir.join(format!("{name}.expected"));
        let expected = if expected_path.exists() {
            let text = read(&expected_path)?;
            Some(parse_term(&mut pool, text.trim()).map_err(|e| CliError::Domain(format!("{}:{e}", expected_path.display())))?)
        } else {
            None
        };
        let mut row = BenchRow {
            name: name.clone(),
            engine: engine.clone(),
            status: String::new(),
            rewrite_steps: None,
            symbol_inspections: None,
            construct_ms: 0.0,
            rewrite_ms: 0.0,
        };
        match run_engine(&mut pool, &trs, t, args, Some(Duration::from_secs_f64(timeout)), false) {
            Ok((nf, c, ct, rt)) => {
                row.rewrite_steps = Some(c.rewrite_steps);
                row.symbol_inspections = Some(c.symbol_inspections);
                row.construct_ms = ms(ct);
                row.rewrite_ms = ms(rt);
                row.status = match expected {
                    Some(e) if e != nf => {
                        wrong += 1;
                        "wrong".into()
                    }
                    Some(_) => "solved".into(),
                    None => "unchecked".into(),
                };
            }
            Err((e, ct, rt)) => {
                row.construct_ms = ms(ct);
                row.rewrite_ms = ms(rt);
                dnf += 1;
                row.status = match e {
                    RunFailure::Rewrite(RewriteError::Deadline(_)) => "DNF".into(),
                    RunFailure::Rewrite(RewriteError::Invariant(m)) => {
                        return Err(CliError::Internal(format!("{name}: {m}")));
                    }
                    RunFailure::Rewrite(e) => format!("DNF ({e})"),
                    RunFailure::Construct(e) => format!("DNF ({e})"),
                };
            }
        }
        print_row(json, &BENCH_FIELDS, &row, &mut out)?;
    }
    let failures = dnf + wrong;
    if json {
        writeln!(out, "{}", serde_json::json!({ "total_failures": failures })).map_err(|e| CliError::Domain(e.to_string()))?;
    } else {
        writeln!(out, "Total failures: {failures}").map_err(|e| CliError::Domain(e.to_string()))?;
    }
    if wrong > 0 {
        return Err(CliError::Violation(format!("{wrong} benchmark(s) produced a wrong normal form")));
    }
    if dnf > 0 {
        return Err(CliError::Domain(format!("{dnf} benchmark(s) did not finish")));
    }
    Ok(())
}

fn cmd_selftest(seed: u64, iterations: usize, skip_prune: bool) -> Result<()> {
    let cfg = FuzzConfig {
        skip_prune,
        ..Default::default()
    };
    let report = selftest(seed, iterations, &cfg);
    let mut out = std::io::stdout().lock();
    let w = |e: std::io::Error| CliError::Domain(e.to_string());
    for (case_seed, case, messages) in &report.failures {
        writeln!(out, "FAIL seed {case_seed}").map_err(w)?;
        for m in messages {
            writeln!(out, "  {m}").map_err(w)?;
        }
        for line in case.to_string().lines() {
            writeln!(out, "  | {line}").map_err(w)?;
        }
    }
    writeln!(
        out,
        "selftest: {} cases ({} confluent, {} over budget), {} failures",
        report.cases,
        report.confluent_cases,
        report.budget_exhausted,
        report.failures.len()
    )
    .map_err(w)?;
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violation(format!("{} case(s) violated a property", report.failures.len())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rewrite {
            trs,
            term,
            engine,
            timeout,
            trace,
            json,
        } => cmd_rewrite(trs, term, engine, *timeout, *trace, *json),
        Command::Dot { trs, relation, stats, json } => cmd_dot(trs, *relation, *stats, *json),
        Command::Bench { dir, engine, timeout, json } => cmd_bench(dir, engine, *timeout, *json),
        Command::Selftest {
            seed,
            iterations,
            skip_prune,
        } => cmd_selftest(*seed, *iterations, *skip_prune),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
