use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rlqdag::eval::{load_edges, Database, LabelColumn, Stats};
use rlqdag::frontend::{parse_query, parse_query_file, Query};
use rlqdag::transforms::RuleSet;
use rlqdag::ParseError;

mod check;
mod run;

/// Recursive query plan enumeration over RLQDAGs.
#[derive(Parser)]
#[command(name = "rlqdag", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate the plan space of a query.
    Expand(ExpandArgs),
    /// Compare both enumerators on the Q_ri family.
    Bench(BenchArgs),
    /// Verify well-formedness, consistency and completeness of an expansion.
    Check(CheckArgs),
    /// Write the bundled desk graph, its statistics and the bundled queries.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Rlqdag,
    Baseline,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Rlqdag => "rlqdag",
            Mode::Baseline => "baseline",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Count,
    Rate,
    Dag,
    Best,
    Csv,
}

/// Shared enumeration options.
#[derive(Args, Clone, Debug)]
pub struct EnumArgs {
    /// Time budget in milliseconds, or `unlimited`.
    #[arg(long = "budget-ms", default_value = "unlimited", value_parser = parse_budget)]
    pub budget: Budget,
    /// Drop unpushed originals on filter and antiprojection pushes.
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub rep: bool,
    /// Comma-separated rule names, or `all`.
    #[arg(long, default_value = "all", value_parser = parse_rules)]
    pub rules: RuleSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(pub Option<u64>);

impl Budget {
    pub fn duration(self) -> Option<Duration> {
        self.0.map(Duration::from_millis)
    }

    pub fn label(self) -> String {
        self.0.map_or_else(|| "unlimited".to_string(), |b| b.to_string())
    }
}

fn parse_budget(s: &str) -> Result<Budget, String> {
    if s == "unlimited" {
        return Ok(Budget(None));
    }
    s.parse().map(|b| Budget(Some(b))).map_err(|_| format!("expected milliseconds or `unlimited`, got {}", s))
}

fn parse_rules(s: &str) -> Result<RuleSet, String> {
    s.parse()
}

#[derive(Args)]
struct ExpandArgs {
    /// Query text, or @file with one query per line.
    #[arg(short, long)]
    query: String,
    /// Edge list (source, label, target per line).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Statistics JSON for cost estimates.
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rlqdag")]
    mode: Mode,
    #[command(flatten)]
    opts: EnumArgs,
    #[arg(long, value_enum, default_value = "count")]
    emit: Emit,
    /// Evaluate a plan on --data and print its tuples: the best plan with
    /// --emit best, the original plan otherwise.
    #[arg(long)]
    eval: bool,
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1)]
    from: usize,
    #[arg(long, default_value_t = 6)]
    to: usize,
    #[arg(long = "budget-ms", default_value = "2000", value_parser = parse_budget)]
    budget: Budget,
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    rep: bool,
    /// Repetitions per (i, mode).
    #[arg(long, default_value_t = 1)]
    runs: usize,
}

#[derive(Args)]
pub struct CheckArgs {
    #[arg(short, long)]
    query: String,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub rep: bool,
    #[arg(long, default_value = "all", value_parser = parse_rules)]
    pub rules: RuleSet,
    /// Plans sampled per class.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Random databases per query.
    #[arg(long, default_value_t = 5)]
    pub dbs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest plan space compared against the baseline.
    #[arg(long, default_value_t = 100_000)]
    pub diff_limit: usize,
    /// Debug hook: corrupt one stored annotation before checking.
    #[arg(long, hide = true)]
    pub inject_bad_annotation: bool,
    #[arg(short, long)]
    pub verbose: bool,
}

#[derive(Args)]
struct GenArgs {
    /// Workspace directory receiving data/ and queries/.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    nodes: usize,
    #[arg(long, default_value_t = 700)]
    per_label: usize,
}

/// Exit codes.
const EXIT_ERROR: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

/// Error carrying its exit code.
#[derive(Debug)]
struct Fail(u8, String);

impl std::fmt::Display for Fail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Fail {}

fn parse_fail(src: &str, e: ParseError) -> anyhow::Error {
    Fail(EXIT_PARSE, format!("parse error at byte {} in {:?}: {}", e.pos, src, e.msg)).into()
}

/// Reads `-q`: the query itself, or `@file` holding several.
pub fn read_queries(arg: &str) -> Result<Vec<Query>> {
    match arg.strip_prefix('@') {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path))?;
            let qs = parse_query_file(&text).map_err(|e| parse_fail(path, e))?;
            if qs.is_empty() {
                return Err(Fail(EXIT_PARSE, format!("{} holds no query", path)).into());
            }
            Ok(qs)
        }
        None => Ok(vec![parse_query(arg).map_err(|e| parse_fail(arg, e))?]),
    }
}

pub fn load_data(path: &Path) -> Result<Database> {
    let db = load_edges(path, LabelColumn::Middle).with_context(|| format!("loading {}", path.display()))?;
    for w in &db.warnings {
        eprintln!("warning: {}: {}", path.display(), w);
    }
    Ok(db)
}

fn load_stats(stats: Option<&Path>, db: Option<&Database>) -> Result<Option<Stats>> {
    if let Some(p) = stats {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        return Ok(Some(Stats::from_json(&text).with_context(|| format!("parsing {}", p.display()))?));
    }
    Ok(db.map(Database::stats))
}

fn expand_cmd(a: ExpandArgs) -> Result<u8> {
    let queries = read_queries(&a.query)?;
    let db = a.data.as_deref().map(load_data).transpose()?;
    let stats = load_stats(a.stats.as_deref(), db.as_ref())?;
    if a.eval && db.is_none() {
        bail!("--eval needs --data");
    }
    let mut out = String::new();
    if a.emit == Emit::Csv {
        out.push_str(run::CSV_HEADER);
        out.push('\n');
    }
    let mut incomplete = false;
    for q in &queries {
        let r = run::run(q, a.mode, &a.opts)?;
        if a.verbose {
            eprintln!("{}", r.summary(q));
        }
        incomplete |= !r.complete;
        let label = q.name.clone().unwrap_or_else(|| q.source.clone());
        let mut plan = None;
        match a.emit {
            Emit::Count => out.push_str(&format!("{}\n", r.plans)),
            Emit::Rate => out.push_str(&format!("{:.3}\n", r.plans_per_ms())),
            Emit::Csv => out.push_str(&format!("{}\n", r.csv_row(&label, a.mode, a.opts.budget))),
            Emit::Dag => out.push_str(&r.dag_json()),
            Emit::Best => {
                let (t, cost) = r.best(q, stats.as_ref()).context("no plan")?;
                out.push_str(&format!("{}\n", t));
                if a.verbose {
                    eprintln!("cost {:.3}", cost);
                }
                plan = Some(t);
            }
        }
        if a.eval {
            let db = db.as_ref().expect("checked above");
            let t = plan.unwrap_or_else(|| q.term.clone());
            let rel = rlqdag::eval::evaluate(&t, db).context("evaluating plan")?;
            out.push_str(&rel.to_tsv(&db.values));
        }
    }
    print!("{}", out);
    Ok(if incomplete { EXIT_BUDGET } else { 0 })
}

fn bench_cmd(a: BenchArgs) -> Result<u8> {
    if a.from == 0 || a.from > a.to {
        bail!("need 1 <= --from <= --to");
    }
    println!("i,{}", run::CSV_HEADER);
    let opts = EnumArgs { budget: a.budget, rep: a.rep, rules: RuleSet::all() };
    for i in a.from..=a.to {
        let q = rlqdag::bundled::qr(i);
        for mode in [Mode::Rlqdag, Mode::Baseline] {
            for _ in 0..a.runs.max(1) {
                let r = run::run(&q, mode, &opts)?;
                println!("{},{}", i, r.csv_row(&format!("r{}", i), mode, a.budget));
            }
        }
    }
    Ok(0)
}

fn gen_cmd(a: GenArgs) -> Result<u8> {
    let db = rlqdag::bundled::desk_graph(a.seed, a.nodes, a.per_label);
    let data = a.out.join("data");
    let queries = a.out.join("queries");
    std::fs::create_dir_all(&data)?;
    std::fs::create_dir_all(&queries)?;
    std::fs::write(data.join("desk.tsv"), rlqdag::eval::edges_to_tsv(&db))?;
    std::fs::write(data.join("desk.stats.json"), db.stats().to_json() + "\n")?;
    std::fs::write(queries.join("bundled.txt"), rlqdag::bundled::bundled_file())?;
    eprintln!("wrote {} edges to {}", db.edge_count(), data.join("desk.tsv").display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Expand(a) => expand_cmd(a),
        Cmd::Bench(a) => bench_cmd(a),
        Cmd::Check(a) => {
            let (q, data) = (a.query.clone(), a.data.clone());
            read_queries(&q).and_then(|qs| {
                let db = data.as_deref().map(load_data).transpose()?;
                check::check_cmd(&qs, db, &a)
            })
        }
        Cmd::Gen(a) => gen_cmd(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = e.downcast_ref::<Fail>().map_or(EXIT_ERROR, |f| f.0);
            eprintln!("error: {:#}", e);
            ExitCode::from(code)
        }
    }
}
