use std::io::{self, BufRead, BufWriter, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qgc::compose::{crt_compose, general_counter, ComponentCounter};
use qgc::field::FieldSpec;
use qgc::graycode::GrayCode;
use qgc::linear::{linear_counter, ElementaryMatrix, LinearCounter};
use qgc::permdecomp::{odd_counter, OddCounter, RFunction, Table};
use qgc::verify::{audit_with_limit, count_hierarchical, search_hierarchical, AuditReport};
use qgc::{Counter, CounterExt, DecisionAssignmentTree, Direction};

/// Default cap on walked steps; `QGC_MAX_STEPS` overrides it.
const DEFAULT_MAX_STEPS: u128 = 1 << 27;

#[derive(Parser)]
#[command(name = "qgc", version, about = "Build, step, decompose and verify quasi-Gray code counters")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the orbit one word per line.
    Gen(GenArgs),
    /// Read words from stdin and print their successors or predecessors.
    Step(StepArgs),
    /// Walk the orbit and report measured lengths and costs.
    Stats(AuditArgs),
    /// Like stats, but exit 1 when a claim does not hold.
    Verify(AuditArgs),
    /// Print the step list a counter is built from.
    Decompose(DecomposeArgs),
    /// Search hierarchical trees on three variables for a full cycle.
    SearchHierarchical(SearchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Base,
    Linear,
    Odd,
    Crt,
    General,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dir {
    Next,
    Prev,
}

impl From<Dir> for Direction {
    fn from(d: Dir) -> Self {
        match d {
            Dir::Next => Direction::Next,
            Dir::Prev => Direction::Prev,
        }
    }
}

#[derive(Args, Clone)]
struct CounterArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Radix (base, odd, general).
    #[arg(long)]
    m: Option<u32>,
    /// Word width; for linear, the data width.
    #[arg(long)]
    n: Option<usize>,
    /// Field size for linear counters (default 2).
    #[arg(long)]
    q: Option<u64>,
    /// Pointer width for linear counters (default: smallest that fits).
    #[arg(long)]
    r: Option<usize>,
    /// CRT components, e.g. base:4:1,base:3:1,linear:2:3:2
    #[arg(long, value_delimiter = ',')]
    components: Vec<String>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    counter: CounterArgs,
    /// First word (default: the counter's start word).
    #[arg(long)]
    start: Option<String>,
    /// Number of words to print (default: the full orbit).
    #[arg(long)]
    limit: Option<u128>,
    #[arg(long, value_enum, default_value = "next")]
    dir: Dir,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Lift the step cap.
    #[arg(long)]
    unbounded: bool,
}

#[derive(Args)]
struct StepArgs {
    #[command(flatten)]
    counter: CounterArgs,
    #[arg(long, value_enum, default_value = "next")]
    dir: Dir,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    counter: CounterArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    unbounded: bool,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    counter: CounterArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Json,
    Text,
    Count,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    radices: Vec<u32>,
    #[arg(long, value_enum, default_value = "json")]
    emit: Emit,
}

/// Failure with its exit code: 1 verification, 2 usage, 3 resource bound.
struct Fail {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail { code: 2, msg: msg.into() }
}

fn resource(msg: impl Into<String>) -> Fail {
    Fail { code: 3, msg: msg.into() }
}

impl From<qgc::Error> for Fail {
    fn from(e: qgc::Error) -> Self {
        Fail { code: if e.is_resource() { 3 } else { 2 }, msg: e.to_string() }
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Self {
        Fail { code: 2, msg: format!("i/o error: {e}") }
    }
}

type Res<T> = Result<T, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = io::stdout();
    let mut out = BufWriter::new(out.lock());
    let res = match cli.cmd {
        Cmd::Gen(a) => gen(&a, &mut out),
        Cmd::Step(a) => step(&a, &mut out),
        Cmd::Stats(a) => stats(&a, false, &mut out),
        Cmd::Verify(a) => stats(&a, true, &mut out),
        Cmd::Decompose(a) => decompose(&a, &mut out),
        Cmd::SearchHierarchical(a) => search(&a, &mut out),
    };
    let res = res.and_then(|()| out.flush().map_err(Fail::from));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) if f.msg.contains("Broken pipe") => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qgc: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn max_steps() -> Res<u128> {
    match std::env::var("QGC_MAX_STEPS") {
        Ok(v) => v.trim().parse().map_err(|_| usage(format!("QGC_MAX_STEPS={v} is not a number"))),
        Err(_) => Ok(DEFAULT_MAX_STEPS),
    }
}

fn reject(kind: &str, flags: &[(&str, bool)]) -> Res<()> {
    match flags.iter().find(|(_, set)| *set) {
        Some((flag, _)) => Err(usage(format!("--{flag} does not apply to --kind {kind}"))),
        None => Ok(()),
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> Res<T> {
    v.ok_or_else(|| usage(format!("--kind {kind} needs --{flag}")))
}

fn build(a: &CounterArgs) -> Res<Box<dyn Counter>> {
    let comps = !a.components.is_empty();
    match a.kind {
        Kind::Base => {
            reject("base", &[("q", a.q.is_some()), ("r", a.r.is_some()), ("components", comps)])?;
            Ok(Box::new(GrayCode::new(need(a.m, "m", "base")?, need(a.n, "n", "base")?)?))
        }
        Kind::Linear => {
            reject("linear", &[("m", a.m.is_some()), ("components", comps)])?;
            Ok(Box::new(build_linear(a.q.unwrap_or(2), need(a.n, "n", "linear")?, a.r)?))
        }
        Kind::Odd => {
            reject("odd", &[("q", a.q.is_some()), ("r", a.r.is_some()), ("components", comps)])?;
            Ok(Box::new(odd_counter(need(a.m, "m", "odd")?, need(a.n, "n", "odd")?)?))
        }
        Kind::General => {
            reject("general", &[("q", a.q.is_some()), ("r", a.r.is_some()), ("components", comps)])?;
            Ok(general_counter(need(a.m, "m", "general")?, need(a.n, "n", "general")?)?)
        }
        Kind::Crt => {
            reject(
                "crt",
                &[("m", a.m.is_some()), ("n", a.n.is_some()), ("q", a.q.is_some()), ("r", a.r.is_some())],
            )?;
            if a.components.len() < 2 {
                return Err(usage("--kind crt needs at least two --components"));
            }
            let parts = a.components.iter().map(|s| parse_component(s)).collect::<Res<Vec<_>>>()?;
            Ok(Box::new(crt_compose(parts.into_iter().map(ComponentCounter::new).collect())?))
        }
    }
}

fn build_linear(q: u64, n: usize, r: Option<usize>) -> Res<LinearCounter> {
    Ok(linear_counter(FieldSpec::new(q)?, n, r)?)
}

/// `base:M:R`, `linear:Q:N[:R]`, `odd:M:N` or `general:M:N`.
fn parse_component(text: &str) -> Res<Box<dyn Counter>> {
    let bad = || usage(format!("bad component '{text}'; expected base:M:R, linear:Q:N[:R], odd:M:N or general:M:N"));
    let mut parts = text.split(':');
    let kind = parts.next().ok_or_else(bad)?;
    let nums = parts.map(|p| p.parse::<u64>().map_err(|_| bad())).collect::<Res<Vec<_>>>()?;
    let small = |x: u64| u32::try_from(x).map_err(|_| bad());
    match (kind, nums.as_slice()) {
        ("base", &[m, r]) => Ok(Box::new(GrayCode::new(small(m)?, r as usize)?)),
        ("linear", &[q, n]) => Ok(Box::new(build_linear(q, n as usize, None)?)),
        ("linear", &[q, n, r]) => Ok(Box::new(build_linear(q, n as usize, Some(r as usize))?)),
        ("odd", &[m, n]) => Ok(Box::new(odd_counter(small(m)?, n as usize)?)),
        ("general", &[m, n]) => Ok(general_counter(small(m)?, n as usize)?),
        _ => Err(bad()),
    }
}

fn word_json(w: &qgc::Word) -> Value {
    json!(w.digits())
}

fn gen(a: &GenArgs, out: &mut impl Write) -> Res<()> {
    let c = build(&a.counter)?;
    let d = c.domain();
    let cap = max_steps()?;
    let limit = a.limit.unwrap_or(c.claimed_length());
    if limit > cap && !a.unbounded {
        return Err(resource(format!("{limit} words exceed the cap of {cap}; pass --unbounded or set QGC_MAX_STEPS")));
    }
    let mut w = match &a.start {
        Some(s) => d.parse_word(s)?,
        None => c.start(),
    };
    let mut cells = w.digits().to_vec();
    for i in 0..limit {
        if i > 0 {
            c.step(&mut cells, a.dir.into());
            w = qgc::Word(cells.clone());
        }
        match a.format {
            Format::Text => writeln!(out, "{}", d.format_word(&w))?,
            Format::Json => writeln!(out, "{}", word_json(&w))?,
        }
    }
    Ok(())
}

fn step(a: &StepArgs, out: &mut impl Write) -> Res<()> {
    let c = build(&a.counter)?;
    let d = c.domain();
    for line in io::stdin().lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let w = d.parse_word(&line)?;
        let (next, st) = c.step_word(&w, a.dir.into());
        match a.format {
            Format::Text => writeln!(out, "{}", d.format_word(&next))?,
            Format::Json => writeln!(
                out,
                "{}",
                json!({"word": word_json(&w), "result": word_json(&next), "reads": st.reads, "writes": st.writes})
            )?,
        }
    }
    Ok(())
}

fn stats(a: &AuditArgs, judge: bool, out: &mut impl Write) -> Res<()> {
    let c = build(&a.counter)?;
    let cap = max_steps()?;
    let len = c.claimed_length();
    if len >= cap && !a.unbounded {
        return Err(resource(format!("orbit of {len} exceeds the cap of {cap}; pass --unbounded or set QGC_MAX_STEPS")));
    }
    let rep = audit_with_limit(c.as_ref(), len.saturating_add(1));
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rep).expect("report serializes"))?,
        Format::Text => write_report(&rep, out)?,
    }
    if judge && !rep.passed {
        return Err(Fail { code: 1, msg: format!("verification failed: {}", rep.failures.join("; ")) });
    }
    Ok(())
}

fn write_report(rep: &AuditReport, out: &mut impl Write) -> io::Result<()> {
    let opt = |v: Option<usize>| v.map_or("-".to_string(), |x| x.to_string());
    writeln!(out, "observed_length {}", rep.observed_length.map_or("-".to_string(), |x| x.to_string()))?;
    writeln!(out, "claimed_length {}", rep.claimed_length)?;
    writeln!(out, "max_reads {} (claimed {})", rep.max_reads, opt(rep.claimed_reads))?;
    writeln!(out, "max_writes {} (claimed {})", rep.max_writes, opt(rep.claimed_writes))?;
    writeln!(out, "max_changed {}", rep.max_changed)?;
    writeln!(out, "distinct {}", rep.distinct)?;
    writeln!(out, "space_optimal {}", rep.space_optimal)?;
    writeln!(out, "missing_count {}", rep.missing_count.map_or("-".to_string(), |x| x.to_string()))?;
    if !rep.missing_sample.is_empty() {
        writeln!(out, "missing_sample {}", rep.missing_sample.join(" "))?;
    }
    writeln!(out, "roundtrip {} checked, {} failed", rep.roundtrip_checked, rep.roundtrip_failures)?;
    writeln!(out, "passed {}", rep.passed)?;
    for f in &rep.failures {
        writeln!(out, "failure {f}")?;
    }
    Ok(())
}

fn op_json(op: &ElementaryMatrix) -> Value {
    match *op {
        ElementaryMatrix::Scale { i, c } => json!({"op": "scale", "i": i + 1, "c": c}),
        ElementaryMatrix::AddRow { i, j, c } => json!({"op": "addrow", "i": i + 1, "j": j + 1, "c": c}),
    }
}

fn table_rows(f: &RFunction) -> Vec<Vec<u32>> {
    let vals = f.dense_values();
    let m = f.m() as usize;
    if f.arity() == 0 {
        vec![vals]
    } else {
        vals.chunks(m).map(<[u32]>::to_vec).collect()
    }
}

fn rfunction_text(f: &RFunction) -> String {
    let srcs: Vec<String> = f.sources().iter().map(|s| (s + 1).to_string()).collect();
    let rows: Vec<String> =
        table_rows(f).iter().map(|r| r.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")).collect();
    format!("add {} <- f({}) [{}]", f.target() + 1, srcs.join(","), rows.join("; "))
}

fn rfunction_json(f: &RFunction) -> Value {
    let kind = match f.table() {
        Table::Dense(_) => "dense",
        Table::Indicator { .. } => "indicator",
    };
    json!({
        "target": f.target() + 1,
        "sources": f.sources().iter().map(|s| s + 1).collect::<Vec<_>>(),
        "table": table_rows(f),
        "kind": kind,
    })
}

fn decompose(a: &DecomposeArgs, out: &mut impl Write) -> Res<()> {
    let ca = &a.counter;
    match ca.kind {
        Kind::Linear => {
            reject("linear", &[("m", ca.m.is_some()), ("components", !ca.components.is_empty())])?;
            let c = build_linear(ca.q.unwrap_or(2), need(ca.n, "n", "linear")?, ca.r)?;
            match a.format {
                Format::Text => {
                    for op in c.ops() {
                        writeln!(out, "{op}")?;
                    }
                }
                Format::Json => writeln!(
                    out,
                    "{}",
                    json!({
                        "poly": c.poly().to_string(),
                        "pointer_width": c.pointer_width(),
                        "ops": c.ops().iter().map(op_json).collect::<Vec<_>>(),
                    })
                )?,
            }
        }
        Kind::Odd => {
            reject("odd", &[("q", ca.q.is_some()), ("r", ca.r.is_some()), ("components", !ca.components.is_empty())])?;
            let c: OddCounter = odd_counter(need(ca.m, "m", "odd")?, need(ca.n, "n", "odd")?)?;
            match a.format {
                Format::Text => {
                    for f in c.steps() {
                        writeln!(out, "{}", rfunction_text(f))?;
                    }
                }
                Format::Json => writeln!(
                    out,
                    "{}",
                    json!({
                        "inner_width": c.inner_width(),
                        "pointer_width": c.pointer_width(),
                        "counts": c.counts(),
                        "steps": c.steps().iter().map(rfunction_json).collect::<Vec<_>>(),
                    })
                )?,
            }
        }
        Kind::Base => return Err(usage("base counters have no step list")),
        Kind::Crt | Kind::General => {
            let c = build(ca)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&c.recipe()).expect("recipe serializes"))?;
        }
    }
    Ok(())
}

fn tree_text(t: &DecisionAssignmentTree, depth: usize, out: &mut impl Write) -> io::Result<()> {
    let pad = "  ".repeat(depth);
    match t {
        DecisionAssignmentTree::Query { coord, children } => {
            writeln!(out, "{pad}query {}", coord + 1)?;
            for (v, ch) in children.iter().enumerate() {
                writeln!(out, "{pad}  = {v}:")?;
                tree_text(ch, depth + 2, out)?;
            }
            Ok(())
        }
        DecisionAssignmentTree::Leaf { assignments } => {
            let a: Vec<String> = assignments.iter().map(|(c, v)| format!("{}:={v}", c + 1)).collect();
            writeln!(out, "{pad}assign {}", a.join(" "))
        }
    }
}

fn search(a: &SearchArgs, out: &mut impl Write) -> Res<()> {
    match a.emit {
        Emit::Count => writeln!(out, "{}", count_hierarchical(&a.radices)?)?,
        Emit::Json => {
            let t = search_hierarchical(&a.radices)?;
            writeln!(out, "{}", t.map_or(Value::Null, |t| t.to_json()))?;
        }
        Emit::Text => match search_hierarchical(&a.radices)? {
            Some(t) => tree_text(&t, 0, out)?,
            None => writeln!(out, "none")?,
        },
    }
    Ok(())
}
