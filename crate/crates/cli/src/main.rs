use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use msetlex::analysis::{ClosureConfig, Mode, Population};
use msetlex::{
    closure, closure_experiment, enumerate, interval_size, is_exact, proposition_report, rank, Envelope, Error,
    Family, GolferParams, Instance, Limits, Multiset, OrderingId, Representation, SearchStats, Status,
    SteinerParams, Universe,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "msetlex", version, about = "Multiset variables under lex-induced orderings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every value of the universe in ordering order.
    Order {
        #[arg(long)]
        universe: String,
        /// An ordering name or `all`.
        #[arg(long, default_value = "all")]
        repr: String,
    },
    /// Closure of a set of multisets under each ordering.
    Closure {
        #[arg(long)]
        universe: String,
        #[arg(long, default_value = "all")]
        repr: String,
        /// Multisets separated by `;`, e.g. "1;2,2;2,3".
        #[arg(long)]
        set: String,
        /// Also list every member of each closure.
        #[arg(long)]
        members: bool,
    },
    /// Random-domain closure-size experiment.
    Compare(CompareArgs),
    /// Check the expressiveness and compactness relations.
    Props(PropsArgs),
    /// Run a benchmark instance.
    Solve(SolveArgs),
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value = "5x10")]
    universe: String,
    /// Cardinality range `a..b` (or a single value).
    #[arg(long)]
    card: Option<String>,
    /// Variety range `c..d` (or a single value).
    #[arg(long)]
    variety: Option<String>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Inclusion probability of each satisfying value.
    #[arg(long, default_value_t = 0.5)]
    inclusion: f64,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    out: OutFormat,
    /// Write to a file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct PropsArgs {
    #[arg(long, default_value = "1,2,2,3,3")]
    universe: String,
    #[arg(long, value_enum, default_value_t = PropsMode::Exhaustive)]
    mode: PropsMode,
    #[arg(long, value_enum, default_value_t = PopulationArg::All)]
    population: PopulationArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropsMode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum PopulationArg {
    All,
    Constraint,
}

#[derive(Args)]
struct SolveArgs {
    #[command(subcommand)]
    family: Option<FamilyCmd>,
    /// JSON instance file; replaces the family subcommand.
    #[arg(long, global = true)]
    instance: Option<PathBuf>,
    /// A representation name, `sb`, or `all`.
    #[arg(long, global = true)]
    repr: Option<String>,
    /// Seconds per run.
    #[arg(long, global = true)]
    timeout: Option<f64>,
    #[arg(long, global = true)]
    node_cap: Option<u64>,
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Emit JSON lines instead of table rows.
    #[arg(long, global = true)]
    json: bool,
    /// Print the best solution found after each row.
    #[arg(long, global = true)]
    show: bool,
}

#[derive(Subcommand)]
enum FamilyCmd {
    Steiner {
        #[arg(long)]
        t: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        u: u32,
        #[arg(long)]
        b: u32,
        #[arg(long)]
        v: u32,
    },
    Golfer {
        #[arg(long)]
        w: u32,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        v: u32,
    },
}

/// Failure modes mapped to exit codes.
enum Fail {
    Usage(String),
    Resource(String),
    /// Ran fine but the answer is negative (infeasible, timeout, failed check).
    Negative,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        match e {
            Error::Usage(m) => Fail::Usage(m),
            Error::Resource(m) => Fail::Resource(m),
        }
    }
}

impl From<io::Error> for Fail {
    fn from(e: io::Error) -> Fail {
        Fail::Resource(e.to_string())
    }
}

fn error_line(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::*;
            if matches!(e.kind(), DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.kind().as_str().unwrap_or("invalid arguments").to_string();
            let _ = e.print();
            error_line("usage", &msg);
            return ExitCode::from(2);
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = run(cli.command, &mut out);
    let flushed = out.flush();
    match (result, flushed) {
        (Ok(()), Ok(())) => ExitCode::SUCCESS,
        (Err(Fail::Negative), _) => ExitCode::from(1),
        (Err(Fail::Usage(m)), _) => {
            error_line("usage", &m);
            ExitCode::from(2)
        }
        (Err(Fail::Resource(m)), _) => {
            error_line("resource", &m);
            ExitCode::from(1)
        }
        (Ok(()), Err(e)) => {
            error_line("io", &e.to_string());
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command, out: &mut impl Write) -> Result<(), Fail> {
    match cmd {
        Command::Order { universe, repr } => {
            let u = Universe::parse(&universe)?;
            let ords = orderings(&repr)?;
            for &ord in &ords {
                if ords.len() > 1 {
                    writeln!(out, "# {ord}")?;
                }
                for ms in enumerate(&u, ord)? {
                    writeln!(out, "{ms}")?;
                }
            }
            Ok(())
        }
        Command::Closure { universe, repr, set, members } => {
            let u = Universe::parse(&universe)?;
            let set = parse_set(&u, &set)?;
            for ord in orderings(&repr)? {
                let iv = closure(ord, &set)?;
                let exact = is_exact(&u, ord, &set)?;
                writeln!(
                    out,
                    "{ord}\tlb={}\tub={}\tsize={}\texact={exact}",
                    iv.lb,
                    iv.ub,
                    interval_size(&u, &iv)
                )?;
                if members {
                    let (lo, hi) = (rank(&u, ord, &iv.lb)?, rank(&u, ord, &iv.ub)?);
                    for r in lo..=hi {
                        writeln!(out, "\t{}", msetlex::unrank(&u, ord, r)?)?;
                    }
                }
            }
            Ok(())
        }
        Command::Compare(a) => compare(a, out),
        Command::Props(a) => props(a, out),
        Command::Solve(a) => solve(a, out),
    }
}

fn orderings(repr: &str) -> Result<Vec<OrderingId>, Fail> {
    if repr.trim().eq_ignore_ascii_case("all") {
        Ok(OrderingId::ALL.to_vec())
    } else {
        Ok(vec![repr.parse()?])
    }
}

fn parse_set(u: &Universe, text: &str) -> Result<Vec<Multiset>, Fail> {
    let set: Vec<Multiset> = text.split(';').map(|s| u.parse_multiset(s)).collect::<Result<_, _>>()?;
    Ok(set)
}

/// `a..b`, `a..=b` or `a`.
fn parse_range(text: &str) -> Result<(u32, u32), Fail> {
    let bad = || Fail::Usage(format!("bad range `{text}`"));
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| bad());
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => (num(text)?, num(text)?),
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn compare(a: CompareArgs, out: &mut impl Write) -> Result<(), Fail> {
    let u = Universe::parse(&a.universe)?;
    let mut env = Envelope::full(&u);
    if let Some(c) = &a.card {
        let (lo, hi) = parse_range(c)?;
        env = env.with_card(lo, hi);
    }
    if let Some(v) = &a.variety {
        let (lo, hi) = parse_range(v)?;
        env = env.with_var(lo, hi);
    }
    let cfg = ClosureConfig { trials: a.trials, seed: a.seed, inclusion: a.inclusion };
    let exp = closure_experiment(&u, &env, cfg)?;
    let mut buf = Vec::new();
    match a.out {
        OutFormat::Csv => {
            // Explicit header so an empty run still yields one.
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
            w.write_record(["ordering", "trial", "d_size", "closure_size", "exact"])
                .map_err(|e| Fail::Resource(e.to_string()))?;
            for r in &exp.rows {
                w.serialize(r).map_err(|e| Fail::Resource(e.to_string()))?;
            }
            w.flush()?;
        }
        OutFormat::Json => {
            #[derive(Serialize)]
            struct Summary<'a> {
                universe: &'a str,
                card: [u32; 2],
                variety: [u32; 2],
                trials: usize,
                seed: u64,
                inclusion: f64,
                orderings: &'a [msetlex::OrderingSummary],
            }
            let s = Summary {
                universe: &exp.universe,
                card: [exp.card.lo, exp.card.hi],
                variety: [exp.var.lo, exp.var.hi],
                trials: cfg.trials,
                seed: cfg.seed,
                inclusion: cfg.inclusion,
                orderings: &exp.summary,
            };
            serde_json::to_writer_pretty(&mut buf, &s).map_err(|e| Fail::Resource(e.to_string()))?;
            buf.push(b'\n');
        }
    }
    match a.output {
        Some(path) => fs::write(path, buf)?,
        None => out.write_all(&buf)?,
    }
    Ok(())
}

fn props(a: PropsArgs, out: &mut impl Write) -> Result<(), Fail> {
    let u = Universe::parse(&a.universe)?;
    let mode = match a.mode {
        PropsMode::Exhaustive => Mode::Exhaustive,
        PropsMode::Sampled => Mode::Sampled { seed: a.seed, count: a.samples },
    };
    let population = match a.population {
        PopulationArg::All => Population::AllSubsets,
        PopulationArg::Constraint => Population::ConstraintDefined,
    };
    let report = proposition_report(&u, population, mode)?;
    if a.json {
        serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| Fail::Resource(e.to_string()))?;
        writeln!(out)?;
    } else {
        write!(out, "{report}")?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Fail::Negative)
    }
}

#[derive(Serialize)]
struct Row<'a> {
    instance: String,
    representation: &'a str,
    #[serde(flatten)]
    stats: &'a SearchStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    solution: Option<Vec<String>>,
}

fn solve(a: SolveArgs, out: &mut impl Write) -> Result<(), Fail> {
    let (family, mut repr, mut limits) = match (&a.instance, a.family) {
        (Some(path), None) => {
            let inst = Instance::from_json(&fs::read_to_string(path)?)?;
            (inst.family, inst.representation, inst.limits)
        }
        (None, Some(FamilyCmd::Steiner { t, k, u, b, v })) => {
            (Family::Steiner(SteinerParams { t, k, u, b, v }), "all".to_string(), Limits::default())
        }
        (None, Some(FamilyCmd::Golfer { w, m, n, g, p, v })) => {
            (Family::Golfer(GolferParams { w, m, n, g, p, v }), "all".to_string(), Limits::default())
        }
        (Some(_), Some(_)) => return Err(Fail::Usage("give either --instance or a family, not both".into())),
        (None, None) => return Err(Fail::Usage("missing family (steiner|golfer) or --instance".into())),
    };
    if let Some(r) = a.repr {
        repr = r;
    }
    if let Some(t) = a.timeout {
        let t = Duration::try_from_secs_f64(t).map_err(|e| Fail::Usage(format!("bad timeout: {e}")))?;
        limits.timeout = Some(t);
    }
    if a.node_cap.is_some() {
        limits.node_cap = a.node_cap;
    }
    let reprs: Vec<Representation> = if repr.trim().eq_ignore_ascii_case("all") {
        Representation::ALL.to_vec()
    } else {
        vec![repr.parse()?]
    };
    let models = reprs.iter().map(|&r| family.build(r)).collect::<Result<Vec<_>, _>>()?;
    let results = msetlex::run_many(&models, limits, a.jobs)?;
    if !a.json {
        writeln!(out, "instance\trepr\tfails\ttime\tobjective\tstatus")?;
    }
    let mut negative = false;
    for (r, (sol, stats)) in reprs.iter().zip(&results) {
        negative |= matches!(stats.status, Status::Unsatisfiable | Status::Timeout);
        if let Some(s) = sol {
            family.validate(s).map_err(|e| Fail::Resource(format!("{family} {r}: invalid solution: {e}")))?;
        }
        let shown = sol.as_ref().filter(|_| a.show).map(|s| family_vars(family, s));
        if a.json {
            let row = Row { instance: family.to_string(), representation: r.name(), stats, solution: shown };
            writeln!(out, "{}", serde_json::to_string(&row).map_err(|e| Fail::Resource(e.to_string()))?)?;
        } else {
            let obj = stats.best_objective.map_or("-".to_string(), |o| o.to_string());
            writeln!(out, "{family}\t{r}\t{}\t{:.2}\t{obj}\t{}", stats.fails, stats.wall_time, stats.status)?;
            for v in shown.into_iter().flatten() {
                writeln!(out, "\t{v}")?;
            }
        }
    }
    if negative {
        Err(Fail::Negative)
    } else {
        Ok(())
    }
}

/// The decision variables of a solution, without auxiliaries.
fn family_vars(family: Family, sol: &[Multiset]) -> Vec<String> {
    let n = match family {
        Family::Steiner(p) => p.b as usize,
        Family::Golfer(p) => (p.w * p.g) as usize,
    };
    sol[..n].iter().map(|m| m.to_string()).collect()
}
