//! `wmms`: validate instances, run allocation algorithms, compute exact
//! WMMS values, benchmark against the oracle, and generate instances.
//!
//! Exit codes: 0 success, 1 internal or I/O error, 2 invalid input (including
//! algorithm preconditions), 3 oracle budget exceeded, 4 guarantee violation
//! (bench, or an allocation that fails `verify`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use wmms_core::algos::{AlgoTrace, TieRule};
use wmms_core::bench::{self, Algorithm, BenchConfig, BenchError, RunError, RunOptions};
use wmms_core::format::{format_decimal, format_rational, parse_big_rational, parse_instance, serialize_instance};
use wmms_core::lp::{iteration_bound, LpError};
use wmms_core::model::AgentFairness;
use wmms_core::oracle::{self, OracleError, DEFAULT_BUDGET};
use wmms_core::{AchievedRatio, Allocation, Instance, Ratio};

const BUDGET_ENV: &str = "WMMS_ORACLE_BUDGET";

#[derive(Parser)]
#[command(name = "wmms", version, about = "Weighted maxmin share allocation of indivisible chores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance against the model invariants.
    Validate {
        /// Instance file, or a generator spec such as `table1`.
        file: String,
    },
    /// Run one algorithm and print the allocation.
    Solve(SolveArgs),
    /// Exact WMMS values, P-i partitions and the optimal ratio alpha*.
    Oracle {
        file: String,
        #[command(flatten)]
        budget: BudgetArg,
        /// Add rounded decimal copies of every rational.
        #[arg(long)]
        decimal: bool,
    },
    /// Check a given allocation against exact WMMS at a ratio alpha.
    Verify {
        file: String,
        /// Owner of each chore, comma-separated agent indices.
        #[arg(long, value_delimiter = ',', required = true)]
        owner: Vec<usize>,
        #[arg(long, default_value = "1")]
        alpha: String,
        #[command(flatten)]
        budget: BudgetArg,
        #[arg(long)]
        decimal: bool,
    },
    /// Run algorithms over many instances and check their guarantees.
    Bench(BenchArgs),
    /// Write a generated instance.
    Gen {
        /// table1..table6, round-robin, egal-failure or random.
        family: String,
        /// key=value parameters, e.g. `n=3 m=7 seed=5 style=binary`.
        params: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BudgetArg {
    /// Largest n^m the oracle may enumerate.
    #[arg(long, env = BUDGET_ENV, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Args)]
struct AlgoArgs {
    /// LinPro precision.
    #[arg(long, default_value = "1/100")]
    eps: String,
    /// Tie rule for mult-greedy: largest-share or smallest-share.
    #[arg(long, default_value = "largest-share")]
    tie: String,
    /// Round-robin picking order, comma-separated agent indices.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
}

#[derive(Args)]
struct SolveArgs {
    file: String,
    /// naive, egal-greedy, round-robin, mult-greedy, add-greedy, div-cho, binary or linpro.
    algorithm: String,
    #[command(flatten)]
    algo: AlgoArgs,
    /// Report ratios against exact WMMS.
    #[arg(long)]
    oracle: bool,
    /// Print the algorithm's step-by-step decisions.
    #[arg(long)]
    trace: bool,
    /// Print LinPro's final program and extreme point.
    #[arg(long)]
    dump_lp: bool,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    decimal: bool,
    #[command(flatten)]
    budget: BudgetArg,
}

#[derive(Args)]
struct BenchArgs {
    /// Generator specs separated by `;`, or a directory of instance files.
    source: String,
    /// Comma-separated algorithm names; all when omitted.
    #[arg(long, value_delimiter = ',')]
    algs: Option<Vec<String>>,
    #[command(flatten)]
    algo: AlgoArgs,
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    decimal: bool,
    /// Record wall time per run (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    budget: BudgetArg,
}

enum Failure {
    Other(String),
    Invalid(String),
    Budget(String),
    Violation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Budget(_) => 3,
            Failure::Violation(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Other(m) | Failure::Invalid(m) | Failure::Budget(m) | Failure::Violation(m) => m,
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => Failure::Budget(format!("BudgetExceeded: {e}")),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Algo(e) => Failure::Invalid(e.to_string()),
            RunError::Lp(e @ LpError::InvalidEpsilon(_)) => Failure::Invalid(e.to_string()),
            RunError::Lp(e) => Failure::Other(e.to_string()),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Oracle(e) => e.into(),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

type CmdResult = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Solve(args) => cmd_solve(&args),
        Command::Oracle { file, budget, decimal } => cmd_oracle(&file, budget.budget, decimal),
        Command::Verify {
            file,
            owner,
            alpha,
            budget,
            decimal,
        } => cmd_verify(&file, owner, &alpha, budget.budget, decimal),
        Command::Bench(args) => cmd_bench(&args),
        Command::Gen { family, params, output } => cmd_gen(&family, &params, output.as_deref()),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Violation(out)) => {
            print!("{out}");
            eprintln!("error: guarantee violated");
            ExitCode::from(4)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// Reads `source` as a file, or failing that as a single generator spec.
fn load(source: &str) -> Result<Instance, Failure> {
    let path = Path::new(source);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| Failure::Other(format!("{source}: {e}")))?;
        return parse_instance(&text).map_err(|e| Failure::Invalid(format!("{source}: {e}")));
    }
    let specs = bench::parse_generators(source)
        .map_err(|e| Failure::Invalid(format!("{source} is neither a file nor a generator spec ({e})")))?;
    match specs.as_slice() {
        [one] => one.generate().map_err(|e| Failure::Invalid(e.to_string())),
        _ => Err(Failure::Invalid(format!("{source} names {} instances, expected one", specs.len()))),
    }
}

fn load_valid(source: &str) -> Result<Instance, Failure> {
    let inst = load(source)?;
    let violations = inst.validate();
    if violations.is_empty() {
        return Ok(inst);
    }
    let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
    Err(Failure::Invalid(format!("{source}: {}", list.join("; "))))
}

fn cmd_validate(source: &str) -> CmdResult {
    let inst = load(source)?;
    let violations = inst.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Failure::Invalid(list.join("\n")));
    }
    Ok(format!(
        "valid: {} agents, {} chores, {}\n",
        inst.agents(),
        inst.chores(),
        if inst.is_normalized() { "normalized" } else { "not normalized" }
    ))
}

fn show(value: &Ratio, decimal: bool) -> String {
    if decimal {
        format!("{} (~{})", format_rational(value), format_decimal(value, 4))
    } else {
        format_rational(value)
    }
}

fn show_ratio(r: &AchievedRatio<Ratio>, decimal: bool) -> String {
    match r {
        AchievedRatio::Finite(v) => show(v, decimal),
        other => other.to_string(),
    }
}

fn ratio_text(r: &AchievedRatio<Ratio>) -> String {
    match r {
        AchievedRatio::Finite(v) => format_rational(v),
        other => other.to_string(),
    }
}

fn show_list(values: &[Ratio], decimal: bool) -> String {
    values.iter().map(|v| show(v, decimal)).collect::<Vec<_>>().join(" ")
}

fn show_bundles(alloc: &Allocation, agents: usize) -> String {
    let parts: Vec<String> = alloc
        .bundles(agents)
        .iter()
        .map(|b| format!("{{{}}}", b.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")))
        .collect();
    parts.join(" ")
}

fn run_options(args: &AlgoArgs) -> Result<RunOptions<Ratio>, Failure> {
    let epsilon = parse_big_rational(&args.eps).map_err(|e| Failure::Invalid(format!("--eps: {e}")))?;
    let tie = match args.tie.as_str() {
        "largest-share" => TieRule::LargestShare,
        "smallest-share" => TieRule::SmallestShare,
        other => return Err(Failure::Invalid(format!("--tie: unknown rule `{other}`"))),
    };
    Ok(RunOptions {
        epsilon,
        tie,
        order: args.order.clone(),
        ..RunOptions::default()
    })
}

fn parse_algorithm(name: &str) -> Result<Algorithm, Failure> {
    name.parse().map_err(Failure::Invalid)
}

#[derive(Serialize)]
struct SolveDoc {
    algorithm: String,
    owner: Vec<usize>,
    values: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wmms: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratios: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_star: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<String>,
}

fn trace_lines(trace: &AlgoTrace<Ratio>, out: &mut String) {
    for e in &trace.events {
        let _ = writeln!(
            out,
            "step {}: chore {} -> agent {} ({})",
            e.step,
            e.chore,
            e.agent,
            format_rational(&e.quantity)
        );
    }
}

fn cmd_solve(args: &SolveArgs) -> CmdResult {
    let inst = load_valid(&args.file)?;
    let alg = parse_algorithm(&args.algorithm)?;
    let opts = run_options(&args.algo)?;
    let reference = if args.oracle {
        let wmms = oracle::exact_wmms(&inst, args.budget.budget)?.wmms;
        let alpha = oracle::exact_owmms(&inst, &wmms, args.budget.budget)?.alpha_star;
        Some((wmms, alpha))
    } else {
        None
    };
    let run = bench::run_algorithm(&inst, alg, &opts)?;
    let values = inst.own_values(&run.allocation);
    let report = reference
        .as_ref()
        .map(|(wmms, _)| inst.fairness_report(&run.allocation, wmms));

    if args.json {
        let doc = SolveDoc {
            algorithm: alg.to_string(),
            owner: run.allocation.owner.clone(),
            values: values.iter().map(format_rational).collect(),
            wmms: reference.as_ref().map(|(w, _)| w.iter().map(format_rational).collect()),
            ratios: report
                .as_ref()
                .map(|r| r.agents.iter().map(|a| ratio_text(&a.ratio)).collect()),
            worst: report.as_ref().map(|r| ratio_text(&r.worst())),
            alpha_star: reference.as_ref().map(|(_, a)| format_rational(a)),
            c: run.linpro.as_ref().map(|l| format_rational(&l.c)),
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Other(e.to_string()))?;
        text.push('\n');
        return Ok(text);
    }

    let d = args.decimal;
    let mut out = String::new();
    let _ = writeln!(out, "algorithm: {alg}");
    let owner: Vec<String> = run.allocation.owner.iter().map(ToString::to_string).collect();
    let _ = writeln!(out, "owner: [{}]", owner.join(", "));
    let bundles = run.allocation.bundles(inst.agents());
    for (i, bundle) in bundles.iter().enumerate() {
        let items: Vec<String> = bundle.iter().map(ToString::to_string).collect();
        let _ = write!(out, "agent {i}: bundle {{{}}}, value {}", items.join(", "), show(&values[i], d));
        if let Some(report) = &report {
            let AgentFairness { reference, ratio, .. } = &report.agents[i];
            let _ = write!(out, ", wmms {}, ratio {}", show(reference, d), show_ratio(ratio, d));
        }
        out.push('\n');
    }
    if let (Some(report), Some((_, alpha))) = (&report, &reference) {
        let _ = writeln!(out, "worst ratio: {}", show_ratio(&report.worst(), d));
        let _ = writeln!(out, "alpha*: {}", show(alpha, d));
    }
    if let Some(lp) = &run.linpro {
        let _ = writeln!(out, "wmms': {}", show_list(&lp.wmms_prime, d));
        let _ = writeln!(out, "c: {}", show(&lp.c, d));
        let _ = writeln!(out, "lower: {}", show(&lp.lower, d));
        let _ = writeln!(
            out,
            "iterations: {} (bound {})",
            lp.iterations,
            iteration_bound(inst.agents(), &opts.epsilon)
        );
    }
    if args.trace {
        if let Some(trace) = &run.trace {
            trace_lines(trace, &mut out);
        }
        if let Some(lp) = &run.linpro {
            for (c, feasible) in &lp.probes {
                let verdict = if *feasible { "feasible" } else { "infeasible" };
                let _ = writeln!(out, "probe c = {}: {verdict}", format_rational(c));
            }
        }
    }
    if args.dump_lp {
        match &run.linpro {
            Some(lp) => out.push_str(&lp.program.dump(Some(&lp.point))),
            None => eprintln!("note: --dump-lp only applies to linpro"),
        }
    }
    Ok(out)
}

fn cmd_oracle(source: &str, budget: u64, decimal: bool) -> CmdResult {
    let inst = load_valid(source)?;
    let res = oracle::exact_wmms(&inst, budget)?;
    let owmms = oracle::exact_owmms(&inst, &res.wmms, budget)?;
    let mut out = String::new();
    let _ = writeln!(out, "wmms: {}", show_list(&res.wmms, decimal));
    let _ = writeln!(out, "W: {}", show_list(&res.w, decimal));
    for (i, witness) in res.witnesses.iter().enumerate() {
        let _ = writeln!(out, "agent {i} partition: {}", show_bundles(witness, inst.agents()));
    }
    let _ = writeln!(out, "alpha*: {}", show(&owmms.alpha_star, decimal));
    let _ = writeln!(out, "alpha* allocation: {}", show_bundles(&owmms.witness, inst.agents()));
    Ok(out)
}

fn cmd_verify(source: &str, owner: Vec<usize>, alpha: &str, budget: u64, decimal: bool) -> CmdResult {
    let inst = load_valid(source)?;
    let alpha = parse_big_rational(alpha).map_err(|e| Failure::Invalid(format!("--alpha: {e}")))?;
    let alloc = Allocation::new(owner);
    alloc.check(&inst).map_err(|e| Failure::Invalid(e.to_string()))?;
    let wmms = oracle::exact_wmms(&inst, budget)?.wmms;
    let report = inst.fairness_report(&alloc, &wmms);
    let mut out = String::new();
    for (i, a) in report.agents.iter().enumerate() {
        let _ = writeln!(
            out,
            "agent {i}: value {}, wmms {}, ratio {}",
            show(&a.bundle_value, decimal),
            show(&a.reference, decimal),
            show_ratio(&a.ratio, decimal)
        );
    }
    let _ = writeln!(out, "worst ratio: {}", show_ratio(&report.worst(), decimal));
    if report.satisfied_at(&alpha) {
        let _ = writeln!(out, "verified at alpha {}", format_rational(&alpha));
        Ok(out)
    } else {
        let _ = writeln!(out, "not verified at alpha {}", format_rational(&alpha));
        Err(Failure::Violation(out))
    }
}

fn bench_instances(source: &str) -> Result<Vec<(String, Instance)>, Failure> {
    let path = Path::new(source);
    if !path.is_dir() {
        let specs = bench::parse_generators(source)?;
        return Ok(bench::generate_all(&specs)?);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Failure::Other(format!("{source}: {e}")))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let name = p.to_string_lossy();
            let inst = load_valid(&name)?;
            let id = p.file_stem().map_or_else(|| name.to_string(), |s| s.to_string_lossy().into_owned());
            Ok((id, inst))
        })
        .collect()
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let algorithms = match &args.algs {
        Some(names) => names.iter().map(|n| parse_algorithm(n)).collect::<Result<Vec<_>, _>>()?,
        None => Algorithm::ALL.to_vec(),
    };
    let instances = bench_instances(&args.source)?;
    for (id, inst) in &instances {
        let violations = inst.validate();
        if let Some(v) = violations.first() {
            return Err(Failure::Invalid(format!("{id}: {v}")));
        }
    }
    let cfg = BenchConfig {
        algorithms,
        oracle: args.oracle,
        budget: args.budget.budget,
        options: run_options(&args.algo)?,
        timing: args.timing,
    };
    let rows = bench::bench_instances(&instances, &cfg)?;
    let out = if args.json {
        bench::render_json(&rows)
    } else {
        bench::render_table(&rows, args.decimal)
    };
    if bench::violations(&rows) > 0 {
        Err(Failure::Violation(out))
    } else {
        Ok(out)
    }
}

fn cmd_gen(family: &str, params: &[String], output: Option<&Path>) -> CmdResult {
    let spec = if params.is_empty() {
        family.to_string()
    } else {
        format!("{family}:{}", params.join(","))
    };
    let inst = load(&spec)?;
    let text = serialize_instance(&inst);
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}
