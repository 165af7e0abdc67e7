//! Running algorithms by name and checking them against the oracle.
//!
//! Rows are sorted by instance id and algorithm before rendering, so output
//! does not depend on how instances were scheduled. Wall time is recorded
//! only when asked for, and is then the one nondeterministic column.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algos::{self, AlgoError, AlgoTrace, TieRule, DEFAULT_SUBSET_GUARD};
use crate::fixtures::{FixtureError, FixtureParams, GeneratorSpec, RandomStyle};
use crate::format::{format_decimal, format_rational, parse_big_rational};
use crate::lp::{self, LinProResult, LpError};
use crate::model::{AchievedRatio, Allocation, FairnessReport, Instance};
use crate::oracle::{self, OracleError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Naive,
    EgalGreedy,
    RoundRobin,
    MultGreedy,
    AddGreedy,
    DivCho,
    Binary,
    Linpro,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Naive,
        Algorithm::EgalGreedy,
        Algorithm::RoundRobin,
        Algorithm::MultGreedy,
        Algorithm::AddGreedy,
        Algorithm::DivCho,
        Algorithm::Binary,
        Algorithm::Linpro,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::EgalGreedy => "egal-greedy",
            Algorithm::RoundRobin => "round-robin",
            Algorithm::MultGreedy => "mult-greedy",
            Algorithm::AddGreedy => "add-greedy",
            Algorithm::DivCho => "div-cho",
            Algorithm::Binary => "binary",
            Algorithm::Linpro => "linpro",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                format!("unknown algorithm `{s}`; expected one of {}", names.join(", "))
            })
    }
}

/// Knobs shared by every algorithm run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions<T> {
    /// LinPro's precision.
    pub epsilon: T,
    /// Multiplicative greedy's tie rule.
    pub tie: TieRule,
    /// Round-robin picking order; agents in index order when `None`.
    pub order: Option<Vec<usize>>,
    /// Divide-and-choose's chore-count guard.
    pub subset_guard: usize,
}

impl<T: Scalar> Default for RunOptions<T> {
    fn default() -> Self {
        Self {
            epsilon: T::ratio(1, 100),
            tie: TieRule::LargestShare,
            order: None,
            subset_guard: DEFAULT_SUBSET_GUARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error(transparent)]
    Algo(#[from] AlgoError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// One algorithm run. LinPro runs carry the search state instead of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run<T> {
    pub allocation: Allocation,
    pub trace: Option<AlgoTrace<T>>,
    pub linpro: Option<LinProResult<T>>,
}

/// Dispatches `alg` on `inst`. `egal-greedy` uses the shared row when all
/// rows are equal and the per-agent variant otherwise.
pub fn run_algorithm<T: Scalar>(inst: &Instance<T>, alg: Algorithm, opts: &RunOptions<T>) -> Result<Run<T>, RunError> {
    let traced = |(allocation, trace): (Allocation, AlgoTrace<T>)| Run {
        allocation,
        trace: Some(trace),
        linpro: None,
    };
    Ok(match alg {
        Algorithm::Naive => traced(algos::naive_traced(inst)?),
        Algorithm::EgalGreedy => {
            if inst.agents() == 0 {
                return Err(AlgoError::NoAgents.into());
            }
            if inst.has_identical_rows() {
                traced(algos::egal_greedy_traced(inst.shares(), inst.row(0)))
            } else {
                traced(algos::egal_greedy_general_traced(inst)?)
            }
        }
        Algorithm::RoundRobin => {
            let order: Vec<usize> = match &opts.order {
                Some(order) => order.clone(),
                None => (0..inst.agents()).collect(),
            };
            traced(algos::round_robin_traced(inst, &order)?)
        }
        Algorithm::MultGreedy => traced(algos::multiplicative_greedy_traced(inst, opts.tie)?),
        Algorithm::AddGreedy => traced(algos::additive_greedy_traced(inst)?),
        Algorithm::DivCho => traced(algos::div_cho_traced(inst, opts.subset_guard)?),
        Algorithm::Binary => traced(algos::binary_wmms_traced(inst)?),
        Algorithm::Linpro => {
            let res = lp::lin_pro(inst, &opts.epsilon)?;
            Run {
                allocation: res.allocation.clone(),
                trace: None,
                linpro: Some(res),
            }
        }
    })
}

/// The ratio an algorithm is proven to reach on `inst`, if it has one there.
/// LinPro's bound scales with `alpha*`, so it needs the oracle value.
pub fn guaranteed_bound<T: Scalar>(
    inst: &Instance<T>,
    alg: Algorithm,
    opts: &RunOptions<T>,
    alpha_star: Option<&T>,
) -> Option<T> {
    match alg {
        Algorithm::Naive => Some(T::from_usize_exact(inst.agents())),
        Algorithm::EgalGreedy if algos::is_uniform(inst) => Some(T::one()),
        Algorithm::EgalGreedy if inst.has_identical_rows() => Some(T::from_usize_exact(2)),
        Algorithm::DivCho if inst.agents() == 2 => Some(T::ratio(3, 2)),
        Algorithm::Binary if algos::is_binary(inst) => Some(T::one()),
        Algorithm::Linpro => {
            alpha_star.map(|a| (T::from_usize_exact(4) + opts.epsilon.clone()) * a.clone())
        }
        _ => None,
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("instance {id}: {source}")]
    Fixture {
        id: String,
        #[source]
        source: FixtureError,
    },
    #[error("bad generator spec `{spec}`: {reason}")]
    Spec { spec: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig<T> {
    pub algorithms: Vec<Algorithm>,
    pub oracle: bool,
    pub budget: u64,
    pub options: RunOptions<T>,
    pub timing: bool,
}

impl<T: Scalar> Default for BenchConfig<T> {
    fn default() -> Self {
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            oracle: false,
            budget: oracle::DEFAULT_BUDGET,
            options: RunOptions::default(),
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow<T> {
    pub instance: String,
    pub algorithm: Algorithm,
    /// Per-agent ratios against exact WMMS; empty without the oracle.
    pub ratios: Vec<AchievedRatio<T>>,
    /// Worst per-agent ratio; `None` without the oracle.
    pub worst: Option<AchievedRatio<T>>,
    pub alpha_star: Option<T>,
    /// The guaranteed ratio checked for this run, if any applies.
    pub bound: Option<T>,
    pub violation: bool,
    /// Algorithm error (precondition failures are reported, not fatal).
    pub error: Option<String>,
    pub wall_micros: Option<u128>,
}

/// Runs every algorithm on every instance. With the oracle on, ratios are
/// measured against exact WMMS and checked against [`guaranteed_bound`].
pub fn bench_instances<T: Scalar>(
    instances: &[(String, Instance<T>)],
    cfg: &BenchConfig<T>,
) -> Result<Vec<BenchRow<T>>, BenchError> {
    let per_instance: Vec<Result<Vec<BenchRow<T>>, BenchError>> = instances
        .par_iter()
        .map(|(id, inst)| bench_one(id, inst, cfg))
        .collect();
    let mut rows = Vec::new();
    for r in per_instance {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| (&a.instance, a.algorithm).cmp(&(&b.instance, b.algorithm)));
    Ok(rows)
}

fn bench_one<T: Scalar>(id: &str, inst: &Instance<T>, cfg: &BenchConfig<T>) -> Result<Vec<BenchRow<T>>, BenchError> {
    let reference = if cfg.oracle {
        let wmms = oracle::exact_wmms(inst, cfg.budget)?.wmms;
        let alpha = oracle::exact_owmms(inst, &wmms, cfg.budget)?.alpha_star;
        Some((wmms, alpha))
    } else {
        None
    };
    let mut rows = Vec::with_capacity(cfg.algorithms.len());
    for &alg in &cfg.algorithms {
        let start = Instant::now();
        let run = run_algorithm(inst, alg, &cfg.options);
        let wall_micros = cfg.timing.then(|| start.elapsed().as_micros());
        let mut row = BenchRow {
            instance: id.to_string(),
            algorithm: alg,
            ratios: Vec::new(),
            worst: None,
            alpha_star: reference.as_ref().map(|(_, a)| a.clone()),
            bound: None,
            violation: false,
            error: None,
            wall_micros,
        };
        match run {
            Err(e) => row.error = Some(e.to_string()),
            Ok(run) => {
                if let Some((wmms, alpha)) = &reference {
                    let report: FairnessReport<T> = inst.fairness_report(&run.allocation, wmms);
                    row.ratios = report.agents.iter().map(|a| a.ratio.clone()).collect();
                    let worst = report.worst();
                    row.bound = guaranteed_bound(inst, alg, &cfg.options, Some(alpha));
                    row.violation = row.bound.as_ref().is_some_and(|b| !worst.within(b));
                    row.worst = Some(worst);
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn violations<T>(rows: &[BenchRow<T>]) -> usize {
    rows.iter().filter(|r| r.violation).count()
}

fn ratio_text<T: Scalar>(r: &AchievedRatio<T>) -> String {
    match r {
        AchievedRatio::Finite(v) => format_rational(v),
        other => other.to_string(),
    }
}

fn ratio_decimal<T: Scalar>(r: &AchievedRatio<T>) -> String {
    match r {
        AchievedRatio::Finite(v) => format_decimal(v, 4),
        other => other.to_string(),
    }
}

/// Fixed-width text table, status last. `decimal` adds a rounded copy of the
/// worst ratio.
pub fn render_table<T: Scalar>(rows: &[BenchRow<T>], decimal: bool) -> String {
    let timing = rows.iter().any(|r| r.wall_micros.is_some());
    let mut header = vec!["instance", "algorithm", "worst"];
    if decimal {
        header.push("worst~");
    }
    header.extend(["alpha*", "bound", "ratios"]);
    if timing {
        header.push("micros");
    }
    header.push("status");
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
    let dash = || "-".to_string();
    for r in rows {
        let mut line = vec![
            r.instance.clone(),
            r.algorithm.to_string(),
            r.worst.as_ref().map(ratio_text).unwrap_or_else(dash),
        ];
        if decimal {
            line.push(r.worst.as_ref().map(ratio_decimal).unwrap_or_else(dash));
        }
        line.push(r.alpha_star.as_ref().map(format_rational).unwrap_or_else(dash));
        line.push(r.bound.as_ref().map(format_rational).unwrap_or_else(dash));
        line.push(if r.ratios.is_empty() {
            dash()
        } else {
            r.ratios.iter().map(ratio_text).collect::<Vec<_>>().join(" ")
        });
        if timing {
            line.push(r.wall_micros.map(|m| m.to_string()).unwrap_or_else(dash));
        }
        line.push(match (&r.error, r.violation) {
            (Some(e), _) => format!("error: {e}"),
            (None, true) => "VIOLATION".to_string(),
            (None, false) => "ok".to_string(),
        });
        table.push(line);
    }
    let columns = table[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| table.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in table {
        let cells: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c + 1 < columns {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    cell.clone()
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct RowDoc {
    instance: String,
    algorithm: String,
    ratios: Vec<String>,
    worst: Option<String>,
    alpha_star: Option<String>,
    bound: Option<String>,
    violation: bool,
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_micros: Option<u128>,
}

#[derive(Serialize)]
struct BenchDoc {
    rows: Vec<RowDoc>,
}

/// Machine-readable rows: JSON with every rational as a `p/q` string, like
/// the instance document.
pub fn render_json<T: Scalar>(rows: &[BenchRow<T>]) -> String {
    let doc = BenchDoc {
        rows: rows
            .iter()
            .map(|r| RowDoc {
                instance: r.instance.clone(),
                algorithm: r.algorithm.to_string(),
                ratios: r.ratios.iter().map(ratio_text).collect(),
                worst: r.worst.as_ref().map(ratio_text),
                alpha_star: r.alpha_star.as_ref().map(format_rational),
                bound: r.bound.as_ref().map(format_rational),
                violation: r.violation,
                error: r.error.clone(),
                wall_micros: r.wall_micros,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("bench rows serialize");
    text.push('\n');
    text
}

fn spec_error(spec: &str, reason: impl Into<String>) -> BenchError {
    BenchError::Spec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn parse_range(spec: &str, text: &str) -> Result<Vec<usize>, BenchError> {
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| spec_error(spec, format!("`{s}` is not a count")))
    };
    match text.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if lo > hi {
                return Err(spec_error(spec, format!("empty range {text}")));
            }
            Ok((lo..=hi).collect())
        }
        None => Ok(vec![num(text)?]),
    }
}

fn parse_ratio(spec: &str, text: &str) -> Result<BigRational, BenchError> {
    parse_big_rational(text).map_err(|e| spec_error(spec, e.to_string()))
}

/// Expands generator specs separated by `;`.
///
/// * `table1` to `table6`, with `eps=`, `T=`, `c=`, `n=` keys after a colon
///   (`table5:eps=1/3`, `table6:T=16/3,c=4,n=5`);
/// * `round-robin:n=3..5` (one instance per `n`);
/// * `egal-failure:T=16/3,c=4,n=5`;
/// * `random:n=3,m=7,count=100,seed=1,style=normalized` (seeds
///   `seed..seed+count`; `n` and `m` also take ranges).
pub fn parse_generators(text: &str) -> Result<Vec<GeneratorSpec>, BenchError> {
    let mut out = Vec::new();
    for spec in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (family, args) = spec.split_once(':').unwrap_or((spec, ""));
        let mut keys: Vec<(&str, &str)> = Vec::new();
        for kv in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| spec_error(spec, format!("`{kv}` is not key=value")))?;
            keys.push((k.trim(), v.trim()));
        }
        let get = |key: &str| keys.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let allowed = |names: &[&str]| -> Result<(), BenchError> {
            match keys.iter().find(|(k, _)| !names.contains(k)) {
                Some((k, _)) => Err(spec_error(spec, format!("unknown key `{k}` for {family}"))),
                None => Ok(()),
            }
        };
        if let Some(k) = family.strip_prefix("table") {
            let k: usize = k
                .parse()
                .map_err(|_| spec_error(spec, format!("unknown family `{family}`")))?;
            allowed(&["eps", "T", "c", "n"])?;
            let mut params = FixtureParams::default();
            if let Some(v) = get("eps") {
                params.epsilon = parse_ratio(spec, v)?;
            }
            if let Some(v) = get("T") {
                params.t = parse_ratio(spec, v)?;
            }
            if let Some(v) = get("c") {
                params.c = parse_ratio(spec, v)?;
            }
            if let Some(v) = get("n") {
                params.n = parse_range(spec, v)?[0];
            }
            out.push(GeneratorSpec::Table { k, params });
            continue;
        }
        match family {
            "round-robin" => {
                allowed(&["n"])?;
                let ns = parse_range(spec, get("n").unwrap_or("3"))?;
                out.extend(ns.into_iter().map(|n| GeneratorSpec::RoundRobin { n }));
            }
            "egal-failure" => {
                allowed(&["T", "c", "n"])?;
                let d = FixtureParams::default();
                out.push(GeneratorSpec::EgalFailure {
                    t: get("T").map(|v| parse_ratio(spec, v)).transpose()?.unwrap_or(d.t),
                    c: get("c").map(|v| parse_ratio(spec, v)).transpose()?.unwrap_or(d.c),
                    n: get("n").map(|v| parse_range(spec, v)).transpose()?.map_or(d.n, |v| v[0]),
                });
            }
            "random" => {
                allowed(&["n", "m", "count", "seed", "style"])?;
                let ns = parse_range(spec, get("n").unwrap_or("3"))?;
                let ms = parse_range(spec, get("m").unwrap_or("6"))?;
                let count = parse_range(spec, get("count").unwrap_or("1"))?[0];
                let seed: u64 = get("seed")
                    .unwrap_or("0")
                    .parse()
                    .map_err(|_| spec_error(spec, "seed must be an unsigned integer"))?;
                let style: RandomStyle = get("style")
                    .unwrap_or("normalized")
                    .parse()
                    .map_err(|e: String| spec_error(spec, e))?;
                for &n in &ns {
                    for &m in &ms {
                        for s in 0..count as u64 {
                            out.push(GeneratorSpec::Random {
                                n,
                                m,
                                seed: seed + s,
                                style,
                            });
                        }
                    }
                }
            }
            other => return Err(spec_error(spec, format!("unknown family `{other}`"))),
        }
    }
    Ok(out)
}

/// Generates each spec, keyed by its id.
pub fn generate_all<T: Scalar>(specs: &[GeneratorSpec]) -> Result<Vec<(String, Instance<T>)>, BenchError> {
    specs
        .iter()
        .map(|g| {
            let id = g.id();
            g.generate()
                .map(|inst| (id.clone(), inst))
                .map_err(|source| BenchError::Fixture { id, source })
        })
        .collect()
}
