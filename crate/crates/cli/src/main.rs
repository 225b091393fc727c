//! Command line front end for the MAP solver.
//!
//! Exit codes: 0 success, 1 usage error, 2 parse or validation error,
//! 3 timeout (the best solution found is still printed).

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mapsearch::bench::{
    brute_force_map, gen_random_network, matched_ibound, run_bound_comparison,
    run_solver_benchmark, render_bound_table, render_solver_table, write_jsonl,
    BenchmarkRecord, BoundComparisonConfig, RandomNetSpec, SolverBenchmarkConfig,
};
use mapsearch::elimination::{min_fill_order, width, InteractionGraph};
use mapsearch::minibucket::minibucket_bound;
use mapsearch::model::{emit_network, parse_evidence, parse_network, parse_var_set};
use mapsearch::search::{jointree_bound, solve_map, SolveOptions, SolveStatus};
use mapsearch::{BayesianNetwork, Evidence, ScaledValue, VarId};
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

const EXIT_USAGE: i32 = 1;
const EXIT_INVALID: i32 = 2;
const EXIT_TIMEOUT: i32 = 3;

#[derive(Parser)]
#[command(name = "mapsearch", version, about = "Exact MAP inference for discrete Bayesian networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the most probable instantiation of the MAP variables
    Solve(SolveArgs),
    /// Print an upper bound on the MAP value without searching
    Bound(BoundArgs),
    /// Find the MAP instantiation by brute-force enumeration (small inputs)
    Oracle(ProblemArgs),
    /// Generate a seeded random network
    GenRandom(GenRandomArgs),
    /// Run a benchmark harness from a JSON config
    Bench(BenchArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Network file
    net: PathBuf,
    /// Evidence file (omit for no evidence)
    #[arg(long, value_name = "FILE")]
    evidence: Option<PathBuf>,
    /// MAP variables file
    #[arg(long, value_name = "FILE")]
    map_vars: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Give up on proving optimality after this many seconds
    #[arg(long, value_name = "S")]
    time_limit: Option<f64>,
    /// Disable maximization promotion
    #[arg(long)]
    no_promote: bool,
    /// Disable prime-factor variable splitting
    #[arg(long)]
    no_split: bool,
    /// Disable value elimination
    #[arg(long)]
    no_value_elim: bool,
    /// Print the result as a JSON object instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundMethod {
    Jointree,
    Minibucket,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Bounding method
    #[arg(long, value_enum)]
    method: BoundMethod,
    /// Mini-bucket complexity parameter (defaults to one matched to the
    /// unconstrained elimination width)
    #[arg(long, value_name = "K")]
    ibound: Option<usize>,
}

#[derive(Args)]
struct GenRandomArgs {
    /// Number of variables
    #[arg(long, value_name = "N")]
    nodes: usize,
    /// Connectivity parameter (expected parent count is half of it)
    #[arg(long, value_name = "C")]
    connectivity: u32,
    /// RNG seed
    #[arg(long, value_name = "S")]
    seed: u64,
    /// States per variable
    #[arg(long, value_name = "K", default_value_t = 2)]
    cardinality: usize,
    /// Output network file
    #[arg(short, long, value_name = "OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(subcommand)]
    which: BenchCommand,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Compare the jointree bound against mini-bucket on a seeded corpus
    CompareBounds(BenchIo),
    /// Time the solver on a seeded corpus
    Solver(BenchIo),
}

#[derive(Args)]
struct BenchIo {
    /// JSON config file ({} selects every default)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Where to write the per-instance records (JSON lines)
    #[arg(short, long, value_name = "REPORT")]
    out: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help and version requests are not usage errors
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(EXIT_INVALID);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Bound(args) => cmd_bound(&args),
        Command::Oracle(args) => cmd_oracle(&args),
        Command::GenRandom(args) => cmd_gen_random(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_problem(args: &ProblemArgs) -> Result<(BayesianNetwork, Evidence, BTreeSet<VarId>)> {
    let net = parse_network(&read_to_string(&args.net)?)
        .with_context(|| args.net.display().to_string())?;
    let evidence = match &args.evidence {
        Some(path) => parse_evidence(&read_to_string(path)?)
            .with_context(|| path.display().to_string())?,
        None => Evidence::new(),
    };
    let map_vars = parse_var_set(&read_to_string(&args.map_vars)?)
        .with_context(|| args.map_vars.display().to_string())?;
    Ok((net, evidence, map_vars))
}

/// Fixed-point rendering without trailing zeros: 0.490000 prints as 0.49.
fn trim_fixed(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" { "0".to_string() } else { s.to_string() }
}

fn fmt_log10(v: ScaledValue) -> String {
    match v.log10() {
        Some(l) => trim_fixed(l),
        None => "-inf".to_string(),
    }
}

/// Linear rendering of a possibly out-of-double-range value. Positive values
/// below 1e-300 print as `~0`; the log10 field carries their magnitude.
fn fmt_linear(v: ScaledValue) -> String {
    if v.is_zero() {
        return "0".to_string();
    }
    let l = v.log10().expect("nonzero value has a log");
    if l < -300.0 {
        return "~0".to_string();
    }
    if l > 300.0 {
        let exp = l.floor();
        return format!("{}e{}", trim_fixed(10f64.powf(l - exp)), exp as i64);
    }
    let f = v.to_f64();
    if (1e-4..1e7).contains(&f) { trim_fixed(f) } else { format!("{f:e}") }
}

fn assignment_line(net: &BayesianNetwork, m: &mapsearch::Instantiation) -> String {
    let pairs: Vec<String> =
        m.iter().map(|(&v, &s)| format!("{}={}", net.variable(v).name, s)).collect();
    pairs.join(" ")
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let (net, evidence, map_vars) = load_problem(&args.problem)?;
    if let Some(s) = args.time_limit {
        if !s.is_finite() || s < 0.0 {
            bail!("--time-limit must be a non-negative number of seconds");
        }
    }
    let options = SolveOptions {
        promote: !args.no_promote,
        split: !args.no_split,
        value_elimination: !args.no_value_elim,
        time_limit: args.time_limit.map(Duration::from_secs_f64),
        ..SolveOptions::default()
    };
    let out = solve_map(&net, &evidence, &map_vars, &options)?;
    let status = match out.status {
        SolveStatus::Exact => "exact",
        SolveStatus::Timeout => "timeout",
    };
    let time_ms = out.time_total.as_millis() as u64;
    if args.json {
        let assignment: serde_json::Map<String, serde_json::Value> = out
            .solution
            .iter()
            .map(|(&v, &s)| (net.variable(v).name.clone(), serde_json::json!(s)))
            .collect();
        let doc = serde_json::json!({
            "status": status,
            "map_log10": out.probability.log10(),
            "p": out.probability.to_f64(),
            "assignment": assignment,
            "nodes": out.counters.nodes,
            "prunes_bound": out.counters.prunes_bound,
            "prunes_value": out.counters.prunes_value,
            "time_ms": time_ms,
        });
        println!("{doc}");
    } else {
        println!("status: {status}");
        println!("map log10={} p={}", fmt_log10(out.probability), fmt_linear(out.probability));
        println!("assignment: {}", assignment_line(&net, &out.solution));
        println!(
            "nodes={} prunes_bound={} prunes_value={} time_ms={}",
            out.counters.nodes, out.counters.prunes_bound, out.counters.prunes_value, time_ms
        );
    }
    Ok(match out.status {
        SolveStatus::Exact => 0,
        SolveStatus::Timeout => EXIT_TIMEOUT,
    })
}

fn cmd_bound(args: &BoundArgs) -> Result<i32> {
    let (net, evidence, map_vars) = load_problem(&args.problem)?;
    let bound = match args.method {
        BoundMethod::Jointree => {
            println!("method: jointree");
            jointree_bound(&net, &evidence, &map_vars, &SolveOptions::default())?
        }
        BoundMethod::Minibucket => {
            let hidden = net.non_evidence_vars(&evidence);
            for &v in &map_vars {
                if v >= net.num_variables() {
                    bail!("MAP variable {v} is not in the network");
                }
                if !hidden.contains(&v) {
                    bail!("MAP variable {v} is fixed by the evidence");
                }
            }
            let graph = InteractionGraph::of_network(&net, &evidence);
            let order = min_fill_order(&graph, &map_vars, true);
            let ibound = match args.ibound {
                Some(k) => k,
                None => matched_ibound(&net, &evidence, width(&net, &evidence, &order)?),
            };
            println!("method: minibucket ibound={ibound}");
            let sums: BTreeSet<VarId> = hidden.difference(&map_vars).copied().collect();
            minibucket_bound(&net, &evidence, &sums, &map_vars, &order, ibound)?
        }
    };
    println!("bound log10={} p={}", fmt_log10(bound), fmt_linear(bound));
    Ok(0)
}

fn cmd_oracle(args: &ProblemArgs) -> Result<i32> {
    let (net, evidence, map_vars) = load_problem(args)?;
    let res = brute_force_map(&net, &evidence, &map_vars)?;
    println!("status: exact");
    println!("map log10={} p={}", fmt_log10(res.probability), fmt_linear(res.probability));
    println!("assignment: {}", assignment_line(&net, &res.assignment));
    Ok(0)
}

fn cmd_gen_random(args: &GenRandomArgs) -> Result<i32> {
    if args.nodes == 0 {
        bail!("--nodes must be at least 1");
    }
    if args.cardinality < 2 {
        bail!("--cardinality must be at least 2");
    }
    let spec = RandomNetSpec {
        nodes: args.nodes,
        connectivity: args.connectivity,
        seed: args.seed,
        cardinality: args.cardinality,
    };
    let net = gen_random_network(&spec);
    fs::write(&args.out, emit_network(&net))
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "wrote {} ({} variables, connectivity {}, seed {})",
        args.out.display(),
        args.nodes,
        args.connectivity,
        args.seed
    );
    Ok(0)
}

fn write_records(path: &Path, records: &[BenchmarkRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_jsonl(records, &mut buf)?;
    fs::write(path, buf).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<i32> {
    match &args.which {
        BenchCommand::CompareBounds(io) => {
            let config: BoundComparisonConfig = serde_json::from_str(&read_to_string(&io.config)?)
                .with_context(|| io.config.display().to_string())?;
            let report = run_bound_comparison(&config)?;
            write_records(&io.out, &report.records)?;
            print!("{}", render_bound_table(&report));
        }
        BenchCommand::Solver(io) => {
            let config: SolverBenchmarkConfig = serde_json::from_str(&read_to_string(&io.config)?)
                .with_context(|| io.config.display().to_string())?;
            let report = run_solver_benchmark(&config)?;
            write_records(&io.out, &report.records)?;
            print!("{}", render_solver_table(&report));
        }
    }
    Ok(0)
}
