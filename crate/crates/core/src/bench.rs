//! Random-network generation, a brute-force oracle, and the two experiment
//! harnesses: bound comparison (jointree vs mini-bucket) and solver
//! statistics under a time limit.
//!
//! Reproducibility: everything is keyed by 64-bit seeds fed to ChaCha8.
//! A corpus seed is split per instance with a SplitMix64 finalizer
//! (`instance_seed`), and each instance splits again for evidence and MAP
//! variable selection, so any single instance can be regenerated in
//! isolation.

use crate::elimination::{self, min_fill_order, ElimError, InteractionGraph};
use crate::minibucket::{minibucket_bound, MiniBucketError};
use crate::model::{
    family_potential, BayesianNetwork, Evidence, Instantiation, ModelError, ScaledValue, VarId,
    Variable,
};
use crate::search::{self, solve_map, SolveError, SolveOptions, SolveStatus};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io;
use std::time::Duration;
use thiserror::Error;

/// Brute-force enumeration guard, in log2 states.
const ORACLE_CAP_LOG2: f64 = 24.0;
const EVIDENCE_TRIES: usize = 64;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("MAP state space of 2^{log2:.1} exceeds the 2^24 brute-force guard")]
    SearchSpaceTooLarge { log2: f64 },
    #[error("could not sample evidence with positive probability in {tries} tries")]
    UnsatisfiableEvidence { tries: usize },
    #[error("instance {instance}: solver result disagrees with brute force")]
    OracleMismatch { instance: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Elim(#[from] ElimError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    MiniBucket(#[from] MiniBucketError),
}

/// Derive the seed for instance `index` of a corpus.
pub fn instance_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomNetSpec {
    pub nodes: usize,
    /// Parent budget parameter: node i gets min(i, Binomial(c, 1/2)) parents,
    /// drawn uniformly without replacement from the c most recent
    /// predecessors. The window keeps min-fill widths near c regardless of
    /// network size (measured), which is what makes the harness corpora
    /// tractable.
    pub connectivity: u32,
    pub seed: u64,
    pub cardinality: usize,
}

/// Deterministic random network: same spec, same network, byte for byte.
pub fn gen_random_network(spec: &RandomNetSpec) -> BayesianNetwork {
    assert!(spec.nodes >= 1, "a network needs at least one variable");
    assert!(spec.cardinality >= 2, "variables need at least two states");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let card = spec.cardinality;
    let c = spec.connectivity as usize;
    let mut variables = Vec::with_capacity(spec.nodes);
    let mut parent_lists = Vec::with_capacity(spec.nodes);
    let mut cpts = Vec::with_capacity(spec.nodes);
    for i in 0..spec.nodes {
        let budget = (0..spec.connectivity).filter(|_| rng.gen_bool(0.5)).count();
        let window_lo = i.saturating_sub(c);
        let mut pool: Vec<VarId> = (window_lo..i).collect();
        let k = budget.min(pool.len());
        for j in 0..k {
            let t = rng.gen_range(j..pool.len());
            pool.swap(j, t);
        }
        let mut parents: Vec<VarId> = pool[..k].to_vec();
        parents.sort_unstable();

        let configs: usize = card.pow(parents.len() as u32);
        let mut family = Vec::with_capacity(configs * card);
        for _ in 0..configs {
            // normalized unit exponentials, a flat Dirichlet
            loop {
                let col: Vec<f64> = (0..card).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let total: f64 = col.iter().sum();
                if total > 0.0 {
                    family.extend(col.iter().map(|g| g / total));
                    break;
                }
            }
        }
        variables.push(Variable { id: i, name: format!("V{i}"), cardinality: card });
        cpts.push(
            family_potential(i, &parents, |_| card, family)
                .expect("generated family tables are well formed"),
        );
        parent_lists.push(parents);
    }
    BayesianNetwork::new(variables, parent_lists, cpts)
        .expect("generated networks satisfy all invariants")
}

/// Uniform evidence on up to `count` leaf variables, rejection-sampled until
/// the evidence probability is positive.
pub fn sample_leaf_evidence(
    net: &BayesianNetwork,
    count: usize,
    seed: u64,
) -> Result<Evidence, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut leaves = net.leaves();
    if count < leaves.len() {
        leaves.shuffle(&mut rng);
        leaves.truncate(count);
        leaves.sort_unstable();
    }
    // the interaction graph only depends on which variables are observed,
    // so one order serves every candidate state vector
    let shape = Evidence::from_pairs(leaves.iter().map(|&v| (v, 0)))?;
    let hidden = net.non_evidence_vars(&shape);
    let order = min_fill_order(&InteractionGraph::of_network(net, &shape), &BTreeSet::new(), false);
    for _ in 0..EVIDENCE_TRIES {
        let e = Evidence::from_pairs(
            leaves.iter().map(|&v| (v, rng.gen_range(0..net.cardinality(v)))),
        )?;
        let pr = elimination::eliminate(net, &e, &hidden, &BTreeSet::new(), &order)?.value;
        if !pr.is_zero() {
            return Ok(e);
        }
    }
    Err(BenchError::UnsatisfiableEvidence { tries: EVIDENCE_TRIES })
}

/// A uniformly random size-`count` subset of the unobserved variables.
pub fn select_map_vars(
    net: &BayesianNetwork,
    evidence: &Evidence,
    count: usize,
    seed: u64,
) -> BTreeSet<VarId> {
    let mut pool: Vec<VarId> = net.non_evidence_vars(evidence).into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool.into_iter().take(count).collect()
}

/// Random unobserved variables accumulated while the joint state space stays
/// within `target_log2` bits.
pub fn select_map_vars_by_state_space(
    net: &BayesianNetwork,
    evidence: &Evidence,
    target_log2: f64,
    seed: u64,
) -> BTreeSet<VarId> {
    let mut pool: Vec<VarId> = net.non_evidence_vars(evidence).into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let mut chosen = BTreeSet::new();
    let mut acc = 0.0;
    for v in pool {
        let bits = (net.cardinality(v) as f64).log2();
        if acc + bits <= target_log2 + 1e-9 {
            acc += bits;
            chosen.insert(v);
        }
    }
    chosen
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapResult {
    pub assignment: Instantiation,
    pub probability: ScaledValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Rayon,
}

/// Exact MAP by enumerating every instantiation of `map_vars`. Guarded to
/// state spaces of at most 2^24. Ties go to the lexicographically smallest
/// assignment (in variable-id order).
pub fn brute_force_map(
    net: &BayesianNetwork,
    evidence: &Evidence,
    map_vars: &BTreeSet<VarId>,
) -> Result<MapResult, BenchError> {
    #[cfg(feature = "parallel")]
    let mode = Parallelism::Rayon;
    #[cfg(not(feature = "parallel"))]
    let mode = Parallelism::Sequential;
    brute_force_map_with(net, evidence, map_vars, mode)
}

pub fn brute_force_map_with(
    net: &BayesianNetwork,
    evidence: &Evidence,
    map_vars: &BTreeSet<VarId>,
    mode: Parallelism,
) -> Result<MapResult, BenchError> {
    evidence.validate_for(net)?;
    for &v in map_vars {
        if v >= net.num_variables() {
            return Err(
                ModelError::UnknownVariable { var: v, count: net.num_variables() }.into()
            );
        }
        if evidence.get(v).is_some() {
            return Err(SolveError::MapOverlapsEvidence { var: v }.into());
        }
    }
    let vars: Vec<VarId> = map_vars.iter().copied().collect();
    let cards: Vec<usize> = vars.iter().map(|&v| net.cardinality(v)).collect();
    let log2: f64 = cards.iter().map(|&c| (c as f64).log2()).sum();
    if log2 > ORACLE_CAP_LOG2 {
        return Err(BenchError::SearchSpaceTooLarge { log2 });
    }
    let total: usize = cards.iter().product();
    let sums: BTreeSet<VarId> =
        net.non_evidence_vars(evidence).difference(map_vars).copied().collect();
    // the order only depends on which variables are fixed, so compute it once
    let mut shape = evidence.clone();
    for &v in &vars {
        shape.assign(v, 0)?;
    }
    let order = min_fill_order(&InteractionGraph::of_network(net, &shape), &BTreeSet::new(), false);

    let decode = |mut idx: usize| -> Instantiation {
        let mut m = Instantiation::new();
        for (&v, &c) in vars.iter().zip(&cards).rev() {
            m.insert(v, idx % c);
            idx /= c;
        }
        m
    };
    let eval = |idx: usize| -> Result<(ScaledValue, usize), BenchError> {
        let e2 = evidence.with_instantiation(&decode(idx))?;
        let value = elimination::eliminate(net, &e2, &sums, &BTreeSet::new(), &order)?.value;
        Ok((value, idx))
    };
    // max value, ties to the smaller index: associative, so any reduction
    // shape gives the same winner
    let better = |a: (ScaledValue, usize), b: (ScaledValue, usize)| {
        if a.0 > b.0 || (!(b.0 > a.0) && a.1 <= b.1) {
            a
        } else {
            b
        }
    };

    let winner = match mode {
        #[cfg(feature = "parallel")]
        Parallelism::Rayon if total >= 1024 => (0..total)
            .into_par_iter()
            .map(eval)
            .try_reduce_with(|a, b| Ok(better(a, b)))
            .expect("at least one instantiation")?,
        _ => {
            let mut acc = eval(0)?;
            for idx in 1..total {
                acc = better(acc, eval(idx)?);
            }
            acc
        }
    };
    Ok(MapResult { assignment: decode(winner.1), probability: winner.0 })
}

/// One JSON-lines row. Harnesses that skip a measurement leave it null.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub instance: usize,
    pub seed: u64,
    pub n: usize,
    pub connectivity: u32,
    pub map_vars: usize,
    pub status: String,
    pub t_find_s: Option<f64>,
    pub t_finish_s: Option<f64>,
    pub cwidth: f64,
    pub nodes: u64,
    pub prunes_bound: u64,
    pub prunes_value: u64,
    pub bd_log10: Option<f64>,
    pub mb_log10: Option<f64>,
    pub map_log10: Option<f64>,
}

pub fn write_jsonl<W: io::Write>(records: &[BenchmarkRecord], out: &mut W) -> io::Result<()> {
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StatLine {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

fn stat_line(values: &[f64]) -> StatLine {
    if values.is_empty() {
        return StatLine { min: 0.0, median: 0.0, mean: 0.0, max: 0.0 };
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    StatLine {
        min: sorted[0],
        median,
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        max: sorted[sorted.len() - 1],
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundComparisonConfig {
    pub instances: usize,
    pub nodes: usize,
    pub connectivity: u32,
    pub cardinality: usize,
    pub seed: u64,
    /// Fraction of the unobserved variables selected for maximization.
    pub map_fraction: f64,
    /// Number of leaves observed; absent means all of them.
    pub evidence_leaves: Option<usize>,
}

impl Default for BoundComparisonConfig {
    fn default() -> Self {
        BoundComparisonConfig {
            instances: 50,
            nodes: 40,
            connectivity: 8,
            cardinality: 2,
            seed: 7,
            map_fraction: 0.25,
            evidence_leaves: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundSummary {
    /// log10(minibucket / jointree) per instance.
    pub ratio_log10: StatLine,
    /// Instances where the jointree bound came out looser.
    pub jointree_looser: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundComparisonReport {
    pub config: BoundComparisonConfig,
    pub records: Vec<BenchmarkRecord>,
    pub summary: BoundSummary,
}

fn bound_instance(config: &BoundComparisonConfig, i: usize) -> Result<BenchmarkRecord, BenchError> {
    let seed = instance_seed(config.seed, i as u64);
    let spec = RandomNetSpec {
        nodes: config.nodes,
        connectivity: config.connectivity,
        seed,
        cardinality: config.cardinality,
    };
    let net = gen_random_network(&spec);
    let e = sample_leaf_evidence(&net, config.evidence_leaves.unwrap_or(usize::MAX), instance_seed(seed, 1))?;
    let hidden = net.non_evidence_vars(&e);
    let count = ((hidden.len() as f64) * config.map_fraction).round() as usize;
    let count = count.clamp(1, hidden.len());
    let map_vars = select_map_vars(&net, &e, count, instance_seed(seed, 2));
    let sums: BTreeSet<VarId> = hidden.difference(&map_vars).copied().collect();

    let bd = search::jointree_bound(&net, &e, &map_vars, &SolveOptions::default())?;

    let graph = InteractionGraph::of_network(&net, &e);
    let unconstrained = min_fill_order(&graph, &map_vars, false);
    let constrained = min_fill_order(&graph, &map_vars, true);
    let width = elimination::width(&net, &e, &unconstrained)?;
    let cwidth = elimination::width(&net, &e, &constrained)?;
    let ibound = matched_ibound(&net, &e, width);
    let mb = minibucket_bound(&net, &e, &sums, &map_vars, &constrained, ibound)?;

    Ok(BenchmarkRecord {
        instance: i,
        seed,
        n: config.nodes,
        connectivity: config.connectivity,
        map_vars: map_vars.len(),
        status: "bound".to_string(),
        t_find_s: None,
        t_finish_s: None,
        cwidth,
        nodes: 0,
        prunes_bound: 0,
        prunes_value: 0,
        bd_log10: bd.log10(),
        mb_log10: mb.log10(),
        map_log10: None,
    })
}

/// Mini-bucket complexity parameter matched to the jointree's width: the
/// variable count of the largest unconstrained elimination table, floored at
/// the largest restricted CPT scope so the partition is feasible.
pub fn matched_ibound(net: &BayesianNetwork, evidence: &Evidence, width: f64) -> usize {
    let required = net
        .cpts()
        .iter()
        .map(|c| c.scope().iter().filter(|v| evidence.get(**v).is_none()).count())
        .max()
        .unwrap_or(0);
    let from_width = if width < 0.0 { 1 } else { width.round() as usize + 1 };
    from_width.max(required)
}

/// Compare the jointree bound against the mini-bucket bound at a matched
/// complexity parameter, over a seeded corpus.
pub fn run_bound_comparison(config: &BoundComparisonConfig) -> Result<BoundComparisonReport, BenchError> {
    #[cfg(feature = "parallel")]
    let results: Vec<Result<BenchmarkRecord, BenchError>> =
        (0..config.instances).into_par_iter().map(|i| bound_instance(config, i)).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<BenchmarkRecord, BenchError>> =
        (0..config.instances).map(|i| bound_instance(config, i)).collect();

    let mut records = Vec::with_capacity(results.len());
    for r in results {
        records.push(r?);
    }
    let ratios: Vec<f64> = records
        .iter()
        .filter_map(|r| Some(r.mb_log10? - r.bd_log10?))
        .collect();
    let jointree_looser: Vec<usize> = records
        .iter()
        .filter(|r| match (r.mb_log10, r.bd_log10) {
            (Some(mb), Some(bd)) => bd > mb + 1e-9,
            _ => false,
        })
        .map(|r| r.instance)
        .collect();
    for &i in &jointree_looser {
        eprintln!("note: instance {i}: jointree bound looser than mini-bucket");
    }
    Ok(BoundComparisonReport {
        config: config.clone(),
        records,
        summary: BoundSummary { ratio_log10: stat_line(&ratios), jointree_looser },
    })
}

pub fn render_bound_table(report: &BoundComparisonReport) -> String {
    let mut out = String::new();
    out.push_str("instance  map_vars  cwidth  mb_log10  bd_log10  ratio_log10\n");
    for r in &report.records {
        let mb = r.mb_log10.unwrap_or(f64::NEG_INFINITY);
        let bd = r.bd_log10.unwrap_or(f64::NEG_INFINITY);
        out.push_str(&format!(
            "{:>8}  {:>8}  {:>6.1}  {:>8.2}  {:>8.2}  {:>11.2}\n",
            r.instance,
            r.map_vars,
            r.cwidth,
            mb,
            bd,
            mb - bd
        ));
    }
    let s = &report.summary.ratio_log10;
    out.push_str(&format!(
        "ratio log10: min {:.2}  median {:.2}  mean {:.2}  max {:.2}\n",
        s.min, s.median, s.mean, s.max
    ));
    if !report.summary.jointree_looser.is_empty() {
        out.push_str(&format!("jointree looser on: {:?}\n", report.summary.jointree_looser));
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverBenchmarkConfig {
    pub instances: usize,
    pub nodes: usize,
    pub connectivity: u32,
    pub cardinality: usize,
    pub seed: u64,
    /// Fixed MAP-set size; mutually exclusive with `state_space_log2`.
    pub map_count: Option<usize>,
    /// MAP state-space cap in bits, used when `map_count` is absent.
    pub state_space_log2: Option<f64>,
    /// Number of leaves observed; absent means all of them.
    pub evidence_leaves: Option<usize>,
    pub time_limit_s: f64,
    /// EXACT results with MAP state space at most 2^this are cross-checked
    /// against the brute-force oracle.
    pub verify_cap_log2: u32,
}

impl Default for SolverBenchmarkConfig {
    fn default() -> Self {
        SolverBenchmarkConfig {
            instances: 30,
            nodes: 60,
            connectivity: 10,
            cardinality: 2,
            seed: 11,
            map_count: Some(30),
            state_space_log2: None,
            evidence_leaves: None,
            time_limit_s: 60.0,
            verify_cap_log2: 20,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverSummary {
    pub instances: usize,
    pub exact: usize,
    pub timeout: usize,
    pub t_find_s: StatLine,
    pub t_finish_s: StatLine,
    pub cwidth: StatLine,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverBenchmarkReport {
    pub config: SolverBenchmarkConfig,
    pub records: Vec<BenchmarkRecord>,
    pub summary: SolverSummary,
}

/// Solve a seeded corpus under a per-instance time limit. Instances run
/// sequentially so wall-clock fields are not distorted by contention.
pub fn run_solver_benchmark(
    config: &SolverBenchmarkConfig,
) -> Result<SolverBenchmarkReport, BenchError> {
    let mut records = Vec::with_capacity(config.instances);
    for i in 0..config.instances {
        let seed = instance_seed(config.seed, i as u64);
        let spec = RandomNetSpec {
            nodes: config.nodes,
            connectivity: config.connectivity,
            seed,
            cardinality: config.cardinality,
        };
        let net = gen_random_network(&spec);
        let e = sample_leaf_evidence(
            &net,
            config.evidence_leaves.unwrap_or(usize::MAX),
            instance_seed(seed, 1),
        )?;
        let hidden = net.non_evidence_vars(&e);
        let map_vars = match (config.map_count, config.state_space_log2) {
            (Some(c), _) => select_map_vars(&net, &e, c.min(hidden.len()), instance_seed(seed, 2)),
            (None, Some(t)) => select_map_vars_by_state_space(&net, &e, t, instance_seed(seed, 2)),
            (None, None) => {
                select_map_vars(&net, &e, hidden.len().min(10), instance_seed(seed, 2))
            }
        };
        let opts = SolveOptions {
            time_limit: Some(Duration::from_secs_f64(config.time_limit_s)),
            ..SolveOptions::default()
        };
        let out = solve_map(&net, &e, &map_vars, &opts)?;

        let space_log2: f64 =
            map_vars.iter().map(|&v| (net.cardinality(v) as f64).log2()).sum();
        if out.status == SolveStatus::Exact && space_log2 <= f64::from(config.verify_cap_log2) {
            let oracle = brute_force_map(&net, &e, &map_vars)?;
            if !oracle.probability.rel_close(out.probability, 1e-9) {
                return Err(BenchError::OracleMismatch { instance: i });
            }
        }

        let graph = InteractionGraph::of_network(&net, &e);
        let unconstrained = min_fill_order(&graph, &map_vars, false);
        let constrained = min_fill_order(&graph, &map_vars, true);
        let width = elimination::width(&net, &e, &unconstrained)?;
        let ibound = matched_ibound(&net, &e, width);
        let sums: BTreeSet<VarId> = hidden.difference(&map_vars).copied().collect();
        let mb = minibucket_bound(&net, &e, &sums, &map_vars, &constrained, ibound)?;

        records.push(BenchmarkRecord {
            instance: i,
            seed,
            n: config.nodes,
            connectivity: config.connectivity,
            map_vars: map_vars.len(),
            status: match out.status {
                SolveStatus::Exact => "exact".to_string(),
                SolveStatus::Timeout => "timeout".to_string(),
            },
            t_find_s: Some(out.time_to_find.as_secs_f64()),
            t_finish_s: Some(out.time_total.as_secs_f64()),
            cwidth: out.constrained_width,
            nodes: out.counters.nodes,
            prunes_bound: out.counters.prunes_bound,
            prunes_value: out.counters.prunes_value,
            bd_log10: out.root_bound.log10(),
            mb_log10: mb.log10(),
            map_log10: out.probability.log10(),
        });
    }
    let exact = records.iter().filter(|r| r.status == "exact").count();
    let t_find: Vec<f64> = records.iter().filter_map(|r| r.t_find_s).collect();
    let t_finish: Vec<f64> = records.iter().filter_map(|r| r.t_finish_s).collect();
    let cwidths: Vec<f64> = records.iter().map(|r| r.cwidth).collect();
    Ok(SolverBenchmarkReport {
        config: config.clone(),
        summary: SolverSummary {
            instances: records.len(),
            exact,
            timeout: records.len() - exact,
            t_find_s: stat_line(&t_find),
            t_finish_s: stat_line(&t_finish),
            cwidth: stat_line(&cwidths),
        },
        records,
    })
}

pub fn render_solver_table(report: &SolverBenchmarkReport) -> String {
    let mut out = String::new();
    out.push_str(
        "instance  status   t_find_s  t_finish_s  cwidth     nodes  prunes_bound  prunes_value  map_log10\n",
    );
    for r in &report.records {
        out.push_str(&format!(
            "{:>8}  {:<7}  {:>8.3}  {:>10.3}  {:>6.1}  {:>8}  {:>12}  {:>12}  {:>9.3}\n",
            r.instance,
            r.status,
            r.t_find_s.unwrap_or(0.0),
            r.t_finish_s.unwrap_or(0.0),
            r.cwidth,
            r.nodes,
            r.prunes_bound,
            r.prunes_value,
            r.map_log10.unwrap_or(f64::NEG_INFINITY),
        ));
    }
    let s = &report.summary;
    out.push_str(&format!("solved {} of {} within the time limit\n", s.exact, s.instances));
    for (name, line) in [
        ("time to find (s)", &s.t_find_s),
        ("time to complete (s)", &s.t_finish_s),
        ("constrained treewidth", &s.cwidth),
    ] {
        out.push_str(&format!(
            "{name}: min {:.3}  median {:.3}  mean {:.3}  max {:.3}\n",
            line.min, line.median, line.mean, line.max
        ));
    }
    out
}
