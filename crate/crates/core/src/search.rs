//! Depth-first branch-and-bound MAP solver.
//!
//! The solver builds a jointree from an unconstrained min-fill order, promotes
//! maximization variables toward the root within the tree's own size budget,
//! and then searches over MAP assignments depth first. At every node the
//! current partial assignment is encoded as indicator masks in the
//! propagation state, so the root value after an inward pass is an upper
//! bound on every completion; the search prunes when that bound cannot beat
//! the incumbent. Per-state bounds drive variable selection, child ordering,
//! and the elimination of states that are provably no better than the
//! incumbent. An initial incumbent comes from a greedy pass over the bounds
//! followed by best-improvement hill climbing on exact scores, which makes
//! the solver an anytime procedure: interrupting it still yields a complete
//! assignment at least as good as that initialization.

use crate::elimination::{self, min_fill_order, ElimError, InteractionGraph};
use crate::jointree::split::{split_prime_factors, SplitMap};
use crate::jointree::{Jointree, JointreeError};
use crate::model::{BayesianNetwork, Evidence, Instantiation, ModelError, ScaledValue, VarId};
use crate::propagation::{AssertError, PropagationState};
use std::collections::BTreeSet;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("MAP variable {var} is fixed by evidence")]
    MapOverlapsEvidence { var: VarId },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Elim(#[from] ElimError),
    #[error(transparent)]
    Tree(#[from] JointreeError),
    #[error(transparent)]
    Assert(#[from] AssertError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Pull maximization variables toward the root within the size budget.
    pub promote: bool,
    /// Replace composite-cardinality MAP variables by prime-factor digits.
    pub split: bool,
    /// Exclude states whose bound cannot beat the incumbent.
    pub value_elimination: bool,
    /// Deadline for the search phase; initialization always completes.
    pub time_limit: Option<Duration>,
    /// Recompute every message from scratch on each pass (for tests).
    pub verify_propagation: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            promote: true,
            split: true,
            value_elimination: true,
            time_limit: None,
            verify_propagation: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Exact,
    Timeout,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub nodes: u64,
    pub prunes_bound: u64,
    pub prunes_value: u64,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    /// Best assignment found, over the original variables.
    pub solution: Instantiation,
    /// Joint probability of the solution with the evidence.
    pub probability: ScaledValue,
    pub status: SolveStatus,
    pub counters: Counters,
    /// Score of the greedy-plus-hill-climbing incumbent the search started from.
    pub init_probability: ScaledValue,
    /// Upper bound at the root before any branching.
    pub root_bound: ScaledValue,
    /// Elapsed time when the returned solution was first found.
    pub time_to_find: Duration,
    pub time_total: Duration,
    /// Log2 table width of the unconstrained elimination order.
    pub width: f64,
    /// Log2 table width of the order with maximization variables last.
    pub constrained_width: f64,
}

/// Per-variable branching score: the best retained state bound and the sum
/// of all retained state bounds.
#[derive(Clone, Copy, Debug)]
pub struct VariableScore {
    pub var: VarId,
    pub best: ScaledValue,
    pub total: ScaledValue,
}

/// Pick the variable maximizing best/total, the share of its bound mass
/// concentrated in one state. Compared by cross multiplication to stay
/// exact; ties go to the lowest variable id.
pub fn select_variable(scores: &[VariableScore]) -> Option<VarId> {
    let mut it = scores.iter();
    let mut winner = *it.next()?;
    for &c in it {
        let lhs = c.best.mul(winner.total);
        let rhs = winner.best.mul(c.total);
        if lhs > rhs || (lhs == rhs && c.var < winner.var) {
            winner = c;
        }
    }
    Some(winner.var)
}

struct Prepared {
    work_net: BayesianNetwork,
    work_e: Evidence,
    work_map: BTreeSet<VarId>,
    smap: Option<SplitMap>,
    graph: InteractionGraph,
    width: f64,
    constrained_width: f64,
    prop: PropagationState,
}

fn prepare(
    net: &BayesianNetwork,
    evidence: &Evidence,
    map_vars: &BTreeSet<VarId>,
    options: &SolveOptions,
) -> Result<Prepared, SolveError> {
    evidence.validate_for(net)?;
    for &v in map_vars {
        if v >= net.num_variables() {
            return Err(ModelError::UnknownVariable { var: v, count: net.num_variables() }.into());
        }
        if evidence.get(v).is_some() {
            return Err(SolveError::MapOverlapsEvidence { var: v });
        }
    }

    let (work_net, smap) = if options.split {
        let (n, m) = split_prime_factors(net, map_vars)?;
        (n, Some(m))
    } else {
        (net.clone(), None)
    };
    let (work_e, work_map) = match &smap {
        Some(m) => (m.translate_evidence(evidence), m.translate_var_set(map_vars)),
        None => (evidence.clone(), map_vars.clone()),
    };

    let graph = InteractionGraph::of_network(&work_net, &work_e);
    let unconstrained = min_fill_order(&graph, &work_map, false);
    let constrained = min_fill_order(&graph, &work_map, true);
    let width = elimination::width(&work_net, &work_e, &unconstrained)?;
    let constrained_width = elimination::width(&work_net, &work_e, &constrained)?;

    let mut tree = Jointree::build(&work_net, &work_e, &unconstrained)?;
    let root = tree.root_with_most_max_vars(&work_map);
    if options.promote {
        let budget = tree.size_budget();
        tree.promote(root, &work_map, budget);
    }
    let mut prop = PropagationState::new(tree, root, work_map.clone());
    prop.set_verify_mode(options.verify_propagation);

    Ok(Prepared { work_net, work_e, work_map, smap, graph, width, constrained_width, prop })
}

/// Root upper bound on max_m Pr(m, e), without searching.
pub fn jointree_bound(
    net: &BayesianNetwork,
    evidence: &Evidence,
    map_vars: &BTreeSet<VarId>,
    options: &SolveOptions,
) -> Result<ScaledValue, SolveError> {
    let mut prep = prepare(net, evidence, map_vars, options)?;
    Ok(prep.prop.inward_pass())
}

struct SearchCtx<'a> {
    prop: &'a mut PropagationState,
    map_vars: &'a [VarId],
    counters: Counters,
    best_score: ScaledValue,
    best_m: Instantiation,
    improved_at: Duration,
    start: Instant,
    deadline: Option<Instant>,
    value_elim: bool,
    timed_out: bool,
}

fn dfs(cx: &mut SearchCtx) -> Result<(), SolveError> {
    if let Some(d) = cx.deadline {
        if Instant::now() >= d {
            cx.timed_out = true;
            return Ok(());
        }
    }
    cx.counters.nodes += 1;
    let bound = cx.prop.inward_pass();
    if bound <= cx.best_score {
        cx.counters.prunes_bound += 1;
        return Ok(());
    }

    let unassigned: Vec<VarId> = cx
        .map_vars
        .iter()
        .copied()
        .filter(|&v| cx.prop.allowed_states(v).len() > 1)
        .collect();
    if unassigned.is_empty() {
        // every maximization variable is pinned, so the bound is the exact
        // joint of this assignment, and it beats the incumbent
        cx.best_score = bound;
        cx.best_m = cx
            .map_vars
            .iter()
            .map(|&v| (v, cx.prop.allowed_states(v)[0]))
            .collect();
        cx.improved_at = cx.start.elapsed();
        return Ok(());
    }

    let bounds = cx.prop.value_bounds_for(&unassigned);
    let mut retained: Vec<(VarId, Vec<(usize, ScaledValue)>)> = Vec::with_capacity(bounds.len());
    for vb in &bounds {
        let keep: Vec<(usize, ScaledValue)> = vb
            .bounds
            .iter()
            .enumerate()
            .filter(|&(s, b)| cx.prop.is_allowed(vb.var, s) && *b > cx.best_score)
            .map(|(s, &b)| (s, b))
            .collect();
        if keep.is_empty() {
            // no state of this variable can beat the incumbent
            cx.counters.prunes_bound += 1;
            return Ok(());
        }
        retained.push((vb.var, keep));
    }

    let mut elim_tokens = Vec::new();
    if cx.value_elim {
        for (vb, (_, keep)) in bounds.iter().zip(&retained) {
            if keep.len() == cx.prop.allowed_states(vb.var).len() {
                continue;
            }
            for (s, b) in vb.bounds.iter().enumerate() {
                if cx.prop.is_allowed(vb.var, s) && *b <= cx.best_score {
                    elim_tokens.push(cx.prop.assert_not_equal(vb.var, s)?);
                    cx.counters.prunes_value += 1;
                }
            }
        }
    }

    let pick = {
        let scores: Vec<VariableScore> = retained
            .iter()
            .map(|(v, keep)| {
                let mut best = ScaledValue::zero();
                let mut total = ScaledValue::zero();
                for &(_, b) in keep {
                    best = best.max(b);
                    total = total.add(b);
                }
                VariableScore { var: *v, best, total }
            })
            .collect();
        select_variable(&scores).expect("at least one variable is unassigned")
    };
    let mut children = retained
        .into_iter()
        .find(|(v, _)| *v == pick)
        .map(|(_, keep)| keep)
        .expect("picked variable is retained");
    children.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    for (s, b) in children {
        if let Some(d) = cx.deadline {
            if Instant::now() >= d {
                cx.timed_out = true;
                break;
            }
        }
        // the incumbent may have improved since the bounds were taken
        if b <= cx.best_score {
            cx.counters.prunes_bound += 1;
            continue;
        }
        let t = cx.prop.assert_equal(pick, s)?;
        dfs(cx)?;
        cx.prop.retract(t)?;
        if cx.timed_out {
            break;
        }
    }
    for t in elim_tokens.into_iter().rev() {
        cx.prop.retract(t)?;
    }
    Ok(())
}

/// Exact MAP over `map_vars` given `evidence`, by depth-first
/// branch-and-bound under jointree bounds.
pub fn solve_map(
    net: &BayesianNetwork,
    evidence: &Evidence,
    map_vars: &BTreeSet<VarId>,
    options: &SolveOptions,
) -> Result<SolveOutcome, SolveError> {
    let start = Instant::now();
    let deadline = options.time_limit.map(|d| start + d);
    let mut prep = prepare(net, evidence, map_vars, options)?;
    let root_bound = prep.prop.inward_pass();

    if root_bound.is_zero() {
        // the evidence itself has probability zero, so every completion is
        // optimal; return the all-zeros assignment
        let solution: Instantiation = map_vars.iter().map(|&v| (v, 0)).collect();
        let elapsed = start.elapsed();
        return Ok(SolveOutcome {
            solution,
            probability: ScaledValue::zero(),
            status: SolveStatus::Exact,
            counters: Counters::default(),
            init_probability: ScaledValue::zero(),
            root_bound,
            time_to_find: elapsed,
            time_total: start.elapsed(),
            width: prep.width,
            constrained_width: prep.constrained_width,
        });
    }
    if prep.work_map.is_empty() {
        // no maximization variables: the bound is exactly Pr(e)
        let elapsed = start.elapsed();
        return Ok(SolveOutcome {
            solution: Instantiation::new(),
            probability: root_bound,
            status: SolveStatus::Exact,
            counters: Counters::default(),
            init_probability: root_bound,
            root_bound,
            time_to_find: elapsed,
            time_total: start.elapsed(),
            width: prep.width,
            constrained_width: prep.constrained_width,
        });
    }

    let map_sorted: Vec<VarId> = prep.work_map.iter().copied().collect();
    let sum_vars: BTreeSet<VarId> = prep
        .work_net
        .non_evidence_vars(&prep.work_e)
        .difference(&prep.work_map)
        .copied()
        .collect();
    let sum_order = min_fill_order(&prep.graph.removing(&prep.work_map), &BTreeSet::new(), false);
    let score = |m: &Instantiation| -> Result<ScaledValue, SolveError> {
        let e2 = prep.work_e.with_instantiation(m)?;
        Ok(elimination::eliminate(&prep.work_net, &e2, &sum_vars, &BTreeSet::new(), &sum_order)?
            .value)
    };

    // greedy initialization: fix variables in order of decreasing bound
    // spread, taking each variable's best-looking state under the bounds
    // that reflect the choices made so far
    let initial = prep.prop.value_bounds_for(&map_sorted);
    let mut ranked: Vec<(ScaledValue, VarId)> = initial
        .iter()
        .map(|vb| {
            let mut lo = vb.bounds[0];
            let mut hi = vb.bounds[0];
            for &b in &vb.bounds[1..] {
                if b < lo {
                    lo = b;
                }
                hi = hi.max(b);
            }
            (hi.sub_clamped(lo), vb.var)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut greedy = Instantiation::new();
    let mut init_tokens = Vec::with_capacity(ranked.len());
    for &(_, v) in &ranked {
        let vb = prep.prop.value_bounds(v);
        let mut pick: Option<(usize, ScaledValue)> = None;
        for (s, &b) in vb.bounds.iter().enumerate() {
            if prep.prop.is_allowed(v, s) && pick.map_or(true, |(_, pb)| b > pb) {
                pick = Some((s, b));
            }
        }
        let (s, _) = pick.expect("every variable has an allowed state");
        init_tokens.push(prep.prop.assert_equal(v, s)?);
        greedy.insert(v, s);
    }
    for t in init_tokens.into_iter().rev() {
        prep.prop.retract(t)?;
    }

    // best-improvement hill climbing on exact joint scores
    let mut best_m = greedy;
    let mut best_score = score(&best_m)?;
    for _ in 0..8 {
        let mut cand: Option<(ScaledValue, VarId, usize)> = None;
        for &v in &map_sorted {
            let cur = best_m[&v];
            for s in 0..prep.work_net.cardinality(v) {
                if s == cur {
                    continue;
                }
                let mut m2 = best_m.clone();
                m2.insert(v, s);
                let val = score(&m2)?;
                if val > best_score && cand.map_or(true, |(cb, _, _)| val > cb) {
                    cand = Some((val, v, s));
                }
            }
        }
        match cand {
            Some((val, v, s)) => {
                best_m.insert(v, s);
                best_score = val;
            }
            None => break,
        }
    }
    let init_probability = best_score;

    let mut cx = SearchCtx {
        prop: &mut prep.prop,
        map_vars: &map_sorted,
        counters: Counters::default(),
        best_score,
        best_m,
        improved_at: start.elapsed(),
        start,
        deadline,
        value_elim: options.value_elimination,
        timed_out: false,
    };
    dfs(&mut cx)?;

    let status = if cx.timed_out { SolveStatus::Timeout } else { SolveStatus::Exact };
    let probability = cx.best_score;
    let time_to_find = cx.improved_at;
    let counters = cx.counters;
    let work_solution = cx.best_m;
    let solution = match &prep.smap {
        Some(m) => m.restore_instantiation(&work_solution),
        None => work_solution,
    };

    Ok(SolveOutcome {
        solution,
        probability,
        status,
        counters,
        init_probability,
        root_bound,
        time_to_find,
        time_total: start.elapsed(),
        width: prep.width,
        constrained_width: prep.constrained_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_random_network, RandomNetSpec};
    use crate::model::{Potential, Variable};
    use crate::testutil::{enum_joint, enum_map, net_ab};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_solution_achieves(
        net: &BayesianNetwork,
        e: &Evidence,
        out: &SolveOutcome,
        map_vars: &BTreeSet<VarId>,
    ) {
        assert_eq!(
            out.solution.keys().copied().collect::<BTreeSet<_>>(),
            *map_vars,
            "solution must assign exactly the MAP variables"
        );
        let mut fixed: Instantiation = e.iter().collect();
        fixed.extend(out.solution.iter().map(|(&k, &v)| (k, v)));
        let achieved = enum_joint(net, &fixed);
        assert!(
            achieved.rel_close(out.probability, 1e-9),
            "reported {} but the solution achieves {}",
            out.probability,
            achieved
        );
    }

    #[test]
    fn two_node_maps_by_hand() {
        let net = net_ab();
        let opts = SolveOptions::default();
        let none = Evidence::new();

        let both = solve_map(&net, &none, &BTreeSet::from([0, 1]), &opts).unwrap();
        assert_eq!(both.status, SolveStatus::Exact);
        assert!(both.probability.rel_close(ScaledValue::from_f64(0.49), 1e-12));
        assert_eq!(both.solution, Instantiation::from([(0, 0), (1, 0)]));

        let just_a = solve_map(&net, &none, &BTreeSet::from([0]), &opts).unwrap();
        assert!(just_a.probability.rel_close(ScaledValue::from_f64(0.7), 1e-12));
        assert_eq!(just_a.solution, Instantiation::from([(0, 0)]));

        let just_b = solve_map(&net, &none, &BTreeSet::from([1]), &opts).unwrap();
        assert!(just_b.probability.rel_close(ScaledValue::from_f64(0.55), 1e-12));
        assert_eq!(just_b.solution, Instantiation::from([(1, 0)]));

        let e = Evidence::from_pairs([(1, 1)]).unwrap();
        let given_b = solve_map(&net, &e, &BTreeSet::from([0]), &opts).unwrap();
        assert!(given_b.probability.rel_close(ScaledValue::from_f64(0.24), 1e-12));
        assert_eq!(given_b.solution, Instantiation::from([(0, 1)]));

        let nothing = solve_map(&net, &e, &BTreeSet::new(), &opts).unwrap();
        assert!(nothing.probability.rel_close(ScaledValue::from_f64(0.45), 1e-12));
        assert!(nothing.solution.is_empty());
    }

    #[test]
    fn matches_enumeration_on_random_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ea7c4);
        let opts = SolveOptions::default();
        for trial in 0..40u64 {
            let spec = RandomNetSpec {
                nodes: 4 + (trial as usize % 7),
                connectivity: 4,
                seed: 0xbb5_0000 + trial,
                cardinality: if trial % 4 == 0 { 3 } else { 2 },
            };
            let net = gen_random_network(&spec);
            let n = net.num_variables();
            let mut e = Evidence::new();
            if trial % 3 != 0 {
                let v = n - 1;
                e.assign(v, rng.gen_range(0..net.cardinality(v))).unwrap();
            }
            if enum_joint(&net, &e.iter().collect()).is_zero() {
                continue;
            }
            let hidden: Vec<VarId> = net.non_evidence_vars(&e).into_iter().collect();
            let take = 1 + rng.gen_range(0..hidden.len());
            let mut pool = hidden;
            pool.shuffle(&mut rng);
            let map_vars: BTreeSet<VarId> = pool.into_iter().take(take).collect();

            let (expect, _) = enum_map(&net, &e, &map_vars);
            let out = solve_map(&net, &e, &map_vars, &opts).unwrap();
            assert_eq!(out.status, SolveStatus::Exact, "trial {trial}");
            assert!(
                out.probability.rel_close(expect, 1e-9),
                "trial {trial}: solver {} vs enumeration {}",
                out.probability,
                expect
            );
            assert_solution_achieves(&net, &e, &out, &map_vars);
            assert!(out.probability.le_within(out.root_bound, 1e-9), "trial {trial}");
            assert!(out.init_probability.le_within(out.probability, 1e-9), "trial {trial}");
            assert!(out.time_to_find <= out.time_total, "trial {trial}");
        }
    }

    #[test]
    fn optimizations_do_not_change_the_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0f1a6);
        for trial in 0..12u64 {
            let spec = RandomNetSpec {
                nodes: 7,
                connectivity: 4,
                seed: 0x70661e + trial,
                cardinality: if trial % 2 == 0 { 2 } else { 6 },
            };
            let net = gen_random_network(&spec);
            let e = Evidence::from_pairs([(6, rng.gen_range(0..net.cardinality(6)))]).unwrap();
            if enum_joint(&net, &e.iter().collect()).is_zero() {
                continue;
            }
            let map_vars: BTreeSet<VarId> = [0, 2, 4].into_iter().collect();
            let (expect, _) = enum_map(&net, &e, &map_vars);
            for mask in 0..8u32 {
                let opts = SolveOptions {
                    promote: mask & 1 != 0,
                    split: mask & 2 != 0,
                    value_elimination: mask & 4 != 0,
                    ..SolveOptions::default()
                };
                let out = solve_map(&net, &e, &map_vars, &opts).unwrap();
                assert_eq!(out.status, SolveStatus::Exact, "trial {trial} mask {mask}");
                assert!(
                    out.probability.rel_close(expect, 1e-9),
                    "trial {trial} mask {mask}: {} vs {}",
                    out.probability,
                    expect
                );
                assert_solution_achieves(&net, &e, &out, &map_vars);
            }
        }
    }

    #[test]
    fn impossible_evidence_yields_a_zero_exact_outcome() {
        let vars = vec![
            Variable { id: 0, name: "A".into(), cardinality: 2 },
            Variable { id: 1, name: "B".into(), cardinality: 2 },
        ];
        let cpts = vec![
            Potential::new(vec![(0, 2)], vec![1.0, 0.0]).unwrap(),
            Potential::new(vec![(0, 2), (1, 2)], vec![0.5, 0.5, 0.5, 0.5]).unwrap(),
        ];
        let net = BayesianNetwork::new(vars, vec![vec![], vec![0]], cpts).unwrap();
        let e = Evidence::from_pairs([(0, 1)]).unwrap();
        let out = solve_map(&net, &e, &BTreeSet::from([1]), &SolveOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Exact);
        assert!(out.probability.is_zero());
        assert!(out.root_bound.is_zero());
        assert_eq!(out.solution, Instantiation::from([(1, 0)]));
    }

    #[test]
    fn a_zero_deadline_still_returns_the_initialization() {
        let spec = RandomNetSpec { nodes: 24, connectivity: 5, seed: 0xdead11, cardinality: 2 };
        let net = gen_random_network(&spec);
        let e = Evidence::from_pairs([(23, 0)]).unwrap();
        let map_vars: BTreeSet<VarId> = (0..12).collect();
        let opts = SolveOptions {
            time_limit: Some(Duration::from_millis(0)),
            ..SolveOptions::default()
        };
        let out = solve_map(&net, &e, &map_vars, &opts).unwrap();
        assert_eq!(out.status, SolveStatus::Timeout);
        assert_eq!(out.solution.len(), map_vars.len());
        assert_eq!(out.probability, out.init_probability);

        // the incumbent really achieves its reported probability
        let sums: BTreeSet<VarId> =
            net.non_evidence_vars(&e).difference(&map_vars).copied().collect();
        let e2 = e.with_instantiation(&out.solution).unwrap();
        let graph = InteractionGraph::of_network(&net, &e2);
        let order = min_fill_order(&graph, &BTreeSet::new(), false);
        let achieved =
            elimination::eliminate(&net, &e2, &sums, &BTreeSet::new(), &order).unwrap().value;
        assert!(achieved.rel_close(out.probability, 1e-12));
    }

    #[test]
    fn composite_map_variables_solve_identically_with_and_without_splitting() {
        for trial in 0..6u64 {
            let spec = RandomNetSpec {
                nodes: 6,
                connectivity: 3,
                seed: 0x5b117 + trial,
                cardinality: 6,
            };
            let net = gen_random_network(&spec);
            let e = Evidence::from_pairs([(5, trial as usize % 6)]).unwrap();
            if enum_joint(&net, &e.iter().collect()).is_zero() {
                continue;
            }
            let map_vars = BTreeSet::from([0, 3]);
            let (expect, _) = enum_map(&net, &e, &map_vars);
            for split in [false, true] {
                let opts = SolveOptions { split, ..SolveOptions::default() };
                let out = solve_map(&net, &e, &map_vars, &opts).unwrap();
                assert!(
                    out.probability.rel_close(expect, 1e-9),
                    "trial {trial} split {split}: {} vs {}",
                    out.probability,
                    expect
                );
                for (&v, &s) in &out.solution {
                    assert!(s < net.cardinality(v), "solution must use original states");
                }
                assert_solution_achieves(&net, &e, &out, &map_vars);
            }
        }
    }

    #[test]
    fn jointree_bound_sandwiches_the_map_value() {
        let net = net_ab();
        let e = Evidence::from_pairs([(1, 1)]).unwrap();
        let b = jointree_bound(&net, &e, &BTreeSet::from([0]), &SolveOptions::default()).unwrap();
        // one max variable over two states, exact tree: bound equals the MAP
        assert!(b.rel_close(ScaledValue::from_f64(0.24), 1e-12), "{b}");
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let net = net_ab();
        let e = Evidence::from_pairs([(1, 0)]).unwrap();
        let err = solve_map(&net, &e, &BTreeSet::from([1]), &SolveOptions::default()).unwrap_err();
        assert_eq!(err, SolveError::MapOverlapsEvidence { var: 1 });
        let err =
            solve_map(&net, &e, &BTreeSet::from([9]), &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::Model(ModelError::UnknownVariable { var: 9, .. })));
    }

    #[test]
    fn variable_selection_prefers_concentrated_mass() {
        let sv = |x: f64| ScaledValue::from_f64(x);
        let scores = vec![
            VariableScore { var: 0, best: sv(0.3), total: sv(0.4) },
            VariableScore { var: 1, best: sv(0.2), total: sv(0.25) },
        ];
        // 0.2/0.25 = 0.8 beats 0.3/0.4 = 0.75
        assert_eq!(select_variable(&scores), Some(1));

        let tied = vec![
            VariableScore { var: 3, best: sv(0.5), total: sv(1.0) },
            VariableScore { var: 1, best: sv(0.25), total: sv(0.5) },
        ];
        assert_eq!(select_variable(&tied), Some(1));
        assert_eq!(select_variable(&[]), None);
    }
}
