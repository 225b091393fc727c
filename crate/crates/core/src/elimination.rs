//! Variable elimination with mixed summation and maximization.
//!
//! An [`EliminationOrder`] assigns every eliminated variable a [`Role`]. When
//! every summation variable precedes every maximization variable the order is
//! exact for MAP; any other order still yields a sound upper bound, because a
//! maximization pushed inside a summation can only increase the result. An
//! invalid order can be repaired by repeatedly swapping an adjacent
//! maximization/summation pair, and each swap can only tighten the value.

use crate::model::{
    strides, BayesianNetwork, Evidence, Instantiation, ModelError, Potential, ScaledValue, VarId,
};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Sum,
    Max,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ElimError {
    #[error("variable {var} appears more than once in the elimination order")]
    DuplicateVariable { var: VarId },
    #[error("variable {var} must be eliminated but is missing from the order")]
    MissingVariable { var: VarId },
    #[error("variable {var} must not be eliminated here")]
    UnexpectedVariable { var: VarId },
    #[error("variable {var} has conflicting roles")]
    RoleMismatch { var: VarId },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A sequence of (variable, role) elimination steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationOrder {
    steps: Vec<(VarId, Role)>,
}

impl EliminationOrder {
    pub fn new(steps: Vec<(VarId, Role)>) -> Result<Self, ElimError> {
        let mut seen = BTreeSet::new();
        for &(v, _) in &steps {
            if !seen.insert(v) {
                return Err(ElimError::DuplicateVariable { var: v });
            }
        }
        Ok(EliminationOrder { steps })
    }

    /// Builds an order from a plain sequence, assigning [`Role::Max`] to the
    /// given variables and [`Role::Sum`] to the rest.
    pub fn from_parts(sequence: &[VarId], max_vars: &BTreeSet<VarId>) -> Result<Self, ElimError> {
        let steps = sequence
            .iter()
            .map(|&v| (v, if max_vars.contains(&v) { Role::Max } else { Role::Sum }))
            .collect();
        Self::new(steps)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[(VarId, Role)] {
        &self.steps
    }

    pub fn sequence(&self) -> Vec<VarId> {
        self.steps.iter().map(|&(v, _)| v).collect()
    }

    pub fn role_of(&self, var: VarId) -> Option<Role> {
        self.steps.iter().find(|&&(v, _)| v == var).map(|&(_, r)| r)
    }

    /// True when no maximization step precedes a summation step.
    pub fn is_valid_map_order(&self) -> bool {
        let mut seen_max = false;
        for &(_, role) in &self.steps {
            match role {
                Role::Max => seen_max = true,
                Role::Sum if seen_max => return false,
                Role::Sum => {}
            }
        }
        true
    }

    /// The stable partition with all summation steps first. Equal to the end
    /// of [`repair_chain`](Self::repair_chain).
    pub fn repaired(&self) -> EliminationOrder {
        let mut steps: Vec<(VarId, Role)> =
            self.steps.iter().copied().filter(|&(_, r)| r == Role::Sum).collect();
        steps.extend(self.steps.iter().copied().filter(|&(_, r)| r == Role::Max));
        EliminationOrder { steps }
    }

    /// Repairs the order one adjacent swap at a time, always swapping the
    /// leftmost maximization step that directly precedes a summation step.
    /// Returns the whole chain starting with `self`; every consecutive pair
    /// differs by one swap and the last entry is a valid MAP order.
    pub fn repair_chain(&self) -> Vec<EliminationOrder> {
        let mut chain = vec![self.clone()];
        let mut cur = self.steps.clone();
        loop {
            let swap = (0..cur.len().saturating_sub(1))
                .find(|&i| cur[i].1 == Role::Max && cur[i + 1].1 == Role::Sum);
            match swap {
                Some(i) => {
                    cur.swap(i, i + 1);
                    chain.push(EliminationOrder { steps: cur.clone() });
                }
                None => return chain,
            }
        }
    }
}

/// Undirected graph connecting variables that share a potential scope.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InteractionGraph {
    adj: BTreeMap<VarId, BTreeSet<VarId>>,
}

impl InteractionGraph {
    /// Graph over the given vertices where every scope forms a clique.
    /// Vertices missing from every scope stay isolated.
    pub fn from_scopes(vertices: impl IntoIterator<Item = VarId>, scopes: &[Vec<VarId>]) -> Self {
        let mut adj: BTreeMap<VarId, BTreeSet<VarId>> =
            vertices.into_iter().map(|v| (v, BTreeSet::new())).collect();
        for scope in scopes {
            for (i, &a) in scope.iter().enumerate() {
                for &b in &scope[i + 1..] {
                    if a != b {
                        adj.entry(a).or_default().insert(b);
                        adj.entry(b).or_default().insert(a);
                    }
                }
            }
        }
        InteractionGraph { adj }
    }

    /// Graph of the network restricted by evidence: observed variables drop
    /// out of every scope and are not vertices.
    pub fn of_network(net: &BayesianNetwork, evidence: &Evidence) -> Self {
        let scopes: Vec<Vec<VarId>> = net
            .cpts()
            .iter()
            .map(|cpt| cpt.scope().iter().copied().filter(|&v| !evidence.contains(v)).collect())
            .collect();
        Self::from_scopes(net.non_evidence_vars(evidence), &scopes)
    }

    /// The induced subgraph with the given vertices removed.
    pub fn removing(&self, drop: &BTreeSet<VarId>) -> Self {
        let adj = self
            .adj
            .iter()
            .filter(|(v, _)| !drop.contains(v))
            .map(|(&v, nb)| (v, nb.iter().copied().filter(|u| !drop.contains(u)).collect()))
            .collect();
        InteractionGraph { adj }
    }

    pub fn neighbors(&self, v: VarId) -> Option<&BTreeSet<VarId>> {
        self.adj.get(&v)
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.adj.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }
}

/// Greedy minimum-fill elimination order; ties go to the lowest variable id.
/// With `constrained` set, summation variables are exhausted before any
/// maximization variable, which makes the result a valid MAP order.
pub fn min_fill_order(
    graph: &InteractionGraph,
    max_vars: &BTreeSet<VarId>,
    constrained: bool,
) -> EliminationOrder {
    let mut adj = graph.adj.clone();
    let mut steps = Vec::with_capacity(adj.len());
    while !adj.is_empty() {
        let sums_remain = constrained && adj.keys().any(|v| !max_vars.contains(v));
        let mut best: Option<(usize, VarId)> = None;
        for (&v, nb) in &adj {
            if sums_remain && max_vars.contains(&v) {
                continue;
            }
            let nbv: Vec<VarId> = nb.iter().copied().collect();
            let mut fill = 0usize;
            for i in 0..nbv.len() {
                for j in i + 1..nbv.len() {
                    if !adj[&nbv[i]].contains(&nbv[j]) {
                        fill += 1;
                    }
                }
            }
            if best.map_or(true, |(bf, _)| fill < bf) {
                best = Some((fill, v));
            }
        }
        let (_, v) = best.expect("candidate set is nonempty");
        let nb: Vec<VarId> = adj.remove(&v).expect("v is a vertex").into_iter().collect();
        for &a in &nb {
            adj.get_mut(&a).expect("neighbor is a vertex").remove(&v);
        }
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                adj.get_mut(&nb[i]).unwrap().insert(nb[j]);
                adj.get_mut(&nb[j]).unwrap().insert(nb[i]);
            }
        }
        let role = if max_vars.contains(&v) { Role::Max } else { Role::Sum };
        steps.push((v, role));
    }
    EliminationOrder { steps }
}

/// Width of an order on a network under evidence, measured as the base-2 log
/// of the largest intermediate table minus one. On all-binary networks this
/// equals the classical induced width. An empty order has width -1.
pub fn width(
    net: &BayesianNetwork,
    evidence: &Evidence,
    order: &EliminationOrder,
) -> Result<f64, ElimError> {
    evidence.validate_for(net)?;
    let hidden = net.non_evidence_vars(evidence);
    check_same_vars(&hidden, order)?;
    let mut pool: Vec<BTreeSet<VarId>> = net
        .cpts()
        .iter()
        .map(|cpt| cpt.scope().iter().copied().filter(|v| hidden.contains(v)).collect())
        .filter(|s: &BTreeSet<VarId>| !s.is_empty())
        .collect();
    let mut max_log2 = f64::NEG_INFINITY;
    for &(v, _) in order.steps() {
        let mut psi = BTreeSet::from([v]);
        let mut rest = Vec::with_capacity(pool.len());
        for s in pool {
            if s.contains(&v) {
                psi.extend(s);
            } else {
                rest.push(s);
            }
        }
        let lg: f64 = psi.iter().map(|&u| (net.cardinality(u) as f64).log2()).sum();
        max_log2 = max_log2.max(lg);
        psi.remove(&v);
        if !psi.is_empty() {
            rest.push(psi);
        }
        pool = rest;
    }
    Ok(if order.is_empty() { -1.0 } else { max_log2 - 1.0 })
}

/// Result of one elimination run.
#[derive(Clone, Debug)]
pub struct EliminationResult {
    pub value: ScaledValue,
    /// Base-2 log of the largest table built, minus one.
    pub width: f64,
    /// Maximizing assignment recovered by back-substitution. Present whenever
    /// there are maximization variables and the value is positive; exact for
    /// valid MAP orders, a heuristic completion otherwise.
    pub solution: Option<Instantiation>,
    pub used_valid_order: bool,
}

pub(crate) fn validate_elimination_problem(
    net: &BayesianNetwork,
    evidence: &Evidence,
    sums: &BTreeSet<VarId>,
    maxes: &BTreeSet<VarId>,
    order: &EliminationOrder,
) -> Result<(), ElimError> {
    evidence.validate_for(net)?;
    if let Some(&v) = sums.intersection(maxes).next() {
        return Err(ElimError::RoleMismatch { var: v });
    }
    for &v in sums.iter().chain(maxes) {
        if v >= net.num_variables() {
            return Err(ModelError::UnknownVariable { var: v, count: net.num_variables() }.into());
        }
        if evidence.contains(v) {
            return Err(ElimError::UnexpectedVariable { var: v });
        }
    }
    for v in net.non_evidence_vars(evidence) {
        if !sums.contains(&v) && !maxes.contains(&v) {
            return Err(ElimError::MissingVariable { var: v });
        }
    }
    let mut in_order = BTreeSet::new();
    for &(v, role) in order.steps() {
        if !in_order.insert(v) {
            return Err(ElimError::DuplicateVariable { var: v });
        }
        let expected = if sums.contains(&v) {
            Role::Sum
        } else if maxes.contains(&v) {
            Role::Max
        } else {
            return Err(ElimError::UnexpectedVariable { var: v });
        };
        if role != expected {
            return Err(ElimError::RoleMismatch { var: v });
        }
    }
    for &v in sums.iter().chain(maxes) {
        if !in_order.contains(&v) {
            return Err(ElimError::MissingVariable { var: v });
        }
    }
    Ok(())
}

struct MaxRecord {
    var: VarId,
    scope: Vec<VarId>,
    cards: Vec<usize>,
    argmax: Vec<usize>,
}

/// Eliminates every non-evidence variable of the network in the given order,
/// summing out `sums` and maximizing out `maxes`. The value is
///
/// * the probability of the evidence when `maxes` is empty,
/// * the exact MAP value when the order is valid, and
/// * an upper bound on it otherwise.
pub fn eliminate(
    net: &BayesianNetwork,
    evidence: &Evidence,
    sums: &BTreeSet<VarId>,
    maxes: &BTreeSet<VarId>,
    order: &EliminationOrder,
) -> Result<EliminationResult, ElimError> {
    validate_elimination_problem(net, evidence, sums, maxes, order)?;
    let mut pool: Vec<Potential> = Vec::with_capacity(net.cpts().len());
    for cpt in net.cpts() {
        pool.push(cpt.restrict(evidence)?);
    }

    let mut max_log2 = f64::NEG_INFINITY;
    let mut records: Vec<MaxRecord> = Vec::with_capacity(maxes.len());
    for &(v, role) in order.steps() {
        let mut mentioned = Vec::new();
        let mut rest = Vec::with_capacity(pool.len());
        for p in pool {
            if p.mentions(v) {
                mentioned.push(p);
            } else {
                rest.push(p);
            }
        }
        let psi = match mentioned.split_first() {
            None => Potential::new(vec![(v, net.cardinality(v))], vec![1.0; net.cardinality(v)])
                .expect("a uniform table is well formed"),
            Some((first, others)) => {
                others.iter().fold(first.clone(), |acc, p| acc.multiply(p))
            }
        };
        max_log2 = max_log2.max((psi.len() as f64).log2());
        let reduced = match role {
            Role::Sum => psi.sum_out(v)?,
            Role::Max => {
                let (reduced, argmax) = psi.max_out(v)?;
                records.push(MaxRecord {
                    var: v,
                    scope: reduced.scope().to_vec(),
                    cards: reduced.cardinalities().to_vec(),
                    argmax,
                });
                reduced
            }
        };
        rest.push(reduced);
        pool = rest;
    }

    let mut value = ScaledValue::one();
    for p in &pool {
        debug_assert!(p.is_trivial(), "all non-evidence variables were eliminated");
        value = value.mul(p.value());
    }

    let solution = if maxes.is_empty() || value.is_zero() {
        None
    } else {
        let mut decided = Instantiation::new();
        for rec in records.iter().rev() {
            let st = strides(&rec.cards);
            let mut idx = 0usize;
            for (d, &u) in rec.scope.iter().enumerate() {
                // variables not yet decided only occur under invalid orders;
                // state 0 keeps the completion deterministic
                idx += decided.get(&u).copied().unwrap_or(0) * st[d];
            }
            decided.insert(rec.var, rec.argmax[idx]);
        }
        Some(decided)
    };

    Ok(EliminationResult {
        value,
        width: if order.is_empty() { -1.0 } else { max_log2 - 1.0 },
        solution,
        used_valid_order: order.is_valid_map_order(),
    })
}

/// The elimination value alone; an upper bound on the MAP value for any
/// order, tight for valid ones.
pub fn relaxed_map_bound(
    net: &BayesianNetwork,
    evidence: &Evidence,
    sums: &BTreeSet<VarId>,
    maxes: &BTreeSet<VarId>,
    order: &EliminationOrder,
) -> Result<ScaledValue, ElimError> {
    Ok(eliminate(net, evidence, sums, maxes, order)?.value)
}

fn check_same_vars(expected: &BTreeSet<VarId>, order: &EliminationOrder) -> Result<(), ElimError> {
    let mut seen = BTreeSet::new();
    for &(v, _) in order.steps() {
        if !seen.insert(v) {
            return Err(ElimError::DuplicateVariable { var: v });
        }
        if !expected.contains(&v) {
            return Err(ElimError::UnexpectedVariable { var: v });
        }
    }
    for &v in expected {
        if !seen.contains(&v) {
            return Err(ElimError::MissingVariable { var: v });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_random_network, RandomNetSpec};
    use crate::testutil::{chain3, enum_joint, enum_map, net_ab};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sv(x: f64) -> ScaledValue {
        ScaledValue::from_f64(x)
    }

    #[test]
    fn order_construction_and_validity() {
        let err = EliminationOrder::new(vec![(0, Role::Sum), (0, Role::Max)]).unwrap_err();
        assert_eq!(err, ElimError::DuplicateVariable { var: 0 });

        let maxes = BTreeSet::from([2]);
        let ord = EliminationOrder::from_parts(&[0, 1, 2], &maxes).unwrap();
        assert_eq!(ord.role_of(2), Some(Role::Max));
        assert_eq!(ord.role_of(0), Some(Role::Sum));
        assert_eq!(ord.role_of(9), None);
        assert!(ord.is_valid_map_order());
        assert_eq!(ord.sequence(), vec![0, 1, 2]);

        let bad = EliminationOrder::from_parts(&[2, 0, 1], &maxes).unwrap();
        assert!(!bad.is_valid_map_order());
        assert!(EliminationOrder::new(vec![]).unwrap().is_valid_map_order());
    }

    #[test]
    fn repair_is_a_stable_partition_reached_by_adjacent_swaps() {
        // sums {0,1,2}, maxes {3,4,5}, order 0 3 4 1 5 2
        let maxes = BTreeSet::from([3, 4, 5]);
        let ord = EliminationOrder::from_parts(&[0, 3, 4, 1, 5, 2], &maxes).unwrap();
        let fixed = ord.repaired();
        assert_eq!(fixed.sequence(), vec![0, 1, 2, 3, 4, 5]);
        assert!(fixed.is_valid_map_order());

        let chain = ord.repair_chain();
        assert_eq!(chain.first(), Some(&ord));
        assert_eq!(chain.last(), Some(&fixed));
        assert_eq!(chain.len(), 6); // five inversions, one swap each
        for w in chain.windows(2) {
            let (a, b) = (w[0].steps(), w[1].steps());
            let diffs: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
            assert_eq!(diffs.len(), 2);
            assert_eq!(diffs[1], diffs[0] + 1);
            assert_eq!(a[diffs[0]], b[diffs[1]]);
            assert_eq!(a[diffs[1]], b[diffs[0]]);
            assert_eq!(a[diffs[0]].1, Role::Max);
            assert_eq!(a[diffs[1]].1, Role::Sum);
        }
        assert_eq!(ord.repair_chain().len(), 6);
        let valid = EliminationOrder::from_parts(&[0, 1, 2], &BTreeSet::from([2])).unwrap();
        assert_eq!(valid.repair_chain().len(), 1);
    }

    #[test]
    fn interaction_graph_reflects_scopes_and_evidence() {
        let net = chain3();
        let g = InteractionGraph::of_network(&net, &Evidence::new());
        assert_eq!(g.neighbors(0), Some(&BTreeSet::from([1])));
        assert_eq!(g.neighbors(1), Some(&BTreeSet::from([0, 2])));
        assert_eq!(g.neighbors(2), Some(&BTreeSet::from([1])));

        // observing the middle variable disconnects the ends but keeps them
        // as vertices
        let e = Evidence::from_pairs([(1, 0)]).unwrap();
        let g = InteractionGraph::of_network(&net, &e);
        assert_eq!(g.len(), 2);
        assert_eq!(g.neighbors(0), Some(&BTreeSet::new()));
        assert_eq!(g.neighbors(2), Some(&BTreeSet::new()));

        let g = InteractionGraph::of_network(&net, &Evidence::new());
        let h = g.removing(&BTreeSet::from([1]));
        assert_eq!(h.len(), 2);
        assert!(!h.contains(1));
        assert_eq!(h.neighbors(0), Some(&BTreeSet::new()));
    }

    #[test]
    fn min_fill_prefers_zero_fill_and_low_ids() {
        let net = chain3();
        let g = InteractionGraph::of_network(&net, &Evidence::new());
        let ord = min_fill_order(&g, &BTreeSet::new(), false);
        assert_eq!(ord.sequence(), vec![0, 1, 2]);

        // complete graph: every vertex has zero fill, so ids decide
        let scopes = vec![vec![0, 1, 2, 3]];
        let k4 = InteractionGraph::from_scopes(0..4, &scopes);
        let ord = min_fill_order(&k4, &BTreeSet::new(), false);
        assert_eq!(ord.sequence(), vec![0, 1, 2, 3]);

        // constrained: the middle maximization variable must wait even though
        // its unconstrained turn would come earlier
        let maxes = BTreeSet::from([1]);
        let ord = min_fill_order(&g, &maxes, true);
        assert_eq!(ord.sequence(), vec![0, 2, 1]);
        assert!(ord.is_valid_map_order());
    }

    #[test]
    fn width_depends_on_the_order() {
        let net = chain3();
        let none = Evidence::new();
        let maxes = BTreeSet::new();
        let good = EliminationOrder::from_parts(&[0, 1, 2], &maxes).unwrap();
        let bad = EliminationOrder::from_parts(&[1, 0, 2], &maxes).unwrap();
        assert_eq!(width(&net, &none, &good).unwrap(), 1.0);
        assert_eq!(width(&net, &none, &bad).unwrap(), 2.0);

        // matches the width actually observed while eliminating
        let sums = BTreeSet::from([0, 1, 2]);
        let r = eliminate(&net, &none, &sums, &BTreeSet::new(), &bad).unwrap();
        assert_eq!(r.width, 2.0);

        let all = Evidence::from_pairs([(0, 0), (1, 0), (2, 0)]).unwrap();
        let empty = EliminationOrder::new(vec![]).unwrap();
        assert_eq!(width(&net, &all, &empty).unwrap(), -1.0);
    }

    #[test]
    fn two_node_exact_values() {
        let net = net_ab();
        let e_b1 = Evidence::from_pairs([(1, 1)]).unwrap();
        let ord_a = EliminationOrder::from_parts(&[0], &BTreeSet::new()).unwrap();
        let r = eliminate(&net, &e_b1, &BTreeSet::from([0]), &BTreeSet::new(), &ord_a).unwrap();
        assert!(r.value.rel_close(sv(0.45), 1e-12));
        assert!(r.solution.is_none());

        // most probable explanation over both variables
        let both = BTreeSet::from([0, 1]);
        let ord = EliminationOrder::from_parts(&[0, 1], &both).unwrap();
        let r = eliminate(&net, &Evidence::new(), &BTreeSet::new(), &both, &ord).unwrap();
        assert!(r.value.rel_close(sv(0.49), 1e-12));
        assert_eq!(r.solution, Some(Instantiation::from([(0, 0), (1, 0)])));
        assert!(r.used_valid_order);

        // MAP over the root alone
        let ord = EliminationOrder::from_parts(&[1, 0], &BTreeSet::from([0])).unwrap();
        let r = eliminate(&net, &Evidence::new(), &BTreeSet::from([1]), &BTreeSet::from([0]), &ord)
            .unwrap();
        assert!(r.value.rel_close(sv(0.7), 1e-12));
        assert_eq!(r.solution, Some(Instantiation::from([(0, 0)])));

        // MAP over the child: the valid order is exact, the swapped order is
        // only an upper bound
        let sums = BTreeSet::from([0]);
        let maxes = BTreeSet::from([1]);
        let good = EliminationOrder::from_parts(&[0, 1], &maxes).unwrap();
        let r = eliminate(&net, &Evidence::new(), &sums, &maxes, &good).unwrap();
        assert!(r.value.rel_close(sv(0.55), 1e-12));
        assert_eq!(r.solution, Some(Instantiation::from([(1, 0)])));
        assert!(r.used_valid_order);

        let bad = EliminationOrder::from_parts(&[1, 0], &maxes).unwrap();
        let r = eliminate(&net, &Evidence::new(), &sums, &maxes, &bad).unwrap();
        assert!(r.value.rel_close(sv(0.73), 1e-12));
        assert!(!r.used_valid_order);
        assert!(r.solution.is_some());
    }

    #[test]
    fn elimination_problem_validation() {
        let net = chain3();
        let none = Evidence::new();
        let sums = BTreeSet::from([0, 1]);
        let maxes = BTreeSet::from([2]);

        let short = EliminationOrder::from_parts(&[0, 1], &maxes).unwrap();
        assert_eq!(
            eliminate(&net, &none, &sums, &maxes, &short).unwrap_err(),
            ElimError::MissingVariable { var: 2 }
        );

        let e = Evidence::from_pairs([(2, 0)]).unwrap();
        let full = EliminationOrder::from_parts(&[0, 1, 2], &maxes).unwrap();
        assert_eq!(
            eliminate(&net, &e, &sums, &maxes, &full).unwrap_err(),
            ElimError::UnexpectedVariable { var: 2 }
        );

        let overlap = BTreeSet::from([1, 2]);
        assert_eq!(
            eliminate(&net, &none, &sums, &overlap, &full).unwrap_err(),
            ElimError::RoleMismatch { var: 1 }
        );

        let wrong_roles = EliminationOrder::from_parts(&[0, 1, 2], &BTreeSet::from([1])).unwrap();
        assert!(matches!(
            eliminate(&net, &none, &sums, &maxes, &wrong_roles).unwrap_err(),
            ElimError::RoleMismatch { .. }
        ));

        let missing_from_sets = eliminate(
            &net,
            &none,
            &BTreeSet::from([0]),
            &maxes,
            &EliminationOrder::from_parts(&[0, 2], &maxes).unwrap(),
        )
        .unwrap_err();
        assert_eq!(missing_from_sets, ElimError::MissingVariable { var: 1 });
    }

    #[test]
    fn observing_everything_leaves_the_joint_probability() {
        let net = chain3();
        let e = Evidence::from_pairs([(0, 1), (1, 0), (2, 1)]).unwrap();
        let empty = EliminationOrder::new(vec![]).unwrap();
        let r = eliminate(&net, &e, &BTreeSet::new(), &BTreeSet::new(), &empty).unwrap();
        let want = net.joint_probability(&[1, 0, 1]).unwrap();
        assert!(r.value.rel_close(want, 1e-12));
        assert_eq!(r.width, -1.0);
    }

    #[test]
    fn random_nets_match_enumeration_and_satisfy_the_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_e11f);
        for trial in 0..60u64 {
            let card = if trial % 3 == 0 { 3 } else { 2 };
            let spec = RandomNetSpec {
                nodes: 7,
                connectivity: 4,
                seed: 0xace0_0000 + trial,
                cardinality: card,
            };
            let net = gen_random_network(&spec);
            let mut e = Evidence::new();
            if trial % 2 == 0 {
                let v = rng.gen_range(0..7);
                e.assign(v, rng.gen_range(0..card)).unwrap();
            }
            let hidden = net.non_evidence_vars(&e);
            let maxes: BTreeSet<VarId> =
                hidden.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
            let sums: BTreeSet<VarId> = hidden.difference(&maxes).copied().collect();

            // evidence probability
            let g = InteractionGraph::of_network(&net, &e);
            let all_sum = min_fill_order(&g, &BTreeSet::new(), false);
            let pr_e =
                eliminate(&net, &e, &hidden, &BTreeSet::new(), &all_sum).unwrap().value;
            let want_pr = enum_joint(&net, &e.iter().collect());
            assert!(pr_e.rel_close(want_pr, 1e-9), "trial {trial}: {pr_e} vs {want_pr}");

            // exact MAP via a constrained order
            let good = min_fill_order(&g, &maxes, true);
            let r = eliminate(&net, &e, &sums, &maxes, &good).unwrap();
            let (want_map, _) = enum_map(&net, &e, &maxes);
            assert!(
                r.value.rel_close(want_map, 1e-9),
                "trial {trial}: map {} vs {}",
                r.value,
                want_map
            );
            if let Some(sol) = &r.solution {
                assert_eq!(sol.len(), maxes.len());
                let achieved = enum_joint(&net, &e.with_instantiation(sol).unwrap().iter().collect());
                assert!(achieved.rel_close(r.value, 1e-9), "trial {trial}: solution is optimal");
            } else {
                assert!(maxes.is_empty() || r.value.is_zero());
            }

            // any order is sandwiched between the MAP value and the evidence
            // probability
            let mut seq: Vec<VarId> = hidden.iter().copied().collect();
            seq.shuffle(&mut rng);
            let any = EliminationOrder::from_parts(&seq, &maxes).unwrap();
            let bound = relaxed_map_bound(&net, &e, &sums, &maxes, &any).unwrap();
            assert!(want_map.le_within(bound, 1e-9), "trial {trial}: map <= bound");
            assert!(bound.le_within(pr_e, 1e-9), "trial {trial}: bound <= Pr(e)");
        }
    }

    #[test]
    fn repair_chains_tighten_monotonically() {
        for trial in 0..20u64 {
            let spec = RandomNetSpec {
                nodes: 6,
                connectivity: 5,
                seed: 0xc4a1_0000 + trial,
                cardinality: 2,
            };
            let net = gen_random_network(&spec);
            let e = Evidence::new();
            let maxes = BTreeSet::from([3, 4, 5]);
            let sums = BTreeSet::from([0, 1, 2]);
            let ord = EliminationOrder::from_parts(&[0, 3, 4, 1, 5, 2], &maxes).unwrap();
            let chain = ord.repair_chain();
            let mut prev: Option<ScaledValue> = None;
            for step in &chain {
                let b = relaxed_map_bound(&net, &e, &sums, &maxes, step).unwrap();
                if let Some(p) = prev {
                    assert!(b.le_within(p, 1e-9), "trial {trial}: chain is monotone");
                }
                prev = Some(b);
            }
            let (want_map, _) = enum_map(&net, &e, &maxes);
            assert!(prev.unwrap().rel_close(want_map, 1e-9), "trial {trial}: chain ends exact");
        }
    }
}
