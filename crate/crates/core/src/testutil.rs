//! Small fixtures and exhaustive reference computations for unit tests.

use crate::model::{
    BayesianNetwork, Evidence, Instantiation, Potential, ScaledValue, VarId, Variable,
};
use std::collections::BTreeSet;

/// A -> B with P(A) = [.7, .3], P(B|A=0) = [.7, .3], P(B|A=1) = [.2, .8].
pub(crate) fn net_ab() -> BayesianNetwork {
    let vars = vec![
        Variable { id: 0, name: "A".into(), cardinality: 2 },
        Variable { id: 1, name: "B".into(), cardinality: 2 },
    ];
    let cpts = vec![
        Potential::new(vec![(0, 2)], vec![0.7, 0.3]).unwrap(),
        Potential::new(vec![(0, 2), (1, 2)], vec![0.7, 0.3, 0.2, 0.8]).unwrap(),
    ];
    BayesianNetwork::new(vars, vec![vec![], vec![0]], cpts).unwrap()
}

/// Binary chain 0 -> 1 -> 2 with a uniform root.
pub(crate) fn chain3() -> BayesianNetwork {
    let vars =
        (0..3).map(|i| Variable { id: i, name: format!("V{i}"), cardinality: 2 }).collect();
    let link = vec![0.7, 0.3, 0.2, 0.8];
    let cpts = vec![
        Potential::new(vec![(0, 2)], vec![0.5, 0.5]).unwrap(),
        Potential::new(vec![(0, 2), (1, 2)], link.clone()).unwrap(),
        Potential::new(vec![(1, 2), (2, 2)], link).unwrap(),
    ];
    BayesianNetwork::new(vars, vec![vec![], vec![0], vec![1]], cpts).unwrap()
}

/// Sums the joint probability over all completions of `fixed` by brute
/// enumeration of the remaining variables.
pub(crate) fn enum_joint(net: &BayesianNetwork, fixed: &Instantiation) -> ScaledValue {
    let n = net.num_variables();
    let mut states: Vec<usize> = (0..n).map(|v| fixed.get(&v).copied().unwrap_or(0)).collect();
    let free: Vec<VarId> = (0..n).filter(|v| !fixed.contains_key(v)).collect();
    let mut total = ScaledValue::zero();
    loop {
        total = total.add(net.joint_probability(&states).unwrap());
        let mut d = free.len();
        while d > 0 {
            let v = free[d - 1];
            states[v] += 1;
            if states[v] < net.cardinality(v) {
                break;
            }
            states[v] = 0;
            d -= 1;
        }
        if d == 0 {
            return total;
        }
    }
}

/// Exhaustive MAP reference: the best assignment of `map_vars` under the
/// evidence and its joint probability. Ties prefer the lexicographically
/// smallest assignment in ascending variable order.
pub(crate) fn enum_map(
    net: &BayesianNetwork,
    evidence: &Evidence,
    map_vars: &BTreeSet<VarId>,
) -> (ScaledValue, Instantiation) {
    let fixed: Instantiation = evidence.iter().collect();
    let mvars: Vec<VarId> = map_vars.iter().copied().collect();
    let mut mstates = vec![0usize; mvars.len()];
    let mut best: Option<(ScaledValue, Instantiation)> = None;
    loop {
        let mut f = fixed.clone();
        for (i, &v) in mvars.iter().enumerate() {
            f.insert(v, mstates[i]);
        }
        let p = enum_joint(net, &f);
        if best.as_ref().map_or(true, |(bp, _)| p > *bp) {
            let m = mvars.iter().copied().zip(mstates.iter().copied()).collect();
            best = Some((p, m));
        }
        let mut d = mvars.len();
        while d > 0 {
            mstates[d - 1] += 1;
            if mstates[d - 1] < net.cardinality(mvars[d - 1]) {
                break;
            }
            mstates[d - 1] = 0;
            d -= 1;
        }
        if d == 0 {
            let (p, m) = best.unwrap();
            return (p, m);
        }
    }
}
