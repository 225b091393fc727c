//! Mini-bucket upper bound on the MAP value.
//!
//! Bucket elimination with bounded bucket scopes: when a bucket's potentials
//! would exceed `ibound` distinct variables after multiplication, the bucket
//! is split greedily into mini-buckets that each stay within the limit. A
//! summation variable is summed out of the first mini-bucket and maximized
//! out of the rest; a maximization variable is maximized out of all of them.
//! Replacing sums by maxes over a partitioned product can only increase the
//! value, so the result upper-bounds the exact elimination value, and with a
//! single mini-bucket per bucket it reproduces it.

use crate::elimination::{validate_elimination_problem, ElimError, EliminationOrder, Role};
use crate::model::{BayesianNetwork, Evidence, ModelError, Potential, ScaledValue, VarId};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MiniBucketError {
    #[error("i-bound {ibound} is below the largest restricted CPT scope ({required})")]
    InfeasibleIBound { ibound: usize, required: usize },
    #[error(transparent)]
    Elim(#[from] ElimError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Upper bound on the mixed sum/max elimination value along `order`, with
/// every intermediate table capped at `ibound` distinct variables.
pub fn minibucket_bound(
    net: &BayesianNetwork,
    evidence: &Evidence,
    sums: &BTreeSet<VarId>,
    maxes: &BTreeSet<VarId>,
    order: &EliminationOrder,
    ibound: usize,
) -> Result<ScaledValue, MiniBucketError> {
    validate_elimination_problem(net, evidence, sums, maxes, order)?;
    let mut restricted = Vec::with_capacity(net.cpts().len());
    for cpt in net.cpts() {
        restricted.push(cpt.restrict(evidence).map_err(ModelError::from)?);
    }
    let required = restricted.iter().map(|p| p.scope().len()).max().unwrap_or(0);
    if ibound < required {
        return Err(MiniBucketError::InfeasibleIBound { ibound, required });
    }

    let pos: BTreeMap<VarId, usize> =
        order.steps().iter().enumerate().map(|(i, &(v, _))| (v, i)).collect();
    let mut buckets: Vec<Vec<Potential>> = vec![Vec::new(); order.len()];
    let mut constants = ScaledValue::one();
    for p in restricted {
        match p.scope().iter().map(|v| pos[v]).min() {
            Some(b) => buckets[b].push(p),
            None => constants = constants.mul(p.value()),
        }
    }

    for i in 0..order.len() {
        let (v, role) = order.steps()[i];
        let mut items = std::mem::take(&mut buckets[i]);
        if items.is_empty() {
            // nothing mentions the variable: eliminating it contributes its
            // state count (sum) or nothing (max), like exact elimination
            items.push(
                Potential::new(vec![(v, net.cardinality(v))], vec![1.0; net.cardinality(v)])
                    .expect("a uniform table is well formed"),
            );
        }
        // big scopes first so small potentials fill the gaps; the sort is
        // stable, keeping arrival order among equals
        items.sort_by_key(|p| std::cmp::Reverse(p.scope().len()));
        let mut minis: Vec<(BTreeSet<VarId>, Vec<Potential>)> = Vec::new();
        for p in items {
            let pscope: BTreeSet<VarId> = p.scope().iter().copied().collect();
            let slot = minis
                .iter()
                .position(|(scope, _)| scope.union(&pscope).count() <= ibound);
            match slot {
                Some(k) => {
                    minis[k].0.extend(pscope);
                    minis[k].1.push(p);
                }
                None => minis.push((pscope, vec![p])),
            }
        }
        for (k, (_, list)) in minis.into_iter().enumerate() {
            let mut iter = list.into_iter();
            let mut prod = iter.next().expect("mini-buckets are nonempty");
            for p in iter {
                prod = prod.multiply(&p);
            }
            let reduced = if role == Role::Sum && k == 0 {
                prod.sum_out(v).map_err(ModelError::from)?
            } else {
                prod.max_out(v).map_err(ModelError::from)?.0
            };
            match reduced.scope().iter().map(|u| pos[u]).min() {
                Some(b) => buckets[b].push(reduced),
                None => constants = constants.mul(reduced.value()),
            }
        }
    }
    Ok(constants)
}
