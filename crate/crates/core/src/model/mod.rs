//! Variables, evidence, potentials, and Bayesian networks.

mod parse;
mod potential;
mod scaled;

pub use parse::{
    emit_evidence, emit_network, emit_var_set, parse_evidence, parse_network, parse_var_set,
    ParseError,
};
pub use potential::Potential;
pub(crate) use potential::strides;
pub use scaled::ScaledValue;

use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type VarId = usize;

/// A partial assignment of states to variables.
pub type Instantiation = BTreeMap<VarId, usize>;

/// Tolerance for the per-parent-configuration normalization check on CPTs.
pub const CPT_NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub cardinality: usize,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ModelError {
    #[error("potential scope must be strictly increasing by variable id")]
    UnsortedScope,
    #[error("table has {got} entries but the scope requires {expected}")]
    TableSizeMismatch { expected: usize, got: usize },
    #[error("table entries must be finite and nonnegative")]
    InvalidEntry,
    #[error("variable {var} must have at least one state")]
    ZeroCardinality { var: VarId },
    #[error("state {state} is out of range for variable {var} (cardinality {card})")]
    StateOutOfRange { var: VarId, state: usize, card: usize },
    #[error("variable {var} is not in the potential scope")]
    NotInScope { var: VarId },
    #[error("variable {var} is assigned more than once")]
    DuplicateAssignment { var: VarId },
    #[error("variable {var} is assigned conflicting states")]
    ConflictingAssignment { var: VarId },
    #[error("variable id {var} is out of range (the network has {count} variables)")]
    UnknownVariable { var: VarId, count: usize },
    #[error("the parent graph contains a cycle")]
    Cycle,
    #[error("the CPT for variable {var} must range over its parents and itself")]
    BadCptScope { var: VarId },
    #[error("the CPT for variable {var} does not normalize: a child-state sum is {sum}")]
    CptNotNormalized { var: VarId, sum: f64 },
    #[error("instantiation is missing a state for variable {var}")]
    MissingAssignment { var: VarId },
}

/// Observed states for a subset of the variables. Each variable appears at
/// most once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: Instantiation,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Result<Self, ModelError> {
        let mut e = Evidence::new();
        for (var, state) in pairs {
            e.assign(var, state)?;
        }
        Ok(e)
    }

    /// Records an observation; a second observation of the same variable is an
    /// error even when the state matches.
    pub fn assign(&mut self, var: VarId, state: usize) -> Result<(), ModelError> {
        if self.assignments.insert(var, state).is_some() {
            return Err(ModelError::DuplicateAssignment { var });
        }
        Ok(())
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.assignments.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.assignments.contains_key(&var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.assignments.iter().map(|(&v, &s)| (v, s))
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.assignments.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Checks ids and states against a network.
    pub fn validate_for(&self, net: &BayesianNetwork) -> Result<(), ModelError> {
        for (var, state) in self.iter() {
            if var >= net.num_variables() {
                return Err(ModelError::UnknownVariable { var, count: net.num_variables() });
            }
            let card = net.cardinality(var);
            if state >= card {
                return Err(ModelError::StateOutOfRange { var, state, card });
            }
        }
        Ok(())
    }

    /// Extends the evidence with an instantiation (used to score candidate MAP
    /// assignments). Overlap is an error unless the states agree.
    pub fn with_instantiation(&self, m: &Instantiation) -> Result<Evidence, ModelError> {
        let mut out = self.clone();
        for (&var, &state) in m {
            match out.assignments.get(&var) {
                Some(&s) if s != state => return Err(ModelError::ConflictingAssignment { var }),
                Some(_) => {}
                None => {
                    out.assignments.insert(var, state);
                }
            }
        }
        Ok(out)
    }
}

/// A discrete Bayesian network: one CPT per variable, validated on
/// construction (dense ids, acyclic parent graph, CPT scopes matching the
/// family, and per-parent-configuration normalization within
/// [`CPT_NORMALIZATION_TOL`]).
#[derive(Clone, Debug)]
pub struct BayesianNetwork {
    variables: Vec<Variable>,
    parents: Vec<Vec<VarId>>,
    cpts: Vec<Potential>,
}

impl BayesianNetwork {
    pub fn new(
        variables: Vec<Variable>,
        parents: Vec<Vec<VarId>>,
        cpts: Vec<Potential>,
    ) -> Result<Self, ModelError> {
        let n = variables.len();
        for (i, v) in variables.iter().enumerate() {
            if v.id != i {
                return Err(ModelError::UnknownVariable { var: v.id, count: n });
            }
            if v.cardinality == 0 {
                return Err(ModelError::ZeroCardinality { var: i });
            }
        }
        if parents.len() != n || cpts.len() != n {
            return Err(ModelError::TableSizeMismatch { expected: n, got: parents.len().min(cpts.len()) });
        }
        for (child, ps) in parents.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &p in ps {
                if p >= n {
                    return Err(ModelError::UnknownVariable { var: p, count: n });
                }
                if p == child || !seen.insert(p) {
                    return Err(ModelError::BadCptScope { var: child });
                }
            }
        }
        // acyclicity via Kahn's algorithm on the parent relation
        {
            let mut indegree = vec![0usize; n];
            let mut children: Vec<Vec<VarId>> = vec![Vec::new(); n];
            for (child, ps) in parents.iter().enumerate() {
                indegree[child] = ps.len();
                for &p in ps {
                    children[p].push(child);
                }
            }
            let mut queue: Vec<VarId> = (0..n).filter(|&v| indegree[v] == 0).collect();
            let mut removed = 0;
            while let Some(v) = queue.pop() {
                removed += 1;
                for &c in &children[v] {
                    indegree[c] -= 1;
                    if indegree[c] == 0 {
                        queue.push(c);
                    }
                }
            }
            if removed != n {
                return Err(ModelError::Cycle);
            }
        }
        // scope and normalization checks
        for (child, cpt) in cpts.iter().enumerate() {
            let mut family: Vec<VarId> = parents[child].clone();
            family.push(child);
            family.sort_unstable();
            if cpt.scope() != family.as_slice() {
                return Err(ModelError::BadCptScope { var: child });
            }
            for (d, &v) in cpt.scope().iter().enumerate() {
                if cpt.cardinalities()[d] != variables[v].cardinality {
                    return Err(ModelError::BadCptScope { var: child });
                }
            }
            check_cpt_normalization(child, cpt)?;
        }
        Ok(BayesianNetwork { variables, parents, cpts })
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id]
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id].cardinality
    }

    pub fn parents_of(&self, id: VarId) -> &[VarId] {
        &self.parents[id]
    }

    pub fn cpt(&self, id: VarId) -> &Potential {
        &self.cpts[id]
    }

    pub fn cpts(&self) -> &[Potential] {
        &self.cpts
    }

    /// Variables with no children.
    pub fn leaves(&self) -> Vec<VarId> {
        let mut has_child = vec![false; self.variables.len()];
        for ps in &self.parents {
            for &p in ps {
                has_child[p] = true;
            }
        }
        (0..self.variables.len()).filter(|&v| !has_child[v]).collect()
    }

    pub fn non_evidence_vars(&self, evidence: &Evidence) -> BTreeSet<VarId> {
        (0..self.num_variables()).filter(|&v| !evidence.contains(v)).collect()
    }

    /// Joint probability of a complete instantiation given as one state per
    /// variable, computed as the product of CPT entries under the chain rule.
    pub fn joint_probability(&self, states: &[usize]) -> Result<ScaledValue, ModelError> {
        if states.len() != self.variables.len() {
            return Err(ModelError::MissingAssignment { var: states.len().min(self.variables.len()) });
        }
        for (v, &s) in states.iter().enumerate() {
            let card = self.cardinality(v);
            if s >= card {
                return Err(ModelError::StateOutOfRange { var: v, state: s, card });
            }
        }
        let mut p = ScaledValue::one();
        for cpt in &self.cpts {
            let local: Vec<usize> = cpt.scope().iter().map(|&v| states[v]).collect();
            p = p.mul(cpt.entry(cpt.index_of(&local)));
        }
        Ok(p)
    }

    /// Joint probability of a complete instantiation given as a map.
    pub fn joint_probability_of(&self, m: &Instantiation) -> Result<ScaledValue, ModelError> {
        let mut states = Vec::with_capacity(self.num_variables());
        for v in 0..self.num_variables() {
            match m.get(&v) {
                Some(&s) => states.push(s),
                None => return Err(ModelError::MissingAssignment { var: v }),
            }
        }
        self.joint_probability(&states)
    }
}

fn check_cpt_normalization(child: VarId, cpt: &Potential) -> Result<(), ModelError> {
    let dim = cpt.scope().binary_search(&child).expect("scope was checked");
    let cards = cpt.cardinalities();
    let group_count = cpt.len() / cards[dim];
    let mut sums = vec![0.0f64; group_count];
    // walk the table once, tracking the index with the child dimension removed
    let out_cards: Vec<usize> = cards
        .iter()
        .enumerate()
        .filter(|&(d, _)| d != dim)
        .map(|(_, &c)| c)
        .collect();
    let out_strides = strides(&out_cards);
    let per_dim_stride: Vec<usize> = {
        let mut s = Vec::with_capacity(cards.len());
        let mut out_d = 0;
        for d in 0..cards.len() {
            if d == dim {
                s.push(0);
            } else {
                s.push(out_strides[out_d]);
                out_d += 1;
            }
        }
        s
    };
    let mut digits = vec![0usize; cards.len()];
    let mut out_idx = 0usize;
    for &x in cpt.table() {
        sums[out_idx] += x;
        for d in (0..digits.len()).rev() {
            digits[d] += 1;
            out_idx += per_dim_stride[d];
            if digits[d] < cards[d] {
                break;
            }
            out_idx -= per_dim_stride[d] * cards[d];
            digits[d] = 0;
        }
    }
    for &s in &sums {
        if (s - 1.0).abs() > CPT_NORMALIZATION_TOL {
            return Err(ModelError::CptNotNormalized { var: child, sum: s });
        }
    }
    Ok(())
}

/// Builds a CPT from a table laid out family-style: dimensions are the parents
/// in the given (ascending) order followed by the child, child varying
/// fastest. The result is in canonical sorted-scope layout.
pub(crate) fn family_potential(
    child: VarId,
    parents: &[VarId],
    cardinality_of: impl Fn(VarId) -> usize,
    family_table: Vec<f64>,
) -> Result<Potential, ModelError> {
    let mut file_dims: Vec<VarId> = parents.to_vec();
    file_dims.push(child);
    let file_cards: Vec<usize> = file_dims.iter().map(|&v| cardinality_of(v)).collect();
    let file_strides = strides(&file_cards);
    let stride_of = |v: VarId| -> usize {
        let d = file_dims.iter().position(|&x| x == v).expect("var in family");
        file_strides[d]
    };

    let mut scope: Vec<(VarId, usize)> =
        file_dims.iter().map(|&v| (v, cardinality_of(v))).collect();
    scope.sort_unstable_by_key(|&(v, _)| v);
    let canon_cards: Vec<usize> = scope.iter().map(|&(_, c)| c).collect();
    let canon_strides_in_file: Vec<usize> = scope.iter().map(|&(v, _)| stride_of(v)).collect();

    let total: usize = canon_cards.iter().product();
    if family_table.len() != total {
        return Err(ModelError::TableSizeMismatch { expected: total, got: family_table.len() });
    }
    let mut table = Vec::with_capacity(total);
    let mut digits = vec![0usize; scope.len()];
    let mut file_idx = 0usize;
    for _ in 0..total {
        table.push(family_table[file_idx]);
        for d in (0..digits.len()).rev() {
            digits[d] += 1;
            file_idx += canon_strides_in_file[d];
            if digits[d] < canon_cards[d] {
                break;
            }
            file_idx -= canon_strides_in_file[d] * canon_cards[d];
            digits[d] = 0;
        }
    }
    Potential::new(scope, table)
}

/// Inverse of [`family_potential`]: reads a canonical CPT back out in
/// family-style order (parents ascending, then the child, child fastest).
pub(crate) fn family_table(child: VarId, parents: &[VarId], cpt: &Potential) -> Vec<f64> {
    let mut file_dims: Vec<VarId> = parents.to_vec();
    file_dims.push(child);
    let file_cards: Vec<usize> = file_dims
        .iter()
        .map(|&v| {
            let d = cpt.scope().binary_search(&v).expect("family var in scope");
            cpt.cardinalities()[d]
        })
        .collect();
    let file_strides = strides(&file_cards);
    let stride_of = |v: VarId| -> usize {
        let d = file_dims.iter().position(|&x| x == v).expect("var in family");
        file_strides[d]
    };
    let canon_strides_in_file: Vec<usize> = cpt.scope().iter().map(|&v| stride_of(v)).collect();
    let canon_cards = cpt.cardinalities();

    let mut out = vec![0.0f64; cpt.len()];
    let mut digits = vec![0usize; canon_cards.len()];
    let mut file_idx = 0usize;
    for &x in cpt.table() {
        out[file_idx] = x;
        for d in (0..digits.len()).rev() {
            digits[d] += 1;
            file_idx += canon_strides_in_file[d];
            if digits[d] < canon_cards[d] {
                break;
            }
            file_idx -= canon_strides_in_file[d] * canon_cards[d];
            digits[d] = 0;
        }
    }
    out
}
