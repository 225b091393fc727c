//! Cached message passing over a jointree with mixed sum/max elimination.
//!
//! Every directed edge of the tree carries one message: the product of the
//! source cluster's potentials and its other incoming messages, with the
//! variables outside the separator eliminated, summations strictly before
//! maximizations. The value obtained at the root upper-bounds the MAP value,
//! and per-state bounds read off at a variable's home cluster upper-bound the
//! best completion of each of its states.
//!
//! The search edits this state in place: [`assert_equal`] and
//! [`assert_not_equal`] multiply indicator masks into a variable's home
//! cluster and invalidate exactly the messages that depended on it, so
//! recomputation after an edit touches only the affected direction of the
//! tree. Products and eliminations always run in a fixed order, which makes
//! cached results bit-identical to a from-scratch recomputation; tests and
//! the solver's paranoid mode rely on that.
//!
//! [`assert_equal`]: PropagationState::assert_equal
//! [`assert_not_equal`]: PropagationState::assert_not_equal

use crate::elimination::{EliminationOrder, Role};
use crate::jointree::Jointree;
use crate::model::{Potential, ScaledValue, VarId};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum AssertError {
    #[error("state {state} is out of range for variable {var}")]
    StateOutOfRange { var: VarId, state: usize },
    #[error("variable {var} cannot take an excluded state")]
    Inconsistent { var: VarId },
    #[error("excluding state {state} would leave variable {var} with no states")]
    WouldExcludeAll { var: VarId, state: usize },
    #[error("retraction does not match the assertion stack")]
    RetractOutOfOrder,
    #[error("variable {var} is not eliminated by this tree")]
    UnknownVariable { var: VarId },
}

/// Proof of an assertion; hand it back to [`PropagationState::retract`] to
/// undo the assertion and everything asserted after it.
#[derive(Debug)]
#[must_use]
pub struct AssertToken(usize);

/// Per-state upper bounds for one variable, indexed by state.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueBounds {
    pub var: VarId,
    pub bounds: Vec<ScaledValue>,
}

struct AssertEntry {
    var: VarId,
    prev_allowed: Vec<bool>,
}

pub struct PropagationState {
    tree: Jointree,
    root: usize,
    max_vars: BTreeSet<VarId>,
    parent: Vec<Option<usize>>,
    /// post-order: children before parents, root last
    topo: Vec<usize>,
    /// per variable: the cluster containing it that sits closest to the root;
    /// this is where the variable is eliminated and where its mask attaches
    anchor: Vec<Option<usize>>,
    /// per cluster: product of its assigned potentials, fixed at build time
    base: Vec<Potential>,
    /// directed messages; see [`slot`](Self::slot)
    messages: Vec<Option<Potential>>,
    edge_index: BTreeMap<(usize, usize), usize>,
    /// per variable: which states remain allowed
    allowed: Vec<Vec<bool>>,
    /// per variable: true when some state is disallowed
    masked: Vec<bool>,
    stack: Vec<AssertEntry>,
    verify_mode: bool,
}

impl PropagationState {
    pub fn new(tree: Jointree, root: usize, max_vars: BTreeSet<VarId>) -> Self {
        let m = tree.cluster_count();
        assert!(root < m, "root cluster exists");
        let (topo, parent) = tree.post_order(root);
        assert_eq!(topo.len(), m, "the cluster graph is connected");

        let mut depth = vec![0usize; m];
        for &u in topo.iter().rev() {
            if let Some(p) = parent[u] {
                depth[u] = depth[p] + 1;
            }
        }
        let n = tree.num_variables();
        let mut anchor: Vec<Option<usize>> = vec![None; n];
        for c in 0..m {
            for &v in tree.cluster(c) {
                let better = match anchor[v] {
                    None => true,
                    Some(old) => depth[c] < depth[old],
                };
                if better {
                    anchor[v] = Some(c);
                }
            }
        }

        let mut base = vec![Potential::unit(); m];
        for (idx, p) in tree.potentials().iter().enumerate() {
            let home = tree.assignment()[idx];
            base[home] = base[home].multiply(p);
        }

        let mut edge_index = BTreeMap::new();
        for i in 0..m {
            for &j in tree.neighbors(i) {
                if i < j {
                    let next = edge_index.len();
                    edge_index.insert((i, j), next);
                }
            }
        }
        let messages = vec![None; 2 * edge_index.len()];
        let allowed = (0..n).map(|v| vec![true; tree.cardinality(v)]).collect();

        PropagationState {
            tree,
            root,
            max_vars,
            parent,
            topo,
            anchor,
            base,
            messages,
            edge_index,
            allowed,
            masked: vec![false; n],
            stack: Vec::new(),
            verify_mode: false,
        }
    }

    pub fn tree(&self) -> &Jointree {
        &self.tree
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn max_vars(&self) -> &BTreeSet<VarId> {
        &self.max_vars
    }

    /// With verify mode on, every pass recomputes all messages from scratch
    /// instead of trusting the cache.
    pub fn set_verify_mode(&mut self, on: bool) {
        self.verify_mode = on;
    }

    pub fn is_allowed(&self, var: VarId, state: usize) -> bool {
        self.allowed[var][state]
    }

    pub fn allowed_states(&self, var: VarId) -> Vec<usize> {
        (0..self.allowed[var].len()).filter(|&s| self.allowed[var][s]).collect()
    }

    fn slot(&self, from: usize, to: usize) -> usize {
        let key = (from.min(to), from.max(to));
        let eid = self.edge_index[&key];
        2 * eid + usize::from(from > to)
    }

    /// Cluster product including the masks of variables anchored here.
    fn effective(&self, c: usize) -> Potential {
        let mut p = self.base[c].clone();
        for &v in self.tree.cluster(c) {
            if self.masked[v] && self.anchor[v] == Some(c) {
                let table = self.allowed[v].iter().map(|&b| f64::from(u8::from(b))).collect();
                let lambda = Potential::new(vec![(v, self.tree.cardinality(v))], table)
                    .expect("indicator tables are well formed");
                p = p.multiply(&lambda);
            }
        }
        p
    }

    /// Computes the message `from -> to` if it is not cached, recursively
    /// ensuring its inputs. Returns its slot.
    fn ensure_message(&mut self, from: usize, to: usize) -> usize {
        let slot = self.slot(from, to);
        if self.messages[slot].is_some() {
            return slot;
        }
        let inputs: Vec<usize> =
            self.tree.neighbors(from).iter().copied().filter(|&k| k != to).collect();
        for &k in &inputs {
            self.ensure_message(k, from);
        }
        let mut prod = self.effective(from);
        for &k in &inputs {
            let s = self.slot(k, from);
            prod = prod.multiply(self.messages[s].as_ref().expect("input was just ensured"));
        }
        let sep = self.tree.separator(from, to);
        let prod = self.eliminate_all_but(prod, from, &sep);
        self.messages[slot] = Some(prod);
        slot
    }

    /// Eliminates every cluster variable outside `keep` from `prod`, all
    /// summations first, ascending ids within each role. Running intersection
    /// plus the potential assignment rule guarantee each eliminated variable
    /// is mentioned.
    fn eliminate_all_but(&self, mut prod: Potential, cluster: usize, keep: &BTreeSet<VarId>) -> Potential {
        for &v in self.tree.cluster(cluster) {
            if !keep.contains(&v) && !self.max_vars.contains(&v) {
                prod = prod.sum_out(v).expect("cluster variable is in scope");
            }
        }
        for &v in self.tree.cluster(cluster) {
            if !keep.contains(&v) && self.max_vars.contains(&v) {
                prod = prod.max_out(v).expect("cluster variable is in scope").0;
            }
        }
        prod
    }

    fn dirty_from(&mut self, a: usize) {
        let m = self.tree.cluster_count();
        let mut visited = vec![false; m];
        visited[a] = true;
        let mut queue = vec![a];
        while let Some(u) = queue.pop() {
            let next: Vec<usize> = self.tree.neighbors(u).iter().copied().collect();
            for w in next {
                if !visited[w] {
                    visited[w] = true;
                    let s = self.slot(u, w);
                    self.messages[s] = None;
                    queue.push(w);
                }
            }
        }
    }

    /// Sends all messages toward the root and evaluates the root cluster.
    /// The result upper-bounds the MAP value over the still-allowed states
    /// and is exact once every maximization variable is fixed (and in
    /// particular when there are none).
    pub fn inward_pass(&mut self) -> ScaledValue {
        if self.verify_mode {
            self.messages.iter_mut().for_each(|s| *s = None);
        }
        let topo = self.topo.clone();
        for &u in &topo {
            if let Some(p) = self.parent[u] {
                self.ensure_message(u, p);
            }
        }
        let nbrs: Vec<usize> = self.tree.neighbors(self.root).iter().copied().collect();
        for &k in &nbrs {
            self.ensure_message(k, self.root);
        }
        let mut prod = self.effective(self.root);
        for &k in &nbrs {
            let s = self.slot(k, self.root);
            prod = prod.multiply(self.messages[s].as_ref().expect("just ensured"));
        }
        let prod = self.eliminate_all_but(prod, self.root, &BTreeSet::new());
        prod.value()
    }

    /// Sends all messages away from the root so every cluster has a full set
    /// of incoming messages.
    pub fn outward_pass(&mut self) {
        let topo = self.topo.clone();
        for &u in topo.iter().rev() {
            let next: Vec<usize> =
                self.tree.neighbors(u).iter().copied().filter(|&w| Some(u) == self.parent[w]).collect();
            for w in next {
                self.ensure_message(u, w);
            }
        }
    }

    /// Per-state bounds for several variables, each read at its home cluster.
    /// Results come back sorted by variable id. The expensive summation work
    /// is shared between variables of the same cluster.
    pub fn value_bounds_for(&mut self, vars: &[VarId]) -> Vec<ValueBounds> {
        let mut sorted: Vec<VarId> = vars.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut by_cluster: BTreeMap<usize, Vec<VarId>> = BTreeMap::new();
        for v in sorted {
            let a = self.anchor[v].unwrap_or_else(|| panic!("variable {v} is in the tree"));
            by_cluster.entry(a).or_default().push(v);
        }
        let mut out: Vec<ValueBounds> = Vec::with_capacity(vars.len());
        for (a, group) in by_cluster {
            out.extend(self.cluster_bounds(a, &group));
        }
        out.sort_by_key(|b| b.var);
        out
    }

    /// Per-state bounds for one variable.
    pub fn value_bounds(&mut self, var: VarId) -> ValueBounds {
        self.value_bounds_for(&[var]).pop().expect("one result per variable")
    }

    /// Per-state bounds for `var` read at an arbitrary cluster containing it.
    pub fn value_bounds_at(&mut self, var: VarId, cluster: usize) -> ValueBounds {
        assert!(self.tree.cluster(cluster).contains(&var), "cluster must contain the variable");
        self.cluster_bounds(cluster, &[var]).pop().expect("one result")
    }

    fn cluster_bounds(&mut self, a: usize, targets: &[VarId]) -> Vec<ValueBounds> {
        let nbrs: Vec<usize> = self.tree.neighbors(a).iter().copied().collect();
        for &k in &nbrs {
            self.ensure_message(k, a);
        }
        let mut phi = self.effective(a);
        for &k in &nbrs {
            let s = self.slot(k, a);
            phi = phi.multiply(self.messages[s].as_ref().expect("just ensured"));
        }
        let cluster_sums: Vec<VarId> =
            self.tree.cluster(a).iter().copied().filter(|v| !self.max_vars.contains(v)).collect();
        let cluster_maxes: Vec<VarId> =
            self.tree.cluster(a).iter().copied().filter(|v| self.max_vars.contains(v)).collect();

        // all targets share the fully summed table when they are
        // maximization variables
        let mut sigma: Option<Potential> = None;
        let mut out = Vec::with_capacity(targets.len());
        for &v in targets {
            let reduced = if self.max_vars.contains(&v) {
                let sigma = sigma.get_or_insert_with(|| {
                    let mut s = phi.clone();
                    for &u in &cluster_sums {
                        s = s.sum_out(u).expect("cluster variable is in scope");
                    }
                    s
                });
                let mut t = sigma.clone();
                for &u in &cluster_maxes {
                    if u != v {
                        t = t.max_out(u).expect("cluster variable is in scope").0;
                    }
                }
                t
            } else {
                let mut t = phi.clone();
                for &u in &cluster_sums {
                    if u != v {
                        t = t.sum_out(u).expect("cluster variable is in scope");
                    }
                }
                for &u in &cluster_maxes {
                    t = t.max_out(u).expect("cluster variable is in scope").0;
                }
                t
            };
            debug_assert_eq!(reduced.scope(), &[v]);
            let bounds = (0..self.tree.cardinality(v)).map(|s| reduced.entry(s)).collect();
            out.push(ValueBounds { var: v, bounds });
        }
        out
    }

    /// The elimination order that inward propagation to the current root
    /// emulates: for each cluster in post-order, its variables outside the
    /// separator to the parent, summations before maximizations.
    pub fn induced_order(&self) -> EliminationOrder {
        let mut steps = Vec::new();
        for &u in &self.topo {
            let keep = match self.parent[u] {
                Some(p) => self.tree.separator(u, p),
                None => BTreeSet::new(),
            };
            for &v in self.tree.cluster(u) {
                if !keep.contains(&v) && !self.max_vars.contains(&v) {
                    steps.push((v, Role::Sum));
                }
            }
            for &v in self.tree.cluster(u) {
                if !keep.contains(&v) && self.max_vars.contains(&v) {
                    steps.push((v, Role::Max));
                }
            }
        }
        EliminationOrder::new(steps).expect("clusters partition the eliminated variables")
    }

    fn check_var(&self, var: VarId) -> Result<(), AssertError> {
        if var >= self.allowed.len() || self.anchor[var].is_none() {
            return Err(AssertError::UnknownVariable { var });
        }
        Ok(())
    }

    /// Restricts `var` to exactly `state`. Fails if the state was already
    /// excluded.
    pub fn assert_equal(&mut self, var: VarId, state: usize) -> Result<AssertToken, AssertError> {
        self.check_var(var)?;
        let card = self.tree.cardinality(var);
        if state >= card {
            return Err(AssertError::StateOutOfRange { var, state });
        }
        if !self.allowed[var][state] {
            return Err(AssertError::Inconsistent { var });
        }
        let token = AssertToken(self.stack.len());
        let prev = self.allowed[var].clone();
        let mut next = vec![false; card];
        next[state] = true;
        let changed = next != prev;
        self.stack.push(AssertEntry { var, prev_allowed: prev });
        self.allowed[var] = next;
        self.masked[var] = self.allowed[var].iter().any(|&b| !b);
        if changed {
            self.dirty_from(self.anchor[var].expect("checked"));
        }
        Ok(token)
    }

    /// Excludes `state` from `var`. Excluding an already-excluded state is a
    /// recorded no-op; excluding the last remaining state is an error.
    pub fn assert_not_equal(
        &mut self,
        var: VarId,
        state: usize,
    ) -> Result<AssertToken, AssertError> {
        self.check_var(var)?;
        let card = self.tree.cardinality(var);
        if state >= card {
            return Err(AssertError::StateOutOfRange { var, state });
        }
        let token = AssertToken(self.stack.len());
        if !self.allowed[var][state] {
            self.stack.push(AssertEntry { var, prev_allowed: self.allowed[var].clone() });
            return Ok(token);
        }
        if self.allowed[var].iter().filter(|&&b| b).count() == 1 {
            return Err(AssertError::WouldExcludeAll { var, state });
        }
        self.stack.push(AssertEntry { var, prev_allowed: self.allowed[var].clone() });
        self.allowed[var][state] = false;
        self.masked[var] = true;
        self.dirty_from(self.anchor[var].expect("checked"));
        Ok(token)
    }

    /// Undoes the assertion behind `token` and every later one, restoring
    /// masks and invalidating affected messages.
    pub fn retract(&mut self, token: AssertToken) -> Result<(), AssertError> {
        if token.0 > self.stack.len() {
            return Err(AssertError::RetractOutOfOrder);
        }
        while self.stack.len() > token.0 {
            let entry = self.stack.pop().expect("stack is long enough");
            let changed = self.allowed[entry.var] != entry.prev_allowed;
            self.allowed[entry.var] = entry.prev_allowed;
            self.masked[entry.var] = self.allowed[entry.var].iter().any(|&b| !b);
            if changed {
                self.dirty_from(self.anchor[entry.var].expect("was asserted"));
            }
        }
        Ok(())
    }
}
