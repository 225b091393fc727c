//! Cluster trees for message passing.
//!
//! [`build`](Jointree::build) turns an elimination order into a tree of
//! clusters satisfying the running-intersection property, with every
//! evidence-restricted CPT assigned to a cluster that contains its scope.
//! [`promote`](Jointree::promote) then selectively copies maximization
//! variables into clusters closer to a chosen root, within a table size
//! budget. Promotion delays those maximizations in the induced elimination
//! order, which can only tighten the bound computed by propagation.

pub mod split;

use crate::elimination::{ElimError, EliminationOrder, InteractionGraph};
use crate::model::{BayesianNetwork, Evidence, ModelError, Potential, VarId};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum JointreeError {
    #[error("the cluster graph is not a tree")]
    NotATree,
    #[error("the clusters containing variable {var} are not connected")]
    RunningIntersection { var: VarId },
    #[error("potential {index} is not contained in its cluster")]
    Containment { index: usize },
    #[error("cluster {cluster} exceeds the size budget")]
    Budget { cluster: usize },
    #[error(transparent)]
    Elim(#[from] ElimError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A tree of variable clusters plus the restricted CPTs assigned to them.
#[derive(Clone, Debug)]
pub struct Jointree {
    clusters: Vec<BTreeSet<VarId>>,
    neighbors: Vec<BTreeSet<usize>>,
    /// cluster index of each potential
    assignment: Vec<usize>,
    /// evidence-restricted network CPTs
    potentials: Vec<Potential>,
    /// cardinality per variable id of the underlying network
    cards: Vec<usize>,
    /// largest cluster table size seen at build time, possibly raised by
    /// promotion budgets; verification checks clusters against it
    size_budget: u128,
}

impl Jointree {
    /// Builds the cluster tree induced by eliminating along `order` (roles
    /// are ignored). Non-maximal clusters are contracted away and a
    /// disconnected forest is linked up with empty separators, so the result
    /// is always a single tree with at least one cluster.
    pub fn build(
        net: &BayesianNetwork,
        evidence: &Evidence,
        order: &EliminationOrder,
    ) -> Result<Jointree, JointreeError> {
        evidence.validate_for(net)?;
        let hidden = net.non_evidence_vars(evidence);
        let mut seen = BTreeSet::new();
        for &(v, _) in order.steps() {
            if !seen.insert(v) {
                return Err(ElimError::DuplicateVariable { var: v }.into());
            }
            if !hidden.contains(&v) {
                return Err(ElimError::UnexpectedVariable { var: v }.into());
            }
        }
        for &v in &hidden {
            if !seen.contains(&v) {
                return Err(ElimError::MissingVariable { var: v }.into());
            }
        }

        // collect one clique per elimination step
        let g = InteractionGraph::of_network(net, evidence);
        let mut adj: BTreeMap<VarId, BTreeSet<VarId>> = hidden
            .iter()
            .map(|&v| (v, g.neighbors(v).cloned().unwrap_or_default()))
            .collect();
        let pos: BTreeMap<VarId, usize> =
            order.steps().iter().enumerate().map(|(i, &(v, _))| (v, i)).collect();
        let mut cliques: Vec<BTreeSet<VarId>> = Vec::with_capacity(order.len());
        let mut clique_of_var: BTreeMap<VarId, usize> = BTreeMap::new();
        let mut pending: Vec<(usize, VarId)> = Vec::new();
        for &(v, _) in order.steps() {
            let nb = adj.remove(&v).expect("order variables are vertices");
            let idx = cliques.len();
            clique_of_var.insert(v, idx);
            let mut k = nb.clone();
            k.insert(v);
            cliques.push(k);
            // the parent clique is the one created for the separator member
            // eliminated first; it does not exist yet, so resolve it later
            if let Some(&u) = nb.iter().min_by_key(|&&u| pos[&u]) {
                pending.push((idx, u));
            }
            let nbv: Vec<VarId> = nb.iter().copied().collect();
            for &a in &nbv {
                adj.get_mut(&a).expect("remaining vertex").remove(&v);
            }
            for i in 0..nbv.len() {
                for j in i + 1..nbv.len() {
                    adj.get_mut(&nbv[i]).unwrap().insert(nbv[j]);
                    adj.get_mut(&nbv[j]).unwrap().insert(nbv[i]);
                }
            }
        }
        let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); cliques.len()];
        for (i, u) in pending {
            let j = clique_of_var[&u];
            nbrs[i].insert(j);
            nbrs[j].insert(i);
        }

        // contract cliques contained in an adjacent clique
        let mut alive = vec![true; cliques.len()];
        loop {
            let mut merged = false;
            'scan: for i in 0..cliques.len() {
                if !alive[i] {
                    continue;
                }
                let candidates: Vec<usize> = nbrs[i].iter().copied().collect();
                for j in candidates {
                    if cliques[i].is_subset(&cliques[j]) {
                        let moved: Vec<usize> =
                            nbrs[i].iter().copied().filter(|&k| k != j).collect();
                        for &k in &moved {
                            nbrs[k].remove(&i);
                            nbrs[k].insert(j);
                            nbrs[j].insert(k);
                        }
                        nbrs[j].remove(&i);
                        nbrs[i].clear();
                        alive[i] = false;
                        merged = true;
                        break 'scan;
                    }
                }
            }
            if !merged {
                break;
            }
        }

        // renumber the survivors
        let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
        let mut clusters = Vec::new();
        for (i, c) in cliques.into_iter().enumerate() {
            if alive[i] {
                renumber.insert(i, clusters.len());
                clusters.push(c);
            }
        }
        if clusters.is_empty() {
            clusters.push(BTreeSet::new());
        }
        let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); clusters.len()];
        for (old, &new) in &renumber {
            neighbors[new] = nbrs[*old].iter().map(|k| renumber[k]).collect();
        }

        // link forest components with empty-separator edges
        let m = clusters.len();
        let mut comp = vec![usize::MAX; m];
        let mut reps = Vec::new();
        for start in 0..m {
            if comp[start] != usize::MAX {
                continue;
            }
            reps.push(start);
            let mut queue = vec![start];
            comp[start] = start;
            while let Some(u) = queue.pop() {
                for &w in &neighbors[u] {
                    if comp[w] == usize::MAX {
                        comp[w] = start;
                        queue.push(w);
                    }
                }
            }
        }
        for &r in &reps[1..] {
            neighbors[r].insert(reps[0]);
            neighbors[reps[0]].insert(r);
        }

        // assign each restricted CPT to the first cluster covering its scope
        let mut potentials = Vec::with_capacity(net.cpts().len());
        let mut assignment = Vec::with_capacity(net.cpts().len());
        for cpt in net.cpts() {
            let p = cpt.restrict(evidence)?;
            let home = (0..m)
                .find(|&c| p.scope().iter().all(|v| clusters[c].contains(v)))
                .expect("every restricted scope fits the clique that eliminated it first");
            potentials.push(p);
            assignment.push(home);
        }

        let cards: Vec<usize> = (0..net.num_variables()).map(|v| net.cardinality(v)).collect();
        let mut tree = Jointree {
            clusters,
            neighbors,
            assignment,
            potentials,
            cards,
            size_budget: 1,
        };
        tree.size_budget =
            (0..tree.clusters.len()).map(|i| tree.cluster_table_size(i)).max().unwrap_or(1);
        Ok(tree)
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster(&self, i: usize) -> &BTreeSet<VarId> {
        &self.clusters[i]
    }

    pub fn neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.neighbors[i]
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cardinality(&self, v: VarId) -> usize {
        self.cards[v]
    }

    /// Number of variables in the underlying network (not just those that
    /// appear in clusters).
    pub fn num_variables(&self) -> usize {
        self.cards.len()
    }

    pub fn size_budget(&self) -> u128 {
        self.size_budget
    }

    pub fn separator(&self, i: usize, j: usize) -> BTreeSet<VarId> {
        self.clusters[i].intersection(&self.clusters[j]).copied().collect()
    }

    pub fn cluster_table_size(&self, i: usize) -> u128 {
        self.clusters[i]
            .iter()
            .fold(1u128, |acc, &v| acc.saturating_mul(self.cards[v] as u128))
    }

    pub fn clusters_containing(&self, v: VarId) -> impl Iterator<Item = usize> + '_ {
        (0..self.clusters.len()).filter(move |&i| self.clusters[i].contains(&v))
    }

    /// Post-order traversal from `root` and the parent of each cluster.
    /// Children are visited in ascending index order, parents after children.
    pub fn post_order(&self, root: usize) -> (Vec<usize>, Vec<Option<usize>>) {
        let m = self.clusters.len();
        let mut parent = vec![None; m];
        let mut order = Vec::with_capacity(m);
        let mut visited = vec![false; m];
        visited[root] = true;
        let mut stack = vec![(root, false)];
        while let Some((u, done)) = stack.pop() {
            if done {
                order.push(u);
                continue;
            }
            stack.push((u, true));
            for &w in self.neighbors[u].iter().rev() {
                if !visited[w] {
                    visited[w] = true;
                    parent[w] = Some(u);
                    stack.push((w, false));
                }
            }
        }
        (order, parent)
    }

    /// The cluster holding the most maximization variables; ties go to the
    /// lowest index.
    pub fn root_with_most_max_vars(&self, max_vars: &BTreeSet<VarId>) -> usize {
        (0..self.clusters.len())
            .max_by_key(|&i| (self.clusters[i].intersection(max_vars).count(), usize::MAX - i))
            .unwrap_or(0)
    }

    /// Copies maximization variables from children into their parents, moving
    /// toward `root`, as long as the receiving cluster's table stays within
    /// `budget`. Clusters are processed children-first so a variable can
    /// climb several levels. Candidates are tried cheapest cardinality first,
    /// then lowest id.
    pub fn promote(&mut self, root: usize, max_vars: &BTreeSet<VarId>, budget: u128) {
        self.size_budget = self.size_budget.max(budget);
        let (order, parent) = self.post_order(root);
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.clusters.len()];
        for (c, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(c);
            }
        }
        for &i in &order {
            let mut cands: BTreeSet<VarId> = BTreeSet::new();
            for &k in &children[i] {
                for &v in self.clusters[k].intersection(max_vars) {
                    if !self.clusters[i].contains(&v) {
                        cands.insert(v);
                    }
                }
            }
            let mut cands: Vec<VarId> = cands.into_iter().collect();
            cands.sort_by_key(|&v| (self.cards[v], v));
            let mut size = self.cluster_table_size(i);
            for v in cands {
                let grown = size.saturating_mul(self.cards[v] as u128);
                if grown <= budget {
                    size = grown;
                    self.clusters[i].insert(v);
                }
            }
        }
    }

    /// Checks tree shape, running intersection, potential containment, and
    /// the size budget.
    pub fn verify(&self) -> Result<(), JointreeError> {
        let m = self.clusters.len();
        let mut edge_count = 0;
        for i in 0..m {
            for &j in &self.neighbors[i] {
                if j >= m || j == i || !self.neighbors[j].contains(&i) {
                    return Err(JointreeError::NotATree);
                }
                edge_count += 1;
            }
        }
        if edge_count != 2 * (m - 1) {
            return Err(JointreeError::NotATree);
        }
        let (order, _) = self.post_order(0);
        if order.len() != m {
            return Err(JointreeError::NotATree);
        }

        let mut all_vars = BTreeSet::new();
        for c in &self.clusters {
            all_vars.extend(c.iter().copied());
        }
        for &v in &all_vars {
            let holders: Vec<usize> = self.clusters_containing(v).collect();
            let mut reached = BTreeSet::from([holders[0]]);
            let mut queue = vec![holders[0]];
            while let Some(u) = queue.pop() {
                for &w in &self.neighbors[u] {
                    if self.clusters[w].contains(&v) && reached.insert(w) {
                        queue.push(w);
                    }
                }
            }
            if reached.len() != holders.len() {
                return Err(JointreeError::RunningIntersection { var: v });
            }
        }

        for (index, p) in self.potentials.iter().enumerate() {
            let home = &self.clusters[self.assignment[index]];
            if !p.scope().iter().all(|v| home.contains(v)) {
                return Err(JointreeError::Containment { index });
            }
        }

        for cluster in 0..m {
            if self.cluster_table_size(cluster) > self.size_budget {
                return Err(JointreeError::Budget { cluster });
            }
        }
        Ok(())
    }
}
