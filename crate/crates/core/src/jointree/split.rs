//! Rewriting composite-cardinality variables as groups of prime-radix digits.
//!
//! A variable with a composite number of states can be replaced by one
//! variable per prime factor (factors ascending, most significant digit
//! first) without changing the distribution. Because replacement ids stay
//! contiguous and in original order, a potential mentioning the variable
//! keeps its flat table verbatim: the old axis is merely reinterpreted as
//! several consecutive axes. Only the variable's own CPT needs real work, a
//! chain-rule factorization into one CPT per digit.
//!
//! Splitting MAP variables this way lowers the per-variable branching factor
//! of the search while preserving every MAP value exactly.

use crate::model::{
    strides, BayesianNetwork, Evidence, Instantiation, ModelError, Potential, VarId, Variable,
};
use std::collections::BTreeSet;

/// Prime factorization in ascending order; 0 and 1 yield an empty list.
pub fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        while n % d == 0 {
            out.push(d);
            n /= d;
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// How original variables map to the variables of a split network.
#[derive(Clone, Debug)]
pub struct SplitMap {
    /// per original variable: its replacements, most significant digit first
    groups: Vec<Vec<VarId>>,
    /// per new variable: the original variable and the digit position
    origin: Vec<(VarId, usize)>,
    /// per new variable: its cardinality
    new_cards: Vec<usize>,
}

impl SplitMap {
    /// True when no variable was split (ids still match one-to-one).
    pub fn is_identity(&self) -> bool {
        self.groups.iter().all(|g| g.len() == 1)
    }

    pub fn new_vars_of(&self, v: VarId) -> &[VarId] {
        &self.groups[v]
    }

    pub fn origin_of(&self, new_var: VarId) -> (VarId, usize) {
        self.origin[new_var]
    }

    pub fn num_original_vars(&self) -> usize {
        self.groups.len()
    }

    pub fn num_new_vars(&self) -> usize {
        self.origin.len()
    }

    /// Digits of `state` in the replacement radices, most significant first.
    pub fn translate_state(&self, v: VarId, state: usize) -> Vec<(VarId, usize)> {
        let g = &self.groups[v];
        let mut digits = vec![0usize; g.len()];
        let mut rem = state;
        for j in (0..g.len()).rev() {
            let f = self.new_cards[g[j]];
            digits[j] = rem % f;
            rem /= f;
        }
        debug_assert_eq!(rem, 0, "state within cardinality");
        g.iter().copied().zip(digits).collect()
    }

    /// Recombines digits (most significant first) into an original state.
    pub fn restore_state(&self, v: VarId, digits: &[usize]) -> usize {
        let g = &self.groups[v];
        assert_eq!(digits.len(), g.len());
        g.iter().zip(digits).fold(0, |acc, (&nv, &d)| acc * self.new_cards[nv] + d)
    }

    pub fn translate_evidence(&self, e: &Evidence) -> Evidence {
        let mut out = Evidence::new();
        for (v, s) in e.iter() {
            for (nv, d) in self.translate_state(v, s) {
                out.assign(nv, d).expect("replacement variables are distinct");
            }
        }
        out
    }

    pub fn translate_var_set(&self, set: &BTreeSet<VarId>) -> BTreeSet<VarId> {
        set.iter().flat_map(|&v| self.groups[v].iter().copied()).collect()
    }

    pub fn translate_instantiation(&self, m: &Instantiation) -> Instantiation {
        m.iter().flat_map(|(&v, &s)| self.translate_state(v, s)).collect()
    }

    /// Maps an instantiation of split-network variables back to original
    /// variables. Panics unless every digit of each touched original variable
    /// is present.
    pub fn restore_instantiation(&self, m: &Instantiation) -> Instantiation {
        let touched: BTreeSet<VarId> = m.keys().map(|&nv| self.origin[nv].0).collect();
        touched
            .into_iter()
            .map(|v| {
                let digits: Vec<usize> = self.groups[v]
                    .iter()
                    .map(|nv| *m.get(nv).expect("all digits of the variable are assigned"))
                    .collect();
                (v, self.restore_state(v, &digits))
            })
            .collect()
    }
}

/// Splits every target variable whose cardinality is composite into one
/// variable per prime factor. Other variables are renumbered but otherwise
/// untouched. The returned network defines the same distribution up to
/// floating-point rounding in the factorized CPTs.
pub fn split_prime_factors(
    net: &BayesianNetwork,
    targets: &BTreeSet<VarId>,
) -> Result<(BayesianNetwork, SplitMap), ModelError> {
    let n = net.num_variables();
    let mut factors: Vec<Vec<usize>> = Vec::with_capacity(n);
    for v in 0..n {
        let c = net.cardinality(v);
        let pf = if targets.contains(&v) { prime_factors(c) } else { Vec::new() };
        factors.push(if pf.len() >= 2 { pf } else { vec![c] });
    }

    let mut groups: Vec<Vec<VarId>> = Vec::with_capacity(n);
    let mut origin: Vec<(VarId, usize)> = Vec::new();
    let mut new_cards: Vec<usize> = Vec::new();
    let mut variables: Vec<Variable> = Vec::new();
    for v in 0..n {
        let mut g = Vec::with_capacity(factors[v].len());
        for (j, &f) in factors[v].iter().enumerate() {
            let nv = origin.len();
            g.push(nv);
            origin.push((v, j));
            new_cards.push(f);
            let name = if factors[v].len() == 1 {
                net.variable(v).name.clone()
            } else {
                format!("{}.{}", net.variable(v).name, j + 1)
            };
            variables.push(Variable { id: nv, name, cardinality: f });
        }
        groups.push(g);
    }
    let map = SplitMap { groups, origin, new_cards };
    if map.is_identity() {
        return Ok((net.clone(), map));
    }

    let new_n = map.origin.len();
    let mut parents: Vec<Vec<VarId>> = vec![Vec::new(); new_n];
    let mut cpts: Vec<Option<Potential>> = vec![None; new_n];
    for v in 0..n {
        let cpt = net.cpt(v);
        // contiguous renumbering keeps expanded scopes sorted and the flat
        // table valid as-is
        let new_scope: Vec<(VarId, usize)> = cpt
            .scope()
            .iter()
            .flat_map(|&u| map.groups[u].iter().map(|&nu| (nu, map.new_cards[nu])))
            .collect();
        let mapped_parents: Vec<VarId> = net
            .parents_of(v)
            .iter()
            .flat_map(|&p| map.groups[p].iter().copied())
            .collect();

        if map.groups[v].len() == 1 {
            let nv = map.groups[v][0];
            let mut ps = mapped_parents;
            ps.sort_unstable();
            parents[nv] = ps;
            cpts[nv] = Some(Potential::new(new_scope, cpt.table().to_vec())?);
            continue;
        }

        // chain rule over the digits: each digit's CPT is the ratio of two
        // successive joint marginals
        let g = map.groups[v].clone();
        let mut scope_j = new_scope;
        let mut table_j = cpt.table().to_vec();
        for j in (0..g.len()).rev() {
            let xj = g[j];
            let dim = scope_j.iter().position(|&(u, _)| u == xj).expect("digit in scope");
            let cards_j: Vec<usize> = scope_j.iter().map(|&(_, c)| c).collect();
            let marginal = sum_out_dim(&table_j, &cards_j, dim);
            let quotient =
                divide_over_dim(&table_j, &cards_j, dim, &marginal, map.new_cards[xj]);
            parents[xj] = scope_j.iter().map(|&(u, _)| u).filter(|&u| u != xj).collect();
            cpts[xj] = Some(Potential::new(scope_j.clone(), quotient)?);
            scope_j.remove(dim);
            table_j = marginal;
        }
    }

    let cpts: Vec<Potential> = cpts.into_iter().map(|c| c.expect("one CPT per digit")).collect();
    let split = BayesianNetwork::new(variables, parents, cpts)?;
    Ok((split, map))
}

/// Sums dimension `dim` out of a row-major table.
fn sum_out_dim(table: &[f64], cards: &[usize], dim: usize) -> Vec<f64> {
    let out_cards: Vec<usize> =
        cards.iter().enumerate().filter(|&(d, _)| d != dim).map(|(_, &c)| c).collect();
    let mut out = vec![0.0f64; out_cards.iter().product::<usize>().max(1)];
    for (i, stride) in out_stride_walk(table.len(), cards, dim, &out_cards) {
        out[stride] += table[i];
    }
    out
}

/// Pointwise ratio of a table and its `dim` marginal; configurations with a
/// zero marginal get the uniform value so each group still sums to one.
fn divide_over_dim(
    num: &[f64],
    cards: &[usize],
    dim: usize,
    marginal: &[f64],
    dim_card: usize,
) -> Vec<f64> {
    let out_cards: Vec<usize> =
        cards.iter().enumerate().filter(|&(d, _)| d != dim).map(|(_, &c)| c).collect();
    let uniform = 1.0 / dim_card as f64;
    let mut out = vec![0.0f64; num.len()];
    for (i, m) in out_stride_walk(num.len(), cards, dim, &out_cards) {
        out[i] = if marginal[m] == 0.0 { uniform } else { num[i] / marginal[m] };
    }
    out
}

/// Pairs each flat index of the full table with the flat index of the table
/// that drops dimension `dim`.
fn out_stride_walk(
    len: usize,
    cards: &[usize],
    dim: usize,
    out_cards: &[usize],
) -> impl Iterator<Item = (usize, usize)> {
    let out_strides = strides(out_cards);
    let mut per_dim = Vec::with_capacity(cards.len());
    let mut od = 0;
    for d in 0..cards.len() {
        if d == dim {
            per_dim.push(0);
        } else {
            per_dim.push(out_strides[od]);
            od += 1;
        }
    }
    let cards = cards.to_vec();
    let mut digits = vec![0usize; cards.len()];
    let mut out_idx = 0usize;
    let mut first = true;
    (0..len).map(move |i| {
        if first {
            first = false;
            return (i, out_idx);
        }
        for d in (0..digits.len()).rev() {
            digits[d] += 1;
            out_idx += per_dim[d];
            if digits[d] < cards[d] {
                break;
            }
            out_idx -= per_dim[d] * cards[d];
            digits[d] = 0;
        }
        (i, out_idx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{gen_random_network, RandomNetSpec};
    use crate::testutil::{enum_joint, enum_map};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn factorizations() {
        assert_eq!(prime_factors(21), vec![3, 7]);
        assert_eq!(prime_factors(12), vec![2, 2, 3]);
        assert_eq!(prime_factors(67), vec![67]);
        assert_eq!(prime_factors(4), vec![2, 2]);
        assert_eq!(prime_factors(2), vec![2]);
        assert_eq!(prime_factors(1), Vec::<usize>::new());
    }

    #[test]
    fn prime_and_untargeted_variables_pass_through() {
        let net = crate::testutil::chain3();
        let (same, map) = split_prime_factors(&net, &BTreeSet::from([0, 1, 2])).unwrap();
        assert!(map.is_identity());
        assert_eq!(same.num_variables(), 3);
        assert_eq!(same.cpt(2).table(), net.cpt(2).table());
        assert_eq!(map.new_vars_of(1), &[1]);
    }

    #[test]
    fn one_composite_variable_becomes_its_digits() {
        // single 21-state variable with P(X = s) proportional to s + 1
        let total: f64 = (1..=21).map(|s| s as f64).sum();
        let table: Vec<f64> = (1..=21).map(|s| s as f64 / total).collect();
        let vars = vec![Variable { id: 0, name: "X".into(), cardinality: 21 }];
        let cpts = vec![Potential::new(vec![(0, 21)], table.clone()).unwrap()];
        let net = BayesianNetwork::new(vars, vec![vec![]], cpts).unwrap();

        let (split, map) = split_prime_factors(&net, &BTreeSet::from([0])).unwrap();
        assert_eq!(split.num_variables(), 2);
        assert_eq!(split.cardinality(0), 3);
        assert_eq!(split.cardinality(1), 7);
        assert_eq!(split.variable(0).name, "X.1");
        assert_eq!(split.variable(1).name, "X.2");
        assert_eq!(split.parents_of(1), &[0]);

        assert_eq!(map.translate_state(0, 16), vec![(0, 2), (1, 2)]);
        for s in 0..21 {
            let digits = map.translate_state(0, s);
            let ds: Vec<usize> = digits.iter().map(|&(_, d)| d).collect();
            assert_eq!(map.restore_state(0, &ds), s);
            let p = split.joint_probability(&ds).unwrap();
            assert!(p.rel_close(crate::model::ScaledValue::from_f64(table[s]), 1e-12), "{s}");
        }
    }

    #[test]
    fn id_translation_skips_over_split_blocks() {
        // a 4-state root feeding a 3-state child
        let vars = vec![
            Variable { id: 0, name: "R".into(), cardinality: 4 },
            Variable { id: 1, name: "C".into(), cardinality: 3 },
        ];
        let child = vec![
            0.2, 0.3, 0.5, //
            0.1, 0.1, 0.8, //
            0.4, 0.4, 0.2, //
            0.6, 0.2, 0.2,
        ];
        let cpts = vec![
            Potential::new(vec![(0, 4)], vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
            Potential::new(vec![(0, 4), (1, 3)], child.clone()).unwrap(),
        ];
        let net = BayesianNetwork::new(vars, vec![vec![], vec![0]], cpts).unwrap();
        let (split, map) = split_prime_factors(&net, &BTreeSet::from([0])).unwrap();

        assert_eq!(map.new_vars_of(0), &[0, 1]);
        assert_eq!(map.new_vars_of(1), &[2]);
        assert_eq!(split.cardinality(2), 3);
        // the child's CPT is reinterpreted, not recomputed
        assert_eq!(split.cpt(2).table(), child.as_slice());
        assert_eq!(split.parents_of(2), &[0, 1]);

        let e = Evidence::from_pairs([(1, 2)]).unwrap();
        let te = map.translate_evidence(&e);
        assert_eq!(te.get(2), Some(2));
        assert_eq!(te.len(), 1);

        let m = Instantiation::from([(0, 3)]);
        let tm = map.translate_instantiation(&m);
        assert_eq!(tm, Instantiation::from([(0, 1), (1, 1)]));
        assert_eq!(map.restore_instantiation(&tm), m);
        assert_eq!(map.translate_var_set(&BTreeSet::from([0])), BTreeSet::from([0, 1]));
    }

    #[test]
    fn splitting_preserves_the_distribution_and_map_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5b117);
        for trial in 0..12u64 {
            let card = [4, 6, 12][trial as usize % 3];
            let spec = RandomNetSpec {
                nodes: 5,
                connectivity: 4,
                seed: 0xfac7_0000 + trial,
                cardinality: card,
            };
            let net = gen_random_network(&spec);
            let targets: BTreeSet<VarId> = (0..5).filter(|_| rng.gen_bool(0.6)).collect();
            let (split, map) = split_prime_factors(&net, &targets).unwrap();

            let mut e = Evidence::new();
            let ev = rng.gen_range(0..5);
            if !targets.contains(&ev) {
                e.assign(ev, rng.gen_range(0..card)).unwrap();
            }
            let te = map.translate_evidence(&e);
            let pr = enum_joint(&net, &e.iter().collect());
            let pr_split = enum_joint(&split, &te.iter().collect());
            assert!(pr.rel_close(pr_split, 1e-9), "trial {trial}: {pr} vs {pr_split}");

            let map_vars: BTreeSet<VarId> =
                (0..5).filter(|v| !e.contains(*v) && rng.gen_bool(0.5)).collect();
            let (want, _) = enum_map(&net, &e, &map_vars);
            let (got, argmax) = enum_map(&split, &te, &map.translate_var_set(&map_vars));
            assert!(want.rel_close(got, 1e-9), "trial {trial}: {want} vs {got}");

            if !map_vars.is_empty() {
                let back = map.restore_instantiation(&argmax);
                let achieved = enum_joint(&net, &e.with_instantiation(&back).unwrap().iter().collect());
                assert!(achieved.rel_close(want, 1e-9), "trial {trial}: restored optimum");
            }
        }
    }
}
