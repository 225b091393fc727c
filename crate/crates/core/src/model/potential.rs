//! Dense potentials over sets of discrete variables.
//!
//! A potential stores its scope sorted by ascending variable id and its table
//! row-major with the **last** scope variable varying fastest. All algebra
//! below preserves that canonical layout, which is what makes cached message
//! tables comparable bit-for-bit across recomputations.

use super::scaled::pow2;
use super::{Evidence, ModelError, ScaledValue, VarId};

/// Renormalization window: after a multiply, if the largest entry leaves
/// `[2^-512, 2^512]` the table is rescaled by a power of two folded into
/// `scale_exp`. Power-of-two scaling is exact, so renormalizing never changes
/// the represented values.
const SCALE_HI: f64 = f64::from_bits((1023u64 + 512) << 52);
const SCALE_LO: f64 = f64::from_bits((1023u64 - 512) << 52);

/// A nonnegative function of finitely many discrete variables, represented by
/// value `table[i] * 2^scale_exp`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    table: Vec<f64>,
    scale_exp: i64,
}

/// Row-major strides for a cardinality vector (last dimension fastest).
pub(crate) fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; cards.len()];
    for d in (0..cards.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * cards[d + 1];
    }
    s
}

impl Potential {
    /// Builds a potential from `(variable, cardinality)` pairs and a table in
    /// canonical layout.
    pub fn new(scope: Vec<(VarId, usize)>, table: Vec<f64>) -> Result<Self, ModelError> {
        Self::with_scale(scope, table, 0)
    }

    pub fn with_scale(
        scope: Vec<(VarId, usize)>,
        table: Vec<f64>,
        scale_exp: i64,
    ) -> Result<Self, ModelError> {
        for w in scope.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(ModelError::UnsortedScope);
            }
        }
        for &(var, card) in &scope {
            if card == 0 {
                return Err(ModelError::ZeroCardinality { var });
            }
        }
        let expected: usize = scope.iter().map(|&(_, c)| c).product();
        if table.len() != expected {
            return Err(ModelError::TableSizeMismatch { expected, got: table.len() });
        }
        if table.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(ModelError::InvalidEntry);
        }
        let (scope, cards) = scope.into_iter().unzip();
        Ok(Potential { scope, cards, table, scale_exp })
    }

    /// The scalar potential over the empty scope.
    pub fn trivial(value: f64) -> Self {
        assert!(value.is_finite() && value >= 0.0);
        Potential { scope: Vec::new(), cards: Vec::new(), table: vec![value], scale_exp: 0 }
    }

    pub fn unit() -> Self {
        Self::trivial(1.0)
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn scale_exp(&self) -> i64 {
        self.scale_exp
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a potential always has at least one entry
    }

    pub fn is_trivial(&self) -> bool {
        self.scope.is_empty()
    }

    pub fn mentions(&self, var: VarId) -> bool {
        self.scope.binary_search(&var).is_ok()
    }

    /// The value of a scalar potential.
    pub fn value(&self) -> ScaledValue {
        assert!(self.is_trivial(), "value() requires an empty scope");
        ScaledValue::from_parts(self.table[0], self.scale_exp)
    }

    /// Entry at a flat index, interpreted under the scale exponent.
    pub fn entry(&self, idx: usize) -> ScaledValue {
        ScaledValue::from_parts(self.table[idx], self.scale_exp)
    }

    /// Flat index of a full instantiation of the scope (states aligned with
    /// `scope()`).
    pub fn index_of(&self, states: &[usize]) -> usize {
        assert_eq!(states.len(), self.scope.len());
        let mut idx = 0;
        for (d, &s) in states.iter().enumerate() {
            debug_assert!(s < self.cards[d]);
            idx = idx * self.cards[d] + s;
        }
        idx
    }

    fn max_entry(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }

    /// Folds an out-of-window magnitude into `scale_exp`. A zero table is
    /// legal and left untouched.
    fn renormalize(&mut self) {
        let m = self.max_entry();
        if m == 0.0 || (SCALE_LO..=SCALE_HI).contains(&m) {
            return;
        }
        let k = ScaledValue::from_f64(m)
            .log2()
            .expect("nonzero maximum")
            .floor() as i64;
        let mut remaining = -k;
        while remaining != 0 {
            let step = remaining.clamp(-1000, 1000);
            let factor = pow2(step);
            for x in self.table.iter_mut() {
                *x *= factor;
            }
            remaining -= step;
        }
        self.scale_exp += k;
    }

    /// Drops evidence variables from the scope, selecting the evidence states.
    /// Variables absent from the scope are ignored; the scale is preserved.
    pub fn restrict(&self, evidence: &Evidence) -> Result<Potential, ModelError> {
        let mut fixed = Vec::new(); // (dim, state)
        for (d, &v) in self.scope.iter().enumerate() {
            if let Some(state) = evidence.get(v) {
                if state >= self.cards[d] {
                    return Err(ModelError::StateOutOfRange {
                        var: v,
                        state,
                        card: self.cards[d],
                    });
                }
                fixed.push((d, state));
            }
        }
        if fixed.is_empty() {
            return Ok(self.clone());
        }
        let in_strides = strides(&self.cards);
        let base: usize = fixed.iter().map(|&(d, s)| s * in_strides[d]).sum();
        let kept: Vec<usize> =
            (0..self.scope.len()).filter(|d| !fixed.iter().any(|&(fd, _)| fd == *d)).collect();
        let out_scope: Vec<(VarId, usize)> =
            kept.iter().map(|&d| (self.scope[d], self.cards[d])).collect();
        let out_len: usize = out_scope.iter().map(|&(_, c)| c).product();
        let mut table = Vec::with_capacity(out_len);

        let kept_cards: Vec<usize> = kept.iter().map(|&d| self.cards[d]).collect();
        let kept_strides: Vec<usize> = kept.iter().map(|&d| in_strides[d]).collect();
        let mut digits = vec![0usize; kept.len()];
        let mut in_idx = base;
        for _ in 0..out_len {
            table.push(self.table[in_idx]);
            for d in (0..digits.len()).rev() {
                digits[d] += 1;
                in_idx += kept_strides[d];
                if digits[d] < kept_cards[d] {
                    break;
                }
                in_idx -= kept_strides[d] * kept_cards[d];
                digits[d] = 0;
            }
        }
        let mut out =
            Potential::with_scale(out_scope, table, self.scale_exp).expect("restriction is valid");
        debug_assert_eq!(out.len(), out_len);
        out.renormalize();
        Ok(out)
    }

    /// Pointwise product over the union scope. Shared variables must agree on
    /// cardinality (guaranteed when both potentials come from one network).
    pub fn multiply(&self, other: &Potential) -> Potential {
        // merge scopes
        let mut scope = Vec::with_capacity(self.scope.len() + other.scope.len());
        let (mut i, mut j) = (0, 0);
        while i < self.scope.len() || j < other.scope.len() {
            let take_left = match (self.scope.get(i), other.scope.get(j)) {
                (Some(&a), Some(&b)) => {
                    if a == b {
                        assert_eq!(
                            self.cards[i], other.cards[j],
                            "variable {a} has conflicting cardinalities"
                        );
                    }
                    a <= b
                }
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => unreachable!(),
            };
            if take_left {
                let v = self.scope[i];
                scope.push((v, self.cards[i]));
                i += 1;
                if other.scope.get(j) == Some(&v) {
                    j += 1;
                }
            } else {
                scope.push((other.scope[j], other.cards[j]));
                j += 1;
            }
        }

        let out_cards: Vec<usize> = scope.iter().map(|&(_, c)| c).collect();
        let out_len: usize = out_cards.iter().product();
        let a_str = embedded_strides(&scope, &self.scope, &self.cards);
        let b_str = embedded_strides(&scope, &other.scope, &other.cards);

        let mut table = Vec::with_capacity(out_len);
        let mut digits = vec![0usize; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..out_len {
            table.push(self.table[ia] * other.table[ib]);
            for d in (0..digits.len()).rev() {
                digits[d] += 1;
                ia += a_str[d];
                ib += b_str[d];
                if digits[d] < out_cards[d] {
                    break;
                }
                ia -= a_str[d] * out_cards[d];
                ib -= b_str[d] * out_cards[d];
                digits[d] = 0;
            }
        }
        let mut out = Potential::with_scale(scope, table, self.scale_exp + other.scale_exp)
            .expect("product of valid potentials is valid");
        out.renormalize();
        out
    }

    /// Sums a variable out of the scope.
    pub fn sum_out(&self, var: VarId) -> Result<Potential, ModelError> {
        self.eliminate_dim(var, false).map(|(p, _)| p)
    }

    /// Maximizes a variable out of the scope. The second result holds, for
    /// each entry of the reduced table, the smallest state of `var` attaining
    /// the maximum.
    pub fn max_out(&self, var: VarId) -> Result<(Potential, Vec<usize>), ModelError> {
        self.eliminate_dim(var, true)
    }

    fn eliminate_dim(&self, var: VarId, maximize: bool) -> Result<(Potential, Vec<usize>), ModelError> {
        let dim = self
            .scope
            .binary_search(&var)
            .map_err(|_| ModelError::NotInScope { var })?;
        let out_scope: Vec<(VarId, usize)> = self
            .scope
            .iter()
            .zip(&self.cards)
            .enumerate()
            .filter(|&(d, _)| d != dim)
            .map(|(_, (&v, &c))| (v, c))
            .collect();
        let out_len: usize = out_scope.iter().map(|&(_, c)| c).product();
        let out_strides = {
            let out_cards: Vec<usize> = out_scope.iter().map(|&(_, c)| c).collect();
            strides(&out_cards)
        };

        let mut table = vec![0.0f64; out_len];
        let mut argmax = if maximize { vec![0usize; out_len] } else { Vec::new() };

        // one linear pass over the input; the output index advances with an
        // odometer whose `dim` digit has stride zero
        let mut digits = vec![0usize; self.scope.len()];
        let mut out_idx = 0usize;
        let dim_stride_out: Vec<usize> = {
            let mut s = Vec::with_capacity(self.scope.len());
            let mut out_d = 0;
            for d in 0..self.scope.len() {
                if d == dim {
                    s.push(0);
                } else {
                    s.push(out_strides[out_d]);
                    out_d += 1;
                }
            }
            s
        };
        for (in_idx, &x) in self.table.iter().enumerate() {
            let _ = in_idx;
            if maximize {
                // ties keep the earlier (smaller) state: strict comparison only
                if x > table[out_idx] {
                    table[out_idx] = x;
                    argmax[out_idx] = digits[dim];
                }
            } else {
                table[out_idx] += x;
            }
            for d in (0..digits.len()).rev() {
                digits[d] += 1;
                out_idx += dim_stride_out[d];
                if digits[d] < self.cards[d] {
                    break;
                }
                out_idx -= dim_stride_out[d] * self.cards[d];
                digits[d] = 0;
            }
        }
        let mut out = Potential::with_scale(out_scope, table, self.scale_exp)
            .expect("reduction of a valid potential is valid");
        out.renormalize();
        Ok((out, argmax))
    }
}

/// For each dimension of `scope` (with cardinalities), the stride of that
/// variable inside the table whose scope is `sub` — zero when absent.
fn embedded_strides(
    scope: &[(VarId, usize)],
    sub: &[VarId],
    sub_cards: &[usize],
) -> Vec<usize> {
    let sub_strides = strides(sub_cards);
    scope
        .iter()
        .map(|&(v, _)| match sub.binary_search(&v) {
            Ok(d) => sub_strides[d],
            Err(_) => 0,
        })
        .collect()
}
