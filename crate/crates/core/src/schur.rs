//! Schur functions, the law of the RSK shape of a geometric service matrix,
//! and the partition-valued Markov chain that grows it one row at a time.
//!
//! Values are generic over [`Weight`] so the same code runs in `f64` for
//! Monte Carlo comparisons and in exact rationals for law-level identities.

use std::collections::HashMap;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rsk::{Partition, Tableau};

pub trait Weight:
    Clone
    + Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + PartialOrd
{
}

impl<T> Weight for T where
    T: Clone + Debug + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T> + PartialOrd
{
}

/// Geometric parameters `q_1, .., q_K`, each in `(0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(invalid("at least one weight is required"));
        }
        if let Some(bad) = q.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(invalid(format!("weight {bad} outside (0, 1)")));
        }
        Ok(WeightVector(q))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `a(q) = Π (1 - q_j)`.
    pub fn a(&self) -> f64 {
        self.0.iter().map(|q| 1.0 - q).product()
    }

    /// Weights reordered so that entry `j` is `q[order[j]]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len()
            || order
                .iter()
                .any(|&j| j >= self.len() || std::mem::replace(&mut seen[j], true))
        {
            return Err(invalid("order must be a permutation of the weights"));
        }
        Ok(WeightVector(order.iter().map(|&j| self.0[j]).collect()))
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = crate::Error;

    fn try_from(q: Vec<f64>) -> Result<Self> {
        WeightVector::new(q)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// All semistandard tableaux of the given shape over `1..=k`, by filling the
/// boxes in reading order.
pub fn ssyt_enumerate(shape: &Partition, k: u32) -> Vec<Tableau> {
    if shape.length() > k as usize {
        return Vec::new();
    }
    let lens: Vec<usize> = shape.parts().iter().map(|&p| p as usize).collect();
    let mut rows: Vec<Vec<u32>> = lens.iter().map(|&l| vec![0; l]).collect();
    let cells: Vec<(usize, usize)> = lens
        .iter()
        .enumerate()
        .flat_map(|(r, &l)| (0..l).map(move |c| (r, c)))
        .collect();
    let mut out = Vec::new();
    fill(&cells, 0, k, &mut rows, &mut out);
    out
}

fn fill(cells: &[(usize, usize)], idx: usize, k: u32, rows: &mut [Vec<u32>], out: &mut Vec<Tableau>) {
    let Some(&(r, c)) = cells.get(idx) else {
        out.push(Tableau::new(rows.to_vec()).expect("constructed semistandard"));
        return;
    };
    let from_left = if c > 0 { rows[r][c - 1] } else { 1 };
    let from_above = if r > 0 { rows[r - 1][c] + 1 } else { 1 };
    for label in from_left.max(from_above)..=k {
        rows[r][c] = label;
        fill(cells, idx + 1, k, rows, out);
    }
    rows[r][c] = 0;
}

/// Monomial `x^T` of a tableau.
pub fn monomial<T: Weight>(t: &Tableau, x: &[T]) -> T {
    t.rows()
        .iter()
        .flatten()
        .fold(T::one(), |acc, &label| acc * x[label as usize - 1].clone())
}

/// Visits every `μ` with `λ/μ` a horizontal strip and at most `parts` parts.
fn for_each_strip_removal(lambda: &Partition, parts: usize, mut visit: impl FnMut(Partition)) {
    let lam = lambda.padded(parts + 1);
    let mut mu = vec![0u64; parts];
    fn rec(i: usize, lam: &[u64], mu: &mut Vec<u64>, visit: &mut dyn FnMut(Partition)) {
        if i == mu.len() {
            visit(Partition::new(mu.clone()).expect("interlacing parts are decreasing"));
            return;
        }
        for v in lam[i + 1]..=lam[i] {
            mu[i] = v;
            rec(i + 1, lam, mu, visit);
        }
    }
    rec(0, &lam, &mut mu, &mut visit);
}

/// `s_λ(x_1, .., x_k)` for a fixed point `x`, memoised on `(λ, k)`.
///
/// Uses `s_λ(x_1..x_k) = Σ_μ x_k^{|λ|-|μ|} s_μ(x_1..x_{k-1})` over horizontal
/// strips `λ/μ`, i.e. the tableau sum grouped by the boxes labelled `k`.
#[derive(Clone, Debug)]
pub struct SchurEvaluator<T> {
    x: Vec<T>,
    memo: HashMap<(Partition, usize), T>,
}

impl<T: Weight> SchurEvaluator<T> {
    pub fn new(x: Vec<T>) -> Self {
        SchurEvaluator {
            x,
            memo: HashMap::new(),
        }
    }

    pub fn variables(&self) -> usize {
        self.x.len()
    }

    pub fn eval(&mut self, lambda: &Partition) -> T {
        self.eval_prefix(lambda, self.x.len())
    }

    fn eval_prefix(&mut self, lambda: &Partition, k: usize) -> T {
        if lambda.length() > k {
            return T::zero();
        }
        if k == 0 {
            return T::one();
        }
        let key = (lambda.clone(), k);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let mut subs = Vec::new();
        for_each_strip_removal(lambda, k - 1, |mu| subs.push(mu));
        let xk = self.x[k - 1].clone();
        let mut total = T::zero();
        for mu in subs {
            let strip = (lambda.size() - mu.size()) as usize;
            let inner = self.eval_prefix(&mu, k - 1);
            total = total + num_traits::pow(xk.clone(), strip) * inner;
        }
        self.memo.insert(key, total.clone());
        total
    }
}

/// One-shot `s_λ(x)`; zero when `λ` has more parts than `x` has entries.
pub fn schur_eval<T: Weight>(lambda: &Partition, x: &[T]) -> T {
    SchurEvaluator::new(x.to_vec()).eval(lambda)
}

/// `l_1 >= m_1 >= l_2 >= m_2 >= ..`.
pub fn interlaces(l: &Partition, m: &Partition) -> bool {
    let len = l.length().max(m.length()) + 1;
    (1..=len).all(|i| l.part(i) >= m.part(i) && m.part(i) >= l.part(i + 1))
}

/// Partitions with at most `k` parts and first part exactly `first`.
pub fn partitions_with_first(first: u64, k: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if k == 0 {
        if first == 0 {
            out.push(Partition::empty());
        }
        return out;
    }
    let mut parts = vec![first];
    fn rec(k: usize, parts: &mut Vec<u64>, out: &mut Vec<Partition>) {
        if parts.len() == k {
            out.push(Partition::new(parts.clone()).expect("decreasing by construction"));
            return;
        }
        let cap = *parts.last().unwrap();
        for v in (0..=cap).rev() {
            parts.push(v);
            rec(k, parts, out);
            parts.pop();
        }
    }
    rec(k, &mut parts, &mut out);
    out
}

/// Law of the RSK shape of an `N x K` matrix with independent entries
/// `P{u(i,j) = n} = (1 - q_j) q_j^n`:
/// `P{λ = l} = a(q)^N s_l(q) s_l(1^N)`.
#[derive(Clone, Debug)]
pub struct ShapeLaw<T> {
    a: T,
    n: usize,
    weights: SchurEvaluator<T>,
    ones: SchurEvaluator<T>,
}

impl<T: Weight> ShapeLaw<T> {
    pub fn new(q: Vec<T>, n: usize) -> Result<Self> {
        if q.is_empty() || q.iter().any(|x| !(*x > T::zero() && *x < T::one())) {
            return Err(invalid("weights must lie in (0, 1)"));
        }
        let a = q.iter().fold(T::one(), |acc, x| acc * (T::one() - x.clone()));
        Ok(ShapeLaw {
            a,
            n,
            weights: SchurEvaluator::new(q),
            ones: SchurEvaluator::new(vec![T::one(); n]),
        })
    }

    pub fn stages(&self) -> usize {
        self.weights.variables()
    }

    pub fn pmf(&mut self, l: &Partition) -> T {
        num_traits::pow(self.a.clone(), self.n) * self.weights.eval(l) * self.ones.eval(l)
    }

    /// `a(q) s_l(q) / s_m(q)` when `l` interlaces `m`, else zero.
    pub fn transition(&mut self, m: &Partition, l: &Partition) -> T {
        if !interlaces(l, m) {
            return T::zero();
        }
        self.a.clone() * self.weights.eval(l) / self.weights.eval(m)
    }
}

impl ShapeLaw<f64> {
    pub fn from_weights(q: &WeightVector, n: usize) -> Self {
        ShapeLaw::new(q.as_slice().to_vec(), n).expect("validated weights")
    }
}

/// `P{λ = l}` for weights `q` after `n` rows.
pub fn shape_pmf(l: &Partition, q: &WeightVector, n: usize) -> f64 {
    ShapeLaw::from_weights(q, n).pmf(l)
}

/// One step of the partition chain from `m` to `l`.
pub fn transition_prob(m: &Partition, l: &Partition, q: &WeightVector) -> f64 {
    ShapeLaw::from_weights(q, 0).transition(m, l)
}

/// Truncated sum of a nonnegative mass over partitions, grown by first part.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedTotal {
    pub total: f64,
    /// Largest first part included.
    pub cap: u64,
    /// Mass added by the last layer.
    pub last_layer: f64,
}

/// Sums `mass` over layers `first = start, start + 1, ..` until one layer adds
/// less than `tol` times the running total and no more than the layer before.
pub fn truncated_total(
    start: u64,
    tol: f64,
    max_cap: u64,
    mut layer: impl FnMut(u64) -> f64,
) -> Result<TruncatedTotal> {
    let mut total = 0.0;
    let mut previous = f64::INFINITY;
    for cap in start..=max_cap {
        let added = layer(cap);
        total += added;
        if added < tol * total && added <= previous {
            return Ok(TruncatedTotal {
                total,
                cap,
                last_layer: added,
            });
        }
        previous = added;
    }
    Err(invalid(format!("mass did not settle below first part {max_cap}")))
}

/// `Σ_l P{λ = l}` truncated by first part.
pub fn shape_law_total(q: &WeightVector, n: usize, tol: f64) -> Result<TruncatedTotal> {
    let mut law = ShapeLaw::from_weights(q, n);
    let k = q.len();
    truncated_total(0, tol, 10_000, |first| {
        partitions_with_first(first, k).iter().map(|l| law.pmf(l)).sum()
    })
}

/// Partitions `l` interlacing `m` with at most `k` parts and `l_1 = first`.
pub fn interlacing_with_first(m: &Partition, k: usize, first: u64) -> Vec<Partition> {
    let mut out = Vec::new();
    if first < m.part(1) || k == 0 || m.length() > k {
        return out;
    }
    let mut parts = vec![first];
    fn rec(m: &Partition, k: usize, parts: &mut Vec<u64>, out: &mut Vec<Partition>) {
        let i = parts.len() + 1;
        if i > k {
            out.push(Partition::new(parts.clone()).expect("interlacing parts decrease"));
            return;
        }
        for v in m.part(i)..=m.part(i - 1) {
            parts.push(v);
            rec(m, k, parts, out);
            parts.pop();
        }
    }
    rec(m, k, &mut parts, &mut out);
    out
}

/// `Σ_l P{m -> l}` truncated by first part.
pub fn transition_total(m: &Partition, q: &WeightVector, tol: f64) -> Result<TruncatedTotal> {
    let mut law = ShapeLaw::from_weights(q, 0);
    let k = q.len();
    truncated_total(m.part(1), tol, m.part(1) + 10_000, |first| {
        interlacing_with_first(m, k, first)
            .iter()
            .map(|l| law.transition(m, l))
            .sum()
    })
}

/// Law of the chain after `n` steps from the empty partition, evaluated at
/// one partition by summing over all interlacing paths inside it.
#[derive(Clone, Debug)]
pub struct PartitionChain<T> {
    law: ShapeLaw<T>,
    memo: HashMap<(Partition, usize), T>,
}

impl<T: Weight> PartitionChain<T> {
    pub fn new(q: Vec<T>) -> Result<Self> {
        Ok(PartitionChain {
            law: ShapeLaw::new(q, 0)?,
            memo: HashMap::new(),
        })
    }

    /// `P{λ^(n) = l}` with `λ^(0) = ∅`.
    pub fn prob(&mut self, l: &Partition, n: usize) -> T {
        if l.length() > self.law.stages() {
            return T::zero();
        }
        if n == 0 {
            return if l.length() == 0 { T::one() } else { T::zero() };
        }
        let key = (l.clone(), n);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let mut preds = Vec::new();
        for_each_strip_removal(l, self.law.stages(), |m| preds.push(m));
        let mut total = T::zero();
        for m in preds {
            let before = self.prob(&m, n - 1);
            if before != T::zero() {
                total = total + before * self.law.transition(&m, l);
            }
        }
        self.memo.insert(key, total.clone());
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn p(parts: &[u64]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn binomial(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(ssyt_enumerate(&p(&[1]), 2).len(), 2);
        let two: Vec<String> = ssyt_enumerate(&p(&[2]), 2).iter().map(|t| t.to_string()).collect();
        assert_eq!(two, vec!["1 1", "1 2", "2 2"]);
        let col = ssyt_enumerate(&p(&[1, 1]), 2);
        assert_eq!(col.len(), 1);
        assert_eq!(col[0].rows(), &[vec![1], vec![2]]);
        assert!(ssyt_enumerate(&p(&[1, 1, 1]), 2).is_empty());
        assert_eq!(ssyt_enumerate(&Partition::empty(), 3).len(), 1);
    }

    #[test]
    fn enumeration_is_valid_and_distinct() {
        let all = ssyt_enumerate(&p(&[3, 2, 1]), 4);
        assert!(all.iter().all(|t| t.is_valid() && t.shape() == p(&[3, 2, 1])));
        let mut dedup = all.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), all.len());
        // hook-content formula for (3,2,1) with 4 letters
        assert_eq!(all.len(), 64);
    }

    #[test]
    fn small_schur_polynomials() {
        let x = [rat(2, 3), rat(5, 7)];
        assert_eq!(schur_eval(&p(&[1]), &x), rat(2, 3) + rat(5, 7));
        let expect = rat(4, 9) + rat(10, 21) + rat(25, 49);
        assert_eq!(schur_eval(&p(&[2]), &x), expect);
        assert_eq!(schur_eval(&p(&[1, 1]), &x), rat(10, 21));
        assert_eq!(schur_eval(&p(&[1, 1, 1]), &x), rat(0, 1));
        assert_eq!(schur_eval(&Partition::empty(), &x), rat(1, 1));
    }

    #[test]
    fn value_at_ones_counts_tableaux() {
        for (shape, k) in [(vec![3, 1], 3u32), (vec![2, 2], 3), (vec![4, 2, 1], 3), (vec![2], 5)] {
            let l = p(&shape);
            let ones = vec![1.0f64; k as usize];
            assert_eq!(schur_eval(&l, &ones), ssyt_enumerate(&l, k).len() as f64);
        }
    }

    #[test]
    fn evaluator_matches_tableau_sum() {
        let x = [rat(1, 2), rat(1, 3), rat(2, 5)];
        for shape in [vec![2, 1], vec![3, 3], vec![2, 2, 1], vec![4]] {
            let l = p(&shape);
            let by_tableaux = ssyt_enumerate(&l, 3)
                .iter()
                .fold(rat(0, 1), |acc, t| acc + monomial(t, &x));
            assert_eq!(schur_eval(&l, &x), by_tableaux);
        }
    }

    #[test]
    fn shape_pmf_examples() {
        let q = WeightVector::new(vec![0.3, 0.5]).unwrap();
        assert!((shape_pmf(&Partition::empty(), &q, 4) - q.a().powi(4)).abs() < 1e-15);
        // one stage: negative binomial law of a sum of N geometrics on {0, 1, ..}
        let q1 = WeightVector::new(vec![0.4]).unwrap();
        for m in 0..12u64 {
            let nb = binomial(m + 3, 3) * 0.6f64.powi(4) * 0.4f64.powi(m as i32);
            assert!((shape_pmf(&p(&[m]), &q1, 4) - nb).abs() < 1e-14);
        }
    }

    #[test]
    fn shape_law_normalizes() {
        let q = WeightVector::new(vec![0.3, 0.5]).unwrap();
        let t = shape_law_total(&q, 4, 1e-10).unwrap();
        assert!((t.total - 1.0).abs() < 1e-9, "{t:?}");
    }

    #[test]
    fn transition_examples() {
        let q = WeightVector::new(vec![0.3, 0.6]).unwrap();
        assert!((transition_prob(&Partition::empty(), &Partition::empty(), &q) - q.a()).abs() < 1e-15);
        assert_eq!(transition_prob(&p(&[2]), &p(&[1]), &q), 0.0);
        let q1 = WeightVector::new(vec![0.3]).unwrap();
        assert!((transition_prob(&p(&[2]), &p(&[5]), &q1) - 0.7 * 0.3f64.powi(3)).abs() < 1e-15);
        let t = transition_total(&p(&[3, 1]), &q, 1e-10).unwrap();
        assert!((t.total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn interlacing() {
        assert!(interlaces(&p(&[3, 1]), &p(&[2, 1])));
        assert!(!interlaces(&p(&[1]), &p(&[2])));
        assert!(!interlaces(&p(&[3, 3]), &p(&[1])));
        assert!(Partition::new(vec![1, 3]).is_err());
    }

    #[test]
    fn chain_reproduces_shape_law_exactly() {
        let q = [rat(1, 3), rat(1, 2), rat(1, 5)];
        for k in 1..=3 {
            let qk = q[..k].to_vec();
            let mut chain = PartitionChain::new(qk.clone()).unwrap();
            for n in 0..=4 {
                let mut law = ShapeLaw::new(qk.clone(), n).unwrap();
                for first in 0..=4 {
                    for l in partitions_with_first(first, k) {
                        assert_eq!(chain.prob(&l, n), law.pmf(&l), "l = {l}, n = {n}, k = {k}");
                    }
                }
            }
        }
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![]).is_err());
        assert!(WeightVector::new(vec![0.3, 1.0]).is_err());
        assert!(WeightVector::new(vec![0.0]).is_err());
        let q = WeightVector::new(vec![0.3, 0.6]).unwrap();
        assert_eq!(q.permuted(&[1, 0]).unwrap().as_slice(), &[0.6, 0.3]);
        assert!(q.permuted(&[0, 0]).is_err());
    }

    fn small_partition() -> impl Strategy<Value = Partition> {
        proptest::collection::vec(0u64..=3, 0..=3).prop_map(|mut v| {
            v.sort_unstable_by(|a, b| b.cmp(a));
            Partition::new(v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn schur_is_symmetric(l in small_partition(), a in 1i64..9, b in 1i64..9, c in 1i64..9) {
            let x = [rat(a, 10), rat(b, 7), rat(c, 11)];
            let base = schur_eval(&l, &x);
            for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let y: Vec<_> = perm.iter().map(|&i| x[i].clone()).collect();
                prop_assert_eq!(schur_eval(&l, &y), base.clone());
            }
        }

        #[test]
        fn shape_pmf_symmetric_in_weights(l in small_partition(), a in 0.05f64..0.95, b in 0.05f64..0.95) {
            let q = WeightVector::new(vec![a, b]).unwrap();
            let r = q.permuted(&[1, 0]).unwrap();
            let (x, y) = (shape_pmf(&l, &q, 3), shape_pmf(&l, &r, 3));
            prop_assert!((x - y).abs() <= 1e-14 * x.max(1e-300));
        }
    }
}
