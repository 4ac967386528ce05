use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::treegrow::GrowingTree;
use crate::{Error, Result};

/// Largest arity and step count the enumeration accepts.
pub const MAX_ARITY: usize = 3;
pub const MAX_STEPS: u64 = 5;

/// Exact law of `T_{n+1}(k)` in the indexing of `q_n`: the shape law, the
/// law of the root split (which sums to `n`) and the joint law of the split
/// with the shapes of the `k` subtrees of the first internal node.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactLaw {
    pub arity: usize,
    pub steps: u64,
    pub shapes: BTreeMap<String, BigRational>,
    pub splits: BTreeMap<Vec<u64>, BigRational>,
    pub subtrees: BTreeMap<Vec<u64>, BTreeMap<Vec<String>, BigRational>>,
}

fn check_bound(k: usize, steps: u64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArity(k));
    }
    if k > MAX_ARITY || steps > MAX_STEPS {
        return Err(Error::EnumerationBound(format!(
            "k = {k}, {steps} steps (limits: k <= {MAX_ARITY}, {MAX_STEPS} steps)"
        )));
    }
    Ok(())
}

/// Every growth history of `T_steps(k)` with its probability. Histories
/// leading to the same tree are listed separately.
pub fn weighted_histories(k: usize, steps: u64) -> Result<Vec<(GrowingTree, BigRational)>> {
    check_bound(k, steps)?;
    fn rec(t: GrowingTree, p: BigRational, left: u64, out: &mut Vec<(GrowingTree, BigRational)>) {
        if left == 0 {
            out.push((t, p));
            return;
        }
        let edges = t.edge_count();
        let q = &p / BigInt::from(edges);
        for e in 1..=edges {
            let mut next = t.clone();
            next.grow_at(e).expect("edge in range");
            rec(next, q.clone(), left - 1, out);
        }
    }
    let mut out = Vec::new();
    rec(GrowingTree::new(k)?, BigRational::one(), steps, &mut out);
    Ok(out)
}

/// Exact shape law of `T_steps(k)`.
pub fn tree_law(k: usize, steps: u64) -> Result<BTreeMap<String, BigRational>> {
    let mut law = BTreeMap::new();
    for (t, p) in weighted_histories(k, steps)? {
        *law.entry(t.shape()).or_insert_with(BigRational::zero) += p;
    }
    Ok(law)
}

/// Exact law of `T_{n+1}(k)`; see [`ExactLaw`]. Requires `k <= 3` and
/// `n <= 4`.
pub fn enumerate_exact(k: usize, n: u64) -> Result<ExactLaw> {
    check_bound(k, n + 1)?;
    let mut law = ExactLaw {
        arity: k,
        steps: n + 1,
        shapes: BTreeMap::new(),
        splits: BTreeMap::new(),
        subtrees: BTreeMap::new(),
    };
    for (t, p) in weighted_histories(k, n + 1)? {
        let split = t.root_split()?.0;
        let first = t.first_internal().expect("at least one step");
        let shapes: Vec<String> = t.children(first).map(|c| t.shape_of(c)).collect();
        *law.shapes.entry(t.shape()).or_insert_with(BigRational::zero) += &p;
        *law.splits.entry(split.clone()).or_insert_with(BigRational::zero) += &p;
        *law.subtrees.entry(split).or_default().entry(shapes).or_insert_with(BigRational::zero) += p;
    }
    Ok(law)
}

/// Outcome of an exact identity check over enumerated states.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExactCheck {
    pub cases: usize,
    pub failures: Vec<String>,
}

impl ExactCheck {
    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failures.is_empty()
    }
}

/// Markov branching factorization: for every `m <= n` and every root split
/// `x` of `T_{m+1}`, the subtrees of the first internal node are,
/// given `x`, independent copies of `T_{x_1}, ..., T_{x_k}`. Compared
/// exactly over all shape tuples.
pub fn markov_branching_check(k: usize, n: u64) -> Result<ExactCheck> {
    check_bound(k, n + 1)?;
    let laws: Vec<_> = (0..=n).map(|m| tree_law(k, m)).collect::<Result<_>>()?;
    let mut check = ExactCheck::default();
    for m in 0..=n {
        let law = enumerate_exact(k, m)?;
        for (split, joint) in &law.subtrees {
            let mass = &law.splits[split];
            // Product law over all shape tuples of the given sizes.
            let mut product: Vec<(Vec<String>, BigRational)> = vec![(Vec::new(), BigRational::one())];
            for &size in split {
                let mut next = Vec::new();
                for (tuple, p) in &product {
                    for (shape, q) in &laws[size as usize] {
                        let mut t = tuple.clone();
                        t.push(shape.clone());
                        next.push((t, p * q));
                    }
                }
                product = next;
            }
            for (tuple, p) in &product {
                check.cases += 1;
                let cond = joint.get(tuple).map(|q| q / mass).unwrap_or_else(BigRational::zero);
                if &cond != p {
                    check.failures.push(format!("q_{m}, split {split:?}, shapes {tuple:?}: {cond} != {p}"));
                }
            }
            if joint.len() != product.len() {
                check.failures.push(format!("q_{m}, split {split:?}: support sizes differ"));
            }
        }
    }
    Ok(check)
}

/// One-step identity for `Z_n`, the internal-node count below an internal
/// node: over the `kn + 1` possible next steps, exactly `kZ` of them raise
/// `Z` by one and the rest leave it unchanged, so that
/// `E[Z_{n+1}] (kn + 1) = Z_n (k(n + 1) + 1)`.
pub fn martingale_check_tree(tree: &GrowingTree, check: &mut ExactCheck) {
    let k = tree.arity() as u64;
    let n = tree.step_count();
    let edges = tree.edge_count();
    let nodes: Vec<_> = tree.internal_by_step();
    let before: Vec<u64> = nodes.iter().map(|&v| tree.subtree_internal_count(v).expect("internal")).collect();
    let mut sum = vec![0u64; nodes.len()];
    let mut raised = vec![0u64; nodes.len()];
    for e in 1..=edges {
        let mut next = tree.clone();
        next.grow_at(e).expect("edge in range");
        for (i, &v) in nodes.iter().enumerate() {
            let z = next.subtree_internal_count(v).expect("still internal");
            sum[i] += z;
            match z - before[i] {
                0 => {}
                1 => raised[i] += 1,
                d => check.failures.push(format!("node {v} jumped by {d}")),
            }
        }
    }
    for (i, &v) in nodes.iter().enumerate() {
        check.cases += 1;
        let z = before[i];
        if raised[i] != k * z || sum[i] != z * (k * (n + 1) + 1) {
            check.failures.push(format!(
                "node {v} of a {n}-step tree: sum {} vs {}, raised {} vs {}",
                sum[i],
                z * (k * (n + 1) + 1),
                raised[i],
                k * z
            ));
        }
    }
}

/// [`martingale_check_tree`] on every reachable state of `T_m(k)` for
/// `m <= steps`.
pub fn martingale_check(k: usize, steps: u64) -> Result<ExactCheck> {
    let mut check = ExactCheck::default();
    for m in 0..=steps {
        let mut seen = std::collections::BTreeSet::new();
        for (t, _) in weighted_histories(k, m)? {
            if seen.insert(t.to_json()) {
                martingale_check_tree(&t, &mut check);
            }
        }
    }
    Ok(check)
}

pub fn to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}
