//! Two-parameter Chinese restaurant processes and the restaurants hidden in
//! a growing tree.

use std::fmt::Write as _;

use rand::Rng;

use crate::marginals::spanned_by_ranks;
use crate::treegrow::{GrowingTree, NodeId, NodeKind};
use crate::{Error, Result};

/// Seating of an `(alpha, theta)` restaurant.
#[derive(Clone, Debug, PartialEq)]
pub struct CrpState {
    alpha: f64,
    theta: f64,
    tables: Vec<u64>,
    clients: u64,
}

/// Where the next client sat.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Seat {
    Join(usize),
    New,
}

fn check_params(alpha: f64, theta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) || !(theta > -alpha) || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("need 0 < alpha < 1 and theta > -alpha, got ({alpha}, {theta})")));
    }
    Ok(())
}

impl CrpState {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        Self::with_tables(alpha, theta, Vec::new())
    }

    pub fn with_tables(alpha: f64, theta: f64, tables: Vec<u64>) -> Result<Self> {
        check_params(alpha, theta)?;
        if tables.contains(&0) {
            return Err(Error::InvalidParameter("tables must be non-empty".into()));
        }
        if tables.is_empty() && theta <= 0.0 {
            return Err(Error::InvalidParameter("an empty restaurant needs theta > 0".into()));
        }
        let clients = tables.iter().sum();
        Ok(Self { alpha, theta, tables, clients })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tables(&self) -> &[u64] {
        &self.tables
    }

    pub fn table_count(&self) -> usize {
        self.tables.len()
    }

    pub fn clients(&self) -> u64 {
        self.clients
    }

    pub fn largest_table(&self) -> u64 {
        self.tables.iter().copied().max().unwrap_or(0)
    }

    pub fn join_probability(&self, table: usize) -> f64 {
        (self.tables[table] as f64 - self.alpha) / (self.clients as f64 + self.theta)
    }

    pub fn new_table_probability(&self) -> f64 {
        (self.theta + self.alpha * self.tables.len() as f64) / (self.clients as f64 + self.theta)
    }

    /// Seats one client using a single uniform draw.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Seat {
        let total = self.clients as f64 + self.theta;
        let mut u = rng.random::<f64>() * total;
        let mut seat = Seat::New;
        for (i, &n) in self.tables.iter().enumerate() {
            u -= n as f64 - self.alpha;
            if u < 0.0 {
                seat = Seat::Join(i);
                break;
            }
        }
        match seat {
            Seat::Join(i) => self.tables[i] += 1,
            Seat::New => self.tables.push(1),
        }
        self.clients += 1;
        seat
    }
}

/// One row of a restaurant trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrpSnapshot {
    pub step: u64,
    pub table_count: usize,
    pub largest_table: u64,
}

/// Runs `steps` seatings of an `(alpha, theta)` restaurant started from the
/// table sizes `init`, recording the state after every step (step 0 is the
/// initial state).
pub fn crp_run<R: Rng + ?Sized>(
    alpha: f64,
    theta: f64,
    steps: u64,
    init: &[u64],
    rng: &mut R,
) -> Result<(CrpState, Vec<CrpSnapshot>)> {
    let mut state = CrpState::with_tables(alpha, theta, init.to_vec())?;
    let mut rows = Vec::with_capacity(steps as usize + 1);
    let snap = |s: &CrpState, step| CrpSnapshot { step, table_count: s.table_count(), largest_table: s.largest_table() };
    rows.push(snap(&state, 0));
    for step in 1..=steps {
        state.step(rng);
        rows.push(snap(&state, step));
    }
    Ok((state, rows))
}

pub fn trajectory_csv(rows: &[CrpSnapshot]) -> String {
    let mut out = String::from("step,table_count,largest_table\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.step, r.table_count, r.largest_table);
    }
    out
}

/// A restaurant read off a tree, each table keyed by a tree vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeRestaurant {
    pub keys: Vec<NodeId>,
    pub state: CrpState,
}

impl TreeRestaurant {
    pub fn size_of(&self, key: NodeId) -> Option<u64> {
        self.keys.iter().position(|&k| k == key).map(|i| self.state.tables[i])
    }
}

fn internal_nodes_below(tree: &GrowingTree, v: NodeId) -> u64 {
    tree.subtree_internal_count(v).unwrap_or(0)
}

/// Tables are the vertices strictly between the root and the leaf of rank
/// `leaf_rank`, listed from the root down; a table's size is the number of
/// internal nodes whose branch point with that leaf is the vertex. The
/// parameters are `(1/k, 1/k)`.
pub fn spine_tables(tree: &GrowingTree, leaf_rank: u64) -> Result<TreeRestaurant> {
    let leaf = tree.leaf_at_rank(leaf_rank)?;
    let mut spine = Vec::new();
    let mut v = tree.parent(leaf).expect("leaf has a parent");
    let mut below = leaf;
    while tree.kind(v) != NodeKind::Root {
        spine.push((v, below));
        below = v;
        v = tree.parent(v).expect("internal node has a parent");
    }
    spine.reverse();
    let mut keys = Vec::with_capacity(spine.len());
    let mut sizes = Vec::with_capacity(spine.len());
    for (v, next) in spine {
        let off: u64 = tree.children(v).filter(|&c| c != next).map(|c| internal_nodes_below(tree, c)).sum();
        keys.push(v);
        sizes.push(off + 1);
    }
    let a = 1.0 / tree.arity() as f64;
    Ok(TreeRestaurant { keys, state: CrpState::with_tables(a, a, sizes)? })
}

/// Tables are the internal nodes of `T_n` lying on `T^p_n` without being
/// branch points of it; the size of a table is one plus the number of
/// internal nodes hanging off `T^p_n` at that vertex. The parameters are
/// `(1/k, p + 1/k)`.
pub fn attachment_tables(tree: &GrowingTree, p: u64) -> Result<TreeRestaurant> {
    if p > tree.step_count() {
        return Err(Error::MarginalOutOfRange { p, n: tree.step_count() });
    }
    let span = spanned_by_ranks(tree, (tree.arity() as u64 - 1) * p + 1);
    let mut keys = Vec::new();
    let mut sizes = Vec::new();
    for v in tree.internal_by_step().into_iter().skip(p as usize) {
        if !span[v] {
            continue;
        }
        let off: u64 = tree.children(v).filter(|&c| !span[c]).map(|c| internal_nodes_below(tree, c)).sum();
        keys.push(v);
        sizes.push(off + 1);
    }
    let a = 1.0 / tree.arity() as f64;
    Ok(TreeRestaurant { keys, state: CrpState::with_tables(a, p as f64 + a, sizes)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate;

    #[test]
    fn first_client_opens_a_table() {
        let mut s = CrpState::new(0.5, 0.5).unwrap();
        assert_eq!(s.new_table_probability(), 1.0);
        assert_eq!(s.step(&mut replicate(0, 0)), Seat::New);
        assert_eq!(s.tables(), &[1]);
    }

    #[test]
    fn seating_probabilities() {
        let s = CrpState::with_tables(0.5, 0.5, vec![1]).unwrap();
        assert!((s.new_table_probability() - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.join_probability(0) - 1.0 / 3.0).abs() < 1e-15);
        let k = 3.0;
        let s = CrpState::with_tables(1.0 / k, 1.0 / k, vec![2, 1, 4]).unwrap();
        let n = 7.0;
        assert!((s.join_probability(2) - (k * 4.0 - 1.0) / (k * n + 1.0)).abs() < 1e-15);
        assert!((s.new_table_probability() - 4.0 / (k * n + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CrpState::new(1.0, 0.5).is_err());
        assert!(CrpState::new(0.5, -0.5).is_err());
        assert!(CrpState::with_tables(0.5, 0.5, vec![0]).is_err());
    }

    #[test]
    fn run_and_csv() {
        let (state, rows) = crp_run(0.5, 0.5, 20, &[], &mut replicate(1, 0)).unwrap();
        assert_eq!(state.clients(), 20);
        assert_eq!(rows.len(), 21);
        assert_eq!(rows[1].table_count, 1);
        let csv = trajectory_csv(&rows);
        assert!(csv.starts_with("step,table_count,largest_table\n0,0,0\n1,1,1\n"));
    }

    #[test]
    fn spine_of_one_step_tree() {
        let mut t = GrowingTree::new(3).unwrap();
        t.grow_at(1).unwrap();
        let r = spine_tables(&t, 1).unwrap();
        assert_eq!(r.state.tables(), &[1]);
        assert!(spine_tables(&t, 4).is_err());
    }

    #[test]
    fn spine_matches_depth_and_counts() {
        for seed in 0..20 {
            let t = GrowingTree::grown(3, 50, &mut replicate(seed, 0)).unwrap();
            let r = spine_tables(&t, 1).unwrap();
            assert_eq!(r.state.clients(), 50);
            assert_eq!(r.state.table_count() as u64 + 1, t.depth(t.leaf_at_rank(1).unwrap()));
        }
    }

    #[test]
    fn figure_configuration() {
        // k = 3, n = 10: tables of sizes 1, 5 and 4 along the first spine.
        let mut t = GrowingTree::new(3).unwrap();
        let a = t.grow_at(1).unwrap();
        let b = t.grow_at(1).unwrap();
        let c = t.grow_at(1).unwrap();
        assert_eq!((t.parent(c), t.parent(b)), (Some(b), Some(a)));
        for _ in 0..4 {
            let e = t.child(b, 2).unwrap();
            t.grow_at(e).unwrap();
        }
        for _ in 0..3 {
            let e = t.child(c, 3).unwrap();
            t.grow_at(e).unwrap();
        }
        assert_eq!(t.step_count(), 10);
        let r = spine_tables(&t, 1).unwrap();
        assert_eq!(r.state.tables(), &[1, 5, 4]);
    }

    #[test]
    fn attachment_restaurant() {
        let t = GrowingTree::grown(2, 40, &mut replicate(4, 0)).unwrap();
        for p in [0u64, 3, 10] {
            let r = attachment_tables(&t, p).unwrap();
            assert_eq!(r.state.clients(), 40 - p);
            assert!((r.state.theta() - (p as f64 + 0.5)).abs() < 1e-15);
        }
        let sorted = |r: TreeRestaurant| {
            let mut v: Vec<_> = r.keys.into_iter().zip(r.state.tables().iter().copied()).collect();
            v.sort_unstable();
            v
        };
        assert_eq!(sorted(attachment_tables(&t, 0).unwrap()), sorted(spine_tables(&t, 1).unwrap()));
        assert_eq!(attachment_tables(&t, 40).unwrap().state.table_count(), 0);
        assert!(attachment_tables(&t, 41).is_err());
    }
}
