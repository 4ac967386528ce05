//! Path metrics, Hausdorff distances and exact Prokhorov distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::marginals::{EmbeddedTree, FiniteMeasure, MarginalTree, Point, Segment, SparseVec, Subtree};
use crate::treegrow::{GrowingTree, NodeId};
use crate::{Error, Result};

/// Symmetric matrix of pairwise distances with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Row-major `n x n` matrix; rejects asymmetric, negative or non-zero
    /// diagonal input.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidParameter(format!("{} entries for a {n}x{n} matrix", data.len())));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let x = data[i * n + j];
                if !(x.is_finite() && x >= 0.0) || x != data[j * n + i] {
                    return Err(Error::InvalidParameter(format!("entry ({i},{j}) is negative or asymmetric")));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self::new(n, data)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Largest amount by which the triangle inequality fails.
    pub fn triangle_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    worst = worst.max(self.get(i, j) - self.get(i, k) - self.get(k, j));
                }
            }
        }
        worst
    }
}

/// Length of the geodesic between two points of a marginal tree.
pub fn path_distance(tree: &MarginalTree, u: Point, v: Point) -> Result<f64> {
    tree.check_point(u)?;
    tree.check_point(v)?;
    Ok(tree.distance(u, v))
}

/// Graph distance between two nodes of a growing tree.
pub fn node_distance(tree: &GrowingTree, a: NodeId, b: NodeId) -> Result<u64> {
    for x in [a, b] {
        if !tree.contains(x) {
            return Err(Error::UnknownNode(x));
        }
    }
    let (mut a, mut b) = (a, b);
    let (mut da, mut db) = (tree.depth(a), tree.depth(b));
    let mut d = 0;
    while da > db {
        a = tree.parent(a).expect("depth > 0");
        da -= 1;
        d += 1;
    }
    while db > da {
        b = tree.parent(b).expect("depth > 0");
        db -= 1;
        d += 1;
    }
    while a != b {
        a = tree.parent(a).expect("not root");
        b = tree.parent(b).expect("not root");
        d += 2;
    }
    Ok(d)
}

#[derive(PartialEq)]
struct Dist(f64, usize);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Hausdorff distance between a tree and a rooted subtree, from
/// multi-source shortest paths out of the subtree.
pub fn hausdorff_nested(tree: &MarginalTree, subtree: &Subtree) -> Result<f64> {
    let subtree = Subtree::new(tree, subtree.mask().to_vec())?;
    let n = tree.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for v in 0..n {
        if subtree.contains(v) {
            dist[v] = 0.0;
            heap.push(Dist(0.0, v));
        }
    }
    while let Some(Dist(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        let up = tree.parent(v).map(|p| (p, tree.edge_len(v)));
        let down = tree.children(v).iter().map(|&c| (c, tree.edge_len(c)));
        for (w, l) in up.into_iter().chain(down) {
            if d + l < dist[w] {
                dist[w] = d + l;
                heap.push(Dist(d + l, w));
            }
        }
    }
    Ok(dist.into_iter().fold(0.0, f64::max))
}

/// `sup_{x in a} d(x, B)` under the coordinate-sum metric.
///
/// Along `a(t) = base + t e_i`, the distance to a segment of `B` on another
/// axis is a cone `c + |t - u|`; to the segment of `B` on axis `i` it is a
/// plateau `c + dist(t, [lo, hi])`. The lower envelope is maximized interval
/// by interval between consecutive apexes and plateau ends.
fn segment_excess(a: &Segment, b: &EmbeddedTree) -> f64 {
    let i = a.coord;
    let len = a.length;
    let ai = a.base.get(i);
    let mut cones: Vec<(f64, f64)> = Vec::with_capacity(b.segments().len());
    let mut plateau: Option<(f64, f64, f64)> = None;
    for s in b.segments() {
        let u = s.base.get(i) - ai;
        if s.coord == i {
            let c = a.base.l1_distance_skipping(&s.base, &[i]);
            plateau = Some((u, u + s.length, c));
        } else {
            let j = s.coord;
            let gap = a.base.get(j) - s.base.get(j);
            let along = (-gap).max(gap - s.length).max(0.0);
            let c = a.base.l1_distance_skipping(&s.base, &[i, j]) + along;
            cones.push((u, c));
        }
    }
    cones.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut cuts = vec![0.0, len];
    cuts.extend(cones.iter().map(|c| c.0).filter(|&u| u > 0.0 && u < len));
    if let Some((lo, hi, _)) = plateau {
        cuts.extend([lo, hi].into_iter().filter(|&u| u > 0.0 && u < len));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let envelope = |t: f64| -> f64 {
        let mut g = f64::INFINITY;
        for &(u, c) in &cones {
            g = g.min(c + (t - u).abs());
        }
        if let Some((lo, hi, c)) = plateau {
            g = g.min(c + (lo - t).max(t - hi).max(0.0));
        }
        g
    };
    if cuts.len() == 1 {
        return envelope(0.0);
    }

    let m = cuts.len() - 1;
    // left[k]: best c - u over apexes at or before cuts[k]; right[k]: best
    // c + u over apexes at or after cuts[k + 1].
    let mut left = vec![f64::INFINITY; m];
    let mut right = vec![f64::INFINITY; m];
    let mut p = 0;
    let mut best = f64::INFINITY;
    for k in 0..m {
        while p < cones.len() && cones[p].0 <= cuts[k] {
            best = best.min(cones[p].1 - cones[p].0);
            p += 1;
        }
        left[k] = best;
    }
    let mut q = cones.len();
    best = f64::INFINITY;
    for k in (0..m).rev() {
        while q > 0 && cones[q - 1].0 >= cuts[k + 1] {
            best = best.min(cones[q - 1].1 + cones[q - 1].0);
            q -= 1;
        }
        right[k] = best;
    }

    let mut sup: f64 = 0.0;
    for k in 0..m {
        let (t0, t1) = (cuts[k], cuts[k + 1]);
        let (mut alpha, mut beta, mut cap) = (left[k], right[k], f64::INFINITY);
        if let Some((lo, hi, c)) = plateau {
            if hi <= t0 {
                alpha = alpha.min(c - hi);
            } else if lo >= t1 {
                beta = beta.min(c + lo);
            } else {
                cap = c;
            }
        }
        let rise_fall = match (alpha.is_finite(), beta.is_finite()) {
            (true, true) => {
                let t = ((beta - alpha) / 2.0).clamp(t0, t1);
                (alpha + t).min(beta - t)
            }
            (true, false) => alpha + t1,
            (false, true) => beta - t0,
            (false, false) => f64::INFINITY,
        };
        sup = sup.max(rise_fall.min(cap));
    }
    sup
}

/// Exact Hausdorff distance between two embedded trees in `l^1`.
pub fn hausdorff_embedded(a: &EmbeddedTree, b: &EmbeddedTree) -> Result<f64> {
    if a.segments().is_empty() || b.segments().is_empty() {
        return Err(Error::IncompatibleEmbedding("an embedding has no segment".into()));
    }
    let ab = a.segments().iter().map(|s| segment_excess(s, b)).fold(0.0, f64::max);
    let ba = b.segments().iter().map(|s| segment_excess(s, a)).fold(0.0, f64::max);
    Ok(ab.max(ba))
}

const FLOW_EPS: f64 = 1e-15;

struct FlowNet {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        Self { head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new() }
    }

    fn add(&mut self, u: usize, v: usize, c: f64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0.0);
    }

    fn levels(&self, s: usize) -> Vec<i32> {
        let mut level = vec![-1; self.head.len()];
        level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > FLOW_EPS && level[v] < 0 {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn push(&mut self, u: usize, t: usize, f: f64, level: &[i32], it: &mut [usize]) -> f64 {
        if u == t {
            return f;
        }
        while it[u] < self.head[u].len() {
            let e = self.head[u][it[u]];
            let v = self.to[e];
            if self.cap[e] > FLOW_EPS && level[v] == level[u] + 1 {
                let got = self.push(v, t, f.min(self.cap[e]), level, it);
                if got > 0.0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            it[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let level = self.levels(s);
            if level[t] < 0 {
                return total;
            }
            let mut it = vec![0; self.head.len()];
            loop {
                let f = self.push(s, t, f64::INFINITY, &level, &mut it);
                if f <= FLOW_EPS {
                    break;
                }
                total += f;
            }
        }
    }
}

fn check_probability(name: &str, m: &[f64], n: usize) -> Result<()> {
    if m.len() != n {
        return Err(Error::InvalidMeasure(format!("{name} has {} masses for {n} points", m.len())));
    }
    if m.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidMeasure(format!("{name} has a negative mass")));
    }
    let total: f64 = m.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidMeasure(format!("{name} has total mass {total}")));
    }
    Ok(())
}

/// Largest mass that can be moved from `mu` to `nu` along pairs at distance
/// at most `t`.
fn transportable(mu: &[(usize, f64)], nu: &[(usize, f64)], d: &DistanceMatrix, t: f64) -> f64 {
    let (s, sink) = (0, 1);
    let mut net = FlowNet::new(2 + mu.len() + nu.len());
    for (a, &(_, m)) in mu.iter().enumerate() {
        net.add(s, 2 + a, m);
    }
    for (b, &(_, m)) in nu.iter().enumerate() {
        net.add(2 + mu.len() + b, sink, m);
    }
    for (a, &(i, _)) in mu.iter().enumerate() {
        for (b, &(j, _)) in nu.iter().enumerate() {
            if d.get(i, j) <= t {
                net.add(2 + a, 2 + mu.len() + b, f64::INFINITY);
            }
        }
    }
    net.max_flow(s, sink)
}

/// Exact Prokhorov distance between two probability vectors on the points
/// of `d`: `min(1, min_t max(t, 1 - m(t)))` over the pairwise distances `t`,
/// with `m(t)` the transportable mass at threshold `t`.
pub fn prokhorov(mu: &[f64], nu: &[f64], d: &DistanceMatrix) -> Result<f64> {
    check_probability("mu", mu, d.len())?;
    check_probability("nu", nu, d.len())?;
    let sup = |m: &[f64]| m.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(i, &x)| (i, x)).collect::<Vec<_>>();
    let (a, b) = (sup(mu), sup(nu));
    let mut cuts = vec![0.0];
    for &(i, _) in &a {
        for &(j, _) in &b {
            cuts.push(d.get(i, j));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let deficit = |t: f64| {
        let lack = 1.0 - transportable(&a, &b, d, t);
        if lack < 1e-13 {
            0.0
        } else {
            lack
        }
    };
    let value = |k: usize| cuts[k].max(deficit(cuts[k]));
    // cuts increase while deficits decrease: locate the crossing.
    let (mut lo, mut hi) = (0, cuts.len() - 1);
    if deficit(cuts[0]) <= cuts[0] {
        return Ok(cuts[0].min(1.0));
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if deficit(cuts[mid]) <= cuts[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(value(lo).min(value(hi)).min(1.0))
}

/// Prokhorov distance by checking `mu(A) <= nu(A^eps) + eps` over every
/// subset `A` of the support of `mu`, bisecting on `eps`. Exponential in the
/// support size; meant as a reference for small supports.
pub fn prokhorov_bruteforce(mu: &[f64], nu: &[f64], d: &DistanceMatrix, tol: f64) -> Result<f64> {
    check_probability("mu", mu, d.len())?;
    check_probability("nu", nu, d.len())?;
    let support: Vec<usize> = (0..mu.len()).filter(|&i| mu[i] > 0.0).collect();
    if support.len() > 16 {
        return Err(Error::EnumerationBound(format!("support of size {} is too large", support.len())));
    }
    let feasible = |eps: f64| {
        (1u32..1 << support.len()).all(|mask| {
            let pick: Vec<usize> = (0..support.len()).filter(|b| mask >> b & 1 == 1).map(|b| support[b]).collect();
            let mass: f64 = pick.iter().map(|&i| mu[i]).sum();
            let fattened: f64 = (0..nu.len()).filter(|&j| pick.iter().any(|&i| d.get(i, j) <= eps)).map(|j| nu[j]).sum();
            mass <= fattened + eps + 1e-12
        })
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if feasible(0.0) {
        return Ok(0.0);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Atoms of a tree measure at their embedded coordinates.
pub fn embed_measure(e: &EmbeddedTree, mu: &FiniteMeasure) -> Vec<(SparseVec, f64)> {
    mu.atoms().iter().map(|&(p, m)| (e.point_coords(p), m)).collect()
}

/// Upper bound for the GHP distance between two measured trees realized in
/// one `l^1` frame with a common root at the origin: the Hausdorff distance
/// of the embedded sets and the Prokhorov distance of the measures.
pub fn ghp_upper_bound(
    a: &EmbeddedTree,
    mu_a: &[(SparseVec, f64)],
    b: &EmbeddedTree,
    mu_b: &[(SparseVec, f64)],
) -> Result<(f64, f64)> {
    let rooted = |e: &EmbeddedTree| e.segments().iter().any(|s| s.base == SparseVec::zero());
    if !rooted(a) || !rooted(b) {
        return Err(Error::IncompatibleEmbedding("embeddings do not share the root".into()));
    }
    let dh = hausdorff_embedded(a, b)?;
    let points: Vec<&SparseVec> = mu_a.iter().chain(mu_b).map(|(x, _)| x).collect();
    let d = DistanceMatrix::from_fn(points.len(), |i, j| points[i].l1_distance(points[j]))?;
    let mut ma = vec![0.0; points.len()];
    let mut mb = vec![0.0; points.len()];
    for (i, (_, m)) in mu_a.iter().enumerate() {
        ma[i] = *m;
    }
    for (j, (_, m)) in mu_b.iter().enumerate() {
        mb[mu_a.len() + j] = *m;
    }
    Ok((dh, prokhorov(&ma, &mb, &d)?))
}
