use super::{MarginalTree, Point};
use crate::{Error, Result};

/// Finitely supported vector in `l^1`, entries sorted by coordinate.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVec(Vec<(u64, f64)>);

impl SparseVec {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn from_entries(mut entries: Vec<(u64, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        entries.retain(|e| e.1 != 0.0);
        Self(entries)
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.0
    }

    pub fn get(&self, coord: u64) -> f64 {
        match self.0.binary_search_by_key(&coord, |e| e.0) {
            Ok(i) => self.0[i].1,
            Err(_) => 0.0,
        }
    }

    /// `self + t e_coord`.
    pub fn with_added(&self, coord: u64, t: f64) -> Self {
        let mut out = self.0.clone();
        match out.binary_search_by_key(&coord, |e| e.0) {
            Ok(i) => out[i].1 += t,
            Err(i) => out.insert(i, (coord, t)),
        }
        out.retain(|e| e.1 != 0.0);
        Self(out)
    }

    /// `sum_c |self_c - other_c|` over coordinates not listed in `skip`.
    pub fn l1_distance_skipping(&self, other: &Self, skip: &[u64]) -> f64 {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        let mut total = 0.0;
        while i < a.len() || j < b.len() {
            let (c, d) = match (a.get(i), b.get(j)) {
                (Some(&(ca, va)), Some(&(cb, vb))) if ca == cb => {
                    i += 1;
                    j += 1;
                    (ca, (va - vb).abs())
                }
                (Some(&(ca, va)), Some(&(cb, _))) if ca < cb => {
                    i += 1;
                    (ca, va.abs())
                }
                (Some(_), Some(&(cb, vb))) => {
                    j += 1;
                    (cb, vb.abs())
                }
                (Some(&(ca, va)), None) => {
                    i += 1;
                    (ca, va.abs())
                }
                (None, Some(&(cb, vb))) => {
                    j += 1;
                    (cb, vb.abs())
                }
                (None, None) => unreachable!(),
            };
            if !skip.contains(&c) {
                total += d;
            }
        }
        total
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.l1_distance_skipping(other, &[])
    }
}

/// `{base + t e_coord : 0 <= t <= length}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub coord: u64,
    pub base: SparseVec,
    pub length: f64,
}

impl Segment {
    pub fn point(&self, t: f64) -> SparseVec {
        self.base.with_added(self.coord, t)
    }
}

/// Stick-breaking realization of a [`MarginalTree`] in `l^1`: leaf of rank
/// `i` sits on a segment along coordinate `i` that starts where its root
/// path leaves the span of the earlier leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedTree {
    segments: Vec<Segment>,
    /// Segment index and parameter of each vertex; `None` at the root.
    location: Vec<Option<(usize, f64)>>,
}

impl EmbeddedTree {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment carrying coordinate `coord`, if any.
    pub fn segment_for(&self, coord: u64) -> Option<&Segment> {
        self.segments.binary_search_by_key(&coord, |s| s.coord).ok().map(|i| &self.segments[i])
    }

    pub fn vertex_coords(&self, v: usize) -> SparseVec {
        match self.location[v] {
            None => SparseVec::zero(),
            Some((s, t)) => self.segments[s].point(t),
        }
    }

    pub fn point_coords(&self, p: Point) -> SparseVec {
        match self.location[p.vertex] {
            None => SparseVec::zero(),
            Some((s, t)) => self.segments[s].point(t - p.up),
        }
    }

    /// Attachment point `H^i` of the leaf with rank `i`.
    pub fn attachment(&self, rank: u64) -> Option<&SparseVec> {
        self.segment_for(rank).map(|s| &s.base)
    }
}

/// Embeds `tree` by stick-breaking in leaf-rank order.
pub fn stick_break_embed(tree: &MarginalTree) -> Result<EmbeddedTree> {
    let ranked = tree.leaf_ranks().len();
    let leaves = tree.leaves().count();
    if ranked != leaves || (leaves == 1 && tree.vertex_count() == 1) {
        return Err(Error::LeafRanking(format!("{ranked} ranks for {leaves} leaves")));
    }
    let n = tree.vertex_count();
    let mut placed = vec![false; n];
    placed[tree.root()] = true;
    let mut location: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut segments: Vec<Segment> = Vec::with_capacity(ranked);
    let mut path = Vec::new();
    for (&rank, &leaf) in tree.leaf_ranks() {
        path.clear();
        let mut v = leaf;
        while !placed[v] {
            path.push(v);
            v = tree.parent(v).expect("root is placed");
        }
        let w = v;
        let base = match location[w] {
            None => SparseVec::zero(),
            Some((s, t)) => segments[s].point(t),
        };
        let index = segments.len();
        for &x in &path {
            placed[x] = true;
            location[x] = Some((index, tree.height(x) - tree.height(w)));
        }
        segments.push(Segment { coord: rank, base, length: tree.height(leaf) - tree.height(w) });
    }
    Ok(EmbeddedTree { segments, location })
}

impl MarginalTree {
    pub fn embed(&self) -> Result<EmbeddedTree> {
        stick_break_embed(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::marginal_tree;
    use crate::rng::replicate;
    use crate::treegrow::GrowingTree;

    #[test]
    fn single_edge() {
        let t = MarginalTree::new(vec![0, 1], &[(0, 1, 2.5)], 0, [(1, 1)].into_iter().collect()).unwrap();
        let e = t.embed().unwrap();
        assert_eq!(e.segments().len(), 1);
        assert_eq!(e.vertex_coords(t.local(1).unwrap()), SparseVec::from_entries(vec![(1, 2.5)]));
    }

    #[test]
    fn y_tree_coordinates() {
        let (a, b, c) = (1.5, 2.0, 4.0);
        let ranks = [(1, 2), (2, 3)].into_iter().collect();
        let t = MarginalTree::new(vec![0, 1, 2, 3], &[(0, 1, a), (1, 2, b), (1, 3, c)], 0, ranks).unwrap();
        let e = t.embed().unwrap();
        let l1 = e.vertex_coords(t.local(2).unwrap());
        let l2 = e.vertex_coords(t.local(3).unwrap());
        assert_eq!(l1, SparseVec::from_entries(vec![(1, a + b)]));
        assert_eq!(l2, SparseVec::from_entries(vec![(1, a), (2, c)]));
        assert_eq!(l1.l1_distance(&l2), b + c);
        assert_eq!(e.attachment(2), Some(&SparseVec::from_entries(vec![(1, a)])));
    }

    #[test]
    fn missing_rank_rejected() {
        let ranks = [(1, 2)].into_iter().collect();
        let t = MarginalTree::new(vec![0, 1, 2, 3], &[(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0)], 0, ranks).unwrap();
        assert!(matches!(t.embed(), Err(Error::LeafRanking(_))));
    }

    #[test]
    fn isometric_on_random_tree() {
        let g = GrowingTree::grown(3, 60, &mut replicate(11, 0)).unwrap();
        let m = marginal_tree(&g, 60).unwrap();
        let e = m.embed().unwrap();
        let coords: Vec<_> = (0..m.vertex_count()).map(|v| e.vertex_coords(v)).collect();
        for u in 0..m.vertex_count() {
            for v in 0..m.vertex_count() {
                let d = m.distance(Point::at(u), Point::at(v));
                assert!((coords[u].l1_distance(&coords[v]) - d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sparse_vec_ops() {
        let a = SparseVec::from_entries(vec![(3, 1.0), (1, 2.0), (3, 0.5)]);
        assert_eq!(a.entries(), &[(1, 2.0), (3, 1.5)]);
        let b = a.with_added(2, -1.0);
        assert_eq!(a.l1_distance(&b), 1.0);
        assert_eq!(a.l1_distance_skipping(&SparseVec::zero(), &[3]), 2.0);
        assert_eq!(b.get(2), -1.0);
    }
}
