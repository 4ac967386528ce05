//! Marginal trees, projections onto rooted subtrees, and measures on trees.
//!
//! A [`MarginalTree`] is a rooted tree with positive edge lengths. Points
//! are `(vertex, up)` pairs: the point at distance `up` above `vertex` on
//! the edge towards its parent, with `0 <= up < len(vertex)`. Every point of
//! the metric tree has exactly one such representation.

mod embed;
mod measure;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::treegrow::{GrowingTree, NodeKind};
use crate::{Error, Result};

pub use embed::{stick_break_embed, EmbeddedTree, Segment, SparseVec};
pub use measure::{
    mass_function, measure_from_mass_function, pushforward_measure, FiniteMeasure, MassFunction,
    MeasureAtomJson,
};

/// A location on a [`MarginalTree`], in local vertex indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub vertex: usize,
    pub up: f64,
}

impl Point {
    pub fn at(vertex: usize) -> Self {
        Self { vertex, up: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginalTree {
    ids: Vec<usize>,
    index: HashMap<usize, usize>,
    parent: Vec<Option<usize>>,
    len: Vec<f64>,
    children: Vec<Vec<usize>>,
    root: usize,
    ranks: BTreeMap<u64, usize>,
    height: Vec<f64>,
    depth: Vec<u32>,
    /// Vertices with parents before children.
    order: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub u: usize,
    pub v: usize,
    pub len: f64,
}

/// Serialized form of a [`MarginalTree`]; ids are external vertex ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalJson {
    pub vertices: Vec<usize>,
    pub edges: Vec<EdgeJson>,
    pub root: usize,
    pub leaf_ranks: BTreeMap<u64, usize>,
}

impl MarginalTree {
    /// Builds a tree from external vertex ids, `(parent, child, length)`
    /// edges, a root and a leaf ranking.
    pub fn new(
        vertices: Vec<usize>,
        edges: &[(usize, usize, f64)],
        root: usize,
        leaf_ranks: BTreeMap<u64, usize>,
    ) -> Result<Self> {
        let bad = |m: String| Error::InvalidTree(m);
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            if index.insert(v, i).is_some() {
                return Err(bad(format!("duplicate vertex {v}")));
            }
        }
        let n = vertices.len();
        let root_local = *index.get(&root).ok_or_else(|| bad(format!("root {root} is not a vertex")))?;
        if edges.len() + 1 != n {
            return Err(bad(format!("{n} vertices need {} edges, found {}", n.saturating_sub(1), edges.len())));
        }
        let mut parent = vec![None; n];
        let mut len = vec![0.0; n];
        let mut children = vec![Vec::new(); n];
        for &(u, v, l) in edges {
            let (&lu, &lv) = match (index.get(&u), index.get(&v)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(bad(format!("edge ({u},{v}) uses an unknown vertex"))),
            };
            if !(l.is_finite() && l > 0.0) {
                return Err(bad(format!("edge ({u},{v}) has non-positive length {l}")));
            }
            if lv == root_local || parent[lv].is_some() {
                return Err(bad(format!("vertex {v} has two parents or is the root")));
            }
            parent[lv] = Some(lu);
            len[lv] = l;
            children[lu].push(lv);
        }
        let mut order = Vec::with_capacity(n);
        let mut height = vec![0.0; n];
        let mut depth = vec![0u32; n];
        let mut stack = vec![root_local];
        while let Some(v) = stack.pop() {
            order.push(v);
            if order.len() > n {
                break;
            }
            for &c in children[v].iter().rev() {
                height[c] = height[v] + len[c];
                depth[c] = depth[v] + 1;
                stack.push(c);
            }
        }
        if order.len() != n {
            return Err(bad("vertices are not all connected to the root".into()));
        }
        for v in 0..n {
            if v != root_local && children[v].len() == 1 {
                return Err(bad(format!("vertex {} has degree two", vertices[v])));
            }
        }
        let mut ranks = BTreeMap::new();
        for (&r, &ext) in &leaf_ranks {
            let &local = index.get(&ext).ok_or_else(|| Error::LeafRanking(format!("rank {r} names unknown vertex {ext}")))?;
            if !children[local].is_empty() {
                return Err(Error::LeafRanking(format!("rank {r} names non-leaf {ext}")));
            }
            if r == 0 {
                return Err(Error::LeafRanking("ranks start at 1".into()));
            }
            ranks.insert(r, local);
        }
        let mut seen = vec![false; n];
        for &l in ranks.values() {
            if std::mem::replace(&mut seen[l], true) {
                return Err(Error::LeafRanking(format!("leaf {} carries two ranks", vertices[l])));
            }
        }
        Ok(Self { ids: vertices, index, parent, len, children, root: root_local, ranks, height, depth, order })
    }

    /// `T_n` itself, every edge of length one, all leaves ranked.
    pub fn from_growing(tree: &GrowingTree) -> Self {
        let n = tree.node_count();
        let edges: Vec<_> = (1..n).map(|v| (tree.parent(v).expect("non-root"), v, 1.0)).collect();
        let ranks = tree.leaf_order().enumerate().map(|(i, l)| (i as u64 + 1, l)).collect();
        Self::new((0..n).collect(), &edges, tree.root(), ranks).expect("growing trees are valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn external_id(&self, local: usize) -> usize {
        self.ids[local]
    }

    pub fn local(&self, external: usize) -> Option<usize> {
        self.index.get(&external).copied()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Length of the edge above `v` (zero at the root).
    pub fn edge_len(&self, v: usize) -> f64 {
        self.len[v]
    }

    pub fn height(&self, v: usize) -> f64 {
        self.height[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.children[v].is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ids.len()).filter(|&v| self.is_leaf(v))
    }

    /// Local leaf indices keyed by rank.
    pub fn leaf_ranks(&self) -> &BTreeMap<u64, usize> {
        &self.ranks
    }

    /// Vertices ordered parents first.
    pub fn topological(&self) -> &[usize] {
        &self.order
    }

    /// Sum of all edge lengths.
    pub fn total_length(&self) -> f64 {
        self.len.iter().sum()
    }

    /// Largest vertex height.
    pub fn tree_height(&self) -> f64 {
        self.height.iter().copied().fold(0.0, f64::max)
    }

    /// Same topology with every length multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("scale factor {c} must be positive")));
        }
        let mut t = self.clone();
        for l in &mut t.len {
            *l *= c;
        }
        for h in &mut t.height {
            *h *= c;
        }
        Ok(t)
    }

    pub fn check_point(&self, p: Point) -> Result<()> {
        let ok = p.vertex < self.ids.len() && p.up >= 0.0 && (p.up < self.len[p.vertex] || p.up == 0.0);
        if ok && p.up.is_finite() {
            Ok(())
        } else {
            Err(Error::DomainMismatch(format!("point ({}, {}) is not on the tree", p.vertex, p.up)))
        }
    }

    /// The point at external vertex `id`, `up` above it.
    pub fn point(&self, id: usize, up: f64) -> Result<Point> {
        let v = self.local(id).ok_or_else(|| Error::DomainMismatch(format!("no vertex {id}")))?;
        let p = Point { vertex: v, up };
        self.check_point(p)?;
        Ok(p)
    }

    pub fn point_height(&self, p: Point) -> f64 {
        self.height[p.vertex] - p.up
    }

    /// Lowest common ancestor of two vertices.
    pub fn lca(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("depth > 0");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("depth > 0");
        }
        while a != b {
            a = self.parent[a].expect("not root");
            b = self.parent[b].expect("not root");
        }
        a
    }

    /// Geodesic distance between two points.
    pub fn distance(&self, x: Point, y: Point) -> f64 {
        let hx = self.point_height(x);
        let hy = self.point_height(y);
        let a = self.lca(x.vertex, y.vertex);
        if a == x.vertex && a == y.vertex {
            (x.up - y.up).abs()
        } else if a == x.vertex {
            hy - hx
        } else if a == y.vertex {
            hx - hy
        } else {
            hx + hy - 2.0 * self.height[a]
        }
    }

    pub fn to_json_value(&self) -> MarginalJson {
        let edges = self
            .order
            .iter()
            .filter_map(|&v| self.parent[v].map(|p| EdgeJson { u: self.ids[p], v: self.ids[v], len: self.len[v] }))
            .collect();
        MarginalJson {
            vertices: self.order.iter().map(|&v| self.ids[v]).collect(),
            edges,
            root: self.ids[self.root],
            leaf_ranks: self.ranks.iter().map(|(&r, &l)| (r, self.ids[l])).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("marginal tree serializes")
    }

    pub fn from_json_value(doc: &MarginalJson) -> Result<Self> {
        let edges: Vec<_> = doc.edges.iter().map(|e| (e.u, e.v, e.len)).collect();
        Self::new(doc.vertices.clone(), &edges, doc.root, doc.leaf_ranks.clone())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_value(&serde_json::from_str(text)?)
    }
}

/// Vertices of `tree` lying on a path from the root to a leaf of rank at
/// most `max_rank`.
pub fn spanned_by_ranks(tree: &GrowingTree, max_rank: u64) -> Vec<bool> {
    let mut mark = vec![false; tree.node_count()];
    mark[tree.root()] = true;
    for leaf in tree.leaf_order().take(max_rank as usize) {
        let mut v = leaf;
        while !mark[v] {
            mark[v] = true;
            v = tree.parent(v).expect("reaches the root");
        }
    }
    mark
}

/// `T^p_n`: the subtree spanned by the root and the leaves of rank at most
/// `(k - 1)p + 1`, with chains contracted and lengths counting `T_n` edges.
/// Vertices keep their `T_n` ids.
pub fn marginal_tree(tree: &GrowingTree, p: u64) -> Result<MarginalTree> {
    if p > tree.step_count() {
        return Err(Error::MarginalOutOfRange { p, n: tree.step_count() });
    }
    let max_rank = (tree.arity() as u64 - 1) * p + 1;
    let span = spanned_by_ranks(tree, max_rank);
    let spanned_children = |v: usize| tree.children(v).filter(|&c| span[c]);

    let mut vertices = vec![tree.root()];
    let mut edges = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(top) = stack.pop() {
        for c in spanned_children(top).collect::<Vec<_>>() {
            let mut v = c;
            let mut len = 1.0;
            loop {
                let mut it = spanned_children(v);
                match (it.next(), it.next()) {
                    (Some(only), None) => {
                        v = only;
                        len += 1.0;
                    }
                    _ => break,
                }
            }
            vertices.push(v);
            edges.push((top, v, len));
            stack.push(v);
        }
    }
    let ranks = tree
        .leaf_order()
        .take(max_rank as usize)
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l))
        .collect();
    MarginalTree::new(vertices, &edges, tree.root(), ranks)
}

/// Subtree of a [`MarginalTree`] given by a parent-closed vertex set that
/// contains the root; it consists of those vertices and the edges above
/// them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subtree {
    inside: Vec<bool>,
}

impl Subtree {
    pub fn new(tree: &MarginalTree, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != tree.vertex_count() {
            return Err(Error::InvalidSubtree(format!(
                "mask has {} entries for {} vertices",
                inside.len(),
                tree.vertex_count()
            )));
        }
        if !inside[tree.root()] {
            return Err(Error::InvalidSubtree("root not included".into()));
        }
        for v in 0..inside.len() {
            if inside[v] && !tree.parent(v).is_none_or(|p| inside[p]) {
                return Err(Error::InvalidSubtree(format!("vertex {} disconnected from the root", tree.external_id(v))));
            }
        }
        Ok(Self { inside })
    }

    /// Subtree made of the given external vertex ids.
    pub fn from_vertices(tree: &MarginalTree, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut inside = vec![false; tree.vertex_count()];
        for id in ids {
            let v = tree.local(id).ok_or_else(|| Error::InvalidSubtree(format!("unknown vertex {id}")))?;
            inside[v] = true;
        }
        Self::new(tree, inside)
    }

    pub fn whole(tree: &MarginalTree) -> Self {
        Self { inside: vec![true; tree.vertex_count()] }
    }

    /// Span of the root and the ranked leaves with rank at most `max_rank`.
    pub fn spanned(tree: &MarginalTree, max_rank: u64) -> Self {
        let mut inside = vec![false; tree.vertex_count()];
        inside[tree.root()] = true;
        for (_, &leaf) in tree.leaf_ranks().range(..=max_rank) {
            let mut v = leaf;
            while !inside[v] {
                inside[v] = true;
                v = tree.parent(v).expect("reaches the root");
            }
        }
        Self { inside }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.inside[v]
    }

    pub fn contains_point(&self, p: Point) -> bool {
        self.inside[p.vertex]
    }

    pub fn mask(&self) -> &[bool] {
        &self.inside
    }

    pub fn len(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The map sending a point to its highest ancestor inside a subtree, that
/// is the first point of the subtree met on the way to the root.
#[derive(Clone, Debug)]
pub struct Projection<'a> {
    tree: &'a MarginalTree,
    anchor: Vec<usize>,
    inside: Vec<bool>,
}

impl<'a> Projection<'a> {
    pub fn tree(&self) -> &'a MarginalTree {
        self.tree
    }

    pub fn apply(&self, p: Point) -> Point {
        if self.inside[p.vertex] {
            p
        } else {
            Point::at(self.anchor[p.vertex])
        }
    }

    /// Vertex of the subtree that `v` projects to.
    pub fn anchor(&self, v: usize) -> usize {
        self.anchor[v]
    }

    pub fn subtree_contains(&self, v: usize) -> bool {
        self.inside[v]
    }
}

pub fn project_map<'a>(tree: &'a MarginalTree, subtree: &Subtree) -> Result<Projection<'a>> {
    let subtree = Subtree::new(tree, subtree.inside.clone())?;
    let mut anchor = vec![0; tree.vertex_count()];
    for &v in tree.topological() {
        anchor[v] = if subtree.inside[v] { v } else { anchor[tree.parent(v).expect("root is inside")] };
    }
    Ok(Projection { tree, anchor, inside: subtree.inside })
}

/// `Z_pi`: the largest height of a hanging subtree, which is also
/// `sup_x d(x, pi(x))`.
pub fn projection_gap(tree: &MarginalTree, subtree: &Subtree) -> Result<f64> {
    let pi = project_map(tree, subtree)?;
    Ok((0..tree.vertex_count())
        .filter(|&v| !pi.inside[v])
        .map(|v| tree.height(v) - tree.height(pi.anchor[v]))
        .fold(0.0, f64::max))
}

/// Whether `v` is an internal node of `tree` created at a step `<= p`.
pub fn is_early_branch_point(tree: &GrowingTree, v: usize, p: u64) -> bool {
    tree.kind(v) == NodeKind::Internal && tree.created(v).is_some_and(|c| c <= p)
}
