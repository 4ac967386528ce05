//! The k-ary growing tree `T_n(k)` and its label-pruned subtrees.
//!
//! Nodes live in a flat arena. Each edge is identified with its child-side
//! node, so the `kn + 1` edges of `T_n(k)` are exactly the non-root nodes.
//! Growing at an edge inserts a fresh internal node in its middle and
//! rewires one child pointer in place: every other node keeps its id.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::uniform_index;
use crate::{Error, Result};

pub type NodeId = usize;

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Root,
    Internal,
    Leaf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Node {
    parent: u32,
    /// 0 for the root edge (and the root itself), otherwise 1..=k.
    label: u8,
    kind: NodeKind,
    /// Growth step that created an internal node; unused otherwise.
    created: u32,
}

/// Internal-node counts `(X^1, ..., X^k)` of the subtrees hanging from the
/// first internal node, ordered by edge label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SplitVector(pub Vec<u64>);

impl SplitVector {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn parts(&self) -> &[u64] {
        &self.0
    }
}

/// A tree `T_n(k)` together with its edge labels, leaf apparition order and
/// node creation steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowingTree {
    arity: usize,
    steps: u64,
    nodes: Vec<Node>,
    /// Child slots. Slot 0 is the root's single child; the internal node
    /// created at step `m` owns slots `1 + k(m-1) .. 1 + km`, slot `j - 1`
    /// of that range holding the child behind the edge labelled `j`.
    slots: Vec<u32>,
    /// Leaf ids by apparition rank (rank `r` at index `r - 1`).
    leaf_order: Vec<u32>,
}

/// Result of discarding every edge labelled above `k'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrunedTree {
    /// `T_n(k, k')` as a tree of arity `k'` with `I_n` growth steps.
    pub tree: GrowingTree,
    /// `I_n`, the number of retained internal nodes.
    pub retained_internal: u64,
    /// Original node id to pruned node id, `None` for discarded nodes.
    pub node_map: Vec<Option<NodeId>>,
}

impl GrowingTree {
    /// `T_0(k)`: a root joined to a single leaf of rank 1.
    pub fn new(arity: usize) -> Result<Self> {
        if !(2..=u8::MAX as usize).contains(&arity) {
            return Err(Error::InvalidArity(arity));
        }
        let nodes = vec![
            Node { parent: NONE, label: 0, kind: NodeKind::Root, created: NONE },
            Node { parent: 0, label: 0, kind: NodeKind::Leaf, created: NONE },
        ];
        Ok(Self { arity, steps: 0, nodes, slots: vec![1], leaf_order: vec![1] })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn step_count(&self) -> u64 {
        self.steps
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_order.len()
    }

    pub fn internal_count(&self) -> usize {
        self.steps as usize
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id < self.nodes.len()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        match self.nodes[id].parent {
            NONE => None,
            p => Some(p as NodeId),
        }
    }

    /// Label of the edge above `id`; `None` for the root edge and the root.
    pub fn label(&self, id: NodeId) -> Option<usize> {
        match self.nodes[id].label {
            0 => None,
            l => Some(l as usize),
        }
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id].kind
    }

    /// Creation step of an internal node.
    pub fn created(&self, id: NodeId) -> Option<u64> {
        match self.nodes[id].kind {
            NodeKind::Internal => Some(self.nodes[id].created as u64),
            _ => None,
        }
    }

    fn slot_range(&self, id: NodeId) -> std::ops::Range<usize> {
        let node = &self.nodes[id];
        match node.kind {
            NodeKind::Root => 0..1,
            NodeKind::Internal => {
                let start = 1 + self.arity * (node.created as usize - 1);
                start..start + self.arity
            }
            NodeKind::Leaf => 0..0,
        }
    }

    /// Children in label order (the root's single child for the root).
    pub fn children(&self, id: NodeId) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.slots[self.slot_range(id)].iter().map(|&c| c as NodeId)
    }

    /// Child of an internal node behind the edge labelled `label`.
    pub fn child(&self, id: NodeId, label: usize) -> Option<NodeId> {
        if self.nodes[id].kind != NodeKind::Internal || label == 0 || label > self.arity {
            return None;
        }
        Some(self.slots[self.slot_range(id).start + label - 1] as NodeId)
    }

    /// Leaf ids by apparition rank.
    pub fn leaf_order(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        self.leaf_order.iter().map(|&l| l as NodeId)
    }

    pub fn leaf_at_rank(&self, rank: u64) -> Result<NodeId> {
        if rank == 0 || rank as usize > self.leaf_order.len() {
            return Err(Error::InvalidRank(rank));
        }
        Ok(self.leaf_order[rank as usize - 1] as NodeId)
    }

    /// Rank of every node (`None` off the leaves), indexed by node id.
    pub fn leaf_ranks(&self) -> Vec<Option<u64>> {
        let mut ranks = vec![None; self.nodes.len()];
        for (i, &leaf) in self.leaf_order.iter().enumerate() {
            ranks[leaf as usize] = Some(i as u64 + 1);
        }
        ranks
    }

    /// Internal node created at each step, indexed by `step - 1`.
    pub fn internal_by_step(&self) -> Vec<NodeId> {
        let mut out = vec![0; self.steps as usize];
        for (id, node) in self.nodes.iter().enumerate() {
            if node.kind == NodeKind::Internal {
                out[node.created as usize - 1] = id;
            }
        }
        out
    }

    /// Splits the edge above `edge` with a new internal node and grafts
    /// `k - 1` leaves on it. Returns the new internal node.
    pub fn grow_at(&mut self, edge: NodeId) -> Result<NodeId> {
        if edge == 0 || edge >= self.nodes.len() {
            return Err(Error::UnknownNode(edge));
        }
        let k = self.arity;
        let step = self.steps + 1;
        let v = self.nodes.len();
        let parent = self.nodes[edge].parent as usize;
        let label = self.nodes[edge].label;
        let parent_slot = if self.nodes[parent].kind == NodeKind::Root {
            0
        } else {
            self.slot_range(parent).start + label as usize - 1
        };
        self.slots[parent_slot] = v as u32;
        self.nodes.push(Node { parent: parent as u32, label, kind: NodeKind::Internal, created: step as u32 });
        self.nodes[edge].parent = v as u32;
        self.nodes[edge].label = 1;
        self.slots.push(edge as u32);
        for j in 2..=k {
            let leaf = self.nodes.len() as u32;
            self.nodes.push(Node { parent: v as u32, label: j as u8, kind: NodeKind::Leaf, created: NONE });
            self.slots.push(leaf);
            self.leaf_order.push(leaf);
        }
        self.steps = step;
        Ok(v)
    }

    /// One growth step at a uniformly chosen edge; one draw from `rng`.
    pub fn grow_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> NodeId {
        let edge = 1 + uniform_index(rng, self.edge_count());
        self.grow_at(edge).expect("edge drawn in range")
    }

    /// Grows until `n` steps have been applied.
    pub fn grow_to<R: Rng + ?Sized>(&mut self, n: u64, rng: &mut R) -> Result<()> {
        if n < self.steps {
            return Err(Error::CannotShrink { current: self.steps, requested: n });
        }
        self.nodes.reserve((n - self.steps) as usize * self.arity);
        self.slots.reserve((n - self.steps) as usize * self.arity);
        while self.steps < n {
            self.grow_step(rng);
        }
        Ok(())
    }

    /// Convenience constructor: `T_n(k)` grown from scratch.
    pub fn grown<R: Rng + ?Sized>(arity: usize, n: u64, rng: &mut R) -> Result<Self> {
        let mut tree = Self::new(arity)?;
        tree.grow_to(n, rng)?;
        Ok(tree)
    }

    /// The first node after the root, if it is internal.
    pub fn first_internal(&self) -> Option<NodeId> {
        let c = self.slots[0] as NodeId;
        (self.nodes[c].kind == NodeKind::Internal).then_some(c)
    }

    /// Internal-node counts of the `k` subtrees of the first internal node.
    pub fn root_split(&self) -> Result<SplitVector> {
        let first = self.first_internal().ok_or(Error::NoInternalNode)?;
        let counts = self.children(first).map(|c| self.internal_below(c)).collect();
        Ok(SplitVector(counts))
    }

    /// Internal nodes in the subtree rooted at `id`, `id` included.
    fn internal_below(&self, id: NodeId) -> u64 {
        let mut count = 0;
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            if self.nodes[v].kind == NodeKind::Internal {
                count += 1;
                stack.extend(self.children(v));
            }
        }
        count
    }

    /// `Z`: internal nodes in the subtree rooted at the internal node
    /// `node`, counting `node` itself.
    pub fn subtree_internal_count(&self, node: NodeId) -> Result<u64> {
        if !self.contains(node) {
            return Err(Error::UnknownNode(node));
        }
        if self.nodes[node].kind != NodeKind::Internal {
            return Err(Error::NotInternal(node));
        }
        Ok(self.internal_below(node))
    }

    /// Edges lying in the subtree rooted at `id` (the edge above `id`
    /// excluded).
    pub fn subtree_edge_count(&self, id: NodeId) -> usize {
        let mut count = 0;
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            for c in self.children(v) {
                count += 1;
                stack.push(c);
            }
        }
        count
    }

    /// Depth (edge count from the root) of every node.
    pub fn depths(&self) -> Vec<u32> {
        let mut depth = vec![0u32; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            let d = depth[v] + 1;
            for c in self.children(v) {
                depth[c] = d;
                stack.push(c);
            }
        }
        depth
    }

    pub fn depth(&self, id: NodeId) -> u64 {
        let mut d = 0;
        let mut v = id;
        while let Some(p) = self.parent(v) {
            d += 1;
            v = p;
        }
        d
    }

    /// Maximal leaf depth.
    pub fn height(&self) -> u32 {
        self.depths().into_iter().max().unwrap_or(0)
    }

    /// Discards every edge with label above `pruned_arity`, together with
    /// everything beneath it, giving `T_n(k, k')` and `I_n`.
    pub fn prune_labels(&self, pruned_arity: usize) -> Result<PrunedTree> {
        if pruned_arity < 2 || pruned_arity >= self.arity {
            return Err(Error::InvalidPruneArity { arity: self.arity, pruned: pruned_arity });
        }
        let mut keep = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            keep[v] = true;
            let take = if self.nodes[v].kind == NodeKind::Root { 1 } else { pruned_arity };
            stack.extend(self.children(v).take(take));
        }

        let mut node_map = vec![None; self.nodes.len()];
        let mut next = 0;
        for (id, &kept) in keep.iter().enumerate() {
            if kept {
                node_map[id] = Some(next);
                next += 1;
            }
        }

        let by_step = self.internal_by_step();
        let mut new_step = vec![0u32; self.steps as usize + 1];
        let mut retained = 0u32;
        for (i, &v) in by_step.iter().enumerate() {
            if keep[v] {
                retained += 1;
                new_step[i + 1] = retained;
            }
        }

        let mut nodes = Vec::with_capacity(next);
        for (id, node) in self.nodes.iter().enumerate() {
            if !keep[id] {
                continue;
            }
            let parent = match node.parent {
                NONE => NONE,
                p => node_map[p as usize].expect("parent of kept node is kept") as u32,
            };
            let created = match node.kind {
                NodeKind::Internal => new_step[node.created as usize],
                _ => NONE,
            };
            nodes.push(Node { parent, label: node.label, kind: node.kind, created });
        }

        let mut slots = vec![0u32; 1 + pruned_arity * retained as usize];
        slots[0] = node_map[self.slots[0] as usize].expect("root child kept") as u32;
        for &v in &by_step {
            if !keep[v] {
                continue;
            }
            let start = 1 + pruned_arity * (new_step[self.nodes[v].created as usize] as usize - 1);
            for (j, c) in self.children(v).take(pruned_arity).enumerate() {
                slots[start + j] = node_map[c].expect("low-label child kept") as u32;
            }
        }

        // A leaf of rank r > 1 was born at step (r - 2) / (k - 1) + 1 with
        // label (r - 2) % (k - 1) + 2; pruned ranks follow the retained
        // birth steps.
        let k = self.arity as u64;
        let mut births: Vec<((u32, u64), u32)> = Vec::new();
        for (i, &leaf) in self.leaf_order.iter().enumerate() {
            if !keep[leaf as usize] {
                continue;
            }
            let rank = i as u64 + 1;
            let key = if rank == 1 {
                (0, 0)
            } else {
                let step = (rank - 2) / (k - 1) + 1;
                let label = (rank - 2) % (k - 1) + 2;
                (new_step[step as usize], label)
            };
            births.push((key, node_map[leaf as usize].expect("kept") as u32));
        }
        births.sort_unstable();
        let leaf_order = births.into_iter().map(|(_, id)| id).collect();

        let tree = GrowingTree { arity: pruned_arity, steps: retained as u64, nodes, slots, leaf_order };
        Ok(PrunedTree { tree, retained_internal: retained as u64, node_map })
    }

    /// Number of internal nodes kept by `prune_labels(pruned_arity)`,
    /// without building the pruned tree.
    pub fn retained_internal_count(&self, pruned_arity: usize) -> Result<u64> {
        if pruned_arity < 2 || pruned_arity >= self.arity {
            return Err(Error::InvalidPruneArity { arity: self.arity, pruned: pruned_arity });
        }
        let mut count = 0;
        let mut stack = vec![self.slots[0] as NodeId];
        while let Some(v) = stack.pop() {
            if self.nodes[v].kind == NodeKind::Internal {
                count += 1;
                stack.extend(self.children(v).take(pruned_arity));
            }
        }
        Ok(count)
    }

    /// Canonical string of the labelled subtree below `id`: `L` for a leaf,
    /// `(c_1,...,c_k)` for an internal node with children in label order.
    pub fn shape_of(&self, id: NodeId) -> String {
        let mut out = String::new();
        self.write_shape(id, &mut out);
        out
    }

    /// Canonical string of the whole tree (the subtree below the root edge).
    pub fn shape(&self) -> String {
        self.shape_of(self.slots[0] as NodeId)
    }

    fn write_shape(&self, id: NodeId, out: &mut String) {
        match self.nodes[id].kind {
            NodeKind::Leaf => out.push('L'),
            _ => {
                out.push('(');
                for (i, c) in self.children(id).enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.write_shape(c, out);
                }
                out.push(')');
            }
        }
    }

    pub fn to_json_value(&self) -> TreeJson {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, node)| NodeJson {
                id,
                parent: self.parent(id),
                label: self.label(id),
                kind: node.kind,
                created: self.created(id),
            })
            .collect();
        TreeJson { k: self.arity, n: self.steps, nodes, leaf_order: self.leaf_order().collect() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeJson = serde_json::from_str(text)?;
        Self::from_json_value(&doc)
    }

    /// Rebuilds a tree from its JSON form and checks every structural
    /// invariant on the way.
    pub fn from_json_value(doc: &TreeJson) -> Result<Self> {
        let bad = |msg: String| Error::InvalidTree(msg);
        let k = doc.k;
        if !(2..=u8::MAX as usize).contains(&k) {
            return Err(Error::InvalidArity(k));
        }
        let n = doc.n;
        let expected = k as u64 * n + 2;
        if doc.nodes.len() as u64 != expected {
            return Err(bad(format!("expected {expected} nodes, found {}", doc.nodes.len())));
        }
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for (i, nj) in doc.nodes.iter().enumerate() {
            if nj.id != i {
                return Err(bad(format!("node at position {i} has id {}", nj.id)));
            }
            let parent = match nj.parent {
                None => NONE,
                Some(p) if p < doc.nodes.len() && p != i => p as u32,
                Some(p) => return Err(bad(format!("node {i} has invalid parent {p}"))),
            };
            let label = match nj.label {
                None => 0,
                Some(l) if (1..=k).contains(&l) => l as u8,
                Some(l) => return Err(bad(format!("node {i} has label {l} outside 1..={k}"))),
            };
            let created = match (nj.kind, nj.created) {
                (NodeKind::Internal, Some(c)) if (1..=n).contains(&c) => c as u32,
                (NodeKind::Internal, _) => return Err(bad(format!("internal node {i} lacks a valid creation step"))),
                (_, None) => NONE,
                (_, Some(_)) => return Err(bad(format!("non-internal node {i} carries a creation step"))),
            };
            nodes.push(Node { parent, label, kind: nj.kind, created });
        }
        if nodes[0].kind != NodeKind::Root || nodes[0].parent != NONE {
            return Err(bad("node 0 must be the root".into()));
        }
        let mut slots = vec![NONE; 1 + k * n as usize];
        let mut seen_step = vec![false; n as usize + 1];
        for (i, node) in nodes.iter().enumerate().skip(1) {
            if node.kind == NodeKind::Root {
                return Err(bad(format!("second root at {i}")));
            }
            if node.kind == NodeKind::Internal {
                if seen_step[node.created as usize] {
                    return Err(bad(format!("creation step {} used twice", node.created)));
                }
                seen_step[node.created as usize] = true;
            }
            if node.parent == NONE {
                return Err(bad(format!("node {i} has no parent")));
            }
        }
        for (i, node) in nodes.iter().enumerate().skip(1) {
            let p = &nodes[node.parent as usize];
            let slot = match (p.kind, node.label) {
                (NodeKind::Root, 0) => 0,
                (NodeKind::Internal, l) if l > 0 => 1 + k * (p.created as usize - 1) + l as usize - 1,
                _ => return Err(bad(format!("node {i} has a label inconsistent with its parent"))),
            };
            if slots[slot] != NONE {
                return Err(bad(format!("node {i} collides with a sibling on the same label")));
            }
            slots[slot] = i as u32;
        }
        if slots.contains(&NONE) {
            return Err(bad("some child slot is empty".into()));
        }
        let leaves = nodes.iter().filter(|x| x.kind == NodeKind::Leaf).count();
        if doc.leaf_order.len() != leaves {
            return Err(bad("leaf_order does not list every leaf".into()));
        }
        let mut listed = vec![false; nodes.len()];
        for &l in &doc.leaf_order {
            if l >= nodes.len() || nodes[l].kind != NodeKind::Leaf || listed[l] {
                return Err(bad(format!("leaf_order entry {l} is not a distinct leaf")));
            }
            listed[l] = true;
        }
        let tree = GrowingTree {
            arity: k,
            steps: n,
            nodes,
            slots,
            leaf_order: doc.leaf_order.iter().map(|&l| l as u32).collect(),
        };
        // Reachability from the root rules out cycles among parent pointers.
        let mut reached = 0;
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            reached += 1;
            if reached > tree.nodes.len() {
                break;
            }
            stack.extend(tree.children(v));
        }
        if reached != tree.nodes.len() {
            return Err(bad("nodes are not all reachable from the root".into()));
        }
        Ok(tree)
    }

    /// Human-readable summary used in debugging output.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "T_{}({}) nodes={} edges={} leaves={}",
            self.steps,
            self.arity,
            self.node_count(),
            self.edge_count(),
            self.leaf_count()
        );
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: usize,
    pub parent: Option<usize>,
    pub label: Option<usize>,
    pub kind: NodeKind,
    pub created: Option<u64>,
}

/// Serialized form of a [`GrowingTree`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub k: usize,
    pub n: u64,
    pub nodes: Vec<NodeJson>,
    pub leaf_order: Vec<usize>,
}
