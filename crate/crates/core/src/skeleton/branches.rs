use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Branch, BranchClass, BranchId, ClassSource, NodeId, PhysPoint, Skeleton};

/// Index-based view of a valid skeleton: parents, ordered children and
/// root distances.
#[derive(Debug, Clone)]
pub struct Topology {
    pub ids: Vec<NodeId>,
    pub pos: Vec<PhysPoint>,
    index: HashMap<NodeId, usize>,
    pub parent: Vec<Option<usize>>,
    /// Ordered by descending subtree path length, ties by lower node id.
    pub children: Vec<Vec<usize>>,
    pub root: usize,
    /// Geodesic distance from the root along the unique path, nm.
    pub root_distance: Vec<f64>,
}

impl Topology {
    /// Expects a skeleton accepted by `validate_skeleton`.
    pub fn new(s: &Skeleton) -> Self {
        let n = s.nodes.len();
        let ids: Vec<NodeId> = s.nodes.iter().map(|n| n.id).collect();
        let pos: Vec<PhysPoint> = s.nodes.iter().map(|n| n.pos).collect();
        let index: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let parent: Vec<Option<usize>> = s.nodes.iter().map(|n| n.parent.map(|p| index[&p])).collect();
        let root = index[&s.root_id];
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(i);
            }
        }
        // Preorder from the root, used for top-down and bottom-up sweeps.
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            order.push(i);
            stack.extend(children[i].iter().copied());
        }
        let mut root_distance = vec![0.0; n];
        for &i in &order {
            if let Some(p) = parent[i] {
                root_distance[i] = root_distance[p] + pos[i].distance(pos[p]);
            }
        }
        let mut height = vec![0.0f64; n];
        for &i in order.iter().rev() {
            if let Some(p) = parent[i] {
                let h = height[i] + pos[i].distance(pos[p]);
                if h > height[p] {
                    height[p] = h;
                }
            }
        }
        for (p, list) in children.iter_mut().enumerate() {
            let key = |c: usize| height[c] + pos[c].distance(pos[p]);
            list.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(ids[a].cmp(&ids[b])));
        }
        Self { ids, pos, index, parent, children, root, root_distance }
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Splits the skeleton into maximal paths between root, junction and leaf
/// nodes. Branch ids follow depth-first order with children visited by
/// descending subtree path length (ties by lower node id).
pub fn decompose_branches(s: &Skeleton) -> Vec<Branch> {
    decompose_with(&Topology::new(s))
}

pub(crate) fn decompose_with(t: &Topology) -> Vec<Branch> {
    let mut out = Vec::new();
    if t.children[t.root].is_empty() {
        out.push(new_branch(0, vec![t.ids[t.root]]));
        return out;
    }
    // Stack of (start node, child) pairs; pushed in reverse to pop in order.
    let mut stack: Vec<(usize, usize)> = t.children[t.root].iter().rev().map(|&c| (t.root, c)).collect();
    while let Some((start, first)) = stack.pop() {
        let mut nodes = vec![t.ids[start]];
        let mut cur = first;
        loop {
            nodes.push(t.ids[cur]);
            if t.children[cur].len() == 1 {
                cur = t.children[cur][0];
            } else {
                break;
            }
        }
        out.push(new_branch(out.len() as BranchId, nodes));
        stack.extend(t.children[cur].iter().rev().map(|&c| (cur, c)));
    }
    out
}

fn new_branch(id: BranchId, node_ids: Vec<NodeId>) -> Branch {
    Branch { id, node_ids, class: BranchClass::Miscellaneous, class_source: ClassSource::Automatic }
}

/// Sum of Euclidean edge lengths from the root to `node_id`.
pub fn geodesic_distance(s: &Skeleton, node_id: NodeId) -> Result<f64> {
    let t = Topology::new(s);
    t.index_of(node_id)
        .map(|i| t.root_distance[i])
        .ok_or_else(|| Error::NotFound(format!("node {node_id} in skeleton of object {}", s.object_id)))
}

pub fn branch_length(s: &Skeleton, b: &Branch) -> f64 {
    b.node_ids
        .windows(2)
        .map(|w| match (s.node(w[0]), s.node(w[1])) {
            (Some(a), Some(c)) => a.pos.distance(c.pos),
            _ => 0.0,
        })
        .sum()
}

/// Branch owning each node: the branch containing the node's incoming
/// edge; the root belongs to branch 0.
pub fn node_branch_map(branches: &[Branch]) -> HashMap<NodeId, BranchId> {
    let mut m = HashMap::new();
    for b in branches {
        for &n in &b.node_ids[1..] {
            m.insert(n, b.id);
        }
    }
    if let Some(first) = branches.first() {
        m.entry(first.proximal()).or_insert(first.id);
    }
    m
}
