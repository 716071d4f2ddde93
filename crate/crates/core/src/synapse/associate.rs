use std::collections::BTreeMap;

use crate::model::{ElementId, NodeId, PhysPoint, SegmentId, Skeleton, Synapse, BACKGROUND};
use crate::spatial::{closer, PointIndex};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssociationSummary {
    pub anchored: usize,
    pub unanchored: Vec<ElementId>,
}

fn nearest_node(s: &Skeleton, p: PhysPoint) -> Option<(NodeId, f64)> {
    let mut best = None;
    for n in &s.nodes {
        let d = n.pos.distance(p);
        if closer(d, n.id, best) {
            best = Some((n.id, d));
        }
    }
    best
}

/// Anchors every element to a skeleton node. `label_at` reports the
/// segmentation label under a position (background outside the volume).
/// Elements inside a skeletonized object anchor to its nearest node;
/// background elements anchor to the nearest node of any skeleton within
/// `assoc_radius_nm` and take that object's id.
pub fn associate(
    synapses: &mut [Synapse],
    skeletons: &BTreeMap<SegmentId, Skeleton>,
    label_at: impl Fn(PhysPoint) -> SegmentId,
    assoc_radius_nm: f64,
) -> AssociationSummary {
    // Index entries sorted by (node id, object id) so index order is the tie-break.
    let mut entries: Vec<(NodeId, SegmentId, PhysPoint)> =
        skeletons.values().flat_map(|s| s.nodes.iter().map(|n| (n.id, s.object_id, n.pos))).collect();
    entries.sort_by_key(|e| (e.0, e.1));
    let index = PointIndex::new(entries.iter().map(|e| e.2).collect(), assoc_radius_nm.max(1.0));

    let mut summary = AssociationSummary::default();
    for syn in synapses.iter_mut() {
        for e in syn.elements_mut() {
            let label = label_at(e.pos);
            e.anchor_node = None;
            if label != BACKGROUND {
                e.segment_id = label;
                if let Some((node, _)) = skeletons.get(&label).and_then(|s| nearest_node(s, e.pos)) {
                    e.anchor_node = Some(node);
                }
            } else if let Some((i, _)) = index.nearest_within(e.pos, assoc_radius_nm) {
                e.segment_id = entries[i].1;
                e.anchor_node = Some(entries[i].0);
            } else {
                e.segment_id = BACKGROUND;
            }
            match e.anchor_node {
                Some(_) => summary.anchored += 1,
                None => summary.unanchored.push(e.id),
            }
        }
    }
    summary
}
