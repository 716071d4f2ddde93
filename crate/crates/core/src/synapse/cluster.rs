use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{BranchId, ClusterId, NodeId, PhysPoint, Skeleton, Synapse, SynapseCluster, SynapseId};
use crate::skeleton::{branches::decompose_with, Topology};
use crate::spatial::closer;

/// A sampling position along a branch used to seed clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversalPoint {
    pub branch_id: BranchId,
    /// Arc length from the branch's proximal node, nm.
    pub arc: f64,
    pub pos: PhysPoint,
    /// Branch node whose arc position is nearest `arc`.
    pub anchor_node: NodeId,
}

/// Points every `r` nm of arc along each branch plus one at each branch
/// end, in depth-first branch order.
pub fn traversal_points(skeleton: &Skeleton, r: f64) -> Result<Vec<TraversalPoint>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Param(format!("cluster radius must be positive, got {r}")));
    }
    let topo = Topology::new(skeleton);
    let mut out = Vec::new();
    for b in decompose_with(&topo) {
        let pos: Vec<PhysPoint> = b.node_ids.iter().map(|&id| topo.pos[topo.index_of(id).expect("branch node")]).collect();
        let mut arc = vec![0.0];
        for w in pos.windows(2) {
            arc.push(arc.last().unwrap() + w[0].distance(w[1]));
        }
        let total = *arc.last().unwrap();
        let mut ts = Vec::new();
        let mut k = 0usize;
        while (k as f64) * r < total - 1e-9 {
            ts.push(k as f64 * r);
            k += 1;
        }
        ts.push(total);
        for t in ts {
            let seg = arc.partition_point(|&a| a <= t).clamp(1, arc.len().max(2) - 1);
            let p = if pos.len() == 1 {
                pos[0]
            } else {
                let (a0, a1) = (arc[seg - 1], arc[seg]);
                let f = if a1 > a0 { ((t - a0) / (a1 - a0)).clamp(0.0, 1.0) } else { 0.0 };
                pos[seg - 1] + (pos[seg] - pos[seg - 1]) * f
            };
            let nearest = (0..arc.len())
                .fold(None, |best: Option<(usize, f64)>, i| {
                    let d = (arc[i] - t).abs();
                    if closer(d, i, best) { Some((i, d)) } else { best }
                })
                .expect("branch has nodes")
                .0;
            out.push(TraversalPoint { branch_id: b.id, arc: t, pos: p, anchor_node: b.node_ids[nearest] });
        }
    }
    Ok(out)
}

/// Groups the cell's anchored synapses into disjoint clusters along its
/// skeleton. Synapses without an anchored element on the cell are ignored.
pub fn form_clusters(skeleton: &Skeleton, synapses: &[Synapse], r: f64) -> Result<Vec<SynapseCluster>> {
    let points = traversal_points(skeleton, r)?;
    let cell = skeleton.object_id;
    let members: Vec<(SynapseId, PhysPoint)> =
        synapses.iter().filter_map(|s| s.element_on(cell).map(|e| (s.id, e.pos))).collect();
    if members.is_empty() {
        return Ok(Vec::new());
    }
    let mut assigned = vec![false; members.len()];
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut group_of_point: HashMap<usize, usize> = HashMap::new();
    for (k, tp) in points.iter().enumerate() {
        let hit: Vec<usize> =
            (0..members.len()).filter(|&j| !assigned[j] && members[j].1.distance(tp.pos) <= r).collect();
        if hit.is_empty() {
            continue;
        }
        for &j in &hit {
            assigned[j] = true;
        }
        group_of_point.insert(k, groups.len());
        groups.push((k, hit));
    }
    for j in 0..members.len() {
        if assigned[j] {
            continue;
        }
        let mut best = None;
        for (k, tp) in points.iter().enumerate() {
            let d = members[j].1.distance(tp.pos);
            if closer(d, k, best) {
                best = Some((k, d));
            }
        }
        let k = best.expect("at least one traversal point").0;
        let g = *group_of_point.entry(k).or_insert_with(|| {
            groups.push((k, Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(j);
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(id, (k, mut js))| {
            js.sort_by_key(|&j| members[j].0);
            let tp = &points[k];
            SynapseCluster {
                id: id as ClusterId,
                member_ids: js.iter().map(|&j| members[j].0).collect(),
                centroid: PhysPoint::mean(js.iter().map(|&j| members[j].1)).expect("non-empty cluster"),
                anchor_node: tp.anchor_node,
                branch_id: tp.branch_id,
                order_index: 0,
            }
        })
        .collect())
}

/// Orders clusters by depth-first branch order, then by the geodesic
/// distance of their anchor from the root, and assigns `order_index`.
pub fn sort_clusters(mut clusters: Vec<SynapseCluster>, skeleton: &Skeleton) -> Vec<SynapseCluster> {
    let topo = Topology::new(skeleton);
    let geo = |n: NodeId| topo.index_of(n).map_or(f64::INFINITY, |i| topo.root_distance[i]);
    clusters.sort_by(|a, b| {
        a.branch_id
            .cmp(&b.branch_id)
            .then(geo(a.anchor_node).total_cmp(&geo(b.anchor_node)))
            .then(a.id.cmp(&b.id))
    });
    for (i, c) in clusters.iter_mut().enumerate() {
        c.order_index = i;
    }
    clusters
}

/// One line per cluster in `order_index` order:
/// `cluster_id, order_index, branch_id, cx, cy, cz, member_ids...`.
pub fn render_clusters(clusters: &[SynapseCluster]) -> String {
    let mut sorted: Vec<&SynapseCluster> = clusters.iter().collect();
    sorted.sort_by_key(|c| c.order_index);
    let mut out = String::from("# cluster_id, order_index, branch_id, cx, cy, cz, member_ids...\n");
    for c in sorted {
        let _ = write!(out, "{}, {}, {}, {}, {}, {}", c.id, c.order_index, c.branch_id, c.centroid.x, c.centroid.y, c.centroid.z);
        for m in &c.member_ids {
            let _ = write!(out, ", {m}");
        }
        out.push('\n');
    }
    out
}

/// Cluster file row (the file does not carry anchor nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRow {
    pub id: ClusterId,
    pub order_index: usize,
    pub branch_id: BranchId,
    pub centroid: PhysPoint,
    pub member_ids: Vec<SynapseId>,
}

pub fn parse_cluster_rows(text: &str) -> Result<Vec<ClusterRow>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::Format(format!("cluster line {}: {line:?}", i + 1));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() < 7 {
            return Err(bad());
        }
        let c = |k: usize| f[k].parse::<f64>().map_err(|_| bad());
        out.push(ClusterRow {
            id: f[0].parse().map_err(|_| bad())?,
            order_index: f[1].parse().map_err(|_| bad())?,
            branch_id: f[2].parse().map_err(|_| bad())?,
            centroid: PhysPoint::new(c(3)?, c(4)?, c(5)?),
            member_ids: f[6..].iter().map(|m| m.parse().map_err(|_| bad())).collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ElementKind, SynapseStatus, SynapticElement};
    use crate::skeleton::branches::fixtures::{chain, y_shape};

    pub(crate) fn syn_at(id: SynapseId, cell: u64, node: NodeId, pos: PhysPoint) -> Synapse {
        Synapse {
            id,
            pre: SynapticElement { id: 2 * id, kind: ElementKind::Pre, pos, segment_id: cell, anchor_node: Some(node) },
            posts: vec![SynapticElement {
                id: 2 * id + 1,
                kind: ElementKind::Post,
                pos: pos + PhysPoint::new(0.0, 0.0, 50.0),
                segment_id: 99,
                anchor_node: None,
            }],
            status: SynapseStatus::Unvalidated,
            class_label: None,
        }
    }

    #[test]
    fn empty_and_bad_radius() {
        let s = chain(5, 100.0);
        assert!(form_clusters(&s, &[], 2000.0).unwrap().is_empty());
        assert!(matches!(form_clusters(&s, &[], 0.0), Err(Error::Param(_))));
    }

    #[test]
    fn two_close_synapses_share_a_cluster() {
        let s = chain(5, 100.0);
        let syn = [syn_at(1, 1, 0, PhysPoint::new(0.0, 10.0, 0.0)), syn_at(2, 1, 0, PhysPoint::new(40.0, 10.0, 0.0))];
        let c = form_clusters(&s, &syn, 200.0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].member_ids, vec![1, 2]);
        assert_eq!(c[0].centroid, PhysPoint::new(20.0, 10.0, 0.0));
    }

    #[test]
    fn leftover_ties_go_to_earlier_point() {
        // Points at x = 0, 100, 200 (r = 100, branch length 200).
        let s = chain(3, 100.0);
        let far = PhysPoint::new(50.0, 500.0, 0.0);
        let near = PhysPoint::new(200.0, 0.0, 0.0);
        let c = form_clusters(&s, &[syn_at(1, 1, 1, far), syn_at(2, 1, 2, near)], 100.0).unwrap();
        let home = c.iter().find(|c| c.member_ids.contains(&1)).unwrap();
        // Equidistant to points at x=0 and x=100; the first one wins.
        assert_eq!(home.anchor_node, 0);
    }

    #[test]
    fn sorting_by_geodesic_distance() {
        let s = chain(3, 50.0);
        let mk = |id, anchor| SynapseCluster {
            id,
            member_ids: vec![id as u64],
            centroid: PhysPoint::ORIGIN,
            anchor_node: anchor,
            branch_id: 0,
            order_index: 0,
        };
        let sorted = sort_clusters(vec![mk(0, 2), mk(1, 1)], &s);
        let idx: HashMap<ClusterId, usize> = sorted.iter().map(|c| (c.id, c.order_index)).collect();
        assert_eq!((idx[&0], idx[&1]), (1, 0));
        assert!(sort_clusters(Vec::new(), &s).is_empty());
    }

    #[test]
    fn y_children_are_contiguous() {
        let s = y_shape();
        let syn = [
            syn_at(1, 1, 4, PhysPoint::new(200.0, 200.0, 0.0)),
            syn_at(2, 1, 5, PhysPoint::new(200.0, -100.0, 0.0)),
            syn_at(3, 1, 3, PhysPoint::new(200.0, 100.0, 0.0)),
        ];
        let c = sort_clusters(form_clusters(&s, &syn, 50.0).unwrap(), &s);
        let branches: Vec<BranchId> = c.iter().map(|c| c.branch_id).collect();
        let mut sorted = branches.clone();
        sorted.sort();
        assert_eq!(branches, sorted);
        let parsed = parse_cluster_rows(&render_clusters(&c)).unwrap();
        assert_eq!(parsed.len(), c.len());
        assert_eq!(parsed[0].member_ids, c[0].member_ids);
    }
}
