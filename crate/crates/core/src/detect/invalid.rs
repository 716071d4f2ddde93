use std::collections::BTreeMap;

use super::new_roi;
use crate::error::{Error, Result};
use crate::model::{Branch, BranchId, ErrorRoi, PhysPoint, RoiKind, Skeleton};
use crate::skeleton::Topology;

/// Slack on the threshold comparison so exact-threshold angles never flip
/// on rounding.
const ANGLE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvalidBranchParams {
    pub vector_arc_nm: f64,
    pub cos_threshold: f64,
}

impl Default for InvalidBranchParams {
    fn default() -> Self {
        Self { vector_arc_nm: 500.0, cos_threshold: -0.5 }
    }
}

/// Flags child branches leaving a junction against the direction of the stem.
pub fn detect_invalid_branch(skeleton: &Skeleton, branches: &[Branch], params: &InvalidBranchParams) -> Vec<ErrorRoi> {
    let topo = Topology::new(skeleton);
    let mut out = Vec::new();
    for b in branches {
        if b.node_ids.len() < 2 {
            continue;
        }
        let Some(j) = topo.index_of(b.proximal()) else { continue };
        if j == topo.root || topo.children[j].len() < 2 {
            continue;
        }
        // Stem: walk toward the root for at least vector_arc of arc.
        let mut k = j;
        let mut arc = 0.0;
        while let Some(p) = topo.parent[k] {
            arc += topo.pos[k].distance(topo.pos[p]);
            k = p;
            if arc >= params.vector_arc_nm {
                break;
            }
        }
        let Some(stem) = (topo.pos[j] - topo.pos[k]).normalized() else { continue };
        let Some(child) = (walk_branch(&topo, b, params.vector_arc_nm) - topo.pos[j]).normalized() else { continue };
        let dot = child.dot(stem);
        if dot < params.cos_threshold - ANGLE_EPS {
            let mut evidence = BTreeMap::new();
            evidence.insert("dot".into(), format!("{dot:.6}"));
            evidence.insert("child_branch".into(), b.id.to_string());
            out.push(new_roi(RoiKind::InvalidBranch, topo.pos[j], params.vector_arc_nm, skeleton.object_id, evidence));
        }
    }
    out
}

/// Position reached after `arc_nm` of arc along the branch (or its end).
fn walk_branch(topo: &Topology, b: &Branch, arc_nm: f64) -> PhysPoint {
    let mut arc = 0.0;
    let mut last = topo.pos[topo.index_of(b.node_ids[0]).expect("branch node")];
    for &id in &b.node_ids[1..] {
        let p = topo.pos[topo.index_of(id).expect("branch node")];
        arc += p.distance(last);
        last = p;
        if arc >= arc_nm {
            break;
        }
    }
    last
}

/// A point on a branch and the local direction of travel, used to attach
/// the inspector while sliding along a neurite.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InspectionAnchor {
    pub pos: PhysPoint,
    /// Unit tangent (zero for a single-node branch).
    pub forward: PhysPoint,
    /// Arc position actually used after clamping.
    pub t: f64,
}

pub fn assist_merge_search(skeleton: &Skeleton, branches: &[Branch], branch_id: BranchId, t: f64) -> Result<InspectionAnchor> {
    let b = branches
        .iter()
        .find(|b| b.id == branch_id)
        .ok_or_else(|| Error::NotFound(format!("branch {branch_id} of cell {}", skeleton.object_id)))?;
    let pts: Vec<PhysPoint> = b
        .node_ids
        .iter()
        .map(|&id| skeleton.node(id).map(|n| n.pos).ok_or_else(|| Error::NotFound(format!("node {id}"))))
        .collect::<Result<_>>()?;
    let total: f64 = pts.windows(2).map(|w| w[0].distance(w[1])).sum();
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, total) };
    if pts.len() == 1 {
        return Ok(InspectionAnchor { pos: pts[0], forward: PhysPoint::ORIGIN, t: 0.0 });
    }
    let mut acc = 0.0;
    for (i, w) in pts.windows(2).enumerate() {
        let len = w[0].distance(w[1]);
        let last = i + 2 == pts.len();
        if acc + len >= t || last {
            let f = if len > 0.0 { ((t - acc) / len).clamp(0.0, 1.0) } else { 0.0 };
            let forward = (w[1] - w[0]).normalized().unwrap_or(PhysPoint::ORIGIN);
            return Ok(InspectionAnchor { pos: w[0] + (w[1] - w[0]) * f, forward, t });
        }
        acc += len;
    }
    unreachable!("loop returns on the last segment")
}
