//! Label operations and their application to a dense box.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::SegmentId;

/// A run of voxels along x starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoxelRun {
    pub start: [usize; 3],
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LabelOp {
    /// Every voxel labeled `from` becomes `to`.
    Relabel { from: SegmentId, to: SegmentId },
    /// Pointwise assignment.
    Override { runs: Vec<(VoxelRun, SegmentId)> },
}

/// Applies `ops` in order to `labels`, a box at `origin` of `shape`.
pub fn apply_ops<'a>(ops: impl IntoIterator<Item = &'a LabelOp>, origin: [i64; 3], shape: [usize; 3], labels: &mut [SegmentId]) {
    let mut pending: HashMap<SegmentId, SegmentId> = HashMap::new();
    for op in ops {
        match op {
            LabelOp::Relabel { from, to } => compose(&mut pending, *from, *to),
            LabelOp::Override { runs } => {
                flush(&mut pending, labels);
                for (run, label) in runs {
                    paint_run(run, *label, origin, shape, labels);
                }
            }
        }
    }
    flush(&mut pending, labels);
}

fn compose(map: &mut HashMap<SegmentId, SegmentId>, from: SegmentId, to: SegmentId) {
    if from == to {
        return;
    }
    for v in map.values_mut() {
        if *v == from {
            *v = to;
        }
    }
    map.entry(from).or_insert(to);
}

fn flush(map: &mut HashMap<SegmentId, SegmentId>, labels: &mut [SegmentId]) {
    map.retain(|k, v| k != v);
    if map.is_empty() {
        return;
    }
    let mut last: Option<(SegmentId, SegmentId)> = None;
    for l in labels.iter_mut() {
        let out = match last {
            Some((k, v)) if k == *l => v,
            _ => {
                let v = map.get(l).copied().unwrap_or(*l);
                last = Some((*l, v));
                v
            }
        };
        *l = out;
    }
    map.clear();
}

fn paint_run(run: &VoxelRun, label: SegmentId, origin: [i64; 3], shape: [usize; 3], labels: &mut [SegmentId]) {
    let y = run.start[1] as i64 - origin[1];
    let z = run.start[2] as i64 - origin[2];
    if y < 0 || z < 0 || y >= shape[1] as i64 || z >= shape[2] as i64 {
        return;
    }
    let x0 = (run.start[0] as i64 - origin[0]).max(0);
    let x1 = (run.start[0] as i64 + run.len as i64 - origin[0]).min(shape[0] as i64);
    if x0 >= x1 {
        return;
    }
    let row = (y as usize + shape[1] * z as usize) * shape[0];
    labels[row + x0 as usize..row + x1 as usize].fill(label);
}

/// Collapses voxels (global coordinates, any order) with labels into x-runs.
pub fn runs_from_voxels(mut voxels: Vec<([usize; 3], SegmentId)>) -> Vec<(VoxelRun, SegmentId)> {
    voxels.sort_by_key(|(c, _)| (c[2], c[1], c[0]));
    let mut out: Vec<(VoxelRun, SegmentId)> = Vec::new();
    for (c, l) in voxels {
        if let Some((r, rl)) = out.last_mut() {
            if *rl == l && r.start[1] == c[1] && r.start[2] == c[2] && r.start[0] + r.len == c[0] {
                r.len += 1;
                continue;
            }
        }
        out.push((VoxelRun { start: c, len: 1 }, l));
    }
    out
}
