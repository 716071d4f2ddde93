use std::collections::HashMap;

use log::debug;

use super::dbf::distance_to_boundary;
use crate::error::{Error, Result};
use crate::grid::{component26, dijkstra, Grid};
use crate::model::{PhysPoint, SegmentId, Skeleton, SkeletonNode};
use crate::volume::VolumeSource;

/// Weight of the centerline penalty term.
const PENALTY_SCALE: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonParams {
    pub invalidation_scale: f64,
    pub invalidation_const_nm: f64,
    pub min_branch_len_nm: f64,
}

impl Default for SkeletonParams {
    fn default() -> Self {
        Self { invalidation_scale: 3.0, invalidation_const_nm: 200.0, min_branch_len_nm: 300.0 }
    }
}

impl SkeletonParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.invalidation_scale.is_finite()
            && self.invalidation_scale >= 0.0
            && self.invalidation_const_nm.is_finite()
            && self.invalidation_const_nm >= 0.0
            && self.min_branch_len_nm.is_finite()
            && self.min_branch_len_nm >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Param(format!("skeleton parameters must be finite and non-negative: {self:?}")))
        }
    }
}

/// Extracts the center-line tree of `object_id`.
pub fn skeletonize(
    src: &dyn VolumeSource,
    object_id: SegmentId,
    params: &SkeletonParams,
    soma_hint: Option<PhysPoint>,
) -> Result<Skeleton> {
    params.validate()?;
    let bounds = src
        .object_bounds(object_id)?
        .ok_or_else(|| Error::NotFound(format!("object {object_id} has no voxels")))?;
    // One voxel of padding so the crop border is always background.
    let origin: [i64; 3] = std::array::from_fn(|a| bounds.min[a] as i64 - 1);
    let shape: [usize; 3] = std::array::from_fn(|a| bounds.shape()[a] + 2);
    let labels = src.read_labels_box(origin, shape)?;
    let mask: Vec<bool> = labels.iter().map(|&l| l == object_id).collect();
    if !mask.contains(&true) {
        // Bounds can outlive an object that edits painted over.
        return Err(Error::NotFound(format!("object {object_id} has no voxels")));
    }
    let crop = MaskCrop { mask: &mask, shape, origin, voxel_size: src.meta().voxel_size };
    Ok(crop.skeletonize(object_id, params, soma_hint))
}

/// A binary object mask with its placement in the volume.
pub struct MaskCrop<'a> {
    pub mask: &'a [bool],
    pub shape: [usize; 3],
    /// Global voxel coordinate of local (0,0,0).
    pub origin: [i64; 3],
    pub voxel_size: [f64; 3],
}

impl MaskCrop<'_> {
    fn center(&self, grid: Grid, i: usize) -> PhysPoint {
        let c = grid.coord(i);
        PhysPoint::from_array(std::array::from_fn(|a| (self.origin[a] as f64 + c[a] as f64 + 0.5) * self.voxel_size[a]))
    }

    pub fn skeletonize(&self, object_id: SegmentId, params: &SkeletonParams, soma_hint: Option<PhysPoint>) -> Skeleton {
        let grid = Grid::new(self.shape);
        let dbf = distance_to_boundary(self.mask, self.shape, self.voxel_size);
        let voxels: Vec<usize> = (0..grid.len()).filter(|&i| self.mask[i]).collect();
        assert!(!voxels.is_empty(), "mask has no voxels");

        let root = match soma_hint {
            Some(h) => *voxels
                .iter()
                .min_by(|&&a, &&b| self.center(grid, a).distance(h).total_cmp(&self.center(grid, b).distance(h)))
                .expect("non-empty"),
            None => *voxels.iter().max_by(|&&a, &&b| dbf[a].total_cmp(&dbf[b]).then(b.cmp(&a))).expect("non-empty"),
        };
        let single = |i: usize| Skeleton {
            object_id,
            nodes: vec![SkeletonNode { id: 0, pos: self.center(grid, i), radius: dbf[i], parent: None }],
            root_id: 0,
        };
        if voxels.len() < 2 {
            return single(root);
        }

        let comp = component26(grid, self.mask, root);
        let dbf_max = voxels.iter().filter(|&&i| comp[i]).map(|&i| dbf[i]).fold(0.0, f64::max);
        let penalty = |i: usize| 1.0 + PENALTY_SCALE * (1.0 - dbf[i] / dbf_max).powi(4);
        let (_, parent) = dijkstra(grid, &comp, self.voxel_size, root, penalty);
        let (daf, _) = dijkstra(grid, &comp, self.voxel_size, root, |_| 1.0);

        let mut valid = comp.clone();
        let mut remaining: Vec<usize> = voxels.iter().copied().filter(|&i| comp[i]).collect();
        remaining.sort_by(|&a, &b| daf[b].total_cmp(&daf[a]).then(a.cmp(&b)));

        // Voxel index -> emitted node slot; parent slot per node.
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let mut emitted: Vec<(usize, Option<usize>)> = vec![(root, None)];
        slot.insert(root, 0);
        self.invalidate(grid, &mut valid, root, params.invalidation_scale * dbf[root]);

        let mut cursor = 0;
        loop {
            while cursor < remaining.len() && !valid[remaining[cursor]] {
                cursor += 1;
            }
            let Some(&target) = remaining.get(cursor) else { break };
            let mut path = vec![target];
            let mut cur = target;
            while !slot.contains_key(&cur) {
                cur = parent[cur];
                path.push(cur);
            }
            // path ends at an emitted voxel; emit the rest distal-last.
            for w in path.windows(2).rev() {
                let (child, par) = (w[0], w[1]);
                let id = emitted.len();
                emitted.push((child, Some(slot[&par])));
                slot.insert(child, id);
            }
            for &v in &path {
                let r = params.invalidation_scale * dbf[v] + params.invalidation_const_nm;
                self.invalidate(grid, &mut valid, v, r);
            }
        }

        let mut parents: Vec<Option<usize>> = emitted.iter().map(|e| e.1).collect();
        let pos: Vec<PhysPoint> = emitted.iter().map(|e| self.center(grid, e.0)).collect();
        prune(&mut parents, &pos, params.min_branch_len_nm);
        debug!("object {object_id}: {} voxels, {} traced nodes", voxels.len(), emitted.len());
        build(object_id, &parents, &pos, |k| dbf[emitted[k].0])
    }

    fn invalidate(&self, grid: Grid, valid: &mut [bool], center: usize, radius: f64) {
        let c = grid.coord(center);
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            let ext = (radius / self.voxel_size[a]).floor() as usize;
            lo[a] = c[a].saturating_sub(ext);
            hi[a] = (c[a] + ext).min(self.shape[a] - 1);
        }
        let r2 = radius * radius;
        for z in lo[2]..=hi[2] {
            let dz = (z as f64 - c[2] as f64) * self.voxel_size[2];
            for y in lo[1]..=hi[1] {
                let dy = (y as f64 - c[1] as f64) * self.voxel_size[1];
                let rest = r2 - dz * dz - dy * dy;
                if rest < 0.0 {
                    continue;
                }
                let base = grid.index([0, y, z]);
                for x in lo[0]..=hi[0] {
                    let dx = (x as f64 - c[0] as f64) * self.voxel_size[0];
                    if dx * dx <= rest {
                        valid[base + x] = false;
                    }
                }
            }
        }
    }
}

/// Removes leaf branches shorter than `min_len` that are not the longest
/// child at their junction, repeating until nothing changes. Removed nodes
/// get their parent set to a sentinel via `usize::MAX` and are dropped by
/// `build`.
fn prune(parents: &mut [Option<usize>], pos: &[PhysPoint], min_len: f64) {
    const REMOVED: Option<usize> = Some(usize::MAX);
    let n = parents.len();
    loop {
        let alive = |p: &[Option<usize>], i: usize| p[i] != REMOVED;
        let mut children = vec![Vec::new(); n];
        for i in 0..n {
            if let (true, Some(p)) = (alive(parents, i), parents[i]) {
                children[p].push(i);
            }
        }
        // Height (longest downward path) of every live node.
        let mut height = vec![0.0f64; n];
        for i in (0..n).rev() {
            // Children are always emitted after their parent.
            if let (true, Some(p)) = (alive(parents, i), parents[i]) {
                let h = height[i] + pos[i].distance(pos[p]);
                height[p] = height[p].max(h);
            }
        }
        let mut to_remove = Vec::new();
        for leaf in 0..n {
            if !alive(parents, leaf) || !children[leaf].is_empty() || parents[leaf].is_none() {
                continue;
            }
            let mut chain = vec![leaf];
            let mut len = 0.0;
            let mut cur = leaf;
            let junction = loop {
                let Some(p) = parents[cur] else { break None };
                len += pos[cur].distance(pos[p]);
                if children[p].len() >= 2 {
                    break Some((p, cur));
                }
                chain.push(p);
                cur = p;
            };
            let Some((j, first)) = junction else { continue };
            if len >= min_len {
                continue;
            }
            let key = |c: usize| height[c] + pos[c].distance(pos[j]);
            let longest = children[j]
                .iter()
                .copied()
                .max_by(|&a, &b| key(a).total_cmp(&key(b)).then(b.cmp(&a)))
                .expect("junction has children");
            if longest != first {
                to_remove.extend(chain);
            }
        }
        if to_remove.is_empty() {
            return;
        }
        for i in to_remove {
            parents[i] = REMOVED;
        }
    }
}

/// Renumbers live nodes compactly in preorder from the root.
fn build(object_id: SegmentId, parents: &[Option<usize>], pos: &[PhysPoint], radius: impl Fn(usize) -> f64) -> Skeleton {
    let n = parents.len();
    let mut children = vec![Vec::new(); n];
    for (i, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            if p != usize::MAX {
                children[p].push(i);
            }
        }
    }
    let mut ids = vec![u32::MAX; n];
    let mut order = Vec::new();
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        ids[i] = order.len() as u32;
        order.push(i);
        stack.extend(children[i].iter().rev().copied());
    }
    let nodes = order
        .iter()
        .map(|&i| SkeletonNode { id: ids[i], pos: pos[i], radius: radius(i), parent: parents[i].map(|p| ids[p]) })
        .collect();
    Skeleton { object_id, nodes, root_id: 0 }
}
