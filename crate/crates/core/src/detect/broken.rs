use std::collections::{BTreeMap, HashMap, HashSet};

use log::warn;

use super::extractor::MaskExtractor;
use super::new_roi;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{ErrorRoi, NodeId, PhysPoint, RoiKind, SegmentId, Skeleton, BACKGROUND};
use crate::volume::VolumeSource;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrokenParams {
    pub window_slices: usize,
    pub window_xy: usize,
    pub overhang_nm: f64,
    pub min_overhang_voxels: usize,
    /// Arc length over which the endpoint's forward vector is measured.
    pub forward_arc_nm: f64,
}

impl Default for BrokenParams {
    fn default() -> Self {
        Self { window_slices: 10, window_xy: 129, overhang_nm: 100.0, min_overhang_voxels: 10, forward_arc_nm: 500.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BrokenScan {
    pub rois: Vec<ErrorRoi>,
    /// Endpoints whose windows could not be analyzed, with the reason.
    pub skipped: Vec<(NodeId, String)>,
}

/// Path from an endpoint inward (endpoint first) until a junction, the far
/// end of the tree, or `max_arc` nm.
fn terminal_path(skeleton: &Skeleton, children: &HashMap<NodeId, Vec<NodeId>>, end: NodeId, max_arc: f64) -> Vec<PhysPoint> {
    let mut out = vec![skeleton.node(end).expect("endpoint").pos];
    let mut prev: Option<NodeId> = None;
    let mut cur = end;
    let mut arc = 0.0;
    while arc < max_arc {
        let n = skeleton.node(cur).expect("node");
        let mut nbrs: Vec<NodeId> = children.get(&cur).cloned().unwrap_or_default();
        nbrs.extend(n.parent);
        if prev.is_some() && nbrs.len() != 2 {
            break;
        }
        nbrs.retain(|&x| Some(x) != prev);
        let [next] = nbrs[..] else { break };
        let p = skeleton.node(next).expect("node").pos;
        arc += p.distance(*out.last().unwrap());
        out.push(p);
        prev = Some(cur);
        cur = next;
    }
    out
}

/// Flags endpoints where the extracted object mask continues past the
/// skeleton end into voxels of other labels.
pub fn detect_broken(
    src: &dyn VolumeSource,
    skeleton: &Skeleton,
    extractor: &dyn MaskExtractor,
    params: &BrokenParams,
) -> Result<BrokenScan> {
    if params.window_slices == 0 || params.window_xy == 0 || !(params.overhang_nm >= 0.0) {
        return Err(Error::Param(format!("invalid broken-neurite parameters {params:?}")));
    }
    let meta = src.meta();
    let vs = meta.voxel_size;
    let children = skeleton.children();
    let mut scan = BrokenScan::default();
    let mut seen: HashSet<SegmentId> = HashSet::new();
    for end in skeleton.endpoints() {
        let w = params.window_slices as i64;
        let reach = params.forward_arc_nm.max(w as f64 * vs.iter().cloned().fold(0.0, f64::max));
        let path = terminal_path(skeleton, &children, end, reach);
        let e = path[0];
        let tail = path.iter().copied().find(|p| p.distance(e) >= params.forward_arc_nm).unwrap_or(*path.last().unwrap());
        let Some(fwd) = (e - tail).normalized() else { continue };
        let f = fwd.to_array();
        let axis = (0..3).max_by(|&a, &b| f[a].abs().total_cmp(&f[b].abs()).then(b.cmp(&a))).unwrap();
        let sign: i64 = if f[axis] >= 0.0 { 1 } else { -1 };
        let ev = meta.phys_to_voxel_signed(e);
        let half = (params.window_xy / 2) as i64;

        let mut union: HashSet<[i64; 3]> = HashSet::new();
        let mut failure = None;
        for j in 0..w {
            let start = ev[axis] - sign * (w - 1 - j);
            // Seed: the path node whose slice is nearest the window start.
            let seed_pos = *path
                .iter()
                .min_by_key(|p| (meta.phys_to_voxel_signed(**p)[axis] - start).abs())
                .expect("non-empty path");
            let sv = meta.phys_to_voxel_signed(seed_pos);
            let lo_axis = if sign > 0 { start } else { start - (w - 1) };
            let mut origin = [0i64; 3];
            let mut shape = [0usize; 3];
            for a in 0..3 {
                if a == axis {
                    origin[a] = lo_axis;
                    shape[a] = params.window_slices;
                } else {
                    origin[a] = sv[a] - half;
                    shape[a] = params.window_xy;
                }
            }
            if !meta.contains_voxel(sv) {
                continue;
            }
            let sub = src.read_box(origin, shape)?;
            // The extractor closes along its last axis; present the window
            // with the traversal axis last so its images follow the neurite.
            let seed_local: [usize; 3] = std::array::from_fn(|a| (sv[a] - origin[a]) as usize);
            let (perm, inv) = axis_permutation(axis);
            let permuted = permute(&sub, perm);
            let mask = match extractor.extract(&permuted, permute_coord(seed_local, perm)) {
                Ok(m) => m,
                Err(err) => {
                    failure = Some(err.to_string());
                    break;
                }
            };
            let g = Grid::new(permuted.shape);
            for (i, &m) in mask.iter().enumerate() {
                if m {
                    let lc = permute_coord(g.coord(i), inv);
                    union.insert(std::array::from_fn(|a| origin[a] + lc[a] as i64));
                }
            }
        }
        if let Some(msg) = failure {
            warn!("object {} endpoint {end}: mask extraction failed: {msg}", skeleton.object_id);
            scan.skipped.push((end, msg));
            continue;
        }

        let mut count = 0usize;
        let mut extent = 0.0f64;
        let mut votes: BTreeMap<SegmentId, usize> = BTreeMap::new();
        let ahead: Vec<([i64; 3], f64)> = union
            .into_iter()
            .map(|v| (v, (PhysPoint::from_array(std::array::from_fn(|a| (v[a] as f64 + 0.5) * vs[a])) - e).dot(fwd)))
            .filter(|&(_, proj)| proj > 0.0)
            .collect();
        if let Some(first) = ahead.first() {
            let mut lo = first.0;
            let mut hi = first.0;
            for (v, _) in &ahead {
                for a in 0..3 {
                    lo[a] = lo[a].min(v[a]);
                    hi[a] = hi[a].max(v[a]);
                }
            }
            let shape: [usize; 3] = std::array::from_fn(|a| (hi[a] - lo[a] + 1) as usize);
            let labels = src.read_labels_box(lo, shape)?;
            let g = Grid::new(shape);
            for (v, proj) in ahead {
                let label = labels[g.index(std::array::from_fn(|a| (v[a] - lo[a]) as usize))];
                if label == skeleton.object_id {
                    continue;
                }
                count += 1;
                extent = extent.max(proj);
                if label != BACKGROUND {
                    *votes.entry(label).or_default() += 1;
                }
            }
        }
        if count < params.min_overhang_voxels || extent < params.overhang_nm {
            continue;
        }
        let candidate = votes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&l, _)| l);
        if let Some(c) = candidate {
            if !seen.insert(c) {
                continue;
            }
        }
        let mut evidence = BTreeMap::new();
        evidence.insert("node".into(), end.to_string());
        evidence.insert("overhang_nm".into(), format!("{extent:.1}"));
        evidence.insert("overhang_voxels".into(), count.to_string());
        if let Some(c) = candidate {
            evidence.insert("candidate_label".into(), c.to_string());
        }
        scan.rois.push(new_roi(RoiKind::Broken, e, extent.max(1.0), skeleton.object_id, evidence));
    }
    Ok(scan)
}

/// Axis order placing `axis` last, and its inverse.
fn axis_permutation(axis: usize) -> ([usize; 3], [usize; 3]) {
    match axis {
        0 => ([1, 2, 0], [2, 0, 1]),
        1 => ([0, 2, 1], [0, 2, 1]),
        _ => ([0, 1, 2], [0, 1, 2]),
    }
}

/// New coordinate k takes old axis `perm[k]`.
fn permute_coord(c: [usize; 3], perm: [usize; 3]) -> [usize; 3] {
    [c[perm[0]], c[perm[1]], c[perm[2]]]
}

fn permute(sub: &crate::volume::Subvolume, perm: [usize; 3]) -> crate::volume::Subvolume {
    if perm == [0, 1, 2] {
        return sub.clone();
    }
    let shape = permute_coord(sub.shape, perm);
    let src = Grid::new(sub.shape);
    let dst = Grid::new(shape);
    let mut image = vec![0u8; sub.image.len()];
    for (i, &v) in sub.image.iter().enumerate() {
        image[dst.index(permute_coord(src.coord(i), perm))] = v;
    }
    crate::volume::Subvolume { origin: [0; 3], shape, image, labels: Vec::new() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::ThresholdExtractor;
    use crate::skeleton::{skeletonize, SkeletonParams};
    use crate::volume::synth::{generate_synthetic, InjectedCut, SyntheticSpec};

    fn scan(cut: Option<InjectedCut>) -> (BrokenScan, Vec<u64>) {
        let spec = SyntheticSpec {
            dims: [48, 48, 96],
            tube_count: 1,
            synapse_rate: 0.0,
            injected_cuts: cut.into_iter().collect(),
            ..SyntheticSpec::default()
        };
        let ds = generate_synthetic(&spec, 3).unwrap();
        let soma = ds.somas[0].clone();
        let s = skeletonize(&ds.base, soma.cell_id, &SkeletonParams::default(), Some(soma.pos)).unwrap();
        let r = detect_broken(&ds.base, &s, &ThresholdExtractor::default(), &BrokenParams::default()).unwrap();
        (r, ds.cuts.iter().flat_map(|c| c.fragment_ids.clone()).collect())
    }

    #[test]
    fn intact_tube_has_no_broken_roi() {
        assert!(scan(None).0.rois.is_empty());
    }

    #[test]
    fn label_cut_is_flagged_with_fragment_candidate() {
        let (r, frags) = scan(Some(InjectedCut { tube: 0, slice: 48, gap: 2, dark_image: false }));
        assert_eq!(r.rois.len(), 1, "{:?}", r.rois);
        assert_eq!(r.rois[0].evidence["candidate_label"], frags[0].to_string());
        // The endpoint sits just before the gap.
        assert!((r.rois[0].center.z - 48.0 * 30.0).abs() < 1000.0);
    }

    #[test]
    fn wide_dark_gap_is_not_bridged() {
        let (r, _) = scan(Some(InjectedCut { tube: 0, slice: 48, gap: 6, dark_image: true }));
        assert!(r.rois.is_empty(), "{:?}", r.rois);
    }

    #[test]
    fn narrow_dark_gap_is_bridged() {
        let (r, _) = scan(Some(InjectedCut { tube: 0, slice: 48, gap: 3, dark_image: true }));
        assert_eq!(r.rois.len(), 1);
    }
}
