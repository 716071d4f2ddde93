//! Seeded synthetic datasets: bright tubes over a dark background with
//! ground-truth labels, a base segmentation carrying injected split and
//! merge errors, synapses between neighboring tubes and a soma table.
//!
//! Tubes run along the slice axis (z) from the z = 0 face to the far face.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::tables::SomaRecord;
use super::{VolumeData, VolumeSource};
use crate::error::{Error, Result};
use crate::kv::{parse_triple, KvDoc};
use crate::model::{ElementKind, PhysPoint, SegmentId, Synapse, SynapseStatus, SynapticElement, VolumeMeta, VoxelCoord};

pub const FOREGROUND_MEAN: f64 = 200.0;
pub const BACKGROUND_MEAN: f64 = 30.0;

/// A split error: tube voxels in slices `slice .. slice + gap` lose their
/// label and everything beyond gets a fresh id.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectedCut {
    pub tube: usize,
    pub slice: usize,
    pub gap: usize,
    /// Also darken the image in the gap (an imaging artifact rather than a
    /// pure segmentation error).
    pub dark_image: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub dims: [usize; 3],
    pub voxel_size: [f64; 3],
    pub chunk_shape: Option<[usize; 3]>,
    pub tube_count: usize,
    pub tube_radius_nm: f64,
    pub branch_probability: f64,
    /// Synapses per µm of tube centerline.
    pub synapse_rate: f64,
    pub injected_cuts: Vec<InjectedCut>,
    pub injected_merges: Vec<(usize, usize)>,
    pub noise_sigma: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            dims: [128, 128, 128],
            voxel_size: [10.0, 10.0, 30.0],
            chunk_shape: None,
            tube_count: 4,
            tube_radius_nm: 60.0,
            branch_probability: 0.0,
            synapse_rate: 0.5,
            injected_cuts: Vec::new(),
            injected_merges: Vec::new(),
            noise_sigma: 10.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Param(m));
        VolumeMeta::new(self.dims, self.voxel_size).map_err(|e| Error::Param(e.to_string()))?;
        if self.tube_count == 0 {
            return bad("tube_count must be positive".into());
        }
        if !(self.tube_radius_nm > 0.0) {
            return bad("tube_radius_nm must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.branch_probability) {
            return bad("branch_probability must lie in [0, 1]".into());
        }
        if !(self.synapse_rate >= 0.0) || !(self.noise_sigma >= 0.0) {
            return bad("synapse_rate and noise_sigma must be non-negative".into());
        }
        for c in &self.injected_cuts {
            if c.tube >= self.tube_count {
                return bad(format!("cut references tube {} of {}", c.tube, self.tube_count));
            }
            if c.gap == 0 {
                return bad("cut gap length must be at least 1".into());
            }
            if c.slice == 0 || c.slice + c.gap >= self.dims[2] {
                return bad(format!("cut at slice {} gap {} leaves the tube extent", c.slice, c.gap));
            }
        }
        for &(a, b) in &self.injected_merges {
            if a == b || a >= self.tube_count || b >= self.tube_count {
                return bad(format!("invalid merge pair ({a}, {b})"));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let d = SyntheticSpec::default();
        let mut spec = SyntheticSpec {
            dims: doc.triple("dims")?.unwrap_or(d.dims),
            voxel_size: doc.triple("voxel_size")?.unwrap_or(d.voxel_size),
            chunk_shape: doc.triple("chunk_shape")?,
            tube_count: doc.parse_value("tube_count")?.unwrap_or(d.tube_count),
            tube_radius_nm: doc.parse_value("tube_radius_nm")?.unwrap_or(d.tube_radius_nm),
            branch_probability: doc.parse_value("branch_probability")?.unwrap_or(d.branch_probability),
            synapse_rate: doc.parse_value("synapse_rate")?.unwrap_or(d.synapse_rate),
            injected_cuts: Vec::new(),
            injected_merges: Vec::new(),
            noise_sigma: doc.parse_value("noise_sigma")?.unwrap_or(d.noise_sigma),
        };
        for v in doc.get_all("cut") {
            let parts: Vec<&str> = v.split_whitespace().collect();
            let dark = match parts.get(3) {
                None => false,
                Some(&"dark") => true,
                Some(other) => return Err(Error::Format(format!("cut: unknown flag {other:?}"))),
            };
            if parts.len() < 3 || parts.len() > 4 {
                return Err(Error::Format(format!("cut needs `tube slice gap [dark]`, got {v:?}")));
            }
            let [tube, slice, gap] = parse_triple::<usize>("cut", &parts[..3].join(" "))?;
            spec.injected_cuts.push(InjectedCut { tube, slice, gap, dark_image: dark });
        }
        for v in doc.get_all("merge") {
            let parts: Vec<usize> = v
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Format(format!("merge: bad index {s:?}"))))
                .collect::<Result<_>>()?;
            match parts.as_slice() {
                [a, b] => spec.injected_merges.push((*a, *b)),
                _ => return Err(Error::Format(format!("merge needs two tube indices, got {v:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn render(&self) -> String {
        let mut doc = KvDoc::new();
        let t = |a: [String; 3]| a.join(" ");
        doc.push("dims", t(self.dims.map(|v| v.to_string())));
        doc.push("voxel_size", t(self.voxel_size.map(|v| v.to_string())));
        if let Some(c) = self.chunk_shape {
            doc.push("chunk_shape", t(c.map(|v| v.to_string())));
        }
        doc.push("tube_count", self.tube_count);
        doc.push("tube_radius_nm", self.tube_radius_nm);
        doc.push("branch_probability", self.branch_probability);
        doc.push("synapse_rate", self.synapse_rate);
        doc.push("noise_sigma", self.noise_sigma);
        for c in &self.injected_cuts {
            let dark = if c.dark_image { " dark" } else { "" };
            doc.push("cut", format!("{} {} {}{dark}", c.tube, c.slice, c.gap));
        }
        for (a, b) in &self.injected_merges {
            doc.push("merge", format!("{a} {b}"));
        }
        doc.render()
    }

    fn meta(&self) -> Result<VolumeMeta> {
        let meta = VolumeMeta::new(self.dims, self.voxel_size)?;
        match self.chunk_shape {
            Some(c) => meta.with_chunk_shape(c),
            None => Ok(meta),
        }
    }
}

/// A straight piece of tube centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: PhysPoint,
    pub b: PhysPoint,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn at(&self, t: f64) -> PhysPoint {
        self.a + (self.b - self.a) * t
    }

    /// Closest point parameter and distance from `p`.
    pub fn closest(&self, p: PhysPoint) -> (f64, f64) {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        let t = if len2 > 0.0 { ((p - self.a).dot(d) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (t, p.distance(self.at(t)))
    }
}

/// Minimum distance between two segments.
pub fn segment_distance(s1: &Segment, s2: &Segment) -> f64 {
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let r = s1.a - s2.a;
    let a = d1.dot(d1);
    let e = d2.dot(d2);
    let f = d2.dot(r);
    let (s, t);
    if a <= 1e-12 && e <= 1e-12 {
        return s1.a.distance(s2.a);
    }
    if a <= 1e-12 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e <= 1e-12 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 1e-12 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    s1.at(s).distance(s2.at(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeGeometry {
    /// Ground-truth label.
    pub id: SegmentId,
    /// Main centerline first, then side branches.
    pub segments: Vec<Segment>,
    pub root_voxel: VoxelCoord,
}

/// Where a cut landed and which id the distal fragment received.
#[derive(Debug, Clone, PartialEq)]
pub struct CutRecord {
    pub tube_id: SegmentId,
    pub slice: usize,
    pub gap: usize,
    pub fragment_ids: Vec<SegmentId>,
    /// z of the first gap slice's lower face, nm.
    pub plane_z_nm: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub base: VolumeData,
    pub ground_truth: VolumeData,
    pub synapses: Vec<Synapse>,
    pub somas: Vec<SomaRecord>,
    pub tubes: Vec<TubeGeometry>,
    pub cuts: Vec<CutRecord>,
}

const OVERLAP_ATTEMPTS: usize = 500;

/// Builds a dataset; identical `(spec, seed)` give identical output.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticDataset> {
    spec.validate()?;
    let meta = spec.meta()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tubes = place_tubes(spec, &meta, &mut rng)?;

    let n = meta.voxel_count();
    let mut gt_labels = vec![0u64; n];
    for tube in &tubes {
        render_tube(&meta, tube, spec.tube_radius_nm, &mut gt_labels);
    }

    // Image: foreground follows the ground truth, dark gaps excepted.
    let mut bright: Vec<bool> = gt_labels.iter().map(|&l| l != 0).collect();
    for cut in spec.injected_cuts.iter().filter(|c| c.dark_image) {
        let id = tubes[cut.tube].id;
        for_each_in_slices(&meta, cut.slice, cut.gap, |i| {
            if gt_labels[i] == id {
                bright[i] = false;
            }
        });
    }
    let normal = Normal::new(0.0, spec.noise_sigma.max(0.0)).map_err(|e| Error::Param(e.to_string()))?;
    let image: Vec<u8> = bright
        .iter()
        .map(|&b| {
            let mean = if b { FOREGROUND_MEAN } else { BACKGROUND_MEAN };
            let noise = if spec.noise_sigma > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            (mean + noise).round().clamp(0.0, 255.0) as u8
        })
        .collect();

    let mut base_labels = gt_labels.clone();
    let mut next_id = tubes.iter().map(|t| t.id).max().unwrap_or(0) + 1;
    let mut cuts = Vec::new();
    for cut in &spec.injected_cuts {
        let id = tubes[cut.tube].id;
        for_each_in_slices(&meta, cut.slice, cut.gap, |i| {
            if base_labels[i] == id {
                base_labels[i] = 0;
            }
        });
        cuts.push(CutRecord {
            tube_id: id,
            slice: cut.slice,
            gap: cut.gap,
            fragment_ids: Vec::new(),
            plane_z_nm: cut.slice as f64 * meta.voxel_size[2],
        });
    }
    let cut_tubes: BTreeSet<usize> = spec.injected_cuts.iter().map(|c| c.tube).collect();
    for &t in &cut_tubes {
        let fresh = relabel_detached(&meta, &mut base_labels, tubes[t].id, tubes[t].root_voxel, &mut next_id);
        // Attribute fragments to the first cut above which they start.
        for frag in fresh {
            let rec = cuts
                .iter_mut()
                .filter(|c| c.tube_id == tubes[t].id && c.slice + c.gap <= frag.1)
                .max_by_key(|c| c.slice);
            if let Some(rec) = rec {
                rec.fragment_ids.push(frag.0);
            }
        }
    }
    for &(a, b) in &spec.injected_merges {
        let (ia, ib) = (tubes[a].id, tubes[b].id);
        for l in base_labels.iter_mut() {
            if *l == ib {
                *l = ia;
            }
        }
    }

    let base = VolumeData::new(meta.clone(), image.clone(), base_labels)?;
    let ground_truth = VolumeData::new(meta.clone(), image, gt_labels)?;
    let synapses = place_synapses(spec, &meta, &tubes, &base, &mut rng)?;
    let present = base.object_index()?;
    let somas = tubes
        .iter()
        .filter(|t| present.contains_key(&t.id))
        .map(|t| SomaRecord { cell_id: t.id, pos: meta.voxel_center(t.root_voxel) })
        .collect();
    Ok(SyntheticDataset { base, ground_truth, synapses, somas, tubes, cuts })
}

fn for_each_in_slices(meta: &VolumeMeta, slice: usize, gap: usize, mut f: impl FnMut(usize)) {
    let plane = meta.dims[0] * meta.dims[1];
    for z in slice..(slice + gap).min(meta.dims[2]) {
        for i in z * plane..(z + 1) * plane {
            f(i);
        }
    }
}

fn place_tubes(spec: &SyntheticSpec, meta: &VolumeMeta, rng: &mut ChaCha8Rng) -> Result<Vec<TubeGeometry>> {
    let ext = meta.extent_nm();
    let r = spec.tube_radius_nm;
    let margin = r + 2.0 * meta.voxel_size[0].max(meta.voxel_size[1]);
    let clearance = 2.0 * r + 2.0 * meta.voxel_size[0].max(meta.voxel_size[1]);
    if ext[0] <= 2.0 * margin || ext[1] <= 2.0 * margin {
        return Err(Error::Generation("volume too narrow for the tube radius".into()));
    }
    let drift = 0.15 * ext[2];
    let mut tubes: Vec<TubeGeometry> = Vec::new();
    for k in 0..spec.tube_count {
        let mut accepted = None;
        for _ in 0..OVERLAP_ATTEMPTS {
            let x0 = rng.random_range(margin..ext[0] - margin);
            let y0 = rng.random_range(margin..ext[1] - margin);
            let x1 = (x0 + rng.random_range(-drift..=drift)).clamp(margin, ext[0] - margin);
            let y1 = (y0 + rng.random_range(-drift..=drift)).clamp(margin, ext[1] - margin);
            let main = Segment { a: PhysPoint::new(x0, y0, 0.0), b: PhysPoint::new(x1, y1, ext[2]) };
            let mut segments = vec![main];
            if rng.random::<f64>() < spec.branch_probability {
                let t = rng.random_range(0.25..0.6);
                let start = main.at(t);
                let ang = rng.random_range(0.0..std::f64::consts::TAU);
                let axis = (main.b - main.a).normalized().expect("tube has length");
                let lateral = PhysPoint::new(ang.cos(), ang.sin(), 0.0);
                let dir = (axis + lateral).normalized().expect("non-degenerate");
                let len = rng.random_range(0.2..0.4) * ext[2];
                let mut end = start + dir * len;
                // Keep the branch inside the lateral margins.
                let lim = |v: f64, hi: f64| v.clamp(margin, hi - margin);
                end = PhysPoint::new(lim(end.x, ext[0]), lim(end.y, ext[1]), end.z.min(ext[2] - margin));
                segments.push(Segment { a: start, b: end });
            }
            let clear = tubes.iter().all(|other| {
                segments
                    .iter()
                    .all(|s| other.segments.iter().all(|o| segment_distance(s, o) >= clearance))
            });
            if clear {
                let root = meta.phys_to_voxel(PhysPoint::new(x0, y0, 0.0))?;
                accepted = Some(TubeGeometry { id: k as SegmentId + 1, segments, root_voxel: root });
                break;
            }
        }
        match accepted {
            Some(t) => tubes.push(t),
            None => {
                return Err(Error::Generation(format!(
                    "tube {k} overlaps existing tubes beyond tolerance after {OVERLAP_ATTEMPTS} attempts"
                )))
            }
        }
    }
    Ok(tubes)
}

fn render_tube(meta: &VolumeMeta, tube: &TubeGeometry, radius: f64, labels: &mut [SegmentId]) {
    for seg in &tube.segments {
        let lo = [seg.a.x.min(seg.b.x), seg.a.y.min(seg.b.y), seg.a.z.min(seg.b.z)];
        let hi = [seg.a.x.max(seg.b.x), seg.a.y.max(seg.b.y), seg.a.z.max(seg.b.z)];
        let range = |a: usize| {
            let v = meta.voxel_size[a];
            let s = ((lo[a] - radius) / v).floor().max(0.0) as usize;
            let e = (((hi[a] + radius) / v).ceil() as usize).min(meta.dims[a]);
            s..e
        };
        for z in range(2) {
            for y in range(1) {
                for x in range(0) {
                    let v = VoxelCoord::new(x, y, z);
                    if seg.closest(meta.voxel_center(v)).1 <= radius {
                        labels[meta.linear_index(v)] = tube.id;
                    }
                }
            }
        }
    }
}

/// Gives every 26-connected component of `id` not containing `root` a fresh
/// id. Returns `(fresh id, lowest slice)` per relabeled component.
fn relabel_detached(
    meta: &VolumeMeta,
    labels: &mut [SegmentId],
    id: SegmentId,
    root: VoxelCoord,
    next_id: &mut SegmentId,
) -> Vec<(SegmentId, usize)> {
    let n = labels.len();
    let mut comp = vec![u32::MAX; n];
    let mut components: Vec<(usize, usize)> = Vec::new(); // (first index, min z)
    let d = meta.dims;
    for start in 0..n {
        if labels[start] != id || comp[start] != u32::MAX {
            continue;
        }
        let c = components.len() as u32;
        let mut min_z = usize::MAX;
        let mut queue = VecDeque::from([start]);
        comp[start] = c;
        while let Some(i) = queue.pop_front() {
            let v = meta.coord_of(i);
            min_z = min_z.min(v.z);
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let q = [v.x as i64 + dx, v.y as i64 + dy, v.z as i64 + dz];
                        if !meta.contains_voxel(q) {
                            continue;
                        }
                        let j = q[0] as usize + d[0] * (q[1] as usize + d[1] * q[2] as usize);
                        if labels[j] == id && comp[j] == u32::MAX {
                            comp[j] = c;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        components.push((start, min_z));
    }
    let root_comp = comp[meta.linear_index(root)];
    let mut fresh = Vec::new();
    let mut assigned = vec![0u64; components.len()];
    for (c, &(_, min_z)) in components.iter().enumerate() {
        if c as u32 != root_comp {
            assigned[c] = *next_id;
            fresh.push((*next_id, min_z));
            *next_id += 1;
        }
    }
    for i in 0..n {
        if comp[i] != u32::MAX && comp[i] != root_comp {
            labels[i] = assigned[comp[i] as usize];
        }
    }
    fresh
}

fn place_synapses(
    spec: &SyntheticSpec,
    meta: &VolumeMeta,
    tubes: &[TubeGeometry],
    base: &VolumeData,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Synapse>> {
    let r = spec.tube_radius_nm;
    let inset = r - meta.voxel_size[0].max(meta.voxel_size[1]);
    let contact = 2.0 * r + 1000.0;
    let seg_of = |p: PhysPoint| -> SegmentId {
        meta.phys_to_voxel(p).map(|v| base.label(v)).unwrap_or(0)
    };
    let mut synapses = Vec::new();
    let mut next_syn = 1u64;
    let mut next_el = 1u64;
    for (ti, tube) in tubes.iter().enumerate() {
        for seg in &tube.segments {
            let expected = seg.length() / 1000.0 * spec.synapse_rate;
            let mut count = expected.floor() as usize;
            if rng.random::<f64>() < expected.fract() {
                count += 1;
            }
            let mut ts: Vec<f64> = (0..count).map(|_| rng.random_range(0.02..0.98)).collect();
            ts.sort_by(f64::total_cmp);
            for t in ts {
                let axis_pt = seg.at(t);
                let ang = rng.random_range(0.0..std::f64::consts::TAU);
                let partner = tubes
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != ti)
                    .flat_map(|(_, o)| o.segments.iter().map(move |s| (o, s)))
                    .map(|(o, s)| {
                        let (u, d) = s.closest(axis_pt);
                        (o, s.at(u), d)
                    })
                    .filter(|&(_, _, d)| d <= contact)
                    .min_by(|a, b| a.2.total_cmp(&b.2));
                let (own, other) = match partner {
                    Some((_, q, _)) => {
                        let dir = (q - axis_pt).normalized().unwrap_or(PhysPoint::new(1.0, 0.0, 0.0));
                        (axis_pt + dir * inset, q - dir * inset)
                    }
                    None => {
                        let mut dir = PhysPoint::new(ang.cos(), ang.sin(), 0.0);
                        let mut far = axis_pt + dir * (r + 800.0);
                        if !meta.contains_point(far) {
                            dir = dir * -1.0;
                            far = axis_pt + dir * (r + 800.0);
                        }
                        if !meta.contains_point(far) {
                            continue;
                        }
                        (axis_pt + dir * inset, far)
                    }
                };
                if !meta.contains_point(own) || !meta.contains_point(other) {
                    continue;
                }
                // Even tubes carry the presynaptic side.
                let (pre_pos, post_pos) = if ti % 2 == 0 { (own, other) } else { (other, own) };
                let pre = SynapticElement {
                    id: next_el,
                    kind: ElementKind::Pre,
                    pos: pre_pos,
                    segment_id: seg_of(pre_pos),
                    anchor_node: None,
                };
                let post = SynapticElement {
                    id: next_el + 1,
                    kind: ElementKind::Post,
                    pos: post_pos,
                    segment_id: seg_of(post_pos),
                    anchor_node: None,
                };
                next_el += 2;
                synapses.push(Synapse {
                    id: next_syn,
                    pre,
                    posts: vec![post],
                    status: SynapseStatus::Unvalidated,
                    class_label: None,
                });
                next_syn += 1;
            }
        }
    }
    Ok(synapses)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec { dims: [48, 48, 40], tube_count: 1, synapse_rate: 0.0, ..SyntheticSpec::default() }
    }

    #[test]
    fn single_tube_without_cuts_matches_ground_truth() {
        let ds = generate_synthetic(&small(), 3).unwrap();
        assert_eq!(ds.base.labels, ds.ground_truth.labels);
        assert!(ds.base.labels.contains(&1));
        assert_eq!(ds.somas.len(), 1);
        assert_eq!(ds.base.label(ds.tubes[0].root_voxel), 1);
    }

    #[test]
    fn deterministic_for_seed() {
        let spec = SyntheticSpec { tube_count: 3, synapse_rate: 1.0, dims: [64, 64, 48], ..SyntheticSpec::default() };
        let a = generate_synthetic(&spec, 11).unwrap();
        let b = generate_synthetic(&spec, 11).unwrap();
        assert_eq!(a.base, b.base);
        assert_eq!(a.ground_truth, b.ground_truth);
        assert_eq!(a.synapses, b.synapses);
        let c = generate_synthetic(&spec, 12).unwrap();
        assert_ne!(a.base.image, c.base.image);
    }

    #[test]
    fn one_cut_adds_exactly_one_id() {
        let mut spec = small();
        spec.injected_cuts.push(InjectedCut { tube: 0, slice: 20, gap: 2, dark_image: false });
        let ds = generate_synthetic(&spec, 5).unwrap();
        let gt = ds.ground_truth.object_index().unwrap();
        let base = ds.base.object_index().unwrap();
        assert_eq!(base.len(), gt.len() + 1);
        assert_eq!(ds.cuts[0].fragment_ids, vec![2]);
        // Image stays continuous across a label-only cut.
        assert_eq!(ds.base.image, ds.ground_truth.image);
    }

    #[test]
    fn intensities_separate_at_threshold() {
        let ds = generate_synthetic(&small(), 1).unwrap();
        for (i, &l) in ds.ground_truth.labels.iter().enumerate() {
            let v = ds.ground_truth.image[i];
            if l != 0 { assert!(v > 115) } else { assert!(v < 115) }
        }
    }

    #[test]
    fn crowded_volume_fails_generation() {
        let spec = SyntheticSpec { dims: [24, 24, 16], tube_count: 30, ..SyntheticSpec::default() };
        assert!(matches!(generate_synthetic(&spec, 0), Err(Error::Generation(_))));
    }

    #[test]
    fn spec_text_round_trip() {
        let mut spec = SyntheticSpec::default();
        spec.injected_cuts.push(InjectedCut { tube: 1, slice: 30, gap: 6, dark_image: true });
        spec.injected_merges.push((0, 2));
        assert_eq!(SyntheticSpec::parse(&spec.render()).unwrap(), spec);
        assert!(SyntheticSpec::parse("tube_count = 1\ncut = 0 5 0\n").is_err());
    }

    #[test]
    fn segment_distance_cases() {
        let s = |a: [f64; 3], b: [f64; 3]| Segment { a: PhysPoint::from_array(a), b: PhysPoint::from_array(b) };
        let d = segment_distance(&s([0.0, 0.0, 0.0], [10.0, 0.0, 0.0]), &s([5.0, 3.0, -1.0], [5.0, 3.0, 1.0]));
        assert!((d - 3.0).abs() < 1e-12);
        let d = segment_distance(&s([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]), &s([3.0, 4.0, 0.0], [3.0, 4.0, 0.0]));
        assert!((d - (4.0f64 * 4.0 + 2.0 * 2.0).sqrt()).abs() < 1e-12);
    }
}
