use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::ops::{apply_ops, runs_from_voxels, LabelOp};
use super::split::split_partition;
use super::{Edit, EditKind};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{
    BranchClass, BranchId, ElementId, ElementKind, ErrorRoi, PhysPoint, RoiId, RoiKind, RoiStatus, SegmentId, Synapse,
    SynapseId, VoxelCoord, BACKGROUND,
};
use crate::synapse::{bulk_set, BulkField};
use crate::volume::{read_region, Bounds, Subvolume, VolumeSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: u64,
    pub pos: PhysPoint,
    pub text: String,
    pub author: String,
    pub cell: Option<SegmentId>,
    pub version: u64,
}

/// The effective state after some prefix of the log. Large parts are shared
/// between versions and copied on write.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub label_ops: Vec<Arc<LabelOp>>,
    /// Content generations; equal generations imply equal content.
    pub label_gen: u64,
    pub synapse_gen: u64,
    pub class_gen: u64,
    /// Bounding boxes; never smaller than the true extent.
    pub objects: Arc<BTreeMap<SegmentId, Bounds>>,
    pub max_id: SegmentId,
    pub synapses: Arc<Vec<Synapse>>,
    pub rois: Arc<Vec<ErrorRoi>>,
    pub annotations: Arc<Vec<Annotation>>,
    /// User-assigned branch classes per cell.
    pub branch_classes: Arc<BTreeMap<SegmentId, BTreeMap<BranchId, BranchClass>>>,
    pub next_element_id: ElementId,
    pub next_roi_id: RoiId,
}

impl Snapshot {
    pub fn synapse(&self, id: SynapseId) -> Option<&Synapse> {
        self.synapses.iter().find(|s| s.id == id)
    }

    pub fn roi(&self, id: RoiId) -> Option<&ErrorRoi> {
        self.rois.iter().find(|r| r.id == id)
    }
}

/// Read access to the segmentation as of one version.
#[derive(Clone)]
pub struct LogView {
    base: Arc<dyn VolumeSource>,
    snap: Arc<Snapshot>,
    version: u64,
}

impl LogView {
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn snapshot(&self) -> &Arc<Snapshot> {
        &self.snap
    }
}

impl VolumeSource for LogView {
    fn meta(&self) -> &crate::model::VolumeMeta {
        self.base.meta()
    }

    fn read_box(&self, origin: [i64; 3], shape: [usize; 3]) -> Result<Subvolume> {
        let mut sub = self.base.read_box(origin, shape)?;
        apply_ops(self.snap.label_ops.iter().map(|o| o.as_ref()), origin, shape, &mut sub.labels);
        Ok(sub)
    }

    fn read_labels_box(&self, origin: [i64; 3], shape: [usize; 3]) -> Result<Vec<SegmentId>> {
        let mut labels = self.base.read_labels_box(origin, shape)?;
        apply_ops(self.snap.label_ops.iter().map(|o| o.as_ref()), origin, shape, &mut labels);
        Ok(labels)
    }

    fn object_index(&self) -> Result<BTreeMap<SegmentId, Bounds>> {
        Ok((*self.snap.objects).clone())
    }

    fn object_bounds(&self, id: SegmentId) -> Result<Option<Bounds>> {
        Ok(self.snap.objects.get(&id).copied())
    }
}

pub struct EditLog {
    base: Arc<dyn VolumeSource>,
    edits: Vec<Edit>,
    snapshots: Vec<Arc<Snapshot>>,
    gen_counter: u64,
    file: Option<(PathBuf, File)>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

impl EditLog {
    /// A log at version 0 over `base` with the initial synapses and ROIs.
    pub fn new(base: Arc<dyn VolumeSource>, synapses: Vec<Synapse>, rois: Vec<ErrorRoi>) -> Result<Self> {
        let objects = base.object_index()?;
        let max_id = objects.keys().next_back().copied().unwrap_or(0);
        let next_element_id = synapses.iter().flat_map(|s| s.elements().map(|e| e.id)).max().unwrap_or(0) + 1;
        let next_roi_id = rois.iter().map(|r| r.id).max().unwrap_or(0) + 1;
        let snap = Snapshot {
            label_ops: Vec::new(),
            label_gen: 0,
            synapse_gen: 0,
            class_gen: 0,
            objects: Arc::new(objects),
            max_id,
            synapses: Arc::new(synapses),
            rois: Arc::new(rois),
            annotations: Arc::new(Vec::new()),
            branch_classes: Arc::new(BTreeMap::new()),
            next_element_id,
            next_roi_id,
        };
        Ok(Self { base, edits: Vec::new(), snapshots: vec![Arc::new(snap)], gen_counter: 0, file: None })
    }

    /// Like [`EditLog::new`], replaying and then appending to the log file at
    /// `path` (created if missing).
    pub fn open(base: Arc<dyn VolumeSource>, synapses: Vec<Synapse>, rois: Vec<ErrorRoi>, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut log = Self::new(base, synapses, rois)?;
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let edit: Edit = serde_json::from_str(&line)
                    .map_err(|e| Error::Format(format!("{}: line {}: {e}", path.display(), i + 1)))?;
                if edit.version != log.head() + 1 {
                    return Err(Error::Format(format!("{}: version {} out of sequence", path.display(), edit.version)));
                }
                log.commit(edit.author, edit.cell, edit.kind, edit.timestamp)
                    .map_err(|e| Error::Format(format!("{}: replay of version {} failed: {e}", path.display(), edit.version)))?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        log.file = Some((path, file));
        Ok(log)
    }

    pub fn base(&self) -> &Arc<dyn VolumeSource> {
        &self.base
    }

    pub fn head(&self) -> u64 {
        self.edits.len() as u64
    }

    pub fn edits(&self) -> &[Edit] {
        &self.edits
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.file.as_ref().map(|f| f.0.as_path())
    }

    pub fn snapshot(&self, version: u64) -> Result<Arc<Snapshot>> {
        self.snapshots
            .get(version as usize)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("version {version} (head is {})", self.head())))
    }

    pub fn view(&self, version: u64) -> Result<LogView> {
        Ok(LogView { base: self.base.clone(), snap: self.snapshot(version)?, version })
    }

    pub fn head_view(&self) -> LogView {
        self.view(self.head()).expect("head exists")
    }

    pub fn materialize_region(&self, version: u64, center: VoxelCoord, shape: [usize; 3]) -> Result<Subvolume> {
        read_region(&self.view(version)?, center, shape)
    }

    /// Validates `kind` against the head state and appends it.
    pub fn apply(&mut self, author: &str, cell: Option<SegmentId>, kind: EditKind) -> Result<u64> {
        self.commit(author.to_string(), cell, kind, now())
    }

    /// Appends a revert marker; the head then equals `version`.
    pub fn rollback(&mut self, author: &str, version: u64) -> Result<u64> {
        self.apply(author, None, EditKind::Revert { version })
    }

    fn commit(&mut self, author: String, cell: Option<SegmentId>, mut kind: EditKind, timestamp: u64) -> Result<u64> {
        let prev = self.snapshots.last().expect("version 0 exists").clone();
        let next = self.next_state(&prev, &mut kind, self.head() + 1, &author, cell)?;
        let edit = Edit { version: self.head() + 1, author, timestamp, cell, kind };
        if let Some((path, file)) = &mut self.file {
            let line = serde_json::to_string(&edit).map_err(|e| Error::Format(e.to_string()))?;
            writeln!(file, "{line}")
                .and_then(|_| file.flush())
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        }
        self.edits.push(edit);
        self.snapshots.push(Arc::new(next));
        Ok(self.head())
    }

    fn bump(&mut self) -> u64 {
        self.gen_counter += 1;
        self.gen_counter
    }

    fn check_point(&self, p: PhysPoint) -> Result<()> {
        if self.base.meta().contains_point(p) {
            Ok(())
        } else {
            Err(invalid(format!("position {p} lies outside the volume")))
        }
    }

    fn next_state(&mut self, prev: &Arc<Snapshot>, kind: &mut EditKind, version: u64, author: &str, cell: Option<SegmentId>) -> Result<Snapshot> {
        let mut s = (**prev).clone();
        let object = |id: SegmentId| -> Result<Bounds> {
            if id == BACKGROUND {
                return Err(invalid("background is not an object"));
            }
            prev.objects.get(&id).copied().ok_or_else(|| invalid(format!("unknown object {id}")))
        };
        match kind {
            EditKind::MergeObjects { target_id, source_id, anchor_a, anchor_b } => {
                let tb = object(*target_id)?;
                let sb = object(*source_id)?;
                if target_id == source_id {
                    return Err(invalid("cannot merge an object with itself"));
                }
                self.check_point(*anchor_a)?;
                self.check_point(*anchor_b)?;
                s.label_ops.push(Arc::new(LabelOp::Relabel { from: *source_id, to: *target_id }));
                let objects = Arc::make_mut(&mut s.objects);
                objects.remove(source_id);
                objects.insert(*target_id, tb.union(&sb));
                relabel_elements(&mut s, *source_id, *target_id);
                s.label_gen = self.bump();
                s.synapse_gen = self.bump();
            }
            EditKind::DeleteObject { object_id } => {
                object(*object_id)?;
                s.label_ops.push(Arc::new(LabelOp::Relabel { from: *object_id, to: BACKGROUND }));
                Arc::make_mut(&mut s.objects).remove(object_id);
                relabel_elements(&mut s, *object_id, BACKGROUND);
                s.label_gen = self.bump();
                s.synapse_gen = self.bump();
            }
            EditKind::PaintVoxels { runs, label } => {
                if runs.is_empty() {
                    return Err(invalid("paint needs at least one run"));
                }
                let dims = self.base.meta().dims;
                for r in runs.iter() {
                    let ok = r.len > 0 && (0..3).all(|a| r.start[a] < dims[a]) && r.start[0] + r.len <= dims[0];
                    if !ok {
                        return Err(invalid(format!("paint run {r:?} leaves the volume")));
                    }
                }
                if *label != BACKGROUND {
                    let objects = Arc::make_mut(&mut s.objects);
                    for r in runs.iter() {
                        let mut b = Bounds::of_voxel(VoxelCoord::new(r.start[0], r.start[1], r.start[2]));
                        b.include([r.start[0] + r.len - 1, r.start[1], r.start[2]]);
                        let e = objects.entry(*label).or_insert(b);
                        *e = e.union(&b);
                    }
                    s.max_id = s.max_id.max(*label);
                }
                s.label_ops.push(Arc::new(LabelOp::Override { runs: runs.iter().map(|r| (*r, *label)).collect() }));
                s.label_gen = self.bump();
            }
            EditKind::SplitObject { object_id, seeds, new_ids } => {
                let bounds = object(*object_id)?;
                if seeds.len() < 2 {
                    return Err(invalid("a split needs at least two seeds"));
                }
                let meta = self.base.meta().clone();
                let view = LogView { base: self.base.clone(), snap: prev.clone(), version: version - 1 };
                let shape = bounds.shape();
                let labels = view.read_labels_box(bounds.origin(), shape)?;
                let mask: Vec<bool> = labels.iter().map(|&l| l == *object_id).collect();
                let mut local = Vec::with_capacity(seeds.len());
                for p in seeds.iter() {
                    let v = meta.phys_to_voxel(*p).map_err(|_| invalid(format!("split seed {p} outside the volume")))?;
                    let v = v.to_array();
                    if (0..3).any(|a| v[a] < bounds.min[a] || v[a] >= bounds.max[a]) {
                        return Err(invalid(format!("split seed {p} lies outside object {object_id}")));
                    }
                    local.push(std::array::from_fn(|a| v[a] - bounds.min[a]));
                }
                let part = split_partition(&mask, shape, meta.voxel_size, &local)?;
                let fresh: Vec<SegmentId> = (1..seeds.len() as u64).map(|k| prev.max_id + k).collect();
                if !new_ids.is_empty() && *new_ids != fresh {
                    return Err(invalid(format!("recorded split ids {new_ids:?} differ from {fresh:?}")));
                }
                *new_ids = fresh.clone();
                let grid = Grid::new(shape);
                let mut voxels = Vec::new();
                let mut parts: HashMap<usize, Bounds> = HashMap::new();
                for (i, a) in part.iter().enumerate() {
                    let Some(k) = *a else { continue };
                    let c = grid.coord(i);
                    let g: [usize; 3] = std::array::from_fn(|ax| c[ax] + bounds.min[ax]);
                    parts.entry(k).and_modify(|b| b.include(g)).or_insert_with(|| Bounds::of_voxel(VoxelCoord::new(g[0], g[1], g[2])));
                    if k > 0 {
                        voxels.push((g, fresh[k - 1]));
                    }
                }
                let objects = Arc::make_mut(&mut s.objects);
                for (k, b) in parts {
                    objects.insert(if k == 0 { *object_id } else { fresh[k - 1] }, b);
                }
                s.max_id = prev.max_id + fresh.len() as u64;
                s.label_ops.push(Arc::new(LabelOp::Override { runs: runs_from_voxels(voxels) }));
                s.label_gen = self.bump();
            }
            EditKind::AddSynapse { record } => {
                if record.posts.is_empty() {
                    return Err(invalid("a synapse needs at least one postsynaptic element"));
                }
                if record.id == 0 {
                    record.id = prev.synapses.iter().map(|x| x.id).max().unwrap_or(0) + 1;
                } else if prev.synapse(record.id).is_some() {
                    return Err(invalid(format!("synapse {} already exists", record.id)));
                }
                record.pre.kind = ElementKind::Pre;
                for p in &mut record.posts {
                    p.kind = ElementKind::Post;
                }
                for e in record.elements_mut() {
                    e.id = s.next_element_id;
                    s.next_element_id += 1;
                }
                for e in record.elements() {
                    self.check_point(e.pos)?;
                }
                Arc::make_mut(&mut s.synapses).push(record.clone());
                s.synapse_gen = self.bump();
            }
            EditKind::RemoveSynapse { synapse_id } => {
                let syn = Arc::make_mut(&mut s.synapses);
                let i = syn.iter().position(|x| x.id == *synapse_id).ok_or_else(|| invalid(format!("unknown synapse {synapse_id}")))?;
                syn.remove(i);
                s.synapse_gen = self.bump();
            }
            EditKind::MoveElement { element_id, pos } => {
                self.check_point(*pos)?;
                let syn = Arc::make_mut(&mut s.synapses);
                let e = syn
                    .iter_mut()
                    .flat_map(|x| x.elements_mut())
                    .find(|e| e.id == *element_id)
                    .ok_or_else(|| invalid(format!("unknown element {element_id}")))?;
                e.pos = *pos;
                e.anchor_node = None;
                s.synapse_gen = self.bump();
            }
            EditKind::ReconnectSynapse { synapse_id, post_element_ids } => {
                reconnect(&mut s, *synapse_id, post_element_ids)?;
                s.synapse_gen = self.bump();
            }
            EditKind::SetStatus { ids, status } => {
                bulk_set(Arc::make_mut(&mut s.synapses).as_mut_slice(), ids, &BulkField::Status(*status))?;
                s.synapse_gen = self.bump();
            }
            EditKind::SetClass { ids, label } => {
                bulk_set(Arc::make_mut(&mut s.synapses).as_mut_slice(), ids, &BulkField::ClassLabel(label.clone()))?;
                s.synapse_gen = self.bump();
            }
            EditKind::ResolveError { roi_id, resolution } => {
                if *resolution == RoiStatus::Open {
                    return Err(invalid("an error can only be resolved or dismissed"));
                }
                let roi = Arc::make_mut(&mut s.rois)
                    .iter_mut()
                    .find(|r| r.id == *roi_id)
                    .ok_or_else(|| invalid(format!("unknown error roi {roi_id}")))?;
                if roi.status != RoiStatus::Open {
                    return Err(invalid(format!("error roi {roi_id} is already {}", roi.status.as_str())));
                }
                roi.status = *resolution;
            }
            EditKind::Annotate { pos, text } => {
                self.check_point(*pos)?;
                let anns = Arc::make_mut(&mut s.annotations);
                let id = anns.len() as u64 + 1;
                anns.push(Annotation { id, pos: *pos, text: text.clone(), author: author.to_string(), cell, version });
            }
            EditKind::FlagError { cell_id, pos, radius, note } => {
                self.check_point(*pos)?;
                if !(*radius > 0.0) {
                    return Err(invalid("flagged region radius must be positive"));
                }
                let mut evidence = BTreeMap::new();
                evidence.insert("note".to_string(), note.clone());
                evidence.insert("author".to_string(), author.to_string());
                let id = s.next_roi_id;
                s.next_roi_id += 1;
                Arc::make_mut(&mut s.rois).push(ErrorRoi {
                    id,
                    kind: RoiKind::UserFlagged,
                    center: *pos,
                    radius: *radius,
                    cell_id: *cell_id,
                    status: RoiStatus::Open,
                    evidence,
                });
            }
            EditKind::SetBranchClass { cell_id, branch_ids, class } => {
                if branch_ids.is_empty() {
                    return Err(invalid("no branches given"));
                }
                object(*cell_id)?;
                let m = Arc::make_mut(&mut s.branch_classes).entry(*cell_id).or_default();
                for b in branch_ids.iter() {
                    m.insert(*b, *class);
                }
                s.class_gen = self.bump();
            }
            EditKind::Revert { version: v } => {
                let target = self.snapshots.get(*v as usize).ok_or_else(|| Error::NotFound(format!("version {v}")))?;
                s = (**target).clone();
            }
        }
        Ok(s)
    }
}

fn relabel_elements(s: &mut Snapshot, from: SegmentId, to: SegmentId) {
    if !s.synapses.iter().flat_map(|x| x.elements()).any(|e| e.segment_id == from) {
        return;
    }
    for e in Arc::make_mut(&mut s.synapses).iter_mut().flat_map(|x| x.elements_mut()) {
        if e.segment_id == from {
            e.segment_id = to;
            if to == BACKGROUND {
                e.anchor_node = None;
            }
        }
    }
}

/// Makes the named post elements the posts of `synapse_id`, moving them from
/// other synapses; posts no longer named are dropped.
fn reconnect(s: &mut Snapshot, synapse_id: SynapseId, post_ids: &[ElementId]) -> Result<()> {
    if post_ids.is_empty() {
        return Err(invalid("a synapse needs at least one postsynaptic element"));
    }
    let wanted: HashSet<ElementId> = post_ids.iter().copied().collect();
    if wanted.len() != post_ids.len() {
        return Err(invalid("duplicate element ids"));
    }
    if s.synapse(synapse_id).is_none() {
        return Err(invalid(format!("unknown synapse {synapse_id}")));
    }
    let mut found = HashSet::new();
    for syn in s.synapses.iter() {
        for p in &syn.posts {
            if wanted.contains(&p.id) {
                found.insert(p.id);
            }
        }
        if syn.id != synapse_id && !syn.posts.is_empty() && syn.posts.iter().all(|p| wanted.contains(&p.id)) {
            return Err(invalid(format!("synapse {} would be left without postsynaptic elements", syn.id)));
        }
    }
    if let Some(missing) = post_ids.iter().find(|id| !found.contains(id)) {
        return Err(invalid(format!("unknown postsynaptic element {missing}")));
    }
    let syns = Arc::make_mut(&mut s.synapses);
    let mut moved = Vec::new();
    for syn in syns.iter_mut() {
        let (take, keep): (Vec<_>, Vec<_>) = syn.posts.drain(..).partition(|p| wanted.contains(&p.id));
        moved.extend(take);
        syn.posts = if syn.id == synapse_id { Vec::new() } else { keep };
    }
    moved.sort_by_key(|p| post_ids.iter().position(|&i| i == p.id));
    syns.iter_mut().find(|x| x.id == synapse_id).expect("checked").posts = moved;
    Ok(())
}
