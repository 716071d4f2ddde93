//! The proofreading service: cell summaries, local circuit documents, the
//! browser tree, inspection regions and slices, and version-checked edits.
//! Transport-free; the HTTP layer lives in the command-line crate.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::detect::{assist_merge_search, InspectionAnchor};
use crate::edit::{Edit, EditKind, EditLog, LogView};
use crate::error::{Error, Result};
use crate::model::{
    shades, Branch, BranchId, CellSummary, ErrorRoi, PhysPoint, RoiStatus, SegmentId, ShadeMode, Skeleton,
    SkeletonNode, Synapse, SynapseCluster, BACKGROUND,
};
use crate::pipeline::{analyze, detect_errors, run_pipeline, skeletonize_cells, Artifacts, PipelineParams};
use crate::volume::tables::SomaRecord;
use crate::volume::{read_region, Subvolume, VolumeSource, INSPECTOR_SHAPE};

pub const SLICE_SCALES: [usize; 4] = [1, 2, 4, 8];
const CACHE_SLOTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub branch_id: BranchId,
    pub class: crate::model::BranchClass,
    pub class_source: crate::model::ClassSource,
    pub points: Vec<PhysPoint>,
    pub radii: Vec<f64>,
}

/// A partner cell reduced to a labeled anchor point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartnerStub {
    pub partner_id: SegmentId,
    /// Mean position of the partner-side elements.
    pub contact: PhysPoint,
    pub synapse_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCircuit {
    pub cell_id: SegmentId,
    pub version: u64,
    pub root_id: u32,
    pub nodes: Vec<SkeletonNode>,
    pub branches: Vec<Polyline>,
    pub clusters: Vec<SynapseCluster>,
    pub synapses: Vec<Synapse>,
    pub errors: Vec<ErrorRoi>,
    pub partners: Vec<PartnerStub>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// One of cell, errors, branches, branch, cluster, synapse, error.
    pub kind: String,
    pub id: u64,
    pub label: String,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    fn new(kind: &str, id: u64, label: impl Into<String>) -> Self {
        Self { kind: kind.into(), id, label: label.into(), children: Vec::new() }
    }

    /// Nodes of `kind` in this subtree, depth first.
    pub fn collect<'a>(&'a self, kind: &str, out: &mut Vec<&'a TreeNode>) {
        if self.kind == kind {
            out.push(self);
        }
        for c in &self.children {
            c.collect(kind, out);
        }
    }
}

/// A stride-sampled cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub z: usize,
    pub scale: usize,
    pub width: usize,
    pub height: usize,
    pub image: Vec<u8>,
    pub labels: Vec<SegmentId>,
}

impl Slice {
    /// As a one-slice region at the slice's index; the image and label
    /// grids are the downsampled ones.
    pub fn to_subvolume(&self) -> Subvolume {
        Subvolume {
            origin: [0, 0, self.z as i64],
            shape: [self.width, self.height, 1],
            image: self.image.clone(),
            labels: self.labels.clone(),
        }
    }
}

type CacheKey = (u64, u64, u64);

struct Lru<K, V> {
    slots: Vec<(K, V)>,
}

impl<K: PartialEq, V: Clone> Lru<K, V> {
    fn get(&mut self, k: &K) -> Option<V> {
        let i = self.slots.iter().position(|(key, _)| key == k)?;
        let entry = self.slots.remove(i);
        let v = entry.1.clone();
        self.slots.push(entry);
        Some(v)
    }

    fn put(&mut self, k: K, v: V) {
        self.slots.retain(|(key, _)| key != &k);
        if self.slots.len() >= CACHE_SLOTS {
            self.slots.remove(0);
        }
        self.slots.push((k, v));
    }
}

pub struct CircuitService {
    log: RwLock<EditLog>,
    somas: Vec<SomaRecord>,
    params: PipelineParams,
    skeletons: Mutex<Lru<u64, Arc<BTreeMap<SegmentId, Skeleton>>>>,
    artifacts: Mutex<Lru<CacheKey, Arc<Artifacts>>>,
}

impl CircuitService {
    pub fn new(log: EditLog, somas: Vec<SomaRecord>, params: PipelineParams) -> Self {
        Self {
            log: RwLock::new(log),
            somas,
            params,
            skeletons: Mutex::new(Lru { slots: Vec::new() }),
            artifacts: Mutex::new(Lru { slots: Vec::new() }),
        }
    }

    /// Runs the pipeline and every detector on `base` and starts an
    /// in-memory log seeded with the detected ROIs.
    pub fn detect_and_open(base: Arc<dyn VolumeSource>, somas: Vec<SomaRecord>, synapses: Vec<Synapse>, params: PipelineParams) -> Result<Self> {
        let artifacts = run_pipeline(base.as_ref(), &somas, &synapses, &params)?;
        let rois = detect_errors(base.as_ref(), &artifacts, &params)?;
        let log = EditLog::new(base, artifacts.synapses, rois)?;
        Ok(Self::new(log, somas, params))
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    pub fn head(&self) -> u64 {
        self.log.read().expect("log lock").head()
    }

    pub fn edits(&self) -> Vec<Edit> {
        self.log.read().expect("log lock").edits().to_vec()
    }

    fn view(&self, version: Option<u64>) -> Result<LogView> {
        let log = self.log.read().expect("log lock");
        log.view(version.unwrap_or(log.head()))
    }

    /// Skeletons, clusters and classes for the state at `version`, shared
    /// between versions with equal content.
    pub fn artifacts(&self, view: &LogView) -> Result<Arc<Artifacts>> {
        let snap = view.snapshot();
        let key = (snap.label_gen, snap.synapse_gen, snap.class_gen);
        if let Some(a) = self.artifacts.lock().expect("cache lock").get(&key) {
            return Ok(a);
        }
        let cached = self.skeletons.lock().expect("cache lock").get(&snap.label_gen);
        let skeletons = match cached {
            Some(s) => s,
            None => {
                let s = Arc::new(skeletonize_cells(view, &self.somas, &self.params.skeleton)?);
                self.skeletons.lock().expect("cache lock").put(snap.label_gen, s.clone());
                s
            }
        };
        let a = Arc::new(analyze(view, (*skeletons).clone(), &snap.synapses, &self.params, &snap.branch_classes)?);
        self.artifacts.lock().expect("cache lock").put(key, a.clone());
        Ok(a)
    }

    fn cell_known(&self, cell: SegmentId) -> Result<()> {
        if self.somas.iter().any(|s| s.cell_id == cell) {
            Ok(())
        } else {
            Err(Error::NotFound(format!("cell {cell}")))
        }
    }

    pub fn list_cells(&self, mode: ShadeMode, version: Option<u64>) -> Result<Vec<CellSummary>> {
        let view = self.view(version)?;
        let art = self.artifacts(&view)?;
        let rois = &view.snapshot().rois;
        let mut out: Vec<CellSummary> = self
            .somas
            .iter()
            .filter(|s| view.snapshot().objects.contains_key(&s.cell_id))
            .map(|s| {
                let soma_pos = art
                    .cells
                    .get(&s.cell_id)
                    .and_then(|c| c.skeleton.widest_node().map(|n| n.pos))
                    .unwrap_or(s.pos);
                CellSummary {
                    cell_id: s.cell_id,
                    soma_pos,
                    error_count: rois.iter().filter(|r| r.cell_id == s.cell_id && r.status == RoiStatus::Open).count(),
                    synapse_count: art.cell_synapses(s.cell_id).count(),
                    shade: 0.0,
                }
            })
            .collect();
        let counts: Vec<usize> = out
            .iter()
            .map(|c| match mode {
                ShadeMode::Errors => c.error_count,
                ShadeMode::Synapses => c.synapse_count,
            })
            .collect();
        for (c, s) in out.iter_mut().zip(shades(&counts)) {
            c.shade = s;
        }
        Ok(out)
    }

    pub fn local_circuit(&self, cell: SegmentId, version: Option<u64>) -> Result<LocalCircuit> {
        self.cell_known(cell)?;
        let view = self.view(version)?;
        let art = self.artifacts(&view)?;
        let c = art.cells.get(&cell).ok_or_else(|| Error::NotFound(format!("cell {cell} has no skeleton at version {}", view.version())))?;
        let branches = c.branches.iter().map(|b| polyline(&c.skeleton, b)).collect();
        let synapses: Vec<Synapse> = art.cell_synapses(cell).cloned().collect();
        let mut partners: BTreeMap<SegmentId, (Vec<PhysPoint>, BTreeSet<u64>)> = BTreeMap::new();
        for s in &synapses {
            let cell_is_pre = s.pre.segment_id == cell;
            let others: Vec<_> = if cell_is_pre { s.posts.iter().collect() } else { vec![&s.pre] };
            for e in others {
                if e.segment_id != cell && e.segment_id != BACKGROUND {
                    let entry = partners.entry(e.segment_id).or_default();
                    entry.0.push(e.pos);
                    entry.1.insert(s.id);
                }
            }
        }
        let partners = partners
            .into_iter()
            .map(|(partner_id, (pts, ids))| PartnerStub {
                partner_id,
                contact: PhysPoint::mean(pts).unwrap_or(PhysPoint::ORIGIN),
                synapse_count: ids.len(),
            })
            .collect();
        Ok(LocalCircuit {
            cell_id: cell,
            version: view.version(),
            root_id: c.skeleton.root_id,
            nodes: c.skeleton.nodes.clone(),
            branches,
            clusters: c.clusters.clone(),
            synapses,
            errors: self.errors_at(&view, Some(cell), Some(RoiStatus::Open)),
            partners,
        })
    }

    pub fn browser_tree(&self, cell: SegmentId, version: Option<u64>) -> Result<TreeNode> {
        self.cell_known(cell)?;
        let view = self.view(version)?;
        let art = self.artifacts(&view)?;
        let mut root = TreeNode::new("cell", cell, format!("cell {cell}"));
        let mut errors = TreeNode::new("errors", 0, "errors");
        let mut open = self.errors_at(&view, Some(cell), Some(RoiStatus::Open));
        open.sort_by_key(|r| (r.kind, r.id));
        errors.children = open.iter().map(|r| TreeNode::new("error", r.id, r.kind.as_str())).collect();
        let mut branches = TreeNode::new("branches", 0, "branches");
        if let Some(c) = art.cells.get(&cell) {
            let mut clusters = c.clusters.clone();
            clusters.sort_by_key(|k| k.order_index);
            for b in &c.branches {
                let mut bn = TreeNode::new("branch", b.id as u64, b.class.as_str());
                for k in clusters.iter().filter(|k| k.branch_id == b.id) {
                    let mut kn = TreeNode::new("cluster", k.id as u64, format!("#{}", k.order_index));
                    kn.children = k.member_ids.iter().map(|&s| TreeNode::new("synapse", s, format!("synapse {s}"))).collect();
                    bn.children.push(kn);
                }
                branches.children.push(bn);
            }
        }
        root.children = vec![errors, branches];
        Ok(root)
    }

    fn errors_at(&self, view: &LogView, cell: Option<SegmentId>, status: Option<RoiStatus>) -> Vec<ErrorRoi> {
        view.snapshot()
            .rois
            .iter()
            .filter(|r| cell.is_none_or(|c| r.cell_id == c) && status.is_none_or(|s| r.status == s))
            .cloned()
            .collect()
    }

    pub fn errors(&self, cell: Option<SegmentId>, status: Option<RoiStatus>, version: Option<u64>) -> Result<Vec<ErrorRoi>> {
        Ok(self.errors_at(&self.view(version)?, cell, status))
    }

    /// Labels reflect every edit up to `version`; voxels outside the
    /// volume read as 0.
    pub fn inspection_region(&self, center: PhysPoint, version: Option<u64>, shape: Option<[usize; 3]>) -> Result<Subvolume> {
        let view = self.view(version)?;
        let v = view
            .meta()
            .phys_to_voxel(center)
            .map_err(|_| Error::Bounds(format!("region center {center} outside the volume")))?;
        read_region(&view, v, shape.unwrap_or(INSPECTOR_SHAPE))
    }

    pub fn slice(&self, z: usize, scale: usize, version: Option<u64>) -> Result<Slice> {
        if !SLICE_SCALES.contains(&scale) {
            return Err(Error::Param(format!("scale {scale} not in {SLICE_SCALES:?}")));
        }
        let view = self.view(version)?;
        let dims = view.meta().dims;
        if z >= dims[2] {
            return Err(Error::Bounds(format!("slice {z} outside depth {}", dims[2])));
        }
        let full = view.read_box([0, 0, z as i64], [dims[0], dims[1], 1])?;
        let (width, height) = (dims[0].div_ceil(scale), dims[1].div_ceil(scale));
        let mut image = Vec::with_capacity(width * height);
        let mut labels = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                let k = i * scale + dims[0] * j * scale;
                image.push(full.image[k]);
                labels.push(full.labels[k]);
            }
        }
        Ok(Slice { z, scale, width, height, image, labels })
    }

    pub fn branch_anchor(&self, cell: SegmentId, branch: BranchId, t: f64, version: Option<u64>) -> Result<InspectionAnchor> {
        self.cell_known(cell)?;
        let view = self.view(version)?;
        let art = self.artifacts(&view)?;
        let c = art.cells.get(&cell).ok_or_else(|| Error::NotFound(format!("cell {cell} has no skeleton")))?;
        assist_merge_search(&c.skeleton, &c.branches, branch, t)
    }

    /// The version a client must present to edit `cell`: the newest edit
    /// attributed to the cell or the newest rollback, whichever is later.
    pub fn cell_head(&self, cell: SegmentId) -> u64 {
        cell_head(self.log.read().expect("log lock").edits(), cell)
    }

    /// Applies `kind` iff `base_version` is the cell's head.
    pub fn post_edit(&self, cell: SegmentId, base_version: u64, author: &str, kind: EditKind) -> Result<u64> {
        self.cell_known(cell)?;
        if author.trim().is_empty() {
            return Err(Error::Validation("an author is required".into()));
        }
        if matches!(kind, EditKind::Revert { .. }) {
            return Err(Error::Validation("reverts go through rollback".into()));
        }
        let mut log = self.log.write().expect("log lock");
        let head = cell_head(log.edits(), cell);
        if base_version != head {
            return Err(Error::Conflict { head });
        }
        log.apply(author, Some(cell), kind)
    }

    /// Makes `version` the head. With `expected_head`, fails with a
    /// conflict unless the log head still equals it.
    pub fn rollback(&self, author: &str, version: u64, expected_head: Option<u64>) -> Result<u64> {
        if author.trim().is_empty() {
            return Err(Error::Validation("an author is required".into()));
        }
        let mut log = self.log.write().expect("log lock");
        if let Some(h) = expected_head {
            if h != log.head() {
                return Err(Error::Conflict { head: log.head() });
            }
        }
        log.rollback(author, version)
    }
}

fn cell_head(edits: &[Edit], cell: SegmentId) -> u64 {
    edits
        .iter()
        .rev()
        .find(|e| e.cell == Some(cell) || matches!(e.kind, EditKind::Revert { .. }))
        .map_or(0, |e| e.version)
}

fn polyline(s: &Skeleton, b: &Branch) -> Polyline {
    let nodes: Vec<&SkeletonNode> = b.node_ids.iter().filter_map(|&id| s.node(id)).collect();
    Polyline {
        branch_id: b.id,
        class: b.class,
        class_source: b.class_source,
        points: nodes.iter().map(|n| n.pos).collect(),
        radii: nodes.iter().map(|n| n.radius).collect(),
    }
}
