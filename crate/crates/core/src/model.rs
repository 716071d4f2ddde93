//! Domain types exchanged between the pipeline stages.
//!
//! Positions are nanometers everywhere; voxel indices only appear at the
//! storage boundary (`VoxelCoord`). Label 0 is background.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type SegmentId = u64;
pub type NodeId = u32;
pub type BranchId = u32;
pub type SynapseId = u64;
pub type ElementId = u64;
pub type RoiId = u64;
pub type ClusterId = u32;

/// Reserved background label.
pub const BACKGROUND: SegmentId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VoxelCoord {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl VoxelCoord {
    pub fn new(x: usize, y: usize, z: usize) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [usize; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[usize; 3]> for VoxelCoord {
    fn from(a: [usize; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// A point in physical space, in nanometers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhysPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PhysPoint {
    pub const ORIGIN: PhysPoint = PhysPoint { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: PhysPoint) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: PhysPoint) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<PhysPoint> {
        let n = self.norm();
        (n > 1e-12).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Arithmetic mean; `None` for an empty iterator.
    pub fn mean<I: IntoIterator<Item = PhysPoint>>(points: I) -> Option<PhysPoint> {
        let mut sum = PhysPoint::ORIGIN;
        let mut n = 0usize;
        for p in points {
            sum = sum + p;
            n += 1;
        }
        (n > 0).then(|| sum * (1.0 / n as f64))
    }
}

impl Add for PhysPoint {
    type Output = PhysPoint;
    fn add(self, o: PhysPoint) -> PhysPoint {
        PhysPoint::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for PhysPoint {
    type Output = PhysPoint;
    fn sub(self, o: PhysPoint) -> PhysPoint {
        PhysPoint::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for PhysPoint {
    type Output = PhysPoint;
    fn mul(self, s: f64) -> PhysPoint {
        PhysPoint::new(self.x * s, self.y * s, self.z * s)
    }
}

impl fmt::Display for PhysPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Geometry of a volume. Images are 8-bit, labels 64-bit; both x-fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub dims: [usize; 3],
    pub voxel_size: [f64; 3],
    pub chunk_shape: [usize; 3],
}

impl VolumeMeta {
    pub const IMAGE_DTYPE: &'static str = "uint8";
    pub const LABEL_DTYPE: &'static str = "uint64";
    pub const DEFAULT_CHUNK_SHAPE: [usize; 3] = [128, 128, 64];

    /// Builds metadata with the chunk shape clipped to the volume.
    pub fn new(dims: [usize; 3], voxel_size: [f64; 3]) -> Result<Self> {
        let chunk_shape = std::array::from_fn(|a| Self::DEFAULT_CHUNK_SHAPE[a].min(dims[a].max(1)));
        let meta = Self { dims, voxel_size, chunk_shape };
        meta.validate()?;
        Ok(meta)
    }

    pub fn with_chunk_shape(mut self, chunk_shape: [usize; 3]) -> Result<Self> {
        self.chunk_shape = chunk_shape;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..3 {
            if self.dims[a] == 0 {
                return Err(Error::Format(format!("dimension {a} is zero")));
            }
            if !(self.voxel_size[a] > 0.0 && self.voxel_size[a].is_finite()) {
                return Err(Error::Format(format!("voxel size on axis {a} must be positive")));
            }
            if self.chunk_shape[a] == 0 || self.chunk_shape[a] > self.dims[a] {
                return Err(Error::Format(format!(
                    "chunk shape {:?} must be positive and not exceed dims {:?}",
                    self.chunk_shape, self.dims
                )));
            }
        }
        Ok(())
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Physical extent of the volume in nm per axis.
    pub fn extent_nm(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.dims[a] as f64 * self.voxel_size[a])
    }

    pub fn contains_voxel(&self, v: [i64; 3]) -> bool {
        (0..3).all(|a| v[a] >= 0 && (v[a] as usize) < self.dims[a])
    }

    pub fn contains_point(&self, p: PhysPoint) -> bool {
        let e = self.extent_nm();
        p.is_finite() && p.to_array().iter().zip(e).all(|(&c, e)| c >= 0.0 && c < e)
    }

    pub fn linear_index(&self, v: VoxelCoord) -> usize {
        v.x + self.dims[0] * (v.y + self.dims[1] * v.z)
    }

    pub fn coord_of(&self, index: usize) -> VoxelCoord {
        let x = index % self.dims[0];
        let y = (index / self.dims[0]) % self.dims[1];
        let z = index / (self.dims[0] * self.dims[1]);
        VoxelCoord::new(x, y, z)
    }

    /// Physical position of a voxel center.
    pub fn voxel_center(&self, v: VoxelCoord) -> PhysPoint {
        let a = v.to_array();
        PhysPoint::from_array(std::array::from_fn(|i| (a[i] as f64 + 0.5) * self.voxel_size[i]))
    }

    /// Per-axis floor division by the voxel size.
    pub fn phys_to_voxel(&self, p: PhysPoint) -> Result<VoxelCoord> {
        phys_to_voxel(p, self)
    }

    /// Same as [`phys_to_voxel`] but signed and unchecked, for points near a face.
    pub fn phys_to_voxel_signed(&self, p: PhysPoint) -> [i64; 3] {
        let c = p.to_array();
        std::array::from_fn(|a| (c[a] / self.voxel_size[a]).floor() as i64)
    }
}

/// Converts a physical point (nm) to the voxel containing it.
pub fn phys_to_voxel(p: PhysPoint, meta: &VolumeMeta) -> Result<VoxelCoord> {
    if !meta.contains_point(p) {
        return Err(Error::Bounds(format!("point {p} nm lies outside the volume")));
    }
    let v = meta.phys_to_voxel_signed(p);
    Ok(VoxelCoord::new(v[0] as usize, v[1] as usize, v[2] as usize))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonNode {
    pub id: NodeId,
    pub pos: PhysPoint,
    /// Distance to the object boundary, nm.
    pub radius: f64,
    pub parent: Option<NodeId>,
}

/// A rooted center-line tree of one segmented object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub object_id: SegmentId,
    pub nodes: Vec<SkeletonNode>,
    pub root_id: NodeId,
}

impl Skeleton {
    pub fn node(&self, id: NodeId) -> Option<&SkeletonNode> {
        // Extracted skeletons keep nodes sorted by id.
        match self.nodes.binary_search_by_key(&id, |n| n.id) {
            Ok(i) => Some(&self.nodes[i]),
            Err(_) => self.nodes.iter().find(|n| n.id == id),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.parent.is_some()).count()
    }

    /// Child ids per node, each list sorted ascending.
    pub fn children(&self) -> HashMap<NodeId, Vec<NodeId>> {
        let mut out: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for n in &self.nodes {
            out.entry(n.id).or_default();
            if let Some(p) = n.parent {
                out.entry(p).or_default().push(n.id);
            }
        }
        for v in out.values_mut() {
            v.sort_unstable();
        }
        out
    }

    /// Ids of degree-one nodes: leaves plus a root with a single child.
    pub fn endpoints(&self) -> Vec<NodeId> {
        let children = self.children();
        let mut out: Vec<NodeId> = self
            .nodes
            .iter()
            .filter(|n| {
                let c = children.get(&n.id).map_or(0, Vec::len);
                if n.parent.is_none() { c == 1 } else { c == 0 }
            })
            .map(|n| n.id)
            .collect();
        out.sort_unstable();
        out
    }

    /// The node with the largest radius (lowest id on ties).
    pub fn widest_node(&self) -> Option<&SkeletonNode> {
        self.nodes.iter().fold(None, |best: Option<&SkeletonNode>, n| match best {
            Some(b) if b.radius > n.radius || (b.radius == n.radius && b.id < n.id) => Some(b),
            _ => Some(n),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkeletonViolation {
    Empty,
    DuplicateId(NodeId),
    NoRoot,
    MultipleRoots(Vec<NodeId>),
    RootMismatch { declared: NodeId },
    MissingParent { node: NodeId, parent: NodeId },
    Cycle(NodeId),
    Unreachable(NodeId),
    NonPositiveRadius(NodeId),
}

impl fmt::Display for SkeletonViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkeletonViolation::Empty => write!(f, "empty skeleton"),
            SkeletonViolation::DuplicateId(id) => write!(f, "duplicate node id {id}"),
            SkeletonViolation::NoRoot => write!(f, "no root"),
            SkeletonViolation::MultipleRoots(ids) => write!(f, "multiple roots {ids:?}"),
            SkeletonViolation::RootMismatch { declared } => {
                write!(f, "declared root {declared} is not the parentless node")
            }
            SkeletonViolation::MissingParent { node, parent } => {
                write!(f, "node {node} references missing parent {parent}")
            }
            SkeletonViolation::Cycle(id) => write!(f, "cycle through node {id}"),
            SkeletonViolation::Unreachable(id) => write!(f, "node {id} unreachable from root"),
            SkeletonViolation::NonPositiveRadius(id) => write!(f, "node {id} has non-positive radius"),
        }
    }
}

/// Checks the tree invariants; returns every violation found.
pub fn validate_skeleton(s: &Skeleton) -> std::result::Result<(), Vec<SkeletonViolation>> {
    let mut violations = Vec::new();
    if s.nodes.is_empty() {
        return Err(vec![SkeletonViolation::Empty]);
    }
    let mut by_id: HashMap<NodeId, &SkeletonNode> = HashMap::with_capacity(s.nodes.len());
    for n in &s.nodes {
        if by_id.insert(n.id, n).is_some() {
            violations.push(SkeletonViolation::DuplicateId(n.id));
        }
        if !(n.radius > 0.0) {
            violations.push(SkeletonViolation::NonPositiveRadius(n.id));
        }
    }
    let mut roots: Vec<NodeId> = s.nodes.iter().filter(|n| n.parent.is_none()).map(|n| n.id).collect();
    roots.sort_unstable();
    match roots.len() {
        0 => violations.push(SkeletonViolation::NoRoot),
        1 if roots[0] != s.root_id => {
            violations.push(SkeletonViolation::RootMismatch { declared: s.root_id })
        }
        1 => {}
        _ => violations.push(SkeletonViolation::MultipleRoots(roots.clone())),
    }
    for n in &s.nodes {
        if let Some(p) = n.parent {
            if !by_id.contains_key(&p) {
                violations.push(SkeletonViolation::MissingParent { node: n.id, parent: p });
            }
        }
    }

    // Walk each node's parent chain; 0 = unseen, 1 = on current walk, 2 = resolved.
    let mut state: HashMap<NodeId, (u8, bool)> = HashMap::new();
    let mut reported_cycles: Vec<NodeId> = Vec::new();
    let mut ids: Vec<NodeId> = by_id.keys().copied().collect();
    ids.sort_unstable();
    for &start in &ids {
        let mut chain = Vec::new();
        let mut cur = Some(start);
        let mut reaches_root = false;
        while let Some(id) = cur {
            match state.get(&id) {
                Some(&(2, r)) => {
                    reaches_root = r;
                    break;
                }
                Some(&(1, _)) => {
                    if !reported_cycles.contains(&id) {
                        reported_cycles.push(id);
                        violations.push(SkeletonViolation::Cycle(id));
                    }
                    break;
                }
                _ => {}
            }
            state.insert(id, (1, false));
            chain.push(id);
            match by_id.get(&id).and_then(|n| n.parent) {
                None => {
                    reaches_root = by_id.contains_key(&id) && s.root_id == id;
                    cur = None;
                }
                Some(p) if by_id.contains_key(&p) => cur = Some(p),
                Some(_) => cur = None,
            }
        }
        for id in chain {
            state.insert(id, (2, reaches_root));
        }
    }
    for &id in &ids {
        if !state.get(&id).is_some_and(|&(_, r)| r) {
            violations.push(SkeletonViolation::Unreachable(id));
        }
    }

    if violations.is_empty() { Ok(()) } else { Err(violations) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchClass {
    Axon,
    Dendrite,
    Miscellaneous,
}

impl BranchClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchClass::Axon => "axon",
            BranchClass::Dendrite => "dendrite",
            BranchClass::Miscellaneous => "miscellaneous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "axon" => Some(BranchClass::Axon),
            "dendrite" => Some(BranchClass::Dendrite),
            "miscellaneous" | "misc" => Some(BranchClass::Miscellaneous),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassSource {
    Automatic,
    User,
}

/// A maximal skeleton path between root, junction or leaf endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: BranchId,
    /// Proximal to distal.
    pub node_ids: Vec<NodeId>,
    pub class: BranchClass,
    pub class_source: ClassSource,
}

impl Branch {
    pub fn proximal(&self) -> NodeId {
        self.node_ids[0]
    }

    pub fn distal(&self) -> NodeId {
        *self.node_ids.last().expect("branch has at least one node")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Pre,
    Post,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynapticElement {
    pub id: ElementId,
    pub kind: ElementKind,
    pub pos: PhysPoint,
    pub segment_id: SegmentId,
    pub anchor_node: Option<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynapseStatus {
    Unvalidated,
    Valid,
    Invalid,
}

impl SynapseStatus {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unvalidated" => Some(SynapseStatus::Unvalidated),
            "valid" => Some(SynapseStatus::Valid),
            "invalid" => Some(SynapseStatus::Invalid),
            _ => None,
        }
    }
}

/// One presynaptic element and one or more postsynaptic elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub id: SynapseId,
    pub pre: SynapticElement,
    pub posts: Vec<SynapticElement>,
    pub status: SynapseStatus,
    pub class_label: Option<String>,
}

impl Synapse {
    pub fn elements(&self) -> impl Iterator<Item = &SynapticElement> {
        std::iter::once(&self.pre).chain(self.posts.iter())
    }

    pub fn elements_mut(&mut self) -> impl Iterator<Item = &mut SynapticElement> {
        std::iter::once(&mut self.pre).chain(self.posts.iter_mut())
    }

    /// The element that belongs to `cell` and is anchored on its skeleton.
    /// Prefers the presynaptic element when both sides sit on the cell.
    pub fn element_on(&self, cell: SegmentId) -> Option<&SynapticElement> {
        self.elements().find(|e| e.segment_id == cell && e.anchor_node.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynapseCluster {
    pub id: ClusterId,
    /// Sorted ascending.
    pub member_ids: Vec<SynapseId>,
    pub centroid: PhysPoint,
    pub anchor_node: NodeId,
    pub branch_id: BranchId,
    pub order_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiKind {
    Broken,
    Disconnected,
    InvalidBranch,
    UserFlagged,
}

impl RoiKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RoiKind::Broken => "broken",
            RoiKind::Disconnected => "disconnected",
            RoiKind::InvalidBranch => "invalid_branch",
            RoiKind::UserFlagged => "user_flagged",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "broken" => Some(RoiKind::Broken),
            "disconnected" => Some(RoiKind::Disconnected),
            "invalid_branch" => Some(RoiKind::InvalidBranch),
            "user_flagged" => Some(RoiKind::UserFlagged),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoiStatus {
    Open,
    Resolved,
    Dismissed,
}

impl RoiStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RoiStatus::Open => "open",
            RoiStatus::Resolved => "resolved",
            RoiStatus::Dismissed => "dismissed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "open" => Some(RoiStatus::Open),
            "resolved" => Some(RoiStatus::Resolved),
            "dismissed" => Some(RoiStatus::Dismissed),
            _ => None,
        }
    }
}

/// A region flagged for human review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRoi {
    pub id: RoiId,
    pub kind: RoiKind,
    pub center: PhysPoint,
    pub radius: f64,
    pub cell_id: SegmentId,
    pub status: RoiStatus,
    pub evidence: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadeMode {
    Errors,
    Synapses,
}

impl ShadeMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "errors" => Some(ShadeMode::Errors),
            "synapses" => Some(ShadeMode::Synapses),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell_id: SegmentId,
    pub soma_pos: PhysPoint,
    pub error_count: usize,
    pub synapse_count: usize,
    pub shade: f64,
}

/// Normalizes counts by their maximum; all zeros when the maximum is zero.
pub fn shades(counts: &[usize]) -> Vec<f64> {
    let max = counts.iter().copied().max().unwrap_or(0);
    counts
        .iter()
        .map(|&c| if max == 0 { 0.0 } else { c as f64 / max as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: NodeId, parent: Option<NodeId>) -> SkeletonNode {
        SkeletonNode { id, pos: PhysPoint::new(id as f64 * 10.0, 0.0, 0.0), radius: 5.0, parent }
    }

    #[test]
    fn phys_to_voxel_examples() {
        let iso = VolumeMeta::new([16, 16, 16], [10.0; 3]).unwrap();
        assert_eq!(phys_to_voxel(PhysPoint::ORIGIN, &iso).unwrap(), VoxelCoord::new(0, 0, 0));

        let aniso = VolumeMeta::new([32, 32, 32], [10.0, 10.0, 30.0]).unwrap();
        let v = phys_to_voxel(PhysPoint::new(95.0, 10.0, 305.0), &aniso).unwrap();
        assert_eq!(v, VoxelCoord::new(9, 1, 10));

        assert!(matches!(phys_to_voxel(PhysPoint::new(-1.0, 0.0, 0.0), &iso), Err(Error::Bounds(_))));
        assert!(matches!(phys_to_voxel(PhysPoint::new(160.0, 0.0, 0.0), &iso), Err(Error::Bounds(_))));
    }

    #[test]
    fn voxel_center_round_trips_within_half_voxel() {
        let meta = VolumeMeta::new([20, 20, 20], [8.0, 8.0, 33.0]).unwrap();
        for idx in (0..meta.voxel_count()).step_by(97) {
            let v = meta.coord_of(idx);
            let c = meta.voxel_center(v);
            assert_eq!(phys_to_voxel(c, &meta).unwrap(), v);
            assert_eq!(meta.linear_index(v), idx);
        }
    }

    #[test]
    fn chunk_shape_larger_than_dims_rejected() {
        let meta = VolumeMeta::new([8, 8, 8], [1.0; 3]).unwrap();
        assert!(meta.with_chunk_shape([16, 8, 8]).is_err());
    }

    #[test]
    fn chain_is_valid() {
        let s = Skeleton {
            object_id: 1,
            nodes: vec![node(0, None), node(1, Some(0)), node(2, Some(1))],
            root_id: 0,
        };
        assert!(validate_skeleton(&s).is_ok());
        assert_eq!(s.nodes.len(), s.edge_count() + 1);
    }

    #[test]
    fn two_roots_reported() {
        let s = Skeleton { object_id: 1, nodes: vec![node(0, None), node(1, None)], root_id: 0 };
        let v = validate_skeleton(&s).unwrap_err();
        assert!(v.iter().any(|v| v.to_string().starts_with("multiple roots")));
    }

    #[test]
    fn parent_cycle_reported() {
        let s = Skeleton {
            object_id: 1,
            nodes: vec![node(0, None), node(1, Some(2)), node(2, Some(1))],
            root_id: 0,
        };
        let v = validate_skeleton(&s).unwrap_err();
        assert!(v.iter().any(|v| v.to_string().starts_with("cycle")));
        assert!(v.contains(&SkeletonViolation::Unreachable(1)));
    }

    #[test]
    fn bad_radius_reported() {
        let mut n = node(0, None);
        n.radius = 0.0;
        let s = Skeleton { object_id: 1, nodes: vec![n], root_id: 0 };
        assert_eq!(validate_skeleton(&s).unwrap_err(), vec![SkeletonViolation::NonPositiveRadius(0)]);
    }

    #[test]
    fn shade_normalization() {
        assert_eq!(shades(&[4, 2, 0]), vec![1.0, 0.5, 0.0]);
        assert_eq!(shades(&[0, 0]), vec![0.0, 0.0]);
        assert_eq!(shades(&[3]), vec![1.0]);
    }
}
