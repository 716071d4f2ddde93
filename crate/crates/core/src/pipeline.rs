//! Runs the analysis stages over one state of the segmentation: skeletons,
//! association, clusters, branch classes and error detection.

use std::collections::BTreeMap;

use log::info;
use rayon::prelude::*;

use crate::detect::{
    assign_roi_ids, detect_broken, detect_disconnected, detect_invalid_branch, BrokenParams, InvalidBranchParams, ThresholdExtractor,
    DEFAULT_RHO_NM,
};
use crate::error::Result;
use crate::model::{Branch, BranchClass, BranchId, ClassSource, ErrorRoi, PhysPoint, SegmentId, Skeleton, Synapse, SynapseCluster};
use crate::skeleton::{decompose_branches, skeletonize, SkeletonParams};
use crate::synapse::{associate, classify_branches, form_clusters, sort_clusters, DEFAULT_ASSOC_RADIUS_NM, DEFAULT_CLUSTER_RADIUS_NM};
use crate::volume::tables::SomaRecord;
use crate::volume::VolumeSource;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub skeleton: SkeletonParams,
    pub assoc_radius_nm: f64,
    pub cluster_radius_nm: f64,
    pub broken: BrokenParams,
    pub extractor: ThresholdExtractor,
    pub rho_nm: f64,
    pub invalid: InvalidBranchParams,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            skeleton: SkeletonParams::default(),
            assoc_radius_nm: DEFAULT_ASSOC_RADIUS_NM,
            cluster_radius_nm: DEFAULT_CLUSTER_RADIUS_NM,
            broken: BrokenParams::default(),
            extractor: ThresholdExtractor::default(),
            rho_nm: DEFAULT_RHO_NM,
            invalid: InvalidBranchParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellArtifacts {
    pub skeleton: Skeleton,
    pub branches: Vec<Branch>,
    /// Sorted; `order_index` equals the position.
    pub clusters: Vec<SynapseCluster>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub cells: BTreeMap<SegmentId, CellArtifacts>,
    /// All synapses with elements anchored to cell skeletons.
    pub synapses: Vec<Synapse>,
}

impl Artifacts {
    /// Synapses with an anchored element on `cell`.
    pub fn cell_synapses(&self, cell: SegmentId) -> impl Iterator<Item = &Synapse> {
        self.synapses.iter().filter(move |s| s.element_on(cell).is_some())
    }
}

/// Skeletonizes the cells of `somas` still present in `src`, in parallel.
pub fn skeletonize_cells(src: &dyn VolumeSource, somas: &[SomaRecord], params: &SkeletonParams) -> Result<BTreeMap<SegmentId, Skeleton>> {
    let index = src.object_index()?;
    let present: Vec<&SomaRecord> = somas.iter().filter(|s| index.contains_key(&s.cell_id)).collect();
    let out: Vec<Option<Skeleton>> = present
        .par_iter()
        .map(|s| match skeletonize(src, s.cell_id, params, Some(s.pos)) {
            Ok(sk) => Ok(Some(sk)),
            Err(crate::Error::NotFound(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().map(|s| (s.object_id, s)).collect())
}

/// Associates synapses, then clusters and classifies branches per cell.
/// `user_classes` holds branch classes set by hand, by cell and branch.
pub fn analyze(
    src: &dyn VolumeSource,
    skeletons: BTreeMap<SegmentId, Skeleton>,
    synapses: &[Synapse],
    params: &PipelineParams,
    user_classes: &BTreeMap<SegmentId, BTreeMap<BranchId, BranchClass>>,
) -> Result<Artifacts> {
    let meta = src.meta().clone();
    let mut synapses = synapses.to_vec();
    let label_at = |p: PhysPoint| match meta.phys_to_voxel(p) {
        Ok(v) => src.label_at(v).unwrap_or(0),
        Err(_) => 0,
    };
    let summary = associate(&mut synapses, &skeletons, label_at, params.assoc_radius_nm);
    info!("associated {} elements, {} unanchored", summary.anchored, summary.unanchored.len());
    let cells = skeletons
        .into_par_iter()
        .map(|(id, skeleton)| {
            let mine: Vec<Synapse> = synapses.iter().filter(|s| s.element_on(id).is_some()).cloned().collect();
            let mut branches = decompose_branches(&skeleton);
            if let Some(user) = user_classes.get(&id) {
                for b in &mut branches {
                    if let Some(c) = user.get(&b.id) {
                        b.class = *c;
                        b.class_source = ClassSource::User;
                    }
                }
            }
            classify_branches(&skeleton, &mut branches, &mine);
            let clusters = sort_clusters(form_clusters(&skeleton, &mine, params.cluster_radius_nm)?, &skeleton);
            Ok((id, CellArtifacts { skeleton, branches, clusters }))
        })
        .collect::<Result<_>>()?;
    Ok(Artifacts { cells, synapses })
}

/// Full analysis from scratch.
pub fn run_pipeline(src: &dyn VolumeSource, somas: &[SomaRecord], synapses: &[Synapse], params: &PipelineParams) -> Result<Artifacts> {
    let skeletons = skeletonize_cells(src, somas, &params.skeleton)?;
    analyze(src, skeletons, synapses, params, &BTreeMap::new())
}

/// All detectors over every cell; ids are sequential from 1 in
/// (cell, kind, position) order.
pub fn detect_errors(src: &dyn VolumeSource, artifacts: &Artifacts, params: &PipelineParams) -> Result<Vec<ErrorRoi>> {
    let per_cell: Vec<Vec<ErrorRoi>> = artifacts
        .cells
        .par_iter()
        .map(|(_, cell)| {
            let mut rois = detect_broken(src, &cell.skeleton, &params.extractor, &params.broken)?.rois;
            rois.extend(detect_disconnected(&cell.skeleton, &artifacts.synapses, params.rho_nm, src.meta())?);
            rois.extend(detect_invalid_branch(&cell.skeleton, &cell.branches, &params.invalid));
            Ok(rois)
        })
        .collect::<Result<_>>()?;
    let mut rois: Vec<ErrorRoi> = per_cell.into_iter().flatten().collect();
    assign_roi_ids(&mut rois, 1);
    Ok(rois)
}
