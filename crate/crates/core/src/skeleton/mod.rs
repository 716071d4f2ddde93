//! Center-line extraction and branch decomposition.

pub mod branches;
mod dbf;
mod io;
mod teasar;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use branches::{branch_length, decompose_branches, geodesic_distance, node_branch_map, Topology};
pub use dbf::distance_to_boundary;
pub use io::{parse_skeleton, render_skeleton};
pub use teasar::{skeletonize, MaskCrop, SkeletonParams};

use crate::error::Result;
use crate::model::{PhysPoint, SegmentId, Skeleton};
use crate::volume::VolumeSource;

/// Skeletonizes several objects in parallel. Hints are looked up by id.
pub fn skeletonize_all(
    src: &dyn VolumeSource,
    ids: &[SegmentId],
    params: &SkeletonParams,
    hints: &BTreeMap<SegmentId, PhysPoint>,
) -> Result<BTreeMap<SegmentId, Skeleton>> {
    ids.par_iter()
        .map(|&id| skeletonize(src, id, params, hints.get(&id).copied()).map(|s| (id, s)))
        .collect()
}
