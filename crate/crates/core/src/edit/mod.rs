//! Append-only versioned edit log over an immutable base segmentation.
//!
//! Edit kinds and their JSON payloads (one record per line in the log file,
//! `{"version", "author", "timestamp", "cell", "kind", "payload"}`):
//!
//! | kind | payload |
//! |---|---|
//! | `merge_objects` | `target_id, source_id, anchor_a, anchor_b` |
//! | `split_object` | `object_id, seeds, new_ids` (ids filled in on apply) |
//! | `paint_voxels` | `runs: [{start, len}], label` |
//! | `delete_object` | `object_id` |
//! | `add_synapse` | `record` (a synapse; element ids are reassigned) |
//! | `remove_synapse` | `synapse_id` |
//! | `move_element` | `element_id, pos` |
//! | `reconnect_synapse` | `synapse_id, post_element_ids` |
//! | `set_status` | `ids, status` |
//! | `set_class` | `ids, label` |
//! | `resolve_error` | `roi_id, resolution` |
//! | `annotate` | `pos, text` |
//! | `flag_error` | `cell_id, pos, radius, note` |
//! | `set_branch_class` | `cell_id, branch_ids, class` |
//! | `revert` | `version` |

mod log;
mod ops;
mod split;

use serde::{Deserialize, Serialize};

pub use log::{Annotation, EditLog, LogView, Snapshot};
pub use ops::{apply_ops, runs_from_voxels, LabelOp, VoxelRun};
pub use split::split_partition;

use crate::model::{BranchClass, BranchId, ElementId, PhysPoint, RoiId, RoiStatus, SegmentId, Synapse, SynapseId, SynapseStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EditKind {
    MergeObjects { target_id: SegmentId, source_id: SegmentId, anchor_a: PhysPoint, anchor_b: PhysPoint },
    SplitObject {
        object_id: SegmentId,
        seeds: Vec<PhysPoint>,
        #[serde(default)]
        new_ids: Vec<SegmentId>,
    },
    PaintVoxels { runs: Vec<VoxelRun>, label: SegmentId },
    DeleteObject { object_id: SegmentId },
    AddSynapse { record: Synapse },
    RemoveSynapse { synapse_id: SynapseId },
    MoveElement { element_id: ElementId, pos: PhysPoint },
    ReconnectSynapse { synapse_id: SynapseId, post_element_ids: Vec<ElementId> },
    SetStatus { ids: Vec<SynapseId>, status: SynapseStatus },
    SetClass { ids: Vec<SynapseId>, label: Option<String> },
    ResolveError { roi_id: RoiId, resolution: RoiStatus },
    Annotate { pos: PhysPoint, text: String },
    FlagError { cell_id: SegmentId, pos: PhysPoint, radius: f64, note: String },
    SetBranchClass { cell_id: SegmentId, branch_ids: Vec<BranchId>, class: BranchClass },
    Revert { version: u64 },
}

impl EditKind {
    pub fn name(&self) -> &'static str {
        match self {
            EditKind::MergeObjects { .. } => "merge_objects",
            EditKind::SplitObject { .. } => "split_object",
            EditKind::PaintVoxels { .. } => "paint_voxels",
            EditKind::DeleteObject { .. } => "delete_object",
            EditKind::AddSynapse { .. } => "add_synapse",
            EditKind::RemoveSynapse { .. } => "remove_synapse",
            EditKind::MoveElement { .. } => "move_element",
            EditKind::ReconnectSynapse { .. } => "reconnect_synapse",
            EditKind::SetStatus { .. } => "set_status",
            EditKind::SetClass { .. } => "set_class",
            EditKind::ResolveError { .. } => "resolve_error",
            EditKind::Annotate { .. } => "annotate",
            EditKind::FlagError { .. } => "flag_error",
            EditKind::SetBranchClass { .. } => "set_branch_class",
            EditKind::Revert { .. } => "revert",
        }
    }

    /// Whether the edit can change voxel labels.
    pub fn touches_labels(&self) -> bool {
        matches!(
            self,
            EditKind::MergeObjects { .. } | EditKind::SplitObject { .. } | EditKind::PaintVoxels { .. } | EditKind::DeleteObject { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edit {
    pub version: u64,
    pub author: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// The cell being proofread, if any.
    #[serde(default)]
    pub cell: Option<SegmentId>,
    #[serde(flatten)]
    pub kind: EditKind,
}
