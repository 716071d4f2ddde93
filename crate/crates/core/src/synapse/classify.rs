use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::model::{Branch, BranchClass, ClassSource, ElementKind, Skeleton, Synapse, SynapseId, SynapseStatus};
use crate::skeleton::node_branch_map;

/// Sets automatic classes from anchored element counts: more pre than post
/// is axon, more post than pre is dendrite, anything else miscellaneous.
/// Branches labeled by a user keep their class.
pub fn classify_branches(skeleton: &Skeleton, branches: &mut [Branch], synapses: &[Synapse]) {
    let owner = node_branch_map(branches);
    let mut counts: HashMap<u32, (usize, usize)> = HashMap::new();
    for e in synapses.iter().flat_map(Synapse::elements) {
        if e.segment_id != skeleton.object_id {
            continue;
        }
        let Some(b) = e.anchor_node.and_then(|n| owner.get(&n)) else { continue };
        let c = counts.entry(*b).or_default();
        match e.kind {
            ElementKind::Pre => c.0 += 1,
            ElementKind::Post => c.1 += 1,
        }
    }
    for b in branches.iter_mut().filter(|b| b.class_source == ClassSource::Automatic) {
        let (pre, post) = counts.get(&b.id).copied().unwrap_or_default();
        b.class = match pre.cmp(&post) {
            std::cmp::Ordering::Greater => BranchClass::Axon,
            std::cmp::Ordering::Less => BranchClass::Dendrite,
            std::cmp::Ordering::Equal => BranchClass::Miscellaneous,
        };
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BulkField {
    Status(SynapseStatus),
    ClassLabel(Option<String>),
}

/// Applies one value to every target synapse, or to none if any id is unknown.
pub fn bulk_set(synapses: &mut [Synapse], targets: &[SynapseId], field: &BulkField) -> Result<usize> {
    let known: HashSet<SynapseId> = synapses.iter().map(|s| s.id).collect();
    if let Some(missing) = targets.iter().find(|t| !known.contains(t)) {
        return Err(Error::Validation(format!("unknown synapse {missing}")));
    }
    let wanted: HashSet<SynapseId> = targets.iter().copied().collect();
    let mut n = 0;
    for s in synapses.iter_mut().filter(|s| wanted.contains(&s.id)) {
        match field {
            BulkField::Status(st) => s.status = *st,
            BulkField::ClassLabel(l) => s.class_label = l.clone(),
        }
        n += 1;
    }
    Ok(n)
}
