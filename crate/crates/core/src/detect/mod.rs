//! Error detection: broken neurites, disconnected endpoints, invalid
//! branches, plus the assisted along-branch search for merges.

mod broken;
mod extractor;
mod invalid;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

pub use broken::{detect_broken, BrokenParams, BrokenScan};
pub use extractor::{default_mask_extractor, MaskExtractor, ThresholdExtractor};
pub use invalid::{assist_merge_search, detect_invalid_branch, InspectionAnchor, InvalidBranchParams};

use crate::error::{Error, Result};
use crate::model::{ErrorRoi, PhysPoint, RoiKind, RoiStatus, Skeleton, Synapse, VolumeMeta};
use crate::spatial::PointIndex;

pub const DEFAULT_RHO_NM: f64 = 750.0;

/// Flags non-root endpoints with no synaptic element within `rho_nm`.
/// Endpoints within `rho_nm` of a volume face are exempt.
pub fn detect_disconnected(skeleton: &Skeleton, synapses: &[Synapse], rho_nm: f64, meta: &VolumeMeta) -> Result<Vec<ErrorRoi>> {
    let elements: Vec<PhysPoint> = synapses.iter().flat_map(|s| s.elements().map(|e| e.pos)).collect();
    detect_disconnected_points(skeleton, &elements, rho_nm, meta)
}

pub fn detect_disconnected_points(
    skeleton: &Skeleton,
    elements: &[PhysPoint],
    rho_nm: f64,
    meta: &VolumeMeta,
) -> Result<Vec<ErrorRoi>> {
    if !(rho_nm > 0.0 && rho_nm.is_finite()) {
        return Err(Error::Param(format!("rho must be positive, got {rho_nm}")));
    }
    let index = PointIndex::new(elements.to_vec(), rho_nm);
    let extent = meta.extent_nm();
    let mut out = Vec::new();
    for id in skeleton.endpoints() {
        if id == skeleton.root_id {
            continue;
        }
        let p = skeleton.node(id).expect("endpoint exists").pos;
        let c = p.to_array();
        let interior = (0..3).all(|a| c[a] > rho_nm && extent[a] - c[a] > rho_nm);
        if !interior || index.any_within(p, rho_nm) {
            continue;
        }
        let mut evidence = BTreeMap::new();
        evidence.insert("node".into(), id.to_string());
        out.push(new_roi(RoiKind::Disconnected, p, rho_nm, skeleton.object_id, evidence));
    }
    Ok(out)
}

pub(crate) fn new_roi(kind: RoiKind, center: PhysPoint, radius: f64, cell: u64, evidence: BTreeMap<String, String>) -> ErrorRoi {
    ErrorRoi { id: 0, kind, center, radius, cell_id: cell, status: RoiStatus::Open, evidence }
}

/// Orders ROIs by (cell, kind, center) and numbers them from `first_id`.
pub fn assign_roi_ids(rois: &mut [ErrorRoi], first_id: u64) {
    rois.sort_by(|a, b| {
        a.cell_id
            .cmp(&b.cell_id)
            .then(a.kind.cmp(&b.kind))
            .then(a.center.z.total_cmp(&b.center.z))
            .then(a.center.y.total_cmp(&b.center.y))
            .then(a.center.x.total_cmp(&b.center.x))
    });
    for (i, r) in rois.iter_mut().enumerate() {
        r.id = first_id + i as u64;
    }
}

/// One line per ROI: `id, kind, x, y, z, radius, cell_id, status, k=v;...`.
pub fn render_rois(rois: &[ErrorRoi]) -> String {
    let mut out = String::from("# id, kind, x, y, z, radius, cell_id, status, evidence\n");
    for r in rois {
        let ev: Vec<String> = r.evidence.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(
            out,
            "{}, {}, {}, {}, {}, {}, {}, {}, {}",
            r.id,
            r.kind.as_str(),
            r.center.x,
            r.center.y,
            r.center.z,
            r.radius,
            r.cell_id,
            r.status.as_str(),
            ev.join(";")
        );
    }
    out
}

pub fn parse_rois(text: &str) -> Result<Vec<ErrorRoi>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::Format(format!("roi line {}: {line:?}", i + 1));
        let f: Vec<&str> = line.splitn(9, ',').map(str::trim).collect();
        if f.len() < 8 {
            return Err(bad());
        }
        let n = |k: usize| f[k].parse::<f64>().map_err(|_| bad());
        let mut evidence = BTreeMap::new();
        for kv in f.get(8).copied().unwrap_or("").split(';').filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            evidence.insert(k.to_string(), v.to_string());
        }
        let id: u64 = f[0].parse().map_err(|_| bad())?;
        if !seen.insert(id) {
            return Err(Error::Format(format!("duplicate roi id {id}")));
        }
        out.push(ErrorRoi {
            id,
            kind: RoiKind::parse(f[1]).ok_or_else(bad)?,
            center: PhysPoint::new(n(2)?, n(3)?, n(4)?),
            radius: n(5)?,
            cell_id: f[6].parse().map_err(|_| bad())?,
            status: RoiStatus::parse(f[7]).ok_or_else(bad)?,
            evidence,
        });
    }
    Ok(out)
}
