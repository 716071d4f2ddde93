use std::fmt::Write as _;
use std::sync::Arc;

use log::info;

use super::are::adapted_rand_error;
use crate::edit::{EditKind, EditLog};
use crate::error::Result;
use crate::model::{RoiKind, RoiStatus, SegmentId};
use crate::pipeline::{detect_errors, run_pipeline, PipelineParams};
use crate::volume::synth::{generate_synthetic, SyntheticSpec};
use crate::volume::VolumeSource;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopReport {
    pub pre_are: f64,
    pub post_are: f64,
    pub roi_count: usize,
    pub broken_count: usize,
    /// Merges applied by the scripted corrector.
    pub corrected_count: usize,
    pub cut_count: usize,
    /// Cuts with a broken ROI on the right cell, naming a fragment of the
    /// cut, centered within 1 µm of the cut plane.
    pub cuts_detected: usize,
    /// Broken ROIs not explained by any injected cut.
    pub false_broken: usize,
    pub head_version: u64,
}

/// Distance from an ROI center to the cut plane within which it counts.
pub const CUT_MATCH_NM: f64 = 1000.0;

/// Generates data, runs the detectors, merges every broken-neurite ROI's
/// candidate into its cell, and scores both segmentations against truth.
pub fn run_synthetic_loop(spec: &SyntheticSpec, seed: u64, params: &PipelineParams) -> Result<LoopReport> {
    let ds = generate_synthetic(spec, seed)?;
    let gt = ds.ground_truth.labels.clone();
    let pre_are = adapted_rand_error(&ds.base.labels, &gt)?;
    let base: Arc<dyn VolumeSource> = Arc::new(ds.base);
    let artifacts = run_pipeline(base.as_ref(), &ds.somas, &ds.synapses, params)?;
    let rois = detect_errors(base.as_ref(), &artifacts, params)?;
    let broken: Vec<_> = rois.iter().filter(|r| r.kind == RoiKind::Broken).cloned().collect();

    let mut cuts_detected = 0;
    let mut explained = vec![false; broken.len()];
    for cut in &ds.cuts {
        let hit = broken.iter().position(|r| {
            let cand: Option<SegmentId> = r.evidence.get("candidate_label").and_then(|c| c.parse().ok());
            r.cell_id == cut.tube_id
                && cand.is_some_and(|c| cut.fragment_ids.contains(&c))
                && (r.center.z - cut.plane_z_nm).abs() <= CUT_MATCH_NM
        });
        if let Some(i) = hit {
            cuts_detected += 1;
            explained[i] = true;
        }
    }
    // Fragments of merged or secondary components also count as explained
    // when they name a cut fragment.
    for (i, r) in broken.iter().enumerate() {
        let cand: Option<SegmentId> = r.evidence.get("candidate_label").and_then(|c| c.parse().ok());
        if ds.cuts.iter().any(|c| cand.is_some_and(|x| c.fragment_ids.contains(&x))) {
            explained[i] = true;
        }
    }
    let false_broken = explained.iter().filter(|e| !**e).count();

    let mut log = EditLog::new(base.clone(), ds.synapses.clone(), rois.clone())?;
    let mut corrected = 0;
    for r in &broken {
        let Some(cand) = r.evidence.get("candidate_label").and_then(|c| c.parse::<SegmentId>().ok()) else { continue };
        let snap = log.snapshot(log.head())?;
        if cand == r.cell_id || !snap.objects.contains_key(&cand) || !snap.objects.contains_key(&r.cell_id) {
            continue;
        }
        let anchor = r.center;
        log.apply("auto-corrector", Some(r.cell_id), EditKind::MergeObjects { target_id: r.cell_id, source_id: cand, anchor_a: anchor, anchor_b: anchor })?;
        log.apply("auto-corrector", Some(r.cell_id), EditKind::ResolveError { roi_id: r.id, resolution: RoiStatus::Resolved })?;
        corrected += 1;
    }
    let post = log.head_view().read_all_labels()?;
    let post_are = adapted_rand_error(&post, &gt)?;
    info!("synthetic loop: pre {pre_are:.4} post {post_are:.4}, {corrected} merges");
    Ok(LoopReport {
        pre_are,
        post_are,
        roi_count: rois.len(),
        broken_count: broken.len(),
        corrected_count: corrected,
        cut_count: ds.cuts.len(),
        cuts_detected,
        false_broken,
        head_version: log.head(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub pre_are: f64,
    pub post_are: f64,
}

/// Two-column table of ARE before and after proofreading.
pub fn render_report(rows: &[ReportRow]) -> String {
    let width = rows.iter().map(|r| r.dataset.len()).max().unwrap_or(0).max("dataset".len());
    let mut out = format!("{:<width$}  {:>8}  {:>8}\n", "dataset", "pre_ARE", "post_ARE");
    for r in rows {
        let _ = writeln!(out, "{:<width$}  {:>8.2}  {:>8.2}", r.dataset, r.pre_are, r.post_are);
    }
    out
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("dataset,pre_ARE,post_ARE\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.6},{:.6}", r.dataset, r.pre_are, r.post_are);
    }
    out
}
