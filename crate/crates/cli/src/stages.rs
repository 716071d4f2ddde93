//! The batch stages, reading and writing files inside a store directory:
//!
//! ```text
//! meta.txt image/ labels/   base segmentation (volume store)
//! somas.csv synapses.csv    input tables
//! ground_truth/ spec.txt cuts.csv   written by `synth`
//! skeletons/<id>.txt        written by `skeletonize`
//! associated.csv            written by `associate`
//! clusters/<id>.txt         written by `cluster`
//! rois.txt                  written by `detect`
//! edits.jsonl               appended by `serve`
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use log::info;

use circuitproof::detect::{parse_rois, render_rois};
use circuitproof::edit::EditLog;
use circuitproof::eval::{adapted_rand_error, run_synthetic_loop, LoopReport};
use circuitproof::pipeline::{analyze, detect_errors, Artifacts, CellArtifacts, PipelineParams};
use circuitproof::service::CircuitService;
use circuitproof::skeleton::{decompose_branches, parse_skeleton, render_skeleton, skeletonize};
use circuitproof::synapse::{associate, form_clusters, render_clusters, sort_clusters};
use circuitproof::volume::synth::{generate_synthetic, SyntheticSpec};
use circuitproof::volume::tables::{parse_soma_table, parse_synapse_table, render_soma_table, render_synapse_table, SomaRecord};
use circuitproof::volume::{open_store, write_store, VolumeSource};
use circuitproof::{ElementKind, Error, PhysPoint, Result, SegmentId, Skeleton, Synapse, SynapseStatus, SynapticElement};

pub const SOMAS: &str = "somas.csv";
pub const SYNAPSES: &str = "synapses.csv";
pub const ASSOCIATED: &str = "associated.csv";
pub const SKELETONS: &str = "skeletons";
pub const CLUSTERS: &str = "clusters";
pub const ROIS: &str = "rois.txt";
pub const EDITS: &str = "edits.jsonl";
pub const GROUND_TRUTH: &str = "ground_truth";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn synth(spec_path: &Path, seed: u64, out: &Path) -> Result<()> {
    let spec = SyntheticSpec::parse(&read(spec_path)?)?;
    let ds = generate_synthetic(&spec, seed)?;
    write_store(out, &ds.base)?;
    write_store(out.join(GROUND_TRUTH), &ds.ground_truth)?;
    write(&out.join(SOMAS), &render_soma_table(&ds.somas))?;
    write(&out.join(SYNAPSES), &render_synapse_table(&ds.synapses))?;
    write(&out.join("spec.txt"), &spec.render())?;
    let mut cuts = String::from("# tube_id, slice, gap, plane_z_nm, fragment_ids...\n");
    for c in &ds.cuts {
        let frags: Vec<String> = c.fragment_ids.iter().map(|f| f.to_string()).collect();
        let _ = writeln!(cuts, "{}, {}, {}, {}, {}", c.tube_id, c.slice, c.gap, c.plane_z_nm, frags.join(", "));
    }
    write(&out.join("cuts.csv"), &cuts)?;
    info!("wrote synthetic store to {} ({} tubes, {} synapses)", out.display(), ds.tubes.len(), ds.synapses.len());
    Ok(())
}

pub fn load_somas(store: &Path) -> Result<Vec<SomaRecord>> {
    parse_soma_table(&read(&store.join(SOMAS))?)
}

pub fn skeletonize_store(store: &Path, cell: Option<SegmentId>, params: &PipelineParams) -> Result<usize> {
    let src = open_store(store)?;
    let somas = load_somas(store)?;
    let dir = store.join(SKELETONS);
    let targets: Vec<&SomaRecord> = match cell {
        Some(id) => vec![somas.iter().find(|s| s.cell_id == id).ok_or_else(|| Error::NotFound(format!("cell {id} in {SOMAS}")))?],
        None => {
            if dir.exists() {
                fs::remove_dir_all(&dir)?;
            }
            somas.iter().collect()
        }
    };
    let mut n = 0;
    for s in targets {
        match skeletonize(&src, s.cell_id, &params.skeleton, Some(s.pos)) {
            Ok(sk) => {
                write(&dir.join(format!("{}.txt", s.cell_id)), &render_skeleton(&sk))?;
                n += 1;
            }
            Err(Error::NotFound(m)) if cell.is_none() => info!("skipping cell {}: {m}", s.cell_id),
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

pub fn load_skeletons(store: &Path) -> Result<BTreeMap<SegmentId, Skeleton>> {
    let dir = store.join(SKELETONS);
    let entries = fs::read_dir(&dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e} (run skeletonize first)", dir.display()))))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry?.path();
        let Some(id) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<SegmentId>().ok()) else { continue };
        out.insert(id, parse_skeleton(id, &read(&path)?)?);
    }
    Ok(out)
}

/// One row per element: `synapse_id, element_id, kind, x, y, z, segment_id,
/// anchor_node` (anchor −1 when unanchored); the pre row leads each synapse.
pub fn render_associated(synapses: &[Synapse]) -> String {
    let mut out = String::from("# synapse_id, element_id, kind, x, y, z, segment_id, anchor_node\n");
    for s in synapses {
        for e in s.elements() {
            let kind = match e.kind {
                ElementKind::Pre => "pre",
                ElementKind::Post => "post",
            };
            let anchor = e.anchor_node.map_or(-1, i64::from);
            let _ = writeln!(out, "{}, {}, {kind}, {}, {}, {}, {}, {anchor}", s.id, e.id, e.pos.x, e.pos.y, e.pos.z, e.segment_id);
        }
    }
    out
}

pub fn parse_associated(text: &str) -> Result<Vec<Synapse>> {
    let mut out: Vec<Synapse> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::Format(format!("{ASSOCIATED} line {}: {what}", i + 1));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 8 {
            return Err(bad("expected 8 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        let sid: u64 = f[0].parse().map_err(|_| bad("bad synapse id"))?;
        let anchor: i64 = f[7].parse().map_err(|_| bad("bad anchor"))?;
        let e = SynapticElement {
            id: f[1].parse().map_err(|_| bad("bad element id"))?,
            kind: match f[2] {
                "pre" => ElementKind::Pre,
                "post" => ElementKind::Post,
                _ => return Err(bad("kind must be pre or post")),
            },
            pos: PhysPoint::new(num(f[3])?, num(f[4])?, num(f[5])?),
            segment_id: f[6].parse().map_err(|_| bad("bad segment id"))?,
            anchor_node: u32::try_from(anchor).ok(),
        };
        match (e.kind, out.last_mut()) {
            (ElementKind::Post, Some(s)) if s.id == sid => s.posts.push(e),
            (ElementKind::Pre, _) => {
                out.push(Synapse { id: sid, pre: e, posts: Vec::new(), status: SynapseStatus::Unvalidated, class_label: None })
            }
            _ => return Err(bad("post element without its synapse's pre row")),
        }
    }
    Ok(out)
}

fn label_lookup(src: &dyn VolumeSource) -> impl Fn(PhysPoint) -> SegmentId + '_ {
    move |p| match src.meta().phys_to_voxel(p) {
        Ok(v) => src.label_at(v).unwrap_or(0),
        Err(_) => 0,
    }
}

pub fn associate_store(store: &Path, synapses_path: &Path, radius: f64) -> Result<usize> {
    let src = open_store(store)?;
    let skeletons = load_skeletons(store)?;
    let mut synapses = parse_synapse_table(&read(synapses_path)?)?;
    let summary = associate(&mut synapses, &skeletons, label_lookup(&src), radius);
    write(&store.join(ASSOCIATED), &render_associated(&synapses))?;
    info!("{} elements anchored, {} unanchored", summary.anchored, summary.unanchored.len());
    Ok(summary.anchored)
}

/// Associated synapses if present, else the raw table associated with the
/// default radius.
pub fn load_synapses(store: &Path, src: &dyn VolumeSource, skeletons: &BTreeMap<SegmentId, Skeleton>, params: &PipelineParams) -> Result<Vec<Synapse>> {
    let assoc = store.join(ASSOCIATED);
    if assoc.exists() {
        return parse_associated(&read(&assoc)?);
    }
    let mut synapses = parse_synapse_table(&read(&store.join(SYNAPSES))?)?;
    associate(&mut synapses, skeletons, label_lookup(src), params.assoc_radius_nm);
    Ok(synapses)
}

pub fn cluster_store(store: &Path, params: &PipelineParams) -> Result<usize> {
    let src = open_store(store)?;
    let skeletons = load_skeletons(store)?;
    let synapses = load_synapses(store, &src, &skeletons, params)?;
    let dir = store.join(CLUSTERS);
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    let mut total = 0;
    for (id, sk) in &skeletons {
        let mine: Vec<Synapse> = synapses.iter().filter(|s| s.element_on(*id).is_some()).cloned().collect();
        let clusters = sort_clusters(form_clusters(sk, &mine, params.cluster_radius_nm)?, sk);
        total += clusters.len();
        write(&dir.join(format!("{id}.txt")), &render_clusters(&clusters))?;
    }
    Ok(total)
}

pub fn detect_store(store: &Path, params: &PipelineParams) -> Result<usize> {
    let src = open_store(store)?;
    let skeletons = load_skeletons(store)?;
    let synapses = load_synapses(store, &src, &skeletons, params)?;
    let cells = skeletons
        .into_iter()
        .map(|(id, skeleton)| {
            let branches = decompose_branches(&skeleton);
            (id, CellArtifacts { skeleton, branches, clusters: Vec::new() })
        })
        .collect();
    let rois = detect_errors(&src, &Artifacts { cells, synapses }, params)?;
    write(&store.join(ROIS), &render_rois(&rois))?;
    Ok(rois.len())
}

pub fn eval_ari(pred: &Path, gt: &Path) -> Result<f64> {
    let p = open_store(pred)?;
    let g = open_store(gt)?;
    if p.meta().dims != g.meta().dims {
        return Err(Error::Param(format!("shape mismatch: {:?} vs {:?}", p.meta().dims, g.meta().dims)));
    }
    adapted_rand_error(&p.read_all_labels()?, &g.read_all_labels()?)
}

pub fn eval_loop(spec_path: &Path, seed: u64, params: &PipelineParams) -> Result<LoopReport> {
    run_synthetic_loop(&SyntheticSpec::parse(&read(spec_path)?)?, seed, params)
}

/// Opens a store for serving: the edit log in `edits.jsonl` is replayed on
/// top of the base, seeded with `rois.txt` (or a fresh detection run).
pub fn open_service(store: &Path, params: PipelineParams) -> Result<CircuitService> {
    let base: Arc<dyn VolumeSource> = Arc::new(open_store(store)?);
    let somas = load_somas(store)?;
    let skeletons = if store.join(SKELETONS).exists() {
        load_skeletons(store)?
    } else {
        circuitproof::pipeline::skeletonize_cells(base.as_ref(), &somas, &params.skeleton)?
    };
    let synapses = load_synapses(store, base.as_ref(), &skeletons, &params)?;
    let rois_path = store.join(ROIS);
    let rois = if rois_path.exists() {
        parse_rois(&read(&rois_path)?)?
    } else {
        let art = analyze(base.as_ref(), skeletons, &synapses, &params, &BTreeMap::new())?;
        detect_errors(base.as_ref(), &art, &params)?
    };
    let log = EditLog::open(base, synapses, rois, store.join(EDITS))?;
    info!("serving {} at version {}", store.display(), log.head());
    Ok(CircuitService::new(log, somas, params))
}

