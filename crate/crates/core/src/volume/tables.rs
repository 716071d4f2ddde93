//! Line-delimited synapse and soma tables (nm coordinates).
//!
//! Synapse rows are `id, pre_x, pre_y, pre_z, pre_seg, post_x, post_y, post_z, post_seg`;
//! a synapse with several postsynaptic elements spans consecutive rows with
//! the same id and presynaptic fields. Element ids are assigned in file order.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ElementKind, PhysPoint, SegmentId, Synapse, SynapseStatus, SynapticElement};

/// A proofreading entry point: a cell and its soma location.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SomaRecord {
    pub cell_id: SegmentId,
    pub pos: PhysPoint,
}

fn fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn num<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Format(format!("line {lineno}: bad number {s:?}")))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_synapse_table(text: &str) -> Result<Vec<Synapse>> {
    let mut out: Vec<Synapse> = Vec::new();
    let mut next_element = 1u64;
    for (lineno, line) in data_lines(text) {
        let f = fields(line);
        if f.len() != 9 {
            return Err(Error::Format(format!("line {lineno}: expected 9 fields, got {}", f.len())));
        }
        let id: u64 = num(f[0], lineno)?;
        let pre_pos = PhysPoint::new(num(f[1], lineno)?, num(f[2], lineno)?, num(f[3], lineno)?);
        let pre_seg: u64 = num(f[4], lineno)?;
        let post_pos = PhysPoint::new(num(f[5], lineno)?, num(f[6], lineno)?, num(f[7], lineno)?);
        let post_seg: u64 = num(f[8], lineno)?;
        if !pre_pos.is_finite() || !post_pos.is_finite() {
            return Err(Error::Format(format!("line {lineno}: non-finite coordinate")));
        }
        match out.last_mut() {
            Some(s) if s.id == id => {
                if s.pre.pos != pre_pos || s.pre.segment_id != pre_seg {
                    return Err(Error::Format(format!("line {lineno}: synapse {id} repeats with a different pre")));
                }
            }
            _ => {
                if out.iter().any(|s| s.id == id) {
                    return Err(Error::Format(format!("line {lineno}: synapse {id} rows are not contiguous")));
                }
                let pre = SynapticElement {
                    id: next_element,
                    kind: ElementKind::Pre,
                    pos: pre_pos,
                    segment_id: pre_seg,
                    anchor_node: None,
                };
                next_element += 1;
                out.push(Synapse { id, pre, posts: Vec::new(), status: SynapseStatus::Unvalidated, class_label: None });
            }
        }
        let s = out.last_mut().expect("just pushed");
        s.posts.push(SynapticElement {
            id: next_element,
            kind: ElementKind::Post,
            pos: post_pos,
            segment_id: post_seg,
            anchor_node: None,
        });
        next_element += 1;
    }
    Ok(out)
}

pub fn render_synapse_table(synapses: &[Synapse]) -> String {
    let mut out = String::from("# id, pre_x, pre_y, pre_z, pre_seg, post_x, post_y, post_z, post_seg\n");
    for s in synapses {
        for p in &s.posts {
            let _ = writeln!(
                out,
                "{}, {}, {}, {}, {}, {}, {}, {}, {}",
                s.id, s.pre.pos.x, s.pre.pos.y, s.pre.pos.z, s.pre.segment_id, p.pos.x, p.pos.y, p.pos.z, p.segment_id
            );
        }
    }
    out
}

pub fn parse_soma_table(text: &str) -> Result<Vec<SomaRecord>> {
    data_lines(text)
        .map(|(lineno, line)| {
            let f = fields(line);
            if f.len() != 4 {
                return Err(Error::Format(format!("line {lineno}: expected 4 fields, got {}", f.len())));
            }
            Ok(SomaRecord {
                cell_id: num(f[0], lineno)?,
                pos: PhysPoint::new(num(f[1], lineno)?, num(f[2], lineno)?, num(f[3], lineno)?),
            })
        })
        .collect()
}

pub fn render_soma_table(somas: &[SomaRecord]) -> String {
    let mut out = String::from("# cell_id, x, y, z\n");
    for s in somas {
        let _ = writeln!(out, "{}, {}, {}, {}", s.cell_id, s.pos.x, s.pos.y, s.pos.z);
    }
    out
}
