//! Skeleton text files: `node_id, x, y, z, radius, parent_id` per line (nm),
//! parent `-1` for the root.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{PhysPoint, SegmentId, Skeleton, SkeletonNode};

pub fn render_skeleton(s: &Skeleton) -> String {
    let mut out = format!("# object {}\n# node_id, x, y, z, radius, parent_id\n", s.object_id);
    for n in &s.nodes {
        let parent = n.parent.map_or(-1, i64::from);
        let _ = writeln!(out, "{}, {}, {}, {}, {}, {}", n.id, n.pos.x, n.pos.y, n.pos.z, n.radius, parent);
    }
    out
}

pub fn parse_skeleton(object_id: SegmentId, text: &str) -> Result<Skeleton> {
    let mut nodes = Vec::new();
    let mut root = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::Format(format!("skeleton line {}: {line:?}", i + 1));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(bad());
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad());
        let id: u32 = f[0].parse().map_err(|_| bad())?;
        let parent: i64 = f[5].parse().map_err(|_| bad())?;
        let parent = if parent < 0 {
            if root.replace(id).is_some() {
                return Err(Error::Format("skeleton file has more than one root".into()));
            }
            None
        } else {
            Some(u32::try_from(parent).map_err(|_| bad())?)
        };
        nodes.push(SkeletonNode { id, pos: PhysPoint::new(num(1)?, num(2)?, num(3)?), radius: num(4)?, parent });
    }
    let root_id = root.ok_or_else(|| Error::Format("skeleton file has no root".into()))?;
    nodes.sort_by_key(|n| n.id);
    Ok(Skeleton { object_id, nodes, root_id })
}
