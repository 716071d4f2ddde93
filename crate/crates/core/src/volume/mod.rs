//! Image + label volumes: the read interface shared by stores, in-memory
//! volumes and versioned views, plus on-disk chunked storage and the
//! synthetic dataset generator.

mod dense;
mod store;
pub mod synth;
pub mod tables;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use dense::VolumeData;
pub use store::{open_store, write_store, ChunkStore};

use crate::error::{Error, Result};
use crate::model::{SegmentId, VolumeMeta, VoxelCoord, BACKGROUND};

/// Region shape loaded by the inspector on attachment (x, y, z voxels).
pub const INSPECTOR_SHAPE: [usize; 3] = [512, 512, 100];

/// Axis-aligned voxel box, `min` inclusive and `max` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl Bounds {
    pub fn of_voxel(v: VoxelCoord) -> Self {
        let a = v.to_array();
        Self { min: a, max: [a[0] + 1, a[1] + 1, a[2] + 1] }
    }

    pub fn include(&mut self, v: [usize; 3]) {
        for a in 0..3 {
            self.min[a] = self.min[a].min(v[a]);
            self.max[a] = self.max[a].max(v[a] + 1);
        }
    }

    pub fn union(&self, o: &Bounds) -> Bounds {
        Bounds {
            min: std::array::from_fn(|a| self.min[a].min(o.min[a])),
            max: std::array::from_fn(|a| self.max[a].max(o.max[a])),
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        std::array::from_fn(|a| self.max[a] - self.min[a])
    }

    pub fn origin(&self) -> [i64; 3] {
        self.min.map(|m| m as i64)
    }
}

/// A dense box of image and label voxels. Voxels outside the parent volume
/// read as image 0 / label 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Subvolume {
    pub origin: [i64; 3],
    pub shape: [usize; 3],
    pub image: Vec<u8>,
    pub labels: Vec<SegmentId>,
}

impl Subvolume {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, local: [usize; 3]) -> usize {
        local[0] + self.shape[0] * (local[1] + self.shape[1] * local[2])
    }

    pub fn local_coord(&self, index: usize) -> [usize; 3] {
        let x = index % self.shape[0];
        let y = (index / self.shape[0]) % self.shape[1];
        [x, y, index / (self.shape[0] * self.shape[1])]
    }

    pub fn to_local(&self, global: [i64; 3]) -> Option<[usize; 3]> {
        let mut out = [0usize; 3];
        for a in 0..3 {
            let d = global[a] - self.origin[a];
            if d < 0 || d as usize >= self.shape[a] {
                return None;
            }
            out[a] = d as usize;
        }
        Some(out)
    }

    pub fn to_global(&self, local: [usize; 3]) -> [i64; 3] {
        std::array::from_fn(|a| self.origin[a] + local[a] as i64)
    }
}

/// Read access to a labeled image volume.
pub trait VolumeSource: Send + Sync {
    fn meta(&self) -> &VolumeMeta;

    /// Reads the box starting at `origin` (may be negative) with zero padding.
    fn read_box(&self, origin: [i64; 3], shape: [usize; 3]) -> Result<Subvolume>;

    fn read_labels_box(&self, origin: [i64; 3], shape: [usize; 3]) -> Result<Vec<SegmentId>> {
        Ok(self.read_box(origin, shape)?.labels)
    }

    /// Bounding box of every foreground label present.
    fn object_index(&self) -> Result<BTreeMap<SegmentId, Bounds>>;

    fn object_bounds(&self, id: SegmentId) -> Result<Option<Bounds>> {
        Ok(self.object_index()?.get(&id).copied())
    }

    fn label_at(&self, v: VoxelCoord) -> Result<SegmentId> {
        let o = [v.x as i64, v.y as i64, v.z as i64];
        Ok(self.read_labels_box(o, [1, 1, 1])?[0])
    }

    /// The full label array, x-fastest.
    fn read_all_labels(&self) -> Result<Vec<SegmentId>> {
        self.read_labels_box([0; 3], self.meta().dims)
    }
}

/// Origin of a region of `shape` centered on `center`.
pub fn region_origin(center: VoxelCoord, shape: [usize; 3]) -> [i64; 3] {
    let c = center.to_array();
    std::array::from_fn(|a| c[a] as i64 - (shape[a] / 2) as i64)
}

/// Reads a region centered on a voxel; out-of-volume voxels are padded with 0.
pub fn read_region(src: &dyn VolumeSource, center: VoxelCoord, shape: [usize; 3]) -> Result<Subvolume> {
    let meta = src.meta();
    let c = center.to_array();
    if (0..3).any(|a| c[a] >= meta.dims[a]) {
        return Err(Error::Bounds(format!("region center {c:?} outside volume {:?}", meta.dims)));
    }
    if shape.contains(&0) {
        return Err(Error::Param(format!("region shape {shape:?} must be positive")));
    }
    src.read_box(region_origin(center, shape), shape)
}

/// Copies the overlap of a dense source block into a padded destination box.
/// `src_origin`/`dst_origin` are global voxel coordinates.
pub(crate) fn copy_overlap<T: Copy>(
    src: &[T],
    src_origin: [i64; 3],
    src_shape: [usize; 3],
    dst: &mut [T],
    dst_origin: [i64; 3],
    dst_shape: [usize; 3],
) {
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for a in 0..3 {
        lo[a] = src_origin[a].max(dst_origin[a]);
        hi[a] = (src_origin[a] + src_shape[a] as i64).min(dst_origin[a] + dst_shape[a] as i64);
        if hi[a] <= lo[a] {
            return;
        }
    }
    let run = (hi[0] - lo[0]) as usize;
    for z in lo[2]..hi[2] {
        for y in lo[1]..hi[1] {
            let sx = (lo[0] - src_origin[0]) as usize;
            let sy = (y - src_origin[1]) as usize;
            let sz = (z - src_origin[2]) as usize;
            let s = sx + src_shape[0] * (sy + src_shape[1] * sz);
            let dx = (lo[0] - dst_origin[0]) as usize;
            let dy = (y - dst_origin[1]) as usize;
            let dz = (z - dst_origin[2]) as usize;
            let d = dx + dst_shape[0] * (dy + dst_shape[1] * dz);
            dst[d..d + run].copy_from_slice(&src[s..s + run]);
        }
    }
}

/// Accumulates per-label bounding boxes over a block of labels.
pub(crate) fn index_block(
    labels: &[SegmentId],
    origin: [usize; 3],
    shape: [usize; 3],
    into: &mut BTreeMap<SegmentId, Bounds>,
) {
    for z in 0..shape[2] {
        for y in 0..shape[1] {
            let row = shape[0] * (y + shape[1] * z);
            let mut x = 0;
            while x < shape[0] {
                let l = labels[row + x];
                let start = x;
                while x < shape[0] && labels[row + x] == l {
                    x += 1;
                }
                if l == BACKGROUND {
                    continue;
                }
                let gy = origin[1] + y;
                let gz = origin[2] + z;
                let a = [origin[0] + start, gy, gz];
                let b = [origin[0] + x - 1, gy, gz];
                let entry = into.entry(l).or_insert_with(|| Bounds { min: a, max: [a[0] + 1, gy + 1, gz + 1] });
                entry.include(a);
                entry.include(b);
            }
        }
    }
}
