use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::{copy_overlap, index_block, Bounds, Subvolume, VolumeSource};
use crate::error::{Error, Result};
use crate::model::{SegmentId, VolumeMeta, VoxelCoord};

/// A fully resident volume. Used for synthetic data and small fixtures.
#[derive(Debug)]
pub struct VolumeData {
    meta: VolumeMeta,
    pub image: Vec<u8>,
    pub labels: Vec<SegmentId>,
    index: OnceLock<BTreeMap<SegmentId, Bounds>>,
}

impl Clone for VolumeData {
    fn clone(&self) -> Self {
        Self::new(self.meta.clone(), self.image.clone(), self.labels.clone()).expect("already validated")
    }
}

impl PartialEq for VolumeData {
    fn eq(&self, o: &Self) -> bool {
        self.meta == o.meta && self.image == o.image && self.labels == o.labels
    }
}

impl VolumeData {
    pub fn new(meta: VolumeMeta, image: Vec<u8>, labels: Vec<SegmentId>) -> Result<Self> {
        meta.validate()?;
        let n = meta.voxel_count();
        if image.len() != n || labels.len() != n {
            return Err(Error::Format(format!(
                "array lengths {} / {} do not match {} voxels",
                image.len(),
                labels.len(),
                n
            )));
        }
        Ok(Self { meta, image, labels, index: OnceLock::new() })
    }

    pub fn zeros(meta: VolumeMeta) -> Self {
        let n = meta.voxel_count();
        Self::new(meta, vec![0; n], vec![0; n]).expect("lengths match")
    }

    pub fn label(&self, v: VoxelCoord) -> SegmentId {
        self.labels[self.meta.linear_index(v)]
    }

    pub fn set(&mut self, v: VoxelCoord, image: u8, label: SegmentId) {
        let i = self.meta.linear_index(v);
        self.image[i] = image;
        self.labels[i] = label;
        self.index = OnceLock::new();
    }

    /// Drops the cached object index after direct array mutation.
    pub fn invalidate_index(&mut self) {
        self.index = OnceLock::new();
    }
}

impl VolumeSource for VolumeData {
    fn meta(&self) -> &VolumeMeta {
        &self.meta
    }

    fn read_box(&self, origin: [i64; 3], shape: [usize; 3]) -> Result<Subvolume> {
        let n: usize = shape.iter().product();
        let mut image = vec![0u8; n];
        let mut labels = vec![0u64; n];
        copy_overlap(&self.image, [0; 3], self.meta.dims, &mut image, origin, shape);
        copy_overlap(&self.labels, [0; 3], self.meta.dims, &mut labels, origin, shape);
        Ok(Subvolume { origin, shape, image, labels })
    }

    fn read_labels_box(&self, origin: [i64; 3], shape: [usize; 3]) -> Result<Vec<SegmentId>> {
        let mut labels = vec![0u64; shape.iter().product()];
        copy_overlap(&self.labels, [0; 3], self.meta.dims, &mut labels, origin, shape);
        Ok(labels)
    }

    fn object_index(&self) -> Result<BTreeMap<SegmentId, Bounds>> {
        Ok(self
            .index
            .get_or_init(|| {
                let mut m = BTreeMap::new();
                index_block(&self.labels, [0; 3], self.meta.dims, &mut m);
                m
            })
            .clone())
    }

    fn label_at(&self, v: VoxelCoord) -> Result<SegmentId> {
        if !self.meta.contains_voxel([v.x as i64, v.y as i64, v.z as i64]) {
            return Err(Error::Bounds(format!("voxel {v:?} outside volume")));
        }
        Ok(self.label(v))
    }

    fn read_all_labels(&self) -> Result<Vec<SegmentId>> {
        Ok(self.labels.clone())
    }
}
