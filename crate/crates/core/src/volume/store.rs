//! Directory layout:
//!
//! ```text
//! meta.txt                      dims, voxel_size, chunk_shape, dtypes
//! image/<cx>_<cy>_<cz>.raw      u8, x-fastest, chunk clipped to the volume
//! labels/<cx>_<cy>_<cz>.raw     u64 little-endian, same ordering
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use super::{copy_overlap, index_block, Bounds, Subvolume, VolumeData, VolumeSource};
use crate::error::{Error, Result};
use crate::kv::KvDoc;
use crate::model::{SegmentId, VolumeMeta};

const META_FILE: &str = "meta.txt";

type ChunkKey = [usize; 3];

/// Read-only chunked store; chunks are loaded on first touch and cached.
#[derive(Debug)]
pub struct ChunkStore {
    dir: PathBuf,
    meta: VolumeMeta,
    image_chunks: Mutex<HashMap<ChunkKey, Arc<Vec<u8>>>>,
    label_chunks: Mutex<HashMap<ChunkKey, Arc<Vec<SegmentId>>>>,
    index: OnceLock<BTreeMap<SegmentId, Bounds>>,
}

/// Opens a store directory written by [`write_store`].
pub fn open_store(path: impl AsRef<Path>) -> Result<ChunkStore> {
    ChunkStore::open(path)
}

fn read_meta(dir: &Path) -> Result<VolumeMeta> {
    let text = fs::read_to_string(dir.join(META_FILE))
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", dir.join(META_FILE).display())))?;
    let doc = KvDoc::parse(&text)?;
    let dims = doc.triple::<usize>("dims")?.ok_or_else(|| Error::Format("meta.txt: missing dims".into()))?;
    let voxel_size =
        doc.triple::<f64>("voxel_size")?.ok_or_else(|| Error::Format("meta.txt: missing voxel_size".into()))?;
    let chunk_shape = doc.triple::<usize>("chunk_shape")?.unwrap_or(VolumeMeta::DEFAULT_CHUNK_SHAPE);
    for (key, expected) in [("image_dtype", VolumeMeta::IMAGE_DTYPE), ("label_dtype", VolumeMeta::LABEL_DTYPE)] {
        if let Some(v) = doc.get(key) {
            if v != expected {
                return Err(Error::Format(format!("meta.txt: unsupported {key} {v}")));
            }
        }
    }
    let meta = VolumeMeta { dims, voxel_size, chunk_shape };
    meta.validate()?;
    Ok(meta)
}

fn chunk_name(key: ChunkKey) -> String {
    format!("{}_{}_{}.raw", key[0], key[1], key[2])
}

fn chunk_extent(meta: &VolumeMeta, key: ChunkKey) -> ([usize; 3], [usize; 3]) {
    let origin: [usize; 3] = std::array::from_fn(|a| key[a] * meta.chunk_shape[a]);
    let shape = std::array::from_fn(|a| meta.chunk_shape[a].min(meta.dims[a] - origin[a]));
    (origin, shape)
}

fn chunk_grid(meta: &VolumeMeta) -> [usize; 3] {
    std::array::from_fn(|a| meta.dims[a].div_ceil(meta.chunk_shape[a]))
}

impl ChunkStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let dir = path.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("no store directory at {}", dir.display()))));
        }
        let meta = read_meta(&dir)?;
        for sub in ["image", "labels"] {
            if !dir.join(sub).is_dir() {
                return Err(Error::Format(format!("store {} lacks {sub}/", dir.display())));
            }
        }
        Ok(Self {
            dir,
            meta,
            image_chunks: Mutex::new(HashMap::new()),
            label_chunks: Mutex::new(HashMap::new()),
            index: OnceLock::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn load_raw(&self, sub: &str, key: ChunkKey, bytes_per_voxel: usize) -> Result<Vec<u8>> {
        let path = self.dir.join(sub).join(chunk_name(key));
        let bytes = fs::read(&path).map_err(|e| Error::Format(format!("missing chunk {}: {e}", path.display())))?;
        let (_, shape) = chunk_extent(&self.meta, key);
        let expected = shape.iter().product::<usize>() * bytes_per_voxel;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "chunk {} has {} bytes, expected {expected}",
                path.display(),
                bytes.len()
            )));
        }
        Ok(bytes)
    }

    fn image_chunk(&self, key: ChunkKey) -> Result<Arc<Vec<u8>>> {
        if let Some(c) = self.image_chunks.lock().unwrap().get(&key) {
            return Ok(c.clone());
        }
        let data = Arc::new(self.load_raw("image", key, 1)?);
        self.image_chunks.lock().unwrap().insert(key, data.clone());
        Ok(data)
    }

    fn label_chunk(&self, key: ChunkKey) -> Result<Arc<Vec<SegmentId>>> {
        if let Some(c) = self.label_chunks.lock().unwrap().get(&key) {
            return Ok(c.clone());
        }
        let bytes = self.load_raw("labels", key, 8)?;
        let data: Vec<SegmentId> =
            bytes.chunks_exact(8).map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
        let data = Arc::new(data);
        self.label_chunks.lock().unwrap().insert(key, data.clone());
        Ok(data)
    }

    fn chunks_overlapping(&self, origin: [i64; 3], shape: [usize; 3]) -> Vec<ChunkKey> {
        let grid = chunk_grid(&self.meta);
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            let start = origin[a].max(0);
            let end = (origin[a] + shape[a] as i64).min(self.meta.dims[a] as i64);
            if end <= start {
                return Vec::new();
            }
            lo[a] = start as usize / self.meta.chunk_shape[a];
            hi[a] = ((end as usize - 1) / self.meta.chunk_shape[a] + 1).min(grid[a]);
        }
        let mut keys = Vec::new();
        for cz in lo[2]..hi[2] {
            for cy in lo[1]..hi[1] {
                for cx in lo[0]..hi[0] {
                    keys.push([cx, cy, cz]);
                }
            }
        }
        keys
    }

    fn fill<T: Copy + Send + Sync>(
        &self,
        out: &mut [T],
        origin: [i64; 3],
        shape: [usize; 3],
        load: impl Fn(ChunkKey) -> Result<Arc<Vec<T>>> + Sync,
    ) -> Result<()> {
        let keys = self.chunks_overlapping(origin, shape);
        let chunks: Vec<(ChunkKey, Arc<Vec<T>>)> =
            keys.into_par_iter().map(|k| load(k).map(|c| (k, c))).collect::<Result<_>>()?;
        for (key, chunk) in chunks {
            let (corigin, cshape) = chunk_extent(&self.meta, key);
            copy_overlap(&chunk, corigin.map(|c| c as i64), cshape, out, origin, shape);
        }
        Ok(())
    }

    /// Loads the whole store into memory.
    pub fn to_volume_data(&self) -> Result<VolumeData> {
        let sub = self.read_box([0; 3], self.meta.dims)?;
        VolumeData::new(self.meta.clone(), sub.image, sub.labels)
    }
}

impl VolumeSource for ChunkStore {
    fn meta(&self) -> &VolumeMeta {
        &self.meta
    }

    fn read_box(&self, origin: [i64; 3], shape: [usize; 3]) -> Result<Subvolume> {
        let n: usize = shape.iter().product();
        let mut image = vec![0u8; n];
        let mut labels = vec![0u64; n];
        self.fill(&mut image, origin, shape, |k| self.image_chunk(k))?;
        self.fill(&mut labels, origin, shape, |k| self.label_chunk(k))?;
        Ok(Subvolume { origin, shape, image, labels })
    }

    fn read_labels_box(&self, origin: [i64; 3], shape: [usize; 3]) -> Result<Vec<SegmentId>> {
        let mut labels = vec![0u64; shape.iter().product()];
        self.fill(&mut labels, origin, shape, |k| self.label_chunk(k))?;
        Ok(labels)
    }

    fn object_index(&self) -> Result<BTreeMap<SegmentId, Bounds>> {
        if let Some(ix) = self.index.get() {
            return Ok(ix.clone());
        }
        let mut m = BTreeMap::new();
        for key in self.chunks_overlapping([0; 3], self.meta.dims) {
            let (origin, shape) = chunk_extent(&self.meta, key);
            index_block(&self.label_chunk(key)?, origin, shape, &mut m);
        }
        Ok(self.index.get_or_init(|| m).clone())
    }
}

/// Writes a volume as a chunked store directory.
pub fn write_store(dir: impl AsRef<Path>, data: &VolumeData) -> Result<()> {
    let dir = dir.as_ref();
    let meta = data.meta();
    fs::create_dir_all(dir.join("image"))?;
    fs::create_dir_all(dir.join("labels"))?;
    let mut doc = KvDoc::new();
    doc.push("dims", format!("{} {} {}", meta.dims[0], meta.dims[1], meta.dims[2]));
    doc.push("voxel_size", format!("{} {} {}", meta.voxel_size[0], meta.voxel_size[1], meta.voxel_size[2]));
    doc.push("chunk_shape", format!("{} {} {}", meta.chunk_shape[0], meta.chunk_shape[1], meta.chunk_shape[2]));
    doc.push("image_dtype", VolumeMeta::IMAGE_DTYPE);
    doc.push("label_dtype", VolumeMeta::LABEL_DTYPE);
    let grid = chunk_grid(meta);
    let keys: Vec<ChunkKey> = (0..grid[2])
        .flat_map(|cz| (0..grid[1]).flat_map(move |cy| (0..grid[0]).map(move |cx| [cx, cy, cz])))
        .collect();
    keys.par_iter().try_for_each(|&key| -> Result<()> {
        let (origin, shape) = chunk_extent(meta, key);
        let n: usize = shape.iter().product();
        let o = origin.map(|c| c as i64);
        let mut image = vec![0u8; n];
        let mut labels = vec![0u64; n];
        copy_overlap(&data.image, [0; 3], meta.dims, &mut image, o, shape);
        copy_overlap(&data.labels, [0; 3], meta.dims, &mut labels, o, shape);
        fs::write(dir.join("image").join(chunk_name(key)), &image)?;
        let mut bytes = Vec::with_capacity(n * 8);
        for l in labels {
            bytes.extend_from_slice(&l.to_le_bytes());
        }
        fs::write(dir.join("labels").join(chunk_name(key)), &bytes)?;
        Ok(())
    })?;
    // Metadata last, so a store is only openable once complete.
    let mut f = fs::File::create(dir.join(META_FILE))?;
    f.write_all(doc.render().as_bytes())?;
    f.sync_all()?;
    Ok(())
}
