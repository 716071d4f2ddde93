//! Dense 3D index arithmetic and graph search helpers shared by the
//! skeletonizer, the split partitioner and the mask extractor.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub shape: [usize; 3],
}

impl Grid {
    pub fn new(shape: [usize; 3]) -> Self {
        Self { shape }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.shape[0] * (c[1] + self.shape[1] * c[2])
    }

    pub fn coord(&self, i: usize) -> [usize; 3] {
        let x = i % self.shape[0];
        let y = (i / self.shape[0]) % self.shape[1];
        [x, y, i / (self.shape[0] * self.shape[1])]
    }

    /// 26-neighbors of `i` that lie inside the grid, with the physical step
    /// length for the given voxel size.
    pub fn neighbors26(&self, i: usize, voxel_size: [f64; 3], mut f: impl FnMut(usize, f64)) {
        let c = self.coord(i);
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let d = [dx, dy, dz];
                    let mut n = [0usize; 3];
                    let mut ok = true;
                    for a in 0..3 {
                        let v = c[a] as i64 + d[a];
                        if v < 0 || v >= self.shape[a] as i64 {
                            ok = false;
                            break;
                        }
                        n[a] = v as usize;
                    }
                    if ok {
                        let len = ((dx as f64 * voxel_size[0]).powi(2)
                            + (dy as f64 * voxel_size[1]).powi(2)
                            + (dz as f64 * voxel_size[2]).powi(2))
                        .sqrt();
                        f(self.index(n), len);
                    }
                }
            }
        }
    }
}

/// Min-heap entry ordered by cost, then by a tie-break key, then index.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HeapItem {
    pub cost: f64,
    pub tie: u32,
    pub index: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, o: &Self) -> Ordering {
        // Reversed so BinaryHeap pops the smallest.
        o.cost.total_cmp(&self.cost).then(o.tie.cmp(&self.tie)).then(o.index.cmp(&self.index))
    }
}

/// Single-source shortest paths over the masked voxels with 26-connectivity.
/// `weight(v)` scales the physical length of each step into `v`.
/// Returns (distance, parent); unreachable voxels keep `INFINITY` / `usize::MAX`.
pub fn dijkstra(
    grid: Grid,
    mask: &[bool],
    voxel_size: [f64; 3],
    source: usize,
    weight: impl Fn(usize) -> f64,
) -> (Vec<f64>, Vec<usize>) {
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut parent = vec![usize::MAX; grid.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem { cost: 0.0, tie: 0, index: source });
    while let Some(HeapItem { cost, index, .. }) = heap.pop() {
        if cost > dist[index] {
            continue;
        }
        grid.neighbors26(index, voxel_size, |n, len| {
            if !mask[n] {
                return;
            }
            let c = cost + len * weight(n);
            if c < dist[n] {
                dist[n] = c;
                parent[n] = index;
                heap.push(HeapItem { cost: c, tie: 0, index: n });
            }
        });
    }
    (dist, parent)
}

/// Voxels of `mask` 26-connected to `seed` (empty if the seed is unset).
pub fn component26(grid: Grid, mask: &[bool], seed: usize) -> Vec<bool> {
    let mut out = vec![false; grid.len()];
    if !mask[seed] {
        return out;
    }
    out[seed] = true;
    let mut queue = VecDeque::from([seed]);
    while let Some(i) = queue.pop_front() {
        grid.neighbors26(i, [1.0; 3], |n, _| {
            if mask[n] && !out[n] {
                out[n] = true;
                queue.push_back(n);
            }
        });
    }
    out
}
