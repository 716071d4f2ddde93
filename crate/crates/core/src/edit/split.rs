use crate::error::{Error, Result};
use crate::grid::{dijkstra, Grid};

const TIE_EPS: f64 = 1e-9;

/// Assigns each mask voxel to the seed with the smallest geodesic distance
/// inside the mask (26-connectivity, physical step lengths), ties to the
/// lower seed index. Voxels no seed can reach go to seed 0. Returns `None`
/// outside the mask.
pub fn split_partition(mask: &[bool], shape: [usize; 3], voxel_size: [f64; 3], seeds: &[[usize; 3]]) -> Result<Vec<Option<usize>>> {
    let grid = Grid::new(shape);
    if mask.len() != grid.len() {
        return Err(Error::Param("mask length does not match shape".into()));
    }
    if seeds.len() < 2 {
        return Err(Error::Validation("a split needs at least two seeds".into()));
    }
    let mut idx = Vec::with_capacity(seeds.len());
    for s in seeds {
        if (0..3).any(|a| s[a] >= shape[a]) || !mask[grid.index(*s)] {
            return Err(Error::Validation(format!("split seed {s:?} lies outside the object")));
        }
        let i = grid.index(*s);
        if idx.contains(&i) {
            return Err(Error::Validation(format!("split seeds coincide at {s:?}")));
        }
        idx.push(i);
    }
    let fields: Vec<Vec<f64>> = idx.iter().map(|&s| dijkstra(grid, mask, voxel_size, s, |_| 1.0).0).collect();
    Ok((0..grid.len())
        .map(|v| {
            if !mask[v] {
                return None;
            }
            let mut best = 0usize;
            for k in 1..fields.len() {
                if fields[k][v] < fields[best][v] - TIE_EPS {
                    best = k;
                }
            }
            Some(if fields[best][v].is_finite() { best } else { 0 })
        })
        .collect())
}
