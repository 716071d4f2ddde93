use crate::error::Result;
use crate::grid::{component26, Grid};
use crate::volume::Subvolume;

/// Produces a binary object mask over a window from a seed voxel. The mask
/// is empty or one 26-connected component containing the seed.
pub trait MaskExtractor: Send + Sync {
    /// `seed` is in window-local coordinates.
    fn extract(&self, window: &Subvolume, seed: [usize; 3]) -> Result<Vec<bool>>;
}

/// Intensity threshold followed by a closing along the slice axis that fills
/// dark runs of up to `bridge_slices` slices between bright voxels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdExtractor {
    pub threshold: u8,
    pub bridge_slices: usize,
}

impl Default for ThresholdExtractor {
    fn default() -> Self {
        Self { threshold: 115, bridge_slices: 3 }
    }
}

pub fn default_mask_extractor(threshold: u8, bridge_slices: usize) -> ThresholdExtractor {
    ThresholdExtractor { threshold, bridge_slices }
}

impl ThresholdExtractor {
    /// Binarized and closed window, before component selection.
    pub fn closed(&self, window: &Subvolume) -> Vec<bool> {
        let [w, h, d] = window.shape;
        let mut bin: Vec<bool> = window.image.iter().map(|&v| v >= self.threshold).collect();
        let plane = w * h;
        for col in 0..plane {
            let mut last_true: Option<usize> = None;
            for z in 0..d {
                if !bin[col + z * plane] {
                    continue;
                }
                if let Some(lt) = last_true {
                    let gap = z - lt - 1;
                    if gap > 0 && gap <= self.bridge_slices {
                        for zz in lt + 1..z {
                            bin[col + zz * plane] = true;
                        }
                    }
                }
                last_true = Some(z);
            }
        }
        bin
    }
}

impl MaskExtractor for ThresholdExtractor {
    fn extract(&self, window: &Subvolume, seed: [usize; 3]) -> Result<Vec<bool>> {
        let grid = Grid::new(window.shape);
        let s = grid.index(seed);
        if window.image[s] < self.threshold {
            return Ok(vec![false; grid.len()]);
        }
        Ok(component26(grid, &self.closed(window), s))
    }
}
