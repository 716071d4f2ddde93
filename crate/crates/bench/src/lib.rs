//! Fixtures shared by the benchmarks.

use circuitproof::volume::synth::{generate_synthetic, InjectedCut, SyntheticDataset, SyntheticSpec};

/// Tubes with one cut, sized so a full pipeline run takes well under a second.
pub fn small_dataset(seed: u64) -> SyntheticDataset {
    let spec = SyntheticSpec {
        dims: [128, 128, 128],
        tube_count: 6,
        synapse_rate: 1.0,
        injected_cuts: vec![InjectedCut { tube: 0, slice: 60, gap: 2, dark_image: false }],
        ..SyntheticSpec::default()
    };
    generate_synthetic(&spec, seed).expect("valid bench spec")
}

/// Solid ball mask of the given radius in voxels, centered in a cube.
pub fn ball_mask(radius: usize) -> (Vec<bool>, [usize; 3]) {
    let n = 2 * radius + 3;
    let c = (n / 2) as f64;
    let r2 = (radius * radius) as f64;
    let mut mask = Vec::with_capacity(n * n * n);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let d2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2);
                mask.push(d2 <= r2);
            }
        }
    }
    (mask, [n; 3])
}
