//! Exact Euclidean distance-to-boundary field in physical units, computed
//! with separable lower-envelope passes (one per axis).

const FAR: f64 = 1e30;

/// For each voxel of `mask`, the distance in nm from its center to the
/// nearest background voxel center (0 for background). Voxels outside the
/// array are not considered; pad the mask if the box edge is a boundary.
pub fn distance_to_boundary(mask: &[bool], shape: [usize; 3], voxel_size: [f64; 3]) -> Vec<f64> {
    let n: usize = shape.iter().product();
    assert_eq!(mask.len(), n, "mask length must match shape");
    let mut sq: Vec<f64> = mask.iter().map(|&m| if m { FAR } else { 0.0 }).collect();
    let longest = *shape.iter().max().unwrap_or(&0);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0; longest + 1];
    let strides = [1, shape[0], shape[0] * shape[1]];
    for axis in 0..3 {
        let len = shape[axis];
        let stride = strides[axis];
        let w = voxel_size[axis];
        let (oa, ob) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for j in 0..shape[ob] {
            for i in 0..shape[oa] {
                let base = i * strides[oa] + j * strides[ob];
                for k in 0..len {
                    line[k] = sq[base + k * stride];
                }
                lower_envelope(&line[..len], w, &mut out[..len], &mut v, &mut z);
                for k in 0..len {
                    sq[base + k * stride] = out[k];
                }
            }
        }
    }
    sq.into_iter().map(|d| if d >= FAR { f64::INFINITY } else { d.sqrt() }).collect()
}

/// One-dimensional squared distance transform of sampled function `f` with
/// sample spacing `w`.
fn lower_envelope(f: &[f64], w: f64, out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let w2 = w * w;
    let key = |q: usize| f[q] + (q * q) as f64 * w2;
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s = (key(q) - key(v[k])) / (2.0 * w2 * (q - v[k]) as f64);
        while s <= z[k] {
            k -= 1;
            s = (key(q) - key(v[k])) / (2.0 * w2 * (q - v[k]) as f64);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = (q as f64 - p as f64) * w;
        *o = (d * d + f[p]).min(FAR);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(mask: &[bool], shape: [usize; 3], vs: [f64; 3]) -> Vec<f64> {
        let idx = |x: usize, y: usize, z: usize| x + shape[0] * (y + shape[1] * z);
        let mut bg = Vec::new();
        for z in 0..shape[2] {
            for y in 0..shape[1] {
                for x in 0..shape[0] {
                    if !mask[idx(x, y, z)] {
                        bg.push([x as f64 * vs[0], y as f64 * vs[1], z as f64 * vs[2]]);
                    }
                }
            }
        }
        let mut out = vec![0.0; mask.len()];
        for z in 0..shape[2] {
            for y in 0..shape[1] {
                for x in 0..shape[0] {
                    let i = idx(x, y, z);
                    if mask[i] {
                        let p = [x as f64 * vs[0], y as f64 * vs[1], z as f64 * vs[2]];
                        out[i] = bg
                            .iter()
                            .map(|b| ((p[0] - b[0]).powi(2) + (p[1] - b[1]).powi(2) + (p[2] - b[2]).powi(2)).sqrt())
                            .fold(f64::INFINITY, f64::min);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn single_line_tube() {
        let shape = [11, 3, 3];
        let mut mask = vec![false; 99];
        for x in 1..10 {
            mask[x + 11 * (1 + 3)] = true;
        }
        let d = distance_to_boundary(&mask, shape, [10.0; 3]);
        for x in 1..10 {
            assert_eq!(d[x + 11 * 4], 10.0);
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force(bits in proptest::collection::vec(any::<bool>(), 5 * 4 * 6),
                               vx in 1.0f64..20.0, vz in 1.0f64..60.0) {
            let shape = [5, 4, 6];
            let mut mask = bits;
            mask[0] = false;
            let vs = [vx, vx * 0.7, vz];
            let fast = distance_to_boundary(&mask, shape, vs);
            let slow = brute(&mask, shape, vs);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }
}
