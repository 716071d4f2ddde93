//! Uniform-grid point index for radius queries.

use std::collections::HashMap;

use crate::model::PhysPoint;

/// Distances closer than this are treated as ties.
pub const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PointIndex {
    cell: f64,
    points: Vec<PhysPoint>,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl PointIndex {
    pub fn new(points: Vec<PhysPoint>, cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(cell, *p)).or_default().push(i);
        }
        Self { cell, points, buckets }
    }

    fn key(cell: f64, p: PhysPoint) -> [i64; 3] {
        p.to_array().map(|c| (c / cell).floor() as i64)
    }

    pub fn points(&self) -> &[PhysPoint] {
        &self.points
    }

    /// Visits every point within `radius` of `p` (inclusive), in no particular order.
    pub fn for_each_within(&self, p: PhysPoint, radius: f64, mut f: impl FnMut(usize, f64)) {
        let lo = Self::key(self.cell, p - PhysPoint::new(radius, radius, radius));
        let hi = Self::key(self.cell, p + PhysPoint::new(radius, radius, radius));
        // Fall back to a scan when the query box spans more cells than points.
        let cells = (0..3).map(|a| (hi[a] - lo[a] + 1) as f64).product::<f64>();
        if cells > self.points.len() as f64 {
            for (i, q) in self.points.iter().enumerate() {
                let d = q.distance(p);
                if d <= radius {
                    f(i, d);
                }
            }
            return;
        }
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    if let Some(b) = self.buckets.get(&[x, y, z]) {
                        for &i in b {
                            let d = self.points[i].distance(p);
                            if d <= radius {
                                f(i, d);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Nearest point within `radius`, ties (to [`TIE_EPS`]) to the lower index.
    pub fn nearest_within(&self, p: PhysPoint, radius: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.for_each_within(p, radius, |i, d| {
            if closer(d, i, best) {
                best = Some((i, d));
            }
        });
        best
    }

    pub fn any_within(&self, p: PhysPoint, radius: f64) -> bool {
        let mut found = false;
        self.for_each_within(p, radius, |_, _| found = true);
        found
    }
}

/// Whether candidate `(i, d)` beats `best` under the lower-index tie rule.
pub fn closer<I: Ord + Copy>(d: f64, i: I, best: Option<(I, f64)>) -> bool {
    match best {
        None => true,
        Some((bi, bd)) => d < bd - TIE_EPS || ((d - bd).abs() <= TIE_EPS && i < bi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_scan(pts in proptest::collection::vec((0.0f64..1000.0, 0.0f64..1000.0, 0.0f64..300.0), 1..60),
                        q in (0.0f64..1000.0, 0.0f64..1000.0, 0.0f64..300.0), r in 1.0f64..400.0) {
            let points: Vec<PhysPoint> = pts.iter().map(|&(x, y, z)| PhysPoint::new(x, y, z)).collect();
            let q = PhysPoint::new(q.0, q.1, q.2);
            let idx = PointIndex::new(points.clone(), 97.0);
            let mut best = None;
            for (i, p) in points.iter().enumerate() {
                let d = p.distance(q);
                if d <= r && closer(d, i, best) {
                    best = Some((i, d));
                }
            }
            prop_assert_eq!(idx.nearest_within(q, r).map(|b| b.0), best.map(|b| b.0));
        }
    }
}
