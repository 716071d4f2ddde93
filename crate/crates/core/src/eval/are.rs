use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::{SegmentId, SynapseId, SynapseStatus, BACKGROUND};

fn pairs(n: u64) -> u128 {
    let n = n as u128;
    n * n.saturating_sub(1) / 2
}

fn from_counts(both: u128, pred: u128, gt: u128, fg: usize) -> f64 {
    if fg < 2 {
        return 0.0;
    }
    if gt == 0 {
        return if pred == 0 { 0.0 } else { 1.0 };
    }
    if pred == 0 || both == 0 {
        return 1.0;
    }
    // F = 2pr/(p+r) with p = both/pred and r = both/gt.
    1.0 - (2 * both) as f64 / (pred + gt) as f64
}

/// One minus the pairwise F-score over voxels with a nonzero ground-truth
/// label. Predicted background counts as an ordinary label.
pub fn adapted_rand_error(pred: &[SegmentId], gt: &[SegmentId]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::Param(format!("shape mismatch: {} vs {} voxels", pred.len(), gt.len())));
    }
    let mut joint: HashMap<(SegmentId, SegmentId), u64> = HashMap::new();
    let mut pc: HashMap<SegmentId, u64> = HashMap::new();
    let mut gc: HashMap<SegmentId, u64> = HashMap::new();
    let mut fg = 0usize;
    let mut last: Option<((SegmentId, SegmentId), u64)> = None;
    for (&p, &g) in pred.iter().zip(gt) {
        if g == BACKGROUND {
            continue;
        }
        fg += 1;
        // Long runs of equal pairs are common; count them before hashing.
        match &mut last {
            Some((k, n)) if *k == (p, g) => *n += 1,
            _ => {
                if let Some((k, n)) = last.take() {
                    *joint.entry(k).or_default() += n;
                }
                last = Some(((p, g), 1));
            }
        }
    }
    if let Some((k, n)) = last {
        *joint.entry(k).or_default() += n;
    }
    for (&(p, g), &n) in &joint {
        *pc.entry(p).or_default() += n;
        *gc.entry(g).or_default() += n;
    }
    let both: u128 = joint.values().map(|&n| pairs(n)).sum();
    let pp: u128 = pc.values().map(|&n| pairs(n)).sum();
    let gp: u128 = gc.values().map(|&n| pairs(n)).sum();
    Ok(from_counts(both, pp, gp, fg))
}

/// The literal quadratic pair-count definition, for small inputs.
pub fn adapted_rand_error_pairs(pred: &[SegmentId], gt: &[SegmentId]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::Param("shape mismatch".into()));
    }
    let fg: Vec<usize> = (0..gt.len()).filter(|&i| gt[i] != BACKGROUND).collect();
    let (mut both, mut pp, mut gp) = (0u128, 0u128, 0u128);
    for (a, &i) in fg.iter().enumerate() {
        for &j in &fg[a + 1..] {
            let sp = pred[i] == pred[j];
            let sg = gt[i] == gt[j];
            pp += u128::from(sp);
            gp += u128::from(sg);
            both += u128::from(sp && sg);
        }
    }
    Ok(from_counts(both, pp, gp, fg.len()))
}

/// Fraction of synapses whose validated status equals the ground truth.
/// An unvalidated synapse never matches a decided ground truth.
pub fn synapse_accuracy(validated: &BTreeMap<SynapseId, SynapseStatus>, gt: &BTreeMap<SynapseId, SynapseStatus>) -> Result<f64> {
    if validated.len() != gt.len() || validated.keys().zip(gt.keys()).any(|(a, b)| a != b) {
        return Err(Error::Param("synapse id sets differ".into()));
    }
    if gt.is_empty() {
        return Ok(1.0);
    }
    let hits = validated.iter().filter(|(id, s)| gt[*id] == **s).count();
    Ok(hits as f64 / gt.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_and_renamed() {
        let gt = [1, 1, 2, 2, 0, 3];
        assert_eq!(adapted_rand_error(&gt, &gt).unwrap(), 0.0);
        assert_eq!(adapted_rand_error(&[7, 7, 9, 9, 4, 1], &gt).unwrap(), 0.0);
    }

    #[test]
    fn worked_value() {
        assert_eq!(adapted_rand_error(&[1, 1, 1, 1], &[1, 1, 2, 2]).unwrap(), 0.5);
        assert_eq!(adapted_rand_error_pairs(&[1, 1, 1, 1], &[1, 1, 2, 2]).unwrap(), 0.5);
    }

    #[test]
    fn conventions() {
        assert_eq!(adapted_rand_error(&[1], &[1]).unwrap(), 0.0);
        assert_eq!(adapted_rand_error(&[1, 2, 3], &[4, 4, 4]).unwrap(), 1.0);
        assert!(adapted_rand_error(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn accuracy() {
        use SynapseStatus::*;
        let gt: BTreeMap<_, _> = [(1, Valid), (2, Invalid), (3, Valid), (4, Valid)].into();
        let mut v = gt.clone();
        assert_eq!(synapse_accuracy(&v, &gt).unwrap(), 1.0);
        v.insert(4, Invalid);
        assert_eq!(synapse_accuracy(&v, &gt).unwrap(), 0.75);
        let none: BTreeMap<_, _> = gt.keys().map(|&k| (k, Unvalidated)).collect();
        assert_eq!(synapse_accuracy(&none, &gt).unwrap(), 0.0);
        v.remove(&4);
        assert!(synapse_accuracy(&v, &gt).is_err());
    }

    proptest! {
        #[test]
        fn contingency_matches_pairs(v in proptest::collection::vec((0u64..4, 0u64..4), 0..64)) {
            let (p, g): (Vec<u64>, Vec<u64>) = v.into_iter().unzip();
            let a = adapted_rand_error(&p, &g).unwrap();
            let b = adapted_rand_error_pairs(&p, &g).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
