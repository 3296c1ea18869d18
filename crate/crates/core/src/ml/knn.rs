//! k-nearest-neighbour classification over standardized features.

use crate::features::FEATURE_DIM;
use crate::niosh::RiskLabel;

pub(crate) type Sample = [f64; FEATURE_DIM];

fn squared_distance(a: &Sample, b: &Sample) -> f64 {
    let mut acc = 0.0;
    for i in 0..FEATURE_DIM {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

/// Training points ordered by distance to `x`; distance ties break on the
/// training index, so voting is deterministic.
pub(crate) fn sorted_neighbors(points: &[Sample], x: &Sample) -> Vec<(f64, usize)> {
    let mut pairs: Vec<(f64, usize)> =
        points.iter().enumerate().map(|(i, p)| (squared_distance(p, x), i)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    pairs
}

/// Majority vote over the `k` nearest labels; vote ties break toward the
/// lower class in label order.
pub(crate) fn vote(neighbors: &[(f64, usize)], labels: &[RiskLabel], k: usize) -> RiskLabel {
    let mut counts = [0usize; 3];
    for &(_, idx) in neighbors.iter().take(k) {
        counts[labels[idx].index()] += 1;
    }
    let mut best = 0;
    for i in 1..3 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    RiskLabel::from_index(best)
}

pub(crate) fn predict(points: &[Sample], labels: &[RiskLabel], k: usize, x: &Sample) -> RiskLabel {
    debug_assert!(k >= 1 && k <= points.len());
    vote(&sorted_neighbors(points, x), labels, k)
}
