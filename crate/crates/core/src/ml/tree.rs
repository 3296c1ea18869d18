//! CART decision trees with Gini impurity, plus bagged forests.

use crate::features::FEATURE_DIM;
use crate::niosh::RiskLabel;
use crate::rng::Rng;

pub(crate) type Sample = [f64; FEATURE_DIM];

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Leaf { label: RiskLabel },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone)]
pub(crate) struct TreeConfig {
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    /// Features considered per split; `FEATURE_DIM` disables subsampling.
    pub features_per_split: usize,
}

/// Gini impurity of a class count vector: 1 - sum p_i^2.
pub(crate) fn gini(counts: &[usize; 3], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn class_counts(ys: &[RiskLabel], indices: &[usize]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for &i in indices {
        counts[ys[i].index()] += 1;
    }
    counts
}

fn majority(counts: &[usize; 3]) -> RiskLabel {
    // Ties break toward the lower class in label order.
    let mut best = 0;
    for i in 1..3 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    RiskLabel::from_index(best)
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Grow a tree over `indices` into `xs`/`ys`. `rng` drives per-node feature
/// subsampling and is unused when all features are in play, which keeps a
/// one-tree forest without bootstrap bit-identical to a plain tree.
pub(crate) fn grow(
    xs: &[Sample],
    ys: &[RiskLabel],
    indices: &[usize],
    cfg: &TreeConfig,
    rng: &mut Rng,
) -> Tree {
    let mut nodes = Vec::new();
    // (node slot, indices, depth); explicit worklist keeps deep trees off the
    // call stack.
    let mut work: Vec<(usize, Vec<usize>, usize)> = Vec::new();
    nodes.push(Node::Leaf { label: RiskLabel::Nominal }); // placeholder
    work.push((0, indices.to_vec(), 0));

    while let Some((slot, node_indices, depth)) = work.pop() {
        let counts = class_counts(ys, &node_indices);
        let total = node_indices.len();
        let node_impurity = gini(&counts, total);

        let is_pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = cfg.max_depth.is_some_and(|d| depth >= d);
        if is_pure || total < cfg.min_samples_split || depth_capped {
            nodes[slot] = Node::Leaf { label: majority(&counts) };
            continue;
        }

        let features = candidate_features(cfg, rng);
        let best = best_split(xs, ys, &node_indices, &features, node_impurity);
        let Some(split) = best else {
            nodes[slot] = Node::Leaf { label: majority(&counts) };
            continue;
        };

        let (left, right): (Vec<usize>, Vec<usize>) =
            node_indices.iter().partition(|&&i| xs[i][split.feature] <= split.threshold);
        debug_assert!(!left.is_empty() && !right.is_empty());

        let left_slot = nodes.len();
        nodes.push(Node::Leaf { label: RiskLabel::Nominal });
        let right_slot = nodes.len();
        nodes.push(Node::Leaf { label: RiskLabel::Nominal });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_slot,
            right: right_slot,
        };
        work.push((right_slot, right, depth + 1));
        work.push((left_slot, left, depth + 1));
    }

    Tree { nodes }
}

fn candidate_features(cfg: &TreeConfig, rng: &mut Rng) -> Vec<usize> {
    if cfg.features_per_split >= FEATURE_DIM {
        return (0..FEATURE_DIM).collect();
    }
    // Partial Fisher-Yates: the first features_per_split entries after the
    // swaps are a uniform subset. Sorted so threshold ties still resolve
    // toward the lowest feature index.
    let mut pool: Vec<usize> = (0..FEATURE_DIM).collect();
    for i in 0..cfg.features_per_split {
        let j = i + rng.next_index(FEATURE_DIM - i);
        pool.swap(i, j);
    }
    let mut chosen = pool[..cfg.features_per_split].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Scan candidate thresholds (midpoints of consecutive distinct sorted
/// values) per feature; keep the split with minimal weighted impurity.
/// Strictly-better comparisons over the ascending (feature, threshold) scan
/// give the documented tie-break for free.
fn best_split(
    xs: &[Sample],
    ys: &[RiskLabel],
    indices: &[usize],
    features: &[usize],
    node_impurity: f64,
) -> Option<BestSplit> {
    let total = indices.len();
    let total_counts = class_counts(ys, indices);
    let mut best: Option<BestSplit> = None;

    let mut order: Vec<usize> = Vec::with_capacity(total);
    for &feature in features {
        order.clear();
        order.extend_from_slice(indices);
        order.sort_by(|&a, &b| xs[a][feature].total_cmp(&xs[b][feature]).then(a.cmp(&b)));

        let mut left_counts = [0usize; 3];
        let mut left_total = 0usize;
        for pair in 0..total - 1 {
            let i = order[pair];
            left_counts[ys[i].index()] += 1;
            left_total += 1;
            let here = xs[i][feature];
            let next = xs[order[pair + 1]][feature];
            if here == next {
                continue;
            }
            let threshold = here + (next - here) / 2.0;
            // Guard against midpoints that round onto `next`, which would
            // send equal-valued samples the wrong way.
            if threshold >= next {
                continue;
            }
            let right_total = total - left_total;
            let mut right_counts = [0usize; 3];
            for c in 0..3 {
                right_counts[c] = total_counts[c] - left_counts[c];
            }
            let weighted = (left_total as f64 * gini(&left_counts, left_total)
                + right_total as f64 * gini(&right_counts, right_total))
                / total as f64;
            if weighted + 1e-12 >= node_impurity {
                continue; // no improvement
            }
            if best.as_ref().is_none_or(|b| weighted < b.impurity) {
                best = Some(BestSplit { feature, threshold, impurity: weighted });
            }
        }
    }
    best
}

pub(crate) fn predict(tree: &Tree, x: &Sample) -> RiskLabel {
    let mut node = 0usize;
    loop {
        match &tree.nodes[node] {
            Node::Leaf { label } => return *label,
            Node::Split { feature, threshold, left, right } => {
                node = if x[*feature] <= *threshold { *left } else { *right };
            }
        }
    }
}
