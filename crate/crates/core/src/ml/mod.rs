//! Risk classifiers and the evaluation harness.
//!
//! Four model families — CART decision tree, bagged random forest, k-NN on
//! standardized features, and a one-vs-rest RBF SVM trained by SMO — behind
//! one `train`/`predict`/`evaluate` surface, plus repeated stratified
//! holdout and a k sweep for neighbour-count selection.
//!
//! Everything is deterministic in (spec, data, seed): repetition, tree, and
//! SMO randomness come from substreams derived from the seed and the
//! structural position, never from scheduling.

mod knn;
mod report;
mod svm;
mod tree;

pub use report::{render_accuracy_table, render_confusion_table, EvaluationReport, HoldoutReport};
pub use svm::SmoDiagnostics;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureVector, FEATURE_DIM};
use crate::niosh::RiskLabel;
use crate::rng::{derive_seed, Rng};

type Sample = [f64; FEATURE_DIM];

// Substream identifiers for seed derivation.
const STREAM_SPLIT: u64 = 0x1000_0000;
const STREAM_TRAIN: u64 = 0x2000_0000;
const STREAM_TREE: u64 = 0x3000_0000;
const STREAM_FOLD: u64 = 0x4000_0000;

/// Model family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AlgorithmSpec {
    DecisionTree {
        min_samples_split: usize,
        max_depth: Option<usize>,
    },
    RandomForest {
        n_trees: usize,
        features_per_split: usize,
        bootstrap: bool,
    },
    Knn {
        k: usize,
    },
    Svm {
        c: f64,
        /// RBF width; `None` derives 1 / (dim * feature variance) from the
        /// standardized training features.
        gamma: Option<f64>,
        tolerance: f64,
        max_passes: usize,
    },
}

impl AlgorithmSpec {
    pub fn decision_tree() -> Self {
        AlgorithmSpec::DecisionTree { min_samples_split: 2, max_depth: None }
    }

    pub fn random_forest() -> Self {
        // ceil(sqrt(7)) = 3 features per split.
        AlgorithmSpec::RandomForest { n_trees: 100, features_per_split: 3, bootstrap: true }
    }

    pub fn knn(k: usize) -> Self {
        AlgorithmSpec::Knn { k }
    }

    pub fn svm() -> Self {
        AlgorithmSpec::Svm { c: 1.0, gamma: None, tolerance: 1e-3, max_passes: 500 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::DecisionTree { .. } => "decision_tree",
            AlgorithmSpec::RandomForest { .. } => "random_forest",
            AlgorithmSpec::Knn { .. } => "knn",
            AlgorithmSpec::Svm { .. } => "svm",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            AlgorithmSpec::DecisionTree { min_samples_split, .. } => {
                if min_samples_split < 1 {
                    return bad("min_samples_split must be at least 1".into());
                }
            }
            AlgorithmSpec::RandomForest { n_trees, features_per_split, .. } => {
                if n_trees < 1 {
                    return bad("n_trees must be at least 1".into());
                }
                if !(1..=FEATURE_DIM).contains(&features_per_split) {
                    return bad(format!(
                        "features_per_split must lie in 1..={FEATURE_DIM}, got {features_per_split}"
                    ));
                }
            }
            AlgorithmSpec::Knn { k } => {
                if k < 1 {
                    return bad("k must be at least 1".into());
                }
            }
            AlgorithmSpec::Svm { c, gamma, tolerance, max_passes } => {
                if !(c > 0.0 && c.is_finite()) {
                    return bad(format!("c must be positive, got {c}"));
                }
                if let Some(g) = gamma {
                    if !(g > 0.0 && g.is_finite()) {
                        return bad(format!("gamma must be positive, got {g}"));
                    }
                }
                if !(tolerance > 0.0 && tolerance.is_finite()) {
                    return bad(format!("tolerance must be positive, got {tolerance}"));
                }
                if max_passes < 1 {
                    return bad("max_passes must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}

/// Per-feature standardization fitted on training data. Constant dimensions
/// (std below 1e-12) are dropped: their scaled value is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub means: [f64; FEATURE_DIM],
    inv_stds: [f64; FEATURE_DIM],
}

impl Scaler {
    pub fn fit(xs: &[Sample]) -> Scaler {
        let n = xs.len() as f64;
        let mut means = [0.0; FEATURE_DIM];
        for x in xs {
            for (m, v) in means.iter_mut().zip(x) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut inv_stds = [0.0; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            let var = xs.iter().map(|x| (x[d] - means[d]).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            inv_stds[d] = if std > 1e-12 { 1.0 / std } else { 0.0 };
        }
        Scaler { means, inv_stds }
    }

    pub fn transform(&self, x: &Sample) -> Sample {
        let mut out = [0.0; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            out[d] = (x[d] - self.means[d]) * self.inv_stds[d];
        }
        out
    }

    pub fn std(&self, d: usize) -> f64 {
        if self.inv_stds[d] > 0.0 {
            1.0 / self.inv_stds[d]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    /// Training data held a single class.
    Constant(RiskLabel),
    Tree(tree::Tree),
    Forest(Vec<tree::Tree>),
    Knn { points: Vec<Sample>, labels: Vec<RiskLabel> },
    Svm(svm::SvmOneVsRest),
}

/// A trained classifier. Prediction is defined for any finite 7-entry input.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: AlgorithmSpec,
    scaler: Option<Scaler>,
    fitted: Fitted,
}

fn to_matrix(data: &Dataset) -> (Vec<Sample>, Vec<RiskLabel>) {
    let xs = data.examples.iter().map(|ex| ex.features.to_array()).collect();
    let ys = data.examples.iter().map(|ex| ex.label).collect();
    (xs, ys)
}

fn present_classes(ys: &[RiskLabel]) -> Vec<RiskLabel> {
    let mut seen = [false; 3];
    for y in ys {
        seen[y.index()] = true;
    }
    RiskLabel::ALL.iter().copied().filter(|l| seen[l.index()]).collect()
}

/// Train a model on a dataset. Deterministic in (spec, data, seed).
pub fn train(spec: &AlgorithmSpec, data: &Dataset, seed: u64) -> Result<Model> {
    let (xs, ys) = to_matrix(data);
    fit_arrays(spec, &xs, &ys, seed, false).map(|(m, _)| m)
}

/// Train an SVM and return per-machine SMO diagnostics (coefficient bounds
/// and the dual objective after every accepted step).
pub fn train_svm_with_diagnostics(
    spec: &AlgorithmSpec,
    data: &Dataset,
    seed: u64,
) -> Result<(Model, Vec<SmoDiagnostics>)> {
    if !matches!(spec, AlgorithmSpec::Svm { .. }) {
        return Err(Error::InvalidParameter(format!(
            "SMO diagnostics require an SVM spec, got {}",
            spec.name()
        )));
    }
    let (xs, ys) = to_matrix(data);
    fit_arrays(spec, &xs, &ys, seed, true)
}

fn fit_arrays(
    spec: &AlgorithmSpec,
    xs: &[Sample],
    ys: &[RiskLabel],
    seed: u64,
    svm_diagnostics: bool,
) -> Result<(Model, Vec<SmoDiagnostics>)> {
    spec.validate()?;
    if xs.is_empty() {
        return Err(Error::EmptyInput("cannot train on an empty dataset".into()));
    }
    let all_indices: Vec<usize> = (0..xs.len()).collect();
    let mut diagnostics = Vec::new();
    let (scaler, fitted) = match *spec {
        AlgorithmSpec::DecisionTree { min_samples_split, max_depth } => {
            let cfg = tree::TreeConfig { min_samples_split, max_depth, features_per_split: FEATURE_DIM };
            let mut rng = Rng::derive(seed, STREAM_TREE);
            (None, Fitted::Tree(tree::grow(xs, ys, &all_indices, &cfg, &mut rng)))
        }
        AlgorithmSpec::RandomForest { n_trees, features_per_split, bootstrap } => {
            let cfg = tree::TreeConfig { min_samples_split: 2, max_depth: None, features_per_split };
            let trees: Vec<tree::Tree> = (0..n_trees)
                .map(|t| {
                    let mut rng = Rng::derive(seed, STREAM_TREE + t as u64);
                    let indices: Vec<usize> = if bootstrap {
                        (0..xs.len()).map(|_| rng.next_index(xs.len())).collect()
                    } else {
                        all_indices.clone()
                    };
                    tree::grow(xs, ys, &indices, &cfg, &mut rng)
                })
                .collect();
            (None, Fitted::Forest(trees))
        }
        AlgorithmSpec::Knn { k } => {
            if k > xs.len() {
                return Err(Error::InvalidParameter(format!(
                    "k = {k} exceeds the training size {}",
                    xs.len()
                )));
            }
            let scaler = Scaler::fit(xs);
            let points: Vec<Sample> = xs.iter().map(|x| scaler.transform(x)).collect();
            (Some(scaler), Fitted::Knn { points, labels: ys.to_vec() })
        }
        AlgorithmSpec::Svm { c, gamma, tolerance, max_passes } => {
            let classes = present_classes(ys);
            if classes.len() == 1 {
                (None, Fitted::Constant(classes[0]))
            } else {
                let scaler = Scaler::fit(xs);
                let scaled: Vec<Sample> = xs.iter().map(|x| scaler.transform(x)).collect();
                let gamma = gamma.unwrap_or_else(|| default_gamma(&scaled));
                let params = svm::SmoParams { c, gamma, tol: tolerance, max_passes };
                let (ovr, diags) =
                    svm::train_one_vs_rest(&scaled, ys, &classes, params, svm_diagnostics)?;
                diagnostics = diags;
                (Some(scaler), Fitted::Svm(ovr))
            }
        }
    };
    Ok((Model { spec: spec.clone(), scaler, fitted }, diagnostics))
}

/// RBF width from standardized features: 1 / (dim * total variance).
fn default_gamma(scaled: &[Sample]) -> f64 {
    let n = (scaled.len() * FEATURE_DIM) as f64;
    let mean: f64 = scaled.iter().flatten().sum::<f64>() / n;
    let var: f64 = scaled.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 1e-12 {
        1.0 / (FEATURE_DIM as f64 * var)
    } else {
        1.0 / FEATURE_DIM as f64
    }
}

pub fn predict(model: &Model, x: &FeatureVector) -> RiskLabel {
    predict_sample(model, &x.to_array())
}

fn predict_sample(model: &Model, raw: &Sample) -> RiskLabel {
    debug_assert!(raw.iter().all(|v| v.is_finite()));
    let scaled;
    let x = match &model.scaler {
        Some(s) => {
            scaled = s.transform(raw);
            &scaled
        }
        None => raw,
    };
    match &model.fitted {
        Fitted::Constant(label) => *label,
        Fitted::Tree(t) => tree::predict(t, x),
        Fitted::Forest(trees) => {
            let mut votes = [0usize; 3];
            for t in trees {
                votes[tree::predict(t, x).index()] += 1;
            }
            let mut best = 0;
            for i in 1..3 {
                if votes[i] > votes[best] {
                    best = i;
                }
            }
            RiskLabel::from_index(best)
        }
        Fitted::Knn { points, labels } => {
            let k = match model.spec {
                AlgorithmSpec::Knn { k } => k,
                _ => 1,
            };
            knn::predict(points, labels, k, x)
        }
        Fitted::Svm(ovr) => ovr.predict(x),
    }
}

/// Confusion matrix and accuracy of a model over a test dataset.
pub fn evaluate(model: &Model, test: &Dataset) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput("cannot evaluate on an empty test set".into()));
    }
    let (xs, ys) = to_matrix(test);
    Ok(evaluate_arrays(model, &xs, &ys))
}

fn evaluate_arrays(model: &Model, xs: &[Sample], ys: &[RiskLabel]) -> EvaluationReport {
    let mut confusion = [[0usize; 3]; 3];
    for (x, y) in xs.iter().zip(ys) {
        confusion[y.index()][predict_sample(model, x).index()] += 1;
    }
    EvaluationReport::from_confusion(confusion)
}

/// Class-preserving random split into (train, test) index sets, both sorted.
/// Every class present must have at least two examples so it can appear on
/// both sides.
pub fn stratified_split(
    labels: &[RiskLabel],
    test_fraction: f64,
    rng: &mut Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in RiskLabel::ALL {
        let mut indices: Vec<usize> =
            (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if indices.is_empty() {
            continue;
        }
        if indices.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {} has {} example(s); need at least 2 to appear in both partitions",
                class.as_str(),
                indices.len()
            )));
        }
        rng.shuffle(&mut indices);
        let n_test =
            ((test_fraction * indices.len() as f64).round() as usize).clamp(1, indices.len() - 1);
        test.extend_from_slice(&indices[..n_test]);
        train.extend_from_slice(&indices[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Repetition count, split fraction, and worker threads for the holdout
/// harness. `threads = 0` uses the available parallelism; the thread count
/// never affects results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldoutParams {
    pub reps: usize,
    pub test_fraction: f64,
    pub threads: usize,
}

impl Default for HoldoutParams {
    fn default() -> Self {
        HoldoutParams { reps: 10, test_fraction: 0.25, threads: 0 }
    }
}

impl HoldoutParams {
    fn worker_count(&self, jobs: usize) -> usize {
        let t = if self.threads == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            self.threads
        };
        t.clamp(1, jobs.max(1))
    }
}

/// Independent seeded stratified splits; train and evaluate on each; report
/// per-repetition accuracies, their mean and spread, and pooled confusion.
pub fn repeated_holdout(
    spec: &AlgorithmSpec,
    data: &Dataset,
    params: &HoldoutParams,
    seed: u64,
) -> Result<HoldoutReport> {
    if params.reps == 0 {
        return Err(Error::InvalidParameter("holdout needs at least one repetition".into()));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("cannot run holdout on an empty dataset".into()));
    }
    let (xs, ys) = to_matrix(data);
    let run_rep = |rep: usize| -> Result<EvaluationReport> {
        let mut split_rng = Rng::derive(seed, STREAM_SPLIT + rep as u64);
        let (train_idx, test_idx) = stratified_split(&ys, params.test_fraction, &mut split_rng)?;
        let train_xs: Vec<Sample> = train_idx.iter().map(|&i| xs[i]).collect();
        let train_ys: Vec<RiskLabel> = train_idx.iter().map(|&i| ys[i]).collect();
        let (model, _) =
            fit_arrays(spec, &train_xs, &train_ys, derive_seed(seed, STREAM_TRAIN + rep as u64), false)?;
        let test_xs: Vec<Sample> = test_idx.iter().map(|&i| xs[i]).collect();
        let test_ys: Vec<RiskLabel> = test_idx.iter().map(|&i| ys[i]).collect();
        Ok(evaluate_arrays(&model, &test_xs, &test_ys))
    };

    let results = run_indexed_jobs(params.reps, params.worker_count(params.reps), &run_rep);
    let mut reports = Vec::with_capacity(params.reps);
    for res in results {
        reports.push(res?);
    }
    Ok(HoldoutReport::from_reports(&reports))
}

/// Run `jobs` closures on up to `workers` threads, returning results in job
/// order so downstream aggregation is schedule-independent.
fn run_indexed_jobs<T, F>(jobs: usize, workers: usize, job: &F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if workers <= 1 || jobs <= 1 {
        return (0..jobs).map(job).collect();
    }
    let mut slots: Vec<Option<Result<T>>> = (0..jobs).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut i = w;
                    while i < jobs {
                        out.push((i, job(i)));
                        i += workers;
                    }
                    out
                })
            })
            .collect();
        for handle in handles {
            for (i, res) in handle.join().expect("holdout worker panicked") {
                slots[i] = Some(res);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("job slot unfilled")).collect()
}

/// Stratified k-fold cross-validation, the classical alternative to
/// repeated holdout: within each class the examples are shuffled once and
/// dealt round-robin into `folds` bins; each bin serves as the test set
/// exactly once. The report carries one accuracy per fold.
pub fn k_fold_cv(
    spec: &AlgorithmSpec,
    data: &Dataset,
    folds: usize,
    seed: u64,
) -> Result<HoldoutReport> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "cross-validation needs at least 2 folds, got {folds}"
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("cannot cross-validate an empty dataset".into()));
    }
    if folds > data.len() {
        return Err(Error::InvalidParameter(format!(
            "{folds} folds exceed the {} examples",
            data.len()
        )));
    }
    let (xs, ys) = to_matrix(data);

    let mut fold_of = vec![0usize; ys.len()];
    let mut rng = Rng::derive(seed, STREAM_FOLD);
    for class in RiskLabel::ALL {
        let mut indices: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] == class).collect();
        if indices.is_empty() {
            continue;
        }
        if indices.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {} has {} example(s); need at least 2 for cross-validation",
                class.as_str(),
                indices.len()
            )));
        }
        rng.shuffle(&mut indices);
        for (pos, &i) in indices.iter().enumerate() {
            fold_of[i] = pos % folds;
        }
    }

    let mut reports = Vec::with_capacity(folds);
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..ys.len()).filter(|&i| fold_of[i] != fold).collect();
        let test_idx: Vec<usize> = (0..ys.len()).filter(|&i| fold_of[i] == fold).collect();
        if test_idx.is_empty() {
            return Err(Error::Stratification(format!(
                "fold {fold} received no test examples; use fewer folds"
            )));
        }
        let train_xs: Vec<Sample> = train_idx.iter().map(|&i| xs[i]).collect();
        let train_ys: Vec<RiskLabel> = train_idx.iter().map(|&i| ys[i]).collect();
        let (model, _) = fit_arrays(
            spec,
            &train_xs,
            &train_ys,
            derive_seed(seed, STREAM_TRAIN + fold as u64),
            false,
        )?;
        let test_xs: Vec<Sample> = test_idx.iter().map(|&i| xs[i]).collect();
        let test_ys: Vec<RiskLabel> = test_idx.iter().map(|&i| ys[i]).collect();
        reports.push(evaluate_arrays(&model, &test_xs, &test_ys));
    }
    Ok(HoldoutReport::from_reports(&reports))
}

/// Mean holdout accuracy of k-NN for every k in 1..=k_max, with the same
/// split sequence shared across k so the comparison is paired. Neighbour
/// orderings are computed once per repetition and reused for every k,
/// matching `repeated_holdout` with `Knn { k }` exactly.
pub fn k_sweep(
    data: &Dataset,
    k_max: usize,
    params: &HoldoutParams,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    if params.reps == 0 {
        return Err(Error::InvalidParameter("holdout needs at least one repetition".into()));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("cannot sweep k on an empty dataset".into()));
    }
    let (xs, ys) = to_matrix(data);

    let run_rep = |rep: usize| -> Result<Vec<usize>> {
        let mut split_rng = Rng::derive(seed, STREAM_SPLIT + rep as u64);
        let (train_idx, test_idx) = stratified_split(&ys, params.test_fraction, &mut split_rng)?;
        if k_max > train_idx.len() {
            return Err(Error::InvalidParameter(format!(
                "k_max = {k_max} exceeds the training partition size {}",
                train_idx.len()
            )));
        }
        let train_xs: Vec<Sample> = train_idx.iter().map(|&i| xs[i]).collect();
        let train_ys: Vec<RiskLabel> = train_idx.iter().map(|&i| ys[i]).collect();
        let scaler = Scaler::fit(&train_xs);
        let points: Vec<Sample> = train_xs.iter().map(|x| scaler.transform(x)).collect();

        let mut correct = vec![0usize; k_max];
        for &ti in &test_idx {
            let x = scaler.transform(&xs[ti]);
            let neighbors = knn::sorted_neighbors(&points, &x);
            for (slot, k) in correct.iter_mut().zip(1..=k_max) {
                if knn::vote(&neighbors, &train_ys, k) == ys[ti] {
                    *slot += 1;
                }
            }
        }
        // Encode (correct counts, test size) together for aggregation.
        correct.push(test_idx.len());
        Ok(correct)
    };

    let results = run_indexed_jobs(params.reps, params.worker_count(params.reps), &run_rep);
    let mut sums = vec![0.0f64; k_max];
    for res in results {
        let mut counts = res?;
        let n_test = counts.pop().expect("test size marker") as f64;
        for (sum, c) in sums.iter_mut().zip(counts) {
            *sum += c as f64 / n_test;
        }
    }
    Ok(sums.iter().enumerate().map(|(i, s)| (i + 1, s / params.reps as f64)).collect())
}
