//! End-to-end acceptance suite.
//!
//! Each test verifies one release criterion at its stated tolerance and
//! prints a `PASS criterion-N` line (visible with `--nocapture`). Heavy
//! shared work (the 54-session corpus and the full window-by-algorithm
//! grid) is computed once and reused across criteria.

use std::sync::OnceLock;
use std::time::Instant;

use liftrisk_core::features::{self, Dataset, FeatureVector, FEATURE_DIM};
use liftrisk_core::ml::{self, AlgorithmSpec, HoldoutParams};
use liftrisk_core::niosh::{self, Coupling, DurationClass, LiftingTask, RiskLabel, RiskThresholds, UnitSystem};
use liftrisk_core::pipeline::{self, InputSource, PipelineConfig};
use liftrisk_core::rng::Rng;
use liftrisk_core::signal::{self, Window};
use liftrisk_core::synth::{self, GeneratorParams, ProtocolRow, SessionProtocol};

const SEED: u64 = 7;
const WINDOW_SIZES: [f64; 3] = [1.0, 0.5, 0.25];

fn thresholds() -> RiskThresholds {
    RiskThresholds::default()
}

fn corpus() -> &'static Vec<signal::EmgRecording> {
    static CORPUS: OnceLock<Vec<signal::EmgRecording>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let params = GeneratorParams { seed: SEED, ..GeneratorParams::default() };
        synth::generate_corpus(&SessionProtocol::standard(), 60.0, &params).unwrap()
    })
}

fn dataset(window: f64) -> Dataset {
    features::build_dataset(corpus(), window, &thresholds(), UnitSystem::UsCustomary).unwrap()
}

fn algorithms() -> [AlgorithmSpec; 4] {
    [
        AlgorithmSpec::decision_tree(),
        AlgorithmSpec::svm(),
        AlgorithmSpec::knn(1),
        AlgorithmSpec::random_forest(),
    ]
}

/// Holdout reports for every (window, algorithm) cell, keyed by index into
/// WINDOW_SIZES x algorithms().
fn grid() -> &'static Vec<Vec<ml::HoldoutReport>> {
    static GRID: OnceLock<Vec<Vec<ml::HoldoutReport>>> = OnceLock::new();
    GRID.get_or_init(|| {
        let params = HoldoutParams { reps: 10, test_fraction: 0.25, threads: 0 };
        WINDOW_SIZES
            .iter()
            .map(|&w| {
                let data = dataset(w);
                algorithms()
                    .iter()
                    .map(|spec| ml::repeated_holdout(spec, &data, &params, SEED).unwrap())
                    .collect()
            })
            .collect()
    })
}

fn reference_task(weight: f64, h: f64) -> LiftingTask {
    LiftingTask {
        weight,
        h,
        v: 14.0,
        d: 18.0,
        a: 0.0,
        coupling: Coupling::Good,
        frequency: 10.0,
        duration: DurationClass::UpTo1h,
    }
}

fn round2(x: f64) -> f64 {
    niosh::round_to_decimals(x, 2)
}

// Criterion 1: the lifting-equation tables reproduce exactly - multipliers
// at two decimals, RWL values, all six LI values at one decimal, and the
// risk labels.
#[test]
fn criterion_1_niosh_exactness() {
    let unit = UnitSystem::UsCustomary;

    let origin = niosh::compute_multipliers(&reference_task(10.0, 15.0), unit).unwrap();
    let rounded: Vec<f64> = origin.to_array().iter().map(|&v| round2(v)).collect();
    assert_eq!(rounded, vec![0.67, 0.88, 0.92, 1.00, 0.45, 1.00], "origin multipliers");

    let destination_geometry = LiftingTask { h: 24.0, v: 32.0, ..reference_task(10.0, 15.0) };
    let destination = niosh::compute_multipliers(&destination_geometry, unit).unwrap();
    let rounded: Vec<f64> = destination.to_array().iter().map(|&v| round2(v)).collect();
    assert_eq!(rounded, vec![0.42, 0.99, 0.92, 1.00, 0.45, 1.00], "destination multipliers");

    let rwl = niosh::recommended_weight_limit(&origin, unit);
    assert!((round2(rwl) - 12.40).abs() <= 0.01, "origin RWL {} rounds to {}", rwl, round2(rwl));

    let origin_h17 = niosh::compute_multipliers(&reference_task(35.0, 17.0), unit).unwrap();
    let rwl_h17 = niosh::recommended_weight_limit(&origin_h17, unit);
    assert!((rwl_h17 - 11.00).abs() <= 0.1, "17 in reach RWL {rwl_h17}");

    let expected = [
        (10.0, rwl, 0.8, RiskLabel::Nominal),
        (15.0, rwl, 1.2, RiskLabel::Nominal),
        (20.0, rwl, 1.6, RiskLabel::Increased),
        (30.0, rwl, 2.4, RiskLabel::Increased),
        (35.0, rwl, 2.8, RiskLabel::High),
        (35.0, rwl_h17, 3.2, RiskLabel::High),
    ];
    for (weight, limit, li_expected, label_expected) in expected {
        let li = niosh::lifting_index(weight, limit).unwrap();
        let li_rounded = niosh::round_to_decimals(li, 1);
        assert_eq!(li_rounded, li_expected, "LI for {weight} lb");
        assert_eq!(
            niosh::classify_risk(li_rounded, &thresholds()),
            label_expected,
            "label for {weight} lb"
        );
    }
    println!("PASS criterion-1: lifting-equation tables reproduce exactly");
}

// Direct O(n^2) DFT via a precomputed twiddle table; independent of the
// radix-2 path under test.
fn dft_magnitude_oracle(values: &[f64], padded: usize) -> Vec<f64> {
    let twiddle: Vec<(f64, f64)> = (0..padded)
        .map(|m| {
            let angle = -2.0 * std::f64::consts::PI * m as f64 / padded as f64;
            (angle.cos(), angle.sin())
        })
        .collect();
    let mut mags = Vec::with_capacity(padded / 2 + 1);
    for k in 0..=padded / 2 {
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (t, &v) in values.iter().enumerate() {
            let (c, s) = twiddle[(k * t) % padded];
            re += v * c;
            im += v * s;
        }
        let factor = if k == 0 || (padded.is_multiple_of(2) && k == padded / 2) { 1.0 } else { 2.0 };
        mags.push(factor * re.hypot(im) / padded as f64);
    }
    mags
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

// Criterion 2: fft_magnitude matches the direct DFT oracle within 1e-9
// relative per bin over 200 random windows of length 64..=4096, and
// Parseval's identity holds to the same tolerance. Budget: 10 s.
#[test]
fn criterion_2_fft_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = Rng::new(SEED);
    for case in 0..200 {
        let len = 64 + rng.next_index(4096 - 64 + 1);
        let values: Vec<f64> = (0..len).map(|_| rng.next_gaussian() * 40.0).collect();
        let padded = len.next_power_of_two();
        let window = Window { start_index: 0, values: values.clone() };
        let spectrum = signal::fft_magnitude(&window, 1000.0);
        let oracle = dft_magnitude_oracle(&values, padded);
        assert_eq!(spectrum.magnitudes.len(), oracle.len());
        for (bin, (&got, &want)) in spectrum.magnitudes.iter().zip(&oracle).enumerate() {
            assert!(
                rel_close(got, want, 1e-9),
                "case {case} len {len} bin {bin}: {got} vs {want}"
            );
        }

        // Parseval: time energy equals two-sided spectral energy / N.
        let time_energy: f64 = values.iter().map(|v| v * v).sum();
        let n = padded as f64;
        let mut two_sided = 0.0;
        for (k, &m) in spectrum.magnitudes.iter().enumerate() {
            let interior = k != 0 && !(padded.is_multiple_of(2) && k == padded / 2);
            let xk = if interior { m * n / 2.0 } else { m * n };
            two_sided += if interior { 2.0 * xk * xk } else { xk * xk };
        }
        assert!(
            rel_close(time_energy, two_sided / n, 1e-9),
            "case {case} len {len}: Parseval {time_energy} vs {}",
            two_sided / n
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "criterion 2 took {elapsed:?}, budget 10 s");
    println!("PASS criterion-2: FFT matches direct-DFT oracle, Parseval holds ({elapsed:?})");
}

// Criterion 3: the end-to-end desk-scale run - generate the default
// 54-session corpus, extract the 0.5 s dataset, and run the decision tree
// under 10 stratified holdout reps at seed 7 - reaches mean accuracy
// >= 0.95 with spread <= 0.05 in under 60 s. Computed from scratch here so
// the timer covers the whole path.
#[test]
fn criterion_3_decision_tree_holdout() {
    let started = Instant::now();
    let params = GeneratorParams { seed: SEED, ..GeneratorParams::default() };
    let fresh_corpus =
        synth::generate_corpus(&SessionProtocol::standard(), 60.0, &params).unwrap();
    let data =
        features::build_dataset(&fresh_corpus, 0.5, &thresholds(), UnitSystem::UsCustomary)
            .unwrap();
    let holdout = HoldoutParams { reps: 10, test_fraction: 0.25, threads: 0 };
    let report =
        ml::repeated_holdout(&AlgorithmSpec::decision_tree(), &data, &holdout, SEED).unwrap();
    let elapsed = started.elapsed();

    assert!(
        report.mean_accuracy >= 0.95,
        "decision tree mean accuracy {}",
        report.mean_accuracy
    );
    assert!(report.spread <= 0.05, "decision tree spread {}", report.spread);
    assert_eq!(report.per_rep_accuracies.len(), 10);
    assert!(elapsed.as_secs_f64() < 60.0, "criterion 3 took {elapsed:?}, budget 60 s");
    println!(
        "PASS criterion-3: decision tree 0.5s mean {:.4} spread {:.4} ({elapsed:?})",
        report.mean_accuracy, report.spread
    );
}

// Criterion 4: every algorithm reaches mean accuracy >= 0.90 at every
// window size, and pooled Nominal<->High confusion stays within 1% of the
// pooled test points.
#[test]
fn criterion_4_classifier_suite() {
    for (wi, &window) in WINDOW_SIZES.iter().enumerate() {
        for (ai, spec) in algorithms().iter().enumerate() {
            let report = &grid()[wi][ai];
            assert!(
                report.mean_accuracy >= 0.90,
                "{} at {window}s: mean accuracy {}",
                spec.name(),
                report.mean_accuracy
            );
            let cross = report.pooled_confusion[0][2] + report.pooled_confusion[2][0];
            let limit = 0.01 * report.n_test_total as f64;
            assert!(
                (cross as f64) <= limit,
                "{} at {window}s: {} Nominal<->High confusions of {} test points",
                spec.name(),
                cross,
                report.n_test_total
            );
        }
    }
    println!("PASS criterion-4: all four classifiers >= 0.90 everywhere, NR<->HR <= 1%");
}

// Criterion 5: with paired splits, k = 1 is at least as accurate as k = 5.
#[test]
fn criterion_5_k_sweep() {
    let data = dataset(1.0);
    let params = HoldoutParams { reps: 10, test_fraction: 0.25, threads: 0 };
    let sweep = ml::k_sweep(&data, 27, &params, SEED).unwrap();
    assert_eq!(sweep.len(), 27);
    let acc_k1 = sweep[0].1;
    let acc_k5 = sweep[4].1;
    assert!(acc_k1 >= acc_k5, "k=1 accuracy {acc_k1} below k=5 accuracy {acc_k5}");
    println!("PASS criterion-5: k-sweep k=1 {acc_k1:.4} >= k=5 {acc_k5:.4}");
}

// Criterion 6: structural oracles - a degenerate forest equals the plain
// tree on 200 probes, 1-NN memorizes distinct training vectors, and SMO
// keeps its dual objective non-decreasing with coefficients inside [0, C].
#[test]
fn criterion_6_oracle_equivalences() {
    // Forest-vs-tree prediction equivalence.
    let data = dataset(1.0);
    let tree = ml::train(&AlgorithmSpec::decision_tree(), &data, SEED).unwrap();
    let degenerate_forest = AlgorithmSpec::RandomForest {
        n_trees: 1,
        features_per_split: FEATURE_DIM,
        bootstrap: false,
    };
    let forest = ml::train(&degenerate_forest, &data, SEED + 999).unwrap();
    let mut rng = Rng::new(1234);
    for probe in 0..200 {
        // Probes span the realistic feature ranges.
        let x = FeatureVector {
            weight: 5.0 + rng.next_f64() * 35.0,
            h: 14.0 + rng.next_f64() * 5.0,
            fft_max: rng.next_f64() * 60.0,
            fft_min: rng.next_f64() * 0.5,
            fft_mean: rng.next_f64() * 10.0,
            fft_median: rng.next_f64() * 8.0,
            fft_std: rng.next_f64() * 12.0,
        };
        assert_eq!(
            ml::predict(&tree, &x),
            ml::predict(&forest, &x),
            "probe {probe} diverged"
        );
    }

    // 1-NN training accuracy on pairwise-distinct vectors. Silent gaps
    // between lift bursts make exactly-zero windows whose features repeat
    // across sessions, so deduplicate before checking memorization.
    let mut seen = std::collections::HashSet::new();
    let distinct: Vec<_> = data
        .examples
        .iter()
        .filter(|ex| seen.insert(format!("{:?}", ex.features.to_array())))
        .cloned()
        .collect();
    assert!(distinct.len() > 1000, "too few distinct vectors: {}", distinct.len());
    let distinct = Dataset {
        examples: distinct,
        window_seconds: data.window_seconds,
        provenance: "dedup".into(),
    };
    let knn = ml::train(&AlgorithmSpec::knn(1), &distinct, SEED).unwrap();
    let report = ml::evaluate(&knn, &distinct).unwrap();
    assert_eq!(report.accuracy, 1.0, "1-NN training accuracy on distinct vectors");

    // SMO dual objective and coefficient box on a 60-point 3-class toy set.
    let mut rng = Rng::new(60);
    let mut examples = Vec::new();
    for (ci, class) in RiskLabel::ALL.iter().enumerate() {
        for i in 0..20 {
            let mut x = [0.0; FEATURE_DIM];
            for v in &mut x {
                *v = ci as f64 * 3.0 + rng.next_gaussian() * 0.4;
            }
            examples.push(features::LabeledExample {
                features: FeatureVector::from_array(x),
                label: *class,
                session_id: format!("toy{ci}"),
                window_index: i,
            });
        }
    }
    let toy = Dataset { examples, window_seconds: 1.0, provenance: "toy".into() };
    let spec = AlgorithmSpec::svm();
    let (_, diagnostics) = ml::train_svm_with_diagnostics(&spec, &toy, SEED).unwrap();
    assert_eq!(diagnostics.len(), 3);
    let c = match spec {
        AlgorithmSpec::Svm { c, .. } => c,
        _ => unreachable!(),
    };
    for diag in &diagnostics {
        assert!(!diag.objective_trace.is_empty());
        for pair in diag.objective_trace.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-9,
                "{:?}: dual objective fell from {} to {}",
                diag.class,
                pair[0],
                pair[1]
            );
        }
        assert!(diag.alpha_min >= -1e-12, "{:?}: alpha below 0", diag.class);
        assert!(diag.alpha_max <= c + 1e-12, "{:?}: alpha above C", diag.class);
    }
    println!("PASS criterion-6: forest/tree parity, 1-NN memorization, SMO invariants");
}

// Criterion 7: identical configurations give byte-identical artifacts, and
// results are independent of the worker thread count.
#[test]
fn criterion_7_determinism() {
    let base = std::env::temp_dir().join("liftrisk_acceptance_determinism");
    if base.exists() {
        std::fs::remove_dir_all(&base).unwrap();
    }
    let config_for = |out: std::path::PathBuf, threads: usize| PipelineConfig {
        window_sizes: vec![1.0, 0.5],
        holdout: HoldoutParams { reps: 3, test_fraction: 0.25, threads },
        source: InputSource::Synthetic {
            protocol: SessionProtocol {
                rows: vec![
                    ProtocolRow { session_count: 2, load: 10.0, h: 15.0 },
                    ProtocolRow { session_count: 2, load: 20.0, h: 15.0 },
                    ProtocolRow { session_count: 2, load: 35.0, h: 15.0 },
                ],
            },
            duration_seconds: 10.0,
        },
        ..PipelineConfig::standard(out)
    };

    let first = config_for(base.join("run_a"), 0);
    let second = config_for(base.join("run_b"), 0);
    pipeline::run_pipeline(&first).unwrap();
    pipeline::run_pipeline(&second).unwrap();
    let mut json_files = 0;
    for entry in std::fs::read_dir(base.join("run_a")).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(base.join("run_a").join(&name)).unwrap();
        let b = std::fs::read(base.join("run_b").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between identical runs");
        if name.to_string_lossy().ends_with(".json") {
            json_files += 1;
        }
    }
    assert!(json_files >= 9, "expected one JSON per cell plus summary, saw {json_files}");

    // Thread-count independence on the same cells.
    let data = {
        let corpus =
            pipeline::load_corpus(&first.source, first.seed).unwrap();
        features::build_dataset(&corpus, 0.5, &thresholds(), UnitSystem::UsCustomary).unwrap()
    };
    for spec in algorithms() {
        let serial = ml::repeated_holdout(
            &spec,
            &data,
            &HoldoutParams { reps: 4, test_fraction: 0.25, threads: 1 },
            SEED,
        )
        .unwrap();
        let parallel = ml::repeated_holdout(
            &spec,
            &data,
            &HoldoutParams { reps: 4, test_fraction: 0.25, threads: 4 },
            SEED,
        )
        .unwrap();
        assert_eq!(serial, parallel, "{} differs across thread counts", spec.name());
    }
    println!("PASS criterion-7: byte-identical reruns, thread-count independent results");
}

// Criterion 8: session-level class means of the frequency-domain averaged
// peak are strictly ordered Nominal < Increased < High, with Nominal in
// [15, 25] uV and High in [28, 40] uV.
#[test]
fn criterion_8_li_amplitude_trend() {
    let rows =
        pipeline::emit_li_amplitude_report(corpus(), &thresholds(), UnitSystem::UsCustomary)
            .unwrap();
    assert_eq!(rows.len(), 54);
    let mut sums = [0.0f64; 3];
    let mut counts = [0usize; 3];
    for row in &rows {
        sums[row.risk.index()] += row.avg_peak_uv;
        counts[row.risk.index()] += 1;
    }
    assert_eq!(counts, [19, 20, 15], "session label counts");
    let means: Vec<f64> = (0..3).map(|i| sums[i] / counts[i] as f64).collect();
    assert!(
        means[0] < means[1] && means[1] < means[2],
        "class means not strictly ordered: {means:?}"
    );
    assert!(
        (15.0..=25.0).contains(&means[0]),
        "Nominal mean {} outside [15, 25]",
        means[0]
    );
    assert!((28.0..=40.0).contains(&means[2]), "High mean {} outside [28, 40]", means[2]);
    println!(
        "PASS criterion-8: class amplitude means {:.2} < {:.2} < {:.2} uV within bands",
        means[0], means[1], means[2]
    );
}

// Full-corpus regression backing criteria 3 and 4: the datasets themselves
// have the expected shape and label mix.
#[test]
fn corpus_dataset_shapes() {
    for (&window, expected_n) in WINDOW_SIZES.iter().zip([3240usize, 6480, 12960]) {
        let data = dataset(window);
        assert_eq!(data.len(), expected_n, "{window}s dataset size");
        let counts = data.class_counts();
        assert_eq!(
            counts.iter().sum::<usize>(),
            expected_n,
            "{window}s class counts total"
        );
        // 19/20/15 sessions at 60 windows per session (1 s case) scale with
        // the window size.
        let per_session = (60.0 / window) as usize;
        assert_eq!(counts[0], 19 * per_session, "{window}s Nominal windows");
        assert_eq!(counts[1], 20 * per_session, "{window}s Increased windows");
        assert_eq!(counts[2], 15 * per_session, "{window}s High windows");
    }
}
