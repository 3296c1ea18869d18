//! Window-level feature vectors and labelled datasets.
//!
//! Each window becomes a 7-entry descriptor: the session's load and
//! horizontal reach, plus max / min / mean / median / standard deviation of
//! the window's single-sided magnitude spectrum with the DC bin dropped
//! (rectification parks a large offset there that would swamp the statistics).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::niosh::{self, RiskLabel, RiskThresholds, UnitSystem};
use crate::signal::{self, EmgRecording, Window};

pub const FEATURE_DIM: usize = 7;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] =
    ["weight", "h", "fft_max", "fft_min", "fft_mean", "fft_median", "fft_std"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub weight: f64,
    pub h: f64,
    pub fft_max: f64,
    pub fft_min: f64,
    pub fft_mean: f64,
    pub fft_median: f64,
    pub fft_std: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [self.weight, self.h, self.fft_max, self.fft_min, self.fft_mean, self.fft_median, self.fft_std]
    }

    pub fn from_array(a: [f64; FEATURE_DIM]) -> Self {
        FeatureVector {
            weight: a[0],
            h: a[1],
            fft_max: a[2],
            fft_min: a[3],
            fft_mean: a[4],
            fft_median: a[5],
            fft_std: a[6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: FeatureVector,
    pub label: RiskLabel,
    pub session_id: String,
    pub window_index: usize,
}

/// A labelled feature table plus how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub window_seconds: f64,
    pub provenance: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Example counts per class in label order.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for ex in &self.examples {
            counts[ex.label.index()] += 1;
        }
        counts
    }
}

/// Spectral statistics of one window, prefixed by the session's load and
/// horizontal reach. Errors when padding leaves no bins beyond DC.
pub fn extract_window_features(
    w: &Window,
    sample_rate: f64,
    weight: f64,
    h: f64,
) -> Result<FeatureVector> {
    if w.is_empty() {
        return Err(Error::EmptyInput("cannot extract features from an empty window".into()));
    }
    let spectrum = signal::fft_magnitude(w, sample_rate);
    let mags = &spectrum.magnitudes[1..];
    if mags.is_empty() {
        return Err(Error::InvalidParameter(
            "window too short: spectrum has no bins beyond DC".into(),
        ));
    }

    let mut sorted = mags.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median =
        if n.is_multiple_of(2) { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 } else { sorted[n / 2] };
    let mean = mags.iter().sum::<f64>() / n as f64;
    let var = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n as f64;

    Ok(FeatureVector {
        weight,
        h,
        fft_max: sorted[n - 1],
        fft_min: sorted[0],
        fft_mean: mean,
        fft_median: median,
        fft_std: var.sqrt(),
    })
}

/// Rectify, segment, and featurise every recording, labelling each window
/// with the risk class of its session's task (origin RWL, one-decimal LI).
/// Examples are ordered by (recording order, window index).
pub fn build_dataset(
    recordings: &[EmgRecording],
    window_seconds: f64,
    thresholds: &RiskThresholds,
    unit: UnitSystem,
) -> Result<Dataset> {
    if recordings.is_empty() {
        return Err(Error::EmptyInput("no recordings to build a dataset from".into()));
    }
    let mut examples = Vec::new();
    for rec in recordings {
        let assessment = niosh::assess_task(&rec.meta.task, unit, thresholds)?;
        let rectified = signal::rectify(rec);
        let windows = signal::segment(&rectified, window_seconds)?;
        for (window_index, w) in windows.iter().enumerate() {
            let features =
                extract_window_features(w, rec.sample_rate, rec.meta.task.weight, rec.meta.task.h)?;
            examples.push(LabeledExample {
                features,
                label: assessment.label,
                session_id: rec.meta.session_id.clone(),
                window_index,
            });
        }
    }
    if examples.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no recording is long enough for a {window_seconds}s window"
        )));
    }
    Ok(Dataset { examples, window_seconds, provenance: String::new() })
}

pub const DATASET_HEADER: &str =
    "weight,h,fft_max,fft_min,fft_mean,fft_median,fft_std,label,session_id,window_index";

/// Render a dataset as CSV text. Floats use the shortest round-trippable
/// form, so reading the file back reproduces the values bit for bit.
pub fn dataset_to_csv(data: &Dataset) -> Result<String> {
    let mut out = String::from(DATASET_HEADER);
    out.push('\n');
    for ex in &data.examples {
        if ex.session_id.contains(',') {
            return Err(Error::InvalidParameter(format!(
                "session id `{}` contains a comma",
                ex.session_id
            )));
        }
        let f = &ex.features;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            f.weight,
            f.h,
            f.fft_max,
            f.fft_min,
            f.fft_mean,
            f.fft_median,
            f.fft_std,
            ex.label.as_str(),
            ex.session_id,
            ex.window_index
        ));
    }
    Ok(out)
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    fs::write(path, dataset_to_csv(data)?).map_err(|e| Error::io(path, e))
}

/// Read a dataset CSV. The window length is not stored in the table, so the
/// caller supplies it.
pub fn read_dataset_csv(path: &Path, window_seconds: f64) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header = match lines.next() {
        Some((_, h)) => h.trim(),
        None => return Err(Error::EmptyInput(format!("dataset {path_str} is empty"))),
    };
    if header != DATASET_HEADER {
        return Err(Error::MissingColumns { path: path_str, expected: DATASET_HEADER.into() });
    }
    let mut examples = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 10 {
            return Err(Error::Parse {
                path: path_str,
                line: lineno,
                detail: format!("expected 10 columns, found {}", cells.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            cells[i].parse::<f64>().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line: lineno,
                detail: format!("invalid {}: `{}`", FEATURE_NAMES[i], cells[i]),
            })
        };
        let features = FeatureVector {
            weight: num(0)?,
            h: num(1)?,
            fft_max: num(2)?,
            fft_min: num(3)?,
            fft_mean: num(4)?,
            fft_median: num(5)?,
            fft_std: num(6)?,
        };
        let label = RiskLabel::parse(cells[7]).ok_or_else(|| Error::Parse {
            path: path_str.clone(),
            line: lineno,
            detail: format!("invalid label: `{}`", cells[7]),
        })?;
        let window_index = cells[9].parse::<usize>().map_err(|_| Error::Parse {
            path: path_str.clone(),
            line: lineno,
            detail: format!("invalid window_index: `{}`", cells[9]),
        })?;
        examples.push(LabeledExample {
            features,
            label,
            session_id: cells[8].to_string(),
            window_index,
        });
    }
    if examples.is_empty() {
        return Err(Error::EmptyInput(format!("dataset {path_str} has no rows")));
    }
    Ok(Dataset { examples, window_seconds, provenance: path_str })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::niosh::{Coupling, DurationClass, LiftingTask};
    use crate::signal::SessionMeta;

    fn window(values: Vec<f64>) -> Window {
        Window { start_index: 0, values }
    }

    fn reference_task(weight: f64) -> LiftingTask {
        LiftingTask {
            weight,
            h: 15.0,
            v: 14.0,
            d: 18.0,
            a: 0.0,
            coupling: Coupling::Good,
            frequency: 10.0,
            duration: DurationClass::UpTo1h,
        }
    }

    #[test]
    fn zero_window_gives_zero_spectral_features() {
        let f = extract_window_features(&window(vec![0.0; 32]), 32.0, 10.0, 15.0).unwrap();
        assert_eq!(f.to_array(), [10.0, 15.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    // Expected values computed ahead of time with the direct O(n^2) DFT
    // oracle (see signal::tests::dft_magnitude_oracle) on this exact window.
    #[test]
    fn fixed_window_matches_frozen_oracle_values() {
        let f = extract_window_features(
            &window(vec![1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0]),
            8.0,
            10.0,
            15.0,
        )
        .unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        assert!(close(f.fft_max, 1.5771610149494752), "fft_max {}", f.fft_max);
        assert!(f.fft_min.abs() < 1e-12, "fft_min {}", f.fft_min);
        assert!(close(f.fft_mean, 0.42231159931036655), "fft_mean {}", f.fft_mean);
        assert!(close(f.fft_median, 0.056042691145995485), "fft_median {}", f.fft_median);
        assert!(close(f.fft_std, 0.6683209656205022), "fft_std {}", f.fft_std);
    }

    #[test]
    fn bin_aligned_sinusoid_features() {
        let amp = 4.0;
        let values: Vec<f64> = (0..128)
            .map(|t| amp * (2.0 * std::f64::consts::PI * 8.0 * t as f64 / 128.0).sin())
            .collect();
        let f = extract_window_features(&window(values), 128.0, 20.0, 15.0).unwrap();
        assert!((f.fft_max - amp).abs() < 1e-9);
        assert!(f.fft_min < 1e-9);
        // 63 non-DC bins follow the padded length 128; one carries everything.
        assert!((f.fft_mean - amp / 64.0).abs() < 1e-9);
    }

    #[test]
    fn single_sample_window_is_rejected() {
        let err = extract_window_features(&window(vec![1.0]), 10.0, 10.0, 15.0);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn extraction_is_deterministic_and_scales() {
        let mut rng = crate::rng::Rng::new(77);
        let values: Vec<f64> = (0..250).map(|_| rng.next_gaussian().abs()).collect();
        let a = extract_window_features(&window(values.clone()), 1000.0, 10.0, 15.0).unwrap();
        let b = extract_window_features(&window(values.clone()), 1000.0, 10.0, 15.0).unwrap();
        assert_eq!(a, b);

        let c = 3.0;
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let s = extract_window_features(&window(scaled), 1000.0, 10.0, 15.0).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-300);
        assert_eq!(s.weight, a.weight);
        assert_eq!(s.h, a.h);
        assert!(close(s.fft_max, c * a.fft_max));
        assert!(close(s.fft_min, c * a.fft_min));
        assert!(close(s.fft_mean, c * a.fft_mean));
        assert!(close(s.fft_median, c * a.fft_median));
        assert!(close(s.fft_std, c * a.fft_std));
    }

    #[test]
    fn feature_order_invariant_holds() {
        let mut rng = crate::rng::Rng::new(13);
        for _ in 0..20 {
            let values: Vec<f64> = (0..100).map(|_| rng.next_gaussian().abs() * 10.0).collect();
            let f = extract_window_features(&window(values), 1000.0, 10.0, 15.0).unwrap();
            assert!(f.fft_min <= f.fft_median && f.fft_median <= f.fft_max);
            assert!(f.fft_std >= 0.0);
            assert!(f.to_array().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn build_dataset_single_session() {
        let mut rng = crate::rng::Rng::new(5);
        let rec = EmgRecording {
            sample_rate: 100.0,
            samples: (0..1000).map(|_| rng.next_gaussian() * 30.0).collect(),
            meta: SessionMeta {
                session_id: "s1".into(),
                muscle_site: "TH".into(),
                task: reference_task(10.0),
            },
        };
        let ds =
            build_dataset(&[rec], 1.0, &RiskThresholds::default(), UnitSystem::UsCustomary)
                .unwrap();
        assert_eq!(ds.len(), 10);
        assert!(ds.examples.iter().all(|ex| ex.label == RiskLabel::Nominal));
        assert_eq!(
            ds.examples.iter().map(|ex| ex.window_index).collect::<Vec<_>>(),
            (0..10).collect::<Vec<_>>()
        );
    }

    #[test]
    fn build_dataset_rejects_unusable_corpus() {
        let short = EmgRecording {
            sample_rate: 100.0,
            samples: vec![1.0; 10], // 0.1 s
            meta: SessionMeta {
                session_id: "s1".into(),
                muscle_site: "TH".into(),
                task: reference_task(10.0),
            },
        };
        let err = build_dataset(&[short], 1.0, &RiskThresholds::default(), UnitSystem::UsCustomary);
        assert!(matches!(err, Err(Error::EmptyInput(_))));
        let err =
            build_dataset(&[], 1.0, &RiskThresholds::default(), UnitSystem::UsCustomary);
        assert!(matches!(err, Err(Error::EmptyInput(_))));
    }

    #[test]
    fn dataset_csv_round_trip() {
        let examples = vec![
            LabeledExample {
                features: FeatureVector {
                    weight: 10.0,
                    h: 15.0,
                    fft_max: 1.5,
                    fft_min: 0.25,
                    fft_mean: 0.125,
                    fft_median: 0.123456789012345,
                    fft_std: 3.0e-7,
                },
                label: RiskLabel::Nominal,
                session_id: "s001".into(),
                window_index: 0,
            },
            LabeledExample {
                features: FeatureVector {
                    weight: 35.0,
                    h: 17.0,
                    fft_max: 33.5,
                    fft_min: 0.0,
                    fft_mean: 4.25,
                    fft_median: 2.5,
                    fft_std: 1.75,
                },
                label: RiskLabel::High,
                session_id: "s002".into(),
                window_index: 7,
            },
        ];
        let ds = Dataset { examples, window_seconds: 0.5, provenance: "test".into() };
        let dir = std::env::temp_dir().join("liftrisk_features_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("dataset.csv");
        write_dataset_csv(&path, &ds).unwrap();
        let back = read_dataset_csv(&path, 0.5).unwrap();
        assert_eq!(back.examples, ds.examples);
        assert_eq!(back.window_seconds, 0.5);
    }
}
