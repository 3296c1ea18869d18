//! End-to-end runs: corpus in, datasets + evaluation reports out.
//!
//! A run crosses every configured window size with every configured
//! algorithm, writing the feature dataset per window, a holdout report per
//! cell (JSON plus an aligned text table), and a top-level summary grid.
//! Outputs are written atomically and are byte-identical for identical
//! configurations.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{self, Dataset};
use crate::ml::{self, AlgorithmSpec, HoldoutParams, HoldoutReport};
use crate::niosh::{self, RiskThresholds, UnitSystem};
use crate::signal::{self, EmgRecording};
use crate::synth::{self, GeneratorParams, SessionProtocol};

/// Window length used for the session-level averaged-peak report.
pub const LI_REPORT_WINDOW_SECONDS: f64 = 1.0;

/// Where the recordings come from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// Generate a corpus in memory from a protocol.
    Synthetic { protocol: SessionProtocol, duration_seconds: f64 },
    /// Load a manifest plus recording CSVs. Accepts a directory holding
    /// `manifest.csv` or a direct path to the manifest; recordings live next
    /// to it as `<session_id>.csv`.
    Manifest(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub unit: UnitSystem,
    pub thresholds: RiskThresholds,
    pub window_sizes: Vec<f64>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub holdout: HoldoutParams,
    pub seed: u64,
    pub source: InputSource,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    /// The standard run: synthetic 54-session corpus, the three window
    /// sizes, and all four algorithms under the default holdout protocol.
    pub fn standard(out_dir: PathBuf) -> Self {
        PipelineConfig {
            unit: UnitSystem::UsCustomary,
            thresholds: RiskThresholds::default(),
            window_sizes: vec![1.0, 0.5, 0.25],
            algorithms: vec![
                AlgorithmSpec::decision_tree(),
                AlgorithmSpec::svm(),
                AlgorithmSpec::knn(1),
                AlgorithmSpec::random_forest(),
            ],
            holdout: HoldoutParams::default(),
            seed: 7,
            source: InputSource::Synthetic {
                protocol: SessionProtocol::standard(),
                duration_seconds: 60.0,
            },
            out_dir,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        if self.window_sizes.is_empty() {
            return Err(Error::InvalidParameter("no window sizes configured".into()));
        }
        for &w in &self.window_sizes {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "window sizes must be positive, got {w}"
                )));
            }
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("no algorithms configured".into()));
        }
        for spec in &self.algorithms {
            spec.validate()?;
        }
        if self.holdout.reps == 0 {
            return Err(Error::InvalidParameter("holdout needs at least one repetition".into()));
        }
        if !(self.holdout.test_fraction > 0.0 && self.holdout.test_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test fraction must lie in (0, 1), got {}",
                self.holdout.test_fraction
            )));
        }
        match &self.source {
            InputSource::Synthetic { protocol, duration_seconds } => {
                protocol.validate()?;
                if !(*duration_seconds > 0.0 && duration_seconds.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "session duration must be positive, got {duration_seconds}"
                    )));
                }
            }
            InputSource::Manifest(_) => {}
        }
        Ok(())
    }
}

/// One (window size, algorithm) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub window_seconds: f64,
    pub algorithm: String,
    pub seed: u64,
    pub reps: usize,
    pub test_fraction: f64,
    pub n_examples: usize,
    pub holdout: HoldoutReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SummaryCell {
    window: String,
    algorithm: String,
    mean_accuracy: f64,
    spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Summary {
    seed: u64,
    windows: Vec<f64>,
    algorithms: Vec<String>,
    cells: Vec<SummaryCell>,
}

/// Resolve the input source into recordings.
pub fn load_corpus(source: &InputSource, seed: u64) -> Result<Vec<EmgRecording>> {
    match source {
        InputSource::Synthetic { protocol, duration_seconds } => {
            let params = GeneratorParams { seed, ..GeneratorParams::default() };
            synth::generate_corpus(protocol, *duration_seconds, &params)
        }
        InputSource::Manifest(path) => {
            let (manifest_path, dir) = if path.extension().is_some_and(|e| e == "csv") {
                (path.clone(), path.parent().unwrap_or(Path::new(".")).to_path_buf())
            } else {
                (path.join("manifest.csv"), path.clone())
            };
            let rows = niosh::read_manifest(&manifest_path)?;
            rows.into_iter()
                .map(|row| {
                    let rec_path = dir.join(format!("{}.csv", row.session_id));
                    signal::load_recording(
                        &rec_path,
                        signal::SessionMeta {
                            session_id: row.session_id,
                            muscle_site: "TH".into(),
                            task: row.task,
                        },
                    )
                })
                .collect()
        }
    }
}

/// Short file-name tag for a window size: 0.5 becomes "w0.5s".
pub fn window_label(window_seconds: f64) -> String {
    format!("w{window_seconds}s")
}

/// Write a file via a temporary sibling and rename, so readers never observe
/// a half-written artifact.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization");
    text.push('\n');
    text
}

/// Human-readable form of one cell report: protocol line, accuracy summary,
/// and the pooled confusion table.
pub fn render_cell_report(cell: &CellReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("algorithm:      {}\n", cell.algorithm));
    out.push_str(&format!("window:         {}s\n", cell.window_seconds));
    out.push_str(&format!("examples:       {}\n", cell.n_examples));
    out.push_str(&format!(
        "protocol:       {} reps, {:.0}% test fraction, seed {}\n",
        cell.reps,
        cell.test_fraction * 100.0,
        cell.seed
    ));
    out.push_str(&format!(
        "mean accuracy:  {:.2}%   spread (max-min): {:.2}%\n",
        cell.holdout.mean_accuracy * 100.0,
        cell.holdout.spread * 100.0
    ));
    let per_rep: Vec<String> =
        cell.holdout.per_rep_accuracies.iter().map(|a| format!("{:.2}", a * 100.0)).collect();
    out.push_str(&format!("per-rep (%):    {}\n", per_rep.join(" ")));
    out.push('\n');
    out.push_str("pooled confusion (rows = true class, columns = predicted):\n");
    out.push_str(&ml::render_confusion_table(&cell.holdout.pooled_confusion));
    out
}

/// Run the full grid. Writes per-window dataset CSVs, per-cell reports
/// (JSON + text), and the summary pair; returns every cell report in
/// (window, algorithm) configuration order.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Vec<CellReport>> {
    config.validate()?;
    let corpus = load_corpus(&config.source, config.seed)?;
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;

    let mut cells = Vec::new();
    let mut grid: Vec<Vec<f64>> = Vec::new();
    for &window in &config.window_sizes {
        let mut dataset =
            features::build_dataset(&corpus, window, &config.thresholds, config.unit)?;
        dataset.provenance = match &config.source {
            InputSource::Synthetic { .. } => format!("synthetic:seed={}", config.seed),
            InputSource::Manifest(path) => path.display().to_string(),
        };
        let label = window_label(window);
        write_atomic(
            &config.out_dir.join(format!("dataset_{label}.csv")),
            &features::dataset_to_csv(&dataset)?,
        )?;

        let mut row = Vec::new();
        for spec in &config.algorithms {
            let cell = run_cell(spec, &dataset, &config.holdout, config.seed)?;
            write_cell(&config.out_dir, &label, &cell)?;
            row.push(cell.holdout.mean_accuracy);
            cells.push(cell);
        }
        grid.push(row);
    }

    let window_labels: Vec<String> =
        config.window_sizes.iter().map(|w| format!("{w}s")).collect();
    let algorithm_names: Vec<String> =
        config.algorithms.iter().map(|s| s.name().to_string()).collect();
    let summary = Summary {
        seed: config.seed,
        windows: config.window_sizes.clone(),
        algorithms: algorithm_names.clone(),
        cells: cells
            .iter()
            .map(|c| SummaryCell {
                window: format!("{}s", c.window_seconds),
                algorithm: c.algorithm.clone(),
                mean_accuracy: c.holdout.mean_accuracy,
                spread: c.holdout.spread,
            })
            .collect(),
    };
    write_atomic(&config.out_dir.join("summary.json"), &to_pretty_json(&summary))?;
    let table = ml::render_accuracy_table(&window_labels, &algorithm_names, &grid);
    let mut text = String::from("mean holdout accuracy (%) per window size and algorithm\n\n");
    text.push_str(&table);
    write_atomic(&config.out_dir.join("summary.txt"), &text)?;

    Ok(cells)
}

/// Evaluate one (algorithm, dataset) cell.
pub fn run_cell(
    spec: &AlgorithmSpec,
    dataset: &Dataset,
    holdout: &HoldoutParams,
    seed: u64,
) -> Result<CellReport> {
    let report = ml::repeated_holdout(spec, dataset, holdout, seed)?;
    Ok(CellReport {
        window_seconds: dataset.window_seconds,
        algorithm: spec.name().to_string(),
        seed,
        reps: holdout.reps,
        test_fraction: holdout.test_fraction,
        n_examples: dataset.len(),
        holdout: report,
    })
}

fn write_cell(out_dir: &Path, window_tag: &str, cell: &CellReport) -> Result<()> {
    let stem = format!("report_{}_{}", cell.algorithm, window_tag);
    write_atomic(&out_dir.join(format!("{stem}.json")), &to_pretty_json(cell))?;
    write_atomic(&out_dir.join(format!("{stem}.txt")), &render_cell_report(cell))
}

/// One session in the LI-versus-amplitude report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiAmplitudeRow {
    pub session_id: String,
    pub li: f64,
    /// Mean over one-second windows of the peak non-DC spectral magnitude
    /// of the rectified signal, in microvolts.
    pub avg_peak_uv: f64,
    pub risk: niosh::RiskLabel,
}

/// Per-session lifting index against the frequency-domain averaged peak,
/// sorted by (LI, session id).
pub fn emit_li_amplitude_report(
    corpus: &[EmgRecording],
    thresholds: &RiskThresholds,
    unit: UnitSystem,
) -> Result<Vec<LiAmplitudeRow>> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("no sessions for the LI/amplitude report".into()));
    }
    let mut rows = Vec::with_capacity(corpus.len());
    for rec in corpus {
        let assessment = niosh::assess_task(&rec.meta.task, unit, thresholds)?;
        let rectified = signal::rectify(rec);
        let windows = signal::segment(&rectified, LI_REPORT_WINDOW_SECONDS)?;
        if windows.is_empty() {
            return Err(Error::EmptyInput(format!(
                "session {} is shorter than the {LI_REPORT_WINDOW_SECONDS}s report window",
                rec.meta.session_id
            )));
        }
        let spectra: Vec<_> =
            windows.iter().map(|w| signal::fft_magnitude(w, rec.sample_rate)).collect();
        rows.push(LiAmplitudeRow {
            session_id: rec.meta.session_id.clone(),
            li: assessment.li,
            avg_peak_uv: signal::average_peak_spectra(&spectra)?,
            risk: assessment.label,
        });
    }
    rows.sort_by(|a, b| a.li.total_cmp(&b.li).then_with(|| a.session_id.cmp(&b.session_id)));
    Ok(rows)
}

pub const LI_REPORT_HEADER: &str = "session_id,li,avg_peak_uv,risk";

pub fn write_li_amplitude_csv(path: &Path, rows: &[LiAmplitudeRow]) -> Result<()> {
    let mut out = String::from(LI_REPORT_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.session_id,
            row.li,
            row.avg_peak_uv,
            row.risk.as_str()
        ));
    }
    write_atomic(path, &out)
}
