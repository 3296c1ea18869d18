//! sEMG recording handling: ingestion, rectification, fixed-window
//! segmentation, single-sided magnitude spectra, and averaged-peak statistics.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, Complex};
use crate::niosh::LiftingTask;

/// Session context carried alongside the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    /// Muscle site tag, e.g. "TH" for the thoracic (upper back) placement.
    pub muscle_site: String,
    pub task: LiftingTask,
}

/// A sampled sEMG time series in microvolts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmgRecording {
    pub sample_rate: f64,
    pub samples: Vec<f64>,
    pub meta: SessionMeta,
}

impl EmgRecording {
    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// A contiguous slice of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start_index: usize,
    pub values: Vec<f64>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Single-sided amplitude spectrum in microvolts. A bin-aligned sinusoid of
/// amplitude `a` reads `a` at its bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub bin_width: f64,
    pub magnitudes: Vec<f64>,
}

pub const RECORDING_HEADER: &str = "time_s,emg_uV";

/// Maximum relative deviation of any time step from the median step.
const STEP_TOLERANCE: f64 = 0.01;

/// Load a recording CSV (`time_s,emg_uV`), inferring the sample rate from
/// the median time step and rejecting files whose steps deviate from it by
/// more than 1%.
pub fn load_recording(path: &Path, meta: SessionMeta) -> Result<EmgRecording> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header = match lines.next() {
        Some((_, h)) => h.trim(),
        None => return Err(Error::EmptyInput(format!("recording {path_str} is empty"))),
    };
    if header != RECORDING_HEADER {
        return Err(Error::MissingColumns { path: path_str, expected: RECORDING_HEADER.into() });
    }

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let mut cells = line.split(',').map(str::trim);
        let (t, v) = match (cells.next(), cells.next(), cells.next()) {
            (Some(t), Some(v), None) => (t, v),
            _ => {
                return Err(Error::Parse {
                    path: path_str,
                    line: lineno,
                    detail: "expected 2 columns".into(),
                })
            }
        };
        let parse = |s: &str, name: &str| -> Result<f64> {
            let x: f64 = s.parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line: lineno,
                detail: format!("invalid {name}: `{s}`"),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    path: path_str.clone(),
                    line: lineno,
                    detail: format!("non-finite {name}"),
                });
            }
            Ok(x)
        };
        let t = parse(t, "time_s")?;
        let v = parse(v, "emg_uV")?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::NonMonotoneTime { path: path_str, row: lineno });
            }
        }
        times.push(t);
        samples.push(v);
    }

    if samples.is_empty() {
        return Err(Error::EmptyInput(format!("recording {path_str} has no samples")));
    }
    if samples.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "recording {path_str} needs at least two samples to infer a sample rate"
        )));
    }

    let mut steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let median = {
        let mut sorted = steps.clone();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        if sorted.len().is_multiple_of(2) { (sorted[mid - 1] + sorted[mid]) / 2.0 } else { sorted[mid] }
    };
    for (i, step) in steps.drain(..).enumerate() {
        if (step - median).abs() > STEP_TOLERANCE * median {
            return Err(Error::NonUniformSampling {
                path: path_str,
                detail: format!(
                    "step {step} at row {} deviates from median {median} by more than {}%",
                    i + 2,
                    STEP_TOLERANCE * 100.0
                ),
            });
        }
    }

    Ok(EmgRecording { sample_rate: 1.0 / median, samples, meta })
}

/// Write a recording CSV in the format `load_recording` reads.
pub fn write_recording(path: &Path, rec: &EmgRecording) -> Result<()> {
    let mut out = String::with_capacity(rec.samples.len() * 16 + 16);
    out.push_str(RECORDING_HEADER);
    out.push('\n');
    let dt = 1.0 / rec.sample_rate;
    for (i, v) in rec.samples.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i as f64 * dt, v));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Replace every sample by its absolute value. Metadata is untouched.
pub fn rectify(rec: &EmgRecording) -> EmgRecording {
    EmgRecording {
        sample_rate: rec.sample_rate,
        samples: rec.samples.iter().map(|v| v.abs()).collect(),
        meta: rec.meta.clone(),
    }
}

/// Number of samples per window of `window_seconds` at `sample_rate`.
pub fn window_sample_count(window_seconds: f64, sample_rate: f64) -> Result<usize> {
    if !(window_seconds > 0.0 && window_seconds.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "window length must be positive, got {window_seconds}"
        )));
    }
    let n = (window_seconds * sample_rate).round();
    if n < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "window of {window_seconds}s holds no samples at {sample_rate} Hz"
        )));
    }
    Ok(n as usize)
}

/// Cut a recording into consecutive non-overlapping windows, dropping the
/// trailing partial window. A window longer than the recording yields an
/// empty sequence.
pub fn segment(rec: &EmgRecording, window_seconds: f64) -> Result<Vec<Window>> {
    let len = window_sample_count(window_seconds, rec.sample_rate)?;
    Ok(rec
        .samples
        .chunks_exact(len)
        .enumerate()
        .map(|(i, chunk)| Window { start_index: i * len, values: chunk.to_vec() })
        .collect())
}

/// Single-sided amplitude spectrum of a window, zero-padded to the next
/// power of two N:
///
/// * bin 0 (DC): |X_0| / N
/// * interior bins: 2 |X_k| / N
/// * Nyquist bin: |X_{N/2}| / N
///
/// Bin width is `sample_rate / N`.
pub fn fft_magnitude(w: &Window, sample_rate: f64) -> Spectrum {
    assert!(!w.is_empty(), "cannot transform an empty window");
    let n = fft::next_power_of_two(w.len());
    let mut buf = vec![Complex::default(); n];
    for (slot, &v) in buf.iter_mut().zip(&w.values) {
        *slot = Complex::from_real(v);
    }
    fft::fft_in_place(&mut buf);
    let scale = 1.0 / n as f64;
    let mut magnitudes = Vec::with_capacity(n / 2 + 1);
    for (k, value) in buf.iter().take(n / 2 + 1).enumerate() {
        let interior = k != 0 && !(n.is_multiple_of(2) && k == n / 2);
        let factor = if interior { 2.0 } else { 1.0 };
        magnitudes.push(factor * value.abs() * scale);
    }
    Spectrum { bin_width: sample_rate / n as f64, magnitudes }
}

/// Arithmetic mean of per-window maxima. Intended for windows of a rectified
/// recording, where the maximum is the peak absolute amplitude.
pub fn average_peak(windows: &[Window]) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::EmptyInput("average peak of an empty window sequence".into()));
    }
    let mut sum = 0.0;
    for w in windows {
        let max = w.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::EmptyInput("average peak over an empty window".into()));
        }
        sum += max;
    }
    Ok(sum / windows.len() as f64)
}

/// Arithmetic mean of per-spectrum maxima, excluding the DC bin.
pub fn average_peak_spectra(spectra: &[Spectrum]) -> Result<f64> {
    if spectra.is_empty() {
        return Err(Error::EmptyInput("average peak of an empty spectrum sequence".into()));
    }
    let mut sum = 0.0;
    for s in spectra {
        if s.magnitudes.len() < 2 {
            return Err(Error::InvalidParameter("spectrum has no bins beyond DC".into()));
        }
        sum += s.magnitudes[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(sum / spectra.len() as f64)
}
