//! Seeded synthetic sEMG lifting sessions.
//!
//! A session is band-limited Gaussian noise, amplitude-modulated by a
//! raised-cosine burst once per lift cycle, with multiplicative per-cycle
//! jitter. The signal is scaled so that the mean of per-window rectified
//! maxima over one-second windows equals a linear peak-vs-load amplitude
//! model, which puts time-domain and spectral averaged peaks in realistic
//! microvolt ranges that grow with the lifted load.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, Complex};
use crate::niosh::{Coupling, DurationClass, LiftingTask};
use crate::rng::Rng;
use crate::signal::{EmgRecording, SessionMeta};

/// Window length over which the amplitude model is anchored: the mean of
/// per-window rectified maxima at this window length equals `peak(load)`.
const CALIBRATION_WINDOW_SECONDS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub sample_rate: f64,
    /// Frequency band carrying the sEMG energy, Hz.
    pub band: (f64, f64),
    /// Lift cycle period in seconds (6 s = 10 lifts per minute).
    pub cycle_seconds: f64,
    /// Active-lift envelope duration within each cycle, seconds.
    pub burst_seconds: f64,
    /// Linear peak model: peak(load) = amp_intercept + amp_slope * load (uV).
    pub amp_intercept: f64,
    pub amp_slope: f64,
    /// Multiplicative per-cycle amplitude noise fraction, in [0, 1).
    pub jitter: f64,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        // Amplitude anchors: peak(10 lb) = 150 uV, peak(35 lb) = 250 uV.
        GeneratorParams {
            sample_rate: 1000.0,
            band: (20.0, 450.0),
            cycle_seconds: 6.0,
            burst_seconds: 2.0,
            amp_intercept: 110.0,
            amp_slope: 4.0,
            jitter: 0.1,
            seed: 7,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample_rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if !(self.band.0 >= 0.0 && self.band.0 < self.band.1) {
            return Err(Error::InvalidParameter(format!(
                "band must satisfy 0 <= low < high, got {:?}",
                self.band
            )));
        }
        if self.sample_rate <= 2.0 * self.band.1 {
            return Err(Error::InvalidParameter(format!(
                "sample_rate {} must exceed twice the band upper edge {}",
                self.sample_rate, self.band.1
            )));
        }
        if !(self.burst_seconds > 0.0 && self.burst_seconds < self.cycle_seconds) {
            return Err(Error::InvalidParameter(format!(
                "burst ({}s) must be shorter than the cycle ({}s)",
                self.burst_seconds, self.cycle_seconds
            )));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::InvalidParameter(format!(
                "jitter must lie in [0, 1), got {}",
                self.jitter
            )));
        }
        if !(self.amp_intercept.is_finite() && self.amp_slope.is_finite()) {
            return Err(Error::InvalidParameter("amplitude model must be finite".into()));
        }
        Ok(())
    }

    /// Target per-window rectified peak for a given load, in microvolts.
    pub fn peak_for_load(&self, load: f64) -> f64 {
        self.amp_intercept + self.amp_slope * load
    }
}

/// One protocol row: how many sessions to run at a given load and reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRow {
    pub session_count: usize,
    pub load: f64,
    pub h: f64,
}

/// A table of experiment sessions. All task fields other than load and
/// horizontal reach are fixed to the reference origin geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionProtocol {
    pub rows: Vec<ProtocolRow>,
}

impl SessionProtocol {
    /// The 54-session reference protocol: loads from 10 to 35 lb at a 15 in
    /// reach, plus a final 35 lb set at 17 in.
    pub fn standard() -> Self {
        SessionProtocol {
            rows: vec![
                ProtocolRow { session_count: 9, load: 10.0, h: 15.0 },
                ProtocolRow { session_count: 10, load: 15.0, h: 15.0 },
                ProtocolRow { session_count: 10, load: 20.0, h: 15.0 },
                ProtocolRow { session_count: 10, load: 30.0, h: 15.0 },
                ProtocolRow { session_count: 10, load: 35.0, h: 15.0 },
                ProtocolRow { session_count: 5, load: 35.0, h: 17.0 },
            ],
        }
    }

    pub fn session_total(&self) -> usize {
        self.rows.iter().map(|r| r.session_count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::EmptyInput("protocol has no rows".into()));
        }
        for row in &self.rows {
            if row.session_count == 0 {
                return Err(Error::InvalidParameter("protocol row with zero sessions".into()));
            }
            if !(row.load > 0.0 && row.load.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "protocol load must be positive, got {}",
                    row.load
                )));
            }
            if !(row.h > 0.0 && row.h.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "protocol reach must be positive, got {}",
                    row.h
                )));
            }
        }
        Ok(())
    }
}

pub const PROTOCOL_HEADER: &str = "count,load_lb,h_in";

pub fn read_protocol(path: &Path) -> Result<SessionProtocol> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header = match lines.next() {
        Some((_, h)) => h.trim(),
        None => return Err(Error::EmptyInput(format!("protocol {path_str} is empty"))),
    };
    if header != PROTOCOL_HEADER {
        return Err(Error::MissingColumns { path: path_str, expected: PROTOCOL_HEADER.into() });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(Error::Parse {
                path: path_str,
                line: lineno,
                detail: format!("expected 3 columns, found {}", cells.len()),
            });
        }
        let parse_err = |name: &str, value: &str| Error::Parse {
            path: path_str.clone(),
            line: lineno,
            detail: format!("invalid {name}: `{value}`"),
        };
        rows.push(ProtocolRow {
            session_count: cells[0].parse().map_err(|_| parse_err("count", cells[0]))?,
            load: cells[1].parse().map_err(|_| parse_err("load_lb", cells[1]))?,
            h: cells[2].parse().map_err(|_| parse_err("h_in", cells[2]))?,
        });
    }
    let protocol = SessionProtocol { rows };
    protocol.validate()?;
    Ok(protocol)
}

pub fn write_protocol(path: &Path, protocol: &SessionProtocol) -> Result<()> {
    let mut out = String::from(PROTOCOL_HEADER);
    out.push('\n');
    for row in &protocol.rows {
        out.push_str(&format!("{},{},{}\n", row.session_count, row.load, row.h));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// The reference origin lifting geometry with a chosen load and reach:
/// hands at 14 in, 18 in of travel, no twisting, good coupling, 10 lifts
/// per minute for up to an hour.
pub fn reference_task(weight: f64, h: f64) -> LiftingTask {
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

/// Generate one session. Deterministic in `params.seed`.
pub fn generate_session(
    task: &LiftingTask,
    duration_seconds: f64,
    params: &GeneratorParams,
) -> Result<EmgRecording> {
    params.validate()?;
    task.validate()?;
    if !(duration_seconds > 0.0 && duration_seconds.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "session duration must be positive, got {duration_seconds}"
        )));
    }
    let n = (duration_seconds * params.sample_rate).round() as usize;
    if n == 0 {
        return Err(Error::InvalidParameter(format!(
            "session of {duration_seconds}s holds no samples at {} Hz",
            params.sample_rate
        )));
    }

    let mut rng = Rng::new(params.seed);
    let noise = band_limited_noise(&mut rng, n, params);

    // Raised-cosine burst at the head of every cycle, each cycle scaled by
    // its own jitter factor. The envelope is zero between bursts, so the
    // per-cycle scaling never introduces discontinuities.
    let n_cycles = (duration_seconds / params.cycle_seconds).ceil() as usize;
    let jitter_factors: Vec<f64> = (0..n_cycles.max(1))
        .map(|_| 1.0 + params.jitter * (2.0 * rng.next_f64() - 1.0))
        .collect();

    let dt = 1.0 / params.sample_rate;
    let mut samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            let cycle = (t / params.cycle_seconds).floor();
            let t_in_cycle = t - cycle * params.cycle_seconds;
            let env = if t_in_cycle < params.burst_seconds {
                let phase = std::f64::consts::PI * t_in_cycle / params.burst_seconds;
                phase.sin().powi(2)
            } else {
                0.0
            };
            env * jitter_factors[cycle as usize] * noise[i]
        })
        .collect();

    // Anchor the amplitude model: rescale so the mean of per-window rectified
    // maxima (one-second reference windows) equals peak(load).
    let win = ((CALIBRATION_WINDOW_SECONDS * params.sample_rate).round() as usize).clamp(1, n);
    let mut peak_sum = 0.0;
    let mut peak_count = 0usize;
    for chunk in samples.chunks_exact(win) {
        peak_sum += chunk.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        peak_count += 1;
    }
    if peak_count == 0 {
        // Recording shorter than one reference window: use it whole.
        peak_sum = samples.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        peak_count = 1;
    }
    let measured = peak_sum / peak_count as f64;
    if measured > 0.0 {
        let scale = params.peak_for_load(task.weight) / measured;
        for v in &mut samples {
            *v *= scale;
        }
    }

    Ok(EmgRecording {
        sample_rate: params.sample_rate,
        samples,
        meta: SessionMeta {
            session_id: format!("session-{}", params.seed),
            muscle_site: "TH".into(),
            task: task.clone(),
        },
    })
}

/// Gaussian noise confined to the configured band by zeroing out-of-band
/// bins of its transform.
fn band_limited_noise(rng: &mut Rng, n: usize, params: &GeneratorParams) -> Vec<f64> {
    let padded = fft::next_power_of_two(n.max(2));
    let mut buf: Vec<Complex> =
        (0..padded).map(|_| Complex::from_real(rng.next_gaussian())).collect();
    fft::fft_in_place(&mut buf);
    let bin_width = params.sample_rate / padded as f64;
    for k in 0..=padded / 2 {
        let freq = k as f64 * bin_width;
        if freq < params.band.0 || freq > params.band.1 {
            buf[k] = Complex::default();
            if k != 0 && k != padded - k {
                buf[padded - k] = Complex::default();
            }
        }
    }
    fft::inverse_fft_in_place(&mut buf);
    buf.truncate(n);
    buf.into_iter().map(|c| c.re).collect()
}

/// Generate one recording per protocol session. Session seeds derive from
/// `params.seed` plus the session ordinal, so any session can be regenerated
/// independently and in any order.
pub fn generate_corpus(
    protocol: &SessionProtocol,
    duration_per_session: f64,
    params: &GeneratorParams,
) -> Result<Vec<EmgRecording>> {
    protocol.validate()?;
    params.validate()?;
    let mut corpus = Vec::with_capacity(protocol.session_total());
    let mut ordinal = 0u64;
    for row in &protocol.rows {
        for _ in 0..row.session_count {
            let session_params =
                GeneratorParams { seed: params.seed.wrapping_add(ordinal), ..params.clone() };
            let task = reference_task(row.load, row.h);
            let mut rec = generate_session(&task, duration_per_session, &session_params)?;
            rec.meta.session_id = format!("s{:03}", ordinal + 1);
            corpus.push(rec);
            ordinal += 1;
        }
    }
    Ok(corpus)
}
