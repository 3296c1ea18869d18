//! Run configuration: defaults, flat key=value config file, flag overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use liftrisk_core::ml::{AlgorithmSpec, HoldoutParams};
use liftrisk_core::niosh::{RiskThresholds, UnitSystem};
use liftrisk_core::pipeline::{InputSource, PipelineConfig};
use liftrisk_core::synth::{self, SessionProtocol};

use crate::CliError;

pub const CONFIG_FILE_HELP: &str = "\
CONFIG FILE (--config <file>; `key = value` per line, `#` comments):
  seed          = 7                     master seed for all randomness
  windows       = 1.0,0.5,0.25         window sizes in seconds
  algos         = decision_tree,svm,knn,random_forest
  knn_k         = 1                    neighbour count for knn
  thresholds    = 1.2,2.8              LI bounds: nominal upper, high lower
  units         = us                   us | metric
  reps          = 10                   holdout repetitions
  test_fraction = 0.25                 held-out share per repetition
  threads       = 0                    worker threads (0 = auto)
  duration_seconds = 60                synthetic session length
  protocol      = <file>               protocol CSV for the synthetic corpus
  manifest      = <dir-or-file>        recorded corpus instead of synthetic
  out           = <dir>                output directory

Flags override config-file values. Without `manifest`, the run generates
the standard 54-session synthetic corpus (or `protocol` if given).";

/// Raw settings before resolution, so later sources can override earlier
/// ones field by field.
#[derive(Debug, Default, Clone)]
pub struct RunSettings {
    pub seed: Option<u64>,
    pub windows: Option<Vec<f64>>,
    pub algos: Option<Vec<String>>,
    pub knn_k: Option<usize>,
    pub thresholds: Option<RiskThresholds>,
    pub units: Option<UnitSystem>,
    pub reps: Option<usize>,
    pub test_fraction: Option<f64>,
    pub threads: Option<usize>,
    pub duration_seconds: Option<f64>,
    pub protocol: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl RunSettings {
    /// Overlay `other` on top of `self` (set fields in `other` win).
    pub fn overridden_by(mut self, other: RunSettings) -> RunSettings {
        macro_rules! take {
            ($field:ident) => {
                if other.$field.is_some() {
                    self.$field = other.$field;
                }
            };
        }
        take!(seed);
        take!(windows);
        take!(algos);
        take!(knn_k);
        take!(thresholds);
        take!(units);
        take!(reps);
        take!(test_fraction);
        take!(threads);
        take!(duration_seconds);
        take!(protocol);
        take!(manifest);
        take!(out);
        self
    }

    pub fn into_pipeline_config(self) -> Result<PipelineConfig, CliError> {
        let out_dir = self
            .out
            .ok_or_else(|| CliError::usage("an output directory is required (--out)"))?;
        let algo_names = self.algos.unwrap_or_else(|| {
            vec!["decision_tree".into(), "svm".into(), "knn".into(), "random_forest".into()]
        });
        let knn_k = self.knn_k.unwrap_or(1);
        let algorithms = algo_names
            .iter()
            .map(|name| parse_algorithm(name, knn_k))
            .collect::<Result<Vec<_>, _>>()?;
        let source = match (self.manifest, self.protocol) {
            (Some(manifest), None) => InputSource::Manifest(manifest),
            (None, protocol) => {
                let protocol = match protocol {
                    Some(path) => synth::read_protocol(&path)?,
                    None => SessionProtocol::standard(),
                };
                InputSource::Synthetic {
                    protocol,
                    duration_seconds: self.duration_seconds.unwrap_or(60.0),
                }
            }
            (Some(_), Some(_)) => {
                return Err(CliError::usage("choose either a manifest or a protocol, not both"))
            }
        };
        Ok(PipelineConfig {
            unit: self.units.unwrap_or(UnitSystem::UsCustomary),
            thresholds: self.thresholds.unwrap_or_default(),
            window_sizes: self.windows.unwrap_or_else(|| vec![1.0, 0.5, 0.25]),
            algorithms,
            holdout: HoldoutParams {
                reps: self.reps.unwrap_or(10),
                test_fraction: self.test_fraction.unwrap_or(0.25),
                threads: self.threads.unwrap_or(0),
            },
            seed: self.seed.unwrap_or(7),
            source,
            out_dir,
        })
    }
}

/// Parse a flat `key = value` config file.
pub fn read_config_file(path: &Path) -> Result<RunSettings, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "{}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                lineno + 1
            )));
        };
        pairs.insert(key.trim().to_string(), value.trim().to_string());
    }

    let mut settings = RunSettings::default();
    for (key, value) in pairs {
        let invalid = |what: &str| {
            CliError::usage(format!("config key `{key}`: invalid {what}: `{value}`"))
        };
        match key.as_str() {
            "seed" => settings.seed = Some(value.parse().map_err(|_| invalid("integer"))?),
            "windows" => settings.windows = Some(parse_windows(&value)?),
            "algos" => {
                settings.algos =
                    Some(value.split(',').map(|s| s.trim().to_string()).collect())
            }
            "knn_k" => settings.knn_k = Some(value.parse().map_err(|_| invalid("integer"))?),
            "thresholds" => settings.thresholds = Some(parse_thresholds(&value)?),
            "units" => settings.units = Some(parse_units(&value)?),
            "reps" => settings.reps = Some(value.parse().map_err(|_| invalid("integer"))?),
            "test_fraction" => {
                settings.test_fraction = Some(value.parse().map_err(|_| invalid("number"))?)
            }
            "threads" => settings.threads = Some(value.parse().map_err(|_| invalid("integer"))?),
            "duration_seconds" => {
                settings.duration_seconds = Some(value.parse().map_err(|_| invalid("number"))?)
            }
            "protocol" => settings.protocol = Some(PathBuf::from(value)),
            "manifest" => settings.manifest = Some(PathBuf::from(value)),
            "out" => settings.out = Some(PathBuf::from(value)),
            _ => {
                return Err(CliError::usage(format!(
                    "unknown config key `{key}` in {}",
                    path.display()
                )))
            }
        }
    }
    Ok(settings)
}

pub fn parse_algorithm(name: &str, knn_k: usize) -> Result<AlgorithmSpec, CliError> {
    match name.trim() {
        "decision_tree" => Ok(AlgorithmSpec::decision_tree()),
        "random_forest" => Ok(AlgorithmSpec::random_forest()),
        "knn" => Ok(AlgorithmSpec::knn(knn_k)),
        "svm" => Ok(AlgorithmSpec::svm()),
        other => Err(CliError::usage(format!(
            "unknown algorithm `{other}` (expected decision_tree, random_forest, knn, or svm)"
        ))),
    }
}

pub fn parse_windows(value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("invalid window size `{s}`")))
        })
        .collect()
}

pub fn parse_thresholds(value: &str) -> Result<RiskThresholds, CliError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::usage(format!(
            "thresholds must be `t_nominal,t_high`, got `{value}`"
        )));
    }
    let parse = |s: &str| {
        s.parse::<f64>().map_err(|_| CliError::usage(format!("invalid threshold `{s}`")))
    };
    Ok(RiskThresholds::new(parse(parts[0])?, parse(parts[1])?)?)
}

pub fn parse_units(value: &str) -> Result<UnitSystem, CliError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "us" => Ok(UnitSystem::UsCustomary),
        "metric" => Ok(UnitSystem::Metric),
        other => Err(CliError::usage(format!("unknown unit system `{other}` (us or metric)"))),
    }
}
