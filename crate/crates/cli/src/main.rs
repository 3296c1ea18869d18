//! `liftrisk` - lifting-risk assessment from the command line.
//!
//! Thin flag-and-file plumbing over the library: every artifact a
//! subcommand writes is reproducible with direct library calls under the
//! same parameters.
//!
//! Exit codes: 0 success, 1 invalid usage or configuration, 2 unreadable or
//! malformed data, 3 internal (optimizer) failure.

mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use liftrisk_core::error::Error as CoreError;
use liftrisk_core::features;
use liftrisk_core::ml::{self, HoldoutParams};
use liftrisk_core::niosh::{self, Coupling, DurationClass, LiftingTask, UnitSystem};
use liftrisk_core::pipeline::{self, InputSource};
use liftrisk_core::synth::{self, GeneratorParams, SessionProtocol};

use config::{
    parse_algorithm, parse_thresholds, parse_units, parse_windows, read_config_file, RunSettings,
    CONFIG_FILE_HELP,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(CoreError),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(err) => match err {
                CoreError::InvalidTask(_) | CoreError::InvalidParameter(_) => 1,
                CoreError::Convergence(_) => 3,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(err) => err.fmt(f),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::Core(err)
    }
}

#[derive(Parser)]
#[command(
    name = "liftrisk",
    version,
    about = "Lifting-risk assessment: NIOSH lifting equation, sEMG spectral features, \
             risk classifiers, and a synthetic session generator",
    after_long_help = CONFIG_FILE_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute multipliers, RWL, LI, and risk class for lifting tasks
    Niosh(NioshArgs),
    /// Generate a synthetic corpus: recording CSVs plus a manifest
    Synth(SynthArgs),
    /// Extract a windowed feature dataset from a recorded corpus
    Extract(ExtractArgs),
    /// Train one classifier under repeated stratified holdout
    Train(TrainArgs),
    /// One stratified split: train, then report the test confusion matrix
    Eval(EvalArgs),
    /// Mean holdout accuracy of k-NN for every k up to a bound
    SweepK(SweepKArgs),
    /// Full pipeline: corpus, datasets, every classifier, summary
    Run(RunArgs),
    /// Per-session lifting index versus averaged spectral peak
    ReportLi(ReportLiArgs),
}

#[derive(Args)]
struct NioshArgs {
    /// Load to lift (lb or kg)
    #[arg(long)]
    weight: Option<f64>,
    /// Horizontal hand location (in or cm)
    #[arg(long)]
    h: Option<f64>,
    /// Vertical hand location at the origin (in or cm)
    #[arg(long)]
    v: Option<f64>,
    /// Vertical travel distance (in or cm)
    #[arg(long)]
    d: Option<f64>,
    /// Asymmetry angle in degrees
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    /// Grip quality: good, fair, or poor
    #[arg(long, default_value = "good")]
    coupling: String,
    /// Lifts per minute
    #[arg(long, default_value_t = 10.0)]
    freq: f64,
    /// Daily lifting duration class: 1h, 2h, or 8h
    #[arg(long, default_value = "1h")]
    duration: String,
    /// Unit system: us or metric
    #[arg(long, default_value = "us")]
    units: String,
    /// Risk thresholds as `t_nominal,t_high`
    #[arg(long, default_value = "1.2,2.8")]
    thresholds: String,
    /// Assess every row of a session manifest instead of flag geometry
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Restrict --manifest to one session id
    #[arg(long)]
    session: Option<String>,
    /// Emit JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the manifest and recordings
    #[arg(long)]
    out: PathBuf,
    /// Protocol CSV (count,load_lb,h_in); defaults to the standard 54 sessions
    #[arg(long)]
    protocol: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Session length in seconds
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
}

#[derive(Args)]
struct ExtractArgs {
    /// Corpus location: a directory holding manifest.csv or the manifest path
    #[arg(long)]
    manifest: PathBuf,
    /// Window size in seconds
    #[arg(long)]
    window: f64,
    /// Destination dataset CSV
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "1.2,2.8")]
    thresholds: String,
    #[arg(long, default_value = "us")]
    units: String,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset CSV produced by `extract` or `run`
    #[arg(long)]
    dataset: PathBuf,
    /// Window size the dataset was extracted with (seconds)
    #[arg(long)]
    window: f64,
    /// Algorithm: decision_tree, random_forest, knn, or svm
    #[arg(long)]
    algo: String,
    /// Neighbour count when --algo knn
    #[arg(long, default_value_t = 1)]
    knn_k: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0.25)]
    test_fraction: f64,
    /// Worker threads (0 = auto); never affects results
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Validation protocol: `holdout` (repeated stratified splits) or
    /// `kfold` (stratified cross-validation)
    #[arg(long, default_value = "holdout")]
    validation: String,
    /// Fold count when --validation kfold
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Write the holdout report JSON here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Window size the dataset was extracted with (seconds)
    #[arg(long)]
    window: f64,
    #[arg(long)]
    algo: String,
    #[arg(long, default_value_t = 1)]
    knn_k: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.25)]
    test_fraction: f64,
    /// Write the evaluation report JSON here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepKArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Window size the dataset was extracted with (seconds)
    #[arg(long)]
    window: f64,
    #[arg(long, default_value_t = 27)]
    k_max: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0.25)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Write `k,mean_accuracy` CSV here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated window sizes in seconds
    #[arg(long)]
    window: Option<String>,
    /// Comma-separated algorithms
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    knn_k: Option<usize>,
    /// Risk thresholds as `t_nominal,t_high`
    #[arg(long)]
    thresholds: Option<String>,
    /// Unit system: us or metric
    #[arg(long)]
    units: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Synthetic session length in seconds
    #[arg(long)]
    duration: Option<f64>,
    /// Protocol CSV for the synthetic corpus
    #[arg(long)]
    protocol: Option<PathBuf>,
    /// Recorded corpus (directory with manifest.csv) instead of synthetic
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ReportLiArgs {
    /// Recorded corpus; omitted means a synthetic corpus
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Protocol CSV for the synthetic corpus
    #[arg(long)]
    protocol: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Synthetic session length in seconds
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
    #[arg(long, default_value = "1.2,2.8")]
    thresholds: String,
    #[arg(long, default_value = "us")]
    units: String,
    /// Write the report CSV here
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Niosh(args) => cmd_niosh(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::SweepK(args) => cmd_sweep_k(args),
        Command::Run(args) => cmd_run(args),
        Command::ReportLi(args) => cmd_report_li(args),
    }
}

fn cmd_niosh(args: NioshArgs) -> Result<(), CliError> {
    let unit = parse_units(&args.units)?;
    let thresholds = parse_thresholds(&args.thresholds)?;

    let tasks: Vec<(String, LiftingTask)> = if let Some(manifest) = &args.manifest {
        let rows = niosh::read_manifest(manifest)?;
        let rows: Vec<_> = match &args.session {
            Some(id) => rows.into_iter().filter(|r| &r.session_id == id).collect(),
            None => rows,
        };
        if rows.is_empty() {
            return Err(CliError::usage("no matching manifest rows"));
        }
        rows.into_iter().map(|r| (r.session_id, r.task)).collect()
    } else {
        let require = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::usage(format!("--{name} is required without --manifest")))
        };
        let coupling = Coupling::parse(&args.coupling)
            .ok_or_else(|| CliError::usage(format!("unknown coupling `{}`", args.coupling)))?;
        let duration = DurationClass::parse(&args.duration)
            .ok_or_else(|| CliError::usage(format!("unknown duration `{}`", args.duration)))?;
        let task = LiftingTask {
            weight: require("weight", args.weight)?,
            h: require("h", args.h)?,
            v: require("v", args.v)?,
            d: require("d", args.d)?,
            a: args.a,
            coupling,
            frequency: args.freq,
            duration,
        };
        vec![("task".to_string(), task)]
    };

    let mut assessments = Vec::new();
    for (id, task) in &tasks {
        let assessment = niosh::assess_task(task, unit, &thresholds)?;
        assessments.push((id.clone(), assessment));
    }

    if args.json {
        let rows: Vec<serde_json::Value> = assessments
            .iter()
            .map(|(id, a)| {
                serde_json::json!({
                    "session_id": id,
                    "multipliers": a.rwl.multipliers,
                    "rwl": a.rwl.rwl,
                    "li": a.li,
                    "risk": a.label.as_str(),
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&rows).expect("json"));
        return Ok(());
    }

    let round = niosh::round_to_decimals;
    let unit_name = match unit {
        UnitSystem::Metric => "kg",
        UnitSystem::UsCustomary => "lb",
    };
    for (id, a) in &assessments {
        let m = &a.rwl.multipliers;
        println!("{id}:");
        println!(
            "  multipliers  HM={:.2} VM={:.2} DM={:.2} AM={:.2} FM={:.2} CM={:.2}",
            round(m.hm, 2),
            round(m.vm, 2),
            round(m.dm, 2),
            round(m.am, 2),
            round(m.fm, 2),
            round(m.cm, 2)
        );
        println!("  rwl          {:.2} {unit_name}", round(a.rwl.rwl, 2));
        println!("  li           {:.1}", round(a.li, 1));
        println!("  risk         {}", a.label.display_name());
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let protocol = match &args.protocol {
        Some(path) => synth::read_protocol(path)?,
        None => SessionProtocol::standard(),
    };
    let params = GeneratorParams { seed: args.seed, ..GeneratorParams::default() };
    let corpus = synth::generate_corpus(&protocol, args.duration, &params)?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CoreError::Io { path: args.out.display().to_string(), source: e })?;
    let manifest_rows: Vec<niosh::ManifestRow> = corpus
        .iter()
        .map(|rec| niosh::ManifestRow {
            session_id: rec.meta.session_id.clone(),
            task: rec.meta.task.clone(),
        })
        .collect();
    niosh::write_manifest(&args.out.join("manifest.csv"), &manifest_rows)?;
    for rec in &corpus {
        liftrisk_core::signal::write_recording(
            &args.out.join(format!("{}.csv", rec.meta.session_id)),
            rec,
        )?;
    }
    println!(
        "wrote {} sessions ({}s each, seed {}) to {}",
        corpus.len(),
        args.duration,
        args.seed,
        args.out.display()
    );
    Ok(())
}

fn cmd_extract(args: ExtractArgs) -> Result<(), CliError> {
    let unit = parse_units(&args.units)?;
    let thresholds = parse_thresholds(&args.thresholds)?;
    let corpus = pipeline::load_corpus(&InputSource::Manifest(args.manifest.clone()), 0)?;
    let mut dataset = features::build_dataset(&corpus, args.window, &thresholds, unit)?;
    dataset.provenance = args.manifest.display().to_string();
    features::write_dataset_csv(&args.out, &dataset)?;
    println!(
        "wrote {} examples ({} windows of {}s) to {}",
        dataset.len(),
        dataset.len(),
        args.window,
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let spec = parse_algorithm(&args.algo, args.knn_k)?;
    let dataset = features::read_dataset_csv(&args.dataset, args.window)?;
    let cell = match args.validation.as_str() {
        "holdout" => {
            let holdout = HoldoutParams {
                reps: args.reps,
                test_fraction: args.test_fraction,
                threads: args.threads,
            };
            pipeline::run_cell(&spec, &dataset, &holdout, args.seed)?
        }
        "kfold" => {
            let report = ml::k_fold_cv(&spec, &dataset, args.folds, args.seed)?;
            pipeline::CellReport {
                window_seconds: dataset.window_seconds,
                algorithm: spec.name().to_string(),
                seed: args.seed,
                reps: args.folds,
                test_fraction: 1.0 / args.folds as f64,
                n_examples: dataset.len(),
                holdout: report,
            }
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown validation protocol `{other}` (holdout or kfold)"
            )))
        }
    };
    print!("{}", pipeline::render_cell_report(&cell));
    if let Some(out) = &args.out {
        let mut json = serde_json::to_string_pretty(&cell).expect("report json");
        json.push('\n');
        pipeline::write_atomic(out, &json)?;
        println!("\nwrote {}", out.display());
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let spec = parse_algorithm(&args.algo, args.knn_k)?;
    let dataset = features::read_dataset_csv(&args.dataset, args.window)?;
    // A single-repetition holdout: one stratified split, train, evaluate.
    let holdout = HoldoutParams { reps: 1, test_fraction: args.test_fraction, threads: 1 };
    let report = ml::repeated_holdout(&spec, &dataset, &holdout, args.seed)?;
    let eval = ml::EvaluationReport::from_confusion(report.pooled_confusion);
    println!(
        "algorithm {} on {} examples: test accuracy {:.2}% ({} test points)",
        spec.name(),
        dataset.len(),
        eval.accuracy * 100.0,
        eval.n_test
    );
    print!("{}", ml::render_confusion_table(&eval.confusion));
    if let Some(out) = &args.out {
        let mut json = serde_json::to_string_pretty(&eval).expect("report json");
        json.push('\n');
        pipeline::write_atomic(out, &json)?;
        println!("\nwrote {}", out.display());
    }
    Ok(())
}

fn cmd_sweep_k(args: SweepKArgs) -> Result<(), CliError> {
    let dataset = features::read_dataset_csv(&args.dataset, args.window)?;
    let holdout = HoldoutParams {
        reps: args.reps,
        test_fraction: args.test_fraction,
        threads: args.threads,
    };
    let sweep = ml::k_sweep(&dataset, args.k_max, &holdout, args.seed)?;
    let mut csv = String::from("k,mean_accuracy\n");
    println!("{:>4}  mean accuracy (%)", "k");
    for (k, acc) in &sweep {
        println!("{k:>4}  {:.2}", acc * 100.0);
        csv.push_str(&format!("{k},{acc}\n"));
    }
    let best = sweep
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty sweep");
    println!("best: k={} at {:.2}%", best.0, best.1 * 100.0);
    if let Some(out) = &args.out {
        pipeline::write_atomic(out, &csv)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let algos = args.algo.as_ref().map(|list| list.split(',').map(|s| s.trim().to_string()).collect());
    let flags = RunSettings {
        seed: args.seed,
        windows: args.window.as_deref().map(parse_windows).transpose()?,
        algos,
        knn_k: args.knn_k,
        thresholds: args.thresholds.as_deref().map(parse_thresholds).transpose()?,
        units: args.units.as_deref().map(parse_units).transpose()?,
        reps: args.reps,
        test_fraction: args.test_fraction,
        threads: args.threads,
        duration_seconds: args.duration,
        protocol: args.protocol,
        manifest: args.manifest,
        out: args.out,
    };
    let mut settings = RunSettings::default();
    if let Some(path) = &args.config {
        settings = settings.overridden_by(read_config_file(path)?);
    }
    let config = settings.overridden_by(flags).into_pipeline_config()?;

    let cells = pipeline::run_pipeline(&config)?;
    println!(
        "{} cells ({} windows x {} algorithms) written to {}",
        cells.len(),
        config.window_sizes.len(),
        config.algorithms.len(),
        config.out_dir.display()
    );
    let summary = std::fs::read_to_string(config.out_dir.join("summary.txt"))
        .map_err(|e| CoreError::Io { path: "summary.txt".into(), source: e })?;
    print!("{summary}");
    Ok(())
}

fn cmd_report_li(args: ReportLiArgs) -> Result<(), CliError> {
    let unit = parse_units(&args.units)?;
    let thresholds = parse_thresholds(&args.thresholds)?;
    let corpus = match &args.manifest {
        Some(path) => pipeline::load_corpus(&InputSource::Manifest(path.clone()), args.seed)?,
        None => {
            let protocol = match &args.protocol {
                Some(path) => synth::read_protocol(path)?,
                None => SessionProtocol::standard(),
            };
            pipeline::load_corpus(
                &InputSource::Synthetic { protocol, duration_seconds: args.duration },
                args.seed,
            )?
        }
    };
    let rows = pipeline::emit_li_amplitude_report(&corpus, &thresholds, unit)?;
    println!(
        "{:<12}{:>8}{:>16}  risk",
        "session", "li", "avg_peak_uV"
    );
    for row in &rows {
        println!(
            "{:<12}{:>8.2}{:>16.2}  {}",
            row.session_id,
            row.li,
            row.avg_peak_uv,
            row.risk.display_name()
        );
    }
    if let Some(out) = &args.out {
        pipeline::write_li_amplitude_csv(out, &rows)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
