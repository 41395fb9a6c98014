//! Command-line front end. Every stage reads and writes plain files.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::eval::{loso_cross_validate, MethodSpec};
use crate::forest::{train_forest_rows, ForestParams, RandomForest};
use crate::kv::KeyValues;
use crate::markov::{
    fit_signal_emissions, init_transitions_from_labels, BaumWelchOptions, DecodeMode, Emission,
    HmmModel, Structure,
};
use crate::pipeline::{
    labeled_features, stack_rows, train_combined, CombinedModel, CombinedParams,
};
use crate::signals::{
    build_features, load_recording, phase_indices, recording_to_csv, FeatureMatrix, FeatureMode,
    Phase, SurgeryRecording, DEFAULT_MEDIAN_WINDOW, NUM_PHASES,
};
use crate::synth::{generate_dataset, SynthConfig};
use crate::timeline::render_timeline_svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "phasekit",
    version,
    about = "Phase detection from per-second sensor signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic labeled recordings
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// `key = value` simulator configuration
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write per-frame feature matrices for every recording in a directory
    Features {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = DEFAULT_MEDIAN_WINDOW)]
        window: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on every recording in a directory
    Train {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long = "model-out")]
        model_out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Leave-one-surgery-out evaluation
    Eval {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        report: PathBuf,
        /// directory for one timeline SVG per fold
        #[arg(long)]
        svg: Option<PathBuf>,
        /// optional `fold,accuracy,mean_jaccard` summary
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Render ground truth and predictions as a timeline SVG
    Plot {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, num_args = 1..)]
        pred: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Raw,
    Filtered,
    Augmented,
}

impl From<ModeArg> for FeatureMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Raw => FeatureMode::Raw,
            ModeArg::Filtered => FeatureMode::Filtered,
            ModeArg::Augmented => FeatureMode::Augmented,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Rf,
    Hmm,
    Combined,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DecodeArg {
    Viterbi,
    Filtering,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StructureArg {
    Adjacent,
    UpperTriangular,
}

/// Flags shared by `train` and `eval`; they override the optional config file.
#[derive(Debug, Clone, Args)]
struct RunArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    decode: Option<DecodeArg>,
    #[arg(long, value_enum)]
    structure: Option<StructureArg>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long = "features-per-node")]
    features_per_node: Option<usize>,
    #[arg(long = "min-leaf")]
    min_leaf: Option<usize>,
    #[arg(long = "split-fraction")]
    split_fraction: Option<f64>,
    #[arg(long)]
    smoothing: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// `key = value` run configuration (see README for keys)
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Fully resolved parameters of a `train` or `eval` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub mode: FeatureMode,
    pub window: usize,
    pub decode: DecodeMode,
    pub structure: Structure,
    pub forest: ForestParams,
    pub split_fraction: f64,
    pub smoothing: f64,
    pub baum_welch: BaumWelchOptions,
    pub jobs: Option<usize>,
}

const RUN_KEYS: &[&str] = &[
    "mode",
    "window",
    "decode",
    "structure",
    "forest.n_trees",
    "forest.max_depth",
    "forest.features_per_node",
    "forest.min_samples_leaf",
    "split_fraction",
    "smoothing",
    "bw.max_iter",
    "bw.tol",
    "bw.update_emissions",
    "jobs",
];

fn parse_with<T>(
    kv: &KeyValues,
    key: &str,
    f: impl Fn(&str) -> Result<T, Error>,
) -> Result<Option<T>, Error> {
    kv.raw(key).map(f).transpose()
}

impl RunConfig {
    fn resolve(args: &RunArgs) -> Result<Self, Error> {
        let kv = match &args.config {
            Some(path) => KeyValues::load(path)?,
            None => KeyValues::default(),
        };
        kv.check_known(|k| RUN_KEYS.contains(&k))?;

        let mode = match args.mode {
            Some(m) => m.into(),
            None => parse_with(&kv, "mode", str::parse)?.unwrap_or(FeatureMode::Raw),
        };
        let decode = match args.decode {
            Some(DecodeArg::Viterbi) => DecodeMode::Viterbi,
            Some(DecodeArg::Filtering) => DecodeMode::Filtering,
            None => parse_with(&kv, "decode", str::parse)?.unwrap_or_default(),
        };
        let structure = match args.structure {
            Some(StructureArg::Adjacent) => Structure::Adjacent,
            Some(StructureArg::UpperTriangular) => Structure::UpperTriangular,
            None => parse_with(&kv, "structure", str::parse)?.unwrap_or_default(),
        };
        let mut forest = ForestParams::for_features(mode.n_features(), args.seed);
        forest.n_trees = args
            .trees
            .or(kv.get("forest.n_trees")?)
            .unwrap_or(forest.n_trees);
        forest.max_depth = args
            .depth
            .or(kv.get("forest.max_depth")?)
            .unwrap_or(forest.max_depth);
        forest.features_per_node = args
            .features_per_node
            .or(kv.get("forest.features_per_node")?)
            .unwrap_or(forest.features_per_node);
        forest.min_samples_leaf = args
            .min_leaf
            .or(kv.get("forest.min_samples_leaf")?)
            .unwrap_or(forest.min_samples_leaf);
        let defaults = BaumWelchOptions::default();
        let config = RunConfig {
            data: args.data.clone(),
            mode,
            window: args
                .window
                .or(kv.get("window")?)
                .unwrap_or(DEFAULT_MEDIAN_WINDOW),
            decode,
            structure,
            forest,
            split_fraction: args
                .split_fraction
                .or(kv.get("split_fraction")?)
                .unwrap_or(0.5),
            smoothing: args.smoothing.or(kv.get("smoothing")?).unwrap_or(1e-6),
            baum_welch: BaumWelchOptions {
                max_iter: kv.get("bw.max_iter")?.unwrap_or(defaults.max_iter),
                tol: kv.get("bw.tol")?.unwrap_or(defaults.tol),
                update_emissions: kv
                    .get("bw.update_emissions")?
                    .unwrap_or(defaults.update_emissions),
            },
            jobs: args.jobs.or(kv.get("jobs")?),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.combined_params().validate()?;
        if self.jobs == Some(0) {
            return Err(Error::invalid("--jobs must be at least 1"));
        }
        if !(self.baum_welch.tol >= 0.0) {
            return Err(Error::invalid("bw.tol must be non-negative"));
        }
        Ok(())
    }

    pub fn combined_params(&self) -> CombinedParams {
        CombinedParams {
            forest: self.forest.clone(),
            mode: self.mode,
            window: self.window,
            split_fraction: self.split_fraction,
            split_seed: self.forest.seed,
            smoothing: self.smoothing,
            structure: self.structure,
            decode_mode: self.decode,
            baum_welch: self.baum_welch.clone(),
        }
    }

    fn method_spec(&self, method: MethodArg) -> MethodSpec {
        match method {
            MethodArg::Rf => MethodSpec::Rf {
                forest: self.forest.clone(),
                mode: self.mode,
                window: self.window,
            },
            MethodArg::Hmm => MethodSpec::HmmSignal {
                structure: self.structure,
                smoothing: self.smoothing,
                decode: self.decode,
            },
            MethodArg::Combined => MethodSpec::Combined(self.combined_params()),
        }
    }
}

/// Document written by `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum TrainedModel {
    Rf {
        mode: FeatureMode,
        window: usize,
        forest: RandomForest,
    },
    Hmm {
        decode: DecodeMode,
        hmm: HmmModel<f64>,
    },
    Combined {
        model: Box<CombinedModel>,
    },
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult = Result<(), Failure>;

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Error> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// All `*.csv` recordings in `dir`, sorted by file name, validated strictly.
pub fn load_dir(dir: &Path) -> Result<Vec<SurgeryRecording>, Error> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| load_recording(p, true).map(|ing| ing.recording))
        .collect()
}

/// The `phase` column (1-based) of any CSV with a header containing it.
pub fn read_phase_column(path: &Path) -> Result<Vec<Phase>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid(format!("{}: empty file", path.display())))?;
    let col = header
        .split(',')
        .position(|c| c == "phase")
        .ok_or_else(|| Error::invalid(format!("{}: no phase column", path.display())))?;
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let cell = line.split(',').nth(col).unwrap_or("");
            cell.parse::<usize>()
                .ok()
                .filter(|p| (1..=NUM_PHASES).contains(p))
                .map(|p| Phase::ALL[p - 1])
                .ok_or_else(|| Error::Parse {
                    line: i + 2,
                    message: format!("{}: invalid phase {cell:?}", path.display()),
                })
        })
        .collect()
}

fn install_thread_pool(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // a pool may already exist when the CLI is driven in-process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn cmd_synth(n: usize, seed: u64, config: Option<&Path>, out: &Path) -> CliResult {
    if n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let config = match config {
        Some(p) => SynthConfig::load(p)?,
        None => SynthConfig::default(),
    };
    for rec in generate_dataset(&config, n, seed)? {
        write_atomic(
            &out.join(format!("{}.csv", rec.id)),
            recording_to_csv(&rec).as_bytes(),
        )?;
    }
    eprintln!("wrote {n} recordings to {}", out.display());
    Ok(())
}

fn cmd_features(mode: FeatureMode, window: usize, input: &Path, out: &Path) -> CliResult {
    let recordings = load_dir(input)?;
    for rec in &recordings {
        let matrix = build_features(rec, mode, window)?;
        write_atomic(
            &out.join(format!("{}.csv", rec.id)),
            matrix.to_csv(rec.labels.as_deref()).as_bytes(),
        )?;
    }
    eprintln!(
        "wrote {} {mode} feature files to {}",
        recordings.len(),
        out.display()
    );
    Ok(())
}

fn cmd_train(method: MethodArg, run: &RunConfig, model_out: &Path) -> CliResult {
    install_thread_pool(run.jobs);
    let surgeries = load_dir(&run.data)?;
    if surgeries.is_empty() {
        return Err(Failure::Data(Error::invalid(format!(
            "no recordings in {}",
            run.data.display()
        ))));
    }
    let labels: Vec<&[Phase]> = surgeries
        .iter()
        .map(|s| s.labels())
        .collect::<Result<_, _>>()?;
    let model = match method {
        MethodArg::Rf => {
            let features = labeled_features(&surgeries, run.mode, run.window)?;
            let refs: Vec<&FeatureMatrix> = features.iter().collect();
            let (rows, y) = stack_rows(&refs, &labels);
            let forest = train_forest_rows(&rows, &run.mode.feature_names(), &y, &run.forest)?;
            TrainedModel::Rf {
                mode: run.mode,
                window: run.window,
                forest,
            }
        }
        MethodArg::Hmm => {
            let features = labeled_features(&surgeries, FeatureMode::Raw, 1)?;
            let refs: Vec<&FeatureMatrix> = features.iter().collect();
            let emission = fit_signal_emissions(&refs, &labels)?;
            let seqs: Vec<Vec<usize>> = labels.iter().map(|l| phase_indices(l)).collect();
            let trans =
                init_transitions_from_labels(&seqs, NUM_PHASES, run.structure, run.smoothing)?;
            TrainedModel::Hmm {
                decode: run.decode,
                hmm: HmmModel::new(trans, Emission::Signal(emission)),
            }
        }
        MethodArg::Combined => {
            let model = train_combined(&surgeries, &run.combined_params())?;
            for w in &model.provenance.warnings {
                eprintln!("warning: {w}");
            }
            TrainedModel::Combined {
                model: Box::new(model),
            }
        }
    };
    write_atomic(
        model_out,
        serde_json::to_string_pretty(&model)
            .map_err(Error::from)?
            .as_bytes(),
    )?;
    eprintln!("wrote model to {}", model_out.display());
    Ok(())
}

fn cmd_eval(
    method: MethodArg,
    run: &RunConfig,
    report: &Path,
    svg: Option<&Path>,
    csv: Option<&Path>,
) -> CliResult {
    install_thread_pool(run.jobs);
    let surgeries = load_dir(&run.data)?;
    let spec = run.method_spec(method);
    let outcome = loso_cross_validate(&surgeries, &spec)?;
    for f in &outcome.report.per_fold {
        eprintln!(
            "fold {}: accuracy {:.4}, frames {}",
            f.held_out_id, f.accuracy, f.n_frames
        );
    }
    eprintln!(
        "{}: pooled accuracy {:.4}, mean jaccard {}",
        spec.name(),
        outcome.report.accuracy,
        outcome
            .report
            .mean_jaccard
            .map_or("n/a".into(), |j| format!("{j:.4}"))
    );
    write_atomic(report, outcome.report.to_json()?.as_bytes())?;
    if let Some(path) = csv {
        write_atomic(path, outcome.report.fold_csv().as_bytes())?;
    }
    if let Some(dir) = svg {
        let label = match method {
            MethodArg::Rf => "RF",
            MethodArg::Hmm => "HMM",
            MethodArg::Combined => "RF + HMM",
        };
        for fold in &outcome.folds {
            let mut rows = Vec::new();
            if let Some(rf) = &fold.forest_predicted {
                rows.push(("RF".to_string(), rf.clone()));
            }
            rows.push((label.to_string(), fold.predicted.clone()));
            let doc = render_timeline_svg(&fold.truth, &rows)?;
            write_atomic(&dir.join(format!("{}.svg", fold.id)), doc.as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_plot(truth: &Path, preds: &[PathBuf], out: &Path) -> CliResult {
    let truth_labels = read_phase_column(truth)?;
    let rows = preds
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((name, read_phase_column(p)?))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write_atomic(out, render_timeline_svg(&truth_labels, &rows)?.as_bytes())?;
    Ok(())
}

/// Runs one command line and returns the process exit status:
/// 0 success, 1 usage error, 2 data/validation error, 3 numerical failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Synth {
            n,
            seed,
            config,
            out,
        } => cmd_synth(*n, *seed, config.as_deref(), out),
        Command::Features {
            mode,
            window,
            input,
            out,
        } => cmd_features((*mode).into(), *window, input, out),
        Command::Train {
            method,
            model_out,
            run,
        } => RunConfig::resolve(run)
            .map_err(Failure::from)
            .and_then(|cfg| cmd_train(*method, &cfg, model_out)),
        Command::Eval {
            method,
            report,
            svg,
            csv,
            run,
        } => RunConfig::resolve(run)
            .map_err(Failure::from)
            .and_then(|cfg| cmd_eval(*method, &cfg, report, svg.as_deref(), csv.as_deref())),
        Command::Plot { truth, pred, out } => cmd_plot(truth, pred, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_DATA
            }
        }
    }
}
