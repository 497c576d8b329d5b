use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use rehabkit::error::{Error, ErrorKind, Result};
use rehabkit::evaluation::{cross_validate, make_subject_folds};
use rehabkit::io;
use rehabkit::learners::{self, Algorithm, Dataset, Hyperparameters, Model, TrainConfig};
use rehabkit::pipeline;
use rehabkit::segmentation::{self, SegmentationConfig, TemplateSet};
use rehabkit::signal::{preprocess, Exercise, PreprocessConfig, ProcessedRecording};
use rehabkit::synth::{mixed_labels, synth_session, SessionSpec};

/// Repetition segmentation and classification for single-IMU exercise
/// recordings.
#[derive(Parser)]
#[command(name = "rehabkit", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// TOML file with [preprocess], [segmentation] and [hyperparameters]
    /// tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; JSON outputs go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic recordings with ground truth.
    Synth(SynthArgs),
    /// Filter and normalize a recording.
    Preprocess {
        recording: PathBuf,
    },
    /// Detect repetitions in a recording.
    Segment {
        recording: PathBuf,
        #[arg(long)]
        segmenter: PathBuf,
        /// Also write an SVG of the detection channel with cut points.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Extract per-repetition features into a CSV.
    Features {
        recordings: Vec<PathBuf>,
        /// Segmenter model; required unless --use-truth.
        #[arg(long)]
        segmenter: Option<PathBuf>,
        /// Use the ground-truth boundaries from the sidecars instead of
        /// segmenting.
        #[arg(long)]
        use_truth: bool,
    },
    /// Train a segmenter or a repetition classifier.
    Train(TrainArgs),
    /// Subject-wise cross-validation of a classifier on a feature CSV.
    Evaluate {
        features: PathBuf,
        #[arg(long, default_value = "rf")]
        algo: AlgoArg,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value = "subject")]
        group_by: GroupBy,
    },
    /// Segment and classify a recording end to end.
    Pipeline {
        recording: PathBuf,
        #[arg(long)]
        segmenter: PathBuf,
        #[arg(long)]
        classifier: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "HS")]
    exercise: Exercise,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Deviant repetitions, placed at random.
    #[arg(long, default_value_t = 0)]
    deviant: usize,
    /// Pauses of 0.5-5 s and holds of 1-3 s.
    #[arg(long)]
    fatigue: bool,
    /// White noise, normalized units.
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    /// Strap vibration as FREQ_HZ,AMPLITUDE.
    #[arg(long, value_parser = parse_pair)]
    vibration: Option<(f64, f64)>,
    #[arg(long, default_value = "synth")]
    subject: String,
    /// Write a corpus of N subjects x 4 exercises into the --out directory
    /// instead of one recording.
    #[arg(long)]
    corpus: Option<usize>,
    /// Sessions per subject and exercise in corpus mode.
    #[arg(long, default_value_t = 2)]
    sessions: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    kind: ModelKind,
    /// Classifier algorithm.
    #[arg(long, default_value = "rf")]
    algo: AlgoArg,
    /// Feature CSV for a classifier.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Recordings with ground truth for a segmenter; synthetic templates
    /// are used when none are given.
    #[arg(long, num_args = 1..)]
    recordings: Vec<PathBuf>,
    /// Synthetic template sessions for a segmenter.
    #[arg(long, default_value_t = 400)]
    template_sessions: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Segmenter,
    Classifier,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Logistic,
    Smo,
    Adaboost,
    Rf,
    C45,
    Hoeffding,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Logistic => Algorithm::Logistic,
            AlgoArg::Smo => Algorithm::Smo,
            AlgoArg::Adaboost => Algorithm::Adaboost,
            AlgoArg::Rf => Algorithm::RandomForest,
            AlgoArg::C45 => Algorithm::C45,
            AlgoArg::Hoeffding => Algorithm::Hoeffding,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupBy {
    Subject,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected FREQ_HZ,AMPLITUDE")?;
    let a = a.trim().parse().map_err(|_| format!("bad frequency {a:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad amplitude {b:?}"))?;
    Ok((a, b))
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Config {
    preprocess: PreprocessConfig,
    segmentation: SegmentationConfig,
    hyperparameters: Hyperparameters,
}

/// An error tagged with the pipeline stage that raised it.
struct StageError {
    stage: &'static str,
    error: Error,
}

type CliResult<T> = std::result::Result<T, StageError>;

trait Stage<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|error| StageError { stage, error })
    }
}

fn exit_code(e: &StageError) -> u8 {
    if e.stage == "load_model" {
        return 3;
    }
    match e.error.kind() {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Model => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error in {}: {}", e.stage, e.error);
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
        .stage("config")?;
    let config: Config = toml::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
        .stage("config")?;
    config.segmentation.validate().stage("config")?;
    Ok(config)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => io::write_text(p, text).stage("write_output"),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn require_out<'a>(out: Option<&'a Path>, what: &str) -> CliResult<&'a Path> {
    out.ok_or_else(|| Error::InvalidArgument(format!("--out is required for {what}")))
        .stage("arguments")
}

fn load_processed(path: &Path, config: &Config) -> CliResult<ProcessedRecording> {
    let raw = io::load_recording(path).stage("load_recording")?;
    preprocess(&raw, &config.preprocess).stage("preprocess")
}

fn run(cli: Cli) -> CliResult<()> {
    let config = load_config(cli.common.config.as_deref())?;
    let seed = cli.common.seed;
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::Synth(args) => synth(args, seed, out),
        Command::Preprocess { recording } => {
            let p = load_processed(&recording, &config)?;
            let path = require_out(out, "preprocess")?;
            io::write_processed(&p, path).stage("write_output")
        }
        Command::Segment {
            recording,
            segmenter,
            plot,
        } => {
            let p = load_processed(&recording, &config)?;
            let model = io::load_model(&segmenter).stage("load_model")?;
            let seg = segmentation::select_cut_points(&p, &model, &config.segmentation, seed)
                .stage("segment")?;
            if let Some(w) = &seg.warning {
                eprintln!("warning: {w}");
            }
            if let Some(plot) = plot {
                let svg = io::svg_plot(
                    p.channel(config.segmentation.channel),
                    &seg.cut_points,
                    &seg.repetitions,
                    &format!("{} {}", p.subject_id, p.exercise),
                );
                io::write_text(&plot, &svg).stage("write_output")?;
            }
            emit(out, &io::to_json_string(&seg.to_json()).stage("write_output")?)
        }
        Command::Features {
            recordings,
            segmenter,
            use_truth,
        } => {
            let model = match (&segmenter, use_truth) {
                (Some(path), false) => Some(io::load_model(path).stage("load_model")?),
                (None, true) => None,
                _ => {
                    return Err(Error::InvalidArgument(
                        "give exactly one of --segmenter or --use-truth".into(),
                    ))
                    .stage("arguments")
                }
            };
            let mut vectors = Vec::new();
            for path in &recordings {
                let p = load_processed(path, &config)?;
                let detected = match &model {
                    Some(m) => {
                        segmentation::select_cut_points(&p, m, &config.segmentation, seed)
                            .stage("segment")?
                            .repetitions
                    }
                    None => p
                        .ground_truth_bounds
                        .clone()
                        .ok_or_else(|| {
                            Error::InvalidRecording(format!(
                                "{} has no ground-truth bounds",
                                path.display()
                            ))
                        })
                        .stage("features")?,
                };
                vectors.extend(pipeline::repetition_vectors(&p, &detected).stage("features")?);
            }
            let path = require_out(out, "features")?;
            io::write_feature_csv(path, &vectors).stage("write_output")
        }
        Command::Train(args) => train(args, &config, seed, out),
        Command::Evaluate {
            features,
            algo,
            folds,
            group_by: GroupBy::Subject,
        } => {
            let vectors = io::read_feature_csv(&features).stage("load_features")?;
            let dataset = Dataset::from_feature_vectors(&vectors).stage("load_features")?;
            let plan = make_subject_folds(&dataset, folds, seed).stage("evaluate")?;
            let mut tc = TrainConfig::new(algo.into(), seed);
            tc.hyperparameters = config.hyperparameters.clone();
            let descriptor = features
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let report = cross_validate(&dataset, &tc, &plan, &descriptor).stage("evaluate")?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            emit(out, &io::to_json_string(&report.to_json()).stage("write_output")?)
        }
        Command::Pipeline {
            recording,
            segmenter,
            classifier,
            plot,
        } => {
            let seg_model = io::load_model(&segmenter).stage("load_model")?;
            let clf_model = io::load_model(&classifier).stage("load_model")?;
            let p = load_processed(&recording, &config)?;
            let (report, seg) =
                pipeline::analyze(&p, &seg_model, &clf_model, &config.segmentation, seed)
                    .stage("pipeline")?;
            if let Some(w) = &report.summary.warning {
                eprintln!("warning: {w}");
            }
            if let Some(plot) = plot {
                let svg = io::svg_plot(
                    p.channel(config.segmentation.channel),
                    &seg.cut_points,
                    &seg.repetitions,
                    &format!("{} {}", p.subject_id, p.exercise),
                );
                io::write_text(&plot, &svg).stage("write_output")?;
            }
            emit(out, &io::to_json_string(&report).stage("write_output")?)
        }
    }
}

fn synth(args: SynthArgs, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let out = require_out(out, "synth")?;
    if let Some(subjects) = args.corpus {
        for s in 0..subjects {
            for exercise in Exercise::ALL {
                for (k, mut spec) in pipeline::subject_session_specs(s, exercise, args.sessions, seed)
                    .into_iter()
                    .enumerate()
                {
                    if args.fatigue {
                        spec = spec.fatigue();
                    }
                    spec.vibration = args.vibration;
                    let (raw, _) = synth_session(&spec).stage("synth")?;
                    let path = out.join(format!("{}_{}_{k}.csv", spec.subject_id, exercise));
                    io::save_recording(&raw, &path).stage("write_output")?;
                }
            }
        }
        return Ok(());
    }
    if args.deviant > args.reps {
        return Err(Error::InvalidArgument("--deviant exceeds --reps".into())).stage("arguments");
    }
    let mut spec = SessionSpec::clean(args.exercise, seed);
    if args.fatigue {
        spec = spec.fatigue();
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(
        learners::derive_seed(seed, 1),
    );
    spec.labels = mixed_labels(args.reps, args.deviant, &mut rng);
    spec.noise_sigma = args.noise;
    spec.vibration = args.vibration;
    spec.subject_id = args.subject;
    let (raw, _) = synth_session(&spec).stage("synth")?;
    io::save_recording(&raw, out).stage("write_output")
}

fn train(args: TrainArgs, config: &Config, seed: u64, out: Option<&Path>) -> CliResult<()> {
    let out = require_out(out, "train")?;
    let model: Model = match args.kind {
        ModelKind::Segmenter => {
            let templates = if args.recordings.is_empty() {
                let specs = pipeline::template_session_specs(args.template_sessions, seed);
                pipeline::build_template_set(&specs, &config.preprocess, &config.segmentation, seed)
                    .stage("templates")?
            } else {
                let mut set = TemplateSet::default();
                for (i, path) in args.recordings.iter().enumerate() {
                    let p = load_processed(path, config)?;
                    set.extend(
                        segmentation::templates_from_recording(
                            &p,
                            &config.segmentation,
                            learners::derive_seed(seed, i as u64),
                        )
                        .stage("templates")?,
                    );
                }
                set
            };
            segmentation::train_chunk_classifier(
                &templates,
                &config.hyperparameters.hoeffding,
                seed,
            )
            .stage("train")?
        }
        ModelKind::Classifier => {
            let path = args
                .features
                .ok_or_else(|| Error::InvalidArgument("--features is required".into()))
                .stage("arguments")?;
            let vectors = io::read_feature_csv(&path).stage("load_features")?;
            let dataset = Dataset::from_feature_vectors(&vectors).stage("load_features")?;
            let mut tc = TrainConfig::new(args.algo.into(), seed);
            tc.hyperparameters = config.hyperparameters.clone();
            learners::train(&dataset, &tc).stage("train")?
        }
    };
    io::save_model(&model, out).stage("write_output")
}
