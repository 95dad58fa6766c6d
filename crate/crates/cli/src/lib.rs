//! Command-line front end for the homograph word-expert benchmark.

pub mod commands;
pub mod config;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homobench::evalharness::{BucketDimension, FewShotMode};
use homobench::expert::ClassPolicy;
use homobench::probe::Similarity;
use homobench::AggregationStrategy;

use config::{ExperimentConfig, GradcheckModel, Scenario};

pub const OUT_DIR_ENV: &str = "HOMOBENCH_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "homobench", version, about = "Homograph word-expert benchmark")]
pub struct Cli {
    /// TOML experiment config; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for homographs, folds and rounds.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check challenge sets and write a manifest.
    Validate(SetArgs),
    /// Print the header and record summary of HXE1 files.
    EmbedDescribe(DescribeArgs),
    /// Train one word expert per set on all of its sentences.
    TrainExpert(TrainArgs),
    /// k-fold cross-validation.
    EvalCv(CvArgs),
    /// Repeated few-shot rounds.
    EvalFewshot(FewShotArgs),
    /// Few-shot centroid probing.
    ProbeCentroid(ProbeArgs),
    /// Mean macro F1 per bucket over saved reports.
    BucketReport(BucketArgs),
    /// Proxy-classifier candidate mining over a text corpus.
    Mine(MineArgs),
    /// SVG bar chart of bucketed reports.
    Plot(BucketArgs),
    /// Finite-difference gradient check on random small models.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SetArgs {
    /// Challenge-set JSONL file; repeatable.
    #[arg(long = "set", value_name = "FILE")]
    pub sets: Vec<PathBuf>,
    /// Manifest written by `validate`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[command(flatten)]
    pub sets: SetArgs,
    /// HXE1 embeddings, one per set in order; repeatable.
    #[arg(long = "emb", value_name = "FILE")]
    pub embeddings: Vec<PathBuf>,
    /// Directory with `<set stem>.hxe` files.
    #[arg(long)]
    pub emb_dir: Option<PathBuf>,
    /// HXW1 word-vector table for the baseline.
    #[arg(long)]
    pub word_vectors: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    /// Require embedding files with this masked flag.
    #[arg(long)]
    pub masked: Option<bool>,
    /// first | sum | average
    #[arg(long)]
    pub aggregation: Option<AggregationStrategy>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden_size: Option<usize>,
    #[arg(long)]
    pub hidden_layers: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub lstm_hidden: Option<usize>,
    /// Train even when an analysis has no examples.
    #[arg(long)]
    pub lenient_classes: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub k: Option<usize>,
    /// Plan folds even when an analysis has fewer than k sentences.
    #[arg(long)]
    pub lenient_folds: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Mlp,
    Centroid,
}

#[derive(Debug, Clone, Args)]
pub struct FewShotArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Training sentences per analysis.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimilarityArg {
    Dot,
    Cosine,
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long, value_enum)]
    pub similarity: Option<SimilarityArg>,
}

#[derive(Debug, Clone, Args)]
pub struct BucketArgs {
    /// Report files or directories of `*.report.json`; repeatable.
    #[arg(long = "reports", value_name = "PATH")]
    pub reports: Vec<PathBuf>,
    /// Masked-scenario reports for the paired comparison.
    #[arg(long = "masked-reports", value_name = "PATH")]
    pub masked_reports: Vec<PathBuf>,
    /// category | analysis-count | skew-ratio | piece-count | masked | provider
    #[arg(long = "by")]
    pub dimension: Option<BucketDimension>,
    /// Comma-separated upper edges of the skew buckets.
    #[arg(long, value_delimiter = ',')]
    pub skew_edges: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct MineArgs {
    /// Whitespace-tokenized text, one sentence per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long)]
    pub word_vectors: Option<PathBuf>,
    /// Size of the initial uniform sample of form occurrences.
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Proxy A contrast words, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub proxy_words: Option<Vec<String>>,
    /// Proxy B: this many most distant table words.
    #[arg(long)]
    pub distant: Option<usize>,
    /// Proxy C: this many random table words.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    /// One classifier over all proxies instead of one per proxy.
    #[arg(long)]
    pub pooled: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lstm_hidden: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    #[arg(long, value_enum)]
    pub model: Option<GradcheckModel>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

impl SetArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if !self.sets.is_empty() {
            cfg.sets = self.sets.clone();
        }
        if self.manifest.is_some() {
            cfg.manifest = self.manifest.clone();
        }
    }
}

impl DataArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        self.sets.apply(cfg);
        if !self.embeddings.is_empty() {
            cfg.embeddings = self.embeddings.clone();
        }
        set_opt(&mut cfg.emb_dir, &self.emb_dir);
        set_opt(&mut cfg.word_vectors, &self.word_vectors);
        set(&mut cfg.scenario, self.scenario);
        if self.masked.is_some() {
            cfg.masked = self.masked;
        }
        set(&mut cfg.aggregation, self.aggregation);
    }
}

impl ModelArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        let e = &mut cfg.expert;
        set(&mut e.epochs, self.epochs);
        set(&mut e.mlp.hidden_size, self.hidden_size);
        set(&mut e.mlp.hidden_layers, self.hidden_layers);
        set(&mut e.adam.learning_rate, self.learning_rate);
        set(&mut e.lstm_hidden, self.lstm_hidden);
        if self.lenient_classes {
            e.class_policy = ClassPolicy::Lenient;
        }
    }
}

impl BucketArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if !self.reports.is_empty() {
            cfg.bucket.reports = self.reports.clone();
        }
        if !self.masked_reports.is_empty() {
            cfg.bucket.masked_reports = self.masked_reports.clone();
        }
        set(&mut cfg.bucket.dimension, self.dimension);
        set(&mut cfg.bucket.skew_edges, self.skew_edges.clone());
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T: Clone>(slot: &mut Option<T>, value: &Option<T>) {
    if value.is_some() {
        slot.clone_from(value);
    }
}

impl Cli {
    /// Layers defaults, the config file, the output-directory env var and
    /// flags, in increasing precedence.
    pub fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        if self.jobs.is_some() {
            cfg.jobs = self.jobs;
        }
        set(&mut cfg.seed, self.seed);
        let name = match &self.command {
            Command::Validate(a) => {
                a.apply(&mut cfg);
                "validate"
            }
            Command::EmbedDescribe(a) => {
                a.data.apply(&mut cfg);
                "embed-describe"
            }
            Command::TrainExpert(a) => {
                a.data.apply(&mut cfg);
                a.model.apply(&mut cfg);
                "train-expert"
            }
            Command::EvalCv(a) => {
                a.data.apply(&mut cfg);
                a.model.apply(&mut cfg);
                set(&mut cfg.k, a.k);
                if a.lenient_folds {
                    cfg.stratification = homobench::dataset::StratificationMode::Lenient;
                }
                "eval-cv"
            }
            Command::EvalFewshot(a) => {
                a.data.apply(&mut cfg);
                a.model.apply(&mut cfg);
                set(&mut cfg.fewshot.n, a.n);
                if a.rounds.is_some() {
                    cfg.fewshot.rounds = a.rounds;
                }
                if let Some(mode) = a.mode {
                    cfg.fewshot.mode = match mode {
                        ModeArg::Mlp => FewShotMode::Mlp,
                        ModeArg::Centroid => FewShotMode::Centroid,
                    };
                }
                "eval-fewshot"
            }
            Command::ProbeCentroid(a) => {
                a.data.apply(&mut cfg);
                cfg.scenario = Scenario::Centroid;
                cfg.fewshot.mode = FewShotMode::Centroid;
                set(&mut cfg.fewshot.n, a.n);
                if a.rounds.is_some() {
                    cfg.fewshot.rounds = a.rounds;
                }
                if let Some(s) = a.similarity {
                    cfg.similarity = match s {
                        SimilarityArg::Dot => Similarity::Dot,
                        SimilarityArg::Cosine => Similarity::Cosine,
                    };
                }
                "probe-centroid"
            }
            Command::BucketReport(a) => {
                a.apply(&mut cfg);
                "bucket-report"
            }
            Command::Plot(a) => {
                a.apply(&mut cfg);
                "plot"
            }
            Command::Mine(a) => {
                let m = &mut cfg.mining;
                set_opt(&mut m.corpus, &a.corpus);
                set_opt(&mut m.form, &a.form);
                set(&mut m.sample_size, a.sample_size);
                set(&mut m.proxy_words, a.proxy_words.clone());
                set_opt(&mut m.distant, &a.distant);
                set_opt(&mut m.random, &a.random);
                set(&mut m.model.threshold, a.threshold);
                set(&mut m.model.window, a.window);
                set(&mut m.model.epochs, a.epochs);
                set(&mut m.model.lstm_hidden, a.lstm_hidden);
                if a.pooled {
                    m.model.pooled = true;
                }
                set_opt(&mut cfg.word_vectors, &a.word_vectors);
                "mine"
            }
            Command::Gradcheck(a) => {
                set(&mut cfg.gradcheck.model, a.model);
                set(&mut cfg.gradcheck.instances, a.instances);
                set(&mut cfg.gradcheck.tolerance, a.tolerance);
                "gradcheck"
            }
        };
        cfg.command = name.to_string();
        Ok(cfg)
    }
}

/// Parses `argv`, runs the command and returns the process exit code:
/// 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match cli.resolve().and_then(|cfg| commands::execute(&cfg)) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}
