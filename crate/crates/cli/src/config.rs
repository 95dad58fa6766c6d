//! Experiment configuration.
//!
//! The config file is TOML. Every key is optional; missing keys take the
//! defaults below, and command-line flags override file values. Each run
//! writes the fully resolved config to `<out_dir>/config.toml`, and that file
//! reproduces the run when passed back with `--config`.
//!
//! ```toml
//! out_dir = "runs/cv"
//! sets = ["data/h1.jsonl"]
//! embeddings = ["emb/h1.hxe"]
//! scenario = "contextual"      # contextual | baseline | centroid
//! aggregation = "first"        # first | sum | average
//! k = 10
//! seed = 7
//!
//! [fewshot]
//! n = 5
//! mode = "mlp"                 # mlp | centroid
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use homobench::dataset::StratificationMode;
use homobench::evalharness::{BucketDimension, FewShotMode};
use homobench::expert::ExpertConfig;
use homobench::mining::MiningConfig;
use homobench::probe::Similarity;
use homobench::AggregationStrategy;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_OUT_DIR: &str = "homobench-out";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// MLP over contextual target embeddings.
    #[default]
    Contextual,
    /// BiLSTM over word2vec context.
    Baseline,
    /// Dot-product centroid probe over contextual embeddings.
    Centroid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FewShotSettings {
    pub n: usize,
    /// Defaults to 10 for the MLP and 200 for the centroid probe.
    pub rounds: Option<usize>,
    pub mode: FewShotMode,
}

impl Default for FewShotSettings {
    fn default() -> Self {
        Self {
            n: 5,
            rounds: None,
            mode: FewShotMode::Mlp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BucketSettings {
    pub reports: Vec<PathBuf>,
    /// Masked-scenario reports for the paired comparison.
    pub masked_reports: Vec<PathBuf>,
    pub dimension: BucketDimension,
    pub skew_edges: Vec<f64>,
}

impl Default for BucketSettings {
    fn default() -> Self {
        Self {
            reports: Vec::new(),
            masked_reports: Vec::new(),
            dimension: BucketDimension::Category,
            skew_edges: homobench::evalharness::BucketConfig::default().skew_edges,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningSettings {
    pub corpus: Option<PathBuf>,
    pub form: Option<String>,
    pub sample_size: usize,
    /// Proxy A: explicit contrast words.
    pub proxy_words: Vec<String>,
    /// Proxy B: number of most distant word2vec neighbours.
    pub distant: Option<usize>,
    /// Proxy C: number of random vocabulary words.
    pub random: Option<usize>,
    pub model: MiningConfig,
}

impl Default for MiningSettings {
    fn default() -> Self {
        Self {
            corpus: None,
            form: None,
            sample_size: homobench::mining::DEFAULT_SAMPLE_SIZE,
            proxy_words: Vec::new(),
            distant: None,
            random: None,
            model: MiningConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GradcheckModel {
    Mlp,
    BilstmMlp,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSettings {
    pub model: GradcheckModel,
    pub instances: usize,
    pub tolerance: f64,
}

impl Default for GradcheckSettings {
    fn default() -> Self {
        Self {
            model: GradcheckModel::Both,
            instances: 100,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    pub out_dir: PathBuf,
    /// Concurrent homographs, folds and rounds; `None` uses every core.
    pub jobs: Option<usize>,
    pub sets: Vec<PathBuf>,
    /// JSON manifest written by `validate`; its sets are appended to `sets`.
    pub manifest: Option<PathBuf>,
    /// One HXE1 file per set, in the same order.
    pub embeddings: Vec<PathBuf>,
    /// Directory holding `<set stem>.hxe` for every set.
    pub emb_dir: Option<PathBuf>,
    pub word_vectors: Option<PathBuf>,
    pub scenario: Scenario,
    /// When set, embedding files must have this masked flag.
    pub masked: Option<bool>,
    pub aggregation: AggregationStrategy,
    pub similarity: Similarity,
    pub stratification: StratificationMode,
    pub k: usize,
    pub seed: u64,
    pub fewshot: FewShotSettings,
    pub expert: ExpertConfig,
    pub bucket: BucketSettings,
    pub mining: MiningSettings,
    pub gradcheck: GradcheckSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            jobs: None,
            sets: Vec::new(),
            manifest: None,
            embeddings: Vec::new(),
            emb_dir: None,
            word_vectors: None,
            scenario: Scenario::Contextual,
            masked: None,
            aggregation: AggregationStrategy::First,
            similarity: Similarity::Dot,
            stratification: StratificationMode::Strict,
            k: 10,
            seed: DEFAULT_SEED,
            fewshot: FewShotSettings::default(),
            expert: ExpertConfig::default(),
            bucket: BucketSettings::default(),
            mining: MiningSettings::default(),
            gradcheck: GradcheckSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing config")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Writes the resolved config into the output directory.
    pub fn save_resolved(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        let path = self.out_dir.join(CONFIG_FILE);
        std::fs::write(&path, self.to_toml()?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn fewshot_rounds(&self) -> usize {
        self.fewshot
            .rounds
            .unwrap_or_else(|| homobench::evalharness::default_rounds(self.fewshot.mode))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_fixed_point() {
        let text = ExperimentConfig::default().to_toml().unwrap();
        let parsed = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(parsed, ExperimentConfig::default());
        assert_eq!(parsed.to_toml().unwrap(), text);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml("k = 5\n[fewshot]\nmode = \"centroid\"\n").unwrap();
        assert_eq!(c.k, 5);
        assert_eq!(c.fewshot_rounds(), 200);
        assert_eq!(c.seed, DEFAULT_SEED);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("kk = 5\n").is_err());
    }
}
