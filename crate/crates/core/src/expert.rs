//! Per-homograph word experts.
//!
//! Two flavours share the same training loop:
//!
//! - [`ContextualExpert`]: an MLP over the homograph's own contextual embedding
//!   (optionally aggregated from several word pieces, or taken from a masked
//!   position).
//! - [`W2vBaselineExpert`]: a BiLSTM over the static word vectors of every
//!   other token in the sentence, feeding an MLP. Out-of-vocabulary tokens use
//!   a per-expert trainable UNK vector.
//!
//! Word vectors are read from the `HXW1` table format:
//!
//! ```text
//! magic "HXW1", dim u32, count u64, then count × (token u32 length + UTF-8, dim × f32)
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binio;
use crate::dataset::{ChallengeSet, LabeledSentence};
use crate::embedio::{AggregationStrategy, EmbeddingRecord, EmbeddingSet};
use crate::rng::{derive_seed, seeded};
use crate::tinynn::{
    self, argmax, AdamConfig, BiLstmMlp, Checkpoint, ContextSlot, MlpConfig, MlpModel, NnError,
};

pub const WORD_VECTOR_MAGIC: &[u8; 4] = b"HXW1";
const MAX_TOKEN_BYTES: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum ExpertError {
    #[error("no embedding for {} training sentence(s): {}", .missing.len(), preview(.missing))]
    Coverage { missing: Vec<String> },
    #[error("unknown sentence id {0:?}")]
    UnknownSentence(String),
    #[error("analysis {label} has no training examples")]
    MissingClass { label: usize },
    #[error("training set is empty")]
    EmptyTraining,
    #[error("scenario mismatch: {0}")]
    Scenario(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("word vectors: {0}")]
    WordVectors(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn preview(ids: &[String]) -> String {
    let mut s = ids.iter().take(5).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > 5 {
        s.push_str(", ...");
    }
    s
}

pub type Result<T, E = ExpertError> = std::result::Result<T, E>;

/// What to do when an analysis has no training examples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassPolicy {
    #[default]
    Strict,
    /// Log a warning and train anyway.
    Lenient,
}

/// Training hyperparameters shared by both expert kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertConfig {
    pub mlp: MlpConfig,
    pub adam: AdamConfig,
    pub epochs: usize,
    /// Hidden units per BiLSTM direction (baseline expert only).
    pub lstm_hidden: usize,
    pub class_policy: ClassPolicy,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        Self {
            mlp: MlpConfig::default(),
            adam: AdamConfig::default(),
            epochs: 3,
            lstm_hidden: 100,
            class_policy: ClassPolicy::Strict,
        }
    }
}

/// Label and class probabilities for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub probabilities: Vec<f64>,
}

impl Prediction {
    fn from_probabilities(probabilities: Vec<f64>) -> Self {
        Self {
            label: argmax(&probabilities),
            probabilities,
        }
    }
}

fn check_classes(
    labels: impl Iterator<Item = usize>,
    class_count: usize,
    policy: ClassPolicy,
) -> Result<()> {
    let present: BTreeSet<usize> = labels.collect();
    for label in (0..class_count).filter(|l| !present.contains(l)) {
        match policy {
            ClassPolicy::Strict => return Err(ExpertError::MissingClass { label }),
            ClassPolicy::Lenient => log::warn!("analysis {label} has no training examples"),
        }
    }
    Ok(())
}

fn resolve_sentences<'a>(set: &'a ChallengeSet, ids: &[&str]) -> Result<Vec<&'a LabeledSentence>> {
    let index: HashMap<&str, &LabeledSentence> = set
        .sentences()
        .iter()
        .map(|s| (s.sentence_id.as_str(), s))
        .collect();
    ids.iter()
        .map(|id| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| ExpertError::UnknownSentence(id.to_string()))
        })
        .collect()
}

/// Metadata stored next to expert weights in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertMetadata {
    pub form: String,
    pub scenario: String,
    pub class_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provider: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<AggregationStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masked: Option<bool>,
}

/// MLP word expert over target-token embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualExpert {
    pub form: String,
    pub provider: String,
    pub aggregation: AggregationStrategy,
    pub masked: bool,
    pub mlp: MlpModel,
}

pub fn train_contextual_expert(
    set: &ChallengeSet,
    embeddings: &EmbeddingSet,
    train_ids: &[&str],
    aggregation: AggregationStrategy,
    masked: bool,
    seed: u64,
    config: &ExpertConfig,
) -> Result<ContextualExpert> {
    if train_ids.is_empty() {
        return Err(ExpertError::EmptyTraining);
    }
    if embeddings.masked() != masked {
        return Err(ExpertError::Scenario(format!(
            "requested masked={masked} but embedding set {:?} has masked={}",
            embeddings.provider(),
            embeddings.masked()
        )));
    }
    let sentences = resolve_sentences(set, train_ids)?;
    let missing: Vec<String> = train_ids
        .iter()
        .filter(|id| embeddings.get(id).is_none())
        .map(|id| id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(ExpertError::Coverage { missing });
    }
    let class_count = set.analysis_count();
    check_classes(
        sentences.iter().map(|s| s.label_id),
        class_count,
        config.class_policy,
    )?;
    let examples: Vec<(Vec<f64>, usize)> = sentences
        .iter()
        .map(|s| {
            (
                embeddings
                    .get(&s.sentence_id)
                    .unwrap()
                    .aggregate(aggregation),
                s.label_id,
            )
        })
        .collect();
    let mut mlp = MlpModel::new(
        embeddings.dim(),
        class_count,
        config.mlp,
        &mut seeded(derive_seed(seed, 1)),
    );
    tinynn::train(
        &mut mlp,
        &examples,
        config.epochs,
        derive_seed(seed, 2),
        config.adam,
    )?;
    Ok(ContextualExpert {
        form: set.form().to_string(),
        provider: embeddings.provider().to_string(),
        aggregation,
        masked,
        mlp,
    })
}

impl ContextualExpert {
    pub const SCENARIO: &'static str = "contextual";

    /// Aggregates the record's pieces with the expert's strategy, then classifies.
    pub fn predict(&self, record: &EmbeddingRecord) -> Result<Prediction> {
        let x = record.aggregate(self.aggregation);
        Ok(Prediction::from_probabilities(self.mlp.forward(&x)?))
    }

    pub fn metadata(&self) -> ExpertMetadata {
        ExpertMetadata {
            form: self.form.clone(),
            scenario: Self::SCENARIO.into(),
            class_count: self.mlp.class_count(),
            provider: Some(self.provider.clone()),
            aggregation: Some(self.aggregation),
            masked: Some(self.masked),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        self.mlp
            .to_checkpoint(serde_json::to_string(&self.metadata()).expect("metadata serializes"))
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let meta = parse_metadata(ckpt, Self::SCENARIO)?;
        Ok(Self {
            form: meta.form,
            provider: meta.provider.unwrap_or_default(),
            aggregation: meta.aggregation.unwrap_or_default(),
            masked: meta.masked.unwrap_or(false),
            mlp: MlpModel::from_checkpoint(ckpt)?,
        })
    }
}

/// Convenience wrapper matching the free-function naming used elsewhere.
pub fn predict(expert: &ContextualExpert, record: &EmbeddingRecord) -> Result<Prediction> {
    expert.predict(record)
}

fn parse_metadata(ckpt: &Checkpoint, scenario: &str) -> Result<ExpertMetadata> {
    let meta: ExpertMetadata = serde_json::from_str(&ckpt.metadata)
        .map_err(|e| ExpertError::Nn(NnError::Checkpoint(format!("expert metadata: {e}"))))?;
    if meta.scenario != scenario {
        return Err(ExpertError::Scenario(format!(
            "checkpoint holds a {:?} expert, expected {scenario:?}",
            meta.scenario
        )));
    }
    Ok(meta)
}

/// Read-only token → vector table.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    tokens: Vec<String>,
    vectors: Vec<Vec<f32>>,
    index: HashMap<String, usize>,
}

/// Token coverage of a table over some text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub found: usize,
    pub total: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.found as f64 / self.total as f64
        }
    }
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            tokens: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        let token = token.into();
        if vector.len() != self.dim {
            return Err(ExpertError::WordVectors(format!(
                "vector for {token:?} has dim {}, table dim is {}",
                vector.len(),
                self.dim
            )));
        }
        if self.index.contains_key(&token) {
            return Err(ExpertError::WordVectors(format!(
                "duplicate token {token:?}"
            )));
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens in file order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.index.get(token).map(|&i| self.vectors[i].as_slice())
    }

    pub fn vector_at(&self, i: usize) -> &[f32] {
        &self.vectors[i]
    }

    /// Known tokens become vectors, unknown ones the UNK slot.
    pub fn slot(&self, token: &str) -> ContextSlot {
        match self.get(token) {
            Some(v) => ContextSlot::Vector(v.iter().map(|&x| f64::from(x)).collect()),
            None => ContextSlot::Unknown,
        }
    }

    pub fn coverage<'a, I: IntoIterator<Item = &'a str>>(&self, tokens: I) -> Coverage {
        let mut c = Coverage { found: 0, total: 0 };
        for t in tokens {
            c.total += 1;
            if self.index.contains_key(t) {
                c.found += 1;
            }
        }
        c
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(WORD_VECTOR_MAGIC)?;
        binio::write_u32(&mut w, self.dim as u32)?;
        binio::write_u64(&mut w, self.tokens.len() as u64)?;
        for (token, vector) in self.tokens.iter().zip(&self.vectors) {
            binio::write_str(&mut w, token)?;
            for &v in vector {
                binio::write_f32(&mut w, v)?;
            }
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let bad = |e: io::Error| ExpertError::WordVectors(e.to_string());
        let magic: [u8; 4] = binio::read_array(&mut r).map_err(bad)?;
        if &magic != WORD_VECTOR_MAGIC {
            return Err(ExpertError::WordVectors(format!("bad magic {magic:?}")));
        }
        let dim = binio::read_u32(&mut r).map_err(bad)? as usize;
        if dim == 0 {
            return Err(ExpertError::WordVectors("zero dimension".into()));
        }
        let count = binio::read_u64(&mut r).map_err(bad)?;
        let mut table = Self::new(dim);
        for ordinal in 0..count {
            let at = |e: io::Error| ExpertError::WordVectors(format!("record {ordinal}: {e}"));
            let token = binio::read_str(&mut r, MAX_TOKEN_BYTES).map_err(at)?;
            let vector = (0..dim)
                .map(|_| binio::read_f32(&mut r))
                .collect::<io::Result<Vec<_>>>()
                .map_err(at)?;
            table.insert(token, vector)?;
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|source| ExpertError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_from(BufReader::new(file))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io_err = |source| ExpertError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = fs::File::create(path).map_err(io_err)?;
        self.write_to(BufWriter::new(file)).map_err(io_err)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }
}

/// BiLSTM-over-word2vec word expert.
#[derive(Debug, Clone, PartialEq)]
pub struct W2vBaselineExpert {
    pub form: String,
    pub model: BiLstmMlp,
}

/// Every token except the target, in order, as encoder slots.
pub fn sentence_context(sentence: &LabeledSentence, table: &WordVectorTable) -> Vec<ContextSlot> {
    sentence
        .tokens
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != sentence.target_index)
        .map(|(_, t)| table.slot(t))
        .collect()
}

pub fn train_w2v_baseline(
    set: &ChallengeSet,
    table: &WordVectorTable,
    train_ids: &[&str],
    seed: u64,
    config: &ExpertConfig,
) -> Result<W2vBaselineExpert> {
    if table.is_empty() {
        return Err(ExpertError::Config("word-vector table is empty".into()));
    }
    if train_ids.is_empty() {
        return Err(ExpertError::EmptyTraining);
    }
    let sentences = resolve_sentences(set, train_ids)?;
    let class_count = set.analysis_count();
    check_classes(
        sentences.iter().map(|s| s.label_id),
        class_count,
        config.class_policy,
    )?;
    let examples: Vec<(Vec<ContextSlot>, usize)> = sentences
        .iter()
        .map(|s| (sentence_context(s, table), s.label_id))
        .collect();
    let mut model = BiLstmMlp::new(
        table.dim(),
        config.lstm_hidden,
        class_count,
        config.mlp,
        &mut seeded(derive_seed(seed, 1)),
    );
    tinynn::train(
        &mut model,
        &examples,
        config.epochs,
        derive_seed(seed, 2),
        config.adam,
    )?;
    Ok(W2vBaselineExpert {
        form: set.form().to_string(),
        model,
    })
}

impl W2vBaselineExpert {
    pub const SCENARIO: &'static str = "w2v-baseline";

    pub fn predict(
        &self,
        sentence: &LabeledSentence,
        table: &WordVectorTable,
    ) -> Result<Prediction> {
        let slots = sentence_context(sentence, table);
        Ok(Prediction::from_probabilities(self.model.forward(&slots)?))
    }

    pub fn metadata(&self) -> ExpertMetadata {
        ExpertMetadata {
            form: self.form.clone(),
            scenario: Self::SCENARIO.into(),
            class_count: self.model.mlp().class_count(),
            provider: None,
            aggregation: None,
            masked: None,
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        self.model
            .to_checkpoint(serde_json::to_string(&self.metadata()).expect("metadata serializes"))
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let meta = parse_metadata(ckpt, Self::SCENARIO)?;
        Ok(Self {
            form: meta.form,
            model: BiLstmMlp::from_checkpoint(ckpt)?,
        })
    }
}
