//! Challenge sets: one homograph's analysis inventory plus its labelled sentences.
//!
//! On disk a challenge set is line-delimited JSON. The first line is a header
//! record describing the homograph and its analyses:
//!
//! ```json
//! {"form":"hqph","skew_ratio":9.0,"analyses":[
//!   {"label_id":0,"surface_key":"ha-qafe","segment_count":2,"morph_features":["DET","Noun"],"gloss":"the+coffee"},
//!   {"label_id":1,"surface_key":"hakafa","segment_count":1,"morph_features":["Noun"],"gloss":"credit"}]}
//! ```
//!
//! Every following line is a sentence record:
//!
//! ```json
//! {"sentence_id":"s17","tokens":["he","drank","hqph"],"target_index":2,"label":0}
//! ```
//!
//! `label` is either an analysis id or one of the annotation markers
//! `"none of the above"` / `"unclear"`; marked records are dropped at load time
//! and counted. The header may carry `"category"`, which is checked against
//! [`classify_ambiguity`] rather than trusted.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub const MIN_ANALYSES: usize = 2;
pub const MAX_ANALYSES: usize = 5;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("{}schema violation: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Schema {
        line: Option<usize>,
        message: String,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cannot stratify: analysis {label} has {count} sentences but k = {k}")]
    Stratification {
        label: usize,
        count: usize,
        k: usize,
    },
    #[error(
        "cannot sample {requested} per analysis: analysis {label} has only {available} sentences"
    )]
    Sampling {
        label: usize,
        available: usize,
        requested: usize,
    },
}

pub type Result<T, E = DatasetError> = std::result::Result<T, E>;

fn schema(line: Option<usize>, message: impl Into<String>) -> DatasetError {
    DatasetError::Schema {
        line,
        message: message.into(),
    }
}

/// One reading of a homograph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analysis {
    /// 0 is the primary (most frequent) analysis.
    pub label_id: usize,
    /// Diacritized form; opaque.
    pub surface_key: String,
    /// Number of word units after prefix segmentation.
    pub segment_count: u32,
    #[serde(default)]
    pub morph_features: BTreeSet<String>,
    #[serde(default)]
    pub gloss: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub sentence_id: String,
    pub tokens: Vec<String>,
    pub target_index: usize,
    #[serde(rename = "label")]
    pub label_id: usize,
}

impl LabeledSentence {
    pub fn target(&self) -> &str {
        &self.tokens[self.target_index]
    }
}

/// Highest level of ambiguity between a homograph's analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AmbiguityCategory {
    Segmentation,
    Morphosyntactic,
    Semantic,
}

impl AmbiguityCategory {
    pub const ALL: [AmbiguityCategory; 3] = [
        AmbiguityCategory::Segmentation,
        AmbiguityCategory::Morphosyntactic,
        AmbiguityCategory::Semantic,
    ];
}

impl fmt::Display for AmbiguityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AmbiguityCategory::Segmentation => "segmentation",
            AmbiguityCategory::Morphosyntactic => "morphosyntactic",
            AmbiguityCategory::Semantic => "semantic",
        };
        f.write_str(name)
    }
}

/// Categorizes a homograph by the highest level of ambiguity among its analyses.
///
/// Segmentation beats morphosyntax, which beats a pure sense distinction.
pub fn classify_ambiguity(analyses: &[Analysis]) -> Result<AmbiguityCategory> {
    if analyses.len() < MIN_ANALYSES {
        return Err(DatasetError::InvalidInput(format!(
            "need at least {MIN_ANALYSES} analyses to categorize, got {}",
            analyses.len()
        )));
    }
    let first = &analyses[0];
    if analyses
        .iter()
        .any(|a| a.segment_count != first.segment_count)
    {
        Ok(AmbiguityCategory::Segmentation)
    } else if analyses
        .iter()
        .any(|a| a.morph_features != first.morph_features)
    {
        Ok(AmbiguityCategory::Morphosyntactic)
    } else {
        Ok(AmbiguityCategory::Semantic)
    }
}

/// Most-frequent to least-frequent natural ratio of a homograph's analyses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewRatio {
    pub value: f64,
    /// True when derived from the challenge-set counts instead of corpus metadata.
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChallengeSet {
    form: String,
    analyses: Vec<Analysis>,
    sentences: Vec<LabeledSentence>,
    category: AmbiguityCategory,
    skew: SkewRatio,
}

impl ChallengeSet {
    /// Validates and assembles a challenge set. When `skew_ratio` is `None` it is
    /// approximated from the per-analysis sentence counts.
    pub fn new(
        form: impl Into<String>,
        analyses: Vec<Analysis>,
        sentences: Vec<LabeledSentence>,
        skew_ratio: Option<f64>,
    ) -> Result<Self> {
        let form = form.into();
        validate_analyses(&analyses)?;
        let mut seen = HashSet::with_capacity(sentences.len());
        let mut counts = vec![0usize; analyses.len()];
        for s in &sentences {
            check_sentence(s, analyses.len(), None)?;
            if !seen.insert(s.sentence_id.as_str()) {
                return Err(schema(
                    None,
                    format!("duplicate sentence_id {:?}", s.sentence_id),
                ));
            }
            counts[s.label_id] += 1;
        }
        let attested = counts.iter().filter(|&&c| c > 0).count();
        if attested < MIN_ANALYSES {
            return Err(DatasetError::InsufficientData(format!(
                "{form:?}: only {attested} analysis(es) have sentences, need {MIN_ANALYSES}"
            )));
        }
        if let Some(label) = counts.iter().position(|&c| c == 0) {
            return Err(DatasetError::InsufficientData(format!(
                "{form:?}: analysis {label} has no sentences"
            )));
        }
        let skew = match skew_ratio {
            Some(value) if value.is_finite() && value > 0.0 => SkewRatio {
                value,
                approximate: false,
            },
            Some(value) => {
                return Err(schema(
                    None,
                    format!("skew_ratio must be positive, got {value}"),
                ))
            }
            None => {
                let max = *counts.iter().max().unwrap_or(&1) as f64;
                let min = *counts.iter().min().unwrap_or(&1) as f64;
                SkewRatio {
                    value: max / min,
                    approximate: true,
                }
            }
        };
        let category = classify_ambiguity(&analyses)?;
        Ok(Self {
            form,
            analyses,
            sentences,
            category,
            skew,
        })
    }

    pub fn form(&self) -> &str {
        &self.form
    }

    pub fn analyses(&self) -> &[Analysis] {
        &self.analyses
    }

    pub fn analysis_count(&self) -> usize {
        self.analyses.len()
    }

    pub fn sentences(&self) -> &[LabeledSentence] {
        &self.sentences
    }

    pub fn category(&self) -> AmbiguityCategory {
        self.category
    }

    pub fn skew(&self) -> SkewRatio {
        self.skew
    }

    pub fn sentence(&self, id: &str) -> Option<&LabeledSentence> {
        self.sentences.iter().find(|s| s.sentence_id == id)
    }

    /// Sentence counts indexed by label id.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.analyses.len()];
        for s in &self.sentences {
            counts[s.label_id] += 1;
        }
        counts
    }

    /// Sentence indices grouped by label, in file order.
    pub fn indices_by_label(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.analyses.len()];
        for (i, s) in self.sentences.iter().enumerate() {
            groups[s.label_id].push(i);
        }
        groups
    }

    /// Serializes to the line-delimited JSON format read by [`load_challenge_set`].
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = HeaderRecord {
            form: self.form.clone(),
            analyses: self.analyses.clone(),
            skew_ratio: (!self.skew.approximate).then_some(self.skew.value),
            category: Some(self.category),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for s in &self.sentences {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io_err = |source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = fs::File::create(path).map_err(io_err)?;
        self.write_jsonl(BufWriter::new(file)).map_err(io_err)
    }
}

fn validate_analyses(analyses: &[Analysis]) -> Result<()> {
    if analyses.len() < MIN_ANALYSES {
        return Err(DatasetError::InsufficientData(format!(
            "header lists {} analysis(es), need at least {MIN_ANALYSES}",
            analyses.len()
        )));
    }
    if analyses.len() > MAX_ANALYSES {
        return Err(schema(
            Some(1),
            format!(
                "header lists {} analyses, at most {MAX_ANALYSES} supported",
                analyses.len()
            ),
        ));
    }
    for (i, a) in analyses.iter().enumerate() {
        if a.label_id != i {
            return Err(schema(
                Some(1),
                format!(
                    "analysis label ids must be contiguous from 0; position {i} has id {}",
                    a.label_id
                ),
            ));
        }
        if a.segment_count == 0 {
            return Err(schema(Some(1), format!("analysis {i} has segment_count 0")));
        }
    }
    Ok(())
}

fn check_sentence(s: &LabeledSentence, analysis_count: usize, line: Option<usize>) -> Result<()> {
    if s.target_index >= s.tokens.len() {
        return Err(schema(
            line,
            format!(
                "sentence {:?}: target_index {} out of range for {} tokens",
                s.sentence_id,
                s.target_index,
                s.tokens.len()
            ),
        ));
    }
    if s.label_id >= analysis_count {
        return Err(schema(
            line,
            format!(
                "sentence {:?}: label {} refers to an unknown analysis",
                s.sentence_id, s.label_id
            ),
        ));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    form: String,
    analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    skew_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<AmbiguityCategory>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawLabel {
    Id(usize),
    Marker(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSentence {
    sentence_id: String,
    tokens: Vec<String>,
    target_index: usize,
    label: RawLabel,
}

fn is_drop_marker(marker: &str) -> bool {
    let norm = marker.trim().to_ascii_lowercase().replace(['_', '-'], " ");
    matches!(norm.as_str(), "none of the above" | "unclear")
}

/// A loaded challenge set together with the number of annotation-marker
/// records ("none of the above" / "unclear") that were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSet {
    pub set: ChallengeSet,
    pub dropped_count: usize,
}

pub fn load_challenge_set(path: &Path) -> Result<LoadedSet> {
    let file = fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_challenge_set(BufReader::new(file)).map_err(|e| match e {
        DatasetError::Io { source, .. } => DatasetError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn read_challenge_set<R: BufRead>(reader: R) -> Result<LoadedSet> {
    let mut header: Option<HeaderRecord> = None;
    let mut sentences = Vec::new();
    let mut dropped_count = 0;
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let Some(h) = &header else {
            let parsed: HeaderRecord =
                serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
                    line: line_no,
                    message: format!("header: {e}"),
                })?;
            validate_analyses(&parsed.analyses)?;
            header = Some(parsed);
            continue;
        };
        let raw: RawSentence = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let label_id = match raw.label {
            RawLabel::Id(id) => id,
            RawLabel::Marker(m) if is_drop_marker(&m) => {
                dropped_count += 1;
                continue;
            }
            RawLabel::Marker(m) => {
                return Err(schema(Some(line_no), format!("unknown label marker {m:?}")));
            }
        };
        let sentence = LabeledSentence {
            sentence_id: raw.sentence_id,
            tokens: raw.tokens,
            target_index: raw.target_index,
            label_id,
        };
        check_sentence(&sentence, h.analyses.len(), Some(line_no))?;
        if !seen.insert(sentence.sentence_id.clone()) {
            return Err(schema(
                Some(line_no),
                format!("duplicate sentence_id {:?}", sentence.sentence_id),
            ));
        }
        sentences.push(sentence);
    }
    let header = header.ok_or_else(|| DatasetError::Parse {
        line: 1,
        message: "missing header record".into(),
    })?;
    let declared = header.category;
    let set = ChallengeSet::new(header.form, header.analyses, sentences, header.skew_ratio)?;
    if let Some(declared) = declared {
        if declared != set.category() {
            return Err(schema(
                Some(1),
                format!(
                    "declared category {declared} disagrees with analyses, which give {}",
                    set.category()
                ),
            ));
        }
    }
    Ok(LoadedSet { set, dropped_count })
}

/// How to treat analyses with fewer sentences than folds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StratificationMode {
    /// Refuse to plan.
    #[default]
    Strict,
    /// Plan anyway; some folds then hold no sentence of that analysis.
    Lenient,
}

/// Deterministic assignment of sentences to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub k: usize,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, sentence_id: &str) -> Option<usize> {
        self.assignment.get(sentence_id).copied()
    }

    /// Indices into `set.sentences()` held out in `fold`, in file order.
    pub fn held_out(&self, set: &ChallengeSet, fold: usize) -> Vec<usize> {
        set.sentences()
            .iter()
            .enumerate()
            .filter(|(_, s)| self.fold_of(&s.sentence_id) == Some(fold))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold plan. Within each analysis the sentences are shuffled and
/// dealt round-robin; the dealing position carries over between analyses so
/// overall fold sizes also stay within one of each other.
pub fn plan_folds(
    set: &ChallengeSet,
    k: usize,
    seed: u64,
    mode: StratificationMode,
) -> Result<FoldPlan> {
    if k < 2 {
        return Err(DatasetError::InvalidInput(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let groups = set.indices_by_label();
    if mode == StratificationMode::Strict {
        if let Some((label, g)) = groups.iter().enumerate().find(|(_, g)| g.len() < k) {
            return Err(DatasetError::Stratification {
                label,
                count: g.len(),
                k,
            });
        }
    }
    let mut rng = rng::seeded(seed);
    let mut assignment = BTreeMap::new();
    let mut offset = 0;
    for mut group in groups {
        group.shuffle(&mut rng);
        for (i, &idx) in group.iter().enumerate() {
            assignment.insert(set.sentences()[idx].sentence_id.clone(), (offset + i) % k);
        }
        offset = (offset + group.len()) % k;
    }
    Ok(FoldPlan {
        seed,
        k,
        assignment,
    })
}

/// Training/evaluation split for a few-shot round.
#[derive(Debug, Clone, PartialEq)]
pub struct FewShotSplit<'a> {
    pub train: Vec<&'a LabeledSentence>,
    pub test: Vec<&'a LabeledSentence>,
}

/// Draws exactly `n_per_analysis` training sentences per analysis without
/// replacement; every other sentence goes to the test side, in file order.
pub fn sample_fewshot(
    set: &ChallengeSet,
    n_per_analysis: usize,
    seed: u64,
) -> Result<FewShotSplit<'_>> {
    if n_per_analysis == 0 {
        return Err(DatasetError::Sampling {
            label: 0,
            available: set.label_counts()[0],
            requested: 0,
        });
    }
    let groups = set.indices_by_label();
    if let Some((label, g)) = groups
        .iter()
        .enumerate()
        .find(|(_, g)| g.len() <= n_per_analysis)
    {
        return Err(DatasetError::Sampling {
            label,
            available: g.len(),
            requested: n_per_analysis,
        });
    }
    let mut rng = rng::seeded(seed);
    let mut in_train = vec![false; set.sentences().len()];
    let mut train = Vec::with_capacity(n_per_analysis * groups.len());
    for group in &groups {
        for &idx in group.choose_multiple(&mut rng, n_per_analysis) {
            in_train[idx] = true;
            train.push(&set.sentences()[idx]);
        }
    }
    let test = set
        .sentences()
        .iter()
        .zip(&in_train)
        .filter(|(_, &t)| !t)
        .map(|(s, _)| s)
        .collect();
    Ok(FewShotSplit { train, test })
}

/// One row of the dataset manifest written by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub form: String,
    pub category: AmbiguityCategory,
    pub analysis_count: usize,
    pub sentence_counts: Vec<usize>,
    pub dropped_count: usize,
    pub skew_ratio: f64,
    pub skew_approximate: bool,
}

impl ManifestEntry {
    pub fn describe(path: &Path, loaded: &LoadedSet) -> Self {
        let set = &loaded.set;
        Self {
            path: path.to_path_buf(),
            form: set.form().to_string(),
            category: set.category(),
            analysis_count: set.analysis_count(),
            sentence_counts: set.label_counts(),
            dropped_count: loaded.dropped_count,
            skew_ratio: set.skew().value,
            skew_approximate: set.skew().approximate,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub sets: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub const VERSION: u32 = 1;

    pub fn new(sets: Vec<ManifestEntry>) -> Self {
        Self {
            version: Self::VERSION,
            sets,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let manifest: Self = serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if manifest.version != Self::VERSION {
            return Err(schema(
                None,
                format!("unsupported manifest version {}", manifest.version),
            ));
        }
        Ok(manifest)
    }

    /// Paths are resolved relative to the manifest's directory.
    pub fn resolve(&self, manifest_path: &Path) -> Vec<PathBuf> {
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        self.sets.iter().map(|e| base.join(&e.path)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn analysis(
        label_id: usize,
        segments: u32,
        feats: &[&str],
        gloss: &str,
    ) -> Analysis {
        Analysis {
            label_id,
            surface_key: format!("k{label_id}"),
            segment_count: segments,
            morph_features: feats.iter().map(|s| s.to_string()).collect(),
            gloss: gloss.into(),
        }
    }

    fn sentence(id: usize, label: usize) -> LabeledSentence {
        LabeledSentence {
            sentence_id: format!("s{id}"),
            tokens: vec!["a".into(), "form".into(), "b".into()],
            target_index: 1,
            label_id: label,
        }
    }

    fn two_way(counts: &[usize]) -> ChallengeSet {
        let analyses = (0..counts.len())
            .map(|i| analysis(i, 1, &["Noun"], &format!("g{i}")))
            .collect();
        let mut sentences = Vec::new();
        for (label, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                sentences.push(sentence(sentences.len(), label));
            }
        }
        ChallengeSet::new("form", analyses, sentences, None).unwrap()
    }

    #[test]
    fn table1_categories() {
        let seg = [
            analysis(0, 2, &["DET", "Noun"], "the+coffee"),
            analysis(1, 1, &["Noun"], "credit"),
        ];
        assert_eq!(
            classify_ambiguity(&seg).unwrap(),
            AmbiguityCategory::Segmentation
        );
        let morph = [
            analysis(0, 1, &["Verb", "M", "S", "3", "Past"], "he lifted"),
            analysis(1, 1, &["Noun", "M", "P", "abs"], "mountains"),
        ];
        assert_eq!(
            classify_ambiguity(&morph).unwrap(),
            AmbiguityCategory::Morphosyntactic
        );
        let sem = [
            analysis(0, 2, &["DET", "Noun", "M", "S", "abs"], "the+song"),
            analysis(1, 2, &["DET", "Noun", "M", "S", "abs"], "the+singer"),
        ];
        assert_eq!(
            classify_ambiguity(&sem).unwrap(),
            AmbiguityCategory::Semantic
        );
    }

    #[test]
    fn classify_needs_two() {
        let one = [analysis(0, 1, &[], "x")];
        assert!(matches!(
            classify_ambiguity(&one),
            Err(DatasetError::InvalidInput(_))
        ));
    }

    #[test]
    fn approximate_skew_from_counts() {
        let set = two_way(&[1000, 500]);
        assert_eq!(set.label_counts(), vec![1000, 500]);
        assert_eq!(
            set.skew(),
            SkewRatio {
                value: 2.0,
                approximate: true
            }
        );
    }

    #[test]
    fn missing_analysis_is_insufficient() {
        let analyses = vec![analysis(0, 1, &[], "a"), analysis(1, 1, &[], "b")];
        let sentences = (0..3).map(|i| sentence(i, 0)).collect();
        assert!(matches!(
            ChallengeSet::new("f", analyses, sentences, None),
            Err(DatasetError::InsufficientData(_))
        ));
    }

    #[test]
    fn twenty_sentences_ten_folds() {
        let set = two_way(&[10, 10]);
        let plan = plan_folds(&set, 10, 0, StratificationMode::Strict).unwrap();
        for fold in 0..10 {
            let held = plan.held_out(&set, fold);
            let labels: Vec<_> = held.iter().map(|&i| set.sentences()[i].label_id).collect();
            assert_eq!(labels.len(), 2);
            assert!(labels.contains(&0) && labels.contains(&1));
        }
    }

    #[test]
    fn fifteen_hundred_split_evenly() {
        let set = two_way(&[1000, 500]);
        let plan = plan_folds(&set, 10, 3, StratificationMode::Strict).unwrap();
        for fold in 0..10 {
            let held = plan.held_out(&set, fold);
            let zeros = held
                .iter()
                .filter(|&&i| set.sentences()[i].label_id == 0)
                .count();
            assert_eq!((held.len(), zeros), (150, 100));
        }
        assert_eq!(
            plan,
            plan_folds(&set, 10, 3, StratificationMode::Strict).unwrap()
        );
    }

    #[test]
    fn strict_vs_lenient_stratification() {
        let set = two_way(&[20, 4]);
        assert!(matches!(
            plan_folds(&set, 10, 0, StratificationMode::Strict),
            Err(DatasetError::Stratification {
                label: 1,
                count: 4,
                k: 10
            })
        ));
        let plan = plan_folds(&set, 10, 0, StratificationMode::Lenient).unwrap();
        assert_eq!(plan.assignment.len(), 24);
        assert!(plan_folds(&set, 1, 0, StratificationMode::Lenient).is_err());
    }

    #[test]
    fn fewshot_sizes() {
        let set = two_way(&[1000, 1000]);
        let split = sample_fewshot(&set, 5, 11).unwrap();
        assert_eq!((split.train.len(), split.test.len()), (10, 1990));
        for label in 0..2 {
            assert_eq!(
                split.train.iter().filter(|s| s.label_id == label).count(),
                5
            );
        }
        assert_eq!(split, sample_fewshot(&set, 5, 11).unwrap());
        assert!(matches!(
            sample_fewshot(&set, 0, 11),
            Err(DatasetError::Sampling { .. })
        ));
        assert!(matches!(
            sample_fewshot(&two_way(&[10, 5]), 5, 0),
            Err(DatasetError::Sampling {
                label: 1,
                available: 5,
                requested: 5
            })
        ));
    }

    #[test]
    fn drop_markers() {
        assert!(is_drop_marker("none of the above"));
        assert!(is_drop_marker("None_of_the_above"));
        assert!(is_drop_marker("unclear"));
        assert!(!is_drop_marker("maybe"));
    }
}
