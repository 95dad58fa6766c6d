//! Candidate mining for under-represented homograph analyses.
//!
//! The pipeline has three stages:
//!
//! 1. [`sample_initial`] draws a uniform sample of corpus sentences containing
//!    the homograph, to be annotated; this usually yields plenty of primary
//!    instances and few of anything else.
//! 2. [`build_proxy_training_set`] pairs contexts of the known primary
//!    instances with contexts of *proxy* words standing in for the opposing
//!    class, and [`train_proxy_classifier`] fits a BiLSTM over the word vectors
//!    of the four neighbours on each side of the target (never the target).
//! 3. [`mine_candidates`] scores every corpus occurrence of the homograph and
//!    keeps those the classifier assigns to the opposing class.
//!
//! The corpus is UTF-8 text, one whitespace-tokenised sentence per line, and
//! is streamed rather than loaded.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expert::WordVectorTable;
use crate::rng::{derive_seed, seeded};
use crate::tinynn::{self, AdamConfig, BiLstmMlp, ContextSlot, MlpConfig, NnError};

pub const DEFAULT_SAMPLE_SIZE: usize = 4000;
pub const DEFAULT_WINDOW: usize = 4;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

const SCORE_BATCH: usize = 4096;

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("cannot read corpus {path}: {source}")]
    Corpus {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("proxy {proxy} cannot be resolved: {reason}")]
    Unresolvable { proxy: String, reason: String },
    #[error("proxy {proxy} has no occurrences in the corpus")]
    ProxyExhausted { proxy: String },
    #[error("proxy classifier needs both classes; got {primary} primary and {opposing} opposing examples")]
    SingleClass { primary: usize, opposing: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = MiningError> = std::result::Result<T, E>;

/// A streamable source of tokenised sentences.
pub trait Corpus: Sync {
    /// Visits sentences in order with their 0-based line index.
    fn scan(&self, visit: &mut dyn FnMut(usize, &[String]) -> Result<()>) -> Result<()>;
}

/// One sentence per line, tokens separated by whitespace.
#[derive(Debug, Clone)]
pub struct TextCorpus {
    path: PathBuf,
}

impl TextCorpus {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Corpus for TextCorpus {
    fn scan(&self, visit: &mut dyn FnMut(usize, &[String]) -> Result<()>) -> Result<()> {
        let err = |source| MiningError::Corpus {
            path: self.path.clone(),
            source,
        };
        let reader = BufReader::new(fs::File::open(&self.path).map_err(err)?);
        let mut tokens = Vec::new();
        for (line_no, line) in reader.lines().enumerate() {
            let line = line.map_err(err)?;
            tokens.clear();
            tokens.extend(line.split_whitespace().map(str::to_string));
            visit(line_no, &tokens)?;
        }
        Ok(())
    }
}

/// In-memory corpus, mainly for tests and synthetic experiments.
#[derive(Debug, Clone, Default)]
pub struct MemoryCorpus {
    pub sentences: Vec<Vec<String>>,
}

impl MemoryCorpus {
    pub fn from_lines<'a, I: IntoIterator<Item = &'a str>>(lines: I) -> Self {
        Self {
            sentences: lines
                .into_iter()
                .map(|l| l.split_whitespace().map(str::to_string).collect())
                .collect(),
        }
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        for s in &self.sentences {
            writeln!(w, "{}", s.join(" "))?;
        }
        w.flush()
    }
}

impl Corpus for MemoryCorpus {
    fn scan(&self, visit: &mut dyn FnMut(usize, &[String]) -> Result<()>) -> Result<()> {
        for (i, s) in self.sentences.iter().enumerate() {
            visit(i, s)?;
        }
        Ok(())
    }
}

/// A homograph occurrence located in the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSentence {
    /// 0-based line index.
    pub line: usize,
    pub tokens: Vec<String>,
    pub target_index: usize,
}

impl CorpusSentence {
    pub fn sentence_id(&self) -> String {
        format!("line:{}", self.line + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSample {
    /// Sampled sentences in corpus order.
    pub sentences: Vec<CorpusSentence>,
    /// Total sentences containing the form.
    pub matches: usize,
    /// Fewer than `n` matches existed; every match was returned.
    pub shortfall: bool,
}

/// Uniform reservoir sample of `n` sentences containing `form` as a whole
/// token; the first occurrence in each sentence is the target.
pub fn sample_initial(
    corpus: &dyn Corpus,
    form: &str,
    n: usize,
    seed: u64,
) -> Result<InitialSample> {
    if n == 0 {
        return Err(MiningError::Invalid(
            "sample size must be at least 1".into(),
        ));
    }
    let mut rng = seeded(seed);
    let mut reservoir: Vec<CorpusSentence> = Vec::with_capacity(n.min(1 << 16));
    let mut matches = 0usize;
    corpus.scan(&mut |line, tokens| {
        let Some(target_index) = tokens.iter().position(|t| t == form) else {
            return Ok(());
        };
        let item = || CorpusSentence {
            line,
            tokens: tokens.to_vec(),
            target_index,
        };
        if matches < n {
            reservoir.push(item());
        } else {
            let j = rng.random_range(0..=matches);
            if j < n {
                reservoir[j] = item();
            }
        }
        matches += 1;
        Ok(())
    })?;
    reservoir.sort_by_key(|s| s.line);
    Ok(InitialSample {
        sentences: reservoir,
        matches,
        shortfall: matches < n,
    })
}

/// How opposing-class examples are represented.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProxySpec {
    /// (A) Words that unambiguously play a different morphosyntactic role.
    MorphContrast { words: Vec<String> },
    /// (B) The `count` table words least cosine-similar to the homograph.
    W2vDistant { count: usize },
    /// (C) `sample_size` words drawn at random from the table vocabulary.
    Random { sample_size: usize },
}

impl ProxySpec {
    pub fn name(&self) -> String {
        match self {
            ProxySpec::MorphContrast { words } => format!("A:morph-contrast({})", words.len()),
            ProxySpec::W2vDistant { count } => format!("B:w2v-distant({count})"),
            ProxySpec::Random { sample_size } => format!("C:random({sample_size})"),
        }
    }
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Turns a proxy spec into its concrete word list.
pub fn resolve_proxy_words(
    proxy: &ProxySpec,
    form: &str,
    table: &WordVectorTable,
    seed: u64,
) -> Result<Vec<String>> {
    let unresolvable = |reason: String| MiningError::Unresolvable {
        proxy: proxy.name(),
        reason,
    };
    let words = match proxy {
        ProxySpec::MorphContrast { words } => {
            let words: Vec<String> = words
                .iter()
                .filter(|w| w.as_str() != form)
                .cloned()
                .collect();
            if words.is_empty() {
                return Err(unresolvable("empty word list".into()));
            }
            words
        }
        ProxySpec::W2vDistant { count } => {
            let target = table
                .get(form)
                .ok_or_else(|| unresolvable(format!("{form:?} is not in the word-vector table")))?;
            let mut scored: Vec<(f64, usize)> = table
                .tokens()
                .iter()
                .enumerate()
                .filter(|(_, t)| t.as_str() != form)
                .map(|(i, _)| (cosine(target, table.vector_at(i)), i))
                .collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            scored
                .into_iter()
                .take(*count)
                .map(|(_, i)| table.tokens()[i].clone())
                .collect()
        }
        ProxySpec::Random { sample_size } => {
            let pool: Vec<&String> = table
                .tokens()
                .iter()
                .filter(|t| t.as_str() != form)
                .collect();
            let mut rng = seeded(seed);
            let mut picked: Vec<String> = pool
                .choose_multiple(&mut rng, *sample_size)
                .map(|s| (*s).clone())
                .collect();
            picked.sort();
            picked
        }
    };
    if words.is_empty() {
        return Err(unresolvable("no proxy words selected".into()));
    }
    Ok(words)
}

/// Neighbour tokens around a target; `None` marks padding past a sentence edge.
/// Left neighbours come first, both sides in sentence order.
pub type ContextWindow = Vec<Option<String>>;

pub fn context_window(tokens: &[String], target_index: usize, width: usize) -> ContextWindow {
    let left = (0..width).map(|k| {
        let offset = width - k;
        target_index.checked_sub(offset).map(|i| tokens[i].clone())
    });
    let right = (1..=width).map(|k| tokens.get(target_index + k).cloned());
    left.chain(right).collect()
}

pub fn window_slots(window: &[Option<String>], table: &WordVectorTable) -> Vec<ContextSlot> {
    window
        .iter()
        .map(|t| match t {
            Some(tok) => table.slot(tok),
            None => ContextSlot::Padding,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProxyClass {
    Primary,
    Opposing,
}

impl ProxyClass {
    fn index(self) -> usize {
        match self {
            ProxyClass::Primary => 0,
            ProxyClass::Opposing => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyTrainingSet {
    pub proxy: String,
    pub proxy_words: Vec<String>,
    pub items: Vec<(ContextWindow, ProxyClass)>,
    /// Opposing hits found before balancing.
    pub opposing_hits: usize,
}

impl ProxyTrainingSet {
    pub fn class_counts(&self) -> (usize, usize) {
        let opposing = self
            .items
            .iter()
            .filter(|(_, c)| *c == ProxyClass::Opposing)
            .count();
        (self.items.len() - opposing, opposing)
    }

    /// Concatenates several training sets and rebalances the result.
    pub fn pooled(sets: Vec<ProxyTrainingSet>, seed: u64) -> Self {
        let proxy = sets
            .iter()
            .map(|s| s.proxy.as_str())
            .collect::<Vec<_>>()
            .join("+");
        let mut proxy_words = Vec::new();
        let mut primary = Vec::new();
        let mut opposing = Vec::new();
        let mut seen_primary = HashSet::new();
        let mut opposing_hits = 0;
        for set in sets {
            proxy_words.extend(set.proxy_words);
            opposing_hits += set.opposing_hits;
            for (w, c) in set.items {
                match c {
                    // primary windows repeat across proxies
                    ProxyClass::Primary => {
                        if seen_primary.insert(w.clone()) {
                            primary.push(w);
                        }
                    }
                    ProxyClass::Opposing => opposing.push(w),
                }
            }
        }
        proxy_words.sort();
        proxy_words.dedup();
        Self {
            proxy,
            proxy_words,
            items: balance(primary, opposing, seed),
            opposing_hits,
        }
    }
}

fn downsample(mut items: Vec<ContextWindow>, n: usize, seed: u64) -> Vec<ContextWindow> {
    if items.len() <= n {
        return items;
    }
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.shuffle(&mut seeded(seed));
    let mut keep: Vec<usize> = idx.into_iter().take(n).collect();
    keep.sort_unstable();
    let mut out = Vec::with_capacity(n);
    for (i, item) in items.drain(..).enumerate() {
        if keep.binary_search(&i).is_ok() {
            out.push(item);
        }
    }
    out
}

/// Downsamples the larger class to the size of the smaller one.
fn balance(
    primary: Vec<ContextWindow>,
    opposing: Vec<ContextWindow>,
    seed: u64,
) -> Vec<(ContextWindow, ProxyClass)> {
    let n = primary.len().min(opposing.len());
    let primary = downsample(primary, n, derive_seed(seed, 1));
    let opposing = downsample(opposing, n, derive_seed(seed, 2));
    primary
        .into_iter()
        .map(|w| (w, ProxyClass::Primary))
        .chain(opposing.into_iter().map(|w| (w, ProxyClass::Opposing)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    pub window: usize,
    pub threshold: f64,
    pub lstm_hidden: usize,
    pub mlp: MlpConfig,
    pub adam: AdamConfig,
    pub epochs: usize,
    /// Train one classifier on all proxies together instead of one per proxy.
    pub pooled: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            threshold: DEFAULT_THRESHOLD,
            lstm_hidden: 100,
            mlp: MlpConfig::default(),
            adam: AdamConfig::default(),
            epochs: 3,
            pooled: false,
        }
    }
}

/// Primary windows from the known primary instances, opposing windows from
/// corpus occurrences of the proxy words, class-balanced by downsampling.
pub fn build_proxy_training_set(
    primary_instances: &[CorpusSentence],
    proxy: &ProxySpec,
    form: &str,
    corpus: &dyn Corpus,
    table: &WordVectorTable,
    seed: u64,
    config: &MiningConfig,
) -> Result<ProxyTrainingSet> {
    if primary_instances.is_empty() {
        return Err(MiningError::Invalid("no primary instances".into()));
    }
    let proxy_words = resolve_proxy_words(proxy, form, table, derive_seed(seed, 10))?;
    let lookup: HashSet<&str> = proxy_words.iter().map(String::as_str).collect();
    let primary: Vec<ContextWindow> = primary_instances
        .iter()
        .map(|s| context_window(&s.tokens, s.target_index, config.window))
        .collect();
    // Only as many opposing windows as primary ones survive balancing, so a
    // reservoir of that size is enough.
    let cap = primary.len();
    let mut rng = seeded(derive_seed(seed, 11));
    let mut reservoir: Vec<ContextWindow> = Vec::with_capacity(cap);
    let mut hits = 0usize;
    corpus.scan(&mut |_, tokens| {
        for (i, t) in tokens.iter().enumerate() {
            if !lookup.contains(t.as_str()) {
                continue;
            }
            if hits < cap {
                reservoir.push(context_window(tokens, i, config.window));
            } else {
                let j = rng.random_range(0..=hits);
                if j < cap {
                    reservoir[j] = context_window(tokens, i, config.window);
                }
            }
            hits += 1;
        }
        Ok(())
    })?;
    if hits == 0 {
        return Err(MiningError::ProxyExhausted {
            proxy: proxy.name(),
        });
    }
    Ok(ProxyTrainingSet {
        proxy: proxy.name(),
        proxy_words,
        items: balance(primary, reservoir, derive_seed(seed, 12)),
        opposing_hits: hits,
    })
}

/// Binary BiLSTM+MLP over a neighbour window. Class 1 is the opposing class.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyClassifier {
    pub proxy: String,
    pub window: usize,
    pub model: BiLstmMlp,
    pub model_version: String,
}

impl ProxyClassifier {
    /// Probability of the opposing class for one window.
    pub fn score(&self, window: &[Option<String>], table: &WordVectorTable) -> Result<f64> {
        Ok(self.model.forward(&window_slots(window, table))?[ProxyClass::Opposing.index()])
    }

    pub fn score_occurrence(
        &self,
        tokens: &[String],
        target_index: usize,
        table: &WordVectorTable,
    ) -> Result<f64> {
        self.score(&context_window(tokens, target_index, self.window), table)
    }
}

pub fn train_proxy_classifier(
    training_set: &ProxyTrainingSet,
    table: &WordVectorTable,
    seed: u64,
    config: &MiningConfig,
) -> Result<ProxyClassifier> {
    let (primary, opposing) = training_set.class_counts();
    if primary == 0 || opposing == 0 {
        return Err(MiningError::SingleClass { primary, opposing });
    }
    let examples: Vec<(Vec<ContextSlot>, usize)> = training_set
        .items
        .iter()
        .map(|(w, c)| (window_slots(w, table), c.index()))
        .collect();
    let mut model = BiLstmMlp::new(
        table.dim(),
        config.lstm_hidden,
        2,
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
    let model_version = model.to_checkpoint("").fingerprint();
    Ok(ProxyClassifier {
        proxy: training_set.proxy.clone(),
        window: config.window,
        model,
        model_version,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub proxy: String,
    pub model_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningCandidate {
    pub sentence_id: String,
    pub line: usize,
    pub tokens: Vec<String>,
    pub target_index: usize,
    /// Opposing-class probability.
    pub score: f64,
    pub provenance: Provenance,
}

#[derive(Serialize)]
struct CandidateLine<'a> {
    sentence_id: &'a str,
    sentence: String,
    target_index: usize,
    score: f64,
    provenance: &'a Provenance,
}

/// Scores every occurrence of `form` and keeps those at or above
/// `threshold`, highest score first (ties in corpus order).
pub fn mine_candidates(
    classifier: &ProxyClassifier,
    corpus: &dyn Corpus,
    form: &str,
    threshold: f64,
    table: &WordVectorTable,
) -> Result<Vec<MiningCandidate>> {
    let mut kept = Vec::new();
    let mut batch: Vec<CorpusSentence> = Vec::with_capacity(SCORE_BATCH);
    let mut flush = |batch: &mut Vec<CorpusSentence>| -> Result<()> {
        let scores: Vec<f64> = batch
            .par_iter()
            .map(|occ| classifier.score_occurrence(&occ.tokens, occ.target_index, table))
            .collect::<Result<_>>()?;
        for (occ, score) in batch.drain(..).zip(scores) {
            if score >= threshold {
                kept.push(MiningCandidate {
                    sentence_id: occ.sentence_id(),
                    line: occ.line,
                    tokens: occ.tokens,
                    target_index: occ.target_index,
                    score,
                    provenance: Provenance {
                        proxy: classifier.proxy.clone(),
                        model_version: classifier.model_version.clone(),
                    },
                });
            }
        }
        Ok(())
    };
    corpus.scan(&mut |line, tokens| {
        for (i, t) in tokens.iter().enumerate() {
            if t == form {
                batch.push(CorpusSentence {
                    line,
                    tokens: tokens.to_vec(),
                    target_index: i,
                });
            }
        }
        if batch.len() >= SCORE_BATCH {
            flush(&mut batch)?;
        }
        Ok(())
    })?;
    flush(&mut batch)?;
    kept.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(kept)
}

/// Merges candidate lists from several classifiers, keeping each occurrence's
/// highest score.
pub fn union_candidates(lists: Vec<Vec<MiningCandidate>>) -> Vec<MiningCandidate> {
    let mut best: BTreeMap<(usize, usize), MiningCandidate> = BTreeMap::new();
    for c in lists.into_iter().flatten() {
        match best.get(&(c.line, c.target_index)) {
            Some(existing) if existing.score >= c.score => {}
            _ => {
                best.insert((c.line, c.target_index), c);
            }
        }
    }
    let mut merged: Vec<_> = best.into_values().collect();
    merged.sort_by(|a, b| b.score.total_cmp(&a.score));
    merged
}

/// Line-delimited JSON export: `{sentence_id, sentence, target_index, score, provenance}`.
pub fn write_candidates<W: Write>(candidates: &[MiningCandidate], mut w: W) -> io::Result<()> {
    for c in candidates {
        let line = CandidateLine {
            sentence_id: &c.sentence_id,
            sentence: c.tokens.join(" "),
            target_index: c.target_index,
            score: c.score,
            provenance: &c.provenance,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Per-proxy bookkeeping from [`run_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyRun {
    pub proxy: String,
    pub proxy_words: usize,
    pub opposing_hits: usize,
    pub training_items: usize,
    pub model_version: String,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub candidates: Vec<MiningCandidate>,
    pub runs: Vec<ProxyRun>,
    /// Aligned with `runs`.
    pub classifiers: Vec<ProxyClassifier>,
}

/// Stages 2 and 3 for several proxies: separate classifiers whose candidates
/// are unioned, or one pooled classifier when `config.pooled` is set.
pub fn run_pipeline(
    primary_instances: &[CorpusSentence],
    proxies: &[ProxySpec],
    form: &str,
    corpus: &dyn Corpus,
    table: &WordVectorTable,
    seed: u64,
    config: &MiningConfig,
) -> Result<PipelineOutput> {
    if proxies.is_empty() {
        return Err(MiningError::Invalid(
            "at least one proxy is required".into(),
        ));
    }
    let sets = proxies
        .iter()
        .enumerate()
        .map(|(i, p)| {
            build_proxy_training_set(
                primary_instances,
                p,
                form,
                corpus,
                table,
                derive_seed(seed, i as u64),
                config,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let sets = if config.pooled {
        vec![ProxyTrainingSet::pooled(sets, derive_seed(seed, 100))]
    } else {
        sets
    };
    let mut runs = Vec::new();
    let mut lists = Vec::new();
    let mut classifiers = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        let classifier =
            train_proxy_classifier(set, table, derive_seed(seed, 200 + i as u64), config)?;
        let found = mine_candidates(&classifier, corpus, form, config.threshold, table)?;
        runs.push(ProxyRun {
            proxy: set.proxy.clone(),
            proxy_words: set.proxy_words.len(),
            opposing_hits: set.opposing_hits,
            training_items: set.items.len(),
            model_version: classifier.model_version.clone(),
            candidates: found.len(),
        });
        lists.push(found);
        classifiers.push(classifier);
    }
    Ok(PipelineOutput {
        candidates: union_candidates(lists),
        runs,
        classifiers,
    })
}
