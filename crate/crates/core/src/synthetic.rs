//! Seeded synthetic data: Gaussian challenge sets with matching embeddings,
//! and token corpora with a planted rare-analysis signal for mining.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{Analysis, ChallengeSet, LabeledSentence};
use crate::embedio::{EmbeddingRecord, EmbeddingSet};
use crate::expert::WordVectorTable;
use crate::mining::MemoryCorpus;
use crate::rng::{derive_seed, seeded};

/// Isotropic Gaussian classes with unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub form: String,
    pub dim: usize,
    pub per_class: usize,
    pub classes: usize,
    /// Per-coordinate distance between class means, in standard deviations.
    pub separation: f64,
    /// Word pieces per record; pieces after the first are pure noise.
    pub pieces: usize,
    pub masked: bool,
    pub provider: String,
}

impl Default for GaussianSpec {
    fn default() -> Self {
        Self {
            form: "synth".into(),
            dim: 768,
            per_class: 100,
            classes: 2,
            separation: 4.0,
            pieces: 1,
            masked: false,
            provider: "synthetic-gaussian".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub set: ChallengeSet,
    pub embeddings: EmbeddingSet,
}

fn normal_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Class means sit at `±separation/2` on every coordinate. With two classes
/// the sign patterns are opposite, so the means are symmetric about the origin.
pub fn gaussian_challenge(spec: &GaussianSpec, seed: u64) -> SyntheticData {
    assert!(spec.classes >= 2 && spec.pieces >= 1 && spec.dim >= 1);
    assert!(
        !(spec.masked && spec.pieces > 1),
        "masked records are single-piece"
    );
    let mut rng = seeded(seed);
    let half = spec.separation / 2.0;
    let mut signs: Vec<Vec<f64>> = Vec::with_capacity(spec.classes);
    for c in 0..spec.classes {
        let s = if c == 1 && spec.classes == 2 {
            signs[0].iter().map(|v: &f64| -v).collect()
        } else {
            (0..spec.dim)
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect()
        };
        signs.push(s);
    }
    let analyses = (0..spec.classes)
        .map(|c| Analysis {
            label_id: c,
            surface_key: format!("{}#{c}", spec.form),
            segment_count: 1,
            morph_features: BTreeSet::new(),
            gloss: format!("sense {c}"),
        })
        .collect();
    let mut embeddings = EmbeddingSet::new(spec.provider.clone(), spec.dim, spec.masked)
        .expect("valid embedding header");
    let mut sentences = Vec::with_capacity(spec.classes * spec.per_class);
    for i in 0..spec.per_class {
        for (c, sign) in signs.iter().enumerate() {
            let id = format!("s{c}-{i:05}");
            let signal: Vec<f32> = sign
                .iter()
                .zip(normal_vec(&mut rng, spec.dim))
                .map(|(s, z)| (s * half + z) as f32)
                .collect();
            let mut pieces = vec![signal];
            for _ in 1..spec.pieces {
                pieces.push(
                    normal_vec(&mut rng, spec.dim)
                        .into_iter()
                        .map(|v| v as f32)
                        .collect(),
                );
            }
            embeddings
                .insert(
                    EmbeddingRecord::new(id.clone(), pieces, spec.masked).expect("valid record"),
                )
                .expect("unique id");
            sentences.push(LabeledSentence {
                sentence_id: id,
                tokens: vec![format!("left{c}"), spec.form.clone(), format!("right{i}")],
                target_index: 1,
                label_id: c,
            });
        }
    }
    let set = ChallengeSet::new(spec.form.clone(), analyses, sentences, None)
        .expect("valid synthetic set");
    SyntheticData { set, embeddings }
}

/// Shape of a planted mining corpus. Sentences containing `form` carry
/// primary cue words, except the planted ones, which carry opposing cues.
/// Sentences containing `proxy_word` also carry opposing cues.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub sentences: usize,
    pub form: String,
    pub proxy_word: String,
    /// Sentences with the form in a primary context.
    pub primary_occurrences: usize,
    /// Sentences with the form in an opposing context.
    pub planted: usize,
    pub proxy_sentences: usize,
    pub dim: usize,
    pub cue_words: usize,
    pub filler_words: usize,
    pub window: usize,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            sentences: 100_000,
            form: "hx".into(),
            proxy_word: "px".into(),
            primary_occurrences: 9_000,
            planted: 1_000,
            proxy_sentences: 2_000,
            dim: 16,
            cue_words: 40,
            filler_words: 400,
            window: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub corpus: MemoryCorpus,
    pub table: WordVectorTable,
    /// 0-based lines holding planted opposing occurrences.
    pub planted_lines: BTreeSet<usize>,
    pub lines: Vec<String>,
}

#[derive(Clone, Copy)]
enum Kind {
    Primary,
    Planted,
    Proxy,
    Filler,
}

struct Vocab {
    primary: Vec<String>,
    opposing: Vec<String>,
    filler: Vec<String>,
}

impl Vocab {
    fn pick<'a, R: Rng>(words: &'a [String], rng: &mut R) -> &'a str {
        &words[rng.random_range(0..words.len())]
    }
}

fn sentence<R: Rng>(
    rng: &mut R,
    vocab: &Vocab,
    anchor: Option<(&str, &[String])>,
    window: usize,
) -> String {
    let len = rng.random_range(8..=14);
    let mut tokens: Vec<String> = Vec::with_capacity(len);
    let Some((target, cues)) = anchor else {
        for _ in 0..len {
            let w = match rng.random_range(0..10) {
                0 => Vocab::pick(&vocab.primary, rng),
                1 => Vocab::pick(&vocab.opposing, rng),
                _ => Vocab::pick(&vocab.filler, rng),
            };
            tokens.push(w.to_string());
        }
        return tokens.join(" ");
    };
    let t = rng.random_range(0..len);
    for i in 0..len {
        let w = if i == t {
            target
        } else if rng.random_bool(0.4) {
            Vocab::pick(cues, rng)
        } else {
            Vocab::pick(&vocab.filler, rng)
        };
        tokens.push(w.to_string());
    }
    // Guarantee at least one cue inside the window.
    let lo = t.saturating_sub(window);
    let hi = (t + window).min(len - 1);
    let neighbours: Vec<usize> = (lo..=hi).filter(|&i| i != t).collect();
    let slot = neighbours[rng.random_range(0..neighbours.len())];
    tokens[slot] = Vocab::pick(cues, rng).to_string();
    tokens.join(" ")
}

pub fn planted_corpus(spec: &PlantedSpec, seed: u64) -> PlantedCorpus {
    let special = spec.primary_occurrences + spec.planted + spec.proxy_sentences;
    assert!(
        special <= spec.sentences,
        "corpus too small for the requested occurrences"
    );
    let vocab = Vocab {
        primary: (0..spec.cue_words).map(|i| format!("p{i}")).collect(),
        opposing: (0..spec.cue_words).map(|i| format!("o{i}")).collect(),
        filler: (0..spec.filler_words).map(|i| format!("f{i}")).collect(),
    };

    let mut vrng = seeded(derive_seed(seed, 1));
    let axis = normal_vec(&mut vrng, spec.dim);
    let mut table = WordVectorTable::new(spec.dim);
    let groups: [(&[String], f64); 3] = [
        (&vocab.primary, 1.0),
        (&vocab.opposing, -1.0),
        (&vocab.filler, 0.0),
    ];
    for (words, sign) in groups {
        for w in words {
            let v = normal_vec(&mut vrng, spec.dim)
                .into_iter()
                .zip(&axis)
                .map(|(z, a)| (0.5 * z + sign * a) as f32)
                .collect();
            table
                .insert(w.clone(), v)
                .expect("distinct synthetic tokens");
        }
    }

    let mut kinds: Vec<Kind> = Vec::with_capacity(spec.sentences);
    kinds.extend(std::iter::repeat_n(Kind::Primary, spec.primary_occurrences));
    kinds.extend(std::iter::repeat_n(Kind::Planted, spec.planted));
    kinds.extend(std::iter::repeat_n(Kind::Proxy, spec.proxy_sentences));
    kinds.extend(std::iter::repeat_n(Kind::Filler, spec.sentences - special));
    let mut rng = seeded(derive_seed(seed, 2));
    kinds.shuffle(&mut rng);

    let mut planted_lines = BTreeSet::new();
    let lines: Vec<String> = kinds
        .iter()
        .enumerate()
        .map(|(line, kind)| match kind {
            Kind::Primary => sentence(
                &mut rng,
                &vocab,
                Some((&spec.form, &vocab.primary)),
                spec.window,
            ),
            Kind::Planted => {
                planted_lines.insert(line);
                sentence(
                    &mut rng,
                    &vocab,
                    Some((&spec.form, &vocab.opposing)),
                    spec.window,
                )
            }
            Kind::Proxy => sentence(
                &mut rng,
                &vocab,
                Some((&spec.proxy_word, &vocab.opposing)),
                spec.window,
            ),
            Kind::Filler => sentence(&mut rng, &vocab, None, spec.window),
        })
        .collect();
    PlantedCorpus {
        corpus: MemoryCorpus::from_lines(lines.iter().map(String::as_str)),
        table,
        planted_lines,
        lines,
    }
}
