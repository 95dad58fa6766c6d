use crate::dataset::{ChallengeSet, LabeledSentence};
use crate::embedio::{AggregationStrategy, EmbeddingRecord, EmbeddingSet};
use crate::expert::{
    train_contextual_expert, train_w2v_baseline, ContextualExpert, ExpertConfig, ExpertError,
    W2vBaselineExpert, WordVectorTable,
};
use crate::probe::{fit_centroids, CentroidModel, Similarity};

use super::report::ScenarioInfo;
use super::Result;

/// A fitted classifier for one homograph.
pub trait Predictor {
    fn predict(&self, sentence: &LabeledSentence) -> Result<usize>;
}

/// Fits a [`Predictor`] from a set of training sentences. Implementations are
/// shared across concurrently running folds and rounds.
pub trait ExpertTrainer: Sync {
    fn scenario(&self, set: &ChallengeSet) -> ScenarioInfo;

    fn fit<'a>(
        &'a self,
        set: &ChallengeSet,
        train: &[&LabeledSentence],
        seed: u64,
    ) -> Result<Box<dyn Predictor + 'a>>;
}

fn lookup<'e>(
    embeddings: &'e EmbeddingSet,
    sentence: &LabeledSentence,
) -> Result<&'e EmbeddingRecord> {
    embeddings.get(&sentence.sentence_id).ok_or_else(|| {
        ExpertError::Coverage {
            missing: vec![sentence.sentence_id.clone()],
        }
        .into()
    })
}

fn modal_pieces(embeddings: &EmbeddingSet, set: &ChallengeSet) -> Option<usize> {
    let mut hist = std::collections::BTreeMap::<usize, usize>::new();
    for s in set.sentences() {
        if let Some(r) = embeddings.get(&s.sentence_id) {
            *hist.entry(r.piece_count()).or_default() += 1;
        }
    }
    let max = *hist.values().max()?;
    hist.into_iter().find(|&(_, n)| n == max).map(|(pc, _)| pc)
}

/// MLP over target embeddings.
pub struct ContextualTrainer<'e> {
    pub embeddings: &'e EmbeddingSet,
    pub aggregation: AggregationStrategy,
    pub config: ExpertConfig,
}

struct ContextualPredictor<'e> {
    expert: ContextualExpert,
    embeddings: &'e EmbeddingSet,
}

impl Predictor for ContextualPredictor<'_> {
    fn predict(&self, sentence: &LabeledSentence) -> Result<usize> {
        Ok(self
            .expert
            .predict(lookup(self.embeddings, sentence)?)?
            .label)
    }
}

impl ExpertTrainer for ContextualTrainer<'_> {
    fn scenario(&self, set: &ChallengeSet) -> ScenarioInfo {
        ScenarioInfo {
            scenario: ContextualExpert::SCENARIO.into(),
            provider: Some(self.embeddings.provider().to_string()),
            masked: Some(self.embeddings.masked()),
            aggregation: Some(self.aggregation),
            piece_count: modal_pieces(self.embeddings, set),
        }
    }

    fn fit<'a>(
        &'a self,
        set: &ChallengeSet,
        train: &[&LabeledSentence],
        seed: u64,
    ) -> Result<Box<dyn Predictor + 'a>> {
        let ids: Vec<&str> = train.iter().map(|s| s.sentence_id.as_str()).collect();
        let expert = train_contextual_expert(
            set,
            self.embeddings,
            &ids,
            self.aggregation,
            self.embeddings.masked(),
            seed,
            &self.config,
        )?;
        Ok(Box::new(ContextualPredictor {
            expert,
            embeddings: self.embeddings,
        }))
    }
}

/// BiLSTM over word2vec context.
pub struct BaselineTrainer<'t> {
    pub table: &'t WordVectorTable,
    pub config: ExpertConfig,
}

struct BaselinePredictor<'t> {
    expert: W2vBaselineExpert,
    table: &'t WordVectorTable,
}

impl Predictor for BaselinePredictor<'_> {
    fn predict(&self, sentence: &LabeledSentence) -> Result<usize> {
        Ok(self.expert.predict(sentence, self.table)?.label)
    }
}

impl ExpertTrainer for BaselineTrainer<'_> {
    fn scenario(&self, _set: &ChallengeSet) -> ScenarioInfo {
        ScenarioInfo {
            scenario: W2vBaselineExpert::SCENARIO.into(),
            provider: Some(format!("word2vec-{}d", self.table.dim())),
            masked: None,
            aggregation: None,
            piece_count: None,
        }
    }

    fn fit<'a>(
        &'a self,
        set: &ChallengeSet,
        train: &[&LabeledSentence],
        seed: u64,
    ) -> Result<Box<dyn Predictor + 'a>> {
        let ids: Vec<&str> = train.iter().map(|s| s.sentence_id.as_str()).collect();
        let expert = train_w2v_baseline(set, self.table, &ids, seed, &self.config)?;
        Ok(Box::new(BaselinePredictor {
            expert,
            table: self.table,
        }))
    }
}

/// Dot-product centroid probe; `seed` is unused because fitting is deterministic.
pub struct CentroidTrainer<'e> {
    pub embeddings: &'e EmbeddingSet,
    pub aggregation: AggregationStrategy,
    pub similarity: Similarity,
}

struct CentroidPredictor<'e> {
    model: CentroidModel,
    embeddings: &'e EmbeddingSet,
    aggregation: AggregationStrategy,
}

impl Predictor for CentroidPredictor<'_> {
    fn predict(&self, sentence: &LabeledSentence) -> Result<usize> {
        let record = lookup(self.embeddings, sentence)?;
        Ok(self
            .model
            .classify_vector(&record.aggregate(self.aggregation))?)
    }
}

impl ExpertTrainer for CentroidTrainer<'_> {
    fn scenario(&self, set: &ChallengeSet) -> ScenarioInfo {
        ScenarioInfo {
            scenario: "centroid".into(),
            provider: Some(self.embeddings.provider().to_string()),
            masked: Some(self.embeddings.masked()),
            aggregation: Some(self.aggregation),
            piece_count: modal_pieces(self.embeddings, set),
        }
    }

    fn fit<'a>(
        &'a self,
        _set: &ChallengeSet,
        train: &[&LabeledSentence],
        _seed: u64,
    ) -> Result<Box<dyn Predictor + 'a>> {
        let records = train
            .iter()
            .map(|s| Ok((lookup(self.embeddings, s)?, s.label_id)))
            .collect::<Result<Vec<_>>>()?;
        let model = fit_centroids(&records, self.aggregation)?.with_similarity(self.similarity);
        Ok(Box::new(CentroidPredictor {
            model,
            embeddings: self.embeddings,
            aggregation: self.aggregation,
        }))
    }
}
