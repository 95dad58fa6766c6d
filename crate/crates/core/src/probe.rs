//! Centroid probing: classify a raw embedding by its dot product with the mean
//! training embedding of each analysis. No classifier is trained.
//!
//! The dot product is not translation invariant; shifting every embedding by
//! a constant vector can change decisions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedio::{AggregationStrategy, EmbeddingRecord};
use crate::tinynn::{Checkpoint, NnError, Param};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("cannot fit centroids to an empty training set")]
    Empty,
    #[error("dimension mismatch: centroids have dim {expected}, input has {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Checkpoint(#[from] NnError),
}

pub type Result<T, E = ProbeError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    /// Raw inner product.
    #[default]
    Dot,
    /// Inner product of unit-normalised vectors; exploratory only.
    Cosine,
}

/// One centroid per analysis seen in training.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    dim: usize,
    centroids: BTreeMap<usize, Vec<f64>>,
    similarity: Similarity,
}

/// Mean aggregated vector per label.
pub fn fit_centroids(
    records: &[(&EmbeddingRecord, usize)],
    aggregation: AggregationStrategy,
) -> Result<CentroidModel> {
    let Some((first, _)) = records.first() else {
        return Err(ProbeError::Empty);
    };
    let dim = first.dim();
    let mut sums: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for (record, label) in records {
        if record.dim() != dim {
            return Err(ProbeError::Dimension {
                expected: dim,
                found: record.dim(),
            });
        }
        let (sum, n) = sums.entry(*label).or_insert_with(|| (vec![0.0; dim], 0));
        for (s, v) in sum.iter_mut().zip(record.aggregate(aggregation)) {
            *s += v;
        }
        *n += 1;
    }
    let centroids = sums
        .into_iter()
        .map(|(label, (sum, n))| (label, sum.into_iter().map(|s| s / n as f64).collect()))
        .collect();
    Ok(CentroidModel {
        dim,
        centroids,
        similarity: Similarity::Dot,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl CentroidModel {
    pub const CHECKPOINT_KIND: &'static str = "centroids";

    pub fn from_centroids(centroids: BTreeMap<usize, Vec<f64>>) -> Result<Self> {
        let dim = centroids
            .values()
            .next()
            .map(Vec::len)
            .ok_or(ProbeError::Empty)?;
        if let Some(c) = centroids.values().find(|c| c.len() != dim) {
            return Err(ProbeError::Dimension {
                expected: dim,
                found: c.len(),
            });
        }
        Ok(Self {
            dim,
            centroids,
            similarity: Similarity::Dot,
        })
    }

    pub fn with_similarity(mut self, similarity: Similarity) -> Self {
        self.similarity = similarity;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.centroids.keys().copied()
    }

    pub fn centroid(&self, label: usize) -> Option<&[f64]> {
        self.centroids.get(&label).map(Vec::as_slice)
    }

    /// Similarity of `x` to every centroid, in label order.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        if x.len() != self.dim {
            return Err(ProbeError::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        let x_norm = norm(x);
        Ok(self
            .centroids
            .iter()
            .map(|(&label, c)| {
                let s = match self.similarity {
                    Similarity::Dot => dot(x, c),
                    Similarity::Cosine => {
                        let d = x_norm * norm(c);
                        if d == 0.0 {
                            0.0
                        } else {
                            dot(x, c) / d
                        }
                    }
                };
                (label, s)
            })
            .collect())
    }

    /// Best-scoring label for an already aggregated vector; ties go to the lower label.
    pub fn classify_vector(&self, x: &[f64]) -> Result<usize> {
        let scores = self.scores(x)?;
        let mut best = scores[0];
        for &(label, s) in &scores[1..] {
            if s > best.1 {
                best = (label, s);
            }
        }
        Ok(best.0)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let tensors = self
            .centroids
            .iter()
            .map(|(label, c)| Param {
                name: format!("centroid.{label}"),
                rows: self.dim,
                cols: 1,
                value: c.clone(),
            })
            .collect();
        let meta = serde_json::json!({ "similarity": self.similarity }).to_string();
        Checkpoint::new(Self::CHECKPOINT_KIND, meta, tensors)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.expect_kind(Self::CHECKPOINT_KIND)?;
        let mut centroids = BTreeMap::new();
        for t in &ckpt.tensors {
            let label = t
                .name
                .strip_prefix("centroid.")
                .and_then(|l| l.parse().ok())
                .ok_or_else(|| NnError::Checkpoint(format!("unexpected tensor {:?}", t.name)))?;
            centroids.insert(label, t.value.clone());
        }
        #[derive(Deserialize)]
        struct Meta {
            #[serde(default)]
            similarity: Similarity,
        }
        let meta: Meta = serde_json::from_str(&ckpt.metadata)
            .map_err(|e| NnError::Checkpoint(format!("centroid metadata: {e}")))?;
        Ok(Self::from_centroids(centroids)?.with_similarity(meta.similarity))
    }
}

pub fn classify_centroid(
    model: &CentroidModel,
    record: &EmbeddingRecord,
    aggregation: AggregationStrategy,
) -> Result<usize> {
    model.classify_vector(&record.aggregate(aggregation))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(v: &[f32]) -> EmbeddingRecord {
        EmbeddingRecord::new("r", vec![v.to_vec()], false).unwrap()
    }

    #[test]
    fn centroid_means() {
        let (a, b, c) = (rec(&[0.0, 0.0]), rec(&[2.0, 2.0]), rec(&[4.0, 0.0]));
        let model =
            fit_centroids(&[(&a, 0), (&b, 0), (&c, 1)], AggregationStrategy::First).unwrap();
        assert_eq!(model.centroid(0).unwrap(), &[1.0, 1.0]);
        assert_eq!(model.centroid(1).unwrap(), &[4.0, 0.0]);
        assert!(matches!(
            fit_centroids(&[], AggregationStrategy::First),
            Err(ProbeError::Empty)
        ));
    }

    #[test]
    fn identical_inputs_identical_centroids() {
        let r = rec(&[0.3, -0.7]);
        let model = fit_centroids(&[(&r, 0), (&r, 1), (&r, 2)], AggregationStrategy::Sum).unwrap();
        assert_eq!(model.centroid(0), model.centroid(2));
        assert_eq!(
            classify_centroid(&model, &r, AggregationStrategy::Sum).unwrap(),
            0
        );
    }

    #[test]
    fn dominant_coordinate_and_ties() {
        let model = CentroidModel::from_centroids(BTreeMap::from([
            (0, vec![1.0, 0.0]),
            (1, vec![0.0, 1.0]),
        ]))
        .unwrap();
        assert_eq!(
            classify_centroid(&model, &rec(&[0.9, 0.1]), AggregationStrategy::First).unwrap(),
            0
        );
        assert_eq!(
            classify_centroid(&model, &rec(&[0.1, 0.9]), AggregationStrategy::First).unwrap(),
            1
        );
        let orth = CentroidModel::from_centroids(BTreeMap::from([
            (2, vec![0.0, 1.0]),
            (3, vec![0.0, -1.0]),
        ]))
        .unwrap();
        assert_eq!(orth.classify_vector(&[1.0, 0.0]).unwrap(), 2);
        assert!(matches!(
            model.classify_vector(&[1.0]),
            Err(ProbeError::Dimension { .. })
        ));
    }

    #[test]
    fn dot_is_not_translation_invariant() {
        let model = CentroidModel::from_centroids(BTreeMap::from([
            (0, vec![1.0, 0.0]),
            (1, vec![3.0, 3.0]),
        ]))
        .unwrap();
        assert_eq!(model.classify_vector(&[1.0, -1.0]).unwrap(), 0);
        assert_eq!(model.classify_vector(&[11.0, 9.0]).unwrap(), 1);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let model = CentroidModel::from_centroids(BTreeMap::from([
            (0, vec![1.5, 0.0]),
            (1, vec![0.0, -2.0]),
        ]))
        .unwrap()
        .with_similarity(Similarity::Cosine);
        let back = CentroidModel::from_checkpoint(&model.to_checkpoint()).unwrap();
        assert_eq!(back, model);
    }
}
