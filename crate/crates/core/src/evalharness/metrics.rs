use serde::{Deserialize, Serialize};

/// Per-label TP/FP/FN counts, accumulated over folds or rounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionAccumulator {
    pub tp: Vec<u64>,
    pub fp: Vec<u64>,
    #[serde(rename = "fn")]
    pub fn_: Vec<u64>,
}

impl ConfusionAccumulator {
    pub fn new(label_count: usize) -> Self {
        Self {
            tp: vec![0; label_count],
            fp: vec![0; label_count],
            fn_: vec![0; label_count],
        }
    }

    pub fn from_pairs(label_count: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut acc = Self::new(label_count);
        for (gold, pred) in pairs {
            acc.record(gold, pred);
        }
        acc
    }

    pub fn label_count(&self) -> usize {
        self.tp.len()
    }

    pub fn record(&mut self, gold: usize, predicted: usize) {
        if gold == predicted {
            self.tp[gold] += 1;
        } else {
            self.fn_[gold] += 1;
            self.fp[predicted] += 1;
        }
    }

    pub fn merge(&mut self, other: &ConfusionAccumulator) {
        for (a, b) in self.tp.iter_mut().zip(&other.tp) {
            *a += b;
        }
        for (a, b) in self.fp.iter_mut().zip(&other.fp) {
            *a += b;
        }
        for (a, b) in self.fn_.iter_mut().zip(&other.fn_) {
            *a += b;
        }
    }

    /// Number of evaluated items (every item is a TP or an FN of its gold label).
    pub fn total(&self) -> u64 {
        self.tp.iter().sum::<u64>() + self.fn_.iter().sum::<u64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisScore {
    pub label: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences (TP + FN).
    pub support: u64,
    /// Predicted occurrences (TP + FP).
    pub predicted: u64,
    /// Never gold in the evaluated items; its F1 of 0 still enters the macro average.
    pub zero_support: bool,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 per label from counts pooled over all folds.
/// Any 0/0 yields 0.
pub fn micro_f1_per_analysis(acc: &ConfusionAccumulator) -> Vec<AnalysisScore> {
    if acc.total() == 0 {
        log::warn!("computing F1 over an empty accumulator; all scores are 0");
    }
    (0..acc.label_count())
        .map(|label| {
            let (tp, fp, fn_) = (acc.tp[label], acc.fp[label], acc.fn_[label]);
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fn_);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            AnalysisScore {
                label,
                precision,
                recall,
                f1,
                support: tp + fn_,
                predicted: tp + fp,
                zero_support: tp + fn_ == 0,
            }
        })
        .collect()
}

/// Unweighted mean over every analysis of the homograph. Empty input gives 0.
pub fn macro_f1(per_label_f1: &[f64]) -> f64 {
    if per_label_f1.is_empty() {
        return 0.0;
    }
    per_label_f1.iter().sum::<f64>() / per_label_f1.len() as f64
}

pub fn macro_f1_of(acc: &ConfusionAccumulator) -> f64 {
    let scores = micro_f1_per_analysis(acc);
    macro_f1(&scores.iter().map(|s| s.f1).collect::<Vec<_>>())
}
