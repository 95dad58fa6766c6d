use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::metrics::{AnalysisScore, ConfusionAccumulator};
use crate::dataset::AmbiguityCategory;
use crate::embedio::AggregationStrategy;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Which classifier produced a report and over what inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInfo {
    /// `contextual`, `w2v-baseline` or `centroid`.
    pub scenario: String,
    pub provider: Option<String>,
    pub masked: Option<bool>,
    pub aggregation: Option<AggregationStrategy>,
    /// Most common number of word pieces of the target across the set.
    pub piece_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EvalMode {
    Cv {
        k: usize,
        seed: u64,
    },
    FewShot {
        n_per_analysis: usize,
        rounds: usize,
        seed: u64,
    },
}

/// Outcome of one experiment on one homograph.
///
/// For cross-validation `macro_f1` is the macro average of the pooled
/// per-analysis scores. For few-shot it is the mean of the per-round macro F1
/// values in `round_macro_f1`; `per_analysis` then describes counts pooled over
/// all rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub form: String,
    pub category: AmbiguityCategory,
    pub analysis_count: usize,
    pub skew_ratio: f64,
    pub skew_approximate: bool,
    pub scenario: ScenarioInfo,
    #[serde(flatten)]
    pub mode: EvalMode,
    pub evaluated: u64,
    pub macro_f1: f64,
    pub per_analysis: Vec<AnalysisScore>,
    pub confusion: ConfusionAccumulator,
    /// Per fold (CV) or per round (few-shot).
    pub partial_confusions: Vec<ConfusionAccumulator>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub round_macro_f1: Vec<f64>,
    /// Analyses that never occurred in evaluation but still count toward the macro average.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_support_labels: Vec<usize>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub const CSV_HEADER: &'static str = "form,category,scenario,provider,masked,aggregation,mode,label,precision,recall,f1,support,predicted,macro_f1";

    /// One row per analysis; the homograph-level macro F1 is repeated on each row.
    pub fn write_csv_rows<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mode = match &self.mode {
            EvalMode::Cv { k, .. } => format!("cv{k}"),
            EvalMode::FewShot { n_per_analysis, .. } => format!("fewshot{n_per_analysis}"),
        };
        for s in &self.per_analysis {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(&self.form),
                self.category,
                csv_field(&self.scenario.scenario),
                csv_field(self.scenario.provider.as_deref().unwrap_or("")),
                self.scenario
                    .masked
                    .map(|m| m.to_string())
                    .unwrap_or_default(),
                self.scenario.aggregation.map(|a| a.name()).unwrap_or(""),
                mode,
                s.label,
                s.precision,
                s.recall,
                s.f1,
                s.support,
                s.predicted,
                self.macro_f1
            )?;
        }
        Ok(())
    }
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
/// Quotes a CSV field when needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One held-out prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sentence_id: String,
    /// Fold (CV) or round (few-shot) index.
    pub partition: usize,
    pub gold: usize,
    pub predicted: usize,
}
