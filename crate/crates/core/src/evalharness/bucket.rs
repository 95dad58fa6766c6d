use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::report::{csv_field, EvalReport};
use crate::dataset::{AmbiguityCategory, MAX_ANALYSES, MIN_ANALYSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BucketDimension {
    Category,
    AnalysisCount,
    SkewRatio,
    PieceCount,
    Masked,
    /// Embedding provider (or baseline); the cross-model comparison.
    Provider,
}

impl std::str::FromStr for BucketDimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "category" => Ok(Self::Category),
            "analysis-count" | "analysis_count" => Ok(Self::AnalysisCount),
            "skew" | "skew-ratio" | "skew_ratio" => Ok(Self::SkewRatio),
            "piece-count" | "piece_count" => Ok(Self::PieceCount),
            "masked" => Ok(Self::Masked),
            "provider" => Ok(Self::Provider),
            other => Err(format!(
                "unknown dimension {other:?} (category|analysis-count|skew-ratio|piece-count|masked|provider)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketConfig {
    /// Upper edges (inclusive) of the skew buckets; a final open bucket follows.
    pub skew_edges: Vec<f64>,
}

impl Default for BucketConfig {
    fn default() -> Self {
        Self {
            skew_edges: vec![2.0, 5.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub bucket: String,
    pub count: usize,
    /// `None` for empty buckets.
    pub mean_macro_f1: Option<f64>,
    pub forms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketTable {
    pub dimension: BucketDimension,
    pub rows: Vec<BucketRow>,
}

impl BucketTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "bucket,count,mean_macro_f1")?;
        for row in &self.rows {
            let mean = row.mean_macro_f1.map(|m| m.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{}", csv_field(&row.bucket), row.count, mean)?;
        }
        Ok(())
    }
}

fn ratio_label(edge: f64) -> String {
    format!("{edge}:1")
}

fn skew_bucket(edges: &[f64], skew: f64) -> String {
    match edges.iter().find(|&&e| skew <= e) {
        Some(&e) => format!("<={}", ratio_label(e)),
        None => format!(">{}", ratio_label(edges.last().copied().unwrap_or(1.0))),
    }
}

fn piece_bucket(pieces: Option<usize>) -> String {
    match pieces {
        Some(1) => "1".into(),
        Some(2) => "2".into(),
        Some(_) => "3+".into(),
        None => "unknown".into(),
    }
}

/// Mean macro F1 per bucket. Fixed-vocabulary dimensions list every bucket,
/// including empty ones (count 0, no mean).
pub fn bucket_report(
    reports: &[EvalReport],
    dimension: BucketDimension,
    config: &BucketConfig,
) -> BucketTable {
    let mut order: Vec<String> = match dimension {
        BucketDimension::Category => AmbiguityCategory::ALL
            .iter()
            .map(|c| c.to_string())
            .collect(),
        BucketDimension::AnalysisCount => (MIN_ANALYSES..=MAX_ANALYSES)
            .map(|n| n.to_string())
            .collect(),
        BucketDimension::SkewRatio => {
            let mut b: Vec<String> = config
                .skew_edges
                .iter()
                .map(|&e| format!("<={}", ratio_label(e)))
                .collect();
            b.push(format!(
                ">{}",
                ratio_label(config.skew_edges.last().copied().unwrap_or(1.0))
            ));
            b
        }
        BucketDimension::PieceCount => vec!["1".into(), "2".into(), "3+".into()],
        BucketDimension::Masked => vec!["unmasked".into(), "masked".into()],
        BucketDimension::Provider => Vec::new(),
    };
    let key = |r: &EvalReport| -> String {
        match dimension {
            BucketDimension::Category => r.category.to_string(),
            BucketDimension::AnalysisCount => r.analysis_count.to_string(),
            BucketDimension::SkewRatio => skew_bucket(&config.skew_edges, r.skew_ratio),
            BucketDimension::PieceCount => piece_bucket(r.scenario.piece_count),
            BucketDimension::Masked => match r.scenario.masked {
                Some(true) => "masked".into(),
                Some(false) => "unmasked".into(),
                None => "n/a".into(),
            },
            BucketDimension::Provider => match &r.scenario.provider {
                Some(p) => format!("{} ({})", r.scenario.scenario, p),
                None => r.scenario.scenario.clone(),
            },
        }
    };
    let mut groups: BTreeMap<String, Vec<&EvalReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(key(r)).or_default().push(r);
    }
    for k in groups.keys() {
        if !order.contains(k) {
            order.push(k.clone());
        }
    }
    let rows = order
        .into_iter()
        .map(|bucket| {
            let members = groups.get(&bucket).map(Vec::as_slice).unwrap_or(&[]);
            let mean_macro_f1 = (!members.is_empty())
                .then(|| members.iter().map(|r| r.macro_f1).sum::<f64>() / members.len() as f64);
            BucketRow {
                count: members.len(),
                mean_macro_f1,
                forms: members.iter().map(|r| r.form.clone()).collect(),
                bucket,
            }
        })
        .collect();
    BucketTable { dimension, rows }
}

/// Same homograph scored with and without masking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub form: String,
    pub skew_ratio: f64,
    pub unmasked: f64,
    pub masked: f64,
    /// `masked - unmasked`
    pub delta: f64,
}

/// Pairs reports by form; forms present on one side only are skipped.
pub fn paired_masked_comparison(unmasked: &[EvalReport], masked: &[EvalReport]) -> Vec<PairedRow> {
    let by_form: BTreeMap<&str, &EvalReport> =
        masked.iter().map(|r| (r.form.as_str(), r)).collect();
    let mut rows: Vec<PairedRow> = unmasked
        .iter()
        .filter_map(|u| {
            by_form.get(u.form.as_str()).map(|m| PairedRow {
                form: u.form.clone(),
                skew_ratio: u.skew_ratio,
                unmasked: u.macro_f1,
                masked: m.macro_f1,
                delta: m.macro_f1 - u.macro_f1,
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        a.skew_ratio
            .total_cmp(&b.skew_ratio)
            .then_with(|| a.form.cmp(&b.form))
    });
    rows
}
