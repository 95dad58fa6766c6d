use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{macro_f1, macro_f1_of, micro_f1_per_analysis, ConfusionAccumulator};
use super::report::{EvalMode, EvalReport, PredictionRecord, REPORT_SCHEMA_VERSION};
use super::trainers::ExpertTrainer;
use super::{EvalError, Result};
use crate::dataset::{
    plan_folds, sample_fewshot, ChallengeSet, LabeledSentence, StratificationMode,
};
use crate::rng::derive_seed;

/// Few-shot classifier family; decides the default round count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FewShotMode {
    Mlp,
    Centroid,
}

/// 10 rounds for the MLP, 200 for the centroid probe.
pub fn default_rounds(mode: FewShotMode) -> usize {
    match mode {
        FewShotMode::Mlp => 10,
        FewShotMode::Centroid => 200,
    }
}

/// `(sampling seed, training seed)` used by few-shot round `round`.
pub fn fewshot_round_seeds(seed: u64, round: usize) -> (u64, u64) {
    let base = derive_seed(seed, 0x5EED_0000 + round as u64);
    (derive_seed(base, 1), derive_seed(base, 2))
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, 0xF01D_0000 + fold as u64)
}

fn evaluate(
    trainer: &dyn ExpertTrainer,
    set: &ChallengeSet,
    train: &[&LabeledSentence],
    test: &[&LabeledSentence],
    seed: u64,
    partition: usize,
) -> Result<(ConfusionAccumulator, Vec<PredictionRecord>)> {
    let predictor = trainer.fit(set, train, seed)?;
    let mut acc = ConfusionAccumulator::new(set.analysis_count());
    let mut predictions = Vec::with_capacity(test.len());
    for s in test {
        let predicted = predictor.predict(s)?;
        if predicted >= set.analysis_count() {
            return Err(EvalError::Invalid(format!(
                "predictor returned label {predicted} for a {}-analysis homograph",
                set.analysis_count()
            )));
        }
        acc.record(s.label_id, predicted);
        predictions.push(PredictionRecord {
            sentence_id: s.sentence_id.clone(),
            partition,
            gold: s.label_id,
            predicted,
        });
    }
    Ok((acc, predictions))
}

fn base_report(
    set: &ChallengeSet,
    trainer: &dyn ExpertTrainer,
    mode: EvalMode,
    confusion: ConfusionAccumulator,
) -> EvalReport {
    let per_analysis = micro_f1_per_analysis(&confusion);
    let zero_support_labels = per_analysis
        .iter()
        .filter(|s| s.zero_support)
        .map(|s| s.label)
        .collect();
    EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        form: set.form().to_string(),
        category: set.category(),
        analysis_count: set.analysis_count(),
        skew_ratio: set.skew().value,
        skew_approximate: set.skew().approximate,
        scenario: trainer.scenario(set),
        mode,
        evaluated: confusion.total(),
        macro_f1: macro_f1(&per_analysis.iter().map(|s| s.f1).collect::<Vec<_>>()),
        per_analysis,
        confusion,
        partial_confusions: Vec::new(),
        round_macro_f1: Vec::new(),
        zero_support_labels,
    }
}

/// k-fold cross-validation; also returns every held-out prediction.
///
/// Folds run on the current rayon pool and are merged in fold order.
pub fn run_cv_detailed(
    set: &ChallengeSet,
    trainer: &dyn ExpertTrainer,
    k: usize,
    seed: u64,
    stratification: StratificationMode,
) -> Result<(EvalReport, Vec<PredictionRecord>)> {
    let plan = plan_folds(set, k, seed, stratification)?;
    let folds: Vec<_> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (test, train): (Vec<&LabeledSentence>, Vec<&LabeledSentence>) = set
                .sentences()
                .iter()
                .partition(|s| plan.fold_of(&s.sentence_id) == Some(fold));
            evaluate(trainer, set, &train, &test, fold_seed(seed, fold), fold).map_err(|e| {
                EvalError::Fold {
                    fold,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<_>>()?;
    let mut total = ConfusionAccumulator::new(set.analysis_count());
    let mut partials = Vec::with_capacity(k);
    let mut predictions = Vec::with_capacity(set.sentences().len());
    for (acc, preds) in folds {
        total.merge(&acc);
        partials.push(acc);
        predictions.extend(preds);
    }
    let mut report = base_report(set, trainer, EvalMode::Cv { k, seed }, total);
    report.partial_confusions = partials;
    Ok((report, predictions))
}

pub fn run_cv(
    set: &ChallengeSet,
    trainer: &dyn ExpertTrainer,
    k: usize,
    seed: u64,
    stratification: StratificationMode,
) -> Result<EvalReport> {
    run_cv_detailed(set, trainer, k, seed, stratification).map(|(r, _)| r)
}

/// Repeated few-shot rounds: sample `n_per_analysis` training sentences per
/// analysis, fit, evaluate on the rest. The headline score is the mean of the
/// per-round macro F1 values.
pub fn run_fewshot_detailed(
    set: &ChallengeSet,
    trainer: &dyn ExpertTrainer,
    n_per_analysis: usize,
    rounds: usize,
    seed: u64,
) -> Result<(EvalReport, Vec<PredictionRecord>)> {
    if rounds == 0 {
        return Err(EvalError::Invalid(
            "few-shot evaluation needs at least one round".into(),
        ));
    }
    let results: Vec<_> = (0..rounds)
        .into_par_iter()
        .map(|round| {
            let (sample_seed, train_seed) = fewshot_round_seeds(seed, round);
            let wrap = |e: EvalError| EvalError::Round {
                round,
                source: Box::new(e),
            };
            let split =
                sample_fewshot(set, n_per_analysis, sample_seed).map_err(|e| wrap(e.into()))?;
            evaluate(trainer, set, &split.train, &split.test, train_seed, round).map_err(wrap)
        })
        .collect::<Result<_>>()?;
    let mut total = ConfusionAccumulator::new(set.analysis_count());
    let mut partials = Vec::with_capacity(rounds);
    let mut round_scores = Vec::with_capacity(rounds);
    let mut predictions = Vec::new();
    for (acc, preds) in results {
        total.merge(&acc);
        round_scores.push(macro_f1_of(&acc));
        partials.push(acc);
        predictions.extend(preds);
    }
    let mode = EvalMode::FewShot {
        n_per_analysis,
        rounds,
        seed,
    };
    let mut report = base_report(set, trainer, mode, total);
    report.macro_f1 = round_scores.iter().sum::<f64>() / rounds as f64;
    report.partial_confusions = partials;
    report.round_macro_f1 = round_scores;
    Ok((report, predictions))
}

pub fn run_fewshot(
    set: &ChallengeSet,
    trainer: &dyn ExpertTrainer,
    n_per_analysis: usize,
    rounds: usize,
    seed: u64,
) -> Result<EvalReport> {
    run_fewshot_detailed(set, trainer, n_per_analysis, rounds, seed).map(|(r, _)| r)
}
