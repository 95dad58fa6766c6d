use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use homobench::dataset::{load_challenge_set, ChallengeSet, DatasetManifest, ManifestEntry};
use homobench::embedio::read_embedding_set;
use homobench::evalharness::{
    bucket_report, csv_field, paired_masked_comparison, run_cv_detailed, run_fewshot,
    BaselineTrainer, BucketConfig, CentroidTrainer, ContextualTrainer, EvalReport, ExpertTrainer,
    FewShotMode, PredictionRecord,
};
use homobench::expert::{train_contextual_expert, train_w2v_baseline, WordVectorTable};
use homobench::mining::{run_pipeline, sample_initial, write_candidates, ProxySpec, TextCorpus};
use homobench::probe::fit_centroids;
use homobench::tinynn::{
    grad_check, BiLstmMlp, ContextSlot, MlpConfig, MlpModel, NnError, Parameterized,
};
use homobench::EmbeddingSet;

use crate::config::{ExperimentConfig, GradcheckModel, Scenario};
use crate::plot;

pub fn execute(cfg: &ExperimentConfig) -> Result<()> {
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(jobs) = cfg.jobs {
            if jobs == 0 {
                bail!("--jobs must be at least 1");
            }
            builder = builder.num_threads(jobs);
        }
        builder.build().context("starting worker pool")?
    };
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let saved = cfg.save_resolved()?;
    log::info!(
        "command={} out_dir={} config={}",
        cfg.command,
        cfg.out_dir.display(),
        saved.display()
    );
    pool.install(|| match cfg.command.as_str() {
        "validate" => validate(cfg),
        "embed-describe" => embed_describe(cfg),
        "train-expert" => train_expert(cfg),
        "eval-cv" => evaluate(cfg, EvalKind::Cv),
        "eval-fewshot" => evaluate(cfg, EvalKind::FewShot),
        "probe-centroid" => evaluate(cfg, EvalKind::Probe),
        "bucket-report" => buckets(cfg),
        "plot" => plot_reports(cfg),
        "mine" => mine(cfg),
        "gradcheck" => gradcheck(cfg),
        other => Err(anyhow!("unknown command {other:?}")),
    })
}

/// One challenge set of a sweep with its resolved inputs.
#[derive(Debug, Clone)]
struct SetJob {
    path: PathBuf,
    stem: String,
    embeddings: Option<PathBuf>,
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "set".into())
}

fn set_jobs(cfg: &ExperimentConfig) -> Result<Vec<SetJob>> {
    let mut paths = cfg.sets.clone();
    if let Some(manifest) = &cfg.manifest {
        let m = DatasetManifest::load(manifest)
            .with_context(|| format!("loading manifest {}", manifest.display()))?;
        paths.extend(m.resolve(manifest));
    }
    if paths.is_empty() {
        bail!("no challenge sets given (use --set or --manifest)");
    }
    if !cfg.embeddings.is_empty() && cfg.embeddings.len() != paths.len() {
        bail!(
            "{} embedding file(s) for {} set(s); give one --emb per set or use --emb-dir",
            cfg.embeddings.len(),
            paths.len()
        );
    }
    let mut seen = BTreeMap::new();
    paths
        .into_iter()
        .enumerate()
        .map(|(i, path)| {
            let stem = stem_of(&path);
            if let Some(prev) = seen.insert(stem.clone(), path.clone()) {
                bail!(
                    "sets {} and {} share the output name {stem:?}",
                    prev.display(),
                    path.display()
                );
            }
            let embeddings = match (cfg.embeddings.get(i), &cfg.emb_dir) {
                (Some(p), _) => Some(p.clone()),
                (None, Some(dir)) => Some(dir.join(format!("{stem}.hxe"))),
                (None, None) => None,
            };
            Ok(SetJob {
                path,
                stem,
                embeddings,
            })
        })
        .collect()
}

fn load_set(job: &SetJob) -> Result<ChallengeSet> {
    let loaded =
        load_challenge_set(&job.path).with_context(|| format!("loading {}", job.path.display()))?;
    if loaded.dropped_count > 0 {
        log::info!("set={} dropped={}", job.stem, loaded.dropped_count);
    }
    Ok(loaded.set)
}

fn load_embeddings(cfg: &ExperimentConfig, job: &SetJob) -> Result<EmbeddingSet> {
    let path = job
        .embeddings
        .as_ref()
        .ok_or_else(|| anyhow!("{}: no embeddings (use --emb or --emb-dir)", job.stem))?;
    let emb = read_embedding_set(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(masked) = cfg.masked {
        if emb.masked() != masked {
            bail!(
                "{}: masked flag is {}, expected {masked}",
                path.display(),
                emb.masked()
            );
        }
    }
    Ok(emb)
}

fn load_word_vectors(cfg: &ExperimentConfig) -> Result<WordVectorTable> {
    let path = cfg
        .word_vectors
        .as_ref()
        .ok_or_else(|| anyhow!("the baseline needs --word-vectors"))?;
    WordVectorTable::load(path).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let jobs = set_jobs(cfg)?;
    let results: Vec<(SetJob, Result<ManifestEntry>)> = jobs
        .into_par_iter()
        .map(|job| {
            let entry = load_challenge_set(&job.path)
                .with_context(|| format!("loading {}", job.path.display()))
                .and_then(|loaded| {
                    let path = fs::canonicalize(&job.path)?;
                    Ok(ManifestEntry::describe(&path, &loaded))
                });
            (job, entry)
        })
        .collect();
    let mut entries = Vec::new();
    let mut failures = 0;
    for (job, entry) in results {
        match entry {
            Ok(e) => {
                println!(
                    "ok\t{}\t{}\t{}\tcounts={:?}\tdropped={}\tskew={}{}",
                    job.stem,
                    e.form,
                    e.category,
                    e.sentence_counts,
                    e.dropped_count,
                    e.skew_ratio,
                    if e.skew_approximate { " (approx)" } else { "" }
                );
                entries.push(e);
            }
            Err(err) => {
                failures += 1;
                println!("invalid\t{}\t{err:#}", job.stem);
            }
        }
    }
    write_json(
        &cfg.out_dir.join("manifest.json"),
        &DatasetManifest::new(entries),
    )?;
    if failures > 0 {
        bail!("{failures} challenge set(s) failed validation");
    }
    Ok(())
}

#[derive(Serialize)]
struct Description {
    path: PathBuf,
    #[serde(flatten)]
    summary: homobench::embedio::EmbeddingSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    missing_sentences: Option<usize>,
}

fn embed_describe(cfg: &ExperimentConfig) -> Result<()> {
    let targets: Vec<(String, PathBuf, Option<SetJob>)> =
        if cfg.sets.is_empty() && cfg.manifest.is_none() {
            if cfg.embeddings.is_empty() {
                bail!("nothing to describe (use --emb, or --set with --emb-dir)");
            }
            cfg.embeddings
                .iter()
                .map(|p| (stem_of(p), p.clone(), None))
                .collect()
        } else {
            set_jobs(cfg)?
                .into_iter()
                .map(|job| {
                    let path = job.embeddings.clone().ok_or_else(|| {
                        anyhow!("{}: no embeddings (use --emb or --emb-dir)", job.stem)
                    })?;
                    Ok((job.stem.clone(), path, Some(job)))
                })
                .collect::<Result<_>>()?
        };
    for (stem, path, job) in targets {
        let emb =
            read_embedding_set(&path).with_context(|| format!("reading {}", path.display()))?;
        let missing_sentences = match &job {
            Some(job) => {
                let set = load_set(job)?;
                Some(
                    set.sentences()
                        .iter()
                        .filter(|s| emb.get(&s.sentence_id).is_none())
                        .count(),
                )
            }
            None => None,
        };
        let description = Description {
            path: path.clone(),
            summary: emb.summary(),
            missing_sentences,
        };
        let text = serde_json::to_string_pretty(&description)?;
        println!("{text}");
        write_json(
            &cfg.out_dir.join(format!("{stem}.describe.json")),
            &description,
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TrainedExpert {
    set: String,
    form: String,
    scenario: String,
    checkpoint: String,
    fingerprint: String,
    training_sentences: usize,
}

fn train_expert(cfg: &ExperimentConfig) -> Result<()> {
    let jobs = set_jobs(cfg)?;
    let table = match cfg.scenario {
        Scenario::Baseline => Some(load_word_vectors(cfg)?),
        _ => None,
    };
    let trained: Vec<TrainedExpert> = jobs
        .par_iter()
        .map(|job| {
            let set = load_set(job)?;
            let ids: Vec<&str> = set
                .sentences()
                .iter()
                .map(|s| s.sentence_id.as_str())
                .collect();
            let (name, ckpt) = match cfg.scenario {
                Scenario::Contextual => {
                    let emb = load_embeddings(cfg, job)?;
                    let expert = train_contextual_expert(
                        &set,
                        &emb,
                        &ids,
                        cfg.aggregation,
                        emb.masked(),
                        cfg.seed,
                        &cfg.expert,
                    )?;
                    ("contextual", expert.to_checkpoint())
                }
                Scenario::Baseline => {
                    let table = table.as_ref().expect("loaded above");
                    let expert = train_w2v_baseline(&set, table, &ids, cfg.seed, &cfg.expert)?;
                    ("baseline", expert.to_checkpoint())
                }
                Scenario::Centroid => {
                    let emb = load_embeddings(cfg, job)?;
                    let records = set
                        .sentences()
                        .iter()
                        .map(|s| {
                            emb.get(&s.sentence_id)
                                .map(|r| (r, s.label_id))
                                .ok_or_else(|| {
                                    anyhow!("{}: no embedding for {}", job.stem, s.sentence_id)
                                })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let model =
                        fit_centroids(&records, cfg.aggregation)?.with_similarity(cfg.similarity);
                    ("centroids", model.to_checkpoint())
                }
            };
            let file = format!("{}.{name}.hxm", job.stem);
            ckpt.save(&cfg.out_dir.join(&file))?;
            log::info!(
                "set={} checkpoint={file} fingerprint={}",
                job.stem,
                ckpt.fingerprint()
            );
            Ok(TrainedExpert {
                set: job.stem.clone(),
                form: set.form().to_string(),
                scenario: name.to_string(),
                checkpoint: file,
                fingerprint: ckpt.fingerprint(),
                training_sentences: ids.len(),
            })
        })
        .collect::<Result<_>>()?;
    write_json(&cfg.out_dir.join("experts.json"), &trained)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EvalKind {
    Cv,
    FewShot,
    Probe,
}

fn evaluate(cfg: &ExperimentConfig, kind: EvalKind) -> Result<()> {
    let jobs = set_jobs(cfg)?;
    let centroid = kind == EvalKind::Probe
        || (kind == EvalKind::FewShot && cfg.fewshot.mode == FewShotMode::Centroid)
        || cfg.scenario == Scenario::Centroid;
    if centroid && kind == EvalKind::Cv {
        log::info!("evaluating the centroid probe with cross-validation");
    }
    let table = if !centroid && cfg.scenario == Scenario::Baseline {
        Some(load_word_vectors(cfg)?)
    } else {
        None
    };
    let suffix = match kind {
        EvalKind::Cv => format!("cv-k{}", cfg.k),
        EvalKind::FewShot => format!("fewshot-n{}", cfg.fewshot.n),
        EvalKind::Probe => format!("centroid-n{}", cfg.fewshot.n),
    };
    let reports: Vec<(String, EvalReport)> = jobs
        .par_iter()
        .map(|job| {
            let set = load_set(job)?;
            let emb = match &table {
                Some(_) => None,
                None => Some(load_embeddings(cfg, job)?),
            };
            let trainer: Box<dyn ExpertTrainer + '_> = match (&table, &emb) {
                (Some(table), _) => Box::new(BaselineTrainer {
                    table,
                    config: cfg.expert,
                }),
                (None, Some(emb)) if centroid => Box::new(CentroidTrainer {
                    embeddings: emb,
                    aggregation: cfg.aggregation,
                    similarity: cfg.similarity,
                }),
                (None, Some(emb)) => Box::new(ContextualTrainer {
                    embeddings: emb,
                    aggregation: cfg.aggregation,
                    config: cfg.expert,
                }),
                (None, None) => unreachable!(),
            };
            let (report, predictions) = match kind {
                EvalKind::Cv => {
                    run_cv_detailed(&set, trainer.as_ref(), cfg.k, cfg.seed, cfg.stratification)?
                }
                EvalKind::FewShot | EvalKind::Probe => (
                    run_fewshot(
                        &set,
                        trainer.as_ref(),
                        cfg.fewshot.n,
                        cfg.fewshot_rounds(),
                        cfg.seed,
                    )?,
                    Vec::new(),
                ),
            };
            write_report(
                &cfg.out_dir,
                &format!("{}.{suffix}", job.stem),
                &report,
                &predictions,
            )?;
            log::info!(
                "set={} form={} macro_f1={:.4}",
                job.stem,
                report.form,
                report.macro_f1
            );
            Ok((job.stem.clone(), report))
        })
        .collect::<Result<_>>()?;
    write_summary(&cfg.out_dir, &reports)
}

fn write_report(
    out_dir: &Path,
    name: &str,
    report: &EvalReport,
    predictions: &[PredictionRecord],
) -> Result<()> {
    let path = out_dir.join(format!("{name}.report.json"));
    fs::write(&path, report.to_json()).with_context(|| format!("writing {}", path.display()))?;
    let mut w = create(&out_dir.join(format!("{name}.csv")))?;
    writeln!(w, "{}", EvalReport::CSV_HEADER)?;
    report.write_csv_rows(&mut w)?;
    w.flush()?;
    if !predictions.is_empty() {
        let mut w = create(&out_dir.join(format!("{name}.predictions.jsonl")))?;
        for p in predictions {
            serde_json::to_writer(&mut w, p)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    sets: usize,
    mean_macro_f1: f64,
    by_category: Vec<homobench::evalharness::BucketRow>,
    reports: Vec<SummaryRow<'a>>,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    set: &'a str,
    form: &'a str,
    macro_f1: f64,
}

/// Per-set rows plus the cross-set mean.
fn write_summary(out_dir: &Path, reports: &[(String, EvalReport)]) -> Result<()> {
    let mean = reports.iter().map(|(_, r)| r.macro_f1).sum::<f64>() / reports.len().max(1) as f64;
    let mut w = create(&out_dir.join("summary.csv"))?;
    writeln!(
        w,
        "set,form,category,analysis_count,skew_ratio,scenario,provider,masked,macro_f1"
    )?;
    for (stem, r) in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            csv_field(stem),
            csv_field(&r.form),
            r.category,
            r.analysis_count,
            r.skew_ratio,
            r.scenario.scenario,
            csv_field(r.scenario.provider.as_deref().unwrap_or("")),
            r.scenario.masked.map(|m| m.to_string()).unwrap_or_default(),
            r.macro_f1
        )?;
    }
    writeln!(w, "ALL,,,,,,,,{mean}")?;
    w.flush()?;
    let all: Vec<EvalReport> = reports.iter().map(|(_, r)| r.clone()).collect();
    let table = bucket_report(
        &all,
        homobench::evalharness::BucketDimension::Category,
        &BucketConfig::default(),
    );
    let summary = Summary {
        sets: reports.len(),
        mean_macro_f1: mean,
        by_category: table.rows,
        reports: reports
            .iter()
            .map(|(stem, r)| SummaryRow {
                set: stem,
                form: &r.form,
                macro_f1: r.macro_f1,
            })
            .collect(),
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    println!("sets={} mean_macro_f1={mean:.4}", reports.len());
    Ok(())
}

/// Expands directories to their `*.report.json` files, sorted by name.
pub fn collect_reports(paths: &[PathBuf]) -> Result<Vec<EvalReport>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.to_string_lossy().ends_with(".report.json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    files
        .iter()
        .map(|f| {
            let text = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
            EvalReport::from_json(&text).with_context(|| format!("parsing {}", f.display()))
        })
        .collect()
}

fn bucket_inputs(cfg: &ExperimentConfig) -> Result<(Vec<EvalReport>, BucketConfig)> {
    if cfg.bucket.reports.is_empty() {
        bail!("no reports given (use --reports)");
    }
    let reports = collect_reports(&cfg.bucket.reports)?;
    if reports.is_empty() {
        bail!("no *.report.json files found");
    }
    let edges = &cfg.bucket.skew_edges;
    if edges.is_empty()
        || edges.windows(2).any(|w| w[0] >= w[1])
        || edges.iter().any(|e| !e.is_finite())
    {
        bail!("skew edges must be finite and strictly increasing, got {edges:?}");
    }
    Ok((
        reports,
        BucketConfig {
            skew_edges: edges.clone(),
        },
    ))
}

fn dimension_name(cfg: &ExperimentConfig) -> String {
    serde_json::to_value(cfg.bucket.dimension)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| "buckets".into())
}

fn buckets(cfg: &ExperimentConfig) -> Result<()> {
    let (reports, bucket_cfg) = bucket_inputs(cfg)?;
    let table = bucket_report(&reports, cfg.bucket.dimension, &bucket_cfg);
    let name = dimension_name(cfg);
    let mut w = create(&cfg.out_dir.join(format!("buckets-{name}.csv")))?;
    table.write_csv(&mut w)?;
    w.flush()?;
    write_json(&cfg.out_dir.join(format!("buckets-{name}.json")), &table)?;
    for row in &table.rows {
        let mean = row
            .mean_macro_f1
            .map(|m| format!("{m:.4}"))
            .unwrap_or_else(|| "-".into());
        println!("{}\t{}\t{mean}", row.bucket, row.count);
    }
    if !cfg.bucket.masked_reports.is_empty() {
        let masked = collect_reports(&cfg.bucket.masked_reports)?;
        let rows = paired_masked_comparison(&reports, &masked);
        let mut w = create(&cfg.out_dir.join("paired-masked.csv"))?;
        writeln!(w, "form,skew_ratio,unmasked,masked,delta")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                csv_field(&r.form),
                r.skew_ratio,
                r.unmasked,
                r.masked,
                r.delta
            )?;
        }
        w.flush()?;
    }
    Ok(())
}

fn plot_reports(cfg: &ExperimentConfig) -> Result<()> {
    let (reports, bucket_cfg) = bucket_inputs(cfg)?;
    let name = dimension_name(cfg);
    let table = bucket_report(&reports, cfg.bucket.dimension, &bucket_cfg);
    let bars: Vec<plot::Bar> = table
        .rows
        .iter()
        .map(|r| plot::Bar {
            label: r.bucket.clone(),
            value: r.mean_macro_f1,
            note: format!("n={}", r.count),
        })
        .collect();
    let svg = plot::bar_chart(&format!("Mean macro F1 by {name}"), &bars);
    let path = cfg.out_dir.join(format!("plot-{name}.svg"));
    fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    if !cfg.bucket.masked_reports.is_empty() {
        let masked = collect_reports(&cfg.bucket.masked_reports)?;
        let groups: Vec<plot::Group> = paired_masked_comparison(&reports, &masked)
            .into_iter()
            .map(|r| plot::Group {
                label: r.form,
                values: vec![r.unmasked, r.masked],
            })
            .collect();
        let svg = plot::grouped_chart(
            "Unmasked vs masked macro F1",
            &["unmasked", "masked"],
            &groups,
        );
        let path = cfg.out_dir.join("plot-paired-masked.svg");
        fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct MineRun<'a> {
    form: &'a str,
    matches: usize,
    sampled: usize,
    shortfall: bool,
    candidates: usize,
    runs: &'a [homobench::mining::ProxyRun],
}

fn mine(cfg: &ExperimentConfig) -> Result<()> {
    let m = &cfg.mining;
    let corpus_path = m
        .corpus
        .as_ref()
        .ok_or_else(|| anyhow!("mining needs --corpus"))?;
    let form = m
        .form
        .as_deref()
        .ok_or_else(|| anyhow!("mining needs --form"))?;
    let table = load_word_vectors(cfg)?;
    let mut proxies = Vec::new();
    if !m.proxy_words.is_empty() {
        proxies.push(ProxySpec::MorphContrast {
            words: m.proxy_words.clone(),
        });
    }
    if let Some(count) = m.distant {
        proxies.push(ProxySpec::W2vDistant { count });
    }
    if let Some(sample_size) = m.random {
        proxies.push(ProxySpec::Random { sample_size });
    }
    if proxies.is_empty() {
        bail!("no proxy given (use --proxy-words, --distant or --random)");
    }
    let corpus = TextCorpus::new(corpus_path);
    let sample = sample_initial(&corpus, form, m.sample_size, cfg.seed)?;
    if sample.sentences.is_empty() {
        bail!("{form:?} does not occur in {}", corpus_path.display());
    }
    if sample.shortfall {
        log::warn!(
            "only {} occurrence(s) of {form:?}; using all of them",
            sample.matches
        );
    }
    let mut w = create(&cfg.out_dir.join("initial_sample.jsonl"))?;
    for s in &sample.sentences {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    let output = run_pipeline(
        &sample.sentences,
        &proxies,
        form,
        &corpus,
        &table,
        cfg.seed,
        &m.model,
    )?;
    let mut w = create(&cfg.out_dir.join("candidates.jsonl"))?;
    write_candidates(&output.candidates, &mut w)?;
    let run = MineRun {
        form,
        matches: sample.matches,
        sampled: sample.sentences.len(),
        shortfall: sample.shortfall,
        candidates: output.candidates.len(),
        runs: &output.runs,
    };
    write_json(&cfg.out_dir.join("mining.json"), &run)?;
    println!(
        "matches={} candidates={}",
        sample.matches,
        output.candidates.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct GradcheckSummary {
    model: String,
    instances: usize,
    tolerance: f64,
    passed: usize,
    max_relative_error: f64,
    failures: Vec<String>,
}

fn randomize<M: Parameterized>(model: &mut M, rng: &mut ChaCha8Rng) {
    for p in model.params_mut() {
        p.value
            .iter_mut()
            .for_each(|v| *v = rng.random_range(-0.5..0.5));
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn check_family(
    name: &str,
    instances: usize,
    tolerance: f64,
    rng: &mut ChaCha8Rng,
) -> Result<GradcheckSummary> {
    let mut summary = GradcheckSummary {
        model: name.to_string(),
        instances,
        tolerance,
        passed: 0,
        max_relative_error: 0.0,
        failures: Vec::new(),
    };
    for i in 0..instances {
        let classes = rng.random_range(2..=4);
        let mlp = MlpConfig {
            hidden_size: rng.random_range(2..=5),
            hidden_layers: rng.random_range(1..=2),
        };
        let outcome = if name == "mlp" {
            let dim = rng.random_range(2..=6);
            let mut model = MlpModel::new(dim, classes, mlp, rng);
            randomize(&mut model, rng);
            let x = random_vec(rng, dim);
            grad_check(&model, &x, rng.random_range(0..classes), tolerance)
        } else {
            let dim = rng.random_range(2..=4);
            let mut model = BiLstmMlp::new(dim, rng.random_range(2..=4), classes, mlp, rng);
            randomize(&mut model, rng);
            let len = rng.random_range(1..=4);
            let seq: Vec<ContextSlot> = (0..len)
                .map(|_| match rng.random_range(0..4) {
                    0 => ContextSlot::Unknown,
                    1 => ContextSlot::Padding,
                    _ => ContextSlot::Vector(random_vec(rng, dim)),
                })
                .collect();
            grad_check(&model, &seq, rng.random_range(0..classes), tolerance)
        };
        match outcome {
            Ok(report) => {
                summary.passed += 1;
                summary.max_relative_error =
                    summary.max_relative_error.max(report.max_relative_error);
            }
            Err(NnError::GradCheck { report, .. }) => {
                summary.max_relative_error =
                    summary.max_relative_error.max(report.max_relative_error);
                summary
                    .failures
                    .push(format!("instance {i}: {}", report.describe_worst()));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(summary)
}

fn gradcheck(cfg: &ExperimentConfig) -> Result<()> {
    let g = &cfg.gradcheck;
    let families: &[&str] = match g.model {
        GradcheckModel::Mlp => &["mlp"],
        GradcheckModel::BilstmMlp => &["bilstm-mlp"],
        GradcheckModel::Both => &["mlp", "bilstm-mlp"],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let summaries = families
        .iter()
        .map(|f| check_family(f, g.instances, g.tolerance, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    write_json(&cfg.out_dir.join("gradcheck.json"), &summaries)?;
    let mut failed = 0;
    for s in &summaries {
        println!(
            "{}\t{}/{} passed\tmax_rel_error={:.3e}",
            s.model, s.passed, s.instances, s.max_relative_error
        );
        failed += s.failures.len();
    }
    if failed > 0 {
        bail!(
            "{failed} gradient check instance(s) exceeded tolerance {}",
            g.tolerance
        );
    }
    Ok(())
}
