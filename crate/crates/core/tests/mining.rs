use std::collections::BTreeSet;

use homobench::expert::WordVectorTable;
use homobench::mining::{
    resolve_proxy_words, run_pipeline, sample_initial, union_candidates, write_candidates,
    MemoryCorpus, MiningCandidate, MiningConfig, Provenance, ProxySpec, TextCorpus,
};
use homobench::synthetic::{planted_corpus, PlantedCorpus, PlantedSpec};
use homobench::tinynn::MlpConfig;

fn small_corpus(seed: u64) -> PlantedCorpus {
    planted_corpus(
        &PlantedSpec {
            sentences: 4000,
            primary_occurrences: 400,
            planted: 80,
            proxy_sentences: 300,
            ..PlantedSpec::default()
        },
        seed,
    )
}

fn small_config() -> MiningConfig {
    MiningConfig {
        lstm_hidden: 16,
        mlp: MlpConfig {
            hidden_size: 16,
            hidden_layers: 2,
        },
        epochs: 4,
        ..MiningConfig::default()
    }
}

fn primaries(p: &PlantedCorpus) -> Vec<homobench::mining::CorpusSentence> {
    let sample = sample_initial(&p.corpus, "hx", usize::MAX >> 1, 0).unwrap();
    sample
        .sentences
        .into_iter()
        .filter(|s| !p.planted_lines.contains(&s.line))
        .collect()
}

#[test]
fn initial_sample_reports_shortfall_and_is_seeded() {
    let corpus = MemoryCorpus::from_lines(["a hx b", "c d", "hx hx e", "f"]);
    let s = sample_initial(&corpus, "hx", 10, 1).unwrap();
    assert!(s.shortfall);
    assert_eq!(s.matches, 2);
    assert_eq!(s.sentences[1].target_index, 0);

    let p = small_corpus(1);
    let a = sample_initial(&p.corpus, "hx", 50, 5).unwrap();
    let b = sample_initial(&p.corpus, "hx", 50, 5).unwrap();
    assert_eq!(a, b);
    assert!(!a.shortfall);
    assert!(a.sentences.windows(2).all(|w| w[0].line < w[1].line));
    assert!(sample_initial(&p.corpus, "hx", 0, 5).is_err());
}

#[test]
fn text_corpus_matches_memory_corpus() {
    let p = small_corpus(2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.txt");
    p.corpus
        .write_text(std::fs::File::create(&path).unwrap())
        .unwrap();
    let from_file = sample_initial(&TextCorpus::new(&path), "hx", 30, 3).unwrap();
    let from_memory = sample_initial(&p.corpus, "hx", 30, 3).unwrap();
    assert_eq!(from_file, from_memory);
}

#[test]
fn proxy_word_resolution() {
    let mut t = WordVectorTable::new(2);
    t.insert("hx", vec![1.0, 0.0]).unwrap();
    t.insert("near", vec![0.9, 0.1]).unwrap();
    t.insert("far", vec![-1.0, 0.0]).unwrap();
    t.insert("side", vec![0.0, 1.0]).unwrap();
    let distant = resolve_proxy_words(&ProxySpec::W2vDistant { count: 2 }, "hx", &t, 0).unwrap();
    assert_eq!(distant, ["far", "side"]);
    let random = resolve_proxy_words(&ProxySpec::Random { sample_size: 10 }, "hx", &t, 0).unwrap();
    assert_eq!(random, ["far", "near", "side"]);
    let contrast = ProxySpec::MorphContrast {
        words: vec!["hx".into()],
    };
    assert!(resolve_proxy_words(&contrast, "hx", &t, 0).is_err());
    assert!(resolve_proxy_words(&ProxySpec::W2vDistant { count: 2 }, "missing", &t, 0).is_err());
}

#[test]
fn separate_proxies_are_unioned() {
    let p = small_corpus(3);
    let prim = primaries(&p);
    let proxies = [
        ProxySpec::MorphContrast {
            words: vec!["px".into()],
        },
        ProxySpec::Random { sample_size: 40 },
    ];
    let out = run_pipeline(
        &prim,
        &proxies,
        "hx",
        &p.corpus,
        &p.table,
        9,
        &small_config(),
    )
    .unwrap();
    assert_eq!(out.runs.len(), 2);
    assert_eq!(out.classifiers.len(), 2);
    let keys: BTreeSet<_> = out
        .candidates
        .iter()
        .map(|c| (c.line, c.target_index))
        .collect();
    assert_eq!(keys.len(), out.candidates.len());
    assert!(out.candidates.len() >= out.runs.iter().map(|r| r.candidates).max().unwrap());
    assert!(out.candidates.len() <= out.runs.iter().map(|r| r.candidates).sum());
    assert!(out.candidates.windows(2).all(|w| w[0].score >= w[1].score));
    assert!(out.candidates.iter().all(|c| c.score >= 0.5));
}

#[test]
fn pooled_mode_trains_one_classifier() {
    let p = small_corpus(4);
    let prim = primaries(&p);
    let proxies = [
        ProxySpec::MorphContrast {
            words: vec!["px".into()],
        },
        ProxySpec::Random { sample_size: 40 },
    ];
    let config = MiningConfig {
        pooled: true,
        ..small_config()
    };
    let out = run_pipeline(&prim, &proxies, "hx", &p.corpus, &p.table, 9, &config).unwrap();
    assert_eq!(out.runs.len(), 1);
    assert_eq!(out.runs[0].candidates, out.candidates.len());
    assert!(out
        .candidates
        .iter()
        .all(|c| c.provenance.proxy == out.runs[0].proxy));
    let again = run_pipeline(&prim, &proxies, "hx", &p.corpus, &p.table, 9, &config).unwrap();
    assert_eq!(again, out);
}

#[test]
fn exhausted_proxy_is_an_error() {
    let p = small_corpus(5);
    let prim = primaries(&p);
    let proxies = [ProxySpec::MorphContrast {
        words: vec!["nowhere".into()],
    }];
    assert!(run_pipeline(
        &prim,
        &proxies,
        "hx",
        &p.corpus,
        &p.table,
        0,
        &small_config()
    )
    .is_err());
    assert!(run_pipeline(&[], &proxies, "hx", &p.corpus, &p.table, 0, &small_config()).is_err());
}

fn candidate(line: usize, score: f64, proxy: &str) -> MiningCandidate {
    MiningCandidate {
        sentence_id: format!("line-{line}"),
        line,
        tokens: vec!["a".into(), "hx".into()],
        target_index: 1,
        score,
        provenance: Provenance {
            proxy: proxy.into(),
            model_version: "v".into(),
        },
    }
}

#[test]
fn union_keeps_best_score_and_export_has_fields() {
    let merged = union_candidates(vec![
        vec![candidate(1, 0.6, "a"), candidate(2, 0.9, "a")],
        vec![candidate(1, 0.8, "b")],
    ]);
    assert_eq!(merged.len(), 2);
    assert_eq!(merged[1].provenance.proxy, "b");
    assert_eq!(merged[1].score, 0.8);

    let mut buf = Vec::new();
    write_candidates(&merged, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["sentence"], "a hx");
    assert_eq!(first["target_index"], 1);
    assert_eq!(first["score"], 0.9);
    assert_eq!(first["provenance"]["proxy"], "a");
    assert_eq!(first["provenance"]["model_version"], "v");
    assert_eq!(first["sentence_id"], "line-2");
}
