use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use homobench::embedio::write_embedding_set;
use homobench::synthetic::{gaussian_challenge, GaussianSpec};

fn homobench(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_homobench"));
    cmd.args(args)
        .env_remove("HOMOBENCH_OUT_DIR")
        .env("RUST_LOG", "warn");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_set(dir: &Path, stem: &str, seed: u64) {
    let data = gaussian_challenge(
        &GaussianSpec {
            form: stem.into(),
            dim: 8,
            per_class: 12,
            classes: 2,
            ..GaussianSpec::default()
        },
        seed,
    );
    data.set.save(&dir.join(format!("{stem}.jsonl"))).unwrap();
    fs::create_dir_all(dir.join("emb")).unwrap();
    write_embedding_set(
        &data.embeddings,
        &dir.join("emb").join(format!("{stem}.hxe")),
    )
    .unwrap();
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&homobench(&["--help"], &[])), 0);
    assert_eq!(code(&homobench(&["eval-cv", "--help"], &[])), 0);
    assert_eq!(code(&homobench(&["eval-cv", "--no-such-flag"], &[])), 2);
    assert_eq!(code(&homobench(&["frobnicate"], &[])), 2);
    assert_eq!(code(&homobench(&[], &[])), 2);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = homobench(
        &[
            "--out-dir",
            s(&out),
            "validate",
            "--set",
            "/nonexistent/x.jsonl",
        ],
        &[],
    );
    assert_eq!(code(&missing), 1);
    assert!(!missing.stderr.is_empty());
}

#[test]
fn invalid_set_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(
        &bad,
        "{\"form\":\"x\",\"analyses\":[{\"label_id\":0,\"surface_key\":\"a\",\"segment_count\":1}]}\n\
         {\"sentence_id\":\"1\",\"tokens\":[\"x\"],\"target_index\":5,\"label\":0}\n",
    )
    .unwrap();
    write_set(dir.path(), "good", 1);
    let good = dir.path().join("good.jsonl");
    let out = dir.path().join("out");
    let r = homobench(
        &[
            "validate",
            "--out-dir",
            s(&out),
            "--set",
            s(&good),
            "--set",
            s(&bad),
        ],
        &[],
    );
    assert_eq!(code(&r), 1);
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("good"), "{stdout}");

    let r = homobench(&["validate", "--out-dir", s(&out), "--set", s(&good)], &[]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.to_string().contains("good.jsonl"));
}

#[test]
fn out_dir_from_environment_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("env-out");
    let flag_out = dir.path().join("flag-out");
    let r = homobench(
        &["gradcheck", "--instances", "2"],
        &[("HOMOBENCH_OUT_DIR", s(&env_out))],
    );
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(env_out.join("gradcheck.json").is_file());
    let r = homobench(
        &["--out-dir", s(&flag_out), "gradcheck", "--instances", "2"],
        &[("HOMOBENCH_OUT_DIR", s(&env_out))],
    );
    assert_eq!(code(&r), 0);
    assert!(flag_out.join("gradcheck.json").is_file());
}

#[test]
fn saved_config_reproduces_a_run() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), "hx", 2);
    let set = dir.path().join("hx.jsonl");
    let emb = dir.path().join("emb").join("hx.hxe");
    let first = dir.path().join("first");
    let r = homobench(
        &[
            "eval-fewshot",
            "--out-dir",
            s(&first),
            "--set",
            s(&set),
            "--emb",
            s(&emb),
            "--n",
            "3",
            "--rounds",
            "4",
            "--hidden-size",
            "8",
            "--seed",
            "11",
        ],
        &[],
    );
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let config = fs::read_to_string(first.join("config.toml")).unwrap();
    assert!(config.contains("seed = 11"), "{config}");

    let second = dir.path().join("second");
    let cfg_path = dir.path().join("saved.toml");
    fs::write(&cfg_path, &config).unwrap();
    let r = homobench(
        &[
            "--config",
            s(&cfg_path),
            "--out-dir",
            s(&second),
            "eval-fewshot",
        ],
        &[],
    );
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let mut a = files(&first);
    let mut b = files(&second);
    a.remove("config.toml");
    b.remove("config.toml");
    assert!(!a.is_empty());
    assert_eq!(a, b);

    fs::write(&cfg_path, format!("{config}\nunknown_key = 1\n")).unwrap();
    let r = homobench(&["--config", s(&cfg_path), "eval-fewshot"], &[]);
    assert_eq!(code(&r), 1);
}

#[test]
fn manifest_sweep_with_embedding_directory() {
    let dir = tempfile::tempdir().unwrap();
    write_set(dir.path(), "aa", 3);
    write_set(dir.path(), "bb", 4);
    let val = dir.path().join("val");
    let r = homobench(
        &[
            "validate",
            "--out-dir",
            s(&val),
            "--set",
            s(&dir.path().join("aa.jsonl")),
            "--set",
            s(&dir.path().join("bb.jsonl")),
        ],
        &[],
    );
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));

    let out = dir.path().join("cv");
    let r = homobench(
        &[
            "probe-centroid",
            "--out-dir",
            s(&out),
            "--manifest",
            s(&val.join("manifest.json")),
            "--emb-dir",
            s(&dir.path().join("emb")),
            "--n",
            "3",
            "--rounds",
            "5",
        ],
        &[],
    );
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let produced = files(&out);
    assert!(
        produced.contains_key("aa.centroid-n3.report.json"),
        "{:?}",
        produced.keys()
    );
    assert!(produced.contains_key("bb.centroid-n3.report.json"));
    let summary = String::from_utf8(produced["summary.csv"].clone()).unwrap();
    assert_eq!(summary.lines().count(), 4, "{summary}");

    let plots = dir.path().join("plots");
    let r = homobench(&["plot", "--out-dir", s(&plots), "--reports", s(&out)], &[]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(fs::read_dir(&plots).unwrap().any(|e| e
        .unwrap()
        .path()
        .extension()
        .is_some_and(|x| x == "svg")));
}
