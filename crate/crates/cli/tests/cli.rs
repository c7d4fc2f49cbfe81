//! End-to-end runs of the `spatialsynth` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spatialsynth(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spatialsynth"))
        .current_dir(dir)
        .args(args)
        .env_remove("SPATIALSYNTH_API_KEY")
        .env_remove("OPENAI_API_KEY")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = spatialsynth(dir, args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn count_files(dir: &Path) -> usize {
    fs::read_dir(dir).map_or(0, |d| d.count())
}

#[test]
fn gen_scenes_writes_one_file_per_scene() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["gen-scenes", "--seed", "3", "--count", "5", "--out", "scenes"]);
    assert_eq!(count_files(&tmp.path().join("scenes")), 5);
    assert!(tmp.path().join("scenes/scene_0004.json").exists());

    ok(tmp.path(), &["gen-scenes", "--count", "0", "--out", "empty"]);
    assert_eq!(count_files(&tmp.path().join("empty")), 0);
}

#[test]
fn gen_scenes_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    ok(tmp.path(), &["gen-scenes", "--seed", "9", "--count", "2", "--out", "a"]);
    ok(tmp.path(), &["gen-scenes", "--seed", "9", "--count", "2", "--out", "b"]);
    for f in ["scene_0000.json", "scene_0001.json"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["gen-scenes", "--objects", "11", "--out", "s"][..],
        &["gen-scenes", "--objects", "1-4", "--out", "s"],
        &["gen-scenes", "--objects", "many", "--out", "s"],
        &["gen-scenes"],
        &["no-such-command"],
    ] {
        assert_eq!(code(&spatialsynth(tmp.path(), args)), 2, "{args:?}");
    }
    assert!(!tmp.path().join("s").exists());
}

#[test]
fn missing_artifacts_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bench.jsonl"), "").unwrap();
    let run = spatialsynth(
        tmp.path(),
        &[
            "run", "--benchmark", "bench.jsonl", "--scenes", ".", "--registry", "absent.json",
            "--backend", "scripted", "--transcript", "rules.json", "--out", "r.jsonl",
        ],
    );
    assert_eq!(code(&run), 4);
    let score = spatialsynth(tmp.path(), &["score", "--results", "absent.jsonl", "--benchmark", "bench.jsonl"]);
    assert_eq!(code(&score), 4);
    let build = spatialsynth(
        tmp.path(),
        &["build-api", "--benchmark", "absent.jsonl", "--registry", "reg.json", "--backend", "replay", "--transcript", "t.jsonl"],
    );
    assert_eq!(code(&build), 4);
}

#[test]
fn empty_benchmark_builds_an_empty_api() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bench.jsonl"), "").unwrap();
    fs::write(tmp.path().join("rules.json"), "[]").unwrap();
    ok(
        tmp.path(),
        &["build-api", "--benchmark", "bench.jsonl", "--registry", "reg.json", "--backend", "scripted", "--transcript", "rules.json"],
    );
    let snap: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("reg.json")).unwrap()).unwrap();
    assert_eq!(snap["generated"], serde_json::json!([]));
}

#[test]
fn backend_failures_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["gen-scenes", "--count", "1", "--out", "scenes"]);
    ok(dir, &["gen-bench", "--scenes", "scenes", "--out", "bench.jsonl", "--per-scene", "2"]);

    fs::write(dir.join("bad.json"), "{ not json").unwrap();
    let corrupt = spatialsynth(
        dir,
        &["build-api", "--benchmark", "bench.jsonl", "--registry", "reg.json", "--backend", "scripted", "--transcript", "bad.json"],
    );
    assert_eq!(code(&corrupt), 3);

    // A transcript recorded for other prompts fails the digest check.
    fs::write(dir.join("t.jsonl"), "{\"digest\":\"00\",\"response\":\"x\"}\n").unwrap();
    let stale = spatialsynth(
        dir,
        &["build-api", "--benchmark", "bench.jsonl", "--registry", "reg.json", "--backend", "replay", "--transcript", "t.jsonl"],
    );
    assert_eq!(code(&stale), 3);
}

/// Runs the whole scripted pipeline in `dir` and returns the score table.
fn pipeline(dir: &Path) -> String {
    ok(dir, &["gen-scenes", "--seed", "4", "--count", "3", "--objects", "3-6", "--out", "scenes"]);
    ok(
        dir,
        &[
            "gen-bench", "--scenes", "scenes", "--out", "bench.jsonl", "--profile", "omni3d", "--seed", "1",
            "--per-scene", "4", "--programs", "rules.json",
        ],
    );
    let scripted = ["--backend", "scripted", "--transcript", "rules.json", "--profile", "omni3d"];
    let mut build = vec!["build-api", "--benchmark", "bench.jsonl", "--registry", "reg.json", "--out", "build.json"];
    build.extend(scripted);
    build.extend(["--record", "transcript.jsonl"]);
    ok(dir, &build);
    let mut run = vec!["run", "--benchmark", "bench.jsonl", "--scenes", "scenes", "--registry", "reg.json", "--out", "results.jsonl"];
    run.extend(scripted);
    ok(dir, &run);
    ok(dir, &["score", "--results", "results.jsonl", "--benchmark", "bench.jsonl", "--out", "report.json"])
}

#[test]
fn scripted_pipeline_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let table = pipeline(a.path());
    assert_eq!(pipeline(b.path()), table);
    for f in ["bench.jsonl", "rules.json", "reg.json", "build.json", "transcript.jsonl", "results.jsonl", "report.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert!(table.starts_with("answer type"));
    let total = table.lines().last().unwrap();
    assert!(total.starts_with("total") && total.ends_with("100.0"), "{table}");
}

#[test]
fn replayed_build_matches_the_recording() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline(dir);
    ok(
        dir,
        &[
            "build-api", "--benchmark", "bench.jsonl", "--registry", "replayed.json", "--backend", "replay",
            "--transcript", "transcript.jsonl", "--profile", "omni3d", "--out", "build2.json",
        ],
    );
    assert_eq!(fs::read(dir.join("reg.json")).unwrap(), fs::read(dir.join("replayed.json")).unwrap());
    assert_eq!(fs::read(dir.join("build.json")).unwrap(), fs::read(dir.join("build2.json")).unwrap());
}

#[test]
fn score_rejects_mismatched_ids() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline(dir);
    let results = fs::read_to_string(dir.join("results.jsonl")).unwrap();
    let first = results.lines().next().unwrap();
    fs::write(dir.join("short.jsonl"), format!("{first}\n")).unwrap();
    let out = spatialsynth(dir, &["score", "--results", "short.jsonl", "--benchmark", "bench.jsonl"]);
    assert_eq!(code(&out), 2);
}
