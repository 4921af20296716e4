mod common;

use std::fs;

use common::{count_files, fixtures, praise, replay_run, replay_run_from, run, scripted, snapshot};
use praise_core::evaluation::{f1, round_half_up};
use serde_json::Value;

#[test]
fn replay_run_writes_reports() {
    let out = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = run(&mut replay_run(out.path(), "full"));
    assert_eq!(code, 0, "{stderr}");
    for id in ["earbuds-01", "serum-01", "kettle-01"] {
        let dir = out.path().join(id);
        for file in ["report.json", "report.md", "manifest.json", "extractions.json"] {
            assert!(dir.join(file).is_file(), "{id}/{file}");
        }
        assert!(stdout.contains(id));
    }
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("earbuds-01/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["call_stats"]["extraction_calls"], 8);
    assert_eq!(manifest["mode"], "full");
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("earbuds-01/report.json")).unwrap()).unwrap();
    let statuses: Vec<&str> =
        report["sections"].as_array().unwrap().iter().map(|s| s["status"].as_str().unwrap()).collect();
    assert_eq!(statuses, ["Missing", "Contradictory", "Partially-matching", "Matching"]);
}

#[test]
fn format_flag_limits_outputs() {
    let out = tempfile::tempdir().unwrap();
    let (code, _, _) = run(replay_run(out.path(), "baseline").args(["--format", "json", "--product", "serum-01"]));
    assert_eq!(code, 0);
    assert!(out.path().join("serum-01/report.json").is_file());
    assert!(!out.path().join("serum-01/report.md").exists());
    assert!(!out.path().join("earbuds-01").exists());
}

#[test]
fn missing_key_names_the_variable() {
    let out = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(praise()
        .arg("run")
        .arg("--dataset")
        .arg(fixtures().join("dataset.json"))
        .args(["--backend", "live"])
        .arg("--out")
        .arg(out.path()));
    assert_eq!(code, 1);
    assert!(stderr.contains("PRAISE_API_KEY"), "{stderr}");
    assert_eq!(count_files(out.path()), 0);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"workers": 0}"#).unwrap();
    let (code, _, stderr) = run(replay_run(dir.path(), "full").arg("--config").arg(&config));
    assert_eq!(code, 1);
    assert!(stderr.contains("workers"), "{stderr}");

    let (code, _, stderr) = run(replay_run(dir.path(), "full").args(["--product", "nope"]));
    assert_eq!(code, 1);
    assert!(stderr.contains("nope"));

    let (code, _, _) = run(replay_run(dir.path(), "full").args(["--mode", "fast"]));
    assert_eq!(code, 1);

    let (code, _, _) =
        run(praise().arg("run").arg("--dataset").arg(dir.path().join("missing.json")).args(["--backend", "replay"]));
    assert_eq!(code, 1);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"workers": 2, "mode": "ablated", "retry": {"max_attempts": 5, "base_delay_ms": 1, "backoff_factor": 2.0, "retryable_errors": ["transport"]}}"#).unwrap();
    let out = dir.path().join("out");
    let (code, _, stderr) = run(replay_run(&out, "full").arg("--config").arg(&config).args(["--workers", "4"]));
    assert_eq!(code, 0, "{stderr}");
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("kettle-01/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["workers"], 4);
    assert_eq!(manifest["config"]["mode"], "full");
    assert_eq!(manifest["config"]["retry"]["max_attempts"], 5);
}

#[test]
fn empty_fixture_dir_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures_dir = dir.path().join("none");
    fs::create_dir(&fixtures_dir).unwrap();
    let out = dir.path().join("out");
    let (code, _, stderr) = run(praise()
        .arg("run")
        .arg("--dataset")
        .arg(fixtures().join("dataset.json"))
        .args(["--backend", "replay", "--product", "serum-01", "--format", "markdown"])
        .arg("--fixtures")
        .arg(&fixtures_dir)
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 2);
    assert!(stderr.contains("unit r1 failed"), "{stderr}");
    assert!(fs::read_to_string(out.join("serum-01/report.md")).unwrap().contains("_No findings._"));
}

#[test]
fn record_counts_and_warm_cache() {
    let dir = tempfile::tempdir().unwrap();
    let fixtures_out = dir.path().join("fx");
    let cache = dir.path().join("cache");
    let record = || {
        let mut cmd = scripted("record-fixtures", &fixtures().join("script.json"));
        cmd.args(["--product", "earbuds-01", "--mode", "full"])
            .arg("--out")
            .arg(&fixtures_out)
            .arg("--cache-dir")
            .arg(&cache);
        cmd
    };
    let (code, stdout, _) = run(&mut record());
    assert_eq!(code, 0);
    assert!(stdout.contains("recorded 17 fixtures"), "{stdout}");
    assert_eq!(count_files(&fixtures_out), 17);

    let (code, stdout, _) = run(&mut record());
    assert_eq!(code, 0);
    assert!(stdout.contains("recorded 0 fixtures"), "{stdout}");
    assert_eq!(count_files(&fixtures_out), 17);
}

#[test]
fn record_then_replay_matches() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    let (code, _, _) = run(scripted("record-fixtures", &fixtures().join("script.json")).arg("--out").arg(&fx));
    assert_eq!(code, 0);
    for mode in ["full", "baseline", "ablated"] {
        let live = dir.path().join(format!("scripted-{mode}"));
        let replayed = dir.path().join(format!("replay-{mode}"));
        let (code, _, _) =
            run(scripted("run", &fixtures().join("script.json")).args(["--mode", mode]).arg("--out").arg(&live));
        assert_eq!(code, 0);
        let (code, _, _) = run(&mut replay_run_from(&fx, &replayed, mode));
        assert_eq!(code, 0);
        assert_eq!(snapshot(&live), snapshot(&replayed), "{mode}");
    }
    // The checked-in corpus is exactly this recording.
    assert_eq!(snapshot(&fx), snapshot(&fixtures().join("replay")));
}

#[test]
fn eval_tables() {
    let (code, stdout, stderr) = run(praise().arg("eval").arg("--pr-table").arg(fixtures().join("category_pr.json")));
    assert_eq!(code, 0, "{stderr}");
    let rows: Vec<Value> =
        serde_json::from_str(&fs::read_to_string(fixtures().join("category_pr.json")).unwrap()).unwrap();
    for row in rows {
        let (p, r) = (row["precision"].as_f64().unwrap(), row["recall"].as_f64().unwrap());
        let line = stdout.lines().find(|l| l.starts_with(row["category"].as_str().unwrap())).unwrap();
        let printed: f64 = line.rsplit('|').next().unwrap().trim().parse().unwrap();
        assert_eq!(printed, round_half_up(f1(p, r).unwrap(), 2), "{line}");
    }

    let dir = tempfile::tempdir().unwrap();
    let mut run_dirs = Vec::new();
    for mode in ["full", "baseline", "ablated"] {
        let out = dir.path().join(mode);
        assert_eq!(run(&mut replay_run(&out, mode)).0, 0);
        run_dirs.push(out);
    }
    let (code, stdout, stderr) = run(praise()
        .arg("eval")
        .args(&run_dirs)
        .arg("--gold")
        .arg(fixtures().join("gold.json"))
        .arg("--annotations")
        .arg(fixtures().join("annotations.jsonl"))
        .arg("--json"));
    assert_eq!(code, 0, "{stderr}");
    let doc: Value = serde_json::from_str(&stdout).unwrap();
    let full = &doc["selection"][run_dirs[0].display().to_string()];
    let electronics = full.as_array().unwrap().iter().find(|r| r["category"] == "Electronics").unwrap();
    assert_eq!(electronics["counts"]["true_positives"], 9);
    assert_eq!(electronics["precision"], 0.9);
    assert_eq!(doc["errors"].as_array().unwrap().iter().map(|e| e["count"].as_u64().unwrap()).sum::<u64>(), 9);
    let kettle = doc["modes"].as_array().unwrap().iter().find(|m| m["product_id"] == "kettle-01").unwrap();
    assert_eq!(kettle["rows"][1]["criterion"], "exclude_opinions");
    assert_eq!((kettle["rows"][1]["full"].as_u64(), kettle["rows"][1]["baseline"].as_u64()), (Some(1), Some(1)));
}

#[test]
fn eval_input_errors() {
    let (code, _, stderr) = run(praise().args(["eval", "--gold", "/definitely/not/here.json"]));
    assert_eq!(code, 1);
    assert!(stderr.contains("here.json"));

    let dir = tempfile::tempdir().unwrap();
    let annotations = dir.path().join("a.jsonl");
    fs::write(
        &annotations,
        "{\"product_id\":\"p\",\"step\":\"grouping\",\"error_category\":\"other\"}\n{\"product_id\":\"p\",\"step\":\"grouping\",\"error_category\":\"typo\"}\n",
    )
    .unwrap();
    let (code, _, stderr) = run(praise().arg("eval").arg("--annotations").arg(&annotations));
    assert_eq!(code, 1);
    assert!(stderr.contains("line 2"), "{stderr}");
}
