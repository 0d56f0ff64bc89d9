use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lbf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbf"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn lbf_json(dir: &Path, args: &[&str]) -> Value {
    let out = lbf(dir, args);
    assert!(
        out.status.success(),
        "lbf {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn pipeline_from_generation_to_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let gen = lbf_json(
        root,
        &[
            "gen-data", "--a", "0.1", "--n1", "600", "--seed", "7", "--out", "d.csv",
        ],
    );
    assert_eq!(gen["rows"], 1200);
    assert_eq!(gen["keys"], 600);
    assert!(root.join("d.csv").exists());

    let complexity = lbf_json(root, &["complexity", "--data", "d.csv"]);
    assert!(complexity["report"]["f1v"].as_f64().unwrap() > 0.0);

    let train = lbf_json(
        root,
        &[
            "train",
            "--data",
            "d.csv",
            "--classifier",
            "svm",
            "--seed",
            "3",
            "--out",
            "model.bin",
        ],
    );
    assert_eq!(train["classifier"], "svm(c=1)");
    assert!(train["auc"].as_f64().unwrap() > 0.9);

    let build = lbf_json(
        root,
        &[
            "build-filter",
            "--data",
            "d.csv",
            "--model",
            "model.bin",
            "--variant",
            "lbf",
            "--target-fpr",
            "0.05",
            "--seed",
            "3",
            "--out",
            "f.bin",
        ],
    );
    assert_eq!(build["variant"], "lbf");
    assert_eq!(build["total_bits"], build["budget_bits"]);

    let eval = lbf_json(
        root,
        &[
            "evaluate", "--data", "d.csv", "--filter", "f.bin", "--seed", "3",
        ],
    );
    assert_eq!(eval["false_negatives"], 0);
    assert!(eval["empirical_fpr"].as_f64().unwrap() < 0.05);
    assert_eq!(eval["reject_time_ns"], Value::Null);
}

#[test]
fn bloom_variant_needs_no_model_and_learned_variants_do() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    lbf_json(
        root,
        &["gen-data", "--n1", "300", "--seed", "1", "--out", "d.csv"],
    );

    let build = lbf_json(
        root,
        &[
            "build-filter",
            "--data",
            "d.csv",
            "--variant",
            "bf",
            "--target-fpr",
            "0.01",
            "--out",
            "f.bin",
        ],
    );
    assert_eq!(build["variant"], "bloom");
    let eval = lbf_json(
        root,
        &[
            "evaluate",
            "--data",
            "d.csv",
            "--filter",
            "f.bin",
            "--timing",
            "--repeats",
            "2",
            "--min-queries",
            "500",
        ],
    );
    assert!(eval["reject_time_ns"].as_f64().unwrap() > 0.0);

    let missing_model = lbf(
        root,
        &[
            "build-filter",
            "--data",
            "d.csv",
            "--variant",
            "slbf",
            "--target-fpr",
            "0.01",
            "--out",
            "g.bin",
        ],
    );
    assert!(!missing_model.status.success());
    assert!(String::from_utf8_lossy(&missing_model.stderr).contains("--model"));
}

#[test]
fn sweep_writes_report_and_sidecar_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(
        root.join("cells.json"),
        r#"[{
            "dataset": {"source": "synthetic", "a": 0.1, "n1": 400, "seed": 9},
            "experiment": {
                "classifier": {"kind": "svm"},
                "variants": ["lbf"],
                "target_fprs": [0.05],
                "seed": 9
            }
        }]"#,
    )
    .unwrap();

    let run = |csv: &str| {
        let summary = lbf_json(root, &["sweep", "--config", "cells.json", "--out", csv]);
        assert_eq!(summary["rows"], 2);
        assert_eq!(summary["infeasible"], 0);
        std::fs::read_to_string(root.join(csv)).unwrap()
    };
    let first = run("a.csv");
    let second = run("b.csv");
    assert_eq!(first, second);
    assert!(first.starts_with("dataset,variant,classifier,target_fpr"));

    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("a.json")).unwrap()).unwrap();
    assert_eq!(sidecar["schema_version"], 1);
    assert_eq!(sidecar["rows"], 2);
    assert_eq!(sidecar["columns"][0], "dataset");
}

#[test]
fn thread_override_is_respected() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(
        root.join("cells.json"),
        r#"[{
            "dataset": {"source": "synthetic", "a": 0.1, "n1": 300, "seed": 2},
            "experiment": {
                "classifier": {"kind": "svm"},
                "variants": ["lbf"],
                "target_fprs": [0.05],
                "seed": 2
            }
        }]"#,
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lbf"))
        .current_dir(root)
        .env("LBF_THREADS", "3")
        .args(["sweep", "--config", "cells.json", "--out", "r.csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["threads"], 3);
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    lbf_json(root, &["gen-data", "--n1", "100", "--out", "d.csv"]);

    let unknown = lbf(
        root,
        &[
            "train",
            "--data",
            "d.csv",
            "--classifier",
            "boost",
            "--out",
            "m.bin",
        ],
    );
    assert!(!unknown.status.success());
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("boost"));

    let missing = lbf(root, &["complexity", "--data", "nope.csv"]);
    assert!(!missing.status.success());
}
