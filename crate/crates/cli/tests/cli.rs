use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pipeline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipeline"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}\nstderr: {}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small, fast experiment: tiny synthetic corpus and single-candidate grids.
const SMALL_CONFIG: &str = r#"
seed = 7
features = ["char", "unigram"]
families = ["knn", "gnb"]

[corpus]
source = "synthetic"
n = 120
balance = 0.25

[grid.knn]
k = [1, 3]

[grid.gnb]
var_smoothing = [1e-9]

[tuning]
folds = 3
"#;

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&pipeline(&["--help"])), 0);
    assert_eq!(code(&pipeline(&["--version"])), 0);
    assert_eq!(code(&pipeline(&[])), 1);
    assert_eq!(code(&pipeline(&["grid", "--no-such-flag"])), 1);
    assert_eq!(code(&pipeline(&["train", "--family", "perceptron", "--feature", "char"])), 1);
    assert_eq!(code(&pipeline(&["stats", "--tz-offset", "later"])), 1);
}

#[test]
fn kappa_prints_table_and_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    // a: 1 1 0 0, b: 1 0 0 0 -> pa = 3/4, pe = (2*3 + 2*1)/16 = 1/2, kappa = 1/2
    std::fs::write(&a, "id,label\n1,1\n2,1\n3,0\n4,0\n").unwrap();
    std::fs::write(&b, "id,label\n1,1\n2,0\n3,0\n4,0\n").unwrap();
    let o = pipeline(&["kappa", "--a", s(&a), "--b", s(&b)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert!((v["kappa"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["pa"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!((v["pe"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["table"]["n10"], 1);
    assert_eq!(v["table"]["n11"], 1);
    assert_eq!(v["table"]["n00"], 2);

    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&pipeline(&["kappa", "--a", s(&a), "--b", s(&missing)])), 2);
}

#[test]
fn synth_split_train_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = pipeline(&["synth", "--n", "200", "--seed", "3", "--out", s(out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["suicidal"], 50);
    let corpus = out.join("synthetic.jsonl");

    let o = pipeline(&["split", "--input", s(&corpus), "--seed", "3", "--out", s(out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["train"], 160);
    assert_eq!(v["test"], 40);
    let split = out.join("split.json");

    let cfg = out.join("knn.toml");
    std::fs::write(&cfg, "[grid.knn]\nk = [1, 3, 5]\n[tuning]\nfolds = 3\n").unwrap();
    let model = out.join("model.json");
    let o = pipeline(&[
        "train", "--config", s(&cfg), "--input", s(&corpus), "--split", s(&split), "--family", "knn", "--feature",
        "char", "--model", s(&model), "--out", s(out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["n_train"], 160);
    assert!(v["cv_score"].as_f64().is_some());
    assert!(out.join("model.grid.json").is_file());

    let o = pipeline(&[
        "evaluate", "--input", s(&corpus), "--split", s(&split), "--model", s(&model), "--name", "knn-char", "--out",
        s(out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["n"], 40);
    assert!(v["metrics"]["accuracy"].as_f64().unwrap() > 0.8);

    // the written prediction file scores identically through score-external
    let o = pipeline(&[
        "score-external", "--predictions", s(&out.join("predictions.csv")), "--gold", s(&corpus), "--out", s(out),
    ]);
    assert_eq!(code(&o), 2, "gold has 200 ids, predictions 40: an id mismatch");
    let gold = out.join("gold.csv");
    let test_ids: Vec<String> = serde_json::from_str::<Value>(&std::fs::read_to_string(&split).unwrap()).unwrap()["test"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let labels: std::collections::HashMap<String, u64> = std::fs::read_to_string(&corpus)
        .unwrap()
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            (v["id"].as_str().unwrap().to_string(), v["label"].as_u64().unwrap())
        })
        .collect();
    let mut g = String::from("id,label\n");
    for id in &test_ids {
        g.push_str(&format!("{id},{}\n", labels[id]));
    }
    std::fs::write(&gold, g).unwrap();
    let o = pipeline(&["score-external", "--predictions", s(&out.join("predictions.csv")), "--gold", s(&gold), "--out", s(out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ext = stdout_json(&o);
    assert_eq!(ext["metrics"], v["metrics"]);
    assert_eq!(ext["roc"]["auc"], v["roc"]["auc"]);
    assert!(out.join("external_knn-char.json").is_file());
}

#[test]
fn stats_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.jsonl");
    std::fs::write(
        &input,
        concat!(
            r#"{"id":"1","text":"ابي اموت","created_at":"2021-08-01T21:30:00Z","label":1}"#, "\n",
            r#"{"id":"2","text":"اموت من الضحك اليوم","created_at":"2021-08-01T10:00:00Z","label":0}"#, "\n",
            r#"{"id":"3","text":"تعبت ابي اموت","label":1}"#, "\n",
        ),
    )
    .unwrap();
    let out = dir.path().join("stats");
    let o = pipeline(&[
        "stats", "--input", s(&input), "--class", "suicidal", "--tz-offset", "+01:00", "--top-k", "2", "--bin-width",
        "1", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["class_weights"]["suicidal"], 2);
    // equal counts are ordered alphabetically
    assert_eq!(v["terms"][0]["term"], "ابي");
    assert_eq!(v["terms"][1]["term"], "اموت");
    assert_eq!(v["terms"][1]["count"], 2);
    assert_eq!(v["hourly"]["hours"][22], 1);
    assert_eq!(v["hourly"]["unknown"], 1);
    for f in ["class_weights.csv", "lengths_suicidal.csv", "terms_suicidal.csv", "hourly_suicidal.csv", "stats_suicidal.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn ingest_filters_and_dedups() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("dump.jsonl");
    std::fs::write(
        &input,
        concat!(
            r#"{"id":"1","text":"ابي اموت","created_at":"2021-08-02T00:00:00Z"}"#, "\n",
            r#"{"id":"2","text":"أبي   اموت","created_at":"2021-08-01T00:00:00Z"}"#, "\n",
            r#"{"id":"3","text":"صباح الخير","created_at":"2021-08-01T00:00:00Z"}"#, "\n",
            "not json\n",
        ),
    )
    .unwrap();
    let kw = dir.path().join("kw.tsv");
    std::fs::write(&kw, "# phrases\nابي اموت\tI want to die\n").unwrap();
    let out = dir.path().join("out");
    let o = pipeline(&["ingest", "--input", s(&input), "--keywords", s(&kw), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!((v["loaded"].as_u64(), v["skipped"].as_u64()), (Some(3), Some(1)));
    assert_eq!((v["matched"].as_u64(), v["deduplicated"].as_u64()), (Some(2), Some(1)));
    let kept = std::fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    let rec: Value = serde_json::from_str(kept.lines().next().unwrap()).unwrap();
    assert_eq!(rec["id"], "2", "the earlier tweet survives");
}

#[test]
fn grid_writes_report_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, SMALL_CONFIG).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = pipeline(&["grid", "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let md = String::from_utf8(o.stdout).unwrap();
        assert!(md.starts_with("| Classifier | Feature | Precision | Recall | F1-score | Accuracy |"));
        assert_eq!(md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Classifier")).count(), 4);
        std::fs::read(out.join("report.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
    assert!(dir.path().join("a/report.csv").is_file());
    assert!(dir.path().join("a/cells/knn__tfidf_char/confusion.json").is_file());
}

#[test]
fn bad_configuration_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "sed = 1\n").unwrap();
    assert_eq!(code(&pipeline(&["grid", "--config", s(&cfg)])), 1);
    std::fs::write(&cfg, "[corpus]\nsource = \"file\"\npath = \"nowhere.jsonl\"\n").unwrap();
    assert_eq!(code(&pipeline(&["grid", "--config", s(&cfg)])), 1);
}

#[test]
fn unusable_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("unlabeled.jsonl");
    std::fs::write(&input, "{\"id\":\"1\",\"text\":\"ابي اموت\"}\n{\"id\":\"2\",\"text\":\"مرحبا\"}\n").unwrap();
    let o = pipeline(&["split", "--input", s(&input), "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unlabeled"));
    let o = pipeline(&["serve-annotation", "--input", s(&dir.path().join("none.jsonl"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn all_cells_failing_is_a_run_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "features = [\"unigram\"]\nfamilies = [\"knn\"]\n[corpus]\nsource = \"synthetic\"\nn = 60\n[grid.knn]\nk = [1000]\n",
    )
    .unwrap();
    let o = pipeline(&["grid", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("report.json").is_file());
}
