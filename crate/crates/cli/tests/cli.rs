use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use riskpref::cli::run;
use riskpref_core::synthdata::{from_csv_str, register_schema, ColumnValues, TargetKind};
use serde_json::Value;
use tempfile::TempDir;

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn riskpref<S: AsRef<str>>(args: &[S]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("riskpref").chain(args.iter().map(AsRef::as_ref));
    let code = run(argv, &mut out, &mut err);
    Outcome { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn ok<S: AsRef<str>>(args: &[S]) -> String {
    let o = riskpref(args);
    assert_eq!(o.code, 0, "stderr: {}", o.err);
    o.out
}

fn p(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

fn dataset(dir: &TempDir, rows: usize) -> PathBuf {
    let path = dir.path().join("data.csv");
    ok(&["generate", "--seed", "3", "--rows", &rows.to_string(), "--out", &p(&path)]);
    path
}

#[test]
fn generate_zero_rows_is_header_only() {
    let out = ok(&["generate", "--rows", "0"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header.len(), register_schema().len() + 2);
    assert!(header.contains(&"mpl_avg_safe") && header.contains(&"risk_grq"));
}

#[test]
fn generate_is_seeded() {
    let a = ok(&["generate", "--rows", "40", "--seed", "5"]);
    let b = ok(&["--seed", "5", "generate", "--rows", "40"]);
    let c = ok(&["generate", "--rows", "40", "--seed", "6"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let table = from_csv_str(&a, Some(&register_schema())).unwrap();
    assert_eq!(table.n_rows(), 40);
    assert!(table.target(TargetKind::MplAvgSafe).unwrap().iter().all(|v| (0.0..=10.0).contains(v)));
}

#[test]
fn generate_side_files() {
    let dir = tempfile::tempdir().unwrap();
    let schema = dir.path().join("schema.json");
    let truth = dir.path().join("truth.json");
    let out = ok(&[
        "generate", "--rows", "5", "--ids", "--complete", "--target", "risk-grq",
        "--schema-out", &p(&schema), "--truth-out", &p(&truth),
    ]);
    let table = from_csv_str(&out, Some(&register_schema())).unwrap();
    assert_eq!(table.ids().unwrap()[0], "syn-1");
    assert!(table.target(TargetKind::MplAvgSafe).is_none());
    assert!(table.target(TargetKind::RiskGrq).is_some());
    let _: Value = serde_json::from_str(&fs::read_to_string(schema).unwrap()).unwrap();
    let _: Value = serde_json::from_str(&fs::read_to_string(truth).unwrap()).unwrap();
}

#[test]
fn score_mpl_text_sheets() {
    let dir = tempfile::tempdir().unwrap();
    let risky = dir.path().join("risky.txt");
    fs::write(&risky, "# all B\n1:BBBBBBBBBB\n2:BBBBBBBBBB\n3:BBBBBBBBBB\n4:BBBBBBBBBB\n5:BBBBBBBBBB\n").unwrap();
    assert_eq!(ok(&["score-mpl", &p(&risky)]), "0.0\n");

    let safe = dir.path().join("safe.txt");
    fs::write(&safe, (1..=5).map(|t| format!("{t}:AAAAAAAAAA\n")).collect::<String>()).unwrap();
    assert_eq!(ok(&["score-mpl", &p(&safe)]), "10.0\n");

    let partial = dir.path().join("partial.txt");
    fs::write(&partial, "1:AAAABBBBBB\n3:AAAAAABBBB\n").unwrap();
    let report: Value = serde_json::from_str(&ok(&["score-mpl", "--json", &p(&partial)])).unwrap();
    assert_eq!(report["mpl_avg_safe"], 5.0);
    assert_eq!(report["complete"], false);
}

#[test]
fn score_mpl_json_with_likert() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("session.json");
    let sheets: Vec<Value> =
        (1..=5).map(|t| serde_json::json!({ "task_id": t, "choices": ["A","A","A","A","B","B","B","B","B","B"] })).collect();
    let doc = serde_json::json!({
        "sheets": sheets,
        "likert": { "general": 6, "occupation": 3, "health": "NA", "personal_finances": 4, "job_finances": 2 },
    });
    fs::write(&file, doc.to_string()).unwrap();
    assert_eq!(ok(&["score-mpl", &p(&file)]), "4.0\nrisk_grq 6\n");
}

#[test]
fn score_mpl_rejects_bad_sheets() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    fs::write(&file, "1:AAAXBBBBBB\n").unwrap();
    let o = riskpref(&["score-mpl", &p(&file)]);
    assert_eq!(o.code, 2);
    assert!(o.err.contains("line 1"), "{}", o.err);
    fs::write(&file, "1:AAAABBBBBB\n1:AAAABBBBBB\n").unwrap();
    assert_eq!(riskpref(&["score-mpl", &p(&file)]).code, 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(riskpref(&["generate", "--bogus"]).code, 2);
    assert_eq!(riskpref::<&str>(&[]).code, 2);
    assert_eq!(riskpref(&["generate", "--rows", "many"]).code, 2);
    let o = riskpref(&["train", "--data", "x.csv", "--family", "gbm"]);
    assert_eq!(o.code, 2);
    assert!(o.err.contains("unknown model family"), "{}", o.err);
    assert_eq!(riskpref(&["train", "--data", "x.csv", "--family", "lasso", "--param", "alpha"]).code, 2);
    let help = riskpref(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.out.contains("leaderboard"));
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(riskpref(&["train", "--data", &p(&missing), "--family", "lasso"]).code, 2);
    let data = dataset(&dir, 60);
    let o = riskpref(&["train", "--data", &p(&data), "--family", "lasso", "--param", "alpha=-1"]);
    assert_eq!(o.code, 2, "{}", o.err);
    let o = riskpref(&["train", "--data", &p(&data), "--family", "lasso", "--param", "depth=3"]);
    assert_eq!(o.code, 2, "{}", o.err);
}

#[test]
fn unwritable_output_is_internal() {
    let o = riskpref(&["generate", "--rows", "3", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.code, 1, "{}", o.err);
}

#[test]
fn train_reports_test_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir, 200);
    let model = dir.path().join("model.json");
    let out = ok(&["train", "--data", &p(&data), "--family", "ridge", "--param", "alpha=1", "--out", &p(&model)]);
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["n_train"].as_u64().unwrap() + report["n_test"].as_u64().unwrap(), 200);
    assert!(report["test"]["mape"].as_f64().unwrap().is_finite());
    let saved: Value = serde_json::from_str(&fs::read_to_string(model).unwrap()).unwrap();
    assert_eq!(saved["spec"]["family"], "ridge");
}

#[test]
fn impute_fills_numerical_cells() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir, 150);
    let filled = dir.path().join("filled.csv");
    let report = dir.path().join("report.json");
    ok(&["impute", "--data", &p(&data), "--out", &p(&filled), "--report", &p(&report)]);
    let schema = register_schema();
    let before = from_csv_str(&fs::read_to_string(&data).unwrap(), Some(&schema)).unwrap();
    let after = from_csv_str(&fs::read_to_string(&filled).unwrap(), Some(&schema)).unwrap();
    let mut holes = 0;
    for (b, a) in before.columns().iter().zip(after.columns()) {
        if let (ColumnValues::Numerical(bv), ColumnValues::Numerical(av)) = (&b.values, &a.values) {
            for ((x, y), hole) in bv.iter().zip(av).zip(&b.missing) {
                assert!(y.is_finite());
                if *hole {
                    holes += 1;
                } else {
                    assert_eq!(x, y);
                }
            }
        }
    }
    assert!(holes > 0);
    assert!(fs::metadata(report).unwrap().len() > 0);
}

#[test]
fn leaderboard_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir, 160);
    let config = dir.path().join("grids.json");
    fs::write(
        &config,
        r#"{"lasso": [{"alpha": 0.01}, {"alpha": 0.1}], "decision_tree": [{"max_depth": 2}, {"max_depth": 3}]}"#,
    )
    .unwrap();
    let go = |name: &str| {
        let out_dir = dir.path().join(name);
        let text = ok(&[
            "leaderboard", "--data", &p(&data), "--families", "dummy,lasso,decision_tree",
            "--config", &p(&config), "--folds", "3", "--seed", "11", "--out-dir", &p(&out_dir),
        ]);
        (text, out_dir)
    };
    let (text_a, a) = go("a");
    let (text_b, b) = go("b");
    assert_eq!(text_a, text_b);
    assert!(text_a.contains("Lasso Regression"));
    for f in ["leaderboard.csv", "leaderboard.txt", "leaderboard.json", "folds.csv", "folds.json", "lasso_coefficients.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let rows: Value = serde_json::from_str(&fs::read_to_string(a.join("leaderboard.json")).unwrap()).unwrap();
    let rows = rows["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["fold_scores"].as_array().unwrap().len() == 3));
}

#[test]
fn rfecv_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir, 120);
    let out_dir = dir.path().join("rfecv");
    let text = ok(&[
        "rfecv", "--data", &p(&data), "--param", "alpha=0.05", "--folds", "3", "--out-dir", &p(&out_dir),
    ]);
    assert!(text.starts_with("selected "), "{text}");
    let curve = fs::read_to_string(out_dir.join("rfecv_curve.csv")).unwrap();
    let mut lines = curve.lines();
    assert_eq!(lines.next().unwrap(), "n_features,mean,fold_1,fold_2,fold_3");
    assert!(lines.all(|l| l.split(',').count() == 5));
    let _: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("rfecv.json")).unwrap()).unwrap();
}

#[test]
fn binary_maps_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_riskpref");
    let status = Command::new(bin).args(["generate", "--rows", "0"]).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(!status.stdout.is_empty());
    let status = Command::new(bin).args(["frobnicate"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}
