use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SYNTH: &str = "n=400,p_priv=0.5,pf1=0.8,pf0=0.2";

fn fitness(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fitness"))
        .args(args)
        .env_remove("FITNESS_OUT_DIR")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn schema_validator() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(doc: &Value) {
    let v = schema_validator();
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn small_run(out: &Path, repeats: &str) -> Output {
    fitness(&[
        "run",
        "--data",
        "synthetic",
        "--synth",
        SYNTH,
        "--model",
        "lr",
        "--repeats",
        repeats,
        "--population",
        "4",
        "--iterations",
        "3",
        "--weights",
        "1:1",
        "--seed",
        "7",
        "--fairea",
        "--fairea-repeats",
        "2",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn run_without_data_is_usage_error() {
    let out = fitness(&["run"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--data"));
}

#[test]
fn unknown_command_is_usage_error() {
    assert_eq!(code(&fitness(&["frobnicate"])), 1);
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&fitness(&["--help"])), 0);
}

#[test]
fn missing_schema_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    std::fs::write(&csv, "a,b\n1,2\n").unwrap();
    let out = fitness(&[
        "identify",
        "--data",
        csv.to_str().unwrap(),
        "--schema",
        "no-such-schema",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_rows_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    assert_eq!(
        code(&fitness(&["synth", "--synth", SYNTH, "--out", csv.to_str().unwrap()])),
        0
    );
    let schema = csv.with_extension("schema");
    std::fs::write(&csv, "group,x0,x1,x2,label\nprivileged,0.1,0.2\n").unwrap();
    let out = fitness(&[
        "identify",
        "--data",
        csv.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_protected_feature_is_data_error() {
    let out = fitness(&[
        "identify",
        "--data",
        "synthetic",
        "--synth",
        SYNTH,
        "--protected",
        "height",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unwritable_output_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("r.json");
    let res = fitness(&[
        "identify",
        "--data",
        "synthetic",
        "--synth",
        SYNTH,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 3);
    assert!(!out.exists());
}

#[test]
fn identify_reports_every_protected_feature() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("i.json");
    let res = fitness(&[
        "identify",
        "--data",
        "synthetic",
        "--synth",
        SYNTH,
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0);
    assert!(String::from_utf8_lossy(&res.stdout).contains("group"));
    let doc = read_json(&out);
    assert_valid(&doc);
    assert_eq!(doc["kind"], "identify");
    let acd = doc["report"]["features"][0]["acd"].as_f64().unwrap();
    assert!(acd > 0.4, "{acd}");
}

#[test]
fn synth_writes_loadable_csv_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    assert_eq!(
        code(&fitness(&[
            "synth",
            "--synth",
            SYNTH,
            "--seed",
            "4",
            "--out",
            csv.to_str().unwrap()
        ])),
        0
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 401);
    let schema = csv.with_extension("schema");
    let res = fitness(&[
        "identify",
        "--data",
        csv.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn run_report_is_valid_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let res = small_run(&out, "4");
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let doc = read_json(&out);
    assert_valid(&doc);
    assert_eq!(doc["kind"], "run");
    let repeats = doc["repeats"].as_array().unwrap();
    assert_eq!(repeats.len(), 4);

    for agg in doc["aggregates"].as_array().unwrap() {
        let method = agg["method"].as_str().unwrap();
        let values: Vec<f64> = repeats
            .iter()
            .flat_map(|r| r["results"].as_array().unwrap())
            .filter(|m| m["method"] == method)
            .map(|m| m["metrics"]["accuracy"].as_f64().unwrap())
            .collect();
        assert_eq!(values.len(), 4);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert!(
            (agg["accuracy"]["mean"].as_f64().unwrap() - mean).abs() < 1e-12,
            "{method}"
        );
    }

    let table = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    let mut lines = table.lines();
    assert!(lines.next().unwrap().starts_with("repeat,seed,method,feature,accuracy"));
    assert_eq!(lines.count(), 4 * 2);
}

#[test]
fn zero_repeats_still_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(code(&small_run(&out, "0")), 0);
    let doc = read_json(&out);
    assert_valid(&doc);
    assert_eq!(doc["repeats"].as_array().unwrap().len(), 0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(code(&small_run(&a, "2")), 0);
    assert_eq!(code(&small_run(&b, "2")), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(a.with_extension("csv")).unwrap(),
        std::fs::read(b.with_extension("csv")).unwrap()
    );
}

#[test]
fn fairea_and_compare_documents_validate() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    let res = fitness(&[
        "fairea",
        "--data",
        "synthetic",
        "--synth",
        SYNTH,
        "--population",
        "3",
        "--iterations",
        "2",
        "--fairea-repeats",
        "2",
        "--out",
        f.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let doc = read_json(&f);
    assert_valid(&doc);
    assert_eq!(doc["baselines"].as_array().unwrap().len(), 12);

    let c = dir.path().join("c.json");
    let res = fitness(&[
        "compare",
        "--data",
        "synthetic",
        "--synth",
        SYNTH,
        "--repeats",
        "2",
        "--population",
        "3",
        "--iterations",
        "2",
        "--fairea-repeats",
        "2",
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let doc = read_json(&c);
    assert_valid(&doc);
    assert_eq!(doc["kind"], "compare");
    assert_eq!(doc["aggregates"].as_array().unwrap().len(), 4);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_fitness"))
        .args(["identify", "--data", "synthetic", "--synth", SYNTH])
        .env("FITNESS_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&res), 0);
    let written: PathBuf = dir.path().join("identify.json");
    assert_valid(&read_json(&written));
}
