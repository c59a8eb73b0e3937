use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coreset_core::cnn::load_checkpoint;
use coreset_core::selection::select_core_set;
use coreset_core::signal::{load_dataset, DataFormat, LoadOptions};
use coreset_cli::RunConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coreset"))
}

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.json")
}

fn run(out: &Path, name: &str, args: &[&str]) -> Output {
    let o = bin()
        .arg("--config")
        .arg(smoke_config())
        .arg("--out")
        .arg(out)
        .args(["--run-name", name])
        .args(args)
        .output()
        .unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn p(path: PathBuf) -> String {
    path.to_string_lossy().into_owned()
}

#[test]
fn generate_train_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    run(out, "gen", &["generate"]);
    let gen = out.join("gen");
    for f in ["train.jsonl", "test.jsonl", "batch_1.jsonl", "batch_2.jsonl", "peaks.jsonl", "config.json"] {
        assert!(gen.join(f).is_file(), "{f}");
    }
    run(out, "tr", &["train", "--train", &p(gen.join("train.jsonl"))]);
    assert!(out.join("tr/checkpoint.json").is_file());
    run(
        out,
        "ev",
        &["evaluate", "--checkpoint", &p(out.join("tr/checkpoint.json")), "--test", &p(gen.join("test.jsonl"))],
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ev/report.json")).unwrap()).unwrap();
    for key in ["accuracy", "macro_precision", "macro_recall"] {
        assert!(report[key].is_f64(), "{key}");
    }
}

#[test]
fn select_matches_library_on_460_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let full = ["--seed", "3"];
    // 115 per class over 4 classes.
    let cfg_path = out.join("cfg.json");
    let mut cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(smoke_config()).unwrap()).unwrap();
    cfg["data"]["batch_per_class"] = 115.into();
    fs::write(&cfg_path, cfg.to_string()).unwrap();
    let go = |name: &str, args: &[&str]| {
        let o = bin()
            .args(["--config", &p(cfg_path.clone()), "--out", &p(out.to_path_buf()), "--run-name", name])
            .args(full)
            .args(args)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    go("gen", &["generate"]);
    go("tr", &["train", "--train", &p(out.join("gen/train.jsonl"))]);
    let ck = out.join("tr/checkpoint.json");
    let batch_path = out.join("gen/batch_1.jsonl");
    go("sel", &["--budget", "0.5", "select", "--checkpoint", &p(ck.clone()), "--batch", &p(batch_path.clone())]);

    let resolved: RunConfig = serde_json::from_str(&fs::read_to_string(out.join("sel/config.json")).unwrap()).unwrap();
    assert_eq!(resolved.pipeline.selection.budget_pct, 0.5);
    let model = load_checkpoint(&ck).unwrap();
    let opts = LoadOptions {
        class_count: Some(4),
        ..LoadOptions::default()
    };
    let batch = load_dataset(&batch_path, DataFormat::Jsonl, &opts).unwrap();
    assert_eq!(batch.len(), 460);
    let expected = select_core_set(&model, &batch, &resolved.pipeline.selection).unwrap();

    let lines: Vec<serde_json::Value> = fs::read_to_string(out.join("sel/coreset.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), expected.coreset.len());
    for l in &lines {
        let id = l["id"].as_str().unwrap();
        assert!(expected.coreset.contains(id));
        assert_eq!(l["rationale"].as_str().unwrap(), expected.coreset.rationale[id].to_string());
    }
    let all = fs::read_to_string(out.join("sel/selection.jsonl")).unwrap();
    assert_eq!(all.lines().count(), 460);
    let metrics = fs::read_to_string(out.join("sel/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 461);
}

#[test]
fn invalid_key_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"seed": 1, "pipeline": {"selection": {"budget": 0.5}}}"#).unwrap();
    let out = dir.path().join("out");
    let o = bin()
        .args(["--config", &p(cfg), "--out", &p(out.clone()), "generate"])
        .output()
        .unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error[ConfigError]: "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(!out.exists());
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for args in [vec!["--budget", "0"], vec!["--budget", "1.5"], vec!["--run-name", "a/b"]] {
        let o = bin().args(["--out", &p(out.clone())]).args(&args).arg("generate").output().unwrap();
        assert!(!o.status.success());
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[ConfigError]"), "{args:?}");
    }
    let o = bin().args(["--metrics", "dtw,foo", "generate"]).output().unwrap();
    assert!(!o.status.success());
    assert!(!out.exists());
}

#[test]
fn missing_input_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = bin()
        .args(["--out", &p(out.clone()), "evaluate", "--checkpoint", "/no/such.json", "--test", "/no/t.jsonl"])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[IoError]"));
    assert!(!out.exists());
}

#[test]
fn flags_override_config_and_defaults_are_resolved() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    run(out, "gen", &["--seed", "9", "--budget", "0.3", "--layer", "2", "--metrics", "slack,dtw", "generate"]);
    let text = fs::read_to_string(out.join("gen/config.json")).unwrap();
    let cfg: RunConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.pipeline.selection.budget_pct, 0.3);
    assert_eq!(cfg.pipeline.selection.metric.layer, Some(2));
    assert_eq!(cfg.pipeline.selection.metric_set.len(), 2);
    assert_eq!(cfg.training.seed, 9_002_000);
    assert_eq!(cfg.pipeline.fine_tune.seed, 9_003_000);
    // Keys the smoke config omits are written out with their defaults.
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["training"]["adam"]["beta1"].is_f64());
    assert!(v["pipeline"]["rollback"].is_string());
}

#[test]
fn default_run_name_is_a_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["--config", &p(smoke_config()), "--out", &p(dir.path().to_path_buf()), "generate"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 1);
    assert!(names[0].ends_with('Z') && names[0].contains('T'), "{}", names[0]);
}

#[test]
fn non_empty_run_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), "gen", &["generate"]);
    let o = bin()
        .args(["--config", &p(smoke_config()), "--out", &p(dir.path().to_path_buf()), "--run-name", "gen", "generate"])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[ConfigError]"));
}

#[test]
fn inputs_are_never_modified() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    run(out, "gen", &["generate"]);
    run(out, "tr", &["train", "--train", &p(out.join("gen/train.jsonl"))]);
    let inputs = [out.join("tr/checkpoint.json"), out.join("gen/test.jsonl"), out.join("gen/batch_1.jsonl")];
    let before: Vec<Vec<u8>> = inputs.iter().map(|f| fs::read(f).unwrap()).collect();
    run(
        out,
        "it",
        &[
            "iterate",
            "--checkpoint",
            &p(inputs[0].clone()),
            "--test",
            &p(inputs[1].clone()),
            "--batch",
            &p(inputs[2].clone()),
        ],
    );
    let after: Vec<Vec<u8>> = inputs.iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(before, after);
    let stream: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("it/stream.json")).unwrap()).unwrap();
    assert_eq!(stream["iterations"], 1);
}

#[test]
fn test_batch_overlap_is_dataset_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    run(out, "gen", &["generate"]);
    run(out, "tr", &["train", "--train", &p(out.join("gen/train.jsonl"))]);
    let test = p(out.join("gen/test.jsonl"));
    let o = bin()
        .args(["--config", &p(smoke_config()), "--out", &p(out.to_path_buf()), "--run-name", "it"])
        .args(["iterate", "--checkpoint", &p(out.join("tr/checkpoint.json")), "--test", &test, "--batch", &test])
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[DatasetError]"));
    assert!(!out.join("it").exists());
}

#[test]
fn shipped_configs_parse() {
    for name in ["desk.json", "smoke.json"] {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
        let cfg = RunConfig::load(&path).unwrap().resolve();
        cfg.validate().unwrap();
    }
}

#[test]
fn desk_config_is_the_acceptance_scenario() {
    use coreset_core::pipeline::paradigm::ScenarioConfig;
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.json");
    let mut scenario = RunConfig::load(&path).unwrap().scenario();
    let desk = ScenarioConfig::desk_scale();
    // The paradigms reseed the generator and trainers per seed.
    scenario.synth.seed = desk.synth.seed;
    assert_eq!(scenario, desk);
}
