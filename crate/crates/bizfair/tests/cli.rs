//! Black-box tests of the command-line interface: exit codes, output
//! formats, config echo round-trips, and cross-invocation determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bizfair"));
    cmd.env_remove("BIZFAIR_SEED");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// prepare into a temp dir with small thresholds; returns the out dir.
fn prepare(dir: &Path, seed: &str) -> PathBuf {
    let out = dir.join(format!("prep{seed}"));
    let result = run(bin().args([
        "prepare",
        "--input",
        fixture("licences_small.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--min-samples",
        "3",
        "--test-frac",
        "0.25",
        "--seed",
        seed,
    ]));
    assert!(
        result.status.success(),
        "prepare failed: {}",
        stderr(&result)
    );
    out
}

fn train_raw(input: &Path, model: &Path) {
    let result = run(bin().args([
        "train",
        "--input",
        input.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--mode",
        "raw",
        "--dim",
        "16",
        "--epochs",
        "4",
        "--seed",
        "5",
    ]));
    assert!(result.status.success(), "train failed: {}", stderr(&result));
}

#[test]
fn missing_csv_column_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "BusinessName,BusinessTradeName\nAcme Ltd,\n").unwrap();
    let result = run(bin().args([
        "prepare",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]));
    assert_eq!(result.status.code(), Some(2));
    assert!(
        stderr(&result).contains("BusinessType"),
        "stderr: {}",
        stderr(&result)
    );
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let result = run(bin().args(["train", "--bogus"]));
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn missing_required_option_is_a_usage_error() {
    let result = run(bin().args(["train"]));
    assert_eq!(result.status.code(), Some(2));
    assert!(
        stderr(&result).contains("--input"),
        "stderr: {}",
        stderr(&result)
    );
}

#[test]
fn corrupt_model_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let fake = dir.path().join("fake.bin");
    std::fs::write(&fake, b"not a model at all").unwrap();
    let result = run(bin().args(["predict", "--model", fake.to_str().unwrap(), "Some Shop"]));
    assert_eq!(result.status.code(), Some(1));
    assert!(
        stderr(&result).contains("not a model file"),
        "stderr: {}",
        stderr(&result)
    );
}

#[test]
fn prepare_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = prepare(dir.path(), "11");
    let b = dir.path().join("again");
    let result = run(bin().args([
        "prepare",
        "--input",
        fixture("licences_small.csv").to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--min-samples",
        "3",
        "--test-frac",
        "0.25",
        "--seed",
        "11",
    ]));
    assert!(result.status.success());
    for file in ["dataset.tsv", "train.tsv", "test.tsv", "labels.tsv"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file} differs for the same seed"
        );
    }
    // A different seed moves records across the split boundary.
    let c = prepare(dir.path(), "12");
    assert_ne!(
        std::fs::read(a.join("train.tsv")).unwrap(),
        std::fs::read(c.join("train.tsv")).unwrap(),
        "train split ignored the seed"
    );
    assert_eq!(
        std::fs::read(a.join("dataset.tsv")).unwrap(),
        std::fs::read(c.join("dataset.tsv")).unwrap(),
        "full dataset should not depend on the seed"
    );
}

#[test]
fn predict_prints_ranked_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let prep = prepare(dir.path(), "21");
    let model = dir.path().join("model.bin");
    train_raw(&prep.join("train.tsv"), &model);

    let result = run(bin().args([
        "predict",
        "--model",
        model.to_str().unwrap(),
        "-k",
        "3",
        "Olivia's Cantina",
    ]));
    assert!(result.status.success(), "{}", stderr(&result));
    let lines: Vec<String> = stdout(&result).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    let mut last = f64::INFINITY;
    for line in &lines {
        let (label, prob) = line.split_once('\t').expect("label<TAB>probability");
        assert!(!label.is_empty());
        assert_eq!(prob.split('.').nth(1).map(str::len), Some(4), "{prob}");
        let p: f64 = prob.parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(p <= last, "probabilities not descending");
        last = p;
    }

    let json = run(bin().args([
        "predict",
        "--model",
        model.to_str().unwrap(),
        "-k",
        "2",
        "--json",
        "Olivia's Cantina",
    ]));
    assert!(json.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(parsed.as_array().map(Vec::len), Some(2));
    assert!(parsed[0]["label"].is_string());
    assert!(parsed[0]["probability"].is_number());
}

#[test]
fn evaluate_reports_rank_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let prep = prepare(dir.path(), "31");
    let model = dir.path().join("model.bin");
    train_raw(&prep.join("train.tsv"), &model);

    let result = run(bin().args([
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--input",
        prep.join("test.tsv").to_str().unwrap(),
        "--k",
        "1,2",
        "--high-level",
    ]));
    assert!(result.status.success(), "{}", stderr(&result));
    let text = stdout(&result);
    for needle in ["mode\traw", "P@1\t", "R@1\t", "P@2\t", "R@2\t", "class\t"] {
        assert!(text.contains(needle), "missing {needle:?} in:\n{text}");
    }
    // P@1 and R@1 agree on single-label data.
    let field = |prefix: &str| {
        text.lines()
            .find(|l| l.starts_with(prefix))
            .and_then(|l| l.split('\t').nth(1))
            .map(String::from)
            .unwrap()
    };
    assert_eq!(field("P@1"), field("R@1"));
}

#[test]
fn train_config_echo_reproduces_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let prep = prepare(dir.path(), "41");
    let first = dir.path().join("first.bin");
    train_raw(&prep.join("train.tsv"), &first);

    let config = dir.path().join("first.bin.config");
    assert!(config.exists(), "train did not echo its configuration");
    let echoed = std::fs::read_to_string(&config).unwrap();
    assert!(echoed.contains("command = train"));
    assert!(echoed.contains("seed = 5"));

    // Rebuilding from the echoed config alone gives the same bytes.
    let second = dir.path().join("second.bin");
    let result = run(bin().args([
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]));
    assert!(result.status.success(), "{}", stderr(&result));
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&second).unwrap(),
        "model bytes differ when retrained from the echoed config"
    );
}

#[test]
fn seed_env_var_is_a_fallback_not_an_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env_prep");
    let result = run(bin()
        .args([
            "prepare",
            "--input",
            fixture("licences_small.csv").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--min-samples",
            "3",
        ])
        .env("BIZFAIR_SEED", "123"));
    assert!(result.status.success(), "{}", stderr(&result));
    let config = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(config.contains("seed = 123"), "{config}");

    let out2 = dir.path().join("env_prep2");
    let result = run(bin()
        .args([
            "prepare",
            "--input",
            fixture("licences_small.csv").to_str().unwrap(),
            "--out",
            out2.to_str().unwrap(),
            "--min-samples",
            "3",
            "--seed",
            "7",
        ])
        .env("BIZFAIR_SEED", "123"));
    assert!(result.status.success());
    let config = std::fs::read_to_string(out2.join("config.txt")).unwrap();
    assert!(config.contains("seed = 7"), "{config}");
}

#[test]
fn bias_needs_consistent_model_modes() {
    let dir = tempfile::tempdir().unwrap();
    let prep = prepare(dir.path(), "51");
    let models = dir.path().join("models");
    std::fs::create_dir(&models).unwrap();
    train_raw(&prep.join("train.tsv"), &models.join("a.bin"));
    let result = run(bin().args([
        "train",
        "--input",
        prep.join("train.tsv").to_str().unwrap(),
        "--out",
        models.join("b.bin").to_str().unwrap(),
        "--mode",
        "mask",
        "--names-male",
        fixture("census_male.txt").to_str().unwrap(),
        "--names-female",
        fixture("census_female.txt").to_str().unwrap(),
        "--dim",
        "16",
        "--epochs",
        "2",
    ]));
    assert!(result.status.success(), "{}", stderr(&result));

    let result = run(bin().args([
        "bias",
        "--models",
        models.to_str().unwrap(),
        "--approach",
        "1",
        "--dict",
        fixture("words.txt").to_str().unwrap(),
        "--n",
        "50",
    ]));
    assert_eq!(result.status.code(), Some(2));
    assert!(
        stderr(&result).contains("mixed training modes"),
        "stderr: {}",
        stderr(&result)
    );
}

#[test]
fn bias_report_covers_all_list_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let prep = prepare(dir.path(), "61");
    let models = dir.path().join("models");
    std::fs::create_dir(&models).unwrap();
    train_raw(&prep.join("train.tsv"), &models.join("only.bin"));

    let result = run(bin().args([
        "bias",
        "--models",
        models.to_str().unwrap(),
        "--approach",
        "1",
        "--dict",
        fixture("words.txt").to_str().unwrap(),
        "--n",
        "200",
        "--seed",
        "3",
    ]));
    assert!(result.status.success(), "{}", stderr(&result));
    let text = stdout(&result);
    for needle in [
        "approach 1, 200 probes per side",
        "Canadian male + male",
        "Canadian female + female",
        "Canadian male + female",
        "Canadian male + Mexican male",
        "Canadian female + Mexican female",
        "Canadian male + Mexican female",
        "Average",
    ] {
        assert!(text.contains(needle), "missing {needle:?} in:\n{text}");
    }
}
