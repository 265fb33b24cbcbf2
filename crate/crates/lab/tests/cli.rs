use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"{
  "version": 1,
  "corpus": {"synthetic": {"n_pairs": 600, "word_vocab": 40,
    "utterance_len": {"min": 1, "max": 3, "mean": 2.0}, "zipf_exponent": 0.9, "seed": 0}},
  "models": ["awgr_prgw", "a(w|r)p(w,r)"],
  "seeds": [3],
  "checkpoint_every": 50,
  "smoothing": {"lambda": 0.01, "beta": 100},
  "homonym": {"training_cutoff": 100, "n_trials": 3, "words_per_band": 1},
  "synonym": {"training_cutoff": 100, "n_trials": 3, "simulations": 2,
    "target_band": {"label": "seen", "min": 3, "max": null}}
}"#;

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xsl-lab"))
        .current_dir(dir)
        .env_remove("XSL_LAB_OUT")
        .args(args)
        .output()
        .unwrap()
}

fn setup() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("small.json"), SMALL).unwrap();
    dir
}

fn ok(o: &Output) {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn generate_transform_train_eval_round_trip() {
    let dir = setup();
    let d = dir.path();
    ok(&lab(
        d,
        &["--config", "small.json", "--out", "o", "generate"],
    ));
    assert!(d.join("o/corpus-3.txt").exists());
    assert!(d.join("o/lexicon-3.txt").exists());

    ok(&lab(
        d,
        &[
            "--out",
            "o",
            "transform",
            "--input",
            "o/corpus-3.txt",
            "--kind",
            "base",
        ],
    ));
    let base = fs::read_to_string(d.join("o/corpus-3-base.txt")).unwrap();
    let source = fs::read_to_string(d.join("o/corpus-3.txt")).unwrap();
    assert_eq!(
        base.split("\n\n").filter(|b| !b.trim().is_empty()).count(),
        200
    );
    assert!(source.len() > base.len());

    ok(&lab(
        d,
        &[
            "--out",
            "o",
            "transform",
            "--input",
            "o/corpus-3.txt",
            "--kind",
            "ru-plus",
        ],
    ));
    assert!(d.join("o/corpus-3-ru_plus.txt").exists());

    ok(&lab(
        d,
        &[
            "--config",
            "small.json",
            "--out",
            "o",
            "train",
            "--model",
            "awgr_prgw",
            "--corpus",
            "o/corpus-3-base.txt",
        ],
    ));
    let state = d.join("o/state-awgr_prgw-3.json");
    assert!(state.exists());

    let o = lab(
        d,
        &[
            "--config",
            "small.json",
            "--out",
            "o",
            "eval",
            "--state",
            "o/state-awgr_prgw-3.json",
            "--lexicon",
            "o/lexicon-3.txt",
        ],
    );
    ok(&o);
    let eval = fs::read_to_string(d.join("o/eval.csv")).unwrap();
    assert!(eval.starts_with("model,corpus,seed,step,key,score\n"));
    assert!(eval.lines().any(|l| l.contains(",all,")));
    assert!(String::from_utf8_lossy(&o.stdout).contains("average comprehension"));
}

#[test]
fn experiment_writes_table_figure_and_manifest() {
    let dir = setup();
    let d = dir.path();
    ok(&lab(d, &["--config", "small.json", "--out", "o", "curve"]));
    let csv = fs::read_to_string(d.join("o/curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    let svg = fs::read_to_string(d.join("o/curve.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn plot_rerenders_identically() {
    let dir = setup();
    let d = dir.path();
    ok(&lab(
        d,
        &["--config", "small.json", "--out", "o", "synonym"],
    ));
    ok(&lab(
        d,
        &["plot", "--input", "o/synonym.csv", "--output", "again.svg"],
    ));
    assert_eq!(
        fs::read(d.join("o/synonym.svg")).unwrap(),
        fs::read(d.join("again.svg")).unwrap()
    );
}

#[test]
fn jsonl_format_and_env_output_dir() {
    let dir = setup();
    let d = dir.path();
    let o = Command::new(env!("CARGO_BIN_EXE_xsl-lab"))
        .current_dir(d)
        .env("XSL_LAB_OUT", "from-env")
        .args(["--config", "small.json", "--format", "jsonl", "frequency"])
        .output()
        .unwrap();
    ok(&o);
    let text = fs::read_to_string(d.join("from-env/frequency.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(first.get("model").is_some() && first.get("score").is_some());
    assert!(d.join("from-env/frequency.svg").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = setup();
    let d = dir.path();
    ok(&lab(
        d,
        &[
            "--config",
            "small.json",
            "--seed",
            "8",
            "--out",
            "o",
            "curve",
        ],
    ));
    let csv = fs::read_to_string(d.join("o/curve.csv")).unwrap();
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(2) == Some("8")));
}

#[test]
fn oracle_check_succeeds_with_zero() {
    let dir = setup();
    let o = lab(
        dir.path(),
        &["--config", "small.json", "--out", "o", "oracle-check"],
    );
    ok(&o);
    assert!(String::from_utf8_lossy(&o.stderr).contains("words agree"));
    assert!(dir.path().join("o/oracle_loglik.csv").exists());
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("bad.json"), r#"{"version": 1, "colour": "red"}"#).unwrap();
    fs::write(d.join("old.json"), r#"{"version": 0}"#).unwrap();
    fs::write(
        d.join("beta.json"),
        r#"{"version": 1, "smoothing": {"lambda": 0.01, "beta": 10}}"#,
    )
    .unwrap();
    for file in ["bad.json", "old.json", "beta.json", "missing.json"] {
        let o = lab(d, &["--config", file, "curve"]);
        assert_eq!(o.status.code(), Some(1), "{file}");
    }
    assert_eq!(lab(d, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        lab(
            d,
            &["train", "--model", "nonsense", "--config", "small.json"]
        )
        .status
        .code(),
        Some(1)
    );
    assert_eq!(lab(d, &["--help"]).status.code(), Some(0));
}
