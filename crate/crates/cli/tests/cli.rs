//! The `backprobe` binary end to end, using the committed replay fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn backprobe(data_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_backprobe"))
        .arg("--data-dir")
        .arg(data_dir)
        .args(args)
        .env_remove("DEEPL_AUTH_KEY")
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(out.status.success(), "stdout: {stdout}\nstderr: {}", String::from_utf8_lossy(&out.stderr));
    stdout
}

fn replay_run(data_dir: &Path, label: &str) -> String {
    let rec = fixture("replay.rec.jsonl");
    let corpus = fixture("replay_corpus.tsv");
    ok(backprobe(
        data_dir,
        &[
            "run", "--pivot", "FI", "--label", label, "--trials", "10", "--seed", "2024",
            "--strict-replay", rec.to_str().unwrap(), "--corpus", corpus.to_str().unwrap(),
        ],
    ))
}

#[test]
fn replay_analyze_compare_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path();
    let out = replay_run(data, "FI");
    assert!(out.contains("30 records (0 failed), complete: true"), "{out}");
    // a second label from the same recording for the comparison
    replay_run(data, "FI2");
    assert_eq!(
        std::fs::read_to_string(data.join("datasets/FI.jsonl")).unwrap().lines().skip(1).count(),
        30
    );

    let corpus = fixture("replay_corpus.tsv");
    let out = ok(backprobe(data, &["analyze", "--datasets", "FI,FI2", "--corpus", corpus.to_str().unwrap()]));
    assert!(out.contains("FI: UCA"), "{out}");
    assert!(data.join("analysis/analysis.json").exists());

    let out = ok(backprobe(data, &["compare", "FI", "FI2"]));
    assert!(out.contains("UCA r = 1.000"), "{out}");
    assert!(data.join("analysis/comparison_FI_FI2.json").exists());

    ok(backprobe(data, &["report", "--no-timestamp"]));
    let reports = data.join("reports");
    for name in ["pronoun_counts.csv", "uca_by_sentence.jsonl", "pronoun_distribution_FI.svg", "uca_scatter_FI_FI2.svg"] {
        assert!(reports.join(name).exists(), "missing {name}");
    }
    let counts = std::fs::read_to_string(reports.join("pronoun_counts.csv")).unwrap();
    let he = counts.lines().find(|l| l.starts_with("he,")).unwrap();
    assert_eq!(he, "he,20,20");

    // rendering is deterministic without the timestamp
    let first = std::fs::read(reports.join("pronoun_distribution_FI.svg")).unwrap();
    ok(backprobe(data, &["report", "--no-timestamp", "--formats", "svg"]));
    assert_eq!(first, std::fs::read(reports.join("pronoun_distribution_FI.svg")).unwrap());
}

#[test]
fn unknown_dataset_lists_stored_labels() {
    let dir = tempfile::tempdir().unwrap();
    replay_run(dir.path(), "FI");
    let out = backprobe(dir.path(), &["compare", "FI", "HU"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown dataset 'HU'") && err.contains("stored: FI"), "{err}");
}

#[test]
fn strict_replay_miss_fails() {
    let dir = tempfile::tempdir().unwrap();
    let rec = fixture("replay.rec.jsonl");
    let corpus = fixture("replay_corpus.tsv");
    let out = backprobe(
        dir.path(),
        &[
            "run", "--pivot", "FI", "--trials", "11", "--seed", "1",
            "--strict-replay", rec.to_str().unwrap(), "--corpus", corpus.to_str().unwrap(),
        ],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("replay"));
}

#[test]
fn corpus_validate_and_lexicon() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(backprobe(dir.path(), &["corpus", "validate"]));
    assert!(out.contains("56 sentences, 37 verbs"), "{out}");
    let out = ok(backprobe(dir.path(), &["corpus", "validate", fixture("replay_corpus.tsv").to_str().unwrap()]));
    assert!(out.contains("replay-fixture: 3 sentences"), "{out}");

    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "1\t\tthe engineer writes code.\twrite\n").unwrap();
    assert!(!backprobe(dir.path(), &["corpus", "validate", bad.to_str().unwrap()]).status.success());

    let out = ok(backprobe(dir.path(), &["lexicon"]));
    assert!(out.contains("he or she"), "{out}");
}

#[test]
fn ingest_external_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path();
    let csv = data.join("prior.csv");
    std::fs::write(&csv, "id,pronoun,n\n1,he,7\n1,he / she,3\n2,she,10\n").unwrap();
    let mapping = data.join("prior.toml");
    std::fs::write(
        &mapping,
        "label = \"FI0\"\npivot = \"FI\"\n[columns]\nsentence_id = \"id\"\npronoun = \"pronoun\"\ncount = \"n\"\n[labels]\n\"he / she\" = \"he/she\"\n",
    )
    .unwrap();
    let args = ["ingest", csv.to_str().unwrap(), "--mapping", mapping.to_str().unwrap(), "--no-corpus"];
    let out = ok(backprobe(data, &args));
    assert!(out.contains("FI0: 3 rows, 20 records"), "{out}");
    // refuses to overwrite without --force
    assert!(!backprobe(data, &args).status.success());
    let mut forced = args.to_vec();
    forced.push("--force");
    ok(backprobe(data, &forced));
}
