//! End-to-end checks of the `edm` binary: flag handling, output formats,
//! and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use edm_core::model::Task;

use edm_cli::synth::write_synthetic_tree;

fn edm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_edm"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to launch edm")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

/// Tiny multi-task tree: 4 classes x 6 images at 16x16.
fn tiny_tree(root: &Path) {
    write_synthetic_tree(root, Task::Multi, 16, 6, 77).unwrap();
}

fn train_tiny(root: &Path, model_path: &Path) -> Output {
    run(edm()
        .args(["train", "--data"])
        .arg(root)
        .args(["--task", "multi", "--epochs", "1", "--input-size", "16", "--depth", "1", "--batch", "4", "--out"])
        .arg(model_path))
}

#[test]
fn missing_epochs_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(edm()
        .args(["train", "--data"])
        .arg(tmp.path())
        .args(["--task", "multi", "--out", "m.bin"]));
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("--epochs"), "{err}");
}

#[test]
fn unknown_task_is_usage_error() {
    let out = run(edm().args(["dataset-stats", "--data", ".", "--task", "both"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = run(edm().arg("--help"));
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("train"));
}

#[test]
fn train_writes_model_and_reports_accuracy() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_tree(tmp.path());
    let model_path = tmp.path().join("model.bin");
    let out = train_tiny(tmp.path(), &model_path);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.lines().any(|l| l.starts_with("epoch=1 loss=")), "{text}");
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("final_test_acc="), "{text}");
    assert!(model_path.is_file());
}

#[test]
fn train_stdout_is_bitwise_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_tree(tmp.path());
    let a = train_tiny(tmp.path(), &tmp.path().join("a.bin"));
    let b = train_tiny(tmp.path(), &tmp.path().join("b.bin"));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        fs::read(tmp.path().join("a.bin")).unwrap(),
        fs::read(tmp.path().join("b.bin")).unwrap()
    );
}

#[test]
fn eval_prints_accuracy_and_confusion_rows() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_tree(tmp.path());
    let model_path = tmp.path().join("model.bin");
    assert_eq!(train_tiny(tmp.path(), &model_path).status.code(), Some(0));

    let out = run(edm()
        .args(["eval", "--model"])
        .arg(&model_path)
        .arg("--data")
        .arg(tmp.path()));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("accuracy="), "{text}");
    assert_eq!(lines.len(), 1 + 4);
    for (line, name) in lines[1..].iter().zip(["layer_shift", "strings", "under_extrusion", "warping"]) {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields[0], name);
        assert_eq!(fields.len(), 1 + 4);
        // Row sums to the per-class sample count.
        let sum: u64 = fields[1..].iter().map(|f| f.parse::<u64>().unwrap()).sum();
        assert_eq!(sum, 6);
    }
}

#[test]
fn eval_rejects_corrupt_model_with_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_tree(tmp.path());
    let model_path = tmp.path().join("model.bin");
    assert_eq!(train_tiny(tmp.path(), &model_path).status.code(), Some(0));
    let mut bytes = fs::read(&model_path).unwrap();
    bytes.truncate(bytes.len() - 7);
    fs::write(&model_path, &bytes).unwrap();

    let out = run(edm()
        .args(["eval", "--model"])
        .arg(&model_path)
        .arg("--data")
        .arg(tmp.path()));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("corrupt model file"), "{}", stderr_of(&out));
}

#[test]
fn predict_prints_ranked_probabilities() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_tree(tmp.path());
    let model_path = tmp.path().join("model.bin");
    assert_eq!(train_tiny(tmp.path(), &model_path).status.code(), Some(0));

    let image_path = tmp.path().join("layer_shift/img_0000.ppm");
    let out = run(edm()
        .args(["predict", "--model"])
        .arg(&model_path)
        .arg("--image")
        .arg(&image_path));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4 + 1);

    let mut probs = Vec::new();
    for line in &lines[..4] {
        let (_, p) = line.split_once('\t').expect("class\\tprob");
        probs.push(p.parse::<f64>().unwrap());
    }
    // Descending and normalized (within print rounding).
    assert!(probs.windows(2).all(|w| w[0] >= w[1]), "{text}");
    let sum: f64 = probs.iter().sum();
    assert!((sum - 1.0).abs() <= 2e-6, "{sum}");
    assert!(lines[4].starts_with("predicted="), "{text}");
}

#[test]
fn predict_fails_on_unreadable_image() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_tree(tmp.path());
    let model_path = tmp.path().join("model.bin");
    assert_eq!(train_tiny(tmp.path(), &model_path).status.code(), Some(0));

    let bad = tmp.path().join("broken.ppm");
    fs::write(&bad, b"P6\n4 4\n255\nshort").unwrap();
    let out = run(edm()
        .args(["predict", "--model"])
        .arg(&model_path)
        .arg("--image")
        .arg(&bad));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dataset_stats_counts_by_class() {
    let tmp = tempfile::tempdir().unwrap();
    write_synthetic_tree(tmp.path(), Task::Binary, 16, 3, 5).unwrap();
    let out = run(edm().args(["dataset-stats", "--data"]).arg(tmp.path()).args(["--task", "binary"]));
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert_eq!(text, "normal\t3\nfault\t12\ntotal\t15\n");

    let out = run(edm().args(["dataset-stats", "--data"]).arg(tmp.path()).args(["--task", "multi"]));
    let text = stdout_of(&out);
    assert_eq!(
        text,
        "layer_shift\t3\nstrings\t3\nunder_extrusion\t3\nwarping\t3\ntotal\t12\n"
    );
}

#[test]
fn dataset_stats_empty_tree_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(edm().args(["dataset-stats", "--data"]).arg(tmp.path()).args(["--task", "binary"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn search_writes_report_and_selected_model() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_tree(tmp.path());
    let model_path = tmp.path().join("selected.bin");
    let report_path = tmp.path().join("report.csv");
    let out = run(edm()
        .args(["search", "--data"])
        .arg(tmp.path())
        .args([
            "--task", "multi", "--epochs", "0", "--input-size", "16", "--max-depth", "2",
            "--threshold", "0.0", "--batch", "4", "--report",
        ])
        .arg(&report_path)
        .arg("--out")
        .arg(&model_path));
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "selected_depth=1 fallback=false\n");
    assert!(model_path.is_file());

    let report = fs::read_to_string(&report_path).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 1 + 2 + 1);
    assert_eq!(lines[0], "depth,params,test_accuracy,passed");
    assert_eq!(lines[3], "selected=1,fallback=false");
}

#[test]
fn search_parallel_workers_match_sequential() {
    let tmp = tempfile::tempdir().unwrap();
    tiny_tree(tmp.path());
    let run_search = |tag: &str, workers: &str| {
        let model_path = tmp.path().join(format!("{tag}.bin"));
        let report_path = tmp.path().join(format!("{tag}.csv"));
        let out = run(edm()
            .args(["search", "--data"])
            .arg(tmp.path())
            .args([
                "--task", "multi", "--epochs", "1", "--input-size", "16", "--max-depth", "3",
                "--batch", "4", "--workers", workers, "--report",
            ])
            .arg(&report_path)
            .arg("--out")
            .arg(&model_path));
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
        (
            stdout_of(&out),
            fs::read(&report_path).unwrap(),
            fs::read(&model_path).unwrap(),
        )
    };
    let seq = run_search("seq", "1");
    let par = run_search("par", "2");
    assert_eq!(seq, par);
}
