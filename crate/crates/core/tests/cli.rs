use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn roadnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roadnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Workdir {
    dir: TempDir,
}

impl Workdir {
    fn new() -> Self {
        Workdir {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// synth, nodes, labels and a one-epoch training run.
    fn prepared(self) -> Self {
        let ok = |o: Output| assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        ok(roadnet(&["synth", "--out-dir", s(&self.path("scene"))]));
        ok(roadnet(&[
            "nodes",
            "--graph",
            s(&self.path("scene/gt.json")),
            "--densify",
            "25",
            "--out",
            s(&self.path("nodes.json")),
        ]));
        ok(roadnet(&[
            "labels",
            "--nodes",
            s(&self.path("nodes.json")),
            "--gt",
            s(&self.path("scene/gt.json")),
            "--out",
            s(&self.path("labels.jsonl")),
        ]));
        ok(roadnet(&[
            "train-connect",
            "--nodes",
            s(&self.path("nodes.json")),
            "--labels",
            s(&self.path("labels.jsonl")),
            "--epochs",
            "1",
            "--out",
            s(&self.path("weights.json")),
        ]));
        self
    }
}

#[test]
fn help_exits_zero() {
    let out = roadnet(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["synth", "train-connect", "extract", "complete", "evaluate"] {
        assert!(text.contains(sub), "help lists {sub}");
    }
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(roadnet(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn synth_writes_three_files() {
    let w = Workdir::new();
    let out = roadnet(&["synth", "--seed", "4", "--out-dir", s(&w.path("scene"))]);
    assert_eq!(out.status.code(), Some(0));
    let mut names: Vec<String> = std::fs::read_dir(w.path("scene"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["fragmented.json", "gt.json", "image.png"]);
}

#[test]
fn synth_rejects_an_empty_canvas() {
    let w = Workdir::new();
    let out = roadnet(&["synth", "--width", "0", "--out-dir", s(&w.path("scene"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_is_exit_two() {
    let w = Workdir::new();
    let out = roadnet(&[
        "train-connect",
        "--nodes",
        s(&w.path("nope.json")),
        "--labels",
        s(&w.path("nope.jsonl")),
        "--out",
        s(&w.path("w.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_runs_and_reports() {
    let w = Workdir::new().prepared();
    let train_log = std::fs::read_to_string(w.path("weights.curve.json")).unwrap();
    assert!(train_log.contains("loss_curve"));

    let out = roadnet(&[
        "extract",
        "--nodes",
        s(&w.path("nodes.json")),
        "--weights",
        s(&w.path("weights.json")),
        "--out",
        s(&w.path("pred.json")),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = roadnet(&[
        "complete",
        "--graph",
        s(&w.path("scene/fragmented.json")),
        "--image",
        s(&w.path("scene/image.png")),
        "--gt",
        s(&w.path("scene/gt.json")),
        "--out",
        s(&w.path("completed.json")),
        "--trace",
        s(&w.path("trace.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(w.path("trace.jsonl")).unwrap();
    for line in trace.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(["bridge", "extend", "stop"].contains(&v["action"].as_str().unwrap()));
    }

    let out = roadnet(&[
        "--preset",
        "spacenet3",
        "evaluate",
        "--gt",
        s(&w.path("scene/gt.json")),
        "--pred",
        s(&w.path("completed.json")),
        "--apls-mode",
        "paper-verbatim",
        "--out",
        s(&w.path("report.json")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.starts_with("method"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(w.path("report.json")).unwrap()).unwrap();
    let first = &report[0];
    assert_eq!(first["name"], "completed");
    assert_eq!(first["pipeline"]["queries"], 300);
    assert!(first["apls"].as_f64().unwrap() <= 0.5);
}

#[test]
fn bad_tiling_and_step_options_are_usage_errors() {
    let w = Workdir::new().prepared();
    let out = roadnet(&[
        "extract",
        "--nodes",
        s(&w.path("nodes.json")),
        "--weights",
        s(&w.path("weights.json")),
        "--tile",
        "256",
        "--overlap",
        "256",
        "--out",
        s(&w.path("pred.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = roadnet(&[
        "complete",
        "--graph",
        s(&w.path("scene/fragmented.json")),
        "--image",
        s(&w.path("scene/image.png")),
        "--gt",
        s(&w.path("scene/gt.json")),
        "--max-steps",
        "0",
        "--out",
        s(&w.path("c.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn weights_that_do_not_fit_the_descriptors_are_a_runtime_error() {
    let w = Workdir::new().prepared();
    let out = roadnet(&[
        "nodes",
        "--graph",
        s(&w.path("scene/gt.json")),
        "--bins",
        "18",
        "--out",
        s(&w.path("nodes18.json")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = roadnet(&[
        "extract",
        "--nodes",
        s(&w.path("nodes18.json")),
        "--weights",
        s(&w.path("weights.json")),
        "--out",
        s(&w.path("pred.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}
