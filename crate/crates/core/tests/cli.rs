use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn phasekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasekit"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, n: usize) {
    let cfg = dir.join("short.kv");
    let mut text = String::new();
    for k in 1..=7 {
        text.push_str(&format!("phase.{k}.duration = 15,30\n"));
    }
    fs::write(&cfg, text).unwrap();
    let out = phasekit(&[
        "synth",
        "--n",
        &n.to_string(),
        "--seed",
        "7",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.join("data")),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_writes_one_file_per_surgery() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 3);
    let mut names: Vec<String> = fs::read_dir(dir.path().join("data"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["synth-001.csv", "synth-002.csv", "synth-003.csv"]);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(
        phasekit(&["eval", "--method", "nope"]).status.code(),
        Some(1)
    );
    assert_eq!(phasekit(&["synth", "--n", "3"]).status.code(), Some(1));
    assert_eq!(phasekit(&["--help"]).status.code(), Some(0));
}

#[test]
fn eval_needs_two_surgeries() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 1);
    let out = phasekit(&[
        "eval",
        "--method",
        "rf",
        "--mode",
        "raw",
        "--data",
        s(&dir.path().join("data")),
        "--seed",
        "1",
        "--report",
        s(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr)
        .contains("leave-one-out requires at least 2 surgeries"));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir(&data).unwrap();
    fs::write(data.join("bad.csv"), "t,b01\n0,1\n").unwrap();
    let out = phasekit(&[
        "train",
        "--method",
        "rf",
        "--data",
        s(&data),
        "--seed",
        "1",
        "--model-out",
        s(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 4);
    let data = dir.path().join("data");
    for method in ["rf", "hmm", "combined"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let model = dir.path().join(format!("{method}-{run}.json"));
            let report = dir.path().join(format!("{method}-{run}-report.json"));
            let common = [
                "--mode",
                "raw",
                "--data",
                s(&data),
                "--seed",
                "3",
                "--trees",
                "10",
            ];
            let t = phasekit(
                &[
                    &["train", "--method", method, "--model-out", s(&model)][..],
                    &common,
                ]
                .concat(),
            );
            assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
            let e = phasekit(
                &[
                    &["eval", "--method", method, "--report", s(&report)][..],
                    &common,
                ]
                .concat(),
            );
            assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
            outputs.push((fs::read(&model).unwrap(), fs::read(&report).unwrap()));
        }
        assert_eq!(outputs[0], outputs[1], "{method}");
    }
}

#[test]
fn eval_writes_report_svgs_and_fold_log() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 3);
    let svg = dir.path().join("svg");
    let report = dir.path().join("report.json");
    let out = phasekit(&[
        "eval",
        "--method",
        "combined",
        "--mode",
        "filtered",
        "--decode",
        "filtering",
        "--data",
        s(&dir.path().join("data")),
        "--seed",
        "2",
        "--trees",
        "8",
        "--jobs",
        "1",
        "--report",
        s(&report),
        "--svg",
        s(&svg),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let log = String::from_utf8_lossy(&out.stderr);
    assert_eq!(log.lines().filter(|l| l.starts_with("fold ")).count(), 3);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert!(
        json["jaccard_per_phase"].get("Clipping").is_some()
            || json["jaccard_per_phase"].get("Closing").is_some()
    );
    assert_eq!(fs::read_dir(&svg).unwrap().count(), 3);
    let doc = fs::read_to_string(svg.join("synth-001.svg")).unwrap();
    assert_eq!(doc.matches("class=\"ribbon\"").count(), 3);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 3);
    let cfg = dir.path().join("run.kv");
    fs::write(&cfg, "forest.n_trees = 0\n").unwrap();
    let data = dir.path().join("data");
    let base = [
        "train",
        "--method",
        "rf",
        "--data",
        s(&data),
        "--seed",
        "1",
        "--config",
        s(&cfg),
    ];
    let model = dir.path().join("m.json");
    assert_eq!(
        phasekit(&[&base[..], &["--model-out", s(&model)]].concat())
            .status
            .code(),
        Some(2)
    );
    let ok = phasekit(&[&base[..], &["--trees", "3", "--model-out", s(&model)]].concat());
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let json: serde_json::Value = serde_json::from_slice(&fs::read(&model).unwrap()).unwrap();
    assert_eq!(json["method"], "rf");
    assert_eq!(json["forest"]["trees"].as_array().unwrap().len(), 3);
}

#[test]
fn features_and_plot_compose() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 2);
    let feats = dir.path().join("features");
    let out = phasekit(&[
        "features",
        "--mode",
        "augmented",
        "--in",
        s(&dir.path().join("data")),
        "--out",
        s(&feats),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let header = fs::read_to_string(feats.join("synth-001.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 46);

    let svg = dir.path().join("t.svg");
    let truth = dir.path().join("data/synth-001.csv");
    let out = phasekit(&[
        "plot",
        "--truth",
        s(&truth),
        "--pred",
        s(&feats.join("synth-001.csv")),
        "--out",
        s(&svg),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}
