use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dioph(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dioph-lab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DIOPH_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn body(path: &Path) -> String {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    serde_json::to_string(&v["body"]).unwrap()
}

#[test]
fn series_report_goes_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dioph(&["series", "--psi", "power:2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["body"]["result"]["verdict"], "converges");
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
    assert!(v["meta"]["wall_clock_ms"].is_u64());
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["launch"],
        &["series"],
        &["series", "--psi", "power:-1"],
        &["measure", "--map", "sphere:2", "--eps", "0.1", "--Q", "5"],
        &[
            "measure",
            "--map",
            r#"{"kind":"torus"}"#,
            "--eps",
            "0.1",
            "--Q",
            "5",
        ],
        &["measure", "--ball", "0.5", "--eps", "0.1", "--Q", "5"],
        &[
            "measure", "--eps", "0.1,0.2", "--Q", "5", "--method", "grid",
        ],
        &["count", "--psi", "power:1", "--Qmax", "0"],
        &["regsys", "--Q", "1", "--c0", "3.98"],
        &[
            "overlap", "--psi", "power:1", "--K", "8", "--k0", "9", "--c0", "3.98",
        ],
        &[
            "overlap",
            "--psi",
            "power:0.5",
            "--K",
            "8",
            "--k0",
            "6",
            "--no-clamp",
            "--c0",
            "3.98",
        ],
    ];
    for args in cases {
        let out = dioph(args, dir.path());
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn bad_config_files_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    for text in [
        "not json",
        r#"{"experiment":{"subcommand":"series","psi":{"family":"power","tau":1.0},"d":1,"s":0.0,"budget":2048}}"#,
        r#"{"experiment":{"subcommand":"series","psi":{"family":"power","tau":1.0},"d":1,"s":0.0,"budget":2048,"seed":0},"colour":"red"}"#,
        r#"{"experiment":{"subcommand":"count","map":{"kind":"cone","n":2},"region":{"center":[0.5],"radius":0.5},"psi":{"family":"power","tau":1.0},"q_max":[10],"samples":3,"seed":0}}"#,
    ] {
        std::fs::write(&path, text).unwrap();
        let out = dioph(&["run", path.to_str().unwrap()], dir.path());
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
}

#[test]
fn numeric_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dioph(
        &["overlap", "--psi", "power:1", "--K", "1", "--c0", "3.98"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("10 members"));
}

#[test]
fn help_and_version_exit_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dioph(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(dioph(&["--version"], dir.path()).status.code(), Some(0));
}

#[test]
fn calibrate_then_regsys_and_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dioph(&["calibrate", "--out", "cal.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let cal: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cal.json")).unwrap())
            .unwrap();
    let k = &cal["body"]["result"]["constants"];
    for key in ["c0", "c3", "c4", "c5", "c6", "k1", "k2", "k3", "q0"] {
        assert!(k[key].as_f64().unwrap() > 0.0, "{key}");
    }

    let out = dioph(
        &[
            "regsys",
            "--Q",
            "8",
            "--constants",
            "cal.json",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert!(r["body"]["result"]["verification"]["violations"]
        .as_array()
        .unwrap()
        .is_empty());
    assert_eq!(r["body"]["result"]["certificate"]["consts"], *k);

    let out = dioph(
        &[
            "overlap",
            "--psi",
            "power:1",
            "--k0",
            "6",
            "--K",
            "9",
            "--constants",
            "cal.json",
            "--out",
            "o.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("o.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("k,E_k,phi_k"));
    assert_eq!(table.lines().count(), 5);
    let pairs = std::fs::read_to_string(dir.path().join("o.pairs.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 1 + 16);
    assert!(dir.path().join("o.report.json").exists());
}

#[test]
fn count_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "count",
        "--map",
        "veronese:2",
        "--ball",
        "0.5,0.5",
        "--psi",
        "power:1",
        "--Qmax",
        "200",
        "--samples",
        "6",
        "--seed",
        "7",
        "--out",
        "survey.csv",
        "--plot",
        "growth.svg",
    ];
    assert_eq!(dioph(&args, dir.path()).status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("survey.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(table.as_bytes());
    assert_eq!(
        rows.headers().unwrap(),
        vec!["x", "count", "first_witnesses"]
    );
    let records: Vec<_> = rows.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 6);
    for r in &records {
        let count: u64 = r[1].parse().unwrap();
        assert!(count > 0 && count.is_multiple_of(2));
        assert!(r[2].split(';').count() <= 10);
    }
    let svg = std::fs::read_to_string(dir.path().join("growth.svg")).unwrap();
    assert!(svg.starts_with("<svg"));

    // a ladder needs JSON
    let out = dioph(
        &[
            "count",
            "--psi",
            "power:1",
            "--Qmax",
            "50,100",
            "--samples",
            "2",
            "--out",
            "l.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn measure_scaling_plot() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "measure",
        "--eps",
        "0.025,0.05,0.1,0.2",
        "--Q",
        "10",
        "--out",
        "m.json",
        "--plot",
        "m.svg",
    ];
    assert_eq!(dioph(&args, dir.path()).status.code(), Some(0));
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert!(v["body"]["result"]["scaling"]["slope"].as_f64().unwrap() > 0.0);
    assert!(v["body"]["result"]["constants"]["c3"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("m.svg").exists());
}

#[test]
fn config_file_reproduces_flags() {
    let dir = tempfile::tempdir().unwrap();
    let flags = [
        "measure",
        "--eps",
        "0.1",
        "--Q",
        "6",
        "--method",
        "montecarlo:20000",
        "--seed",
        "9",
        "--out",
        "a.json",
    ];
    assert_eq!(dioph(&flags, dir.path()).status.code(), Some(0));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    // the echoed config is itself a runnable config
    std::fs::write(
        dir.path().join("cfg.json"),
        report["body"]["config"].to_string(),
    )
    .unwrap();
    let out = dioph(&["run", "cfg.json", "--out", "b.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let a: Value = serde_json::from_str(&body(&dir.path().join("a.json"))).unwrap();
    let b: Value = serde_json::from_str(&body(&dir.path().join("b.json"))).unwrap();
    assert_eq!(a["result"], b["result"]);
    assert_eq!(a["config"]["experiment"]["seed"], 9);
}

#[test]
fn thread_count_does_not_change_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "measure",
        "--eps",
        "0.05",
        "--Q",
        "8",
        "--method",
        "montecarlo:300000",
        "--seed",
        "4",
        "--split",
        "--out",
        "t.json",
    ];
    let mut bodies = Vec::new();
    for threads in ["1", "8"] {
        let mut args = vec!["--threads", threads];
        args.extend_from_slice(&base);
        assert_eq!(dioph(&args, dir.path()).status.code(), Some(0));
        bodies.push(body(&dir.path().join("t.json")));
    }
    let env_run = Command::new(env!("CARGO_BIN_EXE_dioph-lab"))
        .args(base)
        .current_dir(dir.path())
        .env("DIOPH_LAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(env_run.status.code(), Some(0));
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(v["meta"]["threads"], 3);
    bodies.push(body(&dir.path().join("t.json")));
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[1], bodies[2]);

    let bad = Command::new(env!("CARGO_BIN_EXE_dioph-lab"))
        .args(["series", "--psi", "power:1"])
        .env("DIOPH_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
