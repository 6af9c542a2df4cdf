use std::path::Path;
use std::process::{Command, Output};

use seminpaint_core::io::read_label_png;
use seminpaint_core::ClassTaxonomy;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seminpaint"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn synth(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec![
        "-q", "synth", "--out", out, "--count", "4", "--width", "64", "--height", "48", "--seed", "2",
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for sub in ["", "dynamic", "static", "mask"] {
        let d = dir.join(sub);
        let mut entries: Vec<_> = std::fs::read_dir(&d).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries.into_iter().filter(|p| p.is_file()) {
            let name = p.strip_prefix(dir).unwrap().display().to_string();
            files.push((name, std::fs::read(&p).unwrap()));
        }
    }
    files
}

#[test]
fn synth_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&synth(&a, &["--threshold", "0"])), 0);
    assert_eq!(code(&synth(&b, &["--threshold", "0"])), 0);
    let ta = read_tree(&a);
    assert!(ta.iter().any(|(n, _)| n == "manifest.jsonl"));
    assert_eq!(ta, read_tree(&b));
}

#[test]
fn inpaint_eval_and_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert_eq!(code(&synth(&data, &["--threshold", "0"])), 0);
    let manifest = data.join("manifest.jsonl");
    let m = manifest.to_str().unwrap();
    let mut tables = Vec::new();
    for method in ["nn", "ns", "pm"] {
        let pred = tmp.path().join(format!("pred_{method}"));
        let out = run(&[
            "-q",
            "inpaint",
            "--method",
            method,
            "--manifest",
            m,
            "--out",
            pred.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let report = tmp.path().join(format!("report_{method}"));
        let out = run(&[
            "-q",
            "eval",
            "--manifest",
            m,
            "--pred-dir",
            pred.to_str().unwrap(),
            "--method",
            method,
            "--out",
            report.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(report.join(format!("confusion_{method}.csv")).is_file());
        assert!(report.join(format!("confusion_{method}.png")).is_file());
        tables.push(report.join("accuracy.csv"));
    }
    let combined = tmp.path().join("all.csv");
    let mut args = vec!["-q", "report", "--out", combined.to_str().unwrap()];
    for t in &tables {
        args.extend(["--result", t.to_str().unwrap()]);
    }
    assert_eq!(code(&run(&args)), 0);
    let text = std::fs::read_to_string(&combined).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn single_map_inpaint_fills_only_dynamic_pixels() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert_eq!(code(&synth(&data, &["--threshold", "0"])), 0);
    let input = std::fs::read_dir(data.join("dynamic"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let out = tmp.path().join("filled.png");
    let res = run(&[
        "-q",
        "inpaint",
        "--method",
        "nn",
        "--in",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let tax = ClassTaxonomy::builtin("carla9").unwrap();
    let before = read_label_png(&input).unwrap();
    let after = read_label_png(&out).unwrap();
    assert_eq!(before.dims(), after.dims());
    for (b, a) in before.data().iter().zip(after.data()) {
        if tax.is_dynamic(*b) {
            assert!(tax.is_static(*a));
        } else {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn missing_predictions_give_a_partial_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert_eq!(code(&synth(&data, &["--threshold", "0"])), 0);
    let m = data.join("manifest.jsonl");
    let pred = tmp.path().join("pred");
    let out = run(&[
        "-q",
        "inpaint",
        "--method",
        "nn",
        "--manifest",
        m.to_str().unwrap(),
        "--out",
        pred.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let first = std::fs::read_dir(&pred)
        .unwrap()
        .map(|e| e.unwrap().path())
        .min()
        .unwrap();
    std::fs::remove_file(first).unwrap();
    let report = tmp.path().join("report");
    let args = [
        "eval",
        "--manifest",
        m.to_str().unwrap(),
        "--pred-dir",
        pred.to_str().unwrap(),
        "--method",
        "nn",
        "--out",
        report.to_str().unwrap(),
    ];
    let out = run(&args);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(report.join("accuracy.csv").is_file());
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let mut args = args;
    args[4] = empty.to_str().unwrap();
    assert_eq!(code(&run(&args)), 2);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(
        code(&run(&[
            "inpaint", "--method", "learned", "--in", "x.png", "--out", "y.png"
        ])),
        1
    );
    assert_eq!(code(&run(&["synth"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn explicit_flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 2, "synth": {"count": 4, "width": 64, "height": 48, "threshold": 0}}"#,
    )
    .unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = run(&[
        "-q",
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
        "--count",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let reference = [
        "-q",
        "synth",
        "--out",
        b.to_str().unwrap(),
        "--count",
        "2",
        "--width",
        "64",
        "--height",
        "48",
        "--seed",
        "2",
        "--threshold",
        "0",
    ];
    assert_eq!(code(&run(&reference)), 0);
    assert_eq!(read_tree(&a), read_tree(&b));
    let manifest = std::fs::read_to_string(a.join("manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 2);

    std::fs::write(&cfg, r#"{"synth": {"bogus": 1}}"#).unwrap();
    let out = run(&["synth", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}
