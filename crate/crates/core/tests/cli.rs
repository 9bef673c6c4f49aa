use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_event-warp"));
    c.env("EVENT_WARP_THREADS", "1");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn field<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {report}"))
}

fn scene(dir: &Path, name: &str, format: &str) -> PathBuf {
    let path = dir.join(name);
    ok(&[
        "simulate", "scene", "--theta", "12,-4", "--features", "6", "--feature-rate", "300", "--noise-ratio", "1",
        "--width", "60", "--height", "40", "--delta", "1", "--seed", "5", "--format", format, "-o", s(&path),
    ]);
    path
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = scene(dir.path(), "a.evt", "binary");
    let b = scene(dir.path(), "b.evt", "binary");
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    let n = dir.path().join("n.txt");
    let out = ok(&["simulate", "noise", "--rate", "500", "--width", "20", "--height", "10", "--exact", "--format", "text", "-o", s(&n)]);
    assert_eq!(field(&out, "events"), "500");
    assert_eq!(std::fs::read_to_string(&n).unwrap().lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).count(), 500);
}

#[test]
fn estimate_recovers_scene_motion() {
    let dir = tempfile::tempdir().unwrap();
    let path = scene(dir.path(), "s.evt", "binary");
    let out = ok(&["estimate", s(&path), "--start", "10,-2", "--corrected"]);
    let theta: Vec<f64> = field(&out, "theta_hat").split(',').map(|v| v.parse().unwrap()).collect();
    assert!((theta[0] - 12.0).abs() < 1.0 && (theta[1] + 4.0).abs() < 1.0, "{out}");
    assert_eq!(out, ok(&["estimate", s(&path), "--start", "10,-2", "--corrected"]));
}

#[test]
fn text_input_needs_matching_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let path = scene(dir.path(), "s.txt", "text");
    let o = run(&["estimate", s(&path), "--width", "10", "--height", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    ok(&["estimate", s(&path), "--width", "60", "--height", "40"]);
}

#[test]
fn landscape_writes_image_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = scene(dir.path(), "s.evt", "binary");
    let img = dir.path().join("l.png");
    let out = ok(&["landscape", s(&path), "--bounds", "0,20,-10,5", "--res", "2", "--corrected", "-o", s(&img)]);
    assert_eq!(field(&out, "argmax"), "12,-4");
    let png = std::fs::read(&img).unwrap();
    assert!(png.starts_with(b"\x89PNG"));
    let values = std::fs::read_to_string(dir.path().join("l.txt")).unwrap();
    let rows: Vec<&str> = values.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split_whitespace().count() == 11));

    let again = dir.path().join("m.pgm");
    ok(&["landscape", s(&path), "--bounds", "0,20,-10,5", "--res", "2", "--corrected", "-o", s(&again)]);
    assert_eq!(values, std::fs::read_to_string(dir.path().join("m.txt")).unwrap());
    assert!(std::fs::read(&again).unwrap().starts_with(b"P5\n11 8\n255\n"));
}

#[test]
fn noise_landscape_is_ring_raw_and_flat_corrected() {
    let dir = tempfile::tempdir().unwrap();
    let n = dir.path().join("n.evt");
    ok(&["simulate", "noise", "--rate", "1000000", "--width", "30", "--height", "30", "--exact", "--seed", "2", "-o", s(&n)]);
    let read = |p: &Path| -> Vec<f64> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .flat_map(|l| l.split_whitespace().map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect()
    };
    let raw = dir.path().join("raw.png");
    let cor = dir.path().join("cor.png");
    ok(&["landscape", s(&n), "--bounds", "40", "--res", "8", "-o", s(&raw)]);
    ok(&["landscape", s(&n), "--bounds", "40", "--res", "8", "--corrected", "-o", s(&cor)]);
    let (raw, cor) = (read(&raw.with_extension("txt")), read(&cor.with_extension("txt")));
    let peak = raw.iter().copied().fold(0.0, f64::max);
    // 11x11 lattice: the centre is a minimum of the raw surface; the corrected
    // residue is pixel discretisation on a small sensor
    assert!(raw[60] < 0.1 * peak);
    let worst = cor.iter().copied().fold(0.0, f64::max);
    assert!(worst <= 0.1 * peak, "corrected surface is not flat: {worst} vs peak {peak}");
}

#[test]
fn map_writes_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = scene(dir.path(), "s.evt", "binary");
    let img = dir.path().join("map.pgm");
    let vals = dir.path().join("map.txt");
    let out = ok(&["map", s(&path), "--theta", "12,-4", "--corrected", "--kernel", "bilinear", "-o", s(&img), "--values", s(&vals)]);
    assert_eq!(field(&out, "canvas"), "72x44");
    assert_eq!(std::fs::read_to_string(&vals).unwrap().lines().count(), 44);
}

#[test]
fn roc_reports_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let path = scene(dir.path(), "s.evt", "binary");
    let report = dir.path().join("roc.txt");
    let out = ok(&["roc", s(&path), "--gt", "12,-4", "--bounds", "6,18,-10,2", "--step", "3", "--corrected", "-o", s(&report)]);
    assert_eq!(std::fs::read_to_string(&report).unwrap(), out);
    assert_eq!(field(&out, "runs"), "25");
    let roc: f64 = field(&out, "roc_percent").parse().unwrap();
    assert!((0.0..=100.0).contains(&roc));
    assert_eq!(out, ok(&["roc", s(&path), "--gt", "12,-4", "--bounds", "6,18,-10,2", "--step", "3", "--corrected"]));
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    assert_eq!(run(&["estimate"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["map", "x.evt", "--theta", "1", "-o", "m.png"]).status.code(), Some(2));
    assert_eq!(run(&["estimate", "/nonexistent/file.evt"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let path = scene(dir.path(), "s.evt", "binary");
    let o = run(&["landscape", s(&path), "-o", s(&dir.path().join("l.txt"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin().env("EVENT_WARP_THREADS", "many").args(["estimate", s(&path)]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_subcommand_reports_checks() {
    let o = run(&["oracle", "--events", "20000"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().count(), 5);
    assert!(text.contains("PASS variance_1d_peak"));
}
