use std::path::Path;
use std::process::{Command, Output};

fn hypersurf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypersurf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn degree_of_the_reflected_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypersurf(&["degree", "--entry", "reflected-2", "--level", "3", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s["rounded"], 1);
    assert!(s["residual"].as_f64().unwrap() < 0.1);
    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, s);
    let csv = std::fs::read_to_string(dir.path().join("degree.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("# hypersurf-csv v1 sphere-map"));
    assert!(dir.path().join("config.toml").exists());
}

#[test]
fn malformed_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\nbogus = true\n[immersion]\nentry = \"bumpy-2\"\n").unwrap();
    let out = hypersurf(&["curvature", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let out = hypersurf(&["curvature", "--entry", "no-such-entry"]);
    assert_ne!(out.status.code(), Some(0));
    let out = hypersurf(&["curvature", "--entry", "bumpy-2", "--interval", "(3,1)"]);
    assert_eq!(out.status.code(), Some(2));
    let out = hypersurf(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_verdict_exits_3() {
    let out = hypersurf(&["curvature", "--entry", "bumpy-2", "--interval", "(-1,0)", "--level", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));

    let out = hypersurf(&["deform", "--entry", "ball-sphere-flipped", "--kind", "normal-flow", "--level", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vertex"));
}

#[test]
fn config_file_drives_a_deformation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        r#"
seed = 7
mesh_level = 2

[immersion]
entry = "bumpy-halfspace-2"

[deform]
kind = "half-space-retraction"
mu = -2.0
steps = 9
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = hypersurf(&["deform", "-c", cfg.to_str().unwrap(), "-o", out_dir.to_str().unwrap(), "--obj"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out_dir);
    assert_eq!(s["pass"], true);
    assert_eq!(s["kind"], "half-space-retraction");
    let csv = std::fs::read_to_string(out_dir.join("homotopy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# hypersurf-csv v1 homotopy"));
    assert!(lines.next().unwrap().starts_with("s,lambda_min,lambda_max"));
    assert!(lines.count() >= 9);
    assert!(std::fs::read_dir(&out_dir).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().ends_with(".obj")));
}

#[test]
fn identical_runs_write_identical_summaries() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = hypersurf(&[
            "--threads",
            threads,
            "gauss",
            "--entry",
            "bumpy-halfspace-2",
            "--level",
            "3",
            "-o",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "summary.json"), read(&b, "summary.json"));
    assert_eq!(read(&a, "gauss.csv"), read(&b, "gauss.csv"));
    assert_eq!(summary(a.path())["observed"], "preserving");
}

#[test]
fn curvature_table_and_help() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypersurf(&["curvature", "--entry", "ellipsoid-211", "--level", "2", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("curvature.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("# hypersurf-csv v1 curvature"));
    assert_eq!(csv.lines().count(), 2 + 162);

    let help = hypersurf(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("verify-all"));
}
