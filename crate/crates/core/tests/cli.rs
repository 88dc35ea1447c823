use std::path::Path;
use std::process::Command;

fn helical(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_helical")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    let text = format!("{body}\noutput_dir = {:?}\n", dir.join("out"));
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// `(r, u)` columns of a field file.
fn read_field(path: &Path) -> Vec<(f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# j k p r"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
            (v[3], v[8])
        })
        .collect()
}

const CONSTANT: &str = r#"
dimension = 2
omega = 2.0
radius = 1.0
resolution = [128]
n_phi = 8
m_max = 3
source = "constant"
source_value = 1.0
"#;

#[test]
fn solve_constant_source_matches_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{CONSTANT}boundary = \"compatible\""));
    let (code, _, err) = helical(&["solve", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    let rows = read_field(&dir.path().join("out/field.txt"));
    // u = ρ²/4 up to a constant
    let shift: Vec<f64> = rows.iter().map(|(r, u)| u - r * r / 4.0).collect();
    let spread = shift.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - shift.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1e-4, "{spread}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert!(dir.path().join("out/modes.txt").exists());
}

#[test]
fn solve_incompatible_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{CONSTANT}boundary = \"zero\""));
    let (code, _, err) = helical(&["solve", "--config", &cfg]);
    assert_eq!(code, 2, "{err}");
    let report = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    assert!(report.contains("incompatible data"), "{report}");

    let (code, _, err) = helical(&["solve", "--config", &cfg, "--allow-incompatible"]);
    assert_eq!(code, 0, "{err}");
    let report = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    assert!(report.contains("override_shift"));
}

#[test]
fn solve_zero_data_gives_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 3\nomega = 0.5\nradius = 1.0\nresolution = [16, 16]\nn_phi = 8\nm_max = 2\nboundary = \"zero\"");
    let (code, _, err) = helical(&["solve", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    assert!(read_field(&dir.path().join("out/field.txt")).iter().all(|(_, u)| *u == 0.0));
}

#[test]
fn bad_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nomega = 1.0\nradius = 1.0\nresolution = [32]\nbogus = 1");
    let (code, _, err) = helical(&["solve", "--config", &cfg]);
    assert_ne!(code, 0);
    assert!(err.contains("bogus") && err.contains("line"), "{err}");
}

#[test]
fn verify_is_deterministic_and_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nomega = 1.0\nradius = 2.0\nresolution = [32]\nsamples = 20000");
    let read = || std::fs::read_to_string(dir.path().join("out/suite_inequality.json")).unwrap();
    let (code, out, err) = helical(&["verify", "--config", &cfg, "--suite", "inequality", "--seed", "7"]);
    assert_eq!(code, 0, "{out}{err}");
    let first = read();
    assert!(first.contains("\"seed\": 7"));
    helical(&["verify", "--config", &cfg, "--suite", "inequality", "--seed", "7"]);
    assert_eq!(first, read());
}

#[test]
fn verify_nullspace_and_compat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nomega = 1.0\nradius = 2.0\nresolution = [32]\nm_max = 2");
    for suite in ["nullspace", "compat"] {
        let (code, out, err) = helical(&["verify", "--config", &cfg, "--suite", suite]);
        assert_eq!(code, 0, "{suite}: {out}{err}");
    }
}

#[test]
fn verify_unknown_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nomega = 1.0\nradius = 2.0\nresolution = [32]");
    let (code, _, err) = helical(&["verify", "--config", &cfg, "--suite", "nope"]);
    assert_eq!(code, 4);
    assert!(err.contains("unknown suite"));
}

#[test]
fn convergence_table_orders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dimension = 2\nomega = 0.3\nradius = 1.0\nresolution = [32]\nn_phi = 8\nm_max = 2\nmanufactured_modes = 2\nsource = \"manufactured\"\nboundary = \"manufactured\"",
    );
    let (code, out, err) = helical(&["convergence", "--config", &cfg, "--refine", "4"]);
    assert_eq!(code, 0, "{out}{err}");
    assert_eq!(out.lines().count(), 5, "{out}");
}

#[test]
fn convergence_needs_manufactured_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nomega = 1.0\nradius = 1.0\nresolution = [32]");
    let (code, _, err) = helical(&["convergence", "--config", &cfg]);
    assert_eq!(code, 4);
    assert!(err.contains("manufactured"), "{err}");
}
