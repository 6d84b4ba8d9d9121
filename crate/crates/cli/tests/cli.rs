use std::path::Path;
use std::process::{Command, Output};

fn thinmag(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thinmag"))
        .args(args)
        .env("THINMAG_OUTPUT_DIR", out)
        .output()
        .unwrap()
}

const SMALL: &str = r#"
experiment = "evolve"
seed = 3

[geometry]
nx = 4
ny = 4

[schedule]
steps = 3

[solver]
n_stability_samples = 10
"#;

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[dissipation]\nr_p = -1.0\n").unwrap();
    let o = thinmag(&["validate", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2: dissipation.r_p"));
    let o = thinmag(&["evolve", "/nonexistent.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, SMALL).unwrap();
    let o = thinmag(&["validate", good.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(dir.path().join("validate.json").exists());

    let bad = dir.path().join("spd.toml");
    let rows: Vec<String> = (0..6)
        .map(|i| {
            let r: Vec<String> = (0..6)
                .map(|j| if i == j { "1.0" } else if i + j == 1 { "2.0" } else { "0.0" }.to_string())
                .collect();
            format!("[{}]", r.join(", "))
        })
        .collect();
    std::fs::write(&bad, format!("{SMALL}\n[material]\nvoigt = [{}]\n", rows.join(", "))).unwrap();
    let o = thinmag(&["validate", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stdout).contains("elasticity"));
    let report = std::fs::read_to_string(dir.path().join("validate.json")).unwrap();
    assert!(report.contains("elasticity_positive_definite"));
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = thinmag(&["--deterministic", "run", cfg.to_str().unwrap()], &a);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = thinmag(&["run", cfg.to_str().unwrap()], &b);
    assert_eq!(o.status.code(), Some(0));
    for name in ["trajectory.csv", "audit.json"] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn defaults_print_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = thinmag(&["defaults"], dir.path());
    assert!(o.status.success());
    let cfg = dir.path().join("defaults.toml");
    std::fs::write(&cfg, &o.stdout).unwrap();
    let mut small = String::from_utf8(o.stdout).unwrap();
    small = small.replacen("nx = 16", "nx = 4", 1).replacen("ny = 16", "ny = 4", 1);
    std::fs::write(&cfg, small).unwrap();
    let o = thinmag(&["stray-diag", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("stray_diag.csv")).unwrap();
    assert!(text.starts_with("# config_sha256="));
}
