use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .display()
        .to_string()
}

fn out_dir(tmp: &tempfile::TempDir, name: &str) -> PathBuf {
    tmp.path().join(name)
}

#[test]
fn validate_without_config_uses_simple_walk() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(&tmp, "v");
    let res = pvlab(&["validate", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["passed"], true);
}

#[test]
fn spectrum_reports_single_delta_eigenvalue() {
    let tmp = tempfile::tempdir().unwrap();
    let out = out_dir(&tmp, "s");
    let res = pvlab(&["spectrum", "--config", &config("spectrum.toml"), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mut reader = csv::Reader::from_path(out.join("spectrum.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "r").unwrap();
    let last = reader.records().last().unwrap().unwrap();
    let r: f64 = last[col].parse().unwrap();
    assert!((r - 2.0 / 3f64.sqrt()).abs() < 1e-6, "r = {r}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for cfg in ["fk.toml", "doob.toml", "bs.toml"] {
        let a = out_dir(&tmp, &format!("a-{cfg}"));
        let b = out_dir(&tmp, &format!("b-{cfg}"));
        let kind = cfg.trim_end_matches(".toml");
        for dir in [&a, &b] {
            let res = pvlab(&[kind, "--config", &config(cfg), "--out", dir.to_str().unwrap(), "--threads", "3"]);
            assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        }
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(!names.is_empty());
        for n in names {
            assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
        }
    }
}

#[test]
fn seed_flag_changes_stochastic_output() {
    let tmp = tempfile::tempdir().unwrap();
    let a = out_dir(&tmp, "a");
    let b = out_dir(&tmp, "b");
    for (dir, seed) in [(&a, "1"), (&b, "2")] {
        let res = pvlab(&["fk", "--config", &config("fk.toml"), "--out", dir.to_str().unwrap(), "--seed", seed]);
        assert!(res.status.success());
    }
    assert_ne!(fs::read(a.join("fk.csv")).unwrap(), fs::read(b.join("fk.csv")).unwrap());
}

#[test]
fn missing_seed_for_stochastic_kind_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("fk.toml");
    fs::write(&path, "kind = \"fk\"\n[kernel]\npreset = \"simple1d\"\n").unwrap();
    let res = pvlab(&["fk", "--config", path.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("seed"));
}

#[test]
fn kind_mismatch_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let res = pvlab(&["green", "--config", &config("spectrum.toml"), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unknown_suite_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let res = pvlab(&["suite", "nonexistent", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn failed_invariant_names_module() {
    // Under the simple walk with an even potential the first-step law is
    // constant in the horizon, so no geometric convergence can be fitted.
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("gibbs.toml");
    fs::write(
        &path,
        format!(
            "include = \"{}\"\nkind = \"gibbs\"\n[potential]\nbox_radius = 80\n[run]\nhorizon_min = 10\nhorizon = 40\n",
            config("shared/anchor.toml")
        ),
    )
    .unwrap();
    let res = pvlab(&["gibbs", "--config", path.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("gibbs"), "{err}");
}

#[test]
fn suite_outputs_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let a = out_dir(&tmp, "seq");
    let b = out_dir(&tmp, "par");
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let res = pvlab(&["suite", "paper-repro", "--out", dir.to_str().unwrap(), "--threads", threads]);
        // One criterion is known to fail, so the exit code is 1.
        assert_eq!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for name in ["suite.csv", "summary.json", "criterion_01.json", "criterion_13.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}
