use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config_path(name: &str) -> PathBuf {
    repo_root().join("configs").join(name)
}

fn dpfilter(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dpfilter"));
    cmd.args(args)
        .env_remove("DPFILTER_SEED")
        .env_remove("RUST_LOG");
    if let Some(s) = seed_env {
        cmd.env("DPFILTER_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn run_config(sub: &str, config: &Path, out: &Path) -> Output {
    dpfilter(
        &[
            sub,
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    )
}

fn patched_config(dir: &Path, base: &str, f: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value =
        serde_json::from_str(&std::fs::read_to_string(config_path(base)).unwrap()).unwrap();
    f(&mut v);
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn negative_dt_is_rejected_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched_config(dir.path(), "decohere.json", |v| {
        v["run"]["dt"] = (-0.01).into()
    });
    let o = run_config("decohere", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.dt"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched_config(dir.path(), "decohere.json", |v| {
        v["grid"]["spacing"] = 0.5.into()
    });
    let o = run_config("decohere", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.spacing"), "{}", stderr(&o));
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));
}

#[test]
fn sizing_errors_carry_a_hint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched_config(dir.path(), "kernel_check.json", |v| {
        v["grid"]["n_per_axis"] = 17.into()
    });
    let o = run_config("kernel-check", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("cap"), "{e}");
}

#[test]
fn wrong_mode_and_missing_config_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        "decohere",
        &config_path("jump.json"),
        &dir.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.mode"));
    let o = dpfilter(&["decohere"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
    let o = dpfilter(&["selftest", "--threads", "0"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = dpfilter(&["no-such-command"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kernel_check_prints_the_square_root_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run_config("kernel-check", &config_path("kernel_check.json"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("square root residual"));
    assert!(!text.contains("FAIL"));
    let sqrt: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sqrt_check.json")).unwrap())
            .unwrap();
    let target = std::f64::consts::PI.powi(2) / 4.0;
    for row in sqrt["rows"].as_array().unwrap() {
        for key in ["inner", "outer"] {
            assert!((row[key].as_f64().unwrap() - target).abs() <= 1e-6);
        }
        let r = row["r"].as_f64().unwrap();
        assert!((row["assembled"].as_f64().unwrap() * r - 1.0).abs() <= 1e-6);
    }
}

fn hash_file(p: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(p).unwrap()))
}

#[test]
fn manifest_lists_every_file_with_its_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run_config("filter", &config_path("filter.json"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let listed: BTreeMap<String, String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            (
                f["path"].as_str().unwrap().to_string(),
                f["sha256"].as_str().unwrap().to_string(),
            )
        })
        .collect();
    let on_disk: BTreeMap<String, String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                hash_file(&p),
            )
        })
        .collect();
    assert_eq!(listed, on_disk);
    for name in [
        "truth.csv",
        "filter.csv",
        "innovations.csv",
        "record.jsonl",
        "diagnostics.json",
    ] {
        assert!(listed.contains_key(name), "{name}");
    }
    // CSV headers are declared
    let filter_entry = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["path"] == "filter.csv")
        .unwrap();
    let header = std::fs::read_to_string(out.join("filter.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    let cols: Vec<&str> = filter_entry["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert_eq!(header, cols.join(","));
    assert_eq!(cols.last(), Some(&"fidelity"));
    let cfg_bytes = std::fs::read(config_path("filter.json")).unwrap();
    assert_eq!(
        manifest["config"]["sha256"],
        hex::encode(Sha256::digest(cfg_bytes))
    );
    assert_eq!(manifest["seed"]["source"], "config");
    assert_eq!(manifest["subcommand"], "filter");
}

#[test]
fn seed_environment_variable_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("jump.json");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run_config("jump", &cfg, &a).status.code(), Some(0));
    let o = dpfilter(
        &[
            "jump",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
        ],
        Some("99"),
    );
    assert_eq!(o.status.code(), Some(0));
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"]["effective"], 99);
    assert_eq!(manifest["seed"]["source"], "env:DPFILTER_SEED");
    assert_eq!(manifest["seed"]["config_value"], 11);
    assert_ne!(
        std::fs::read(a.join("record.jsonl")).unwrap(),
        std::fs::read(b.join("record.jsonl")).unwrap()
    );
    let o = dpfilter(
        &[
            "jump",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
        ],
        Some("abc"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DPFILTER_SEED"));
}

#[test]
fn decohere_writes_the_coherence_column_and_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run_config("decohere", &config_path("decohere.json"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == "coherence:3:12")
        .expect("coherence column");
    let diag: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("diagnostics.json")).unwrap())
            .unwrap();
    let lambda = diag["lambda_analytic"].as_f64().unwrap();
    // |ρ₃,₁₂(t)| = ½ e^{−Λt} with H = 0
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let want = 0.5 * (-lambda * f[0]).exp();
        assert!(
            (f[col] - want).abs() <= 1e-9 * want.max(1e-3),
            "t={} {} vs {want}",
            f[0],
            f[col]
        );
    }
}

#[test]
fn selftest_is_reproducible_and_catches_the_injected_fault() {
    let a = dpfilter(&["selftest"], None);
    let b = dpfilter(&["selftest", "--threads", "2"], None);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stdout)
    );
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for name in [
        "kernel_psd",
        "mercer_reconstruction",
        "dissipation_psd",
        "ito_identity",
        "pure_density_equivalence",
    ] {
        assert!(
            text.lines()
                .any(|l| l.starts_with("PASS") && l.contains(name)),
            "{name}"
        );
    }
    let f = dpfilter(&["selftest", "--inject-fault", "g-sign"], None);
    assert_eq!(f.status.code(), Some(1));
    let text = String::from_utf8(f.stdout).unwrap();
    let failed: Vec<&str> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failed.len(), 1, "{text}");
    assert!(failed[0].contains("dissipation_psd"));
}

#[test]
fn selftest_report_files_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("st");
    let o = dpfilter(&["selftest", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    assert_eq!(manifest["passed"], true);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("selftest.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}
