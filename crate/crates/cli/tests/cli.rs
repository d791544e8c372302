//! Exit-code and output-file behaviour of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heavenly"))
}

fn pstar_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/pstar.json")
}

fn write_config(dir: &Path, mutate: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(pstar_config()).unwrap()).unwrap();
    mutate(&mut cfg);
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn domain_certifies_canonical_box() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["domain", "--config"])
        .arg(pstar_config())
        .args(["--points", "64", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("domain.json")).unwrap())
            .unwrap();
    assert_eq!(rep["ok"], true);
    assert!(rep["gamma_min"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_passes_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let out1 = tmp.path().join("a");
    let out2 = tmp.path().join("b");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["verify", "--config"])
            .arg(pstar_config())
            .args(["--points", "24", "--seed", "7", "--out"])
            .arg(out)
            .env("HEAVENLY_THREADS", "2")
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    for name in ["verify.json", "verify.csv"] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("verify.json")).unwrap()).unwrap();
    assert_eq!(rep["ok"], true);
    assert!(rep["suites"].as_array().unwrap().len() >= 8);
}

#[test]
fn verify_exit_two_on_regularity_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), |v| {
        v["params"]["A"] = serde_json::json!(1000.0);
    });
    let status = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--points", "16", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn verify_exit_one_on_unachievable_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), |v| {
        v["tolerances"] = serde_json::json!({"cma": 1e-30});
    });
    let status = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--points", "16", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn config_errors_exit_64() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["verify", "--config", "/nonexistent/config.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(64));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let status = bin()
        .args(["verify", "--config"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(64));

    // c1 = 0 violates the parameter contract
    let cfg = write_config(tmp.path(), |v| {
        v["params"]["c1"] = serde_json::json!(0.0);
    });
    let status = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(64));
}

#[test]
fn killing_verdicts_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["killing", "--config"])
        .arg(pstar_config())
        .args(["--points", "120", "--degree", "2", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(
        status.code(),
        Some(0),
        "exact solution should be noninvariant"
    );
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("killing.json")).unwrap())
            .unwrap();
    assert_eq!(rep["verdict"], "noninvariant");
    assert!(rep["singular_values"].as_array().unwrap().len() >= 17);

    let status = bin()
        .args(["killing", "--config"])
        .arg(pstar_config())
        .args([
            "--points",
            "120",
            "--degree",
            "2",
            "--provider",
            "flat",
            "--out",
        ])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(
        status.code(),
        Some(3),
        "flat potential has a symmetry kernel"
    );

    let status = bin()
        .args(["killing", "--config"])
        .arg(pstar_config())
        .args(["--points", "4", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(64), "too few points is a usage error");
}

#[test]
fn scan_flags_irregular_nodes_and_flat_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["scan", "--config"])
        .arg(pstar_config())
        .args([
            "--observable",
            "kretschmann",
            "--grid",
            "2,2,2,2",
            "--provider",
            "flat",
            "--out",
        ])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("scan.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<_> = line.split(',').collect();
        assert_eq!(cols[4].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cols[5], "1");
    }

    // the full layout carries every metric/curvature column
    let status = bin()
        .args(["scan", "--config"])
        .arg(pstar_config())
        .args(["--observable", "full", "--grid", "1,2,1,1", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("scan.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,x,y,z,a,b,c,Q,kretschmann,ricci_max,duality_max,regular"
    );
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').count(), 12);
    }

    // a box crossing Gamma = 0 produces NaN-flagged rows, not a crash
    let cfg = write_config(tmp.path(), |v| {
        v["box"]["x"] = serde_json::json!([0.8, 40.0]);
        v["params"]["A"] = serde_json::json!(0.35);
    });
    let status = bin()
        .args(["scan", "--config"])
        .arg(&cfg)
        .args(["--observable", "a", "--grid", "1,6,2,2", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("scan.csv")).unwrap();
    let flags: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert!(
        flags.contains(&"0"),
        "expected at least one flagged node:\n{text}"
    );
    assert!(
        flags.contains(&"1"),
        "expected at least one regular node:\n{text}"
    );
    for line in text.lines().skip(1) {
        let cols: Vec<_> = line.split(',').collect();
        if cols[5] == "0" {
            assert_eq!(cols[4], "nan");
        }
    }
}

#[test]
fn scan_plateau_at_large_x() {
    // along x with sigma tuned to zero, a approaches branch/|nu|
    let tmp = tempfile::tempdir().unwrap();
    let t = 0.2f64;
    let c1 = 0.5f64;
    let mu = (3.0 * c1 * t).cos();
    let nu = (2.0 * c1 * t).sin();
    let sigma0 = mu / 8.0;
    let theta: f64 = -c1 * t;
    let z = -sigma0 / (c1 * theta.cos());
    let cfg = write_config(tmp.path(), |v| {
        v["box"]["t"] = serde_json::json!([t, t]);
        v["box"]["x"] = serde_json::json!([40.0, 60.0]);
        v["box"]["y"] = serde_json::json!([0.0, 0.0]);
        v["box"]["z"] = serde_json::json!([z, z]);
    });
    // degenerate intervals are rejected; widen them infinitesimally
    let mut cfgv: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    cfgv["box"]["t"] = serde_json::json!([t, t + 1e-9]);
    cfgv["box"]["y"] = serde_json::json!([0.0, 1e-9]);
    cfgv["box"]["z"] = serde_json::json!([z, z + 1e-9]);
    std::fs::write(&cfg, serde_json::to_string(&cfgv).unwrap()).unwrap();
    let status = bin()
        .args(["scan", "--config"])
        .arg(&cfg)
        .args(["--observable", "a", "--grid", "1,5,1,1", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(tmp.path().join("scan.csv")).unwrap();
    let values: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    let limit = 1.0 / nu.abs();
    for v in &values {
        assert!(
            (v - limit).abs() < 1e-6,
            "plateau value {v} vs limit {limit}"
        );
    }
}

#[test]
fn flow_check_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["flow-check", "--config"])
        .arg(pstar_config())
        .args(["--grid-n", "16", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("flow.json")).unwrap())
            .unwrap();
    assert_eq!(rep["pass"], true);
    // slab dumps use the flat grid format: header nx,ny,h then one value per line
    let slab = std::fs::read_to_string(tmp.path().join("flow_a_slab.csv")).unwrap();
    let header = slab.lines().next().unwrap();
    assert!(header.starts_with("16,16,"), "unexpected header {header}");
    assert_eq!(slab.lines().count(), 1 + 16 * 16);
}

#[test]
fn epsilon_override_is_applied() {
    // eps = -1 connection ops are unsupported, so verify must fail cleanly;
    // domain certification still works
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["domain", "--config"])
        .arg(pstar_config())
        .args(["--points", "32", "--epsilon", "-1", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    // branch +1 with eps -1 keeps Q > 0 on this box (b^2 + c^2 > 1)
    assert_eq!(status.code(), Some(0));
}
