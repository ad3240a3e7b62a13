use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn elab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn rigidity_report_to_file_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = elab(&["prove-rigidity", "-o", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["dimensions"]["complex"], 6);
    assert_eq!(v["dimensions"]["real"], 5);
    assert!(v["eliminated_basis"]
        .as_array()
        .is_some_and(|b| !b.is_empty()));
    assert!(v["sos_generators"].is_array());

    let o = elab(&["prove-rigidity"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dimensions"]["real"], 5);
}

#[test]
fn rigidity_under_lex_order() {
    let o = elab(&["prove-rigidity", "--order", "lex"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["vanishing_jets"].as_array().unwrap().len(), 6);
}

#[test]
fn identities() {
    let o = elab(&["verify-identities", "thm52"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("reduces to 0"));

    let o = elab(&["verify-identities", "thm56"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("f1^ + f4^ - f5^ = 0"));

    let o = elab(&["verify-identities", "reflections", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
}

#[test]
fn gerstner_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = elab(&[
        "flow",
        "--preset",
        "gerstner",
        "--k",
        "1",
        "--grid",
        "64x64",
        "--t",
        "0:0.01:6.28",
        "-o",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(dir.path());
    assert_eq!(r["pass"], true);
    let checks: Vec<&str> = r["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["check"].as_str().unwrap())
        .collect();
    assert!(checks.contains(&"euler_residual") && checks.contains(&"det_drift"));
    let traj = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert!(traj.starts_with("t,alpha1,alpha2,x1,x2"));
    // 629 times × 8 × 8 labels plus the header.
    assert_eq!(traj.lines().count(), 629 * 64 + 1);
}

#[test]
fn kirchhoff_example_passes() {
    let o = elab(&[
        "flow",
        "--preset",
        "kirchhoff",
        "--s0",
        "0.5",
        "--mu0",
        "1",
        "--grid",
        "16x16",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("eulerian_divergence"));
}

#[test]
fn equal_speeds_rejected() {
    let o = elab(&["flow", "--family", "family2", "--mu", "1", "--theta", "1"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("coincide"));
}

#[test]
fn failing_check_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // The default CR pair solves the rotation system, not a reflected one.
    let o = elab(&[
        "flow",
        "--preset",
        "family2",
        "--set",
        "reflect1=true",
        "--grid",
        "16x16",
        "-o",
        out,
    ]);
    assert_eq!(code(&o), 2);
    let r = report(dir.path());
    assert_eq!(r["pass"], false);
    assert!(r["error"].as_str().unwrap().contains("residual"));

    // An impossible tolerance fails a check that otherwise passes.
    let o = elab(&[
        "flow",
        "--preset",
        "kirchhoff",
        "--grid",
        "16x16",
        "--set",
        "tol_det=1e-300",
        "-o",
        out,
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(report(dir.path())["pass"], false);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# Kirchhoff ellipse\npreset = kirchhoff\ns0 = 0.4   # stretch\nmu0 = 2\ngrid = 12x12\nt = 0:0.5:2\n").unwrap();
    let out = dir.path().join("out");
    let o = elab(&[
        "flow",
        "-c",
        cfg.to_str().unwrap(),
        "--s0",
        "0.6",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert!(r["description"].as_str().unwrap().contains("s0 = 0.6"));
    let traj = fs::read_to_string(out.join("trajectories.csv")).unwrap();
    assert_eq!(traj.lines().count(), 5 * 64 + 1);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "preset = gerstner\nwavelength = 3\n").unwrap();
    let o = elab(&["flow", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("wavelength"));

    for args in [
        &["flow", "--preset", "gerstner", "--set", "tol_euler=0"][..],
        &["flow", "--preset", "nonsense"][..],
        &["flow", "--k", "1"][..],
        &["flow", "--preset", "gerstner", "--grid", "64by64"][..],
        &["flow", "--preset", "gerstner", "--t", "1:0.1:0"][..],
        &["flow", "-c", "/nonexistent/elab.cfg"][..],
        &["no-such-command"][..],
    ] {
        assert_eq!(
            code(&elab(args)),
            if args[0] == "flow" { 1 } else { 2 },
            "{args:?}"
        );
    }
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = elab(&[
            "flow",
            "--preset",
            "family2",
            "--grid",
            "20x20",
            "--t",
            "0:0.25:2",
            "-o",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    for f in ["report.json", "trajectories.csv", "field.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn elliptic_and_family3_presets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = elab(&[
        "flow",
        "--preset",
        "elliptic-inverse",
        "--grid",
        "32x32",
        "--set",
        "tol_residual=1e-4",
        "-o",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(
        report(dir.path())["reports"][0]["metrics"]["max_error"]
            .as_f64()
            .unwrap()
            < 1e-3
    );
    assert!(dir.path().join("field.csv").exists());

    let o = elab(&[
        "flow", "--preset", "family3", "--grid", "24x24", "--t", "0:0.25:1", "-o", out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(dir.path());
    let det = r["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["check"] == "det_drift")
        .unwrap();
    // φ depends on α only through u3, so dφ has rank one.
    assert_eq!(det["metrics"]["min_abs_det0"].as_f64().unwrap(), 0.0);
}
