use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cubiclv"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cubiclv/fixtures").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn cubiclv")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn analyze_reports_interior_attractor() {
    let cfg = fixture("nd_theta-2_delta-1");
    let o = run(&["analyze", "--config", cfg.to_str().unwrap(), "--mu", "1e-3,1e-3", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.trim_start().starts_with("E3") && l.contains("AttractorNode")), "{out}");
    assert!(out.contains("oracle (seed 5): agrees"));
}

#[test]
fn analyze_at_origin_lists_only_e0() {
    let cfg = fixture("nd_theta2_delta1");
    let o = run(&["analyze", "--config", cfg.to_str().unwrap(), "--mu", "0,0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let eq: Vec<&str> = out.lines().filter(|l| l.starts_with("  E")).collect();
    assert_eq!(eq.len(), 1, "{out}");
    assert!(eq[0].contains("Degenerate"));
}

#[test]
fn zero_cross_coefficient_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"form":"raw","p11":{"(0,0)":1},"p12":{"(0,0)":0},"p21":{"(0,0)":1}}"#).unwrap();
    let o = run(&["analyze", "--config", cfg.to_str().unwrap(), "--mu", "1e-3,1e-3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p12(0) must be nonzero"));
}

#[test]
fn curves_csv_and_skips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curves.csv");
    let cfg = fixture("dz_theta1_delta1_1.2");
    let o = run(&[
        "curves",
        "--config",
        cfg.to_str().unwrap(),
        "--radii",
        "1e-3,1e-4",
        "--kinds",
        "D-,T3,H",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("H: skipped"));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("kind,branch,mu1,mu2,residual\n"));
    assert!(csv.lines().any(|l| l.starts_with("D-,")) && csv.lines().any(|l| l.starts_with("T3,")));

    let nd = fixture("nd_theta0.5_delta-0.5");
    let o = run(&["curves", "--config", nd.to_str().unwrap(), "--kinds", "H"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("H: ") && stdout(&o).contains("leading"), "{}", stdout(&o));
}

#[test]
fn portrait_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("nd_theta-2_delta-1");
    let mut files = Vec::new();
    for k in 0..2 {
        let svg = dir.path().join(format!("p{k}.svg"));
        let csv = dir.path().join(format!("p{k}.csv"));
        let o = run(&[
            "portrait",
            "--config",
            cfg.to_str().unwrap(),
            "--mu",
            "1e-3,1e-3",
            "--grid",
            "4",
            "--svg",
            svg.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        files.push((fs::read(svg).unwrap(), fs::read(csv).unwrap()));
    }
    assert_eq!(files[0], files[1]);
    assert!(String::from_utf8_lossy(&files[0].0).starts_with("<svg"));
}

#[test]
fn verify_passes_for_every_family() {
    for family in ["nondegenerate", "deltazero", "thetazero"] {
        let o = run(&["verify", "--family", family, "--r", "1e-3"]);
        assert_eq!(o.status.code(), Some(0), "{family}: {}", stdout(&o));
        assert!(stdout(&o).trim_end().ends_with("PASS"));
    }
}

#[test]
fn corrupted_fixture_fails_with_diff() {
    let dir = tempfile::tempdir().unwrap();
    let src = fixture("nd_theta2_delta1");
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(src).unwrap()).unwrap();
    let theta = &mut v["system"]["theta"]["(0,0)"];
    *theta = serde_json::json!(-theta.as_f64().unwrap());
    fs::write(dir.path().join("corrupt.json"), serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let o = run(&["verify", "--family", "nondegenerate", "--fixtures", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("CASE MISMATCH"), "{out}");
    assert!(out.contains("in table but not computed"), "{out}");
}

#[test]
fn doubly_degenerate_is_out_of_scope() {
    let o = run(&["verify", "--family", "doublydegenerate"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn thread_count_from_environment() {
    let o = bin().env("CUBICLV_THREADS", "2").args(["verify", "--family", "thetazero"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let o = bin().env("CUBICLV_THREADS", "zero").args(["verify", "--family", "thetazero"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
