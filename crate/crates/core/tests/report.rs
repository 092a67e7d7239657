use std::process::Command;

use msgr::catalog::{builtin, parse_metric_file};
use msgr::report::{self, CheckConfig, Format, Model};
use msgr::Error;

fn cfg(model: Model, name: &str, points: usize, seed: u64) -> CheckConfig {
    let mut c = CheckConfig::new(model, builtin(name, &[]).unwrap(), name);
    c.points = points;
    c.seed = seed;
    c
}

fn msgr() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_msgr"));
    c.env_remove("MSGR_THREADS");
    c
}

#[test]
fn minkowski_passes_everything() {
    let r = report::run_check(&cfg(Model::Eh, "minkowski", 10, 1)).unwrap();
    assert!(r.pass);
    assert_eq!(r.verdict(), "pass");
    for f in &r.families {
        assert_eq!(f.points, 10);
        if f.family != "projectability" {
            assert_eq!(f.max_resid, 0.0, "{}", f.family);
        }
    }
}

#[test]
fn flrw_fails_the_einstein_constraint() {
    let r = report::run_check(&cfg(Model::Eh, "flrw", 10, 1)).unwrap();
    assert!(!r.pass);
    let f = r.family("einstein-constraint").unwrap();
    assert!(!f.pass);
    assert!(f.max_resid > 0.02);
    assert!(r.family("momenta-identity").unwrap().pass);
    assert!(r.family("holonomy").unwrap().pass);
}

#[test]
fn serial_and_parallel_reports_are_identical() {
    for model in [Model::Eh, Model::Ep] {
        let mut a = cfg(model, "schwarzschild", 8, 42);
        a.threads = Some(1);
        let mut b = a.clone();
        b.threads = Some(4);
        let ja = report::to_json(&report::run_check(&a).unwrap());
        let jb = report::to_json(&report::run_check(&b).unwrap());
        assert_eq!(ja, jb);
        let jc = report::to_json(&report::run_check(&a).unwrap());
        assert_eq!(ja, jc);
    }
}

#[test]
fn different_seeds_sample_different_points() {
    let a = report::run_check(&cfg(Model::Eh, "flrw", 3, 1)).unwrap();
    let b = report::run_check(&cfg(Model::Eh, "flrw", 3, 2)).unwrap();
    assert_ne!(
        a.family("einstein-constraint").unwrap().worst_point,
        b.family("einstein-constraint").unwrap().worst_point
    );
}

#[test]
fn json_has_stable_keys_and_17_digit_numbers() {
    let r = report::run_check(&cfg(Model::Ep, "desitter", 3, 5)).unwrap();
    let text = report::emit(&r, Format::Json);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["model", "metric", "seed", "families", "verdict", "version", "config"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["model"], "ep");
    assert_eq!(v["verdict"], "fail");
    let fam = &v["families"][0];
    for key in ["family", "points", "max_resid", "mean_resid", "tol", "pass", "worst_point"] {
        assert!(fam.get(key).is_some(), "{key}");
    }
    assert!(text.contains("\"tol\": 1.0000000000000000e-10"));
}

#[test]
fn csv_rows() {
    let r = report::run_check(&cfg(Model::Ep, "minkowski", 2, 5)).unwrap();
    let text = report::emit(&r, Format::Csv);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("family,points,max_resid,mean_resid,tol,pass"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), r.families.len());
    assert!(rows.iter().all(|l| l.split(',').count() == 6 && l.ends_with("true")));
}

#[test]
fn eh_equivalence_only_for_levi_civita() {
    let text = "[metric]\nname = twisted\ng 0 0 = -1\ng 1 1 = 1\ng 2 2 = 1\ng 3 3 = 1\n\
                [connection]\nGamma 1 2 3 = 0.5*x0\n";
    let spec = parse_metric_file(text).unwrap();
    let mut c = CheckConfig::new(Model::Ep, spec, "twisted");
    c.points = 3;
    let r = report::run_check(&c).unwrap();
    assert!(r.family("eh-equivalence").is_none());
    assert!(!r.family("torsion").unwrap().pass);
}

#[test]
fn tolerance_overrides() {
    let mut c = cfg(Model::Eh, "flrw", 4, 1);
    c.set_tolerance("einstein-constraint=1").unwrap();
    c.set_tolerance("einstein-constraint-derivative=1").unwrap();
    c.set_tolerance("field-equation=1").unwrap();
    let r = report::run_check(&c).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.family("field-equation").unwrap().tol, 1.0);
    assert!(matches!(c.set_tolerance("nonsense=1"), Err(Error::Usage(_))));
    assert!(matches!(c.set_tolerance("torsion=-1"), Err(Error::Usage(_))));
    assert!(matches!(c.set_tolerance("torsion"), Err(Error::Usage(_))));
    c.points = 0;
    assert!(report::run_check(&c).is_err());
}

// negative on a third of the x1 range, positive on the 3-point validation grid
const PATCHY: &str = "[metric]\nname = patchy\ng 0 0 = -1\ng 1 1 = 1 + sqrt((x1-0.5)*(x1-1)*(x1-2)*(x1-2.5))\n\
                      g 2 2 = 1\ng 3 3 = 1\n[domain]\nx1 = 0..3\n";

#[test]
fn too_many_singular_points_is_a_domain_error() {
    let spec = parse_metric_file(PATCHY).unwrap();
    let mut c = CheckConfig::new(Model::Eh, spec, "patchy");
    c.points = 30;
    assert!(matches!(report::run_check(&c), Err(Error::Domain(_))));
}

#[test]
fn cli_exit_codes() {
    let ok = msgr().args(["check", "--model", "eh", "--metric", "minkowski", "--points", "3"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["verdict"], "pass");

    let fail = msgr().args(["check", "--model", "eh", "--metric", "flrw", "--points", "3"]).output().unwrap();
    assert_eq!(fail.status.code(), Some(1));

    let unknown = msgr().args(["check", "--model", "eh", "--metric", "nope"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
    assert!(unknown.stdout.is_empty());
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("nope"));

    let bad_out = msgr()
        .args(["check", "--model", "eh", "--metric", "minkowski", "--points", "1", "--out", "/nonexistent/x/y.json"])
        .output()
        .unwrap();
    assert_eq!(bad_out.status.code(), Some(2));

    let bad_flag = msgr().args(["check", "--model", "xx", "--metric", "minkowski"]).output().unwrap();
    assert_eq!(bad_flag.status.code(), Some(2));

    let threads = msgr()
        .env("MSGR_THREADS", "zero")
        .args(["check", "--model", "eh", "--metric", "minkowski", "--points", "1"])
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn cli_domain_error_and_file_metric() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("patchy.metric");
    std::fs::write(&path, PATCHY).unwrap();
    let out =
        msgr().args(["check", "--model", "eh", "--metric", path.to_str().unwrap(), "--points", "30"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn cli_writes_report_file_and_threads_do_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let st = msgr()
            .env("MSGR_THREADS", threads)
            .args(["check", "--model", "ep", "--metric", "kasner", "--points", "6", "--seed", "9", "--out"])
            .arg(&path)
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("1", "a.json"), run("3", "b.json"));
}

#[test]
fn cli_catalog_and_jets() {
    let out = msgr().args(["catalog", "list"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), msgr::catalog::BUILTIN_NAMES.len());
    assert!(text.contains("schwarzschild"));

    let out = msgr().args(["jets", "--metric", "schwarzschild:m=1", "--at", "0,3,1.2,0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), msgr::fieldspace::eh::DIM);
    // g_{11} = 1/(1 − 2/3) at r = 3
    let g11 = text.lines().find(|l| l.starts_with("g_{11} ")).unwrap();
    let v: f64 = g11.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((v - 3.0).abs() < 1e-14);

    let out = msgr().args(["jets", "--metric", "minkowski", "--at", "0,0,0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
