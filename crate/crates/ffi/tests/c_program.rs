use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "msgr.h"

int main(void) {
    MsgrMetric *m = NULL;
    if (msgr_metric_new("kasner", &m) != MSGR_STATUS_OK) return 10;
    double x[4] = {2.0, 0.1, 0.2, 0.3};
    double residual = 1.0;
    if (msgr_eh_field_equation_residual(m, x, &residual) != MSGR_STATUS_OK) return 11;
    if (residual > 1e-8) return 12;

    MsgrReport *r = NULL;
    if (msgr_check(m, MSGR_MODEL_EH, 3, 5, 1, &r) != MSGR_STATUS_OK) return 13;
    if (msgr_report_passed(r) != 1) return 14;
    MsgrFamilyRecord f;
    if (msgr_report_family(r, 0, &f) != MSGR_STATUS_OK) return 15;
    printf("%s %zu\n", f.name, f.points);
    msgr_report_free(r);
    msgr_metric_free(m);

    if (msgr_metric_new("nowhere", &m) != MSGR_STATUS_INVALID_ARGUMENT) return 16;
    if (strstr(msgr_last_error_message(), "nowhere") == NULL) return 17;
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
}

#[test]
fn header_compiles_and_links() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib_dir = target_dir();
    if !lib_dir.join("libmsgr_ffi.so").exists() {
        eprintln!("shared library not built in {}; skipping", lib_dir.display());
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg(format!("-I{}", include.display()))
        .arg(format!("-L{}", lib_dir.display()))
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lmsgr_ffi")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "holonomy 3");
}
