//! End-to-end acceptance run: `verify-all --serial` through the binary, twice.
//!
//! Criteria 1 to 15 come from the first run's report; criterion 16 compares
//! every output file of the two runs byte for byte, except the manifest's
//! `wall_time`. Runs without the test harness so that the PASS/FAIL lines
//! are always printed.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

/// Criteria that fail at desk scale for reasons documented in the README.
const KNOWN_FAILURES: [u32; 2] = [7, 14];

fn run_verify_all(cfg: &Path, out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_jellium"))
        .args(["--serial", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("binary runs");
    status.code().expect("exit code")
}

fn read_dir(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            let name = e.file_name().to_string_lossy().into_owned();
            let mut text = std::fs::read_to_string(e.path()).unwrap();
            if name == "manifest.json" {
                let mut m: serde_json::Value = serde_json::from_str(&text).unwrap();
                m.as_object_mut()
                    .unwrap()
                    .remove("wall_time")
                    .expect("manifest has wall_time");
                text = m.to_string();
            }
            (name, text)
        })
        .collect()
}

/// `(id, passed, detail)` rows of report.csv.
fn report_rows(csv: &str) -> Vec<(u32, bool, String)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let mut it = l.splitn(4, ',');
            let id = it.next().unwrap().parse().unwrap();
            let _name = it.next().unwrap();
            let passed = it.next().unwrap() == "PASS";
            let detail = it.next().unwrap().trim_matches('"').replace("\"\"", "\"");
            (id, passed, detail)
        })
        .collect()
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("verify.cfg");
    std::fs::write(&cfg, "[run]\nkind = verify-all\n").unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));

    let code_a = run_verify_all(&cfg, &a);
    let first = read_dir(&a);
    let rows = report_rows(&first["report.csv"]);
    assert_eq!(
        rows.iter().map(|r| r.0).collect::<Vec<_>>(),
        (1..=15).collect::<Vec<_>>()
    );

    let code_b = run_verify_all(&cfg, &b);
    let second = read_dir(&b);
    let mut differing: Vec<&String> = first
        .keys()
        .filter(|k| first.get(*k) != second.get(*k))
        .collect();
    differing.extend(second.keys().filter(|k| !first.contains_key(*k)));
    let deterministic = differing.is_empty() && code_a == code_b;

    let mut unexpected = Vec::new();
    for (id, passed, detail) in &rows {
        let name = jellium::verify::criterion_name(*id);
        println!(
            "{} criterion {id:>2} ({name}): {detail}",
            if *passed { "PASS" } else { "FAIL" }
        );
        if !passed && !KNOWN_FAILURES.contains(id) {
            unexpected.push(*id);
        }
    }
    println!(
        "{} criterion 16 (determinism): {} files compared, {}",
        if deterministic { "PASS" } else { "FAIL" },
        first.len(),
        if deterministic {
            "all identical".to_string()
        } else {
            format!("differing: {differing:?}")
        }
    );
    if !deterministic {
        unexpected.push(16);
    }

    let any_failed = rows.iter().any(|r| !r.1);
    assert_eq!(
        code_a,
        if any_failed { 1 } else { 0 },
        "exit status reflects the checks"
    );
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
}
