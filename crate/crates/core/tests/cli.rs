use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pfilin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfilin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn validate_on_shipped_fixtures_succeeds() {
    let fixtures = configs().join("fixtures");
    let out = pfilin(&["validate", "--fixtures", fixtures.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn bounds_for_three_arm_instance() {
    let out = pfilin(&["bounds", "--means", "1;-1;-1", "--sigma", "0.1", "--epsilon", "0.5", "--delta", "0.1"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let line = stdout.lines().find(|l| l.starts_with("sample_lower_bound")).unwrap();
    let value: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
    let expected = 0.01 / 3.0 * (0.25 + 0.25 + 0.25) * 7.5f64.ln();
    assert!((value - expected).abs() < 1e-12);
}

#[test]
fn errors_carry_distinct_prefixes() {
    let dir = tempfile::tempdir().unwrap();

    let out = pfilin(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[io]:"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "experiment = \"custom\"\nunknown_key = 3\n").unwrap();
    let out = pfilin(&["run", "--config", bad.to_str().unwrap()]);
    assert!(stderr(&out).starts_with("error[config]:"), "{}", stderr(&out));

    let range = dir.path().join("range.toml");
    std::fs::write(&range, "experiment = \"custom\"\ndelta = 2.0\n").unwrap();
    let out = pfilin(&["run", "--config", range.to_str().unwrap()]);
    assert!(stderr(&out).starts_with("error[parameter]:"), "{}", stderr(&out));

    let out = pfilin(&["frobnicate"]);
    assert!(stderr(&out).starts_with("error[usage]:"));
}

#[test]
fn gen_data_writes_surrogate_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surrogate.csv");
    let out = pfilin(&["gen-data", "--out", path.to_str().unwrap(), "--seed", "3"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("objective_0,objective_1"));
    assert_eq!(lines.count(), 16 * 64);
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn assert_same(a: &[(String, Vec<u8>)], b: &[(String, Vec<u8>)], skip: &[&str]) {
    let keep = |t: &[(String, Vec<u8>)]| -> Vec<(String, Vec<u8>)> {
        t.iter().filter(|(n, _)| !skip.contains(&n.as_str())).cloned().collect()
    };
    let (a, b) = (keep(a), keep(b));
    let names = |t: &[(String, Vec<u8>)]| t.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    assert_eq!(names(&a), names(&b));
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn repeated_runs_produce_identical_trees() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("pfi_compare.toml");
    let mut trees = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "1"), ("c", "0")] {
        let out_dir = dir.path().join(name);
        let out = pfilin(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--reps",
            "20",
            "--seed",
            "7",
            "--workers",
            workers,
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        trees.push(tree(&out_dir));
    }
    assert!(trees[0].iter().any(|(name, _)| name == "aggregate.csv"));
    assert!(trees[0].iter().any(|(name, _)| name == "manifest.json"));
    assert_same(&trees[0], &trees[1], &[]);
    // the manifest echoes the worker count; every CSV must match
    assert_same(&trees[0], &trees[2], &["manifest.json"]);
}
