mod common;

use std::path::Path;
use std::process::Command;

use atlas_core::app::{run_pipeline, Stage};

fn run_into(out: &Path) -> atlas_core::app::RunReport {
    run_pipeline(&common::fixture_config(out)).unwrap()
}

fn diff(a: &[(String, Vec<u8>)], b: &[(String, Vec<u8>)]) -> Vec<String> {
    let names = |t: &[(String, Vec<u8>)]| t.iter().map(|f| f.0.clone()).collect::<std::collections::BTreeSet<_>>();
    let mut out: Vec<String> = names(a).symmetric_difference(&names(b)).map(|n| format!("only in one tree: {n}")).collect();
    for (name, bytes) in a {
        if let Some((_, other)) = b.iter().find(|f| &f.0 == name) {
            if other != bytes {
                out.push(format!("differs: {name}"));
            }
        }
    }
    out
}

#[test]
fn matches_goldens() {
    let out = tempfile::tempdir().unwrap();
    let report = run_into(out.path());
    assert_eq!(report.exit_code(), 0);
    if std::env::var("ATLAS_BLESS").is_ok_and(|v| v == "1") {
        common::replace_tree(out.path(), &common::golden_dir());
    }
    let d = diff(&common::read_tree(out.path()), &common::read_tree(&common::golden_dir()));
    assert!(d.is_empty(), "output differs from goldens (rerun with ATLAS_BLESS=1 after review):\n{}", d.join("\n"));
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(a.path());
    run_into(b.path());
    assert!(diff(&common::read_tree(a.path()), &common::read_tree(b.path())).is_empty());
    // rerunning into a used directory replaces stale files
    std::fs::write(a.path().join("citya/stale.txt"), "x").unwrap();
    run_into(a.path());
    assert!(!a.path().join("citya/stale.txt").exists());
}

#[test]
fn a_broken_city_does_not_stop_the_others() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = common::fixture_config(out.path());
    let citya = cfg.cities.iter_mut().find(|c| c.name == "citya").unwrap();
    citya.crimes_path = citya.crimes_path.with_file_name("missing.csv");
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.exit_code(), 2);
    let failures: Vec<_> = report.failures().collect();
    assert_eq!(failures.len(), 1);
    assert_eq!((failures[0].city.as_str(), failures[0].stage), ("citya", Stage::Ingest));
    assert!(failures[0].to_string().starts_with("citya: ingest failed"));

    assert!(!out.path().join("citya").exists());
    let ours = common::read_tree(&out.path().join("refcity"));
    let golden = common::read_tree(&common::golden_dir().join("refcity"));
    assert!(diff(&ours, &golden).is_empty());
    let summary = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert!(summary.contains("citya,failed (ingest)"));
}

fn atlas(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_atlas")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn cli_exit_codes_and_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::fixture_dir().join("config.json");
    let config = config.to_str().unwrap();

    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(config).unwrap().replace("\"reference_city\": \"refcity\"", "\"reference_city\": \"nowhere\"");
    std::fs::write(&bad, text).unwrap();
    let (code, _, err) = atlas(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("reference city `nowhere`"));

    let (code, out, _) = atlas(&["select", "--config", config, "--city", "citya"]);
    assert_eq!(code, 0);
    let want: Vec<String> = common::facts()["citya_selected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert_eq!(out.lines().collect::<Vec<_>>(), want);

    let (code, out, _) = atlas(&["select", "--config", config, "--city", "citya", "--mode", "top-fraction"]);
    assert_eq!((code, out.lines().count()), (0, 5));

    let (code, out, _) = atlas(&["moran", "--config", config, "--city", "refcity", "--var", "percsnap"]);
    assert_eq!(code, 0);
    out.trim().parse::<f64>().unwrap();

    let (code, out, _) = atlas(&["breaks", "--config", config, "--var", "SD4DET", "--k", "3"]);
    assert_eq!((code, out.lines().count()), (0, 2));

    let (code, _, err) = atlas(&["select", "--config", config, "--city", "nowhere"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown city"));
}
