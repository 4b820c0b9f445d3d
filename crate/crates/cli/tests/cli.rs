use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn u2gsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_u2gsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_dir(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

#[test]
fn zero_duration_exits_with_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = u2gsim(&["--duration", "0", "--output-dir", &out_dir(dir.path()), "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duration"));
}

#[test]
fn empty_metric_list_names_valid_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = u2gsim(&["--stats", "--output-dir", &out_dir(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("acf, pdp, lcr_afd, si"));
}

#[test]
fn unknown_metric_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = u2gsim(&["--stats", "acf,psd", "--output-dir", &out_dir(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"not a directory").unwrap();
    let target = blocker.join("out");
    let out = u2gsim(&["--duration", "0.5", "--emit", "pl", "--output-dir", &out_dir(&target), "--quiet"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn path_loss_only_writes_profile_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = u2gsim(&["--duration", "1", "--emit", "pl", "--output-dir", &out_dir(dir.path()), "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["manifest.json", "pl_profile.csv"]);
}

#[test]
fn same_seed_gives_identical_csv_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/sim2_roll.toml");
    for dir in [&a, &b] {
        let out = u2gsim(&[
            "--config",
            &config.to_string_lossy(),
            "--seed",
            "42",
            "--duration",
            "2",
            "--ensemble",
            "4",
            "--output-dir",
            &out_dir(dir.path()),
            "--quiet",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["cir.csv", "pl_profile.csv", "stats/acf.csv", "stats/si.csv", "stats/report.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let manifest = fs::read_to_string(a.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 42"));
}
