use std::path::Path;
use std::process::{Command, Output};

fn lonestar(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lonestar")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn codebook_writes_csv_and_sidecar() {
    let d = tempfile::tempdir().unwrap();
    let o = lonestar(&["codebook", "--kind", "cbf", "--rows", "2", "--cols", "2", "--grid=0:15:0,0:15:0", "--out", "f.csv"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("f.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("beam,element,re,im"));
    assert_eq!(csv.lines().count(), 5);
    let meta: toml::Table = std::fs::read_to_string(d.path().join("f.csv.meta")).unwrap().parse().unwrap();
    assert_eq!(meta["kind"].as_str(), Some("cbf"));
    assert_eq!(meta["beams"].as_integer(), Some(1));
}

#[test]
fn missing_required_flag_names_it() {
    let d = tempfile::tempdir().unwrap();
    let o = lonestar(&["codebook"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--kind"));
}

#[test]
fn config_file_supplies_flags_and_cli_wins() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("c.toml"), "kind = \"taylor\"\nsll = 30\nrows = 4\ncols = 4\n").unwrap();
    let o = lonestar(&["codebook", "--config", "c.toml", "--sll", "20", "--out", "t.csv"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta: toml::Table = std::fs::read_to_string(d.path().join("t.csv.meta")).unwrap().parse().unwrap();
    assert_eq!(meta["kind"].as_str(), Some("taylor"));
    assert_eq!(meta["sll"].as_float(), Some(20.0));
    assert_eq!(meta["rows"].as_integer(), Some(4));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("c.toml"), "kind = \"cbf\"\nbogus = 1\n").unwrap();
    let o = lonestar(&["codebook", "--config", "c.toml"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn bad_values_are_config_errors() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["codebook", "--kind", "fancy"][..],
        &["codebook", "--kind", "cbf", "--bits", "8"],
        &["codebook", "--kind", "cbf", "--grid", "nonsense"],
        &["eval", "--codebook", "cbf", "--sigma-sq", "-1", "--codebook", "lonestar"],
        &["simodel", "--preset", "sideways"],
    ] {
        let o = lonestar(args, d.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn io_failures_exit_3() {
    let d = tempfile::tempdir().unwrap();
    let o = lonestar(&["eval", "--codebook", "file", "--f-file", "nope.csv", "--w-file", "nope.csv"], d.path());
    assert_eq!(o.status.code(), Some(3));
    let o = lonestar(&["codebook", "--kind", "cbf", "--out", "missing/dir/f.csv"], d.path());
    assert_eq!(o.status.code(), Some(3));
    let o = lonestar(&["codebook", "--kind", "cbf", "--config", "absent.toml"], d.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_has_one_row_per_point() {
    let d = tempfile::tempdir().unwrap();
    let o = lonestar(&["sweep", "--codebook", "cbf", "--trials", "20", "--inrbar", "30:10:110", "--out", "s.csv"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.path().join("s.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("inrbar_db,"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn design_then_evaluate_from_files() {
    let d = tempfile::tempdir().unwrap();
    let common = ["--rows", "4", "--cols", "4", "--grid=-30:30:30,0:15:0"];
    let mut args = vec!["design", "--outer-iters", "1", "--out-dir", "out"];
    args.extend(common);
    let o = lonestar(&args, d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(d.path().join("out/report.csv")).unwrap();
    assert_eq!(report.lines().next(), Some("step,objective,coverage_tx,coverage_rx"));
    assert_eq!(report.lines().count(), 1 + 3);

    let mut args = vec!["eval", "--codebook", "file", "--f-file", "out/f.csv", "--w-file", "out/w.csv", "--trials", "10"];
    args.extend(common);
    let o = lonestar(&args, d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 11);
}

#[test]
fn simodel_outputs() {
    let d = tempfile::tempdir().unwrap();
    let o = lonestar(&["simodel", "--preset", "default", "--dump"], d.path());
    let dump: toml::Table = String::from_utf8_lossy(&o.stdout).parse().unwrap();
    assert_eq!(dump["xi"].as_float(), Some(0.503));
    let o = lonestar(&["simodel", "--preset", "default", "--draws", "5"], d.path());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 6);
    let o = lonestar(&["simodel", "--preset", "default", "--matrix", "--beams", "3"], d.path());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 10);
}

#[test]
fn pattern_peaks_at_the_steering_angle() {
    let d = tempfile::tempdir().unwrap();
    let o = lonestar(&["pattern", "--steer=30,0", "--step", "5"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    let peak = out
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert_eq!(peak.0, 30.0);
}
