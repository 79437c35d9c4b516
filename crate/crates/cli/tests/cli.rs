use std::path::Path;
use std::process::{Command, Output};

fn polylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polylab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn records(out: &Path) -> Vec<serde_json::Value> {
    let mut p = out.as_os_str().to_owned();
    p.push(".runs.jsonl");
    std::fs::read_to_string(p).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn classify_region_b() {
    let o = polylab(&["model", "classify", "--d", "2", "--alpha", "1.5", "--gamma", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let row: Vec<&str> = s.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "B");
    assert_eq!(row[4], "0.75");
}

#[test]
fn same_config_and_seed_give_identical_digests() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.csv");
    let o = out.to_str().unwrap();
    let args = ["polymer", "mc", "--d", "2", "--alpha", "1.5", "--gamma", "1", "--n-grid", "4,6", "--beta", "0.02", "--replicas", "3000", "--seed", "9", "--out", o];
    for _ in 0..2 {
        let r = polylab(&args);
        assert!(r.status.success(), "{}", stderr(&r));
    }
    let recs = records(&out);
    assert_eq!(recs.len(), 2, "record file is append-only");
    assert_eq!(recs[0]["config_hash"], recs[1]["config_hash"]);
    assert_eq!(recs[0]["outputs"][0]["sha256"], recs[1]["outputs"][0]["sha256"]);

    let r = polylab(&["polymer", "mc", "--d", "2", "--alpha", "1.5", "--gamma", "1", "--n-grid", "4,6", "--beta", "0.02", "--replicas", "3000", "--seed", "10", "--out", o]);
    assert!(r.status.success());
    let recs = records(&out);
    assert_ne!(recs[0]["config_hash"], recs[2]["config_hash"]);
    assert_ne!(recs[0]["outputs"][0]["sha256"], recs[2]["outputs"][0]["sha256"]);
}

#[test]
fn n_grid_sweep_emits_one_row_per_n() {
    let o = polylab(&["polymer", "exact", "--d", "2", "--alpha", "1.5", "--gamma", "1", "--n-grid", "2,4,6,8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let ns: Vec<&str> = s.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, ["2", "4", "6", "8"]);
}

#[test]
fn exact_and_mc_agree_through_the_cli() {
    let base = ["--d", "2", "--alpha", "1.5", "--gamma", "1", "--n", "6", "--seed", "4"];
    let ex = stdout(&polylab(&[&["polymer", "exact"][..], &base].concat()));
    let mc = stdout(&polylab(&[&["polymer", "mc", "--replicas", "100000"][..], &base].concat()));
    let field = |s: &str, i: usize| -> f64 { s.lines().nth(1).unwrap().split(',').nth(i).unwrap().parse().unwrap() };
    let (lz_ex, lz_mc, se) = (field(&ex, 2), field(&mc, 2), field(&mc, 3));
    let (z_ex, z_mc) = (lz_ex.exp(), lz_mc.exp());
    assert!((z_ex - z_mc).abs() <= 4.0 * se, "exact {z_ex} mc {z_mc} se {se}");
}

#[test]
fn outside_window_is_a_validation_error() {
    let o = polylab(&["limits", "chi", "--d", "5", "--alpha", "1.2", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("window"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_fail_closed() {
    let o = polylab(&["model", "classify", "--d", "2", "--alpha", "1.5", "--set", "gama=0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gama"));
    // a known key that this experiment does not read is also rejected
    let o = polylab(&["model", "classify", "--d", "2", "--alpha", "1.5", "--replicas", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "experiment = model.classify\n# region A by default\nd = 2\nalpha = 1.5\ngamma = 0.1\n").unwrap();
    let c = cfg.to_str().unwrap();
    let a = stdout(&polylab(&["model", "classify", "--config", c]));
    assert_eq!(a.lines().nth(1).unwrap().split(',').nth(3), Some("A"));
    let b = stdout(&polylab(&["model", "classify", "--config", c, "--gamma", "2"]));
    assert_eq!(b.lines().nth(1).unwrap().split(',').nth(3), Some("C"));
    let o = polylab(&["walk", "f", "--config", c]);
    assert_eq!(o.status.code(), Some(2), "experiment mismatch");
}

#[test]
fn malformed_values_are_validation_errors() {
    let o = polylab(&["model", "classify", "--d", "two", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = polylab(&["model", "classify", "--d", "2", "--alpha", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn walk_f_matches_library() {
    let o = polylab(&["walk", "f", "--d", "2", "--r", "0.5,1,2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    for line in s.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(v[1].to_bits(), polylab::walk::f_profile_radial(v[0], 2).unwrap().to_bits());
    }
}

#[test]
fn side_tables_and_record_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sub/e.csv");
    let o = polylab(&["elpp", "solve", "--d", "2", "--b", "4", "--points", "0.5,0;1,0;3,3", "--r", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rec = &records(&out)[0];
    assert_eq!(rec["experiment"], "elpp.solve");
    assert_eq!(rec["diagnostics"]["k_max"], 2);
    assert_eq!(rec["status"], "ok");
    assert!(rec["started_unix"].as_f64().unwrap() <= rec["finished_unix"].as_f64().unwrap());
    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(rec["outputs"][0]["rows"], 2);
    assert_eq!(rec["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(!bytes.is_empty());
}

#[test]
fn verify_single_fast_criterion() {
    let o = polylab(&["verify", "fast", "--only", "1,4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("PASS criterion  1"));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn collapsed_ess_exits_with_diagnostic_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let o = polylab(&["polymer", "region-stat", "--d", "2", "--alpha", "1.5", "--gamma", "0.1", "--n", "16", "--replicas", "2000", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let rec = &records(&out)[0];
    assert_eq!(rec["status"], "diagnostic_failure");
    assert!(out.exists(), "outputs are still written");
}
