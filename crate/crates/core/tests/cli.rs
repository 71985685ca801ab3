use std::ffi::OsString;
use std::path::Path;

use serde_json::Value;
use tracelab::cli::run;

fn call(args: &[&str], out: &Path) -> (i32, Value) {
    let mut argv: Vec<OsString> = vec!["tracelab".into()];
    argv.extend(args.iter().map(OsString::from));
    argv.push("--out".into());
    argv.push(out.as_os_str().to_owned());
    let (mut so, mut se) = (Vec::new(), Vec::new());
    let code = run(argv, &mut so, &mut se);
    let v = serde_json::from_slice(&so).unwrap_or(Value::Null);
    (code, v)
}

#[test]
fn constant_c_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = call(&["constant-c"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["result"]["target"], "4*pi^2");
    let c = v["result"]["c"].as_f64().unwrap();
    assert!((c - 39.4784176).abs() < 1e-5);
    assert!(v["result"]["rel_err"].as_f64().unwrap() < 1e-6);
    assert!(dir.path().join("constant-c.json").exists());
}

#[test]
fn constant_has_zero_norm() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = call(&["norm", "--kind", "half-line", "--family", "constant"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(v["result"]["value"].as_f64(), Some(0.0));
    let csv = std::fs::read_to_string(dir.path().join("norm-terms.csv")).unwrap();
    assert!(csv.starts_with("term,count,value,per_unit,half_width"));
}

#[test]
fn gp_profile_has_one_row_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = call(&["gp-profile", "--family", "gaussian", "--m", "2", "--levels", "0..-4", "--R", "8"], dir.path());
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("gp-profile-profile.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let norm: f64 = r.split(',').nth(2).unwrap().parse().unwrap();
        assert!(norm.is_finite() && norm > 0.0);
        assert!(r.ends_with(",0.015625,0,0,8"), "{r}");
    }
    assert!(v["result"]["sup_over_energy"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_and_parameter_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = call(&["no-such-command"], dir.path());
    assert_eq!(code, 2);
    let (code, v) = call(&["norm", "--kind", "bogus"], dir.path());
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "invalid-parameter");
    let (code, v) = call(&["sc-resistance", "--m", "9"], dir.path());
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "level-too-deep");
}

#[test]
fn numerical_rejection_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gp-reconstruct", "--R", "2", "--levels", "0..-2", "--perturb", "0.01", "--seed", "7"];
    let (code, v) = call(&args, dir.path());
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "inconsistent");
    let (code, v) = call(&args[..5], dir.path());
    assert_eq!(code, 0);
    let ratio = v["result"]["energy_ratio"].as_f64().unwrap();
    assert!(ratio > 0.9 && ratio <= 1.0 + 1e-12);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"family": "constant", "value": 2.0, "R": 4.0}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let (code, v) = call(&["norm", "--config", cfg], dir.path());
    assert_eq!(code, 0);
    assert_eq!(v["config"]["family"], "constant");
    assert_eq!(v["config"]["R"], 4.0);
    assert_eq!(v["result"]["value"].as_f64(), Some(0.0));
    let (code, v) = call(&["norm", "--config", cfg, "--family", "gaussian"], dir.path());
    assert_eq!(code, 0);
    assert_eq!(v["config"]["family"], "gaussian");
    assert_eq!(v["config"]["R"], 4.0);
    assert!(v["result"]["value"].as_f64().unwrap() > 0.0);
    std::fs::write(dir.path().join("bad.json"), r#"{"famly": "constant"}"#).unwrap();
    let (code, _) = call(&["norm", "--config", dir.path().join("bad.json").to_str().unwrap()], dir.path());
    assert_eq!(code, 2);
}

#[test]
fn thread_count_does_not_change_the_bytes() {
    for args in [
        vec!["gp-profile", "--R", "2", "--levels", "0..-2"],
        vec!["sg-trace", "--m", "5"],
        vec!["counterexample", "--rs", "4,8,16"],
    ] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let mut one = args.clone();
        one.extend(["--threads", "1"]);
        let mut four = args.clone();
        four.extend(["--threads", "4"]);
        assert_eq!(call(&one, a.path()).0, 0);
        assert_eq!(call(&four, b.path()).0, 0);
        for entry in std::fs::read_dir(a.path()).unwrap() {
            let name = entry.unwrap().file_name();
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            if name.to_string_lossy().ends_with(".csv") {
                assert_eq!(x, y, "{name:?}");
            } else {
                // the JSON echoes the output directory; compare the results
                let (x, y): (Value, Value) = (serde_json::from_slice(&x).unwrap(), serde_json::from_slice(&y).unwrap());
                assert_eq!(x["result"], y["result"]);
            }
        }
    }
}

#[test]
fn output_directory_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::env::set_var(tracelab::cli::OUT_ENV, dir.path());
    let (mut so, mut se) = (Vec::new(), Vec::new());
    let code = run(["tracelab", "constant-c"].map(OsString::from), &mut so, &mut se);
    std::env::remove_var(tracelab::cli::OUT_ENV);
    assert_eq!(code, 0);
    assert!(dir.path().join("constant-c.json").exists());
}
