use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skorokhod"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

/// `A(t) = 2t` and `C(t) = t` on `[0, 2]`.
fn linear_inputs() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.csv", "t,value\n0,0\n1,2\n2,4\n");
    write(dir.path(), "c.json", r#"{"knots":[0,2],"values":[0,2]}"#);
    dir
}

#[test]
fn reflect_gives_the_identity_for_a_growing_queue() {
    let dir = linear_inputs();
    let o = run(dir.path(), &["reflect", "--arrivals", "a.csv", "--services", "c.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,qstar,regulator,sigma_star"));
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(cols[1], cols[0]);
        assert_eq!(cols[2], 0.0);
        assert_eq!(cols[3], cols[0] / 2.0);
    }
}

#[test]
fn theta_of_the_arrivals_is_four_thirds() {
    let dir = linear_inputs();
    let o = run(
        dir.path(),
        &["theta", "--arrivals", "a.csv", "--services", "c.json", "--function", "a.csv", "--format", "json"],
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["spec"], "skorokhod-kit/1");
    let knots = v["knots"].as_array().unwrap();
    let values = v["values"].as_array().unwrap();
    for (t, q) in knots.iter().zip(values) {
        let (t, q) = (t.as_f64().unwrap(), q.as_f64().unwrap());
        assert!((q - 4.0 * t / 3.0).abs() <= 1e-12);
    }
}

#[test]
fn iterate_emits_trace_and_summary() {
    let dir = linear_inputs();
    let base = ["iterate", "--arrivals", "a.csv", "--services", "c.json", "--max-iter", "60"];
    let csv = run(dir.path(), &base);
    assert!(csv.status.success());
    assert!(stdout(&csv).starts_with("k,t,Q_k\n1,0,0\n"));

    let json = run(dir.path(), &[&base[..], &["--format", "json"]].concat());
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["spec"], "skorokhod-kit/1");
    assert_eq!(v["converged"], true);
    assert_eq!(v["label"], "Q_k");
    let gaps = v["gaps"].as_array().unwrap();
    assert_eq!(v["iterations"].as_u64().unwrap() as usize, gaps.len());

    let phi = run(dir.path(), &["phi-iterate", "--arrivals", "a.csv", "--services", "c.json"]);
    assert!(stdout(&phi).starts_with("k,t,B_k\n"));
}

#[test]
fn unconverged_iteration_warns_but_succeeds() {
    let dir = linear_inputs();
    let o = run(
        dir.path(),
        &["iterate", "--arrivals", "a.csv", "--services", "c.json", "--max-iter", "3", "--format", "json"],
    );
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge"));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["converged"], false);
}

#[test]
fn verify_passes_on_the_zero_path() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "zero.csv", "t,value\n0,0\n3,0\n");
    let o = run(dir.path(), &["verify", "--arrivals", "zero.csv", "--services", "zero.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["spec"], "skorokhod-kit/1");
    assert_eq!(v["passed"], true);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"non_maximal_fixed_point"));
    assert!(names.contains(&"semigroup_identity"));
}

#[test]
fn verify_reports_slow_convergence_as_a_check_failure() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "one.csv", "t,value\n0,0\n1,1\n");
    let o = run(dir.path(), &["verify", "--arrivals", "one.csv", "--services", "one.csv", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("maximal_fixed_point,false"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("maximal_fixed_point"));
}

#[test]
fn verify_generated_paths() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["verify", "--generate", "4", "--max-knots", "40", "--seed", "17"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["instances"], 4);
}

#[test]
fn simulate_rejects_an_unstable_queue() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["simulate", "--arrival-rate", "1", "--service-rate", "0.8", "--horizon", "100"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a < c"));
}

#[test]
fn simulate_reads_a_scenario_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "scenario.json",
        r#"{"source_model":"on_off","arrival_rate":0.5,"service_rate":1.0,"horizon":500.0,"seed":1,"off_mean":2.0}"#,
    );
    let o = run(dir.path(), &["simulate", "--config", "scenario.json", "--seed", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["spec"], "skorokhod-kit/1");
    assert_eq!(v["seed"], 8);
    assert_eq!(v["rng"], "ChaCha8Rng");
    assert_eq!(v["horizon"], 500.0);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = linear_inputs();
    write(
        dir.path(),
        "run.json",
        r#"{"arrivals":"a.csv","services":"c.json","format":"json","max_iter":2}"#,
    );
    let o = run(dir.path(), &["iterate", "--config", "run.json", "--max-iter", "4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["iterations"], 4);
}

#[test]
fn exit_codes_for_bad_inputs() {
    let dir = linear_inputs();
    write(dir.path(), "down.csv", "t,value\n0,0\n1,2\n2,1\n");
    write(dir.path(), "short.csv", "t,value\n0,0\n1,1\n");
    write(dir.path(), "header.csv", "time,value\n0,0\n1,1\n");
    let cases: [(&[&str], i32); 6] = [
        (&["reflect", "--arrivals", "down.csv", "--services", "c.json"], 2),
        (&["reflect", "--arrivals", "short.csv", "--services", "c.json"], 2),
        (&["reflect", "--arrivals", "header.csv", "--services", "header.csv"], 2),
        (&["reflect", "--arrivals", "a.csv"], 2),
        (&["reflect", "--arrivals", "missing.csv", "--services", "c.json"], 3),
        (&["reflect", "--arrivals", "a.csv", "--services", "c.json", "--output", "no/such/dir/out.csv"], 3),
    ];
    for (args, code) in cases {
        let o = run(dir.path(), args);
        assert_eq!(o.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = linear_inputs();
    let commands: [&[&str]; 4] = [
        &["reflect", "--arrivals", "a.csv", "--services", "c.json", "--format", "json"],
        &["iterate", "--arrivals", "a.csv", "--services", "c.json", "--oversample", "3"],
        &["verify", "--generate", "2", "--max-knots", "30", "--seed", "5"],
        &["simulate", "--arrival-rate", "0.5", "--service-rate", "1", "--horizon", "300", "--off-mean", "2", "--seed", "4"],
    ];
    for args in commands {
        let first = run(dir.path(), args);
        let second = run(dir.path(), args);
        assert!(first.status.success(), "{args:?}");
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn output_flag_writes_a_file() {
    let dir = linear_inputs();
    let o = run(
        dir.path(),
        &["reflect", "--arrivals", "a.csv", "--services", "c.json", "--output", "r.csv"],
    );
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(text.starts_with("t,qstar,regulator,sigma_star\n"));
}
