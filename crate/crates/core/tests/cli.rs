use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hermgraph"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn data<'a>(recs: &'a [Value], name: &str) -> &'a Value {
    &recs.iter().find(|r| r["record"] == "data" && r["name"] == name).unwrap()["value"]
}

/// Report text with the wall time removed from the summary line.
fn without_wall_time(out: &Output) -> Vec<Value> {
    let mut recs = records(out);
    if let Some(Value::Object(summary)) = recs.last_mut() {
        summary.remove("wall_time_s");
    }
    recs
}

const TRIANGLE: &str = r#"{
  "vertices": [{"id": "a"}, {"id": "b", "m": 2.0}, {"id": "c"}],
  "edges": [{"u": "a", "v": "b", "b": 1.0}, {"u": "b", "v": "c", "b": 0.5}, {"u": "c", "v": "a", "b": 2.0}],
  "fiber_dim": 2,
  "connection": {"kind": "random", "seed": 3},
  "potential": {"a": [[1, 0], [0, 0.5], [0, -0.5], [2, 0]]}
}"#;

#[test]
fn validate_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "tri.json", TRIANGLE);
    let out = run(&["validate", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs[0]["record"], "header");
    assert_eq!(recs.last().unwrap()["record"], "summary");
    assert_eq!(data(&recs, "summary")["total_dim"], 6);

    let out = run(&["spectrum", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let values: Vec<f64> = serde_json::from_value(data(&records(&out), "eigenvalues").clone()).unwrap();
    assert_eq!(values.len(), 6);
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn reports_are_reproducible_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "tri.json", TRIANGLE);
    let m = model.to_str().unwrap();
    let args = ["check", m, "--suite", "contraction", "--instances", "6", "--samples", "8", "--seed", "11"];
    let first = run(&args);
    let second = run(&args);
    let threaded = bin().args(args).args(["--jobs", "4"]).output().unwrap();
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
    assert_eq!(without_wall_time(&first), without_wall_time(&second));
    assert_eq!(without_wall_time(&first), without_wall_time(&threaded));
}

#[test]
fn asymmetric_weights_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "asym.json",
        r#"{"vertices":[{"id":"a"},{"id":"b"}],"edges":[{"u":"a","v":"b","b":1},{"u":"b","v":"a","b":2}]}"#,
    );
    let out = run(&["validate", model.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let recs = records(&out);
    assert!(recs.iter().any(|r| r["record"] == "check" && r["name"] == "axiom (i) symmetry" && r["pass"] == false));
}

#[test]
fn usage_and_parse_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_number = write(
        dir.path(),
        "bad.json",
        r#"{"vertices":[{"id":"a"},{"id":"b"}],"edges":[{"u":"a","v":"b","b":"heavy"}]}"#,
    );
    let out = run(&["validate", bad_number.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("edges[0].b"));

    let family = write(dir.path(), "fam.json", r#"{"family":{"kind":"lattice","horizon":3}}"#);
    assert_eq!(run(&["metric", family.to_str().unwrap()]).status.code(), Some(2));

    let model = write(dir.path(), "tri.json", TRIANGLE);
    let m = model.to_str().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["heat", m, "--t", "1", "--input", missing.to_str().unwrap()]).status.code(), Some(2));
    let section = write(dir.path(), "u.json", "[[[1,0],[0,0]],[[0,0],[0,0]],[[0,0],[0,1]]]");
    assert_eq!(run(&["heat", m, "--t", "-1", "--input", section.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["check", m, "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["validate", m, "--tolerance", "green"]).status.code(), Some(2));
}

#[test]
fn heat_and_resolvent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "tri.json", TRIANGLE);
    let m = model.to_str().unwrap();
    let section = write(dir.path(), "u.json", "[[[1,0],[0,0]],[[0,0],[0,0]],[[0,0],[0,1]]]");
    let s = section.to_str().unwrap();

    let out = run(&["heat", m, "--t", "0", "--input", s]);
    assert_eq!(out.status.code(), Some(0));
    let heat = data(&records(&out), "heat").clone();
    assert_eq!(heat["method"], "identity");
    assert_eq!(heat["output"][2][1], serde_json::json!([0.0, 1.0]));

    let report_path = dir.path().join("report.jsonl");
    let out = run(&["resolvent", m, "--xi", "1.5", "--input", s, "--output", report_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&report_path).unwrap();
    assert!(text.lines().any(|l| l.contains("\"resolvent residual\"")));
}

#[test]
fn negative_controls_fail_their_suites() {
    let dir = tempfile::tempdir().unwrap();
    let corrupted = write(
        dir.path(),
        "nonunitary.json",
        r#"{"vertices":[{"id":"a"},{"id":"b"}],"edges":[{"u":"a","v":"b","b":1}],
            "connection":{"kind":"explicit","validate":false,"maps":[{"u":"a","v":"b","matrix":[[2,0]]}]}}"#,
    );
    assert_eq!(run(&["check", corrupted.to_str().unwrap(), "--suite", "kato"]).status.code(), Some(1));

    let killing = write(
        dir.path(),
        "killing.json",
        r#"{"vertices":[{"id":"a"},{"id":"b"},{"id":"c"}],
            "edges":[{"u":"a","v":"b","b":1},{"u":"b","v":"c","b":1}],
            "potential":{"a":[1]}}"#,
    );
    assert_eq!(run(&["check", killing.to_str().unwrap(), "--suite", "mass"]).status.code(), Some(1));

    let magnetic = write(
        dir.path(),
        "magnetic.json",
        r#"{"vertices":[{"id":"a"},{"id":"b"}],"edges":[{"u":"a","v":"b","b":1}],
            "connection":{"kind":"magnetic","theta":[{"u":"a","v":"b","value":3.141592653589793}]}}"#,
    );
    assert_eq!(run(&["check", magnetic.to_str().unwrap(), "--suite", "positivity"]).status.code(), Some(1));
}

#[test]
fn scalar_suites_pass_on_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "path.json",
        r#"{"vertices":[{"id":"0"},{"id":"1"},{"id":"2"},{"id":"3"}],
            "edges":[{"u":"0","v":"1","b":1},{"u":"1","v":"2","b":1},{"u":"2","v":"3","b":1}]}"#,
    );
    for suite in ["green", "kato", "ground", "accretive", "positivity", "mass", "domination"] {
        let out = run(&["check", path.to_str().unwrap(), "--suite", suite, "--instances", "3"]);
        assert_eq!(out.status.code(), Some(0), "suite {suite}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn metric_on_the_incomplete_ray() {
    let dir = tempfile::tempdir().unwrap();
    let ray = write(
        dir.path(),
        "ray.json",
        r#"{"family":{"kind":"ray","horizon":20,"m":{"rule":"constant","value":2},
            "sigma":{"rule":"geometric","scale":1,"ratio":0.5}}}"#,
    );
    let out = run(&["metric", ray.to_str().unwrap(), "--epsilon", "0.125"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(data(&recs, "boundary_distance")[0], 2.0);
    assert_eq!(data(&recs, "boundary_geometry")["boundary"], serde_json::json!(["4"]));

    let out = run(&["metric", ray.to_str().unwrap(), "--epsilon", "3"]);
    assert_eq!(data(&records(&out), "boundary_geometry")["x_eps"], serde_json::json!([]));

    let out = run(&["metric", ray.to_str().unwrap(), "--horizon", "5"]);
    assert_eq!(data(&records(&out), "boundary_distance").as_array().unwrap().len(), 6);
}

#[test]
fn agmon_on_the_incomplete_ray() {
    let dir = tempfile::tempdir().unwrap();
    let ray = write(
        dir.path(),
        "ray.json",
        r#"{"family":{"kind":"ray","horizon":10,"m":{"rule":"constant","value":2},
            "sigma":{"rule":"geometric","scale":1,"ratio":0.5}}}"#,
    );
    let out = run(&["agmon", ray.to_str().unwrap(), "--C", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let recs = records(&out);
    let pointwise = recs.iter().find(|r| r["name"] == "agmon pointwise").unwrap();
    assert_eq!(pointwise["pass"], false);
    assert_eq!(pointwise["detail"]["worst_vertex"], "10");
    assert_eq!(run(&["agmon", ray.to_str().unwrap(), "--schedule", "0.1:0.2:1"]).status.code(), Some(2));
}
