use std::fs;
use std::path::Path;

use mixcharts::cli::run;
use serde_json::Value;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn invoke(args: &[&str], stdin: &str) -> Output {
    let mut argv = vec!["mixcharts"];
    argv.extend_from_slice(args);
    let mut input = stdin.as_bytes();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(argv, &mut input, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn error_kind(o: &Output) -> String {
    let v: Value = serde_json::from_str(o.stderr.trim()).unwrap();
    v["error"].as_str().unwrap().to_string()
}

const COUNTEREXAMPLE_4X4: &str =
    "0.125,0,0.125,0\n0.125,0,0,0.125\n0,0.125,0.125,0\n0,0.125,0,0.125\n";

#[test]
fn rank_of_the_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "p.csv", COUNTEREXAMPLE_4X4);
    let o = invoke(&["rank", &path], "");
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout.trim(), "3");
    let o = invoke(&["rank", "-"], "0.25 0.25\n0.25 0.25\n");
    assert_eq!(o.stdout.trim(), "1");
}

#[test]
fn factorize_prints_or_refuses() {
    let o = invoke(&["factorize", "-"], "0.5,0\n0,0.5\n");
    assert_eq!(o.code, 0);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["k"], 2);
    let o = invoke(&["factorize", "-"], COUNTEREXAMPLE_4X4);
    assert_eq!(o.code, 1);
    assert_eq!(error_kind(&o), "RankTooHigh");
}

#[test]
fn forward_then_inverse_closes() {
    let point = r#"{"j1":1,"j2":3,"a":[0.3,0.2],"b":[{"col":2,"value":0.25}],"c":[0.1,0.6],"d":[{"col":2,"value":0.4}],"alpha":0.35}"#;
    let fwd = invoke(&["chart-forward", "--chart", "1,3", "--point", point], "");
    assert_eq!(fwd.code, 0, "{}", fwd.stderr);
    let inv = invoke(&["chart-inverse", "-", "--chart", "1,3"], &fwd.stdout);
    assert_eq!(inv.code, 0, "{}", inv.stderr);
    let a: Value = serde_json::from_str(point).unwrap();
    let b: Value = serde_json::from_str(&inv.stdout).unwrap();
    let flat = |v: &Value| -> Vec<f64> {
        let mut out: Vec<f64> = v["a"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        for key in ["b", "d"] {
            out.extend(
                v[key]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|e| e["value"].as_f64().unwrap()),
            );
        }
        out.extend(
            v["c"]
                .as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_f64().unwrap()),
        );
        out.push(v["alpha"].as_f64().unwrap());
        out
    };
    for (x, y) in flat(&a).iter().zip(flat(&b)) {
        assert!((x - y).abs() <= 1e-10);
    }
}

#[test]
fn chart_flag_must_match_the_point() {
    let point = r#"{"j1":1,"j2":2,"a":[0.5],"b":[],"c":[0.5],"d":[],"alpha":0.5}"#;
    let o = invoke(&["chart-forward", "--chart", "1,3", "--point", point], "");
    assert_eq!(o.code, 2);
    assert_eq!(error_kind(&o), "Usage");
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "pt.json", point);
    let o = invoke(&["chart-forward", "--point", &path], "");
    assert_eq!(o.code, 0);
    assert_eq!(o.stdout.trim(), "0.25,0.25\n0.25,0.25");
}

#[test]
fn inverse_of_a_rank_three_matrix_fails() {
    let o = invoke(
        &["chart-inverse", "-", "--chart", "1,2"],
        "0.2,0,0\n0,0.3,0\n0,0,0.5\n",
    );
    assert_eq!(o.code, 1);
    assert_eq!(error_kind(&o), "NotInChartImage");
}

#[test]
fn charts_lists_applicable_pairs() {
    let o = invoke(&["charts", "-"], "0.2,0.2,0\n0,0.2,0.4\n");
    assert_eq!(o.code, 0);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    let charts = v["charts"].as_array().unwrap();
    assert!(charts.iter().any(|c| c["j1"] == 1 && c["j2"] == 3));
}

#[test]
fn rank_one_fit_of_a_symmetric_table() {
    let o = invoke(&["fit", "-", "--model", "rank1"], "2,1\n1,2\n");
    assert_eq!(o.code, 0, "{}", o.stderr);
    let v: Value = serde_json::from_str(&o.stdout).unwrap();
    assert_eq!(v["source"]["kind"], "rank1");
    for row in v["matrix"].as_array().unwrap() {
        for x in row.as_array().unwrap() {
            assert!((x.as_f64().unwrap() - 0.25).abs() < 1e-12);
        }
    }
}

#[test]
fn mixture_fit_is_seeded() {
    let a = invoke(
        &["fit", "-", "--seed", "4", "--multistarts", "4"],
        "3,1\n1,3\n",
    );
    let b = invoke(
        &["fit", "-", "--seed", "4", "--multistarts", "4"],
        "3,1\n1,3\n",
    );
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&a.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() + 10.043858).abs() < 1e-4);
}

#[test]
fn sample_emits_counts() {
    let rep =
        r#"{"k":2,"weights":[0.5,0.5],"col_factors":[[1,0],[0,1]],"row_factors":[[1,0],[0,1]]}"#;
    let o = invoke(&["sample", "--rep", rep, "--n", "1000", "--seed", "3"], "");
    assert_eq!(o.code, 0, "{}", o.stderr);
    let rows: Vec<Vec<u64>> = o
        .stdout
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows[0][1] + rows[1][0], 0);
    assert_eq!(rows[0][0] + rows[1][1], 1000);
}

#[test]
fn check_reports_every_suite() {
    let o = invoke(&["check", "--cases", "30", "--seed", "2"], "");
    assert_eq!(o.code, 0, "{}{}", o.stdout, o.stderr);
    let lines: Vec<Value> = o
        .stdout
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(lines.len() >= 8);
    assert!(lines.iter().all(|l| l["passed"] == true));
}

#[test]
fn bad_input_is_reported() {
    let o = invoke(&["rank", "-"], "0.5,0.6\n0,0\n");
    assert_eq!(o.code, 1);
    assert_eq!(error_kind(&o), "SumOutOfTolerance");
    let o = invoke(&["rank", "-"], "0.5,0.5\n0\n");
    assert_eq!(error_kind(&o), "Parse");
    let o = invoke(&["rank", "/nonexistent/file.csv"], "");
    assert_eq!(error_kind(&o), "Io");
    let o = invoke(&["fit", "-"], "0,0\n0,0\n");
    assert_eq!(error_kind(&o), "EmptyTable");
    assert_eq!(invoke(&["frobnicate"], "").code, 2);
    assert_eq!(invoke(&["--help"], "").code, 0);
}

#[test]
fn binary_runs() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_mixcharts"))
        .args(["rank", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut child| {
            use std::io::Write;
            child.stdin.take().unwrap().write_all(b"0.5 0\n0 0.5\n")?;
            child.wait_with_output()
        })
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2");
}
