use std::io::Write;
use std::process::{Command, Output};

fn pooling(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pooling"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(name: &str, body: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(format!("pooling-test-{name}-{}.json", std::process::id()));
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(body.as_bytes()).unwrap();
    path
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    for row in &rows {
        assert_eq!(row.len(), header.len(), "ragged CSV row");
    }
    (header, rows)
}

#[test]
fn reproduce_targets_pass_and_are_stable() {
    for target in ["intro", "table1", "table2", "fig3", "fig4"] {
        let a = pooling(&["reproduce", target]);
        assert!(a.status.success(), "{target}: {}", stdout_str(&a));
        let b = pooling(&["reproduce", target]);
        assert_eq!(a.stdout, b.stdout, "{target} output not byte-stable");
        let (_, rows) = parse_csv(&stdout_str(&a));
        assert!(!rows.is_empty());
    }
}

#[test]
fn metrics_standalone_row() {
    let cfg = write_config(
        "coc-metrics",
        r#"{"providers":[{"standalone_wait":0.05,"n":5},{"standalone_wait":0.10,"n":5}],
            "policy":"coc","k":[0,0]}"#,
    );
    let out = pooling(&["metrics", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout_str(&out));
    assert_eq!(header, ["policy", "k1", "k2", "metric", "b1", "b2"]);
    let b1: f64 = rows[0][4].parse().unwrap();
    let b2: f64 = rows[0][5].parse().unwrap();
    assert!((b1 - 0.3231).abs() < 1e-3);
    assert!((b2 - 0.3722).abs() < 1e-3);
}

#[test]
fn ksbs_matches_reference_row() {
    let cfg = write_config(
        "ksbs",
        r#"{"providers":[{"lambda":0.1,"n":1},{"lambda":0.3,"n":1}],
            "policy":"cos","k":{"grid":0.01}}"#,
    );
    let out = pooling(&["ksbs", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let (_, rows) = parse_csv(&stdout_str(&out));
    assert_eq!(rows.len(), 1);
    let k1: f64 = rows[0][1].parse().unwrap();
    let b1: f64 = rows[0][3].parse().unwrap();
    assert!((k1 - 0.69).abs() < 0.01, "k1 = {k1}");
    assert!((b1 - 0.0554).abs() < 0.0005, "b1 = {b1}");
}

#[test]
fn frontier_is_plottable_boundary_set() {
    let cfg = write_config(
        "frontier",
        r#"{"providers":[{"standalone_wait":0.30,"n":1},{"standalone_wait":0.10,"n":1}],
            "policy":"cos","k":{"grid":0.02}}"#,
    );
    let out = pooling(&["frontier", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout_str(&out));
    assert_eq!(header, ["policy", "k1", "k2", "B1", "B2", "undominated", "is_ksbs"]);
    assert!(rows.len() > 10);
    for row in &rows {
        assert_eq!(row[5], "true");
        let k1: f64 = row[1].parse().unwrap();
        let k2: f64 = row[2].parse().unwrap();
        assert!(k1 > 0.95 || k2 > 0.95, "interior point ({k1}, {k2})");
    }
}

#[test]
fn simulate_is_seed_deterministic() {
    let cfg = write_config(
        "simulate",
        r#"{"providers":[{"lambda":0.1,"n":1},{"lambda":0.5,"n":1}],
            "policy":"cos","k":[1,1],"sim":{"horizon":50000,"seed":11}}"#,
    );
    let a = pooling(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    let b = pooling(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
    let c = pooling(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
    let (header, rows) = parse_csv(&stdout_str(&a));
    assert_eq!(
        header,
        ["policy", "k1", "k2", "metric", "estimate", "stderr", "ci_lo", "ci_hi", "jobs", "seed"]
    );
    assert_eq!(rows.len(), 4);
    // Table II full-sharing row: C = 13.85% should sit inside the CI band
    let wait1: f64 = rows[0][4].parse().unwrap();
    let se1: f64 = rows[0][5].parse().unwrap();
    assert!((wait1 - 0.1385).abs() < 4.0 * se1, "wait {wait1} se {se1}");
}

#[test]
fn json_format_emits_objects() {
    let cfg = write_config(
        "json",
        r#"{"providers":[{"lambda":0.1,"n":1},{"lambda":0.1,"n":1}],
            "policy":"cos","k":[1,1]}"#,
    );
    let out = pooling(&["metrics", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let rows = parsed.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["policy"], "cos");
    assert!((rows[0]["b1"].as_f64().unwrap() - 0.01818).abs() < 1e-4);
}

#[test]
fn malformed_config_exits_2_with_location() {
    let cfg = write_config("broken", "{\"providers\": [\n");
    let out = pooling(&["metrics", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":2:"), "no line anchor in {err:?}");
}

#[test]
fn unstable_config_exits_3() {
    let cfg = write_config(
        "unstable",
        r#"{"providers":[{"lambda":2.0,"n":1},{"lambda":0.1,"n":1}],
            "policy":"cos","k":[1,1]}"#,
    );
    let out = pooling(&["metrics", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn out_flag_writes_file() {
    let cfg = write_config(
        "outfile",
        r#"{"providers":[{"lambda":0.1,"n":1},{"lambda":0.1,"n":1}],
            "policy":"cos","k":[0,0]}"#,
    );
    let out_path = std::env::temp_dir().join(format!("pooling-out-{}.csv", std::process::id()));
    let out = pooling(&[
        "metrics",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    parse_csv(&text);
    std::fs::remove_file(&out_path).ok();
}
