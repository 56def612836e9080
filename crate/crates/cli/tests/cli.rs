use std::process::{Command, Output};

fn gausscol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gausscol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Splits standard output into the CSV document and any trailing summary line.
fn csv_part(text: &str) -> &str {
    match text.find("\nrates:").or_else(|| text.find("\nsolve:")) {
        Some(pos) => &text[..=pos],
        None => text,
    }
}

fn reformat(field: &str) -> String {
    if field.is_empty() || field.parse::<u64>().is_ok() {
        return field.to_string();
    }
    let v: f64 = field.parse().expect("numeric field");
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn roundtrip(csv_text: &str) -> String {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(csv_text.as_bytes());
    let mut writer = csv::Writer::from_writer(Vec::new());
    for (k, record) in reader.records().enumerate() {
        let record = record.unwrap();
        if k == 0 {
            writer.write_record(&record).unwrap();
        } else {
            writer.write_record(record.iter().map(reformat)).unwrap();
        }
    }
    String::from_utf8(writer.into_inner().unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let table: &[(&[&str], i32)] = &[
        (&["rule", "--n", "1"], 0),
        (&["rule", "--n", "0"], 2),
        (&["rule", "--n", "x"], 2),
        (&["certify", "--n", "25"], 0),
        (&["certify", "--n", "25,50,75"], 0),
        (&["certify", "--n", "5:3"], 2),
        (&["solve", "--problem", "hager-example", "--n", "10"], 0),
        (
            &[
                "solve",
                "--problem",
                "hager-example",
                "--n",
                "10",
                "--max-iterations",
                "1",
            ],
            1,
        ),
        (&["solve", "--problem", "nonexistent"], 2),
        (&["solve", "--tolerance", "0"], 2),
        (&["solve", "--max-iterations", "0"], 2),
        (&["sweep", "--problem", "hager-example", "--n", "5,7"], 0),
        (&["sweep", "--n", "4:8:2", "--format", "yaml"], 2),
        (&["frobnicate"], 2),
        (&[], 2),
    ];
    for (args, code) in table {
        let out = gausscol(args);
        assert_eq!(
            out.status.code(),
            Some(*code),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn rule_prints_nodes_and_weights() {
    let out = gausscol(&["rule", "--n", "1"]);
    assert_eq!(
        stdout(&out),
        "i,tau,weight\n0,-1.0000000000000000e0,\n1,0.0000000000000000e0,2.0000000000000000e0\n2,1.0000000000000000e0,\n"
    );
    let text = stdout(&gausscol(&["rule", "--n", "2"]));
    let line = text.lines().nth(3).unwrap();
    let tau: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((tau - 0.5773502691896258).abs() <= 2e-16);
    assert!((tau - 1.0 / 3f64.sqrt()).abs() <= 2e-16);
}

#[test]
fn certify_matches_tables() {
    let text = stdout(&gausscol(&["certify", "--n", "25,50,75"]));
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,p1_norm,p1_minus_one_plus_tauN,p2_norm,p2_argmax_row,flip_max_dev"
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let p1: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((p1[0] - 1.995557).abs() <= 1e-6);
    assert!((rows[0][3].parse::<f64>().unwrap() - 1.412201).abs() <= 1e-6);
    assert!(p1.windows(2).all(|w| w[0] <= w[1]));

    let one = stdout(&gausscol(&["certify", "--n", "1"]));
    let fields: Vec<&str> = one.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(fields[5].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn csv_output_roundtrips_byte_for_byte() {
    let runs: &[&[&str]] = &[
        &["rule", "--n", "7"],
        &["certify", "--n", "1,10,40"],
        &["solve", "--problem", "lq-regulator", "--n", "6"],
        &["solve", "--n", "10", "--max-iterations", "1"],
        &["sweep", "--n", "3:11:2"],
    ];
    for args in runs {
        let text = stdout(&gausscol(args));
        let csv_text = csv_part(&text);
        assert_eq!(roundtrip(csv_text), csv_text, "{args:?}");
    }
}

#[test]
fn solve_reports_residual_and_partial_dump() {
    let out = gausscol(&["solve", "--problem", "hager-example", "--n", "10"]);
    let text = stdout(&out);
    let summary = text.lines().last().unwrap();
    assert!(summary.starts_with("solve: converged"), "{summary}");
    let residual: f64 = summary.rsplit("residual=").next().unwrap().parse().unwrap();
    assert!(residual <= 1e-10);
    assert_eq!(csv_part(&text).lines().count(), 1 + 12);

    let out = gausscol(&["solve", "--n", "10", "--max-iterations", "1"]);
    let text = stdout(&out);
    assert_eq!(csv_part(&text).lines().count(), 1 + 12);
    assert!(text
        .lines()
        .last()
        .unwrap()
        .starts_with("solve: not converged"));
}

#[test]
fn sweep_summary_lines() {
    let text = stdout(&gausscol(&[
        "sweep",
        "--problem",
        "hager-example",
        "--n",
        "5:25:2",
    ]));
    let csv_text = csv_part(&text);
    assert_eq!(csv_text.lines().count(), 1 + 11);
    let rates = text.lines().last().unwrap();
    let values: Vec<f64> = rates
        .trim_start_matches("rates: ")
        .split(' ')
        .map(|kv| kv.split('=').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((0.45..=0.75).contains(&values[0]));
    assert!((0.45..=0.75).contains(&values[1]));
    assert!((0.6..=1.0).contains(&values[2]));

    let text = stdout(&gausscol(&["sweep", "--n", "5,7"]));
    assert_eq!(csv_part(&text).lines().count(), 3);
    assert!(text.contains("state=none") && text.contains("insufficient points"));
}

#[test]
fn output_file_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.csv");
    let out = gausscol(&["certify", "--n", "25", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, stdout(&gausscol(&["certify", "--n", "25"])));

    let json: serde_json::Value =
        serde_json::from_slice(&gausscol(&["sweep", "--n", "5:9:2", "--format", "json"]).stdout)
            .unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    assert!(json["rows"][0]["dense_err_state"].as_f64().unwrap() > 0.0);

    let json: serde_json::Value =
        serde_json::from_slice(&gausscol(&["solve", "--n", "6", "--format", "json"]).stdout)
            .unwrap();
    assert_eq!(json["converged"], serde_json::Value::Bool(true));
    assert_eq!(json["nodes"].as_array().unwrap().len(), 8);

    let json: serde_json::Value =
        serde_json::from_slice(&gausscol(&["rule", "--n", "3", "--format", "json"]).stdout)
            .unwrap();
    assert_eq!(json["weights"].as_array().unwrap().len(), 3);
}

#[test]
fn unwritable_output_is_a_failure() {
    let out = gausscol(&["rule", "--n", "3", "--output", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}
