use bayesviews::backtest::BacktestReport;
use bayesviews_cli::narrative::NarrativeRecord;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bayesviews"));
    c.env_remove("BAYESVIEWS_DATA_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn synth(dir: &Path, assets: &str, days: &str) {
    let out = run(&["synth", "--assets", assets, "--days", days, "--seed", "3", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
}

#[test]
fn smoke_backtest_writes_report_and_values() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out_dir = tmp.path().join("out");
    synth(&data, "3", "200");
    let out = run(&["backtest", "--data-dir", data.to_str().unwrap(), "--strategy", "vw", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("VW"));
    let report: BacktestReport = serde_json::from_str(&fs::read_to_string(out_dir.join("vw.report.json")).unwrap()).unwrap();
    assert_eq!(report.metrics.sr, Some(1.0));
    let values = fs::read_to_string(out_dir.join("vw.values.csv")).unwrap();
    assert!(values.starts_with("date,value\n"));
    assert!(out_dir.join("vw.weights.csv").exists());
    assert!(out_dir.join("metrics_table.csv").exists());
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let out = run(&["backtest", "--data-dir", ".", "--strategy", "momentum"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["backtest", "--data-dir", ".", "--timespan", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("timespan"));
    let out = run(&["backtest", "--strategy", "vw"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_data_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["backtest", "--data-dir", tmp.path().to_str().unwrap(), "--strategy", "vw"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(text(&out.stderr).lines().count(), 1);
}

#[test]
fn grid_writes_six_reports_and_a_metrics_table() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out_dir = tmp.path().join("out");
    synth(&data, "3", "260");
    let out = run(&[
        "backtest",
        "--data-dir",
        data.to_str().unwrap(),
        "--strategy",
        "vw,markowitz,bl_sentiment",
        "--timespan",
        "90,180",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    for stem in ["vw_90", "markowitz_90", "bl_sentiment_90", "vw_180", "markowitz_180", "bl_sentiment_180"] {
        assert!(out_dir.join(format!("{stem}.report.json")).exists(), "{stem}");
    }
    let table = fs::read_to_string(out_dir.join("metrics_table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "strategy,timespan,label,RMSE,SR,MDD(%),AR(%)");
    assert_eq!(lines.len(), 7);
    assert!(table.contains("Markowitz180(Ω∅)"));
    assert!(table.contains("DENFIS(BL90+s)"));
}

#[test]
fn runs_are_reproducible_and_config_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "3", "180");
    let cfg = tmp.path().join("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"data_dir":"{}","strategy":"bl_random,nt","timespan":60,"seed":9,"model":"lstm","bptt_horizon":5}}"#,
            data.display()
        ),
    )
    .unwrap();
    let mut bodies = Vec::new();
    for name in ["a", "b"] {
        let out_dir = tmp.path().join(name);
        let out = run(&["backtest", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", text(&out.stderr));
        bodies.push((
            fs::read(out_dir.join("bl_random.report.json")).unwrap(),
            fs::read(out_dir.join("nt.report.json")).unwrap(),
        ));
    }
    assert_eq!(bodies[0], bodies[1]);
    let nt: BacktestReport = serde_json::from_slice(&bodies[0].1).unwrap();
    assert_eq!(nt.label, "LSTM(NT)");
    assert_eq!(nt.timespan, 60);

    let out_dir = tmp.path().join("c");
    let out = run(&["backtest", "--config", cfg.to_str().unwrap(), "--seed", "10", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert_ne!(fs::read(out_dir.join("bl_random.report.json")).unwrap(), bodies[0].0);
}

#[test]
fn data_dir_defaults_to_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "2", "120");
    let out = bin()
        .args(["backtest", "--strategy", "vw", "--timespan", "40", "--out", tmp.path().join("o").to_str().unwrap()])
        .env("BAYESVIEWS_DATA_DIR", &data)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out.stderr));
}

#[test]
fn explain_matches_the_weight_series() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out_dir = tmp.path().join("out");
    synth(&data, "4", "160");
    let date = "2015-04-20";
    let out = run(&[
        "backtest",
        "--data-dir",
        data.to_str().unwrap(),
        "--strategy",
        "bl_sentiment",
        "--timespan",
        "60",
        "--explain-date",
        date,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("On April 20th 2015, we observe"), "{stdout}");
    assert!(stdout.contains("confidence that SYN"));

    let report_path = out_dir.join("bl_sentiment.report.json");
    let out = run(&["explain", "--date", date, "--report", report_path.to_str().unwrap(), "--json"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let record: NarrativeRecord = serde_json::from_slice(&out.stdout).unwrap();
    let report: BacktestReport = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let k = report.daily.iter().position(|d| d.date.to_string() == date).unwrap();
    for (i, a) in record.assets.iter().enumerate() {
        assert_eq!(a.weight_current, report.daily[k - 1].weights_held[i]);
        assert_eq!(a.weight_next, report.daily[k].weights_held[i]);
        if let Some(f) = a.withdraw_fraction {
            assert!((a.weight_current * (1.0 - f) - a.weight_next).abs() < 1e-12 || a.weight_next > a.weight_current);
        }
    }
    let total: f64 = record.assets.iter().filter_map(|a| a.view.as_ref()).map(|v| v.confidence_pct).sum();
    assert!((total - 100.0).abs() < 1e-9);

    let out = run(&["explain", "--date", "2030-01-01", "--report", report_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("not a trading day"));
}

#[test]
fn explain_runs_a_backtest_when_no_report_is_given() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "3", "120");
    let out = run(&[
        "explain",
        "--date",
        "2015-03-15",
        "--data-dir",
        data.to_str().unwrap(),
        "--strategy",
        "vw",
        "--timespan",
        "40",
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("This strategy does not form market views."));
    assert!(tmp.path().join("o/explain-2015-03-15.json").exists());
}

#[test]
fn validate_reports_coverage_and_jumps() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "2", "60");
    let out = run(&["validate-data", "--data-dir", data.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("OK\n"));
    assert!(stdout.contains("SYN1"));
    assert!(!stdout.contains("warning"));

    // Divide every SYN0 price from 2015-02-01 on by 7: a 7x overnight drop.
    let prices = fs::read_to_string(data.join("prices.csv")).unwrap();
    let mut rows = vec![prices.lines().next().unwrap().to_string()];
    for line in prices.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[1] == "SYN0" && f[0] >= "2015-02-01" {
            let v: f64 = f[2].parse().unwrap();
            rows.push(format!("{},{},{}", f[0], f[1], v / 7.0));
        } else {
            rows.push(line.to_string());
        }
    }
    fs::write(data.join("prices.csv"), rows.join("\n") + "\n").unwrap();
    let out = run(&["validate-data", "--data-dir", data.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    assert!(stdout.contains("warning: SYN0 on 2015-02-01"), "{stdout}");

    fs::write(data.join("splits.csv"), "date,ticker,ratio\n2015-02-01,SYN0,7\n").unwrap();
    let out = run(&["validate-data", "--data-dir", data.to_str().unwrap()]);
    assert!(!text(&out.stdout).contains("warning"));
}

#[test]
fn validate_names_a_missing_column() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "2", "40");
    let s = fs::read_to_string(data.join("sentiment.csv")).unwrap();
    let cut: String = s
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    fs::write(data.join("sentiment.csv"), cut).unwrap();
    let out = run(&["validate-data", "--data-dir", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("neg_intensity"), "{}", text(&out.stderr));
}
