//! Command-line front end: backtest grids, daily narratives and data checks.

pub mod config;
pub mod narrative;
pub mod validate;

use anyhow::{anyhow, Context, Result};
use bayesviews::backtest::{self, BacktestReport, Strategy};
use bayesviews::marketdata::synthetic::SyntheticMarket;
use bayesviews::marketdata::{adjust_splits, fill_missing, load_data_dir, load_splits, write_csv, DataFiles, MarketFrame};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use config::{RunArgs, RunConfig};
use narrative::NarrativeRecord;
use rayon::prelude::*;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// A bad flag, config key or value; exits with [`EXIT_USAGE`].
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "bayesviews", version, about = "Sentiment-driven Black-Litterman backtests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run strategies over a data directory and write reports.
    Backtest(RunArgs),
    /// Print the narrative for one trading day.
    Explain(ExplainArgs),
    /// Check a data directory's schema, coverage and split sanity.
    ValidateData {
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Write a synthetic data directory.
    Synth {
        #[arg(long, default_value_t = 5)]
        assets: usize,
        #[arg(long, default_value_t = 500)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    /// Trading day to explain.
    #[arg(long)]
    pub date: NaiveDate,
    /// Saved report with a narrative log; skips the run.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print the record as JSON instead of text.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Runs a parsed command, returning the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Backtest(args) => cmd_backtest(&args, out, err),
        Command::Explain(args) => cmd_explain(&args, out),
        Command::ValidateData { data_dir } => cmd_validate(data_dir, out),
        Command::Synth { assets, days, seed, out: dir } => cmd_synth(assets, days, seed, &dir, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            };
            let _ = writeln!(err, "error: {e:#}");
            code
        }
    }
}

/// Loads, split-adjusts, trims to the requested dates and to the first day
/// every asset has data, then forward-fills.
pub fn prepare_frame(dir: &Path, start: Option<NaiveDate>, end: Option<NaiveDate>) -> Result<MarketFrame> {
    let raw = load_data_dir(dir, None)?;
    let files = DataFiles::in_dir(dir);
    let adjusted = if files.splits.exists() {
        adjust_splits(&raw, &load_splits(&files.splits)?)?
    } else {
        raw
    };
    let window = adjusted.slice(start, end)?;
    let first = window
        .first_complete_date()
        .ok_or_else(|| anyhow!("no date in range on which every asset has a price, volume and market cap"))?;
    Ok(fill_missing(&window.slice(Some(first), None)?)?)
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("writing into {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// One row per report: RMSE, SR, MDD and AR, with percentages for the last two.
pub fn metrics_table(reports: &[(&Strategy, &BacktestReport)], sortino: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["strategy", "timespan", "label", "RMSE", "SR", "MDD(%)", "AR(%)"];
    if sortino {
        header.push("Sortino");
    }
    w.write_record(&header).expect("in-memory write");
    for (s, r) in reports {
        let m = &r.metrics;
        let mut row = vec![
            s.kind.to_string(),
            s.timespan.to_string(),
            r.label.clone(),
            format!("{:.4}", m.rmse),
            m.sr.map_or(String::new(), |v| format!("{v:.4}")),
            pct(m.mdd),
            pct(m.ar),
        ];
        if sortino {
            row.push(m.sortino.map_or(String::new(), |v| format!("{v:.4}")));
        }
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

fn render_table(reports: &[(&Strategy, &BacktestReport)]) -> String {
    let mut s = format!("{:<20} {:>8} {:>8} {:>8} {:>8}\n", "strategy", "RMSE", "SR", "MDD(%)", "AR(%)");
    for (_, r) in reports {
        let m = &r.metrics;
        s.push_str(&format!(
            "{:<20} {:>8.4} {:>8} {:>8} {:>8}\n",
            r.label,
            m.rmse,
            m.sr.map_or("-".into(), |v| format!("{v:.4}")),
            pct(m.mdd),
            pct(m.ar)
        ));
    }
    s
}

fn run_grid(cfg: &RunConfig, frame: &MarketFrame, narrative: bool) -> Result<Vec<(Strategy, Result<BacktestReport>)>> {
    let grid = cfg.grid();
    let bt = cfg.backtest_config(narrative);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build()?;
    let results: Vec<_> = pool.install(|| {
        grid.par_iter()
            .map(|s| backtest::run(s, frame, &bt).map_err(anyhow::Error::from))
            .collect()
    });
    Ok(grid.into_iter().zip(results).collect())
}

fn cmd_backtest(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(args)?;
    let frame = prepare_frame(&cfg.data_dir, cfg.start, cfg.end)?;
    let results = run_grid(&cfg, &frame, cfg.explain_date.is_some())?;
    let mut ok = Vec::new();
    let mut failed = 0;
    for (s, r) in &results {
        match r {
            Ok(report) => {
                let stem = cfg.stem(s);
                write_atomic(&cfg.out.join(format!("{stem}.report.json")), report.to_json().as_bytes())?;
                write_atomic(&cfg.out.join(format!("{stem}.values.csv")), report.values_csv().as_bytes())?;
                write_atomic(&cfg.out.join(format!("{stem}.weights.csv")), report.weights_csv().as_bytes())?;
                ok.push((s, report));
            }
            Err(e) => {
                failed += 1;
                writeln!(err, "error: {}: {e:#}", s.label())?;
            }
        }
    }
    if !ok.is_empty() {
        write_atomic(&cfg.out.join("metrics_table.csv"), metrics_table(&ok, cfg.sortino).as_bytes())?;
        write!(out, "{}", render_table(&ok))?;
    }
    if let Some(date) = cfg.explain_date {
        for (_, report) in &ok {
            let record = find_narrative(report, date)?;
            writeln!(out, "\n[{}]\n{}", report.label, record.render())?;
        }
    }
    Ok(if failed > 0 { EXIT_RUNTIME } else { 0 })
}

/// Narrative for `date` from a report run with narrative logging.
pub fn find_narrative(report: &BacktestReport, date: NaiveDate) -> Result<NarrativeRecord> {
    if report.narrative.is_empty() {
        anyhow::bail!("report `{}` has no narrative log", report.label);
    }
    let entry = report.narrative.iter().find(|e| e.date == date).ok_or_else(|| {
        let first = report.narrative.first().map(|e| e.date);
        let last = report.narrative.last().map(|e| e.date);
        anyhow!(
            "date {date} is not a trading day of this run ({} to {})",
            first.expect("non-empty"),
            last.expect("non-empty")
        )
    })?;
    Ok(NarrativeRecord::from_entry(entry, &report.tickers))
}

fn cmd_explain(args: &ExplainArgs, out: &mut dyn Write) -> Result<i32> {
    let (report, out_dir) = match &args.report {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let report: BacktestReport =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            (report, args.run.out.clone())
        }
        None => {
            let mut run = args.run.clone();
            if run.strategy.is_empty() {
                run.strategy = vec![backtest::StrategyKind::BlSentiment];
            }
            let cfg = RunConfig::resolve(&run)?;
            let frame = prepare_frame(&cfg.data_dir, cfg.start, cfg.end)?;
            let s = cfg.strategy(cfg.strategies[0], cfg.timespans[0]);
            let report = backtest::run(&s, &frame, &cfg.backtest_config(true))?;
            (report, run.out.clone().map(|_| cfg.out))
        }
    };
    let record = find_narrative(&report, args.date)?;
    let json = serde_json::to_string_pretty(&record)?;
    if args.json {
        writeln!(out, "{json}")?;
    } else {
        writeln!(out, "{}", record.render())?;
    }
    if let Some(dir) = out_dir {
        write_atomic(&dir.join(format!("explain-{}.json", args.date)), json.as_bytes())?;
    }
    Ok(0)
}

fn cmd_validate(data_dir: Option<PathBuf>, out: &mut dyn Write) -> Result<i32> {
    let dir = data_dir
        .or_else(|| std::env::var_os(config::DATA_DIR_ENV).map(PathBuf::from))
        .ok_or_else(|| UsageError(format!("no data directory: pass --data-dir or set {}", config::DATA_DIR_ENV)))?;
    let report = validate::validate_dir(&dir)?;
    write!(out, "{}", report.render())?;
    Ok(0)
}

fn cmd_synth(assets: usize, days: usize, seed: u64, dir: &Path, out: &mut dyn Write) -> Result<i32> {
    if assets == 0 || days < 2 {
        return Err(UsageError("synth needs at least one asset and two days".into()).into());
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let frame = SyntheticMarket::new(assets, days, seed).build();
    write_csv(&frame, dir)?;
    writeln!(out, "wrote {assets} assets x {days} days to {}", dir.display())?;
    Ok(0)
}
