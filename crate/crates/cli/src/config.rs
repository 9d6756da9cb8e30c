//! Run configuration: a flat JSON file merged with command-line flags.
//! Flags win over the file, the file wins over `BAYESVIEWS_DATA_DIR` and
//! built-in defaults.

use crate::UsageError;
use bayesviews::allocation::{DEFAULT_DELTA, DEFAULT_TAU};
use bayesviews::backtest::{BacktestConfig, Strategy, StrategyKind, DEFAULT_RANDOM_BOUND};
use bayesviews::learners::{LearnerConfig, ModelKind};
use chrono::NaiveDate;
use clap::{Args, ValueEnum};
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const DATA_DIR_ENV: &str = "BAYESVIEWS_DATA_DIR";
pub const DEFAULT_TIMESPAN: usize = 90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        s == Switch::On
    }
}

/// A comma-separated string or a JSON array.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    Many(Vec<T>),
    One(T),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Sentiment {
    Flag(bool),
    Word(Switch),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data_dir: Option<PathBuf>,
    strategy: Option<OneOrMany<String>>,
    timespan: Option<OneOrMany<usize>>,
    delta: Option<f64>,
    tau: Option<f64>,
    model: Option<ModelKind>,
    sentiment: Option<Sentiment>,
    start: Option<NaiveDate>,
    end: Option<NaiveDate>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    explain_date: Option<NaiveDate>,
    denfis_d: Option<f64>,
    m_activate: Option<usize>,
    bptt_horizon: Option<usize>,
    learning_rate: Option<f64>,
    random_bound: Option<f64>,
    sortino: Option<bool>,
    jobs: Option<usize>,
}

/// Flags shared by every command that runs a backtest.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory with prices.csv, volumes.csv, mcap.csv, sentiment.csv
    /// and optionally splits.csv. Defaults to $BAYESVIEWS_DATA_DIR.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Comma list of vw, markowitz, bl_random, bl_sentiment, nt, nt_sentiment.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<StrategyKind>,
    /// Comma list of covariance windows in days.
    #[arg(long, value_delimiter = ',')]
    pub timespan: Vec<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    /// Sentiment features for the view learner.
    #[arg(long)]
    pub sentiment: Option<Switch>,
    /// First date of the frame (inclusive).
    #[arg(long)]
    pub start: Option<NaiveDate>,
    /// Last date of the frame (inclusive).
    #[arg(long)]
    pub end: Option<NaiveDate>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record a narrative and print it for this date.
    #[arg(long)]
    pub explain_date: Option<NaiveDate>,
    /// DENFIS cluster distance threshold.
    #[arg(long)]
    pub denfis_d: Option<f64>,
    /// DENFIS rules activated per prediction.
    #[arg(long)]
    pub m_activate: Option<usize>,
    /// LSTM truncated backpropagation horizon.
    #[arg(long)]
    pub bptt_horizon: Option<usize>,
    /// LSTM rmsprop learning rate.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Half-width of the random view distribution (daily return).
    #[arg(long)]
    pub random_bound: Option<f64>,
    /// Also compute the Sortino ratio.
    #[arg(long)]
    pub sortino: bool,
    /// Worker threads for the strategy grid.
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

/// Fully resolved and validated settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub strategies: Vec<StrategyKind>,
    pub timespans: Vec<usize>,
    pub delta: f64,
    pub tau: f64,
    pub learner: LearnerConfig,
    pub seed: u64,
    pub random_bound: f64,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub out: PathBuf,
    pub explain_date: Option<NaiveDate>,
    pub sortino: bool,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, UsageError> {
        let file = match &args.config {
            Some(p) => read_config(p)?,
            None => FileConfig::default(),
        };
        let data_dir = args
            .data_dir
            .clone()
            .or(file.data_dir)
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .ok_or_else(|| UsageError(format!("no data directory: pass --data-dir or set {DATA_DIR_ENV}")))?;
        let strategies = if !args.strategy.is_empty() {
            args.strategy.clone()
        } else {
            match file.strategy {
                Some(list) => parse_strategies(list)?,
                None => StrategyKind::ALL.to_vec(),
            }
        };
        let timespans = if !args.timespan.is_empty() {
            args.timespan.clone()
        } else {
            match file.timespan {
                Some(OneOrMany::Many(v)) => v,
                Some(OneOrMany::One(t)) => vec![t],
                None => vec![DEFAULT_TIMESPAN],
            }
        };
        let seed = args.seed.or(file.seed).unwrap_or(0);
        let defaults = LearnerConfig::default();
        let sentiment = args.sentiment.map(bool::from).or(file.sentiment.map(|s| match s {
            Sentiment::Flag(b) => b,
            Sentiment::Word(w) => w.into(),
        }));
        let learner = LearnerConfig {
            model: args.model.or(file.model).unwrap_or(defaults.model),
            d: args.denfis_d.or(file.denfis_d).unwrap_or(defaults.d),
            m_activate: args.m_activate.or(file.m_activate).unwrap_or(defaults.m_activate),
            bptt_horizon: args.bptt_horizon.or(file.bptt_horizon).unwrap_or(defaults.bptt_horizon),
            learning_rate: args.learning_rate.or(file.learning_rate).unwrap_or(defaults.learning_rate),
            seed,
            use_sentiment: sentiment.unwrap_or(defaults.use_sentiment),
            use_capital: defaults.use_capital,
        };
        let cfg = Self {
            data_dir,
            strategies,
            timespans,
            delta: args.delta.or(file.delta).unwrap_or(DEFAULT_DELTA),
            tau: args.tau.or(file.tau).unwrap_or(DEFAULT_TAU),
            learner,
            seed,
            random_bound: args.random_bound.or(file.random_bound).unwrap_or(DEFAULT_RANDOM_BOUND),
            start: args.start.or(file.start),
            end: args.end.or(file.end),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            explain_date: args.explain_date.or(file.explain_date),
            sortino: args.sortino || file.sortino.unwrap_or(false),
            jobs: args.jobs.or(file.jobs),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), UsageError> {
        let bad = |m: String| Err(UsageError(m));
        if self.strategies.is_empty() {
            return bad("at least one strategy is required".into());
        }
        if self.timespans.is_empty() {
            return bad("at least one timespan is required".into());
        }
        if let Some(t) = self.timespans.iter().find(|t| **t < 31) {
            return bad(format!("timespan must be >= 31 days, got {t}"));
        }
        for (name, v) in [("delta", self.delta), ("tau", self.tau)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be a positive number, got {v}"));
            }
        }
        if !(self.random_bound.is_finite() && self.random_bound >= 0.0) {
            return bad(format!("random_bound must be finite and >= 0, got {}", self.random_bound));
        }
        if !(self.learner.d.is_finite() && self.learner.d > 0.0) {
            return bad(format!("denfis_d must be positive, got {}", self.learner.d));
        }
        if self.learner.m_activate == 0 {
            return bad("m_activate must be at least 1".into());
        }
        if self.learner.bptt_horizon == 0 {
            return bad("bptt_horizon must be at least 1".into());
        }
        if !(self.learner.learning_rate.is_finite() && self.learner.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learner.learning_rate));
        }
        if let (Some(s), Some(e)) = (self.start, self.end) {
            if s > e {
                return bad(format!("start {s} is after end {e}"));
            }
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        Ok(())
    }

    pub fn strategy(&self, kind: StrategyKind, timespan: usize) -> Strategy {
        Strategy {
            kind,
            timespan,
            learner: self.learner.clone(),
            seed: self.seed,
            random_bound: self.random_bound,
        }
    }

    /// Every (strategy, timespan) cell, timespan-major.
    pub fn grid(&self) -> Vec<Strategy> {
        self.timespans
            .iter()
            .flat_map(|&ts| self.strategies.iter().map(move |&k| (k, ts)))
            .map(|(k, ts)| self.strategy(k, ts))
            .collect()
    }

    pub fn backtest_config(&self, narrative: bool) -> BacktestConfig {
        BacktestConfig {
            delta: self.delta,
            tau: self.tau,
            narrative,
            sortino: self.sortino,
            ..BacktestConfig::default()
        }
    }

    /// Report file stem for a grid cell; the timespan is appended only when
    /// the run covers several.
    pub fn stem(&self, s: &Strategy) -> String {
        if self.timespans.len() > 1 {
            format!("{}_{}", s.kind, s.timespan)
        } else {
            s.kind.to_string()
        }
    }
}

fn read_config(path: &Path) -> Result<FileConfig, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn parse_strategies(list: OneOrMany<String>) -> Result<Vec<StrategyKind>, UsageError> {
    let items: Vec<String> = match list {
        OneOrMany::Many(v) => v,
        OneOrMany::One(s) => s.split(',').map(str::to_string).collect(),
    };
    items.iter().map(|s| s.parse().map_err(UsageError)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn with_file(json: &str) -> (tempfile::NamedTempFile, RunArgs) {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(json.as_bytes()).unwrap();
        let args = RunArgs {
            config: Some(f.path().to_path_buf()),
            ..RunArgs::default()
        };
        (f, args)
    }

    #[test]
    fn file_values_apply_and_flags_win() {
        let (_f, mut args) = with_file(
            r#"{"data_dir":"d","strategy":"vw,markowitz","timespan":[90,180],"delta":0.5,"model":"lstm","sentiment":"off","seed":4}"#,
        );
        let c = RunConfig::resolve(&args).unwrap();
        assert_eq!(c.strategies, vec![StrategyKind::Vw, StrategyKind::Markowitz]);
        assert_eq!(c.timespans, vec![90, 180]);
        assert_eq!(c.delta, 0.5);
        assert_eq!(c.tau, DEFAULT_TAU);
        assert_eq!(c.learner.model, ModelKind::Lstm);
        assert!(!c.learner.use_sentiment);
        assert_eq!(c.grid().len(), 4);
        args.delta = Some(0.3);
        args.strategy = vec![StrategyKind::Nt];
        args.sentiment = Some(Switch::On);
        let c = RunConfig::resolve(&args).unwrap();
        assert_eq!(c.delta, 0.3);
        assert_eq!(c.strategies, vec![StrategyKind::Nt]);
        assert!(c.learner.use_sentiment);
    }

    #[test]
    fn invalid_settings_are_usage_errors() {
        for json in [
            r#"{"data_dir":"d","strategy":"momentum"}"#,
            r#"{"data_dir":"d","timespan":20}"#,
            r#"{"data_dir":"d","tau":-1}"#,
            r#"{"data_dir":"d","colour":"red"}"#,
            r#"{"data_dir":"d","start":"2017-02-01","end":"2017-01-01"}"#,
        ] {
            let (_f, args) = with_file(json);
            assert!(RunConfig::resolve(&args).is_err(), "{json}");
        }
    }

    #[test]
    fn stems_include_timespan_only_for_grids() {
        let (_f, mut args) = with_file(r#"{"data_dir":"d","strategy":["vw"]}"#);
        let c = RunConfig::resolve(&args).unwrap();
        assert_eq!(c.stem(&c.grid()[0]), "vw");
        args.timespan = vec![90, 180];
        let c = RunConfig::resolve(&args).unwrap();
        assert_eq!(c.stem(&c.grid()[1]), "vw_180");
    }
}
