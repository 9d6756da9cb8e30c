//! Daily-rebalancing trading simulation.
//!
//! On each decision day `t` a strategy sees the frame up to `t`, picks
//! weights, and holds them over `(t, t+1]`. No short selling, fees or
//! taxes; positions are infinitely divisible.

pub mod metrics;
mod strategies;

pub use strategies::{
    day_model, random_views, vw_weights, Allocator, Decision, DecisionContext, HindsightViews, LearnedViews,
    NeuralTrading, NoViews, RandomViews, ValueWeighted, ViewRecord,
};

use crate::allocation::{optimal_one_hot, project_simplex, AllocError, DEFAULT_DELTA, DEFAULT_TAU};
use crate::features::{FeatureConfig, MA_WINDOW};
use crate::learners::{Denfis, LearnError, LearnerConfig, Lstm, ModelKind};
use crate::marketdata::{AccessAudit, CausalView, FrameAccess, MarketFrame, SentimentRecord};
use crate::views::ViewError;
use chrono::NaiveDate;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INITIAL_CAPITAL: f64 = 10_000.0;
pub const DEFAULT_RANDOM_BOUND: f64 = 0.02;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("need at least {needed} days, frame has {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("frame has gaps or unobserved cells; fill it first")]
    NotFilled,
    #[error("market caps on day {t} sum to zero")]
    ZeroTotalCap { t: usize },
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("portfolio value must stay positive")]
    NonPositiveValue,
    #[error("portfolio returns have zero variation")]
    DegenerateVolatility,
    #[error("strategy produced non-finite weights on day {t}")]
    NonFiniteWeights { t: usize },
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    View(#[from] ViewError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Vw,
    Markowitz,
    BlRandom,
    BlSentiment,
    Nt,
    NtSentiment,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        Self::Vw,
        Self::Markowitz,
        Self::BlRandom,
        Self::BlSentiment,
        Self::Nt,
        Self::NtSentiment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Vw => "vw",
            Self::Markowitz => "markowitz",
            Self::BlRandom => "bl_random",
            Self::BlSentiment => "bl_sentiment",
            Self::Nt => "nt",
            Self::NtSentiment => "nt_sentiment",
        }
    }

    pub fn uses_model(self) -> bool {
        matches!(self, Self::BlSentiment | Self::Nt | Self::NtSentiment)
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                format!("unknown strategy `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    /// Days of returns in the covariance window.
    pub timespan: usize,
    pub learner: LearnerConfig,
    pub seed: u64,
    /// Half-width of the uniform random view distribution.
    pub random_bound: f64,
}

impl Strategy {
    pub fn new(kind: StrategyKind, timespan: usize) -> Self {
        Self {
            kind,
            timespan,
            learner: LearnerConfig::default(),
            seed: 0,
            random_bound: DEFAULT_RANDOM_BOUND,
        }
    }

    pub fn validate(&self) -> Result<(), BacktestError> {
        if self.timespan < 31 {
            return Err(BacktestError::InvalidStrategy(format!("timespan must be >= 31, got {}", self.timespan)));
        }
        if !(self.random_bound.is_finite() && self.random_bound >= 0.0) {
            return Err(BacktestError::InvalidStrategy("random view bound must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Row label in the style `Markowitz90(Ω∅)`, `DENFIS(BL180+s)`.
    pub fn label(&self) -> String {
        let model = match self.learner.model {
            ModelKind::Denfis => "DENFIS",
            ModelKind::Lstm => "LSTM",
        };
        let ts = self.timespan;
        match self.kind {
            StrategyKind::Vw => "VW".into(),
            StrategyKind::Markowitz => format!("Markowitz{ts}(Ω∅)"),
            StrategyKind::BlRandom => format!("BL{ts}(Ωr)"),
            StrategyKind::BlSentiment if self.learner.use_sentiment => format!("{model}(BL{ts}+s)"),
            StrategyKind::BlSentiment => format!("{model}(BL{ts})"),
            StrategyKind::Nt => format!("{model}(NT)"),
            StrategyKind::NtSentiment => format!("{model}(NT+s)"),
        }
    }

    /// Feature switches: NT ignores sentiment, NT+s uses it, and the view
    /// strategy follows the learner setting.
    pub fn feature_config(&self) -> FeatureConfig {
        let mut f = self.learner.feature_config();
        match self.kind {
            StrategyKind::Nt => f.use_sentiment = false,
            StrategyKind::NtSentiment => f.use_sentiment = true,
            _ => {}
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub delta: f64,
    pub tau: f64,
    pub initial_capital: f64,
    /// Record per-day sentiment, views and weights for narratives.
    pub narrative: bool,
    pub sortino: bool,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            tau: DEFAULT_TAU,
            initial_capital: INITIAL_CAPITAL,
            narrative: false,
            sortino: false,
        }
    }
}

/// Weights held by a portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioState {
    pub value: f64,
    pub weights_held: DVector<f64>,
    pub weights_raw: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    /// Close at which the holding period ends.
    pub next_date: NaiveDate,
    pub weights_raw: Vec<f64>,
    pub weights_held: Vec<f64>,
    pub optimal: Vec<f64>,
    /// Value at the close of `date`, before the holding period.
    pub value: f64,
    /// Value one day later.
    pub next_value: f64,
    pub gross_return: f64,
    pub vw_gross_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Against held (projected) weights.
    pub rmse: f64,
    /// Against raw (pre-projection) weights.
    pub rmse_raw: f64,
    pub ar: f64,
    pub sr: Option<f64>,
    pub mdd: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sortino: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeEntry {
    pub date: NaiveDate,
    pub next_date: NaiveDate,
    pub sentiment: Vec<SentimentRecord>,
    pub views: Option<ViewRecord>,
    /// Weights held going into `date`.
    pub weights_current: Vec<f64>,
    /// Weights chosen on `date`.
    pub weights_next: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub strategy: String,
    pub label: String,
    pub timespan: usize,
    pub tickers: Vec<String>,
    pub initial_capital: f64,
    pub metrics: Metrics,
    pub daily: Vec<DailyRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub narrative: Vec<NarrativeEntry>,
}

impl BacktestReport {
    /// `(date, value)` pairs: the initial capital on the first decision day
    /// followed by the value after each holding period.
    pub fn value_series(&self) -> Vec<(NaiveDate, f64)> {
        let mut out = Vec::with_capacity(self.daily.len() + 1);
        if let Some(first) = self.daily.first() {
            out.push((first.date, first.value));
        }
        for d in &self.daily {
            out.push((d.next_date, d.next_value));
        }
        out
    }

    pub fn final_value(&self) -> f64 {
        self.daily.last().map_or(self.initial_capital, |d| d.next_value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn values_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["date", "value"]).expect("in-memory write");
        for (d, v) in self.value_series() {
            w.write_record([d.to_string(), v.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }

    pub fn weights_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["date".to_string()];
        header.extend(self.tickers.iter().map(|t| format!("{t}_held")));
        header.extend(self.tickers.iter().map(|t| format!("{t}_raw")));
        w.write_record(&header).expect("in-memory write");
        for d in &self.daily {
            let mut rec = vec![d.date.to_string()];
            rec.extend(d.weights_held.iter().map(|v| v.to_string()));
            rec.extend(d.weights_raw.iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }
}

/// First decision day for a covariance window of `timespan` returns.
pub fn first_decision_day(timespan: usize) -> usize {
    timespan.max(MA_WINDOW) + 1
}

/// Builds the allocator for a strategy.
pub fn make_allocator(
    strategy: &Strategy,
    n_assets: usize,
    config: &BacktestConfig,
) -> Result<Box<dyn Allocator>, BacktestError> {
    strategy.validate()?;
    let (ts, delta, tau) = (strategy.timespan, config.delta, config.tau);
    let features = strategy.feature_config();
    let n_in = crate::features::input_len(n_assets);
    let lc = &strategy.learner;
    Ok(match strategy.kind {
        StrategyKind::Vw => Box::new(ValueWeighted),
        StrategyKind::Markowitz => Box::new(NoViews { timespan: ts, delta, tau }),
        StrategyKind::BlRandom => Box::new(RandomViews::new(ts, delta, tau, strategy.random_bound, strategy.seed)),
        StrategyKind::BlSentiment => match lc.model {
            ModelKind::Denfis => Box::new(LearnedViews::new(
                Denfis::new(lc.denfis_config(n_in, n_assets))?,
                features,
                n_assets,
                ts,
                delta,
                tau,
            )),
            ModelKind::Lstm => Box::new(LearnedViews::new(
                Lstm::new(lc.lstm_config(n_in, n_assets))?,
                features,
                n_assets,
                ts,
                delta,
                tau,
            )),
        },
        StrategyKind::Nt | StrategyKind::NtSentiment => match lc.model {
            ModelKind::Denfis => Box::new(NeuralTrading::new(
                Denfis::new(lc.denfis_config(n_in, n_assets))?,
                features,
                n_assets,
                ts,
                delta,
                tau,
            )),
            ModelKind::Lstm => Box::new(NeuralTrading::new(
                Lstm::new(lc.lstm_config(n_in, n_assets))?,
                features,
                n_assets,
                ts,
                delta,
                tau,
            )),
        },
    })
}

pub fn run(strategy: &Strategy, frame: &MarketFrame, config: &BacktestConfig) -> Result<BacktestReport, BacktestError> {
    run_audited(strategy, frame, config, None)
}

/// As [`run`], counting every frame read the strategy makes.
pub fn run_audited(
    strategy: &Strategy,
    frame: &MarketFrame,
    config: &BacktestConfig,
    audit: Option<&AccessAudit>,
) -> Result<BacktestReport, BacktestError> {
    let mut alloc = make_allocator(strategy, frame.n_assets(), config)?;
    let mut report = run_with(alloc.as_mut(), frame, strategy.timespan, config, audit)?;
    report.strategy = strategy.kind.name().into();
    report.label = strategy.label();
    Ok(report)
}

/// Runs any allocator over the frame from the first decision day for
/// `timespan` to the second-to-last day.
pub fn run_with(
    allocator: &mut dyn Allocator,
    frame: &MarketFrame,
    timespan: usize,
    config: &BacktestConfig,
    audit: Option<&AccessAudit>,
) -> Result<BacktestReport, BacktestError> {
    if !frame.is_filled() {
        return Err(BacktestError::NotFilled);
    }
    if !(config.initial_capital.is_finite() && config.initial_capital > 0.0) {
        return Err(BacktestError::NonPositiveValue);
    }
    let start = first_decision_day(timespan);
    let n_days = frame.n_days();
    if n_days < start + 2 {
        return Err(BacktestError::InsufficientHistory {
            needed: start + 2,
            available: n_days,
        });
    }
    let n = frame.n_assets();
    let mut value = config.initial_capital;
    let mut held = vw_weights(frame, start)?;
    let mut daily = Vec::with_capacity(n_days - start - 1);
    let mut narrative = Vec::new();

    for t in start..n_days - 1 {
        let view = match audit {
            Some(a) => CausalView::audited(frame, t, a),
            None => CausalView::new(frame, t),
        };
        let decision = allocator.decide(&DecisionContext {
            frame: &view,
            t,
            capital: value,
            held: &held,
        })?;
        if decision.raw.len() != n || decision.raw.iter().any(|w| !w.is_finite()) {
            return Err(BacktestError::NonFiniteWeights { t });
        }
        let next_held = project_simplex(&decision.raw);
        let p0 = frame.prices().row(t).transpose();
        let p1 = frame.prices().row(t + 1).transpose();
        let ratio = p1.component_div(&p0);
        let gross = next_held.dot(&ratio);
        let vw_gross = vw_weights(frame, t)?.dot(&ratio);
        let next_value = value * gross;
        if !(next_value.is_finite() && next_value > 0.0) {
            return Err(BacktestError::NonPositiveValue);
        }
        if config.narrative {
            narrative.push(NarrativeEntry {
                date: frame.dates()[t],
                next_date: frame.dates()[t + 1],
                sentiment: (0..n).map(|i| frame.sentiment(t, i)).collect(),
                views: decision.views.clone(),
                weights_current: held.iter().copied().collect(),
                weights_next: next_held.iter().copied().collect(),
            });
        }
        daily.push(DailyRecord {
            date: frame.dates()[t],
            next_date: frame.dates()[t + 1],
            weights_raw: decision.raw.iter().copied().collect(),
            weights_held: next_held.iter().copied().collect(),
            optimal: optimal_one_hot(&p0, &p1).iter().copied().collect(),
            value,
            next_value,
            gross_return: gross,
            vw_gross_return: vw_gross,
        });
        value = next_value;
        held = next_held;
    }

    let metrics = compute_metrics(&daily, config.sortino)?;
    Ok(BacktestReport {
        strategy: String::new(),
        label: String::new(),
        timespan,
        tickers: frame.universe().tickers().to_vec(),
        initial_capital: config.initial_capital,
        metrics,
        daily,
        narrative,
    })
}

/// Metrics from a daily series. A degenerate Sharpe or Sortino ratio is
/// reported as `None`.
pub fn compute_metrics(daily: &[DailyRecord], sortino: bool) -> Result<Metrics, BacktestError> {
    let v = |x: &Vec<f64>| DVector::from_column_slice(x);
    let held: Vec<_> = daily.iter().map(|d| v(&d.weights_held)).collect();
    let raw: Vec<_> = daily.iter().map(|d| v(&d.weights_raw)).collect();
    let opt: Vec<_> = daily.iter().map(|d| v(&d.optimal)).collect();
    let mut values = vec![daily.first().map_or(0.0, |d| d.value)];
    values.extend(daily.iter().map(|d| d.next_value));
    let mut dates = vec![daily.first().map_or(NaiveDate::MIN, |d| d.date)];
    dates.extend(daily.iter().map(|d| d.next_date));
    let rp: Vec<f64> = daily.iter().map(|d| d.gross_return).collect();
    let rb: Vec<f64> = daily.iter().map(|d| d.vw_gross_return).collect();
    let optional = |r: Result<f64, BacktestError>| match r {
        Ok(x) => Ok(Some(x)),
        Err(BacktestError::DegenerateVolatility) => Ok(None),
        Err(e) => Err(e),
    };
    Ok(Metrics {
        rmse: metrics::rmse(&held, &opt)?,
        rmse_raw: metrics::rmse(&raw, &opt)?,
        ar: metrics::annualized_return(&values, &dates)?,
        sr: optional(metrics::sharpe_vs_benchmark(&rp, &rb))?,
        mdd: metrics::max_drawdown(&values)?,
        sortino: if sortino {
            optional(metrics::sortino_vs_benchmark(&rp, &rb))?
        } else {
            None
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::synthetic::SyntheticMarket;
    use crate::marketdata::AssetUniverse;
    use nalgebra::DMatrix;

    fn strategies(ts: usize) -> Vec<Strategy> {
        let mut out = Vec::new();
        for kind in StrategyKind::ALL {
            for model in [ModelKind::Denfis, ModelKind::Lstm] {
                if !kind.uses_model() && model == ModelKind::Lstm {
                    continue;
                }
                let mut s = Strategy::new(kind, ts);
                s.learner.model = model;
                s.learner.bptt_horizon = 5;
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn single_asset_tracks_the_price() {
        let f = SyntheticMarket::new(1, 120, 3).build();
        let cfg = BacktestConfig::default();
        for s in strategies(40) {
            let r = run(&s, &f, &cfg).unwrap();
            let start = first_decision_day(40);
            let expect = cfg.initial_capital * f.prices()[(119, 0)] / f.prices()[(start, 0)];
            assert!((r.final_value() / expect - 1.0).abs() < 1e-12, "{}", s.label());
        }
    }

    #[test]
    fn equal_caps_vw_averages_returns() {
        let f = SyntheticMarket::new(2, 80, 5).build();
        let mut caps = f.mcaps().clone();
        caps.fill(1e9);
        let g = MarketFrame::from_parts(
            f.universe().clone(),
            f.dates().to_vec(),
            f.prices().clone(),
            f.volumes().clone(),
            caps,
            (0..160).map(|k| f.sentiment_cell(k / 2, k % 2)).collect(),
        )
        .unwrap();
        let r = run(&Strategy::new(StrategyKind::Vw, 40), &g, &BacktestConfig::default()).unwrap();
        for d in &r.daily {
            let t = g.index_of_date(d.date).unwrap();
            let avg = 0.5 * (g.prices()[(t + 1, 0)] / g.prices()[(t, 0)] + g.prices()[(t + 1, 1)] / g.prices()[(t, 1)]);
            assert!((d.gross_return - avg).abs() < 1e-15);
        }
        assert_eq!(r.metrics.sr, Some(1.0));
    }

    #[test]
    fn self_financing_and_simplex() {
        let f = SyntheticMarket::new(4, 150, 8).build();
        for s in strategies(60) {
            let r = run(&s, &f, &BacktestConfig::default()).unwrap();
            assert_eq!(r.daily[0].value, INITIAL_CAPITAL);
            for (k, d) in r.daily.iter().enumerate() {
                let t = f.index_of_date(d.date).unwrap();
                let w = DVector::from_column_slice(&d.weights_held);
                assert!(w.iter().all(|x| *x >= 0.0) && (w.sum() - 1.0).abs() < 1e-12);
                let ratio = DVector::from_fn(4, |i, _| f.prices()[(t + 1, i)] / f.prices()[(t, i)]);
                assert_eq!(d.next_value, d.value * w.dot(&ratio));
                if k > 0 {
                    assert_eq!(d.value, r.daily[k - 1].next_value);
                }
            }
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let f = SyntheticMarket::new(3, 130, 9).build();
        for s in strategies(45) {
            let a = run(&s, &f, &BacktestConfig::default()).unwrap();
            let b = run(&s, &f, &BacktestConfig::default()).unwrap();
            assert_eq!(a.to_json(), b.to_json(), "{}", s.label());
        }
    }

    #[test]
    fn markowitz_is_projected_capital_weighting() {
        let f = SyntheticMarket::new(3, 100, 10).build();
        let r = run(&Strategy::new(StrategyKind::Markowitz, 40), &f, &BacktestConfig::default()).unwrap();
        for d in &r.daily {
            let t = f.index_of_date(d.date).unwrap();
            let w = vw_weights(&f, t).unwrap();
            let raw = DVector::from_column_slice(&d.weights_raw);
            assert!((raw - &w / (1.0 + DEFAULT_TAU)).amax() < 1e-10);
            let shift = DEFAULT_TAU / (1.0 + DEFAULT_TAU) / 3.0;
            let held = DVector::from_column_slice(&d.weights_held);
            assert!((held - (&w / (1.0 + DEFAULT_TAU)).add_scalar(shift)).amax() < 1e-10);
        }
    }

    #[test]
    fn too_short_and_unfilled_frames_fail() {
        let f = SyntheticMarket::new(2, 40, 1).build();
        assert!(matches!(
            run(&Strategy::new(StrategyKind::Vw, 90), &f, &BacktestConfig::default()),
            Err(BacktestError::InsufficientHistory { .. })
        ));
        let g = MarketFrame::from_parts(
            AssetUniverse::new(["A"]).unwrap(),
            vec![NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2016, 1, 3).unwrap()],
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_element(2, 1, 1.0),
            vec![None; 2],
        )
        .unwrap();
        assert!(matches!(
            run(&Strategy::new(StrategyKind::Vw, 90), &g, &BacktestConfig::default()),
            Err(BacktestError::NotFilled)
        ));
        assert!(Strategy::new(StrategyKind::Vw, 30).validate().is_err());
    }

    #[test]
    fn narrative_and_csv_outputs() {
        let f = SyntheticMarket::new(3, 90, 2).build();
        let cfg = BacktestConfig {
            narrative: true,
            sortino: true,
            ..BacktestConfig::default()
        };
        let r = run(&Strategy::new(StrategyKind::BlRandom, 40), &f, &cfg).unwrap();
        assert_eq!(r.narrative.len(), r.daily.len());
        assert!(r.narrative.iter().all(|e| e.views.is_some()));
        assert_eq!(r.narrative[1].weights_current, r.daily[0].weights_held);
        assert!(r.metrics.sortino.is_some());
        let values = r.values_csv();
        assert_eq!(values.lines().count(), r.daily.len() + 2);
        assert!(values.starts_with("date,value\n"));
        let weights = r.weights_csv();
        assert!(weights.starts_with("date,SYN0_held,SYN1_held,SYN2_held,SYN0_raw"));
        let back: BacktestReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn labels_name_model_and_window() {
        let mut s = Strategy::new(StrategyKind::BlSentiment, 180);
        assert_eq!(s.label(), "DENFIS(BL180+s)");
        s.learner.model = ModelKind::Lstm;
        s.kind = StrategyKind::NtSentiment;
        assert_eq!(s.label(), "LSTM(NT+s)");
        assert_eq!(Strategy::new(StrategyKind::Markowitz, 90).label(), "Markowitz90(Ω∅)");
        assert_eq!("bl_random".parse::<StrategyKind>().unwrap(), StrategyKind::BlRandom);
        assert!("momentum".parse::<StrategyKind>().is_err());
    }
}
