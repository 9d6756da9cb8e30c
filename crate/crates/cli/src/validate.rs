//! Data directory checks: schema, coverage and unrecorded split candidates.

use anyhow::Result;
use bayesviews::marketdata::{load_data_dir, load_splits, DataFiles, MarketFrame, SplitEvent};
use chrono::NaiveDate;
use serde::Serialize;
use std::collections::HashSet;
use std::path::Path;

/// Overnight price ratio (either direction) that flags a candidate
/// unadjusted split.
pub const JUMP_RATIO: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickerCoverage {
    pub ticker: String,
    pub first_price: Option<NaiveDate>,
    pub last_price: Option<NaiveDate>,
    pub price_days: usize,
    /// Frame dates between the first and last price with no price.
    pub missing_price_days: usize,
    pub sentiment_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceJump {
    pub ticker: String,
    pub date: NaiveDate,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub n_dates: usize,
    /// Calendar days in range that appear in no file.
    pub calendar_gaps: usize,
    pub coverage: Vec<TickerCoverage>,
    pub jumps: Vec<PriceJump>,
}

impl ValidationReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "OK\n{} dates from {} to {} ({} calendar days absent)\n",
            self.n_dates, self.first_date, self.last_date, self.calendar_gaps
        );
        s.push_str(&format!(
            "{:<10} {:>12} {:>12} {:>8} {:>8} {:>10}\n",
            "ticker", "first", "last", "prices", "missing", "sentiment"
        ));
        let date = |d: Option<NaiveDate>| d.map_or("-".to_string(), |d| d.to_string());
        for c in &self.coverage {
            s.push_str(&format!(
                "{:<10} {:>12} {:>12} {:>8} {:>8} {:>10}\n",
                c.ticker,
                date(c.first_price),
                date(c.last_price),
                c.price_days,
                c.missing_price_days,
                c.sentiment_days
            ));
        }
        for j in &self.jumps {
            s.push_str(&format!(
                "warning: {} on {}: price moved {:.3}x overnight with no split recorded\n",
                j.ticker, j.date, j.ratio
            ));
        }
        s
    }
}

/// Loads the directory (failing on schema errors) and summarizes it.
pub fn validate_dir(dir: &Path) -> Result<ValidationReport> {
    if !dir.is_dir() {
        anyhow::bail!("{}: not a directory", dir.display());
    }
    let frame = load_data_dir(dir, None)?;
    let files = DataFiles::in_dir(dir);
    let splits = if files.splits.exists() {
        load_splits(&files.splits)?
    } else {
        Vec::new()
    };
    Ok(summarize(&frame, &splits))
}

pub fn summarize(frame: &MarketFrame, splits: &[SplitEvent]) -> ValidationReport {
    let dates = frame.dates();
    let first_date = dates[0];
    let last_date = dates[dates.len() - 1];
    let span = (last_date - first_date).num_days() as usize + 1;
    let coverage = frame
        .universe()
        .tickers()
        .iter()
        .enumerate()
        .map(|(i, ticker)| {
            let observed: Vec<usize> = (0..frame.n_days()).filter(|&t| frame.prices()[(t, i)].is_finite()).collect();
            let (first, last) = (observed.first().copied(), observed.last().copied());
            TickerCoverage {
                ticker: ticker.clone(),
                first_price: first.map(|t| dates[t]),
                last_price: last.map(|t| dates[t]),
                price_days: observed.len(),
                missing_price_days: match (first, last) {
                    (Some(a), Some(b)) => b - a + 1 - observed.len(),
                    _ => 0,
                },
                sentiment_days: (0..frame.n_days()).filter(|&t| frame.sentiment_cell(t, i).is_some()).count(),
            }
        })
        .collect();
    ValidationReport {
        first_date,
        last_date,
        n_dates: dates.len(),
        calendar_gaps: span - dates.len(),
        coverage,
        jumps: price_jumps(frame, splits),
    }
}

/// Observed overnight moves of at least [`JUMP_RATIO`] in either direction
/// that no split event explains.
pub fn price_jumps(frame: &MarketFrame, splits: &[SplitEvent]) -> Vec<PriceJump> {
    let recorded: HashSet<(&str, NaiveDate)> = splits.iter().map(|s| (s.ticker.as_str(), s.date)).collect();
    let mut out = Vec::new();
    for (i, ticker) in frame.universe().tickers().iter().enumerate() {
        let mut prev: Option<f64> = None;
        for t in 0..frame.n_days() {
            let p = frame.prices()[(t, i)];
            if !p.is_finite() {
                continue;
            }
            if let Some(q) = prev {
                let ratio = p / q;
                let date = frame.dates()[t];
                if (ratio >= JUMP_RATIO || ratio <= 1.0 / JUMP_RATIO) && !recorded.contains(&(ticker.as_str(), date)) {
                    out.push(PriceJump {
                        ticker: ticker.clone(),
                        date,
                        ratio,
                    });
                }
            }
            prev = Some(p);
        }
    }
    out
}
