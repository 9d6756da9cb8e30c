//! Market data panel: loading, gap filling and split adjustment.
//!
//! Everything downstream indexes assets by the order fixed in
//! [`AssetUniverse`] and days by row index into [`MarketFrame::dates`].

mod causal;
mod csv_io;
mod prep;
pub mod synthetic;

pub use causal::{AccessAudit, CausalView};
pub use csv_io::{load_csv, load_data_dir, load_splits, write_csv, write_splits, DataFiles};
pub use prep::{adjust_splits, fill_missing};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{file}:{line}: missing column `{column}`")]
    MissingColumn {
        file: PathBuf,
        line: u64,
        column: String,
    },
    #[error("{file}:{line}: ticker `{ticker}` has no price series")]
    UnknownTicker {
        file: PathBuf,
        line: u64,
        ticker: String,
    },
    #[error("{file}:{line}: non-positive price {value} for `{ticker}`")]
    NonPositivePrice {
        file: PathBuf,
        line: u64,
        ticker: String,
        value: f64,
    },
    #[error("{file}:{line}: duplicate row for ({date}, {ticker})")]
    DuplicateDateTicker {
        file: PathBuf,
        line: u64,
        date: NaiveDate,
        ticker: String,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{file}: {source}")]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no observed {series} for `{ticker}` at or before {date}")]
    NoHistoricalValue {
        ticker: String,
        series: &'static str,
        date: NaiveDate,
    },
    #[error("split event for `{ticker}` on {date} is outside the frame")]
    EventOutOfRange { ticker: String, date: NaiveDate },
    #[error("invalid split ratio {ratio} for `{ticker}` on {date}")]
    InvalidSplitRatio {
        ticker: String,
        date: NaiveDate,
        ratio: f64,
    },
    #[error("invalid universe: {0}")]
    InvalidUniverse(String),
    #[error("frame is empty after loading")]
    EmptyFrame,
}

/// Ordered, duplicate-free list of asset identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetUniverse {
    tickers: Vec<String>,
}

impl AssetUniverse {
    pub fn new<S: Into<String>>(tickers: impl IntoIterator<Item = S>) -> Result<Self, DataError> {
        let tickers: Vec<String> = tickers.into_iter().map(Into::into).collect();
        if tickers.is_empty() {
            return Err(DataError::InvalidUniverse("no tickers".into()));
        }
        for (i, t) in tickers.iter().enumerate() {
            if t.trim().is_empty() {
                return Err(DataError::InvalidUniverse("empty ticker".into()));
            }
            if tickers[..i].contains(t) {
                return Err(DataError::InvalidUniverse(format!("duplicate ticker `{t}`")));
            }
        }
        Ok(Self { tickers })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn len(&self) -> usize {
        self.tickers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tickers.is_empty()
    }

    pub fn index_of(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }
}

/// Daily message counts and polarity intensities for one asset.
///
/// A day without messages is the all-zero record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SentimentRecord {
    pub pos_count: u32,
    pub neg_count: u32,
    pub pos_intensity: f64,
    pub neg_intensity: f64,
}

impl SentimentRecord {
    pub fn is_empty(&self) -> bool {
        self.pos_count == 0 && self.neg_count == 0
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.pos_count as f64,
            self.neg_count as f64,
            self.pos_intensity,
            self.neg_intensity,
        ]
    }
}

/// A stock split: `ratio` new shares per old share, effective on `date`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub ticker: String,
    pub date: NaiveDate,
    pub ratio: f64,
}

/// Date-aligned panel of prices, volumes, market caps and sentiment.
///
/// Numeric cells that were not observed hold `NaN` until [`fill_missing`]
/// runs; unobserved sentiment cells hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketFrame {
    pub(crate) universe: AssetUniverse,
    pub(crate) dates: Vec<NaiveDate>,
    pub(crate) price: DMatrix<f64>,
    pub(crate) volume: DMatrix<f64>,
    pub(crate) mcap: DMatrix<f64>,
    pub(crate) sentiment: Vec<Option<SentimentRecord>>,
}

impl MarketFrame {
    /// Builds a frame from dense row-major (`T x n`) blocks. Mainly for tests
    /// and synthetic data; the CSV loader is the usual entry point.
    pub fn from_parts(
        universe: AssetUniverse,
        dates: Vec<NaiveDate>,
        price: DMatrix<f64>,
        volume: DMatrix<f64>,
        mcap: DMatrix<f64>,
        sentiment: Vec<Option<SentimentRecord>>,
    ) -> Result<Self, DataError> {
        let (t, n) = (dates.len(), universe.len());
        let shape_ok = price.shape() == (t, n)
            && volume.shape() == (t, n)
            && mcap.shape() == (t, n)
            && sentiment.len() == t * n;
        if !shape_ok {
            return Err(DataError::InvalidUniverse(format!(
                "panel blocks do not match {t} dates x {n} assets"
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DataError::InvalidUniverse("dates not strictly increasing".into()));
        }
        Ok(Self {
            universe,
            dates,
            price,
            volume,
            mcap,
            sentiment,
        })
    }

    pub fn universe(&self) -> &AssetUniverse {
        &self.universe
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.universe.len()
    }

    pub fn prices(&self) -> &DMatrix<f64> {
        &self.price
    }

    pub fn volumes(&self) -> &DMatrix<f64> {
        &self.volume
    }

    pub fn mcaps(&self) -> &DMatrix<f64> {
        &self.mcap
    }

    pub fn sentiment_cell(&self, t: usize, i: usize) -> Option<SentimentRecord> {
        self.sentiment[t * self.n_assets() + i]
    }

    pub fn index_of_date(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// True when every numeric cell is observed and days are contiguous.
    pub fn is_filled(&self) -> bool {
        let contiguous = self
            .dates
            .windows(2)
            .all(|w| w[1].signed_duration_since(w[0]).num_days() == 1);
        contiguous
            && self.price.iter().all(|v| v.is_finite())
            && self.volume.iter().all(|v| v.is_finite())
            && self.mcap.iter().all(|v| v.is_finite())
            && self.sentiment.iter().all(Option::is_some)
    }

    /// Rows whose date lies in `[start, end]` (either bound optional).
    pub fn slice(&self, start: Option<NaiveDate>, end: Option<NaiveDate>) -> Result<Self, DataError> {
        let lo = start.map_or(0, |d| self.dates.partition_point(|x| *x < d));
        let hi = end.map_or(self.dates.len(), |d| self.dates.partition_point(|x| *x <= d));
        if lo >= hi {
            return Err(DataError::EmptyFrame);
        }
        let n = self.n_assets();
        Ok(Self {
            universe: self.universe.clone(),
            dates: self.dates[lo..hi].to_vec(),
            price: self.price.rows(lo, hi - lo).into_owned(),
            volume: self.volume.rows(lo, hi - lo).into_owned(),
            mcap: self.mcap.rows(lo, hi - lo).into_owned(),
            sentiment: self.sentiment[lo * n..hi * n].to_vec(),
        })
    }

    /// First date on which every asset has an observed price, volume and cap.
    pub fn first_complete_date(&self) -> Option<NaiveDate> {
        let n = self.n_assets();
        let mut seen = vec![false; n];
        for t in 0..self.n_days() {
            for (i, s) in seen.iter_mut().enumerate() {
                if self.price[(t, i)].is_finite()
                    && self.volume[(t, i)].is_finite()
                    && self.mcap[(t, i)].is_finite()
                {
                    *s = true;
                }
            }
            if seen.iter().all(|s| *s) {
                return Some(self.dates[t]);
            }
        }
        None
    }
}

/// Read access to a filled frame by `(day, asset)` index.
///
/// Analytics are written against this trait so the backtester can hand
/// strategies an audited view instead of the full panel.
pub trait FrameAccess {
    fn universe(&self) -> &AssetUniverse;
    fn n_days(&self) -> usize;
    fn date(&self, t: usize) -> NaiveDate;
    fn price(&self, t: usize, i: usize) -> f64;
    fn volume(&self, t: usize, i: usize) -> f64;
    fn mcap(&self, t: usize, i: usize) -> f64;
    /// Missing sentiment reads as the all-zero record.
    fn sentiment(&self, t: usize, i: usize) -> SentimentRecord;

    fn n_assets(&self) -> usize {
        self.universe().len()
    }
}

impl FrameAccess for MarketFrame {
    fn universe(&self) -> &AssetUniverse {
        &self.universe
    }
    fn n_days(&self) -> usize {
        self.dates.len()
    }
    fn date(&self, t: usize) -> NaiveDate {
        self.dates[t]
    }
    fn price(&self, t: usize, i: usize) -> f64 {
        self.price[(t, i)]
    }
    fn volume(&self, t: usize, i: usize) -> f64 {
        self.volume[(t, i)]
    }
    fn mcap(&self, t: usize, i: usize) -> f64 {
        self.mcap[(t, i)]
    }
    fn sentiment(&self, t: usize, i: usize) -> SentimentRecord {
        self.sentiment_cell(t, i).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn universe_rejects_duplicates_and_empty() {
        assert!(AssetUniverse::new(Vec::<String>::new()).is_err());
        assert!(AssetUniverse::new(["A", "B", "A"]).is_err());
        let u = AssetUniverse::new(["AAPL", "GS"]).unwrap();
        assert_eq!(u.len(), 2);
        assert_eq!(u.index_of("GS"), Some(1));
    }

    #[test]
    fn slice_keeps_inclusive_bounds() {
        let f = synthetic::SyntheticMarket::new(2, 10, 1).build();
        let s = f
            .slice(Some(f.dates()[2]), Some(f.dates()[5]))
            .unwrap();
        assert_eq!(s.n_days(), 4);
        assert_eq!(s.prices()[(0, 1)], f.prices()[(2, 1)]);
        assert!(f.slice(Some(f.dates()[5]), Some(f.dates()[2])).is_err());
    }
}
