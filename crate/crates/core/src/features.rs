//! Model inputs built from the market panel.
//!
//! Per asset the input holds five price entries (today, three previous days
//! and a 30-day moving average ending today), the same five for volume and
//! the four sentiment fields. A trailing capital entry closes the vector.
//! Flattened order: price block, volume block, sentiment block (each row
//! major by asset), then capital.

use crate::marketdata::{AssetUniverse, FrameAccess};
use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::Path;
use thiserror::Error;

pub const MA_WINDOW: usize = 30;
pub const LAG_LEN: usize = 5;
pub const SENTIMENT_LEN: usize = 4;
pub const PER_ASSET: usize = 2 * LAG_LEN + SENTIMENT_LEN;
pub const NORM_WINDOW: usize = 90;
pub const SD_FLOOR: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("day {t} has fewer than {needed} days of history")]
    InsufficientHistory { t: usize, needed: usize },
    #[error("normalizer already advanced to day {last}, cannot go back to {t}")]
    OutOfOrder { last: usize, t: usize },
    #[error("expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

/// Length of the flattened input for `n` assets.
pub fn input_len(n: usize) -> usize {
    n * PER_ASSET + 1
}

/// Which optional blocks carry data. Disabled blocks are filled with zeros
/// so the layout never changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub use_sentiment: bool,
    pub use_capital: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            use_sentiment: true,
            use_capital: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub price_lags: DMatrix<f64>,
    pub volume_lags: DMatrix<f64>,
    pub sentiment: DMatrix<f64>,
    pub capital: f64,
    flat: DVector<f64>,
}

impl FeatureVector {
    pub fn from_blocks(
        price_lags: DMatrix<f64>,
        volume_lags: DMatrix<f64>,
        sentiment: DMatrix<f64>,
        capital: f64,
    ) -> Result<Self, FeatureError> {
        let n = price_lags.nrows();
        for (m, cols) in [(&price_lags, LAG_LEN), (&volume_lags, LAG_LEN), (&sentiment, SENTIMENT_LEN)] {
            if m.shape() != (n, cols) {
                return Err(FeatureError::DimensionMismatch {
                    expected: n * cols,
                    actual: m.len(),
                });
            }
        }
        let mut flat = Vec::with_capacity(input_len(n));
        for m in [&price_lags, &volume_lags, &sentiment] {
            for r in 0..n {
                flat.extend(m.row(r).iter());
            }
        }
        flat.push(capital);
        Ok(Self {
            price_lags,
            volume_lags,
            sentiment,
            capital,
            flat: DVector::from_vec(flat),
        })
    }

    pub fn from_flat(n: usize, flat: DVector<f64>) -> Result<Self, FeatureError> {
        if flat.len() != input_len(n) {
            return Err(FeatureError::DimensionMismatch {
                expected: input_len(n),
                actual: flat.len(),
            });
        }
        let block = |offset: usize, cols: usize| {
            DMatrix::from_row_slice(n, cols, &flat.as_slice()[offset..offset + n * cols])
        };
        Ok(Self {
            price_lags: block(0, LAG_LEN),
            volume_lags: block(n * LAG_LEN, LAG_LEN),
            sentiment: block(2 * n * LAG_LEN, SENTIMENT_LEN),
            capital: flat[flat.len() - 1],
            flat,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.price_lags.nrows()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.flat
    }
}

/// Column names matching the flattened layout.
pub fn feature_names(universe: &AssetUniverse) -> Vec<String> {
    let lag = ["t", "t-1", "t-2", "t-3", "ma30"];
    let sent = ["pos_count", "neg_count", "pos_intensity", "neg_intensity"];
    let mut out = Vec::with_capacity(input_len(universe.len()));
    for (kind, names) in [("price", &lag[..]), ("volume", &lag[..]), ("sentiment", &sent[..])] {
        for tk in universe.tickers() {
            out.extend(names.iter().map(|s| format!("{tk}.{kind}.{s}")));
        }
    }
    out.push("capital".into());
    out
}

/// `(x_t, x_{t-1}, x_{t-2}, x_{t-3}, mean(x_{t-29..=t}))`.
pub fn lag_features(series: &[f64], t: usize) -> Result<[f64; LAG_LEN], FeatureError> {
    if t + 1 < MA_WINDOW || t >= series.len() {
        return Err(FeatureError::InsufficientHistory { t, needed: MA_WINDOW });
    }
    let ma = series[t + 1 - MA_WINDOW..=t].iter().sum::<f64>() / MA_WINDOW as f64;
    Ok([series[t], series[t - 1], series[t - 2], series[t - 3], ma])
}

/// Per-asset `(pos_count, neg_count, pos_intensity, neg_intensity)` on day `t`.
pub fn sentiment_features<F: FrameAccess + ?Sized>(frame: &F, t: usize) -> DMatrix<f64> {
    let n = frame.n_assets();
    let mut m = DMatrix::zeros(n, SENTIMENT_LEN);
    for i in 0..n {
        let s = frame.sentiment(t, i).as_array();
        for (k, v) in s.into_iter().enumerate() {
            m[(i, k)] = v;
        }
    }
    m
}

/// Unnormalized input for day `t`. Reads only rows `t-29..=t`.
pub fn raw_input<F: FrameAccess + ?Sized>(
    frame: &F,
    t: usize,
    capital: f64,
    config: FeatureConfig,
) -> Result<FeatureVector, FeatureError> {
    if t + 1 < MA_WINDOW || t >= frame.n_days() {
        return Err(FeatureError::InsufficientHistory { t, needed: MA_WINDOW });
    }
    let n = frame.n_assets();
    let lo = t + 1 - MA_WINDOW;
    let mut price = DMatrix::zeros(n, LAG_LEN);
    let mut volume = DMatrix::zeros(n, LAG_LEN);
    for i in 0..n {
        // Series re-indexed so that local index MA_WINDOW - 1 is day t.
        let p: Vec<f64> = (lo..=t).map(|s| frame.price(s, i)).collect();
        let v: Vec<f64> = (lo..=t).map(|s| frame.volume(s, i)).collect();
        let pl = lag_features(&p, MA_WINDOW - 1)?;
        let vl = lag_features(&v, MA_WINDOW - 1)?;
        for k in 0..LAG_LEN {
            price[(i, k)] = pl[k];
            volume[(i, k)] = vl[k];
        }
    }
    let sentiment = if config.use_sentiment {
        sentiment_features(frame, t)
    } else {
        DMatrix::zeros(n, SENTIMENT_LEN)
    };
    let capital = if config.use_capital { capital } else { 0.0 };
    FeatureVector::from_blocks(price, volume, sentiment, capital)
}

/// Trailing per-feature z-scores over the last `NORM_WINDOW` days.
///
/// Each day's raw vector enters the window once; the statistics used for
/// day `t` include day `t` itself and nothing later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizerState {
    dim: usize,
    window: usize,
    last_t: Option<usize>,
    history: VecDeque<Vec<f64>>,
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl NormalizerState {
    pub fn new(dim: usize) -> Self {
        Self::with_window(dim, NORM_WINDOW)
    }

    pub fn with_window(dim: usize, window: usize) -> Self {
        Self {
            dim,
            window: window.max(1),
            last_t: None,
            history: VecDeque::new(),
            mean: vec![0.0; dim],
            sd: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn last_day(&self) -> Option<usize> {
        self.last_t
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Standard deviations after the floor is applied.
    pub fn sd(&self) -> &[f64] {
        &self.sd
    }

    /// Adds day `t` to the window (no-op when `t` was the last day added).
    pub fn observe(&mut self, t: usize, raw: &DVector<f64>) -> Result<(), FeatureError> {
        if raw.len() != self.dim {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dim,
                actual: raw.len(),
            });
        }
        match self.last_t {
            Some(last) if t == last => return Ok(()),
            Some(last) if t < last => return Err(FeatureError::OutOfOrder { last, t }),
            _ => {}
        }
        self.history.push_back(raw.iter().copied().collect());
        while self.history.len() > self.window {
            self.history.pop_front();
        }
        let k = self.history.len() as f64;
        for j in 0..self.dim {
            let m = self.history.iter().map(|h| h[j]).sum::<f64>() / k;
            let var = self.history.iter().map(|h| (h[j] - m).powi(2)).sum::<f64>() / k;
            self.mean[j] = m;
            self.sd[j] = var.sqrt().max(SD_FLOOR);
        }
        self.last_t = Some(t);
        Ok(())
    }

    pub fn normalize(&self, raw: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |j, _| (raw[j] - self.mean[j]) / self.sd[j])
    }

    pub fn denormalize(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |j, _| z[j] * self.sd[j] + self.mean[j])
    }
}

/// Builds the day-`t` input, advances the normalizer to `t` and returns the
/// normalized vector.
pub fn assemble_input<F: FrameAccess + ?Sized>(
    frame: &F,
    t: usize,
    capital: f64,
    config: FeatureConfig,
    normalizer: &mut NormalizerState,
) -> Result<FeatureVector, FeatureError> {
    let raw = raw_input(frame, t, capital, config)?;
    normalizer.observe(t, raw.as_vector())?;
    FeatureVector::from_flat(raw.n_assets(), normalizer.normalize(raw.as_vector()))
}

/// Writes `date` plus one column per flattened feature.
pub fn write_feature_csv(
    path: impl AsRef<Path>,
    universe: &AssetUniverse,
    rows: &[(NaiveDate, FeatureVector)],
) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(feature_names(universe));
    w.write_record(&header)?;
    for (d, x) in rows {
        let mut rec = vec![d.to_string()];
        rec.extend(x.as_vector().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
