use super::{DataError, MarketFrame, SentimentRecord, SplitEvent};
use chrono::{Days, NaiveDate};
use nalgebra::DMatrix;

/// Expands the frame to every calendar day between its first and last date
/// and carries the last observed price, volume and market cap forward.
/// Days without sentiment become the all-zero record.
///
/// Only past observations are used, so a filled value never depends on data
/// from a later date.
pub fn fill_missing(frame: &MarketFrame) -> Result<MarketFrame, DataError> {
    let (Some(&first), Some(&last)) = (frame.dates.first(), frame.dates.last()) else {
        return Err(DataError::EmptyFrame);
    };
    let n = frame.n_assets();
    let span = last.signed_duration_since(first).num_days() as usize + 1;
    let dates: Vec<NaiveDate> = (0..span)
        .map(|k| first + Days::new(k as u64))
        .collect();

    let mut src_row = vec![None; span];
    for (r, d) in frame.dates.iter().enumerate() {
        src_row[d.signed_duration_since(first).num_days() as usize] = Some(r);
    }

    let carry = |m: &DMatrix<f64>, series: &'static str| -> Result<DMatrix<f64>, DataError> {
        let mut out = DMatrix::from_element(span, n, f64::NAN);
        for i in 0..n {
            let mut last_seen = f64::NAN;
            for (t, src) in src_row.iter().enumerate() {
                if let Some(r) = src {
                    let v = m[(*r, i)];
                    if !v.is_nan() {
                        last_seen = v;
                    }
                }
                if last_seen.is_nan() {
                    return Err(DataError::NoHistoricalValue {
                        ticker: frame.universe.tickers()[i].clone(),
                        series,
                        date: dates[t],
                    });
                }
                out[(t, i)] = last_seen;
            }
        }
        Ok(out)
    };

    let price = carry(&frame.price, "price")?;
    let volume = carry(&frame.volume, "volume")?;
    let mcap = carry(&frame.mcap, "market cap")?;

    let mut sentiment = vec![Some(SentimentRecord::default()); span * n];
    for (t, src) in src_row.iter().enumerate() {
        if let Some(r) = src {
            for i in 0..n {
                if let Some(s) = frame.sentiment[r * n + i] {
                    sentiment[t * n + i] = Some(s);
                }
            }
        }
    }

    Ok(MarketFrame {
        universe: frame.universe.clone(),
        dates,
        price,
        volume,
        mcap,
        sentiment,
    })
}

/// Puts pre-split prices and volumes on the post-split share basis: for each
/// event every price strictly before the split date is divided by the ratio
/// and every volume multiplied by it. Market caps are untouched.
pub fn adjust_splits(frame: &MarketFrame, events: &[SplitEvent]) -> Result<MarketFrame, DataError> {
    let mut out = frame.clone();
    let (Some(&first), Some(&last)) = (frame.dates.first(), frame.dates.last()) else {
        return Ok(out);
    };
    for e in events {
        if !(e.ratio > 0.0 && e.ratio.is_finite()) {
            return Err(DataError::InvalidSplitRatio {
                ticker: e.ticker.clone(),
                date: e.date,
                ratio: e.ratio,
            });
        }
        let Some(i) = frame.universe.index_of(&e.ticker) else {
            return Err(DataError::EventOutOfRange {
                ticker: e.ticker.clone(),
                date: e.date,
            });
        };
        if e.date < first || e.date > last {
            return Err(DataError::EventOutOfRange {
                ticker: e.ticker.clone(),
                date: e.date,
            });
        }
        let cut = frame.dates.partition_point(|d| *d < e.date);
        for t in 0..cut {
            out.price[(t, i)] /= e.ratio;
            out.volume[(t, i)] *= e.ratio;
        }
    }
    Ok(out)
}
