use super::{AssetUniverse, DataError, MarketFrame, SentimentRecord, SplitEvent};
use chrono::NaiveDate;
use nalgebra::DMatrix;
use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Paths of the four panel files (plus optional split list) in a data dir.
#[derive(Debug, Clone)]
pub struct DataFiles {
    pub prices: PathBuf,
    pub volumes: PathBuf,
    pub mcap: PathBuf,
    pub sentiment: PathBuf,
    pub splits: PathBuf,
}

impl DataFiles {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            prices: dir.join("prices.csv"),
            volumes: dir.join("volumes.csv"),
            mcap: dir.join("mcap.csv"),
            sentiment: dir.join("sentiment.csv"),
            splits: dir.join("splits.csv"),
        }
    }
}

pub(crate) const VALUE_COLUMNS: [&str; 3] = ["date", "ticker", "value"];
pub(crate) const SENTIMENT_COLUMNS: [&str; 6] = [
    "date",
    "ticker",
    "pos_count",
    "neg_count",
    "pos_intensity",
    "neg_intensity",
];
pub(crate) const SPLIT_COLUMNS: [&str; 3] = ["date", "ticker", "ratio"];

/// One parsed data row with its 1-based source line.
pub(crate) struct Row<T> {
    pub line: u64,
    pub date: NaiveDate,
    pub ticker: String,
    pub value: T,
}

fn open(path: &Path) -> Result<csv::Reader<File>, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        file: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn column_indices(
    path: &Path,
    reader: &mut csv::Reader<File>,
    wanted: &[&str],
) -> Result<Vec<usize>, DataError> {
    let headers = reader.headers().map_err(|e| DataError::Parse {
        file: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    wanted
        .iter()
        .map(|col| {
            headers
                .iter()
                .position(|h| h == *col)
                .ok_or_else(|| DataError::MissingColumn {
                    file: path.to_path_buf(),
                    line: 1,
                    column: (*col).to_string(),
                })
        })
        .collect()
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> DataError {
    DataError::Parse {
        file: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_date(path: &Path, line: u64, s: &str) -> Result<NaiveDate, DataError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| parse_err(path, line, format!("bad date `{s}`: {e}")))
}

fn parse_f64(path: &Path, line: u64, field: &str, s: &str) -> Result<f64, DataError> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad {field} `{s}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite {field} `{s}`")));
    }
    Ok(v)
}

/// Generic reader: checks the header, then hands each record's fields (in
/// `wanted` order) to `parse_value`.
pub(crate) fn read_rows<T>(
    path: &Path,
    wanted: &[&str],
    mut parse_value: impl FnMut(u64, &[&str]) -> Result<T, DataError>,
) -> Result<Vec<Row<T>>, DataError> {
    let mut reader = open(path)?;
    let idx = column_indices(path, &mut reader, wanted)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut fields = Vec::with_capacity(idx.len());
        for (&i, col) in idx.iter().zip(wanted) {
            let f = record.get(i).ok_or_else(|| DataError::MissingColumn {
                file: path.to_path_buf(),
                line,
                column: (*col).to_string(),
            })?;
            fields.push(f);
        }
        let date = parse_date(path, line, fields[0])?;
        let ticker = fields[1].to_string();
        if ticker.is_empty() {
            return Err(parse_err(path, line, "empty ticker"));
        }
        let value = parse_value(line, &fields[2..])?;
        rows.push(Row {
            line,
            date,
            ticker,
            value,
        });
    }
    Ok(rows)
}

fn read_values(path: &Path, what: &'static str) -> Result<Vec<Row<f64>>, DataError> {
    read_rows(path, &VALUE_COLUMNS, |line, f| {
        let v = parse_f64(path, line, "value", f[0])?;
        if what != "price" && v < 0.0 {
            return Err(parse_err(path, line, format!("negative {what} {v}")));
        }
        Ok(v)
    })
}

fn read_sentiment(path: &Path) -> Result<Vec<Row<SentimentRecord>>, DataError> {
    read_rows(path, &SENTIMENT_COLUMNS, |line, f| {
        let count = |s: &str, name: &str| {
            s.parse::<u32>()
                .map_err(|_| parse_err(path, line, format!("bad {name} `{s}`")))
        };
        let rec = SentimentRecord {
            pos_count: count(f[0], "pos_count")?,
            neg_count: count(f[1], "neg_count")?,
            pos_intensity: parse_f64(path, line, "pos_intensity", f[2])?,
            neg_intensity: parse_f64(path, line, "neg_intensity", f[3])?,
        };
        if rec.pos_intensity < 0.0 || rec.neg_intensity > 0.0 {
            return Err(parse_err(
                path,
                line,
                "pos_intensity must be >= 0 and neg_intensity <= 0",
            ));
        }
        Ok(rec)
    })
}

/// Reads `date,ticker,ratio` split events.
pub fn load_splits(path: impl AsRef<Path>) -> Result<Vec<SplitEvent>, DataError> {
    let path = path.as_ref();
    let rows = read_rows(path, &SPLIT_COLUMNS, |line, f| {
        parse_f64(path, line, "ratio", f[0])
    })?;
    rows.into_iter()
        .map(|r| {
            if r.value <= 0.0 {
                Err(DataError::InvalidSplitRatio {
                    ticker: r.ticker,
                    date: r.date,
                    ratio: r.value,
                })
            } else {
                Ok(SplitEvent {
                    ticker: r.ticker,
                    date: r.date,
                    ratio: r.value,
                })
            }
        })
        .collect()
}

/// Loads the four panel files into a frame restricted to the requested
/// tickers that actually have prices. Dates are the sorted union of all
/// dates seen; unobserved cells stay missing until `fill_missing`.
pub fn load_csv(
    price_path: impl AsRef<Path>,
    volume_path: impl AsRef<Path>,
    mcap_path: impl AsRef<Path>,
    sentiment_path: impl AsRef<Path>,
    universe: &AssetUniverse,
) -> Result<MarketFrame, DataError> {
    let price_path = price_path.as_ref();
    let prices = read_values(price_path, "price")?;
    for r in &prices {
        if r.value <= 0.0 {
            return Err(DataError::NonPositivePrice {
                file: price_path.to_path_buf(),
                line: r.line,
                ticker: r.ticker.clone(),
                value: r.value,
            });
        }
    }
    let available: BTreeSet<&str> = prices.iter().map(|r| r.ticker.as_str()).collect();
    let kept: Vec<String> = universe
        .tickers()
        .iter()
        .filter(|t| available.contains(t.as_str()))
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(DataError::InvalidUniverse(format!(
            "none of the requested tickers appear in {}",
            price_path.display()
        )));
    }
    let effective = AssetUniverse::new(kept)?;

    let volume_path = volume_path.as_ref();
    let mcap_path = mcap_path.as_ref();
    let sentiment_path = sentiment_path.as_ref();
    let volumes = read_values(volume_path, "volume")?;
    let mcaps = read_values(mcap_path, "market cap")?;
    let sentiment = read_sentiment(sentiment_path)?;

    // Requested but priceless tickers must not sneak in through other files.
    let check = |path: &Path, line: u64, ticker: &str| -> Result<bool, DataError> {
        if effective.index_of(ticker).is_some() {
            Ok(true)
        } else if universe.index_of(ticker).is_some() {
            Err(DataError::UnknownTicker {
                file: path.to_path_buf(),
                line,
                ticker: ticker.to_string(),
            })
        } else {
            Ok(false)
        }
    };

    let mut dates = BTreeSet::new();
    for r in &prices {
        if effective.index_of(&r.ticker).is_some() {
            dates.insert(r.date);
        }
    }
    for (path, rows) in [(volume_path, &volumes), (mcap_path, &mcaps)] {
        for r in rows.iter() {
            if check(path, r.line, &r.ticker)? {
                dates.insert(r.date);
            }
        }
    }
    for r in &sentiment {
        if check(sentiment_path, r.line, &r.ticker)? {
            dates.insert(r.date);
        }
    }
    let dates: Vec<NaiveDate> = dates.into_iter().collect();
    let row_of: HashMap<NaiveDate, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let (t, n) = (dates.len(), effective.len());

    let fill = |path: &Path, rows: &[Row<f64>]| -> Result<DMatrix<f64>, DataError> {
        let mut m = DMatrix::from_element(t, n, f64::NAN);
        for r in rows {
            let Some(i) = effective.index_of(&r.ticker) else {
                continue;
            };
            let cell = &mut m[(row_of[&r.date], i)];
            if !cell.is_nan() {
                return Err(DataError::DuplicateDateTicker {
                    file: path.to_path_buf(),
                    line: r.line,
                    date: r.date,
                    ticker: r.ticker.clone(),
                });
            }
            *cell = r.value;
        }
        Ok(m)
    };
    let price = fill(price_path, &prices)?;
    let volume = fill(volume_path, &volumes)?;
    let mcap = fill(mcap_path, &mcaps)?;

    let mut sent = vec![None; t * n];
    for r in &sentiment {
        let Some(i) = effective.index_of(&r.ticker) else {
            continue;
        };
        let cell = &mut sent[row_of[&r.date] * n + i];
        if cell.is_some() {
            return Err(DataError::DuplicateDateTicker {
                file: sentiment_path.to_path_buf(),
                line: r.line,
                date: r.date,
                ticker: r.ticker.clone(),
            });
        }
        *cell = Some(r.value);
    }

    MarketFrame::from_parts(effective, dates, price, volume, mcap, sent)
}

/// Loads `prices.csv`, `volumes.csv`, `mcap.csv` and `sentiment.csv` from a
/// directory. Without an explicit universe, every priced ticker is used in
/// order of first appearance.
pub fn load_data_dir(
    dir: impl AsRef<Path>,
    universe: Option<&AssetUniverse>,
) -> Result<MarketFrame, DataError> {
    let files = DataFiles::in_dir(dir);
    let universe = match universe {
        Some(u) => u.clone(),
        None => {
            let rows = read_values(&files.prices, "price")?;
            let mut order: Vec<String> = Vec::new();
            for r in rows {
                if !order.contains(&r.ticker) {
                    order.push(r.ticker);
                }
            }
            AssetUniverse::new(order)?
        }
    };
    load_csv(
        &files.prices,
        &files.volumes,
        &files.mcap,
        &files.sentiment,
        &universe,
    )
}

fn create(path: &Path) -> Result<csv::Writer<File>, DataError> {
    let file = File::create(path).map_err(|source| DataError::Io {
        file: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

fn io_err(path: &Path) -> impl Fn(csv::Error) -> DataError + '_ {
    move |e| DataError::Io {
        file: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

/// Writes the frame's observed cells in the loader's long format. Floats use
/// the shortest representation that parses back to the same bits.
pub fn write_csv(frame: &MarketFrame, dir: impl AsRef<Path>) -> Result<DataFiles, DataError> {
    let files = DataFiles::in_dir(&dir);
    let tickers = frame.universe().tickers();
    for (path, m) in [
        (&files.prices, frame.prices()),
        (&files.volumes, frame.volumes()),
        (&files.mcap, frame.mcaps()),
    ] {
        let mut w = create(path)?;
        w.write_record(VALUE_COLUMNS).map_err(io_err(path))?;
        for (t, date) in frame.dates().iter().enumerate() {
            for (i, ticker) in tickers.iter().enumerate() {
                let v = m[(t, i)];
                if v.is_nan() {
                    continue;
                }
                w.write_record([date.to_string(), ticker.clone(), v.to_string()])
                    .map_err(io_err(path))?;
            }
        }
        w.flush().map_err(|source| DataError::Io {
            file: path.clone(),
            source,
        })?;
    }
    let path = &files.sentiment;
    let mut w = create(path)?;
    w.write_record(SENTIMENT_COLUMNS).map_err(io_err(path))?;
    for (t, date) in frame.dates().iter().enumerate() {
        for (i, ticker) in tickers.iter().enumerate() {
            if let Some(s) = frame.sentiment_cell(t, i) {
                w.write_record([
                    date.to_string(),
                    ticker.clone(),
                    s.pos_count.to_string(),
                    s.neg_count.to_string(),
                    s.pos_intensity.to_string(),
                    s.neg_intensity.to_string(),
                ])
                .map_err(io_err(path))?;
            }
        }
    }
    w.flush().map_err(|source| DataError::Io {
        file: path.clone(),
        source,
    })?;
    Ok(files)
}

/// Writes split events in `date,ticker,ratio` form.
pub fn write_splits(events: &[SplitEvent], path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|source| DataError::Io {
        file: path.to_path_buf(),
        source,
    })?;
    let mut body = String::from("date,ticker,ratio\n");
    for e in events {
        body.push_str(&format!("{},{},{}\n", e.date, e.ticker, e.ratio));
    }
    file.write_all(body.as_bytes()).map_err(|source| DataError::Io {
        file: path.to_path_buf(),
        source,
    })
}
