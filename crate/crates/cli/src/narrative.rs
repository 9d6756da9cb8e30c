//! Plain-language account of one trading day: observed opinions, held
//! views and the reallocation they imply.

use bayesviews::backtest::NarrativeEntry;
use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

/// Weights below this are treated as zero when listing holdings.
const WEIGHT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetView {
    /// Normalized precision of this view across all held views, in percent.
    pub confidence_pct: f64,
    /// View return minus the equilibrium market return, in percent.
    pub outperformance_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetNarrative {
    pub ticker: String,
    pub pos_count: u32,
    pub neg_count: u32,
    pub pos_polarity: f64,
    pub neg_polarity: f64,
    pub view: Option<AssetView>,
    pub weight_current: f64,
    pub weight_next: f64,
    /// Fraction of the current position to sell, `max(0, 1 - next/current)`;
    /// `None` when nothing is held.
    pub withdraw_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeRecord {
    pub date: NaiveDate,
    pub next_date: NaiveDate,
    /// Whether the strategy forms views at all.
    pub has_views: bool,
    pub assets: Vec<AssetNarrative>,
}

impl NarrativeRecord {
    pub fn from_entry(entry: &NarrativeEntry, tickers: &[String]) -> Self {
        let n = tickers.len();
        let mut views: Vec<Option<AssetView>> = vec![None; n];
        if let Some(rec) = &entry.views {
            let omega = rec.views.omega();
            let q = rec.views.q();
            let held: Vec<usize> = (0..n).filter(|&i| rec.views.has_view(i)).collect();
            let certain: Vec<usize> = held.iter().copied().filter(|&i| omega[i] == 0.0).collect();
            let total_precision: f64 = held.iter().map(|&i| 1.0 / omega[i]).sum();
            for &i in &held {
                let confidence = if !certain.is_empty() {
                    if omega[i] == 0.0 {
                        1.0 / certain.len() as f64
                    } else {
                        0.0
                    }
                } else {
                    (1.0 / omega[i]) / total_precision
                };
                views[i] = Some(AssetView {
                    confidence_pct: 100.0 * confidence,
                    outperformance_pct: 100.0 * (q[i] - rec.market_return),
                });
            }
        }
        let assets = tickers
            .iter()
            .enumerate()
            .map(|(i, ticker)| {
                let s = &entry.sentiment[i];
                let cur = entry.weights_current[i];
                let next = entry.weights_next[i];
                AssetNarrative {
                    ticker: ticker.clone(),
                    pos_count: s.pos_count,
                    neg_count: s.neg_count,
                    pos_polarity: s.pos_intensity.abs(),
                    neg_polarity: -s.neg_intensity.abs(),
                    view: views[i].clone(),
                    weight_current: cur,
                    weight_next: next,
                    withdraw_fraction: (cur > WEIGHT_EPS).then(|| (1.0 - next / cur).max(0.0)),
                }
            })
            .collect();
        Self {
            date: entry.date,
            next_date: entry.next_date,
            has_views: entry.views.is_some(),
            assets,
        }
    }

    pub fn render(&self) -> String {
        let opinions: Vec<String> = self.assets.iter().map(opinion_clause).collect();
        let mut text = format!("On {}, we observe {}.", long_date(self.date), join(&opinions));

        if self.has_views {
            let held: Vec<String> = self
                .assets
                .iter()
                .filter_map(|a| {
                    a.view.as_ref().map(|v| {
                        format!(
                            "{:.2}% confidence that {} will outperform the market by {:.2}%",
                            v.confidence_pct, a.ticker, v.outperformance_pct
                        )
                    })
                })
                .collect();
            if held.is_empty() {
                text.push_str(" Given the historical prices and trading volumes of the stocks, we hold no views.");
            } else {
                text.push_str(&format!(
                    " Given the historical prices and trading volumes of the stocks, we have {}.",
                    join(&held)
                ));
            }
        } else {
            text.push_str(" This strategy does not form market views.");
        }

        let current: Vec<String> = self
            .assets
            .iter()
            .filter(|a| a.weight_current > WEIGHT_EPS)
            .map(|a| format!("{:.2}% on {}", 100.0 * a.weight_current, a.ticker))
            .collect();
        let withdrawals: Vec<String> = self
            .assets
            .iter()
            .filter_map(|a| match a.withdraw_fraction {
                Some(f) if f >= 1.0 - WEIGHT_EPS => Some(format!("all the investment on {}", a.ticker)),
                Some(f) if f > 0.0 => Some(format!("{:.2}% of the investment on {}", 100.0 * f, a.ticker)),
                _ => None,
            })
            .collect();
        let targets: Vec<String> = self
            .assets
            .iter()
            .filter(|a| a.weight_next > a.weight_current)
            .map(|a| a.ticker.clone())
            .collect();
        let by = long_date(self.next_date);
        if withdrawals.is_empty() {
            text.push_str(&format!(
                " Since our current portfolio invests {}, by {by}, we should keep the current allocation.",
                join_commas(&current)
            ));
        } else {
            let mut s = format!(
                " Since our current portfolio invests {}, by {by}, we should withdraw {}",
                join_commas(&current),
                join_commas(&withdrawals)
            );
            if !targets.is_empty() {
                s.push_str(&format!(", and re-invest them onto {}", join_commas(&targets)));
            }
            s.push('.');
            text.push_str(&s);
        }
        text
    }
}

fn opinion_clause(a: &AssetNarrative) -> String {
    let plural = |k: u32| if k == 1 { "opinion" } else { "opinions" };
    let mut parts = Vec::new();
    if a.pos_count > 0 {
        parts.push(format!(
            "{} positive {} of polarity {:+.2}",
            a.pos_count,
            plural(a.pos_count),
            a.pos_polarity
        ));
    }
    if a.neg_count > 0 {
        parts.push(format!(
            "{} negative {} of polarity {:+.2}",
            a.neg_count,
            plural(a.neg_count),
            a.neg_polarity
        ));
    }
    if parts.is_empty() {
        format!("no opinion on {} stock", a.ticker)
    } else {
        format!("{} on {} stock", parts.join(", "), a.ticker)
    }
}

/// `June 1st 2017`.
pub fn long_date(d: NaiveDate) -> String {
    let day = d.day();
    let suffix = match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{} {day}{suffix} {}", d.format("%B"), d.year())
}

/// Clauses separated by semicolons, the last introduced by "and".
fn join(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{}; and {last}", init.join("; ")),
    }
}

fn join_commas(items: &[String]) -> String {
    match items {
        [] => "nothing".into(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bayesviews::backtest::ViewRecord;
    use bayesviews::marketdata::SentimentRecord;
    use bayesviews::views::CanonicalViews;
    use nalgebra::DVector;

    fn rec(p: u32, pi: f64, n: u32, ni: f64) -> SentimentRecord {
        SentimentRecord {
            pos_count: p,
            neg_count: n,
            pos_intensity: pi,
            neg_intensity: ni,
        }
    }

    fn tickers() -> Vec<String> {
        ["AAPL", "GS", "PFE", "NEM", "SBUX"].map(String::from).to_vec()
    }

    fn entry() -> NarrativeEntry {
        let d = NaiveDate::from_ymd_opt(2017, 6, 1).unwrap();
        NarrativeEntry {
            date: d,
            next_date: d.succ_opt().unwrap(),
            sentiment: vec![
                rec(164, 1.90, 58, -1.77),
                rec(54, 1.77, 37, -1.53),
                rec(5, 2.46, 1, -1.33),
                rec(0, 0.0, 0, 0.0),
                rec(9, 1.76, 5, -2.00),
            ],
            views: Some(ViewRecord {
                views: CanonicalViews::new(
                    DVector::from_vec(vec![0.01, 0.03, 0.002, 0.0, 0.05]),
                    DVector::from_vec(vec![1.0, 0.25, 2.0, f64::INFINITY, 4.0]),
                )
                .unwrap(),
                market_return: 0.002,
            }),
            weights_current: vec![0.2156, 0.2597, 0.2943, 0.0, 0.2304],
            weights_next: vec![0.0, 0.2597 * (1.0 - 0.0276), 0.2943 * (1.0 - 0.8158), 0.5, 0.2304 * (1.0 - 0.3077)],
        }
    }

    #[test]
    fn opinions_follow_the_template() {
        let text = NarrativeRecord::from_entry(&entry(), &tickers()).render();
        assert!(text.starts_with("On June 1st 2017, we observe 164 positive opinions of polarity +1.90, 58 negative opinions of polarity -1.77 on AAPL stock;"));
        assert!(text.contains("5 positive opinions of polarity +2.46, 1 negative opinion of polarity -1.33 on PFE stock"));
        assert!(text.contains("no opinion on NEM stock; and 9 positive"));
    }

    #[test]
    fn views_use_normalized_precision() {
        let r = NarrativeRecord::from_entry(&entry(), &tickers());
        // Precisions 1, 4, 0.5, 0.25 sum to 5.75.
        let v = r.assets[1].view.as_ref().unwrap();
        assert!((v.confidence_pct - 100.0 * 4.0 / 5.75).abs() < 1e-12);
        assert!((v.outperformance_pct - 2.8).abs() < 1e-12);
        assert!(r.assets[3].view.is_none());
        let total: f64 = r.assets.iter().filter_map(|a| a.view.as_ref()).map(|v| v.confidence_pct).sum();
        assert!((total - 100.0).abs() < 1e-12);
        assert!(r.render().contains("69.57% confidence that GS will outperform the market by 2.80%"));
    }

    #[test]
    fn reallocation_matches_weights() {
        let r = NarrativeRecord::from_entry(&entry(), &tickers());
        let text = r.render();
        assert!(text.contains(
            "by June 2nd 2017, we should withdraw all the investment on AAPL, 2.76% of the investment on GS, 81.58% of the investment on PFE, and 30.77% of the investment on SBUX, and re-invest them onto NEM."
        ));
        assert!(text.contains("Since our current portfolio invests 21.56% on AAPL, 25.97% on GS, 29.43% on PFE, and 23.04% on SBUX"));
        for a in &r.assets {
            if let Some(f) = a.withdraw_fraction {
                assert!((a.weight_current * (1.0 - f) - a.weight_next).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn strategies_without_views_say_so() {
        let mut e = entry();
        e.views = None;
        e.weights_next = e.weights_current.clone();
        let text = NarrativeRecord::from_entry(&e, &tickers()).render();
        assert!(text.contains("This strategy does not form market views."));
        assert!(text.contains("we should keep the current allocation."));
    }

    #[test]
    fn ordinal_dates() {
        let d = |m, d| long_date(NaiveDate::from_ymd_opt(2017, m, d).unwrap());
        assert_eq!(d(6, 2), "June 2nd 2017");
        assert_eq!(d(6, 3), "June 3rd 2017");
        assert_eq!(d(6, 11), "June 11th 2017");
        assert_eq!(d(6, 22), "June 22nd 2017");
        assert_eq!(d(5, 31), "May 31st 2017");
    }
}
