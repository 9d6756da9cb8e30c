//! Portfolio performance metrics over a daily series.

use super::BacktestError;
use chrono::NaiveDate;
use nalgebra::DVector;

/// `sqrt(mean_t ||w_t - w_hat_t||^2)`.
pub fn rmse(realized: &[DVector<f64>], optimal: &[DVector<f64>]) -> Result<f64, BacktestError> {
    if realized.len() != optimal.len() || realized.is_empty() {
        return Err(BacktestError::LengthMismatch {
            left: realized.len(),
            right: optimal.len(),
        });
    }
    let mut sum = 0.0;
    for (w, o) in realized.iter().zip(optimal) {
        if w.len() != o.len() {
            return Err(BacktestError::LengthMismatch {
                left: w.len(),
                right: o.len(),
            });
        }
        sum += (w - o).norm_squared();
    }
    Ok((sum / realized.len() as f64).sqrt())
}

/// Compound annual growth rate over calendar days.
pub fn annualized_return(values: &[f64], dates: &[NaiveDate]) -> Result<f64, BacktestError> {
    if values.len() != dates.len() || values.len() < 2 {
        return Err(BacktestError::LengthMismatch {
            left: values.len(),
            right: dates.len(),
        });
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(BacktestError::NonPositiveValue);
    }
    let days = dates[dates.len() - 1].signed_duration_since(dates[0]).num_days();
    if days <= 0 {
        return Err(BacktestError::LengthMismatch {
            left: values.len(),
            right: 0,
        });
    }
    Ok((values[values.len() - 1] / values[0]).powf(365.0 / days as f64) - 1.0)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn population_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn downside_deviation(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| (x - 1.0).min(0.0).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn relative_ratio(
    portfolio: &[f64],
    benchmark: &[f64],
    risk: fn(&[f64]) -> f64,
) -> Result<f64, BacktestError> {
    if portfolio.len() != benchmark.len() || portfolio.is_empty() {
        return Err(BacktestError::LengthMismatch {
            left: portfolio.len(),
            right: benchmark.len(),
        });
    }
    if benchmark.iter().any(|r| *r == 0.0) {
        return Err(BacktestError::NonPositiveValue);
    }
    let rel: Vec<f64> = portfolio.iter().zip(benchmark).map(|(p, b)| p / b).collect();
    let (rp, rb) = (risk(portfolio), risk(benchmark));
    if rp == 0.0 || rb == 0.0 {
        return Err(BacktestError::DegenerateVolatility);
    }
    Ok(mean(&rel) / (rp / rb))
}

/// `E(R_p / R_vw) / (sd(R_p) / sd(R_vw))` on gross daily returns.
pub fn sharpe_vs_benchmark(portfolio: &[f64], benchmark: &[f64]) -> Result<f64, BacktestError> {
    relative_ratio(portfolio, benchmark, population_sd)
}

/// As [`sharpe_vs_benchmark`] with the downside deviation below a gross
/// return of 1 as the risk measure.
pub fn sortino_vs_benchmark(portfolio: &[f64], benchmark: &[f64]) -> Result<f64, BacktestError> {
    relative_ratio(portfolio, benchmark, downside_deviation)
}

/// Largest peak-to-trough loss `(V_t - V_s) / V_t` over `t < s`.
pub fn max_drawdown(values: &[f64]) -> Result<f64, BacktestError> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) {
        return Err(BacktestError::NonPositiveValue);
    }
    let mut peak = values[0];
    let mut worst = 0.0f64;
    for &v in values {
        peak = peak.max(v);
        worst = worst.max((peak - v) / peak);
    }
    Ok(worst)
}
