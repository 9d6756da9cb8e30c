//! Mean-variance and Black-Litterman arithmetic.
//!
//! All vectors are indexed by the asset order of the frame's universe.
//! Views reach this module in canonical form (identity loading matrix,
//! per-asset confidence vector), except for [`bl_posterior_general`] which
//! accepts arbitrary `(P, Q, Omega)` triples.

use crate::marketdata::FrameAccess;
use crate::views::{CanonicalViews, ViewSet};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative ridge added to near-singular covariance estimates.
pub const RIDGE_EPS: f64 = 1e-8;
/// Eigenvalue ratio below which a covariance counts as near-singular.
pub const NEAR_SINGULAR_RATIO: f64 = 1e-10;

pub const DEFAULT_DELTA: f64 = 0.25;
pub const DEFAULT_TAU: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum AllocError {
    #[error("need {needed} prior prices, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,
    #[error("posterior precision matrix is singular")]
    SingularPrecision,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Covariance of returns together with the investor's risk aversion and the
/// scalar confidence placed on the equilibrium prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskModel {
    pub sigma: DMatrix<f64>,
    pub delta: f64,
    pub tau: f64,
}

impl RiskModel {
    pub fn new(sigma: DMatrix<f64>, delta: f64, tau: f64) -> Result<Self, AllocError> {
        if !sigma.is_square() {
            return Err(AllocError::DimensionMismatch {
                expected: sigma.nrows(),
                actual: sigma.ncols(),
            });
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(AllocError::InvalidParameter(format!("delta must be > 0, got {delta}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(AllocError::InvalidParameter(format!("tau must be > 0, got {tau}")));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(AllocError::InvalidParameter("covariance has non-finite entries".into()));
        }
        let scale = sigma.amax().max(f64::MIN_POSITIVE);
        if (&sigma - sigma.transpose()).amax() > 1e-10 * scale {
            return Err(AllocError::InvalidParameter("covariance is not symmetric".into()));
        }
        Ok(Self { sigma, delta, tau })
    }

    pub fn n(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn tau_sigma(&self) -> DMatrix<f64> {
        &self.sigma * self.tau
    }
}

/// CAPM equilibrium premiums and the capitalization weights they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub pi: DVector<f64>,
    pub w_cap: DVector<f64>,
}

impl Equilibrium {
    /// Equilibrium return of the capitalization-weighted market portfolio.
    pub fn market_return(&self) -> f64 {
        self.pi.dot(&self.w_cap)
    }
}

/// Posterior distribution of expected returns after blending in views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlPosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

fn cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, AllocError> {
    Cholesky::new(m.clone()).ok_or(AllocError::SingularCovariance)
}

fn check_len(v: &DVector<f64>, n: usize) -> Result<(), AllocError> {
    if v.len() != n {
        return Err(AllocError::DimensionMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    Ok(())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Sample covariance of daily simple returns ending strictly before day `t`.
///
/// Uses the `timespan` returns `p[s]/p[s-1] - 1` for `s` in
/// `[t - timespan, t)`, so prices from `t - timespan - 1` to `t - 1` are
/// read. A ridge of `RIDGE_EPS * mean(diag)` (or `RIDGE_EPS` for an all-zero
/// estimate) is added when the estimate is near-singular.
pub fn estimate_covariance<F: FrameAccess + ?Sized>(
    frame: &F,
    t: usize,
    timespan: usize,
) -> Result<DMatrix<f64>, AllocError> {
    if timespan < 2 {
        return Err(AllocError::InvalidParameter(format!(
            "timespan must be at least 2, got {timespan}"
        )));
    }
    if t < timespan + 1 || t > frame.n_days() {
        return Err(AllocError::InsufficientHistory {
            needed: timespan + 1,
            available: t.min(frame.n_days()),
        });
    }
    let n = frame.n_assets();
    let mut returns = DMatrix::zeros(timespan, n);
    for (k, s) in (t - timespan..t).enumerate() {
        for i in 0..n {
            returns[(k, i)] = frame.price(s, i) / frame.price(s - 1, i) - 1.0;
        }
    }
    let mean = returns.row_mean();
    for mut row in returns.row_iter_mut() {
        row -= &mean;
    }
    let mut cov = returns.transpose() * &returns / (timespan as f64 - 1.0);
    symmetrize(&mut cov);

    let eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= NEAR_SINGULAR_RATIO * max {
        let mean_diag = cov.diagonal().mean();
        let ridge = if mean_diag > 0.0 { RIDGE_EPS * mean_diag } else { RIDGE_EPS };
        for i in 0..n {
            cov[(i, i)] += ridge;
        }
    }
    Ok(cov)
}

/// Unconstrained mean-variance optimum `(delta * Sigma)^-1 mu`.
pub fn markowitz_weights(mu: &DVector<f64>, risk: &RiskModel) -> Result<DVector<f64>, AllocError> {
    check_len(mu, risk.n())?;
    let chol = cholesky(&(&risk.sigma * risk.delta))?;
    Ok(chol.solve(mu))
}

/// Reverse optimization: the premiums `delta * Sigma * w_cap` under which the
/// capitalization weights are mean-variance optimal.
pub fn equilibrium_returns(risk: &RiskModel, w_cap: &DVector<f64>) -> Result<Equilibrium, AllocError> {
    check_len(w_cap, risk.n())?;
    if w_cap.iter().any(|w| !(*w >= 0.0)) || (w_cap.sum() - 1.0).abs() > 1e-9 {
        return Err(AllocError::InvalidParameter(
            "capitalization weights must be non-negative and sum to 1".into(),
        ));
    }
    Ok(Equilibrium {
        pi: &risk.sigma * w_cap * risk.delta,
        w_cap: w_cap.clone(),
    })
}

/// Capitalization weights on day `t`.
pub fn market_weights<F: FrameAccess + ?Sized>(frame: &F, t: usize) -> Result<DVector<f64>, AllocError> {
    let n = frame.n_assets();
    let caps = DVector::from_fn(n, |i, _| frame.mcap(t, i));
    let total = caps.sum();
    if !(total.is_finite() && total > 0.0) || caps.iter().any(|c| *c < 0.0) {
        return Err(AllocError::InvalidParameter(format!("market caps on day {t} do not sum to a positive total")));
    }
    Ok(caps / total)
}

/// Default per-asset view variance `diag(tau * Sigma)`.
pub fn default_confidence(risk: &RiskModel) -> DVector<f64> {
    risk.sigma.diagonal() * risk.tau
}

/// Posterior mean and covariance for canonical views.
///
/// Evaluated in the gain form `mu = Pi + K (Q - Pi)`,
/// `M = tau*Sigma - K tau*Sigma`, `K = tau*Sigma[:, S] (tau*Sigma[S, S] + Omega_S)^-1`
/// over the assets `S` with a finite confidence entry. This is algebraically
/// the precision form and stays well conditioned when view variances go to
/// zero or infinity. Infinite entries carry no information.
pub fn bl_posterior(
    eq: &Equilibrium,
    risk: &RiskModel,
    views: &CanonicalViews,
) -> Result<BlPosterior, AllocError> {
    let n = risk.n();
    check_len(&eq.pi, n)?;
    check_len(views.q(), n)?;
    let active: Vec<usize> = (0..n).filter(|&i| views.omega()[i].is_finite()).collect();
    let p = DMatrix::from_fn(active.len(), n, |r, c| if active[r] == c { 1.0 } else { 0.0 });
    let q = DVector::from_iterator(active.len(), active.iter().map(|&i| views.q()[i]));
    let omega = DMatrix::from_diagonal(&DVector::from_iterator(
        active.len(),
        active.iter().map(|&i| views.omega()[i]),
    ));
    gain_form(eq, risk, &p, &q, &omega)
}

/// Posterior for an arbitrary `(P, Q, Omega)` view set.
pub fn bl_posterior_general(
    eq: &Equilibrium,
    risk: &RiskModel,
    views: &ViewSet,
) -> Result<BlPosterior, AllocError> {
    if views.p().ncols() != risk.n() {
        return Err(AllocError::DimensionMismatch {
            expected: risk.n(),
            actual: views.p().ncols(),
        });
    }
    gain_form(eq, risk, views.p(), views.q(), views.omega())
}

fn gain_form(
    eq: &Equilibrium,
    risk: &RiskModel,
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    omega: &DMatrix<f64>,
) -> Result<BlPosterior, AllocError> {
    let ts = risk.tau_sigma();
    let (mean, mut shrink) = if p.nrows() == 0 {
        (eq.pi.clone(), ts.clone())
    } else {
        let ts_pt = &ts * p.transpose();
        let mut s = p * &ts_pt + omega;
        symmetrize(&mut s);
        let chol = Cholesky::new(s).ok_or(AllocError::SingularPrecision)?;
        let resid = q - p * &eq.pi;
        let mean = &eq.pi + &ts_pt * chol.solve(&resid);
        let shrink = &ts - &ts_pt * chol.solve(&ts_pt.transpose());
        (mean, shrink)
    };
    symmetrize(&mut shrink);
    Ok(BlPosterior {
        mean,
        cov: &risk.sigma + shrink,
    })
}

/// Posterior-optimal weights `(delta * Sigma_bar)^-1 mu_bar`.
pub fn bl_weights(post: &BlPosterior, risk: &RiskModel) -> Result<DVector<f64>, AllocError> {
    check_len(&post.mean, post.cov.nrows())?;
    let chol = cholesky(&(&post.cov * risk.delta))?;
    Ok(chol.solve(&post.mean))
}

/// Hindsight-optimal long-only weights: everything in the asset with the
/// largest gross return from `price_t` to `price_next` (lowest index wins
/// ties).
pub fn optimal_one_hot(price_t: &DVector<f64>, price_next: &DVector<f64>) -> DVector<f64> {
    let n = price_t.len();
    let mut best = 0;
    let mut best_ratio = f64::NEG_INFINITY;
    for i in 0..n {
        let r = price_next[i] / price_t[i];
        if r > best_ratio {
            best_ratio = r;
            best = i;
        }
    }
    let mut w = DVector::zeros(n);
    if n > 0 {
        w[best] = 1.0;
    }
    w
}

/// View returns that make the Black-Litterman optimum equal `w_star`, given
/// per-asset view variances `omega`.
///
/// With `v = delta * Sigma_bar * w_star`, this is
/// `Q* = v + Omega (tau Sigma)^-1 (v - Pi)`, where
/// `Sigma_bar = Sigma + [(tau Sigma)^-1 + Omega^-1]^-1` is formed from the
/// precision matrices directly.
pub fn invert_views(
    w_star: &DVector<f64>,
    eq: &Equilibrium,
    risk: &RiskModel,
    omega: &DVector<f64>,
) -> Result<DVector<f64>, AllocError> {
    let n = risk.n();
    check_len(w_star, n)?;
    check_len(omega, n)?;
    check_len(&eq.pi, n)?;
    if omega.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(AllocError::InvalidParameter(
            "view variances must be finite and positive".into(),
        ));
    }
    let ts_chol = cholesky(&risk.tau_sigma())?;
    let mut precision = ts_chol.inverse();
    for i in 0..n {
        precision[(i, i)] += 1.0 / omega[i];
    }
    symmetrize(&mut precision);
    let shrink = cholesky(&precision)?.inverse();
    let sigma_bar = &risk.sigma + shrink;
    let v = sigma_bar * w_star * risk.delta;
    let gap = ts_chol.solve(&(&v - &eq.pi));
    Ok(v + omega.component_mul(&gap))
}

/// Euclidean projection onto the probability simplex. Vectors already on
/// the simplex up to summation rounding are returned unchanged, so
/// capital weights are held exactly.
pub fn project_simplex(w: &DVector<f64>) -> DVector<f64> {
    let n = w.len();
    if n == 0 {
        return w.clone();
    }
    if w.iter().all(|x| *x >= 0.0) && (w.sum() - 1.0).abs() <= 4.0 * n as f64 * f64::EPSILON {
        return w.clone();
    }
    let mut u: Vec<f64> = w.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let candidate = (cumsum - 1.0) / (j as f64 + 1.0);
        if uj - candidate > 0.0 {
            theta = candidate;
        }
    }
    w.map(|x| (x - theta).max(0.0))
}
