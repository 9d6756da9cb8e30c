use super::BacktestError;
use crate::allocation::{
    bl_posterior, bl_weights, default_confidence, equilibrium_returns, estimate_covariance, invert_views,
    market_weights, optimal_one_hot, Equilibrium, RiskModel,
};
use crate::learners::{NtModel, OnlineStepper, OnlineViewModel, TargetKind};
use crate::marketdata::{FrameAccess, MarketFrame};
use crate::features::FeatureConfig;
use crate::views::CanonicalViews;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What an allocator sees on day `t`.
pub struct DecisionContext<'a> {
    /// Frame capped at day `t`.
    pub frame: &'a dyn FrameAccess,
    pub t: usize,
    /// Portfolio value at the close of day `t`, before rebalancing.
    pub capital: f64,
    /// Weights held over the previous period.
    pub held: &'a DVector<f64>,
}

/// Views held on a day, as fed to the posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    pub views: CanonicalViews,
    /// Equilibrium return of the market portfolio, `Pi . w_cap`.
    pub market_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Target weights before projection onto the simplex.
    pub raw: DVector<f64>,
    pub views: Option<ViewRecord>,
}

pub trait Allocator {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, BacktestError>;
}

/// Risk model and equilibrium for day `t` from `timespan` trailing returns.
pub fn day_model(
    frame: &dyn FrameAccess,
    t: usize,
    timespan: usize,
    delta: f64,
    tau: f64,
) -> Result<(RiskModel, Equilibrium), BacktestError> {
    let risk = RiskModel::new(estimate_covariance(frame, t, timespan)?, delta, tau)?;
    let w = vw_weights(frame, t)?;
    let eq = equilibrium_returns(&risk, &w)?;
    Ok((risk, eq))
}

/// `mcap_i / sum_j mcap_j` on day `t`.
pub fn vw_weights(frame: &dyn FrameAccess, t: usize) -> Result<DVector<f64>, BacktestError> {
    market_weights(frame, t).map_err(|_| BacktestError::ZeroTotalCap { t })
}

/// Per-asset view returns uniform in `[-bound, bound]` with default
/// confidence.
pub fn random_views(rng: &mut impl Rng, n: usize, bound: f64, omega: DVector<f64>) -> Result<CanonicalViews, BacktestError> {
    if !(bound.is_finite() && bound >= 0.0) {
        return Err(BacktestError::InvalidStrategy(format!("random view bound must be finite and >= 0, got {bound}")));
    }
    let q = DVector::from_fn(n, |_, _| if bound > 0.0 { rng.gen_range(-bound..=bound) } else { 0.0 });
    Ok(CanonicalViews::new(q, omega)?)
}

fn bl_decision(eq: &Equilibrium, risk: &RiskModel, views: CanonicalViews) -> Result<Decision, BacktestError> {
    let post = bl_posterior(eq, risk, &views)?;
    let raw = bl_weights(&post, risk)?;
    Ok(Decision {
        raw,
        views: Some(ViewRecord {
            views,
            market_return: eq.market_return(),
        }),
    })
}

pub struct ValueWeighted;

impl Allocator for ValueWeighted {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, BacktestError> {
        Ok(Decision {
            raw: vw_weights(ctx.frame, ctx.t)?,
            views: None,
        })
    }
}

/// Black-Litterman with no views: the mean-variance portfolio under the
/// equilibrium prior.
pub struct NoViews {
    pub timespan: usize,
    pub delta: f64,
    pub tau: f64,
}

impl Allocator for NoViews {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, BacktestError> {
        let (risk, eq) = day_model(ctx.frame, ctx.t, self.timespan, self.delta, self.tau)?;
        bl_decision(&eq, &risk, CanonicalViews::no_views(risk.n()))
    }
}

pub struct RandomViews {
    pub timespan: usize,
    pub delta: f64,
    pub tau: f64,
    pub bound: f64,
    rng: ChaCha8Rng,
}

impl RandomViews {
    pub fn new(timespan: usize, delta: f64, tau: f64, bound: f64, seed: u64) -> Self {
        Self {
            timespan,
            delta,
            tau,
            bound,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Allocator for RandomViews {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, BacktestError> {
        let (risk, eq) = day_model(ctx.frame, ctx.t, self.timespan, self.delta, self.tau)?;
        let views = random_views(&mut self.rng, risk.n(), self.bound, default_confidence(&risk))?;
        bl_decision(&eq, &risk, views)
    }
}

/// Views predicted by an online model, held with default confidence.
pub struct LearnedViews<M> {
    pub timespan: usize,
    pub delta: f64,
    pub tau: f64,
    stepper: OnlineStepper<M>,
}

impl<M: OnlineViewModel> LearnedViews<M> {
    pub fn new(model: M, features: FeatureConfig, n_assets: usize, timespan: usize, delta: f64, tau: f64) -> Self {
        Self {
            timespan,
            delta,
            tau,
            stepper: OnlineStepper::new(model, TargetKind::Views, features, n_assets),
        }
    }

    pub fn stepper(&self) -> &OnlineStepper<M> {
        &self.stepper
    }
}

impl<M: OnlineViewModel> Allocator for LearnedViews<M> {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, BacktestError> {
        let (risk, eq) = day_model(ctx.frame, ctx.t, self.timespan, self.delta, self.tau)?;
        let views = match self.stepper.step(ctx.frame, ctx.t, ctx.capital, &eq, &risk)? {
            Some(q) => CanonicalViews::new(q, default_confidence(&risk))?,
            None => CanonicalViews::no_views(risk.n()),
        };
        bl_decision(&eq, &risk, views)
    }
}

/// Weights predicted directly by an online model.
pub struct NeuralTrading<M> {
    pub timespan: usize,
    pub delta: f64,
    pub tau: f64,
    stepper: OnlineStepper<NtModel<M>>,
}

impl<M: OnlineViewModel> NeuralTrading<M> {
    pub fn new(model: M, features: FeatureConfig, n_assets: usize, timespan: usize, delta: f64, tau: f64) -> Self {
        Self {
            timespan,
            delta,
            tau,
            stepper: OnlineStepper::new(NtModel::new(model), TargetKind::Weights, features, n_assets),
        }
    }
}

impl<M: OnlineViewModel> Allocator for NeuralTrading<M> {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, BacktestError> {
        let (risk, eq) = day_model(ctx.frame, ctx.t, self.timespan, self.delta, self.tau)?;
        let n = risk.n();
        let raw = self
            .stepper
            .step(ctx.frame, ctx.t, ctx.capital, &eq, &risk)?
            .unwrap_or_else(|| DVector::from_element(n, 1.0 / n as f64));
        Ok(Decision { raw, views: None })
    }
}

/// Benchmark that looks one day ahead: it feeds the posterior the exact
/// view returns whose optimum is the next day's best asset. It reads the
/// full frame and is excluded from causality audits by construction.
pub struct HindsightViews<'f> {
    pub full: &'f MarketFrame,
    pub timespan: usize,
    pub delta: f64,
    pub tau: f64,
}

impl Allocator for HindsightViews<'_> {
    fn decide(&mut self, ctx: &DecisionContext<'_>) -> Result<Decision, BacktestError> {
        let (risk, eq) = day_model(ctx.frame, ctx.t, self.timespan, self.delta, self.tau)?;
        let n = risk.n();
        let p0 = DVector::from_fn(n, |i, _| self.full.price(ctx.t, i));
        let p1 = DVector::from_fn(n, |i, _| self.full.price(ctx.t + 1, i));
        let omega = default_confidence(&risk);
        let q = invert_views(&optimal_one_hot(&p0, &p1), &eq, &risk, &omega)?;
        bl_decision(&eq, &risk, CanonicalViews::new(q, omega)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vw_proportional_to_caps() {
        use crate::marketdata::{AssetUniverse, MarketFrame};
        use chrono::NaiveDate;
        use nalgebra::DMatrix;
        let f = MarketFrame::from_parts(
            AssetUniverse::new(["A", "B"]).unwrap(),
            vec![NaiveDate::from_ymd_opt(2016, 1, 1).unwrap()],
            DMatrix::from_element(1, 2, 10.0),
            DMatrix::from_element(1, 2, 1.0),
            DMatrix::from_row_slice(1, 2, &[3.0, 1.0]),
            vec![None; 2],
        )
        .unwrap();
        assert_eq!(vw_weights(&f, 0).unwrap().as_slice(), &[0.75, 0.25]);
        let z = MarketFrame::from_parts(
            f.universe().clone(),
            f.dates().to_vec(),
            f.prices().clone(),
            f.volumes().clone(),
            DMatrix::zeros(1, 2),
            vec![None; 2],
        )
        .unwrap();
        assert!(matches!(vw_weights(&z, 0), Err(BacktestError::ZeroTotalCap { t: 0 })));
    }

    #[test]
    fn equal_caps_give_equal_weights() {
        let f = crate::marketdata::synthetic::SyntheticMarket::new(5, 3, 1).build();
        let mut caps = f.mcaps().clone();
        caps.fill(7.0);
        let g = MarketFrame::from_parts(
            f.universe().clone(),
            f.dates().to_vec(),
            f.prices().clone(),
            f.volumes().clone(),
            caps,
            vec![None; 15],
        )
        .unwrap();
        assert!(vw_weights(&g, 1).unwrap().iter().all(|w| (*w - 0.2).abs() < 1e-15));
    }

    #[test]
    fn random_views_are_seeded() {
        let omega = DVector::from_element(4, 1e-4);
        let a = random_views(&mut ChaCha8Rng::seed_from_u64(3), 4, 0.02, omega.clone()).unwrap();
        let b = random_views(&mut ChaCha8Rng::seed_from_u64(3), 4, 0.02, omega.clone()).unwrap();
        assert_eq!(a, b);
        let z = random_views(&mut ChaCha8Rng::seed_from_u64(3), 4, 0.0, omega.clone()).unwrap();
        assert!(z.q().iter().all(|v| *v == 0.0));
        assert!(random_views(&mut ChaCha8Rng::seed_from_u64(3), 4, f64::NAN, omega).is_err());
    }

    #[test]
    fn random_views_are_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let bound = 0.02;
        let draws = 10_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            sum += random_views(&mut rng, 1, bound, DVector::from_element(1, 1.0)).unwrap().q()[0];
        }
        let mean = sum / draws as f64;
        let se = bound / 3f64.sqrt() / (draws as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean}, se {se}");
    }
}
