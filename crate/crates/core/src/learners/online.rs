//! Day-by-day training loop.
//!
//! On day `t` the price of day `t` reveals which asset was best over
//! `(t-1, t]`. The stepper turns that into yesterday's target, trains on
//! yesterday's input and then predicts from today's input.

use super::{LearnError, OnlineViewModel};
use crate::allocation::{
    default_confidence, equilibrium_returns, estimate_covariance, invert_views, market_weights, optimal_one_hot,
    Equilibrium, RiskModel,
};
use crate::features::{assemble_input, input_len, FeatureConfig, NormalizerState};
use crate::marketdata::{AccessAudit, CausalView, FrameAccess};
use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Train on the view returns that make the optimal allocation the
    /// Black-Litterman optimum.
    Views,
    /// Train on the optimal allocation itself.
    Weights,
}

struct PreviousDay {
    x: DVector<f64>,
    price: DVector<f64>,
    eq: Equilibrium,
    risk: RiskModel,
}

pub struct OnlineStepper<M> {
    model: M,
    kind: TargetKind,
    features: FeatureConfig,
    normalizer: NormalizerState,
    scale: Option<f64>,
    previous: Option<PreviousDay>,
    last_loss: Option<f64>,
    last_target: Option<DVector<f64>>,
}

impl<M: OnlineViewModel> OnlineStepper<M> {
    pub fn new(model: M, kind: TargetKind, features: FeatureConfig, n_assets: usize) -> Self {
        Self {
            model,
            kind,
            features,
            normalizer: NormalizerState::new(input_len(n_assets)),
            scale: None,
            previous: None,
            last_loss: None,
            last_target: None,
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    /// Training loss of the most recent update.
    pub fn last_loss(&self) -> Option<f64> {
        self.last_loss
    }

    /// Target used in the most recent update, in output units.
    pub fn last_target(&self) -> Option<&DVector<f64>> {
        self.last_target.as_ref()
    }

    /// Factor between view returns and model outputs, fixed on the first
    /// day as `delta * mean(diag Sigma)` so targets are of order one.
    pub fn scale(&self) -> Option<f64> {
        self.scale
    }

    /// Advances to day `t`. `eq` and `risk` must be the day-`t` estimates.
    /// Returns `None` while the model cannot predict yet.
    pub fn step<F: FrameAccess + ?Sized>(
        &mut self,
        frame: &F,
        t: usize,
        capital: f64,
        eq: &Equilibrium,
        risk: &RiskModel,
    ) -> Result<Option<DVector<f64>>, LearnError> {
        let x = assemble_input(frame, t, capital, self.features, &mut self.normalizer)?
            .as_vector()
            .clone();
        let n = frame.n_assets();
        let price = DVector::from_fn(n, |i, _| frame.price(t, i));
        let scale = *self.scale.get_or_insert_with(|| match self.kind {
            TargetKind::Views => {
                let s = risk.delta * risk.sigma.diagonal().mean();
                if s.is_finite() && s > 0.0 {
                    s
                } else {
                    1.0
                }
            }
            TargetKind::Weights => 1.0,
        });

        if let Some(prev) = self.previous.take() {
            let w_star = optimal_one_hot(&prev.price, &price);
            let target = match self.kind {
                TargetKind::Views => {
                    invert_views(&w_star, &prev.eq, &prev.risk, &default_confidence(&prev.risk))?
                }
                TargetKind::Weights => w_star,
            };
            self.last_loss = Some(self.model.update(&prev.x, &(&target / scale))?);
            self.last_target = Some(target);
        }

        let out = match self.model.predict(&x) {
            Ok(y) => Some(y * scale),
            Err(LearnError::NoRules) => None,
            Err(e) => return Err(e),
        };
        self.previous = Some(PreviousDay {
            x,
            price,
            eq: eq.clone(),
            risk: risk.clone(),
        });
        Ok(out)
    }
}

/// Runs the stepper over days `start..end`, estimating the risk model from
/// `timespan` trailing returns each day. Every frame read goes through a
/// view capped at the current day.
#[allow(clippy::too_many_arguments)]
pub fn online_views<M: OnlineViewModel, F: FrameAccess + ?Sized>(
    model: M,
    frame: &F,
    start: usize,
    end: usize,
    timespan: usize,
    delta: f64,
    tau: f64,
    features: FeatureConfig,
    audit: Option<&AccessAudit>,
) -> Result<Vec<(usize, Option<DVector<f64>>)>, LearnError> {
    let mut stepper = OnlineStepper::new(model, TargetKind::Views, features, frame.n_assets());
    let mut out = Vec::with_capacity(end.saturating_sub(start));
    for t in start..end.min(frame.n_days()) {
        let view = match audit {
            Some(a) => CausalView::audited(frame, t, a),
            None => CausalView::new(frame, t),
        };
        let risk = RiskModel::new(estimate_covariance(&view, t, timespan)?, delta, tau)?;
        let eq = equilibrium_returns(&risk, &market_weights(&view, t)?)?;
        out.push((t, stepper.step(&view, t, 0.0, &eq, &risk)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Denfis, DenfisConfig, Lstm, LstmConfig, ModelSnapshot};
    use crate::marketdata::synthetic::SyntheticMarket;
    use crate::marketdata::MarketFrame;
    use std::sync::{Arc, Mutex};

    /// Returns the last target it was trained on.
    struct Replay {
        n_in: usize,
        last: Option<DVector<f64>>,
        seen: Arc<Mutex<Vec<DVector<f64>>>>,
    }

    impl OnlineViewModel for Replay {
        fn n_inputs(&self) -> usize {
            self.n_in
        }
        fn n_outputs(&self) -> usize {
            3
        }
        fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>, LearnError> {
            self.seen.lock().unwrap().push(x.clone());
            self.last.clone().ok_or(LearnError::NoRules)
        }
        fn update(&mut self, _x: &DVector<f64>, target: &DVector<f64>) -> Result<f64, LearnError> {
            self.last = Some(target.clone());
            Ok(0.0)
        }
        fn reset(&mut self) {
            self.last = None;
        }
        fn snapshot(&self) -> ModelSnapshot {
            unimplemented!()
        }
        fn restore(&mut self, _: &ModelSnapshot) -> Result<(), LearnError> {
            unimplemented!()
        }
    }

    fn replay() -> (Replay, Arc<Mutex<Vec<DVector<f64>>>>) {
        let seen = Arc::new(Mutex::new(Vec::new()));
        (
            Replay {
                n_in: input_len(3),
                last: None,
                seen: seen.clone(),
            },
            seen,
        )
    }

    fn frame() -> MarketFrame {
        SyntheticMarket::new(3, 160, 21).build()
    }

    #[test]
    fn replay_model_emits_yesterdays_target() {
        let f = frame();
        let (m, _) = replay();
        let out = online_views(m, &f, 91, 140, 90, 0.25, 0.05, FeatureConfig::default(), None).unwrap();
        assert!(out[0].1.is_none());
        for &(t, ref q) in &out[1..] {
            let prev = t - 1;
            let risk = RiskModel::new(estimate_covariance(&f, prev, 90).unwrap(), 0.25, 0.05).unwrap();
            let eq = equilibrium_returns(&risk, &market_weights(&f, prev).unwrap()).unwrap();
            let p0 = DVector::from_fn(3, |i, _| f.prices()[(prev, i)]);
            let p1 = DVector::from_fn(3, |i, _| f.prices()[(t, i)]);
            let expect = invert_views(&optimal_one_hot(&p0, &p1), &eq, &risk, &default_confidence(&risk)).unwrap();
            let q = q.as_ref().unwrap();
            assert!((q - &expect).amax() <= 1e-12 * expect.amax(), "day {t}");
        }
    }

    #[test]
    fn no_reads_past_the_current_day() {
        let f = frame();
        let audit = AccessAudit::new();
        let cfg = LstmConfig::new(input_len(3), 3);
        online_views(Lstm::new(cfg).unwrap(), &f, 91, 160, 90, 0.25, 0.05, FeatureConfig::default(), Some(&audit)).unwrap();
        assert!(audit.reads() > 0);
        assert_eq!(audit.violations(), 0);
    }

    #[test]
    fn same_seed_same_stream() {
        let f = frame();
        let run = || {
            let cfg = LstmConfig { seed: 4, ..LstmConfig::new(input_len(3), 3) };
            online_views(Lstm::new(cfg).unwrap(), &f, 91, 150, 90, 0.25, 0.05, FeatureConfig::default(), None).unwrap()
        };
        assert_eq!(run(), run());
        let d = || {
            let m = Denfis::new(DenfisConfig::new(input_len(3), 3)).unwrap();
            online_views(m, &f, 91, 150, 90, 0.25, 0.05, FeatureConfig::default(), None).unwrap()
        };
        assert_eq!(d(), d());
    }

    #[test]
    fn sentiment_off_only_zeroes_that_block() {
        let f = frame();
        let (on, seen_on) = replay();
        let (off, seen_off) = replay();
        let cfg_on = FeatureConfig { use_sentiment: true, use_capital: false };
        let cfg_off = FeatureConfig { use_sentiment: false, use_capital: false };
        online_views(on, &f, 91, 120, 90, 0.25, 0.05, cfg_on, None).unwrap();
        online_views(off, &f, 91, 120, 90, 0.25, 0.05, cfg_off, None).unwrap();
        let (a, b) = (seen_on.lock().unwrap(), seen_off.lock().unwrap());
        assert_eq!(a.len(), b.len());
        let sent = 2 * 3 * 5..2 * 3 * 5 + 3 * 4;
        for (x, y) in a.iter().zip(b.iter()).skip(1) {
            assert!(y.rows(sent.start, sent.len()).iter().all(|v| *v == 0.0));
            assert!(x.rows(sent.start, sent.len()).iter().any(|v| *v != 0.0));
            assert_eq!(x.rows(0, sent.start), y.rows(0, sent.start));
        }
    }
}
