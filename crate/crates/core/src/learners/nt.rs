//! Neural-trading baseline: the wrapped model predicts portfolio weights
//! directly, mapped onto the simplex by a softmax.

use super::{check_dim, mse, LearnError, ModelSnapshot, OnlineViewModel, SnapshotBody};
use nalgebra::DVector;

/// Mass spread uniformly over all assets before taking target logits, so a
/// one-hot target has finite logits.
pub const NT_SMOOTHING: f64 = 0.05;

pub fn softmax(z: &DVector<f64>) -> DVector<f64> {
    let m = z.max();
    let e = z.map(|v| (v - m).exp());
    let s = e.sum();
    e / s
}

pub struct NtModel<M> {
    inner: M,
}

impl<M: OnlineViewModel> NtModel<M> {
    pub fn new(inner: M) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    /// Centered logits of the smoothed target weights.
    pub fn target_logits(w: &DVector<f64>) -> DVector<f64> {
        let n = w.len() as f64;
        let z = w.map(|v| ((1.0 - NT_SMOOTHING) * v + NT_SMOOTHING / n).ln());
        let mean = z.mean();
        z.add_scalar(-mean)
    }
}

impl<M: OnlineViewModel> OnlineViewModel for NtModel<M> {
    fn n_inputs(&self) -> usize {
        self.inner.n_inputs()
    }

    fn n_outputs(&self) -> usize {
        self.inner.n_outputs()
    }

    fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>, LearnError> {
        match self.inner.predict(x) {
            Ok(z) => Ok(softmax(&z)),
            Err(LearnError::NoRules) => Ok(DVector::from_element(self.n_outputs(), 1.0 / self.n_outputs() as f64)),
            Err(e) => Err(e),
        }
    }

    /// Trains on a weight vector; the returned loss compares weights.
    fn update(&mut self, x: &DVector<f64>, target: &DVector<f64>) -> Result<f64, LearnError> {
        check_dim(target, self.n_outputs())?;
        if target.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(LearnError::NonFiniteTarget);
        }
        let loss = mse(&self.predict(x)?, target);
        self.inner.update(x, &Self::target_logits(target))?;
        Ok(loss)
    }

    fn reset(&mut self) {
        self.inner.reset();
    }

    fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot::new(SnapshotBody::Nt(Box::new(self.inner.snapshot())))
    }

    fn restore(&mut self, snap: &ModelSnapshot) -> Result<(), LearnError> {
        match &snap.model {
            SnapshotBody::Nt(inner) => self.inner.restore(inner),
            _ => Err(LearnError::SnapshotMismatch("expected a neural-trading snapshot".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Lstm, LstmConfig};
    use proptest::prelude::*;

    #[test]
    fn zero_network_gives_uniform_weights() {
        let nt = NtModel::new(Lstm::zeroed(LstmConfig::new(6, 5)).unwrap());
        let w = nt.predict(&DVector::from_element(6, 0.3)).unwrap();
        assert!(w.iter().all(|v| (*v - 0.2).abs() < 1e-15));
    }

    #[test]
    fn dominant_logit_takes_the_weight() {
        let w = softmax(&DVector::from_vec(vec![10.0, 0.0, 0.0, 0.0, 0.0]));
        assert!(w[0] > 0.99);
    }

    #[test]
    fn target_logits_rank_the_winner_first() {
        let z = NtModel::<Lstm>::target_logits(&DVector::from_vec(vec![0.0, 1.0, 0.0]));
        assert!(z[1] > z[0] && z[0] == z[2]);
        assert!(z.sum().abs() < 1e-12);
        let w = softmax(&z);
        assert!((w[1] - (0.95 + 0.05 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn training_moves_towards_the_target() {
        let cfg = LstmConfig {
            learning_rate: 1e-2,
            bptt_horizon: 1,
            ..LstmConfig::new(3, 3)
        };
        let mut nt = NtModel::new(Lstm::new(cfg).unwrap());
        let x = DVector::from_vec(vec![0.5, -0.5, 1.0]);
        let target = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        for _ in 0..300 {
            nt.update(&x, &target).unwrap();
        }
        let w = nt.predict(&x).unwrap();
        assert_eq!(w.imax(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn weights_lie_on_the_simplex(seed in 0u64..1000, scale in 0.1f64..50.0) {
            let cfg = LstmConfig { seed, ..LstmConfig::new(4, 5) };
            let nt = NtModel::new(Lstm::new(cfg).unwrap());
            let x = DVector::from_fn(4, |i, _| scale * ((seed as f64 + i as f64).sin()));
            let w = nt.predict(&x).unwrap();
            prop_assert!((w.sum() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|v| *v >= 0.0));
        }
    }
}
