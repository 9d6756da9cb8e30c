//! Dynamic evolving neuro-fuzzy inference: evolving clustering places rule
//! centers, each rule carries a first-order Takagi-Sugeno-Kang consequent
//! fitted by weighted recursive least squares.

use super::{check_dim, mse, LearnError, ModelSnapshot, OnlineViewModel, SnapshotBody};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const DEFAULT_D: f64 = 0.21;
pub const DEFAULT_M_ACTIVATE: usize = 3;
/// Initial diagonal of each rule's inverse-covariance estimate.
pub const RLS_INIT: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenfisConfig {
    pub n_inputs: usize,
    pub n_outputs: usize,
    /// Width of the triangular memberships; clusters split at radius `d/2`.
    pub d: f64,
    pub m_activate: usize,
}

impl DenfisConfig {
    pub fn new(n_inputs: usize, n_outputs: usize) -> Self {
        Self {
            n_inputs,
            n_outputs,
            d: DEFAULT_D,
            m_activate: DEFAULT_M_ACTIVATE,
        }
    }

    /// Largest cluster radius.
    pub fn threshold(&self) -> f64 {
        self.d / 2.0
    }
}

/// One cluster and its affine consequent `y = theta' [1; x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub center: DVector<f64>,
    pub radius: f64,
    /// `(q + 1) x n` coefficients, intercept first.
    pub theta: DMatrix<f64>,
    /// Recursive least-squares inverse covariance, `(q + 1) x (q + 1)`.
    pub p: DMatrix<f64>,
}

impl FuzzyRule {
    pub fn consequent(&self, x: &DVector<f64>) -> DVector<f64> {
        self.theta.tr_mul(&extend(x))
    }
}

fn extend(x: &DVector<f64>) -> DVector<f64> {
    let mut e = DVector::zeros(x.len() + 1);
    e[0] = 1.0;
    e.rows_mut(1, x.len()).copy_from(x);
    e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Denfis {
    config: DenfisConfig,
    rules: Vec<FuzzyRule>,
}

impl Denfis {
    pub fn new(config: DenfisConfig) -> Result<Self, LearnError> {
        if config.n_inputs == 0 || config.n_outputs == 0 {
            return Err(LearnError::InvalidConfig("input and output sizes must be positive".into()));
        }
        if !(config.d.is_finite() && config.d > 0.0) {
            return Err(LearnError::InvalidConfig(format!("d must be positive, got {}", config.d)));
        }
        if config.m_activate == 0 {
            return Err(LearnError::InvalidConfig("m_activate must be at least 1".into()));
        }
        Ok(Self {
            config,
            rules: Vec::new(),
        })
    }

    pub fn config(&self) -> &DenfisConfig {
        &self.config
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn n_rules(&self) -> usize {
        self.rules.len()
    }

    /// Adds a rule by hand; mainly for tests and warm starts.
    pub fn push_rule(&mut self, center: DVector<f64>, theta: DMatrix<f64>) -> Result<(), LearnError> {
        check_dim(&center, self.config.n_inputs)?;
        if theta.shape() != (self.config.n_inputs + 1, self.config.n_outputs) {
            return Err(LearnError::DimensionMismatch {
                expected: (self.config.n_inputs + 1) * self.config.n_outputs,
                actual: theta.len(),
            });
        }
        let q = self.config.n_inputs + 1;
        self.rules.push(FuzzyRule {
            center,
            radius: 0.0,
            theta,
            p: DMatrix::identity(q, q) * RLS_INIT,
        });
        Ok(())
    }

    /// Euclidean distance scaled by `1/sqrt(q)`.
    pub fn distance(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a - b).norm() / (a.len() as f64).sqrt()
    }

    /// Product of triangular memberships with support `b +- d/2` per input.
    pub fn membership(&self, rule: &FuzzyRule, x: &DVector<f64>) -> f64 {
        let half = self.config.d / 2.0;
        let mut mu = 1.0;
        for (xi, bi) in x.iter().zip(rule.center.iter()) {
            mu *= (1.0 - (xi - bi).abs() / half).max(0.0);
            if mu == 0.0 {
                break;
            }
        }
        mu
    }

    /// Up to `m_activate` nearest rules with renormalized membership weights.
    /// When none of them covers `x`, the nearest rule alone gets weight 1.
    fn activation(&self, x: &DVector<f64>) -> Vec<(usize, f64)> {
        let mut order: Vec<(usize, f64)> = self
            .rules
            .iter()
            .enumerate()
            .map(|(k, r)| (k, self.distance(x, &r.center)))
            .collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        order.truncate(self.config.m_activate);
        let mut act: Vec<(usize, f64)> = order
            .iter()
            .map(|&(k, _)| (k, self.membership(&self.rules[k], x)))
            .collect();
        let total: f64 = act.iter().map(|a| a.1).sum();
        if total > 0.0 {
            for a in &mut act {
                a.1 /= total;
            }
            act.retain(|a| a.1 > 0.0);
            act
        } else {
            vec![(order[0].0, 1.0)]
        }
    }

    /// Evolving clustering step. Returns the index of the rule that now
    /// covers `x`.
    fn cluster(&mut self, x: &DVector<f64>) -> usize {
        let dthr = self.config.threshold();
        let q = self.config.n_inputs + 1;
        if self.rules.is_empty() {
            self.rules.push(FuzzyRule {
                center: x.clone(),
                radius: 0.0,
                theta: DMatrix::zeros(q, self.config.n_outputs),
                p: DMatrix::identity(q, q) * RLS_INIT,
            });
            return 0;
        }
        let dist: Vec<f64> = self.rules.iter().map(|r| self.distance(x, &r.center)).collect();
        if let Some(k) = (0..self.rules.len()).find(|&k| dist[k] <= self.rules[k].radius) {
            return k;
        }
        let (best, s) = (0..self.rules.len())
            .map(|k| (k, dist[k] + self.rules[k].radius))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one rule");
        if s > 2.0 * dthr {
            let nearest = (0..self.rules.len())
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
                .expect("at least one rule");
            self.rules.push(FuzzyRule {
                center: x.clone(),
                radius: 0.0,
                theta: self.rules[nearest].theta.clone(),
                p: DMatrix::identity(q, q) * RLS_INIT,
            });
            return self.rules.len() - 1;
        }
        // Enlarge the cluster to radius s/2 and slide its center towards x
        // so that x lies on the new boundary.
        let new_radius = s / 2.0;
        let r = &mut self.rules[best];
        let d = dist[best];
        if d > 0.0 {
            let dir = (x - &r.center) / (d * (x.len() as f64).sqrt());
            r.center += dir * ((d - new_radius) * (x.len() as f64).sqrt());
        }
        r.radius = new_radius;
        best
    }
}

impl OnlineViewModel for Denfis {
    fn n_inputs(&self) -> usize {
        self.config.n_inputs
    }

    fn n_outputs(&self) -> usize {
        self.config.n_outputs
    }

    fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>, LearnError> {
        check_dim(x, self.config.n_inputs)?;
        if self.rules.is_empty() {
            return Err(LearnError::NoRules);
        }
        let mut y = DVector::zeros(self.config.n_outputs);
        for (k, w) in self.activation(x) {
            y += self.rules[k].consequent(x) * w;
        }
        Ok(y)
    }

    fn update(&mut self, x: &DVector<f64>, target: &DVector<f64>) -> Result<f64, LearnError> {
        check_dim(x, self.config.n_inputs)?;
        check_dim(target, self.config.n_outputs)?;
        if target.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFiniteTarget);
        }
        let loss = match self.predict(x) {
            Ok(y) => mse(&y, target),
            Err(LearnError::NoRules) => mse(&DVector::zeros(target.len()), target),
            Err(e) => return Err(e),
        };
        self.cluster(x);
        let xe = extend(x);
        for (k, w) in self.activation(x) {
            let r = &mut self.rules[k];
            let px = &r.p * &xe;
            let denom = 1.0 + w * xe.dot(&px);
            r.p -= (&px * px.transpose()) * (w / denom);
            let gain = &r.p * &xe * w;
            let resid = target - r.theta.tr_mul(&xe);
            r.theta.ger(1.0, &gain, &resid, 1.0);
        }
        Ok(loss)
    }

    fn reset(&mut self) {
        self.rules.clear();
    }

    fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot::new(SnapshotBody::Denfis(Box::new(self.clone())))
    }

    fn restore(&mut self, snap: &ModelSnapshot) -> Result<(), LearnError> {
        match &snap.model {
            SnapshotBody::Denfis(m) if m.config.n_inputs == self.config.n_inputs && m.config.n_outputs == self.config.n_outputs => {
                *self = (**m).clone();
                Ok(())
            }
            _ => Err(LearnError::SnapshotMismatch("expected a DENFIS model of the same shape".into())),
        }
    }
}
