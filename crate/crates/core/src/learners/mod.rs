//! Online models that map an input vector to per-asset view returns.
//!
//! Every model is trained one sample at a time in date order. `predict`
//! never changes state; `update` performs exactly one training step.

mod denfis;
mod lstm;
mod nt;
mod online;

pub use denfis::{Denfis, DenfisConfig, FuzzyRule};
pub use lstm::{lstm_cell_step, Lstm, LstmConfig, LstmRecurrentState};
pub use nt::{softmax, NtModel, NT_SMOOTHING};
pub use online::{online_views, OnlineStepper, TargetKind};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("training loss is not finite")]
    NonFiniteLoss,
    #[error("target contains non-finite values")]
    NonFiniteTarget,
    #[error("model has no rules yet")]
    NoRules,
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("snapshot is for a different model or version: {0}")]
    SnapshotMismatch(String),
    #[error(transparent)]
    Features(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Alloc(#[from] crate::allocation::AllocError),
}

pub(crate) fn check_dim(v: &DVector<f64>, n: usize) -> Result<(), LearnError> {
    if v.len() != n {
        return Err(LearnError::DimensionMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn mse(pred: &DVector<f64>, target: &DVector<f64>) -> f64 {
    (pred - target).norm_squared() / pred.len().max(1) as f64
}

/// Full serialized state of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub version: u32,
    pub model: SnapshotBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SnapshotBody {
    Lstm(Box<Lstm>),
    Denfis(Box<Denfis>),
    Nt(Box<ModelSnapshot>),
    /// State of a model defined outside this crate.
    Opaque(serde_json::Value),
}

impl ModelSnapshot {
    pub fn new(model: SnapshotBody) -> Self {
        Self {
            version: SNAPSHOT_VERSION,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LearnError> {
        let snap: Self = serde_json::from_str(s).map_err(|e| LearnError::SnapshotMismatch(e.to_string()))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(LearnError::SnapshotMismatch(format!("version {}", snap.version)));
        }
        Ok(snap)
    }
}

pub trait OnlineViewModel: Send {
    fn n_inputs(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>, LearnError>;
    /// One training step; returns the loss of the pre-step prediction.
    fn update(&mut self, x: &DVector<f64>, target: &DVector<f64>) -> Result<f64, LearnError>;
    /// Back to the freshly constructed state.
    fn reset(&mut self);
    fn snapshot(&self) -> ModelSnapshot;
    fn restore(&mut self, snap: &ModelSnapshot) -> Result<(), LearnError>;
}

impl<M: OnlineViewModel + ?Sized> OnlineViewModel for Box<M> {
    fn n_inputs(&self) -> usize {
        (**self).n_inputs()
    }
    fn n_outputs(&self) -> usize {
        (**self).n_outputs()
    }
    fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>, LearnError> {
        (**self).predict(x)
    }
    fn update(&mut self, x: &DVector<f64>, target: &DVector<f64>) -> Result<f64, LearnError> {
        (**self).update(x, target)
    }
    fn reset(&mut self) {
        (**self).reset()
    }
    fn snapshot(&self) -> ModelSnapshot {
        (**self).snapshot()
    }
    fn restore(&mut self, snap: &ModelSnapshot) -> Result<(), LearnError> {
        (**self).restore(snap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Denfis,
    Lstm,
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "denfis" => Ok(Self::Denfis),
            "lstm" => Ok(Self::Lstm),
            other => Err(format!("unknown model `{other}` (expected denfis or lstm)")),
        }
    }
}

/// Settings shared by the view learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub model: ModelKind,
    pub d: f64,
    pub m_activate: usize,
    pub bptt_horizon: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub use_sentiment: bool,
    pub use_capital: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Denfis,
            d: denfis::DEFAULT_D,
            m_activate: denfis::DEFAULT_M_ACTIVATE,
            bptt_horizon: lstm::DEFAULT_BPTT_HORIZON,
            learning_rate: lstm::DEFAULT_LEARNING_RATE,
            seed: 0,
            use_sentiment: true,
            use_capital: false,
        }
    }
}

impl LearnerConfig {
    pub fn feature_config(&self) -> crate::features::FeatureConfig {
        crate::features::FeatureConfig {
            use_sentiment: self.use_sentiment,
            use_capital: self.use_capital,
        }
    }

    pub fn lstm_config(&self, n_inputs: usize, n_outputs: usize) -> LstmConfig {
        LstmConfig {
            bptt_horizon: self.bptt_horizon,
            learning_rate: self.learning_rate,
            seed: self.seed,
            ..LstmConfig::new(n_inputs, n_outputs)
        }
    }

    pub fn denfis_config(&self, n_inputs: usize, n_outputs: usize) -> DenfisConfig {
        DenfisConfig {
            d: self.d,
            m_activate: self.m_activate,
            ..DenfisConfig::new(n_inputs, n_outputs)
        }
    }

    /// Builds the configured view model.
    pub fn build(&self, n_inputs: usize, n_outputs: usize) -> Result<Box<dyn OnlineViewModel>, LearnError> {
        Ok(match self.model {
            ModelKind::Lstm => Box::new(Lstm::new(self.lstm_config(n_inputs, n_outputs))?),
            ModelKind::Denfis => Box::new(Denfis::new(self.denfis_config(n_inputs, n_outputs))?),
        })
    }
}
