//! Unit models: parameter vectors, the graph autoencoder, the tabular MLP and
//! plain SGD training.

pub mod autoencoder;
mod dense;
pub mod mlp;
mod params;

use std::sync::Arc;

pub use autoencoder::{AutoencoderObjective, AutoencoderOutput, AutoencoderSpec};
pub use mlp::{Example, MlpObjective, MlpSpec};
pub use params::{Block, Layout, ParamVector};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// `||A - A_hat||_F^2`
    pub reconstruction: f64,
    /// Signed pairwise latent distance; negative when non-edges dominate.
    pub proximity: f64,
    /// Sum of squared parameters.
    pub regularization: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(reconstruction: f64, proximity: f64, regularization: f64, alpha: f64) -> Self {
        LossBreakdown {
            reconstruction,
            proximity,
            regularization,
            total: reconstruction + proximity + alpha * regularization,
        }
    }
}

/// A per-instance differentiable training objective.
pub trait Objective {
    type Instance;

    fn layout(&self) -> Arc<Layout>;

    /// Total loss on one instance and its gradient.
    fn loss_and_gradient(&self, model: &ParamVector, instance: &Self::Instance) -> Result<(f64, ParamVector)>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs_per_batch: usize,
    /// Weight of the squared-L2 regularizer.
    pub alpha: f64,
    pub init_low: f64,
    pub init_high: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs_per_batch: 50,
            alpha: 0.001,
            init_low: 0.0,
            init_high: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config_key(
                "learning_rate",
                None,
                "must be a finite non-negative number",
            ));
        }
        if self.epochs_per_batch == 0 {
            return Err(Error::config_key("epochs_per_batch", None, "must be positive"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config_key("alpha", None, "must be non-negative"));
        }
        if !self.init_low.is_finite() || !self.init_high.is_finite() || self.init_low >= self.init_high {
            return Err(Error::config_key(
                "init_low",
                None,
                format!("init range [{}, {}) is empty", self.init_low, self.init_high),
            ));
        }
        Ok(())
    }
}

/// Either kind of unit model architecture.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum UnitSpec {
    Autoencoder(AutoencoderSpec),
    Mlp(MlpSpec),
}

impl UnitSpec {
    pub fn layout(&self) -> Layout {
        match self {
            UnitSpec::Autoencoder(s) => s.layout(),
            UnitSpec::Mlp(s) => s.layout(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            UnitSpec::Autoencoder(s) => s.validate(),
            UnitSpec::Mlp(s) => s.validate(),
        }
    }
}

/// Fresh parameters drawn uniformly on `[init_low, init_high)`.
pub fn init_model(spec: &UnitSpec, config: &TrainConfig, rng: &mut Rng) -> Result<ParamVector> {
    spec.validate()?;
    config.validate()?;
    Ok(init_with_layout(Arc::new(spec.layout()), config, rng))
}

pub(crate) fn init_with_layout(layout: Arc<Layout>, config: &TrainConfig, rng: &mut Rng) -> ParamVector {
    ParamVector::uniform(layout, config.init_low, config.init_high, rng)
}

/// `epochs_per_batch` passes over `batch`, one SGD step per instance.
pub fn train_on_batch<O: Objective>(
    model: &ParamVector,
    objective: &O,
    batch: &[&O::Instance],
    config: &TrainConfig,
) -> Result<ParamVector> {
    if batch.is_empty() {
        return Err(Error::Sampling("training batch is empty".into()));
    }
    let mut theta = model.clone();
    if config.learning_rate == 0.0 {
        return Ok(theta);
    }
    for epoch in 1..=config.epochs_per_batch {
        for instance in batch {
            let (loss, grad) = objective.loss_and_gradient(&theta, instance)?;
            if !loss.is_finite() || !grad.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: format!("loss {loss} or its gradient is not finite"),
                });
            }
            theta.descend(config.learning_rate, &grad);
        }
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    #[test]
    fn init_respects_range_and_seed() {
        let spec = UnitSpec::Autoencoder(AutoencoderSpec::new(4, vec![3], 2).unwrap());
        let cfg = TrainConfig::default();
        let a = init_model(&spec, &cfg, &mut from_seed(3)).unwrap();
        assert_eq!(a.len(), 48);
        assert!(a.values().iter().all(|&v| (0.0..1.0).contains(&v)));
        let b = init_model(&spec, &cfg, &mut from_seed(3)).unwrap();
        assert!(a.bit_eq(&b));
    }

    #[test]
    fn empty_init_range_is_rejected() {
        let spec = UnitSpec::Mlp(MlpSpec::new(2, vec![2], 2).unwrap());
        let cfg = TrainConfig {
            init_low: 0.5,
            init_high: 0.5,
            ..TrainConfig::default()
        };
        assert!(init_model(&spec, &cfg, &mut from_seed(0)).is_err());
    }

    #[test]
    fn loss_breakdown_recomposes() {
        let l = LossBreakdown::new(1.5, -0.25, 4.0, 0.1);
        assert_eq!(l.total, 1.5 + -0.25 + 0.1 * 4.0);
    }
}
