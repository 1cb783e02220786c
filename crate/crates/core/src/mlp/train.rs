use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::distribution::RelationDistribution;
use super::loss::{softmax, softmax_cross_entropy};
use super::matrix::Matrix;
use super::model::{MlpModel, Mode, ModelConfig};
use super::MlpError;
use crate::geometry::{assemble_features, feature_dim, FeatureVector};
use crate::instance::ClauseInstance;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub use_geo: bool,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 12,
            learning_rate: 1e-5,
            seed: 0,
            use_geo: false,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MlpError> {
        if self.epochs == 0 {
            return Err(MlpError::Config("epochs must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(MlpError::Config("batch_size must be at least 2".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MlpError::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Result of [`train`]: the model, its optimizer state, and the mean
/// training loss of every epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub model: MlpModel<T>,
    pub optimizer: AdamState<T>,
    pub loss_history: Vec<T>,
}

pub fn train<T: Scalar>(
    instances: &[ClauseInstance<T>],
    config: &TrainConfig,
) -> Result<TrainOutcome<T>, MlpError> {
    train_with_progress(instances, config, |_, _| {})
}

/// Trains a fresh model with Adam on mean cross-entropy. The last partial
/// batch of every epoch is dropped. `on_epoch` receives the 1-based epoch
/// number and that epoch's mean loss.
pub fn train_with_progress<T: Scalar, F: FnMut(usize, T)>(
    instances: &[ClauseInstance<T>],
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome<T>, MlpError> {
    config.validate()?;
    if instances.len() < config.batch_size {
        return Err(MlpError::TooFewInstances { have: instances.len(), batch_size: config.batch_size });
    }
    let features: Vec<FeatureVector<T>> = instances
        .iter()
        .map(|i| assemble_features(&i.subject.bbox, &i.object.bbox, config.use_geo))
        .collect();
    let labels: Vec<usize> = instances.iter().map(|i| i.relation.index()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel::init(ModelConfig::new(feature_dim(config.use_geo)), &mut rng)?;
    let mut optimizer = AdamState::new(&model, config.learning_rate);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = T::zero();
        let mut batches = 0usize;
        for chunk in order.chunks_exact(config.batch_size) {
            let rows: Vec<&[T]> = chunk.iter().map(|&i| features[i].as_slice()).collect();
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (logits, cache) = model.forward_matrix(Matrix::from_rows(&rows), Mode::Train)?;
            let (loss, dlogits) = softmax_cross_entropy(&logits, &batch_labels);
            let grads = model.backward(&cache, &dlogits);
            adam_step(&mut model, &grads, &mut optimizer);
            model.update_running_stats(&cache);
            epoch_loss = epoch_loss + loss;
            batches += 1;
        }
        let mean = epoch_loss / T::from_usize_lossy(batches);
        if !mean.is_finite() {
            return Err(MlpError::Diverged { epoch });
        }
        loss_history.push(mean);
        on_epoch(epoch, mean);
    }
    Ok(TrainOutcome { model, optimizer, loss_history })
}

/// Eval-mode forward pass and softmax for one feature vector.
pub fn predict<T: Scalar>(model: &MlpModel<T>, features: &FeatureVector<T>) -> Result<RelationDistribution<T>, MlpError> {
    let (logits, _) = model.forward(std::slice::from_ref(features), Mode::Eval)?;
    RelationDistribution::from_slice(&softmax(logits.row(0)))
}
