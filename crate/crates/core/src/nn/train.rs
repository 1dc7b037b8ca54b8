use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{Gradients, MlpModel};
use super::norm::NormSchema;
use super::NnError;

/// One training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Sample>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>) -> Self {
        Self {
            rows: Vec::new(),
            feature_names,
        }
    }

    pub fn push(&mut self, features: Vec<f64>, target: f64) {
        self.rows.push(Sample { features, target });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let arity = self.feature_names.len();
        for (i, row) in self.rows.iter().enumerate() {
            if row.features.len() != arity {
                return Err(NnError::Arity {
                    expected: arity,
                    got: row.features.len(),
                });
            }
            if !(row.target >= 0.0) || row.features.iter().any(|v| !v.is_finite()) {
                return Err(NnError::Dataset(format!("row {i} has an invalid value")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 32,
            seed: 1,
            validation_fraction: 0.2,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(NnError::Config("learning_rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(NnError::Config("epochs and batch_size must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(NnError::Config("validation_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Mean squared error of `model` over `rows`.
pub fn mse(model: &MlpModel, rows: &[Sample]) -> Result<f64, NnError> {
    if rows.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for row in rows {
        let err = model.forward(&row.features)? - row.target;
        total += err * err;
    }
    Ok(total / rows.len() as f64)
}

/// Mini-batch SGD on mean squared error.
///
/// The rows are shuffled once with `config.seed` and the tail `validation_fraction` is held
/// out; the model with the lowest validation MSE seen (including the initial one) is returned.
/// With fewer than two rows the training rows double as the validation set.
pub fn train(dataset: &Dataset, layer_sizes: &[usize], config: &TrainingConfig) -> Result<MlpModel, NnError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    dataset.validate()?;
    if layer_sizes.first() != Some(&dataset.feature_names.len()) {
        return Err(NnError::Arity {
            expected: dataset.feature_names.len(),
            got: layer_sizes.first().copied().unwrap_or(0),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel::random(layer_sizes, NormSchema::unit(&dataset.feature_names), &mut rng)?;

    let mut rows: Vec<&Sample> = dataset.rows.iter().collect();
    rows.shuffle(&mut rng);
    let n_val = ((rows.len() as f64) * config.validation_fraction).floor() as usize;
    let (train_rows, val_rows): (Vec<Sample>, Vec<Sample>) = if n_val == 0 || n_val == rows.len() {
        let all: Vec<Sample> = rows.iter().map(|r| (*r).clone()).collect();
        (all.clone(), all)
    } else {
        let split = rows.len() - n_val;
        (
            rows[..split].iter().map(|r| (*r).clone()).collect(),
            rows[split..].iter().map(|r| (*r).clone()).collect(),
        )
    };

    let mut best = model.clone();
    let mut best_val = mse(&model, &val_rows)?;
    let mut order: Vec<usize> = (0..train_rows.len()).collect();
    let mut grads = Gradients::zeros_like(&model);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads
                .weights
                .iter_mut()
                .chain(grads.biases.iter_mut())
                .for_each(|g| g.fill(0.0));
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let row = &train_rows[i];
                epoch_loss += model.backprop(&row.features, row.target, scale, &mut grads);
            }
            model.step(&grads, config.learning_rate);
        }
        let val = mse(&model, &val_rows)?;
        if !epoch_loss.is_finite() || !val.is_finite() {
            return Err(NnError::Diverged { epoch });
        }
        if val < best_val {
            best_val = val;
            best = model.clone();
        }
    }
    log::debug!("training finished, best validation mse {best_val:.6}");
    Ok(best)
}
