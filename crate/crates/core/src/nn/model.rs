use rand::Rng;
use serde::{Deserialize, Serialize};

use super::norm::NormSchema;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Feed-forward regression network. Hidden layers use `activation`, the output is linear.
///
/// `weights[l]` is the row-major `layer_sizes[l + 1] × layer_sizes[l]` matrix of layer `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activation: Activation,
    pub norm_schema: NormSchema,
}

/// Per-layer pre-activations and activations from one forward pass.
pub(crate) struct Trace {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

/// Parameter gradients with the same layout as the model.
#[derive(Debug, Clone)]
pub(crate) struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

fn check_sizes(layer_sizes: &[usize]) -> Result<(), NnError> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(NnError::Shape(format!("invalid layer sizes {layer_sizes:?}")));
    }
    if layer_sizes.last() != Some(&1) {
        return Err(NnError::Shape("output layer must have exactly one unit".into()));
    }
    Ok(())
}

impl MlpModel {
    /// All-zero parameters.
    pub fn zeros(layer_sizes: &[usize], norm_schema: NormSchema) -> Result<Self, NnError> {
        check_sizes(layer_sizes)?;
        let weights = layer_sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        let model = Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            activation: Activation::Relu,
            norm_schema,
        };
        model.validate()?;
        Ok(model)
    }

    /// Weights and biases uniform in `±1/sqrt(fan_in)`.
    pub fn random<R: Rng>(layer_sizes: &[usize], norm_schema: NormSchema, rng: &mut R) -> Result<Self, NnError> {
        let mut model = Self::zeros(layer_sizes, norm_schema)?;
        for (l, (w, b)) in model.weights.iter_mut().zip(model.biases.iter_mut()).enumerate() {
            let bound = 1.0 / (layer_sizes[l] as f64).sqrt();
            w.iter_mut().for_each(|x| *x = rng.gen_range(-bound..=bound));
            b.iter_mut().for_each(|x| *x = rng.gen_range(-bound..=bound));
        }
        Ok(model)
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<(), NnError> {
        check_sizes(&self.layer_sizes)?;
        let layers = self.layer_sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(NnError::Shape("layer count does not match layer_sizes".into()));
        }
        for l in 0..layers {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if self.weights[l].len() != fan_in * fan_out || self.biases[l].len() != fan_out {
                return Err(NnError::Shape(format!(
                    "layer {l} parameters do not match {fan_in}->{fan_out}"
                )));
            }
        }
        if self.norm_schema.features.len() != self.input_size() {
            return Err(NnError::Shape(format!(
                "norm schema has {} features, network expects {}",
                self.norm_schema.features.len(),
                self.input_size()
            )));
        }
        if self
            .weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(NnError::NonFinite);
        }
        Ok(())
    }

    /// Output for an already-normalized feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<f64, NnError> {
        if features.len() != self.input_size() {
            return Err(NnError::Arity {
                expected: self.input_size(),
                got: features.len(),
            });
        }
        let mut x = features.to_vec();
        let last = self.weights.len() - 1;
        for l in 0..self.weights.len() {
            x = self.layer(l, &x);
            if l != last {
                x.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        Ok(x[0])
    }

    fn layer(&self, l: usize, input: &[f64]) -> Vec<f64> {
        let fan_in = self.layer_sizes[l];
        self.weights[l]
            .chunks_exact(fan_in)
            .zip(&self.biases[l])
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    pub(crate) fn trace(&self, features: &[f64]) -> Trace {
        let mut post = vec![features.to_vec()];
        let mut pre = Vec::with_capacity(self.weights.len());
        let last = self.weights.len() - 1;
        for l in 0..self.weights.len() {
            let z = self.layer(l, &post[l]);
            let a = if l == last {
                z.clone()
            } else {
                z.iter().map(|v| self.activation.apply(*v)).collect()
            };
            pre.push(z);
            post.push(a);
        }
        Trace { pre, post }
    }

    /// Accumulates `scale · ∂(pred − target)²/∂θ` into `grads`; returns the squared error.
    pub(crate) fn backprop(&self, features: &[f64], target: f64, scale: f64, grads: &mut Gradients) -> f64 {
        let trace = self.trace(features);
        let last = self.weights.len() - 1;
        let err = trace.post[last + 1][0] - target;
        let mut delta = vec![2.0 * err * scale];
        for l in (0..=last).rev() {
            let fan_in = self.layer_sizes[l];
            let input = &trace.post[l];
            for (j, d) in delta.iter().enumerate() {
                grads.biases[l][j] += d;
                let row = &mut grads.weights[l][j * fan_in..(j + 1) * fan_in];
                row.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
            }
            if l > 0 {
                let mut prev = vec![0.0; fan_in];
                for (j, d) in delta.iter().enumerate() {
                    let row = &self.weights[l][j * fan_in..(j + 1) * fan_in];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                }
                for (p, z) in prev.iter_mut().zip(&trace.pre[l - 1]) {
                    *p *= self.activation.derivative(*z);
                }
                delta = prev;
            }
        }
        err * err
    }

    pub(crate) fn step(&mut self, grads: &Gradients, learning_rate: f64) {
        let params = self.weights.iter_mut().chain(self.biases.iter_mut());
        let grads = grads.weights.iter().chain(&grads.biases);
        for (p, g) in params.zip(grads) {
            p.iter_mut().zip(g).for_each(|(p, g)| *p -= learning_rate * g);
        }
    }

    pub fn to_json(&self) -> Result<Vec<u8>, NnError> {
        Ok(serde_json::to_vec_pretty(self)?)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, NnError> {
        let model: MlpModel = serde_json::from_slice(bytes)?;
        model.validate()?;
        Ok(model)
    }
}
