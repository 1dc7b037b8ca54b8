//! Backpropagation check against central finite differences.

use super::model::{Gradients, MlpModel};
use super::train::Sample;

/// `|a − n| / max(|a| + |n|, 1e-12)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-12)
}

fn loss(model: &MlpModel, sample: &Sample) -> f64 {
    let err = model.forward(&sample.features).expect("sample arity") - sample.target;
    err * err
}

/// Largest relative error between the analytic gradient of the squared-error loss and its
/// central finite-difference estimate, over every weight and bias.
pub fn gradient_check(model: &MlpModel, sample: &Sample, epsilon: f64) -> f64 {
    let mut analytic = Gradients::zeros_like(model);
    model.backprop(&sample.features, sample.target, 1.0, &mut analytic);

    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for l in 0..model.weights.len() {
        for i in 0..model.weights[l].len() {
            let orig = probe.weights[l][i];
            probe.weights[l][i] = orig + epsilon;
            let up = loss(&probe, sample);
            probe.weights[l][i] = orig - epsilon;
            let down = loss(&probe, sample);
            probe.weights[l][i] = orig;
            worst = worst.max(relative_error(analytic.weights[l][i], (up - down) / (2.0 * epsilon)));
        }
        for i in 0..model.biases[l].len() {
            let orig = probe.biases[l][i];
            probe.biases[l][i] = orig + epsilon;
            let up = loss(&probe, sample);
            probe.biases[l][i] = orig - epsilon;
            let down = loss(&probe, sample);
            probe.biases[l][i] = orig;
            worst = worst.max(relative_error(analytic.biases[l][i], (up - down) / (2.0 * epsilon)));
        }
    }
    worst
}
