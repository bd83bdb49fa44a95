//! Logistic regression trained by stochastic gradient ascent on the
//! Bernoulli log-likelihood. A constant-1 intercept feature is appended
//! internally, since count features never span an intercept on their own.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::CompositionSample;

/// Probability clip applied inside the log-likelihood.
const LL_EPS: f64 = 1e-12;

/// Default constant learning rate and epoch count.
pub const DEFAULT_LEARNING_RATE: f64 = 0.05;
pub const DEFAULT_EPOCHS: usize = 30;

/// Trained logistic model: feature weights with a trailing intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    /// Length `dim + 1`; the last entry multiplies the constant-1 feature.
    pub theta: Vec<f64>,
    pub epochs_run: usize,
    pub final_log_likelihood: f64,
}

impl LrModel {
    pub fn dim(&self) -> usize {
        self.theta.len() - 1
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn score(theta: &[f64], x: &[f64]) -> f64 {
    let mut z = theta[theta.len() - 1]; // intercept
    for (t, v) in theta[..theta.len() - 1].iter().zip(x.iter()) {
        z += t * v;
    }
    z
}

fn check_labels(samples: &[CompositionSample]) -> Result<()> {
    let pos = samples.iter().filter(|s| s.y == 1).count();
    if samples.is_empty() || pos == 0 || pos == samples.len() {
        return Err(Error::InvalidInput(
            "training data must contain both labels".into(),
        ));
    }
    Ok(())
}

/// Trains by per-sample ascent steps `theta += eta * (y - h) * x` over
/// seeded-shuffled epochs, starting from zero weights.
pub fn lr_train(
    samples: &[CompositionSample],
    learning_rate: f64,
    epochs: usize,
    seed: u64,
) -> Result<LrModel> {
    check_labels(samples)?;
    if !(learning_rate > 0.0) || !learning_rate.is_finite() {
        return Err(Error::InvalidInput(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    let dim = samples[0].x.len();
    let features: Vec<Vec<f64>> = samples.iter().map(CompositionSample::features).collect();
    let mut theta = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &features[i];
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            let residual = f64::from(samples[i].y) - sigmoid(score(&theta, x));
            let step = learning_rate * residual;
            for (t, v) in theta[..dim].iter_mut().zip(x.iter()) {
                *t += step * v;
            }
            theta[dim] += step; // constant-1 feature
        }
    }

    let mut model = LrModel {
        theta,
        epochs_run: epochs,
        final_log_likelihood: 0.0,
    };
    model.final_log_likelihood = lr_log_likelihood(&model, samples);
    Ok(model)
}

/// Win probability for a feature vector (intercept appended internally).
pub fn lr_predict(model: &LrModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    Ok(sigmoid(score(&model.theta, x)))
}

/// Predicted label: 1 iff the probability is at least one half.
pub fn lr_predict_label(model: &LrModel, x: &[f64]) -> Result<u8> {
    Ok(u8::from(lr_predict(model, x)? >= 0.5))
}

/// Bernoulli log-likelihood of the samples under the model, with the
/// hypothesis clipped into `[eps, 1 - eps]` before the logs.
pub fn lr_log_likelihood(model: &LrModel, samples: &[CompositionSample]) -> f64 {
    samples
        .iter()
        .map(|s| {
            let h = sigmoid(score(&model.theta, &s.features())).clamp(LL_EPS, 1.0 - LL_EPS);
            if s.y == 1 {
                h.ln()
            } else {
                (1.0 - h).ln()
            }
        })
        .sum()
}

/// Full-batch ascent gradient of the log-likelihood at `theta` (intercept
/// last), exposed for the finite-difference checks and the monotone
/// batch-mode property harness.
pub fn lr_batch_gradient(theta: &[f64], samples: &[CompositionSample]) -> Vec<f64> {
    let dim = theta.len() - 1;
    let mut grad = vec![0.0; theta.len()];
    for s in samples {
        let x = s.features();
        let residual = f64::from(s.y) - sigmoid(score(theta, &x));
        for (g, v) in grad[..dim].iter_mut().zip(x.iter()) {
            *g += residual * v;
        }
        grad[dim] += residual;
    }
    grad
}

/// Log-likelihood at an arbitrary `theta` (intercept last), for gradient
/// checks that perturb coordinates directly.
pub fn lr_log_likelihood_at(theta: &[f64], samples: &[CompositionSample]) -> f64 {
    let model = LrModel {
        theta: theta.to_vec(),
        epochs_run: 0,
        final_log_likelihood: 0.0,
    };
    lr_log_likelihood(&model, samples)
}
