//! Gaussian discriminant analysis with a shared covariance matrix,
//! fitted by the exact analytic maximum-likelihood equations: class prior
//! from label counts, class means, and the pooled covariance normalized
//! by the sample count.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::CompositionSample;

/// Default starting ridge added to the covariance when it is not
/// factorizable as given.
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Fitted GDA parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdaModel {
    /// P(y = 1).
    pub phi: f64,
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    /// Shared covariance, symmetric positive-definite after the ridge.
    pub sigma: Array2<f64>,
    /// Ridge actually added to the diagonal (0 when none was needed).
    pub ridge: f64,
}

impl GdaModel {
    pub fn dim(&self) -> usize {
        self.mu0.len()
    }
}

/// Lower-triangular Cholesky factor, or `None` if the matrix is not
/// positive-definite.
pub(crate) fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` given the lower-triangular factor.
fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[(k, i)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    x
}

fn log_det_from_factor(l: &Array2<f64>) -> f64 {
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

/// Fits the shared-covariance MLE. If the pooled covariance cannot be
/// Cholesky-factorized, `ridge * I` is added and doubled until it can;
/// the ridge actually applied is recorded on the model.
pub fn gda_fit(samples: &[CompositionSample], ridge: f64) -> Result<GdaModel> {
    let m = samples.len();
    let pos = samples.iter().filter(|s| s.y == 1).count();
    if m == 0 || pos == 0 || pos == m {
        return Err(Error::InvalidInput(
            "training data must contain both labels".into(),
        ));
    }
    let d = samples[0].x.len();
    for s in samples {
        if s.x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.x.len(),
            });
        }
    }

    let phi = pos as f64 / m as f64;
    let mut mu0 = Array1::<f64>::zeros(d);
    let mut mu1 = Array1::<f64>::zeros(d);
    for s in samples {
        let target = if s.y == 1 { &mut mu1 } else { &mut mu0 };
        for (t, &v) in target.iter_mut().zip(s.x.iter()) {
            *t += v as f64;
        }
    }
    mu0 /= (m - pos) as f64;
    mu1 /= pos as f64;

    let mut sigma = Array2::<f64>::zeros((d, d));
    for s in samples {
        let mu = if s.y == 1 { &mu1 } else { &mu0 };
        let diff: Vec<f64> = s
            .x
            .iter()
            .zip(mu.iter())
            .map(|(&v, &u)| v as f64 - u)
            .collect();
        for i in 0..d {
            for j in 0..=i {
                sigma[(i, j)] += diff[i] * diff[j];
            }
        }
    }
    sigma /= m as f64;
    for i in 0..d {
        for j in (i + 1)..d {
            sigma[(i, j)] = sigma[(j, i)];
        }
    }

    let mut applied = 0.0;
    if cholesky(&sigma).is_none() {
        if !(ridge > 0.0) {
            return Err(Error::Numerical(
                "covariance is singular and no positive ridge was given".into(),
            ));
        }
        let mut step = ridge;
        loop {
            let mut bumped = sigma.clone();
            for i in 0..d {
                bumped[(i, i)] += step;
            }
            if cholesky(&bumped).is_some() {
                sigma = bumped;
                applied = step;
                break;
            }
            step *= 2.0;
            if !step.is_finite() {
                return Err(Error::Numerical(
                    "covariance could not be made positive-definite".into(),
                ));
            }
        }
    }

    Ok(GdaModel {
        phi,
        mu0: mu0.to_vec(),
        mu1: mu1.to_vec(),
        sigma,
        ridge: applied,
    })
}

/// Joint log-likelihood of the samples under arbitrary GDA parameters.
///
/// Fails if `sigma` is not positive-definite.
pub fn gda_log_likelihood_params(
    phi: f64,
    mu0: &[f64],
    mu1: &[f64],
    sigma: &Array2<f64>,
    samples: &[CompositionSample],
) -> Result<f64> {
    let d = mu0.len();
    let l = cholesky(sigma)
        .ok_or_else(|| Error::Numerical("covariance is not positive-definite".into()))?;
    let log_det = log_det_from_factor(&l);
    let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
    let mut total = 0.0;
    for s in samples {
        let mu = if s.y == 1 { mu1 } else { mu0 };
        let diff = Array1::from_iter(
            s.x.iter().zip(mu.iter()).map(|(&v, &u)| v as f64 - u),
        );
        let solved = cholesky_solve(&l, &diff);
        let maha = diff.dot(&solved);
        let prior = if s.y == 1 { phi } else { 1.0 - phi };
        total += log_norm - 0.5 * maha + prior.ln();
    }
    Ok(total)
}

/// Joint log-likelihood of the samples under a fitted model.
pub fn gda_log_likelihood(model: &GdaModel, samples: &[CompositionSample]) -> Result<f64> {
    gda_log_likelihood_params(model.phi, &model.mu0, &model.mu1, &model.sigma, samples)
}

/// Posterior class prediction via Bayes' rule with the shared covariance.
///
/// Returns the predicted label and the posterior probability of that label.
pub fn gda_predict(model: &GdaModel, x: &[f64]) -> Result<(u8, f64)> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    let l = cholesky(&model.sigma)
        .ok_or_else(|| Error::Numerical("covariance is not positive-definite".into()))?;

    let log_joint = |mu: &[f64], prior: f64| -> f64 {
        let diff = Array1::from_iter(x.iter().zip(mu.iter()).map(|(&v, &u)| v - u));
        let solved = cholesky_solve(&l, &diff);
        -0.5 * diff.dot(&solved) + prior.ln()
    };
    // The shared normalizing constant cancels in the posterior.
    let j1 = log_joint(&model.mu1, model.phi);
    let j0 = log_joint(&model.mu0, 1.0 - model.phi);
    let p1 = 1.0 / (1.0 + (j0 - j1).exp());
    if p1 >= 0.5 {
        Ok((1, p1))
    } else {
        Ok((0, 1.0 - p1))
    }
}

/// Posterior probability that the label is 1.
pub fn gda_predict_label(model: &GdaModel, x: &[f64]) -> Result<u8> {
    Ok(gda_predict(model, x)?.0)
}
