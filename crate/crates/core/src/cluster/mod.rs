//! Play-style clustering: Lloyd's k-means, DP-means, cross-validated
//! parameter selection, and a PCA projection for visual export.

mod cv;
mod dpmeans;
mod kmeans;
mod pca;

pub use cv::{cv_select_k, cv_select_lambda, make_folds, CvCurve};
pub use dpmeans::{dpmeans_fit, dpmeans_fit_traced};
pub use kmeans::{kmeans_fit, kmeans_fit_traced};
pub use pca::{pca_fit, pca_transform, PcaProjection};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::StatMatrix;

/// Which clustering algorithm produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    KMeans,
    DPMeans,
}

/// The algorithm's driving parameter: a fixed cluster count, or the
/// new-cluster threshold distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Param {
    K(usize),
    Lambda(f64),
}

/// Learned centroids plus fit provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    /// k x d matrix, one centroid per row.
    pub centroids: Array2<f64>,
    pub algorithm: Algorithm,
    pub param: Param,
    /// Objective at convergence: within-cluster sum of squares for k-means,
    /// the penalized variant for DP-means.
    pub final_objective: f64,
    pub seed: u64,
    pub iterations: usize,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }

    /// Threshold distance for DP-means models.
    pub fn lambda(&self) -> Option<f64> {
        match self.param {
            Param::Lambda(l) => Some(l),
            Param::K(_) => None,
        }
    }
}

/// Cluster labels for the rows of a matrix, indices into the centroid rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub labels: Vec<usize>,
}

/// Squared Euclidean distance between two vectors.
#[inline]
pub(crate) fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Index and squared distance of the nearest centroid; ties break toward
/// the lowest centroid index.
pub fn nearest_centroid(x: ArrayView1<'_, f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(x, row);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

fn check_dims(m: &StatMatrix, model: &ClusterModel) -> Result<()> {
    if m.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: m.dim(),
        });
    }
    Ok(())
}

/// Within-cluster sum of squares with each row assigned to its nearest
/// centroid (ties toward the lowest index).
pub fn distortion(m: &StatMatrix, model: &ClusterModel) -> Result<f64> {
    check_dims(m, model)?;
    Ok(m
        .values
        .rows()
        .into_iter()
        .map(|row| nearest_centroid(row, &model.centroids).1)
        .sum())
}

/// DP-means objective: distortion plus the (k - 1) * lambda^2 cluster penalty.
pub fn dp_objective(m: &StatMatrix, model: &ClusterModel) -> Result<f64> {
    check_dims(m, model)?;
    let lambda = model.lambda().ok_or_else(|| {
        Error::InvalidInput("dp_objective requires a DP-means model".into())
    })?;
    Ok(distortion(m, model)? + (model.k() as f64 - 1.0) * lambda * lambda)
}

/// Configuration for a single clustering fit, used by the trial harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitConfig {
    KMeans { k: usize, max_iter: usize },
    DPMeans { lambda: f64, max_iter: usize },
}

impl FitConfig {
    pub fn fit(&self, m: &StatMatrix, seed: u64) -> Result<(ClusterModel, Assignment)> {
        match *self {
            FitConfig::KMeans { k, max_iter } => kmeans_fit(m, k, seed, max_iter),
            FitConfig::DPMeans { lambda, max_iter } => dpmeans_fit(m, lambda, seed, max_iter),
        }
    }
}

/// Default Lloyd / DP-means iteration cap.
pub const DEFAULT_MAX_ITER: usize = 300;

/// Default restart count for picking the best locally optimal fit.
pub const DEFAULT_TRIALS: usize = 20;

/// Runs `n_trials` fits with seeds `base_seed..base_seed + n_trials` and
/// keeps the one with the smallest objective (its own: within-cluster sum of
/// squares for k-means, the penalized objective for DP-means). Ties keep the
/// earliest seed.
pub fn best_of_trials(
    m: &StatMatrix,
    config: &FitConfig,
    n_trials: usize,
    base_seed: u64,
) -> Result<(ClusterModel, Assignment)> {
    let (model, assignment, _) = best_of_trials_logged(m, config, n_trials, base_seed)?;
    Ok((model, assignment))
}

/// As [`best_of_trials`], also returning every trial's final objective.
pub fn best_of_trials_logged(
    m: &StatMatrix,
    config: &FitConfig,
    n_trials: usize,
    base_seed: u64,
) -> Result<(ClusterModel, Assignment, Vec<f64>)> {
    if n_trials == 0 {
        return Err(Error::InvalidInput("n_trials must be >= 1".into()));
    }
    let mut best: Option<(ClusterModel, Assignment)> = None;
    let mut objectives = Vec::with_capacity(n_trials);
    for t in 0..n_trials {
        let seed = base_seed.wrapping_add(t as u64);
        let (model, assignment) = config.fit(m, seed)?;
        objectives.push(model.final_objective);
        let better = match &best {
            None => true,
            Some((b, _)) => model.final_objective < b.final_objective,
        };
        if better {
            best = Some((model, assignment));
        }
    }
    let (model, assignment) = best.expect("n_trials >= 1");
    Ok((model, assignment, objectives))
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same rows.
///
/// 1.0 means identical partitions up to relabeling; 0.0 is the chance level.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same rows");
    let n = a.len() as u64;
    if n < 2 {
        return 1.0;
    }
    let ka = a.iter().max().map_or(0, |&m| m + 1);
    let kb = b.iter().max().map_or(0, |&m| m + 1);
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&x, &y) in a.iter().zip(b.iter()) {
        table[x * kb + y] += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let sum_cells: f64 = table.iter().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = rows.iter().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-15 {
        return 1.0;
    }
    (sum_cells - expected) / (max_index - expected)
}
