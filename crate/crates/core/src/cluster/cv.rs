//! 10-fold cross-validated selection of k (k-means) and lambda (DP-means).
//!
//! The held-out score for a parameter value is the average over folds of the
//! fit's own objective evaluated on the held-out rows: within-cluster sum of
//! squares for k-means, the penalized objective for DP-means. Held-out rows
//! are assigned to their nearest trained centroid; DP-means does not spawn
//! on held-out data.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::StatMatrix;

use super::{
    distortion, dp_objective, dpmeans_fit, kmeans_fit, ClusterModel, DEFAULT_MAX_ITER,
};

/// Restarts per (parameter, fold) fit inside cross-validation; the best
/// training objective wins. Single random-observation inits get stuck in
/// merged-cluster optima often enough to swamp the curve otherwise.
pub const CV_RESTARTS: usize = 10;

/// A cross-validation curve over a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCurve {
    /// Parameter values in grid order (k values are stored as reals).
    pub grid: Vec<f64>,
    /// Held-out objective averaged over folds, one entry per grid value.
    pub mean_scores: Vec<f64>,
    /// Index into `grid` of the selected value.
    pub chosen_index: usize,
}

impl CvCurve {
    /// The selected parameter value.
    pub fn chosen(&self) -> f64 {
        self.grid[self.chosen_index]
    }
}

/// Seeded shuffle followed by contiguous equal-size folds; the remainder is
/// spread one row per fold from the front.
pub fn make_folds(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if folds > n {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} rows into {folds} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n / folds;
    let rem = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < rem);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

fn subset(m: &StatMatrix, rows: &[usize]) -> StatMatrix {
    let mut values = Array2::zeros((rows.len(), m.dim()));
    for (r, &i) in rows.iter().enumerate() {
        values.row_mut(r).assign(&m.row(i));
    }
    StatMatrix {
        values,
        column_names: m.column_names.clone(),
        normalization: m.normalization.clone(),
        row_ids: rows.iter().map(|&i| m.row_ids[i].clone()).collect(),
    }
}

/// Deterministic per-(parameter, fold, restart) seed derivation.
fn derive_seed(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(b.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = z.wrapping_add(c.wrapping_mul(0x94D0_49BB_1331_11EB));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Selection rule: the smallest grid value that is a local minimum of the
/// mean held-out score (score no larger than both neighbors); if the curve
/// has none, fall back to the global argmin.
fn select_index(scores: &[f64]) -> usize {
    if scores.len() > 2 {
        for i in 1..scores.len() - 1 {
            if scores[i] <= scores[i - 1] && scores[i] <= scores[i + 1] {
                return i;
            }
        }
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    best
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut held = vec![false; n];
    for &i in fold {
        held[i] = true;
    }
    (0..n).filter(|&i| !held[i]).collect()
}

/// Cross-validates k-means over a grid of cluster counts.
pub fn cv_select_k(
    m: &StatMatrix,
    k_grid: &[usize],
    folds: usize,
    seed: u64,
) -> Result<CvCurve> {
    if k_grid.is_empty() {
        return Err(Error::InvalidInput("empty k grid".into()));
    }
    let fold_sets = make_folds(m.n(), folds, seed)?;
    let min_train = m.n() - fold_sets.iter().map(Vec::len).max().unwrap_or(0);
    if let Some(&bad) = k_grid.iter().find(|&&k| k == 0 || k > min_train) {
        return Err(Error::InvalidInput(format!(
            "k = {bad} exceeds the training-fold size {min_train}"
        )));
    }

    let mut mean_scores = Vec::with_capacity(k_grid.len());
    for (gi, &k) in k_grid.iter().enumerate() {
        let mut total = 0.0;
        for (fi, fold) in fold_sets.iter().enumerate() {
            let train = subset(m, &complement(m.n(), fold));
            let held = subset(m, fold);
            let mut best: Option<ClusterModel> = None;
            for r in 0..CV_RESTARTS {
                let s = derive_seed(seed, gi as u64, fi as u64, r as u64);
                let (model, _) = kmeans_fit(&train, k, s, DEFAULT_MAX_ITER)?;
                if best
                    .as_ref()
                    .is_none_or(|b| model.final_objective < b.final_objective)
                {
                    best = Some(model);
                }
            }
            total += distortion(&held, &best.expect("CV_RESTARTS >= 1"))?;
        }
        mean_scores.push(total / fold_sets.len() as f64);
    }

    let chosen_index = select_index(&mean_scores);
    Ok(CvCurve {
        grid: k_grid.iter().map(|&k| k as f64).collect(),
        mean_scores,
        chosen_index,
    })
}

/// Cross-validates DP-means over a grid of threshold distances.
pub fn cv_select_lambda(
    m: &StatMatrix,
    lambda_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvCurve> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidInput("empty lambda grid".into()));
    }
    let fold_sets = make_folds(m.n(), folds, seed)?;

    let mut mean_scores = Vec::with_capacity(lambda_grid.len());
    for (gi, &lambda) in lambda_grid.iter().enumerate() {
        let mut total = 0.0;
        for (fi, fold) in fold_sets.iter().enumerate() {
            let train = subset(m, &complement(m.n(), fold));
            let held = subset(m, fold);
            let mut best: Option<ClusterModel> = None;
            for r in 0..CV_RESTARTS {
                let s = derive_seed(seed, gi as u64, fi as u64, r as u64);
                let (model, _) = dpmeans_fit(&train, lambda, s, DEFAULT_MAX_ITER)?;
                if best
                    .as_ref()
                    .is_none_or(|b| model.final_objective < b.final_objective)
                {
                    best = Some(model);
                }
            }
            total += dp_objective(&held, &best.expect("CV_RESTARTS >= 1"))?;
        }
        mean_scores.push(total / fold_sets.len() as f64);
    }

    let chosen_index = select_index(&mean_scores);
    Ok(CvCurve {
        grid: lambda_grid.to_vec(),
        mean_scores,
        chosen_index,
    })
}
