//! DP-means: k-means-style coordinate descent where a new cluster is opened
//! whenever an observation sits farther than the threshold distance from
//! every existing centroid. The cluster count k is an output, driven by the
//! penalty term (k - 1) * lambda^2 on top of the distortion.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::preprocess::StatMatrix;

use super::{Algorithm, Assignment, ClusterModel, Param};

/// Fits DP-means with threshold distance `lambda`.
///
/// Starts from one random observation. Each outer iteration visits a fresh
/// random permutation of the data; an observation whose squared distance to
/// every current centroid exceeds `lambda^2` spawns a new centroid at itself,
/// otherwise it joins its nearest cluster. Centroids are then recomputed as
/// cluster means (clusters that lost every member are dropped) and the loop
/// repeats until memberships stop changing or `max_iter` is hit.
pub fn dpmeans_fit(
    m: &StatMatrix,
    lambda: f64,
    seed: u64,
    max_iter: usize,
) -> Result<(ClusterModel, Assignment)> {
    let (model, assignment, _) = dpmeans_fit_traced(m, lambda, seed, max_iter)?;
    Ok((model, assignment))
}

/// As [`dpmeans_fit`], also returning the penalized objective after every
/// outer iteration.
pub fn dpmeans_fit_traced(
    m: &StatMatrix,
    lambda: f64,
    seed: u64,
    max_iter: usize,
) -> Result<(ClusterModel, Assignment, Vec<f64>)> {
    let n = m.n();
    let d = m.dim();
    if n == 0 {
        return Err(Error::InvalidInput("empty observation matrix".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!(
            "lambda must be a positive real, got {lambda}"
        )));
    }
    let lambda_sq = lambda * lambda;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut centroids: Vec<Vec<f64>> = vec![m.row(first).to_vec()];

    let mut order: Vec<usize> = (0..n).collect();
    let mut labels: Vec<usize> = vec![0; n];
    let mut prev_labels: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter {
        order.shuffle(&mut rng);

        // Assignment pass: visit in permuted order, spawning as we go.
        for &i in &order {
            let row = m.row(i);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let dist: f64 = row
                    .iter()
                    .zip(centroid.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            if best_d > lambda_sq {
                labels[i] = centroids.len();
                centroids.push(row.to_vec());
            } else {
                labels[i] = best;
            }
        }

        // Centroid update: cluster means, dropping clusters with no members.
        let k = centroids.len();
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            counts[c] += 1;
            for (s, &v) in sums[c].iter_mut().zip(m.row(i).iter()) {
                *s += v;
            }
        }
        let mut remap = vec![usize::MAX; k];
        let mut kept = 0;
        for c in 0..k {
            if counts[c] > 0 {
                remap[c] = kept;
                let inv = 1.0 / counts[c] as f64;
                centroids[kept] = sums[c].iter().map(|&s| s * inv).collect();
                kept += 1;
            }
        }
        centroids.truncate(kept);
        for label in labels.iter_mut() {
            *label = remap[*label];
        }

        iterations += 1;
        let penalty = (kept as f64 - 1.0) * lambda_sq;
        let distortion: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                m.row(i)
                    .iter()
                    .zip(centroids[c].iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        trace.push(distortion + penalty);

        if prev_labels.as_deref() == Some(labels.as_slice()) {
            break;
        }
        prev_labels = Some(labels.clone());
    }

    let k = centroids.len();
    let mut centroid_matrix = Array2::zeros((k, d));
    for (c, centroid) in centroids.iter().enumerate() {
        for (j, &v) in centroid.iter().enumerate() {
            centroid_matrix[(c, j)] = v;
        }
    }
    let model = ClusterModel {
        centroids: centroid_matrix,
        algorithm: Algorithm::DPMeans,
        param: Param::Lambda(lambda),
        final_objective: trace.last().copied().unwrap_or(0.0),
        seed,
        iterations,
    };
    Ok((model, Assignment { labels }, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::sq_dist as dist2;
    use ndarray::array;

    fn random_matrix(n: usize, d: usize, seed: u64) -> StatMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StatMatrix::from_values(Array2::from_shape_fn((n, d), |_| rng.random::<f64>()), true)
    }

    #[test]
    fn huge_lambda_collapses_to_one_cluster() {
        let m = random_matrix(60, 4, 1);
        // Squared diameter of [0,1]^4 data is at most 4.
        let (model, assignment) = dpmeans_fit(&m, 2.1, 5, 300).unwrap();
        assert_eq!(model.k(), 1);
        assert!(assignment.labels.iter().all(|&l| l == 0));
        // Single centroid must be the global mean.
        for j in 0..4 {
            let mean = m.values.column(j).sum() / 60.0;
            assert!((model.centroids[(0, j)] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_lambda_gives_one_cluster_per_distinct_point() {
        let m = random_matrix(50, 3, 2);
        let lambda = 1e-6;
        let (model, _) = dpmeans_fit(&m, lambda, 9, 300).unwrap();
        assert_eq!(model.k(), 50);
        let expected = 49.0 * lambda * lambda;
        assert!(
            (model.final_objective - expected).abs() < 1e-18,
            "objective {} vs {}",
            model.final_objective,
            expected
        );
    }

    #[test]
    fn separated_blobs_are_recovered_with_mid_lambda() {
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        let centers = [[0.1, 0.1], [0.9, 0.1], [0.5, 0.9]];
        for (a, c) in centers.iter().enumerate() {
            for i in 0..30 {
                let dx = (i % 6) as f64 * 0.006;
                let dy = (i / 6) as f64 * 0.006;
                rows.push([c[0] + dx, c[1] + dy]);
                truth.push(a);
            }
        }
        let m = StatMatrix::from_values(
            Array2::from_shape_vec((90, 2), rows.iter().flatten().cloned().collect()).unwrap(),
            true,
        );
        let (model, assignment) = dpmeans_fit(&m, 0.3, 11, 300).unwrap();
        assert_eq!(model.k(), 3);
        assert!(
            (super::super::adjusted_rand_index(&assignment.labels, &truth) - 1.0).abs() < 1e-12
        );
    }

    #[test]
    fn objective_trace_is_non_increasing_across_outer_iterations() {
        for seed in 0..6 {
            let m = random_matrix(150, 5, 100 + seed);
            let (_, _, trace) = dpmeans_fit_traced(&m, 0.35, seed, 300).unwrap();
            for w in trace.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-9,
                    "objective increased: {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn converged_centroids_are_member_means() {
        let m = random_matrix(80, 3, 42);
        let (model, assignment) = dpmeans_fit(&m, 0.4, 3, 300).unwrap();
        for c in 0..model.k() {
            let members: Vec<usize> = (0..m.n())
                .filter(|&i| assignment.labels[i] == c)
                .collect();
            assert!(!members.is_empty(), "cluster {c} is empty");
            for j in 0..m.dim() {
                let mean: f64 =
                    members.iter().map(|&i| m.values[(i, j)]).sum::<f64>() / members.len() as f64;
                assert!((model.centroids[(c, j)] - mean).abs() < 1e-10);
            }
        }
        // Every member sits within lambda of its centroid; membership is a
        // local argmin given the spawn rule.
        for (i, &c) in assignment.labels.iter().enumerate() {
            let d = dist2(m.row(i), model.centroids.row(c));
            assert!(d.sqrt() <= 0.4 + 1e-9);
        }
    }

    #[test]
    fn rejects_empty_matrix_and_bad_lambda() {
        let empty = StatMatrix::from_values(Array2::zeros((0, 2)), true);
        assert!(dpmeans_fit(&empty, 1.0, 0, 10).is_err());
        let m = StatMatrix::from_values(array![[0.0, 0.0]], true);
        assert!(dpmeans_fit(&m, 0.0, 0, 10).is_err());
        assert!(dpmeans_fit(&m, -1.0, 0, 10).is_err());
        assert!(dpmeans_fit(&m, f64::NAN, 0, 10).is_err());
    }

    #[test]
    fn identical_seed_is_bitwise_reproducible() {
        let m = random_matrix(70, 4, 8);
        let (a, la) = dpmeans_fit(&m, 0.5, 77, 300).unwrap();
        let (b, lb) = dpmeans_fit(&m, 0.5, 77, 300).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }
}
