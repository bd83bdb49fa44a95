//! Lloyd's algorithm with random-observation initialization.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::preprocess::StatMatrix;

use super::{nearest_centroid, sq_dist, Algorithm, Assignment, ClusterModel, Param};

/// Fits k-means by Lloyd iteration.
///
/// Initial centroids are k distinct observations drawn from the seeded
/// generator. Iteration alternates nearest-centroid assignment (ties toward
/// the lowest index) and mean updates until the assignment stops changing or
/// `max_iter` is hit. A cluster that loses all members is reseeded at the
/// point farthest from its current nearest centroid.
pub fn kmeans_fit(
    m: &StatMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<(ClusterModel, Assignment)> {
    let (model, assignment, _) = kmeans_fit_traced(m, k, seed, max_iter)?;
    Ok((model, assignment))
}

/// As [`kmeans_fit`], also returning the objective after every update step.
pub fn kmeans_fit_traced(
    m: &StatMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<(ClusterModel, Assignment, Vec<f64>)> {
    let n = m.n();
    let d = m.dim();
    if n == 0 {
        return Err(Error::InvalidInput("empty observation matrix".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 1 <= k <= n ({k} vs n = {n})"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = rand::seq::index::sample(&mut rng, n, k);
    let mut centroids = Array2::zeros((k, d));
    for (c, i) in init.iter().enumerate() {
        centroids.row_mut(c).assign(&m.row(i));
    }

    let mut labels: Vec<usize> = vec![0; n];
    let mut prev_labels: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter {
        for (i, label) in labels.iter_mut().enumerate() {
            *label = nearest_centroid(m.row(i), &centroids).0;
        }
        if prev_labels.as_deref() == Some(labels.as_slice()) {
            break;
        }
        update_centroids(m, &labels, &mut centroids);
        iterations += 1;
        trace.push(assigned_objective(m, &labels, &centroids));
        prev_labels = Some(labels.clone());
    }

    let final_objective = trace.last().copied().unwrap_or(0.0);
    let model = ClusterModel {
        centroids,
        algorithm: Algorithm::KMeans,
        param: Param::K(k),
        final_objective,
        seed,
        iterations,
    };
    Ok((model, Assignment { labels }, trace))
}

/// Sum of squared distances of each point to its assigned centroid.
fn assigned_objective(m: &StatMatrix, labels: &[usize], centroids: &Array2<f64>) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(m.row(i), centroids.row(c)))
        .sum()
}

fn update_centroids(m: &StatMatrix, labels: &[usize], centroids: &mut Array2<f64>) {
    let k = centroids.nrows();
    let d = centroids.ncols();
    let mut sums = Array2::<f64>::zeros((k, d));
    let mut counts = vec![0usize; k];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        let row = m.row(i);
        let mut target = sums.row_mut(c);
        for (t, &v) in target.iter_mut().zip(row.iter()) {
            *t += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            for (t, &s) in centroids.row_mut(c).iter_mut().zip(sums.row(c).iter()) {
                *t = s * inv;
            }
        }
    }
    // Reseed each empty cluster at the point farthest from its current
    // nearest centroid, one at a time so reseeds see each other.
    for c in 0..k {
        if counts[c] == 0 {
            let mut far_i = 0;
            let mut far_d = -1.0;
            for i in 0..m.n() {
                let (_, d2) = nearest_centroid(m.row(i), centroids);
                if d2 > far_d {
                    far_d = d2;
                    far_i = i;
                }
            }
            centroids.row_mut(c).assign(&m.row(far_i));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn k_equals_n_gives_zero_distortion() {
        let m = StatMatrix::from_values(
            array![[0.0, 0.0], [0.3, 0.9], [1.0, 0.2], [0.6, 0.5]],
            true,
        );
        let (model, assignment) = kmeans_fit(&m, 4, 1, 100).unwrap();
        assert_eq!(model.k(), 4);
        assert!(model.final_objective.abs() < 1e-15);
        // Each point is its own centroid.
        let mut seen = assignment.labels.clone();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn k_one_recovers_global_mean() {
        let m = StatMatrix::from_values(array![[0.0, 0.4], [1.0, 0.6], [0.5, 0.5]], true);
        let (model, _) = kmeans_fit(&m, 1, 9, 100).unwrap();
        assert!((model.centroids[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((model.centroids[(0, 1)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn recovers_two_well_separated_blobs() {
        // Blob means are computable analytically from the fixture.
        let mut rows = Vec::new();
        let mut mean_a = [0.0, 0.0];
        let mut mean_b = [0.0, 0.0];
        for i in 0..25 {
            let (dx, dy) = ((i % 5) as f64 * 0.004, (i / 5) as f64 * 0.004);
            rows.push([0.1 + dx, 0.1 + dy]);
            mean_a[0] += 0.1 + dx;
            mean_a[1] += 0.1 + dy;
            rows.push([0.9 + dx, 0.9 + dy]);
            mean_b[0] += 0.9 + dx;
            mean_b[1] += 0.9 + dy;
        }
        mean_a = [mean_a[0] / 25.0, mean_a[1] / 25.0];
        mean_b = [mean_b[0] / 25.0, mean_b[1] / 25.0];
        let m = StatMatrix::from_values(
            Array2::from_shape_vec((50, 2), rows.iter().flatten().cloned().collect()).unwrap(),
            true,
        );
        let (model, _) = kmeans_fit(&m, 2, 3, 300).unwrap();
        let mut got: Vec<Vec<f64>> = model
            .centroids
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect();
        got.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!((got[0][0] - mean_a[0]).abs() < 1e-9);
        assert!((got[0][1] - mean_a[1]).abs() < 1e-9);
        assert!((got[1][0] - mean_b[0]).abs() < 1e-9);
        assert!((got[1][1] - mean_b[1]).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_k_and_empty_matrix() {
        let m = StatMatrix::from_values(array![[0.0, 0.0], [1.0, 1.0]], true);
        assert!(kmeans_fit(&m, 3, 0, 10).is_err());
        assert!(kmeans_fit(&m, 0, 0, 10).is_err());
        let empty = StatMatrix::from_values(Array2::zeros((0, 2)), true);
        assert!(kmeans_fit(&empty, 1, 0, 10).is_err());
    }

    #[test]
    fn objective_trace_is_non_increasing() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let values = Array2::from_shape_fn((200, 6), |_| rng.random::<f64>());
        let m = StatMatrix::from_values(values, true);
        for seed in 0..5 {
            let (_, _, trace) = kmeans_fit_traced(&m, 7, seed, 300).unwrap();
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
    fn converged_labels_are_argmin_and_centroids_are_means() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let values = Array2::from_shape_fn((120, 4), |_| rng.random::<f64>());
        let m = StatMatrix::from_values(values, true);
        let (model, assignment) = kmeans_fit(&m, 5, 2, 300).unwrap();

        // Brute-force assignment optimality with low-index tie-breaks.
        for i in 0..m.n() {
            let mut best = (0, f64::INFINITY);
            for c in 0..model.k() {
                let d = sq_dist(m.row(i), model.centroids.row(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            assert_eq!(assignment.labels[i], best.0);
        }

        // Centroid consistency.
        for c in 0..model.k() {
            let members: Vec<usize> = (0..m.n())
                .filter(|&i| assignment.labels[i] == c)
                .collect();
            assert!(!members.is_empty());
            for j in 0..m.dim() {
                let mean: f64 =
                    members.iter().map(|&i| m.values[(i, j)]).sum::<f64>() / members.len() as f64;
                assert!((model.centroids[(c, j)] - mean).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn identical_seed_gives_bitwise_identical_model() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let values = Array2::from_shape_fn((80, 3), |_| rng.random::<f64>());
        let m = StatMatrix::from_values(values, true);
        let (a, aa) = kmeans_fit(&m, 4, 1234, 300).unwrap();
        let (b, bb) = kmeans_fit(&m, 4, 1234, 300).unwrap();
        assert_eq!(a, b);
        assert_eq!(aa, bb);
    }
}
