//! Principal component analysis via Jacobi eigendecomposition of the sample
//! covariance matrix. The feature dimension here is small (21), so a dense
//! symmetric eigensolver is plenty.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::StatMatrix;

/// A fitted projection onto the top principal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// Column means of the training matrix.
    pub mean: Array1<f64>,
    /// c x d matrix with one orthonormal component per row, ordered by
    /// decreasing explained variance. Each row is oriented so its
    /// largest-magnitude entry is positive.
    pub components: Array2<f64>,
    /// Sample variance captured by each component, non-increasing.
    pub explained_variance: Vec<f64>,
}

/// Fits a `c`-component PCA by eigendecomposition of the covariance matrix.
pub fn pca_fit(m: &StatMatrix, c: usize) -> Result<PcaProjection> {
    let n = m.n();
    let d = m.dim();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "PCA needs at least 2 rows, got {n}"
        )));
    }
    if c == 0 || c > d {
        return Err(Error::InvalidInput(format!(
            "component count must satisfy 1 <= c <= {d}, got {c}"
        )));
    }

    let mean = m
        .values
        .mean_axis(ndarray::Axis(0))
        .expect("n >= 2 rows");
    let centered = &m.values - &mean;
    let mut cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    // Force exact symmetry before the eigensolver.
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = avg;
            cov[(j, i)] = avg;
        }
    }

    let (eigvals, eigvecs) = jacobi_eigh(&cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigvals[b].partial_cmp(&eigvals[a]).unwrap());

    let mut components = Array2::zeros((c, d));
    let mut explained_variance = Vec::with_capacity(c);
    for (r, &col) in order.iter().take(c).enumerate() {
        explained_variance.push(eigvals[col].max(0.0));
        let mut row = components.row_mut(r);
        for j in 0..d {
            row[j] = eigvecs[(j, col)];
        }
        // Orient: the entry with the largest magnitude is positive.
        let mut arg = 0;
        for j in 1..d {
            if row[j].abs() > row[arg].abs() {
                arg = j;
            }
        }
        if row[arg] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }

    Ok(PcaProjection {
        mean,
        components,
        explained_variance,
    })
}

/// Projects rows onto the fitted components: `(x - mean) . components^T`.
pub fn pca_transform(p: &PcaProjection, m: &StatMatrix) -> Result<Array2<f64>> {
    if m.dim() != p.components.ncols() {
        return Err(Error::DimensionMismatch {
            expected: p.components.ncols(),
            got: m.dim(),
        });
    }
    let centered = &m.values - &p.mean;
    Ok(centered.dot(&p.components.t()))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns (eigenvalues, eigenvectors); eigenvector `i` is column `i`.
pub(crate) fn jacobi_eigh(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut a = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let total_sq: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off_sq = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sq += a[(p, q)] * a[(p, q)];
            }
        }
        if off_sq <= total_sq * 1e-30 {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                let tau = sin / (1.0 + cos);

                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = aip - sin * (aiq + tau * aip);
                        a[(p, i)] = a[(i, p)];
                        a[(i, q)] = aiq + sin * (aip - tau * aiq);
                        a[(q, i)] = a[(i, q)];
                    }
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip - sin * (viq + tau * vip);
                    v[(i, q)] = viq + sin * (vip - tau * viq);
                }
            }
        }
    }

    let eigvals = (0..n).map(|i| a[(i, i)]).collect();
    (eigvals, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(n: usize, d: usize, seed: u64) -> StatMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StatMatrix::from_values(Array2::from_shape_fn((n, d), |_| rng.random::<f64>()), true)
    }

    #[test]
    fn line_data_yields_line_direction() {
        // Points on the line y = 2x (plus a tiny symmetric wobble to keep
        // the covariance non-singular in direction 1).
        let rows: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = i as f64 / 39.0;
                [t, 2.0 * t]
            })
            .collect();
        let m = StatMatrix::from_values(
            Array2::from_shape_vec((40, 2), rows.iter().flatten().cloned().collect()).unwrap(),
            true,
        );
        let p = pca_fit(&m, 2).unwrap();
        let dir = [1.0 / 5.0_f64.sqrt(), 2.0 / 5.0_f64.sqrt()];
        let dot = p.components[(0, 0)] * dir[0] + p.components[(0, 1)] * dir[1];
        assert!((dot.abs() - 1.0).abs() < 1e-10, "component not parallel: {dot}");
        assert!(p.explained_variance[1].abs() < 1e-12);
    }

    #[test]
    fn transform_of_mean_row_is_zero() {
        let m = random_matrix(30, 5, 3);
        let p = pca_fit(&m, 3).unwrap();
        let mean = m.values.mean_axis(ndarray::Axis(0)).unwrap();
        let mean_matrix = StatMatrix::from_values(
            mean.clone().insert_axis(ndarray::Axis(0)),
            true,
        );
        let scores = pca_transform(&p, &mean_matrix).unwrap();
        for &s in scores.iter() {
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_transform_reconstructs_input() {
        let m = random_matrix(25, 6, 4);
        let p = pca_fit(&m, 6).unwrap();
        let scores = pca_transform(&p, &m).unwrap();
        let reconstructed = scores.dot(&p.components) + &p.mean;
        for (got, want) in reconstructed.iter().zip(m.values.iter()) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn components_are_orthonormal_and_variances_ordered() {
        let m = random_matrix(100, 9, 5);
        let p = pca_fit(&m, 9).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let dot: f64 = (0..9)
                    .map(|k| p.components[(i, k)] * p.components[(j, k)])
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "gram[{i}][{j}] = {dot}");
            }
        }
        for w in p.explained_variance.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        // Total captured variance never exceeds the data's total variance.
        let mean = m.values.mean_axis(ndarray::Axis(0)).unwrap();
        let centered = &m.values - &mean;
        let total: f64 = centered.iter().map(|x| x * x).sum::<f64>() / 99.0;
        let captured: f64 = p.explained_variance.iter().sum();
        assert!(captured <= total + 1e-8);
    }

    #[test]
    fn isotropic_data_has_flat_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values = Array2::from_shape_fn((10_000, 3), |_| rng.sample::<f64, _>(StandardNormal));
        let m = StatMatrix::from_values(values, true);
        let p = pca_fit(&m, 3).unwrap();
        let hi = p.explained_variance[0];
        let lo = p.explained_variance[2];
        assert!(hi / lo < 1.2, "spectrum ratio {} too far from 1", hi / lo);
    }

    #[test]
    fn rejects_bad_component_counts_and_tiny_matrices() {
        let m = random_matrix(10, 4, 6);
        assert!(pca_fit(&m, 5).is_err());
        assert!(pca_fit(&m, 0).is_err());
        let single = random_matrix(1, 4, 6);
        assert!(pca_fit(&single, 2).is_err());
    }

    #[test]
    fn matches_power_iteration_oracle_up_to_sign() {
        // Independent oracle: power iteration with deflation on the same
        // covariance matrix.
        let m = random_matrix(300, 21, 12);
        let p = pca_fit(&m, 3).unwrap();

        let mean = m.values.mean_axis(ndarray::Axis(0)).unwrap();
        let centered = &m.values - &mean;
        let mut cov = centered.t().dot(&centered) / 299.0;

        for r in 0..3 {
            let mut v = Array1::from_elem(21, 1.0 / (21f64).sqrt());
            v[0] += 1e-3;
            for _ in 0..20_000 {
                let w = cov.dot(&v);
                let norm = w.dot(&w).sqrt();
                v = w / norm;
            }
            let eig = v.dot(&cov.dot(&v));
            assert!(
                (eig - p.explained_variance[r]).abs() < 1e-8,
                "eigenvalue {r}: {eig} vs {}",
                p.explained_variance[r]
            );
            let dot: f64 = (0..21).map(|j| v[j] * p.components[(r, j)]).sum();
            assert!(
                (dot.abs() - 1.0).abs() < 1e-8,
                "component {r} misaligned: |dot| = {}",
                dot.abs()
            );
            // Deflate and continue with the next component.
            let outer = Array2::from_shape_fn((21, 21), |(i, j)| v[i] * v[j]);
            cov = cov - eig * &outer;
        }
    }

    #[test]
    fn jacobi_diagonalizes_known_matrix() {
        // Symmetric 2x2 with known eigenvalues 3 and 1.
        let a = ndarray::array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = jacobi_eigh(&a);
        let mut sorted = vals.clone();
        sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
        assert!((sorted[0] - 3.0).abs() < 1e-12);
        assert!((sorted[1] - 1.0).abs() < 1e-12);
        // A v = lambda v for each column.
        for c in 0..2 {
            for r in 0..2 {
                let av: f64 = (0..2).map(|k| a[(r, k)] * vecs[(k, c)]).sum();
                assert!((av - vals[c] * vecs[(r, c)]).abs() < 1e-12);
            }
        }
    }
}
