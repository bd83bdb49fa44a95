//! Observation-matrix construction and per-column range normalization.
//!
//! Statistics live on wildly different scales (damage counts vs kill
//! streaks), so every column is mapped onto [0, 1] by its observed range
//! before any distance computation. The ranges are kept with the matrix so
//! the identical mapping can be replayed on unseen players at prediction
//! time.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PlayerStatRecord;

/// Per-column (min, max) pairs captured by normalization.
pub type ColumnRanges = Vec<(f64, f64)>;

/// An n x d observation matrix with column metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatMatrix {
    pub values: Array2<f64>,
    pub column_names: Vec<String>,
    /// Present iff the matrix has been range-normalized; entry `j` holds the
    /// (min, max) of source column `j`.
    pub normalization: Option<ColumnRanges>,
    pub row_ids: Vec<String>,
}

impl StatMatrix {
    /// Number of observations (rows).
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Feature dimension (columns).
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization.is_some()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Builds a matrix directly from raw values (used by tests and synthetic
    /// fixtures that bypass the player-record path).
    pub fn from_values(values: Array2<f64>, normalized: bool) -> StatMatrix {
        let d = values.ncols();
        let n = values.nrows();
        StatMatrix {
            values,
            column_names: (0..d).map(|j| format!("f{j}")).collect(),
            normalization: normalized.then(|| vec![(0.0, 1.0); d]),
            row_ids: (0..n).map(|i| format!("r{i}")).collect(),
        }
    }
}

/// Stacks player records into an un-normalized matrix, one row per player
/// in input order.
pub fn build_stat_matrix(players: &[PlayerStatRecord]) -> Result<StatMatrix> {
    if players.is_empty() {
        return Err(Error::InvalidInput("empty player list".into()));
    }
    let d = players[0].stats.len();
    let mut values = Array2::zeros((players.len(), d));
    for (i, p) in players.iter().enumerate() {
        if p.stats.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.stats.len(),
            });
        }
        for (j, &v) in p.stats.iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    Ok(StatMatrix {
        values,
        column_names: crate::ingest::STAT_NAMES.iter().map(|s| s.to_string()).collect(),
        normalization: None,
        row_ids: players.iter().map(|p| p.player_id.clone()).collect(),
    })
}

/// Maps every column onto [0, 1] by its observed (min, max).
///
/// Constant columns map to all zeros; the observed ranges are stored on the
/// result so they can be replayed with [`apply_normalization`].
pub fn min_max_normalize(m: &StatMatrix) -> Result<StatMatrix> {
    if m.is_normalized() {
        return Err(Error::InvalidInput("matrix is already normalized".into()));
    }
    let mut ranges = Vec::with_capacity(m.dim());
    for j in 0..m.dim() {
        let col = m.values.column(j);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in col.iter() {
            if !v.is_finite() {
                return Err(Error::Numerical(format!(
                    "column `{}` contains a non-finite value",
                    m.column_names[j]
                )));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        ranges.push((lo, hi));
    }
    let mut out = apply_normalization(m, &ranges)?;
    out.normalization = Some(ranges);
    Ok(out)
}

/// Replays stored per-column ranges onto a matrix, clamping into [0, 1].
///
/// Values at or below the stored min map to 0, at or above the max to 1;
/// degenerate (min == max) columns map to 0 everywhere.
pub fn apply_normalization(m: &StatMatrix, ranges: &ColumnRanges) -> Result<StatMatrix> {
    if ranges.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: ranges.len(),
        });
    }
    let mut values = m.values.clone();
    for (j, &(lo, hi)) in ranges.iter().enumerate() {
        let span = hi - lo;
        for v in values.column_mut(j).iter_mut() {
            *v = if span > 0.0 {
                ((*v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
    Ok(StatMatrix {
        values,
        column_names: m.column_names.clone(),
        normalization: Some(ranges.clone()),
        row_ids: m.row_ids.clone(),
    })
}

/// Normalizes raw stat values for a single player using stored ranges.
pub fn normalize_row(stats: &[f64], ranges: &ColumnRanges) -> Result<Vec<f64>> {
    if stats.len() != ranges.len() {
        return Err(Error::DimensionMismatch {
            expected: ranges.len(),
            got: stats.len(),
        });
    }
    Ok(stats
        .iter()
        .zip(ranges.iter())
        .map(|(&v, &(lo, hi))| {
            let span = hi - lo;
            if span > 0.0 {
                ((v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect())
}
