//! Soft-margin linear SVM trained by sequential minimal optimization.
//!
//! The dual of the C-slack formulation is optimized one pair of multipliers
//! at a time: the outer loop alternates full sweeps with sweeps over the
//! non-bound set, the partner index maximizes |E1 - E2| with ties (and the
//! fallback scan order) broken by a seeded permutation. The linear kernel
//! lets errors come from an incrementally maintained weight vector, so a
//! single error evaluation is O(d).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::CompositionSample;

/// Default KKT tolerance and pass cap.
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_PASSES: usize = 200;

/// Minimum accepted relative change in a multiplier.
const STEP_EPS: f64 = 1e-12;

/// One retained training point with a positive multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub index: usize,
    pub x: Vec<f64>,
    /// Label in {-1, +1}.
    pub y: f64,
    pub alpha: f64,
}

/// Trained SVM: all dual multipliers plus the support expansion needed to
/// evaluate decisions. The kernel is linear, fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Per-training-sample duals in [0, C].
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub support: Vec<SupportVector>,
    /// Whether the final sweep found every sample within the KKT tolerance.
    pub converged: bool,
    /// Largest KKT violation at termination (0 when fully satisfied).
    pub max_kkt_violation: f64,
    pub passes_run: usize,
    dim: usize,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Indices of training samples with a positive multiplier.
    pub fn support_indices(&self) -> Vec<usize> {
        self.support.iter().map(|sv| sv.index).collect()
    }

    /// Explicit weight vector of the collapsed linear kernel.
    pub fn weight_vector(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.dim];
        for sv in &self.support {
            let coeff = sv.alpha * sv.y;
            for (wj, xj) in w.iter_mut().zip(sv.x.iter()) {
                *wj += coeff * xj;
            }
        }
        w
    }
}

/// Decision value via the support expansion: sum_i alpha_i y_i <x_i, x> + b.
pub fn svm_decision(model: &SvmModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: x.len(),
        });
    }
    let mut sum = model.bias;
    for sv in &model.support {
        let dot: f64 = sv.x.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        sum += sv.alpha * sv.y * dot;
    }
    Ok(sum)
}

/// Predicted label: 1 iff the decision value is nonnegative.
pub fn svm_predict_label(model: &SvmModel, x: &[f64]) -> Result<u8> {
    Ok(u8::from(svm_decision(model, x)? >= 0.0))
}

/// Trains the soft-margin SVM; see [`svm_train_traced`] for the variant that
/// records the dual objective after every accepted pair update.
pub fn svm_train(
    samples: &[CompositionSample],
    c: f64,
    tol: f64,
    max_passes: usize,
    seed: u64,
) -> Result<SvmModel> {
    svm_train_traced(samples, c, tol, max_passes, seed, false).map(|(m, _)| m)
}

/// Trains and optionally records the dual objective `sum(alpha) - 0.5 |w|^2`
/// after each accepted pair update (recomputed from scratch, so the trace is
/// exact rather than drift-prone).
pub fn svm_train_traced(
    samples: &[CompositionSample],
    c: f64,
    tol: f64,
    max_passes: usize,
    seed: u64,
    record_trace: bool,
) -> Result<(SvmModel, Vec<f64>)> {
    let n = samples.len();
    let pos = samples.iter().filter(|s| s.y == 1).count();
    if n == 0 || pos == 0 || pos == n {
        return Err(Error::InvalidInput(
            "training data must contain both labels".into(),
        ));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidInput(format!("C must be positive, got {c}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let dim = samples[0].x.len();
    let x: Vec<Vec<f64>> = samples.iter().map(CompositionSample::features).collect();
    for row in &x {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
    }
    let y: Vec<f64> = samples
        .iter()
        .map(|s| if s.y == 1 { 1.0 } else { -1.0 })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tie_rank: Vec<usize> = (0..n).collect();
    {
        use rand::seq::SliceRandom;
        tie_rank.shuffle(&mut rng);
    }

    let mut state = Smo {
        x: &x,
        y: &y,
        c,
        tol,
        alphas: vec![0.0; n],
        w: vec![0.0; dim],
        b: 0.0,
        tie_rank,
        rng,
        trace: Vec::new(),
        record_trace,
    };

    let mut passes_run = 0;
    let mut examine_all = true;
    let mut converged = false;
    while passes_run < max_passes {
        passes_run += 1;
        let mut num_changed = 0usize;
        if examine_all {
            for i in 0..n {
                num_changed += usize::from(state.examine(i));
            }
            if num_changed == 0 {
                converged = true;
                break;
            }
            examine_all = false;
        } else {
            for i in 0..n {
                if state.is_free(i) {
                    num_changed += usize::from(state.examine(i));
                }
            }
            if num_changed == 0 {
                examine_all = true;
            }
        }
    }

    let max_kkt_violation = state.max_violation();
    let converged = converged && max_kkt_violation <= tol;

    let support: Vec<SupportVector> = (0..n)
        .filter(|&i| state.alphas[i] > 0.0)
        .map(|i| SupportVector {
            index: i,
            x: x[i].clone(),
            y: y[i],
            alpha: state.alphas[i],
        })
        .collect();

    let model = SvmModel {
        alphas: state.alphas,
        bias: state.b,
        c,
        support,
        converged,
        max_kkt_violation,
        passes_run,
        dim,
    };
    Ok((model, state.trace))
}

struct Smo<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    c: f64,
    tol: f64,
    alphas: Vec<f64>,
    w: Vec<f64>,
    b: f64,
    /// Seeded permutation ranks used for partner tie-breaks and scan offsets.
    tie_rank: Vec<usize>,
    rng: ChaCha8Rng,
    trace: Vec<f64>,
    record_trace: bool,
}

impl Smo<'_> {
    fn decision(&self, i: usize) -> f64 {
        let dot: f64 = self.w.iter().zip(self.x[i].iter()).map(|(a, b)| a * b).sum();
        dot + self.b
    }

    fn error(&self, i: usize) -> f64 {
        self.decision(i) - self.y[i]
    }

    fn is_free(&self, i: usize) -> bool {
        self.alphas[i] > 0.0 && self.alphas[i] < self.c
    }

    fn kernel(&self, i: usize, j: usize) -> f64 {
        self.x[i].iter().zip(self.x[j].iter()).map(|(a, b)| a * b).sum()
    }

    /// Largest KKT violation over all samples (0 if optimal).
    fn max_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.x.len() {
            let margin = self.y[i] * self.decision(i);
            let v = if self.alphas[i] <= 0.0 {
                1.0 - margin
            } else if self.alphas[i] >= self.c {
                margin - 1.0
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    fn examine(&mut self, i2: usize) -> bool {
        let e2 = self.error(i2);
        let r2 = e2 * self.y[i2];
        let violates = (r2 < -self.tol && self.alphas[i2] < self.c)
            || (r2 > self.tol && self.alphas[i2] > 0.0);
        if !violates {
            return false;
        }

        // Partner choice: the free sample maximizing |E1 - E2|, seeded ranks
        // breaking exact ties.
        let mut best: Option<(f64, usize, usize)> = None;
        for i1 in 0..self.x.len() {
            if i1 == i2 || !self.is_free(i1) {
                continue;
            }
            let gap = (self.error(i1) - e2).abs();
            let key = (gap, self.tie_rank[i1]);
            let better = match &best {
                None => true,
                Some((g, r, _)) => gap > *g || (gap == *g && key.1 < *r),
            };
            if better {
                best = Some((gap, self.tie_rank[i1], i1));
            }
        }
        if let Some((_, _, i1)) = best {
            if self.take_step(i1, i2, e2) {
                return true;
            }
        }

        // Fallback: scan the free set, then everything, from a seeded offset.
        let n = self.x.len();
        let start = self.rng.random_range(0..n);
        for k in 0..n {
            let i1 = (start + k) % n;
            if i1 != i2 && self.is_free(i1) && self.take_step(i1, i2, e2) {
                return true;
            }
        }
        let start = self.rng.random_range(0..n);
        for k in 0..n {
            let i1 = (start + k) % n;
            if i1 != i2 && !self.is_free(i1) && self.take_step(i1, i2, e2) {
                return true;
            }
        }
        false
    }

    fn take_step(&mut self, i1: usize, i2: usize, e2: f64) -> bool {
        debug_assert_ne!(i1, i2);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (alph1, alph2) = (self.alphas[i1], self.alphas[i2]);
        let e1 = self.error(i1);
        let s = y1 * y2;

        let (lo, hi) = if (s - 1.0).abs() < f64::EPSILON {
            ((alph1 + alph2 - self.c).max(0.0), (alph1 + alph2).min(self.c))
        } else {
            ((alph2 - alph1).max(0.0), (self.c + alph2 - alph1).min(self.c))
        };
        if lo >= hi {
            return false;
        }

        let k11 = self.kernel(i1, i1);
        let k12 = self.kernel(i1, i2);
        let k22 = self.kernel(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2 = if eta > 0.0 {
            (alph2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Flat direction (duplicate or collinear points): evaluate the
            // minimization objective at both interval ends and take the
            // better one.
            let f1 = y1 * (e1 + self.b) - alph1 * k11 - s * alph2 * k12;
            let f2 = y2 * (e2 + self.b) - s * alph1 * k12 - alph2 * k22;
            let l1 = alph1 + s * (alph2 - lo);
            let h1 = alph1 + s * (alph2 - hi);
            let lo_obj = l1 * f1 + lo * f2
                + 0.5 * l1 * l1 * k11
                + 0.5 * lo * lo * k22
                + s * lo * l1 * k12;
            let hi_obj = h1 * f1 + hi * f2
                + 0.5 * h1 * h1 * k11
                + 0.5 * hi * hi * k22
                + s * hi * h1 * k12;
            if lo_obj < hi_obj - STEP_EPS {
                lo
            } else if lo_obj > hi_obj + STEP_EPS {
                hi
            } else {
                alph2
            }
        };
        if a2 < lo {
            a2 = lo;
        } else if a2 > hi {
            a2 = hi;
        }
        if (a2 - alph2).abs() < STEP_EPS * (a2 + alph2 + STEP_EPS) {
            return false;
        }
        let a1 = alph1 + s * (alph2 - a2);

        let d1 = y1 * (a1 - alph1);
        let d2 = y2 * (a2 - alph2);
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        self.b = if a1 > 0.0 && a1 < self.c {
            b1
        } else if a2 > 0.0 && a2 < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };

        for ((wj, x1j), x2j) in self.w.iter_mut().zip(self.x[i1].iter()).zip(self.x[i2].iter()) {
            *wj += d1 * x1j + d2 * x2j;
        }
        self.alphas[i1] = a1;
        self.alphas[i2] = a2;

        if self.record_trace {
            self.trace.push(self.dual_objective());
        }
        true
    }

    /// Dual objective recomputed from scratch: sum(alpha) - 0.5 |w_exact|^2.
    fn dual_objective(&self) -> f64 {
        let d = self.w.len();
        let mut w = vec![0.0; d];
        for i in 0..self.x.len() {
            if self.alphas[i] > 0.0 {
                let coeff = self.alphas[i] * self.y[i];
                for (wj, xj) in w.iter_mut().zip(self.x[i].iter()) {
                    *wj += coeff * xj;
                }
            }
        }
        let norm_sq: f64 = w.iter().map(|v| v * v).sum();
        self.alphas.iter().sum::<f64>() - 0.5 * norm_sq
    }
}
