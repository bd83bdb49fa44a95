//! Hold-out evaluation: randomized 90/10 splits, accuracy, the repeated
//! trial harness, and the paired baseline comparison.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{gda_fit, lr_train, svm_train, OutcomeModel};
use crate::error::{Error, Result};
use crate::features::CompositionSample;

/// Which classifier a summary refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Lr,
    Gda,
    Svm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Gda => "gda",
            ModelKind::Svm => "svm",
        }
    }
}

/// Which style encoding produced the feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSource {
    KMeans,
    DPMeans,
    Official,
}

impl FeatureSource {
    pub fn name(self) -> &'static str {
        match self {
            FeatureSource::KMeans => "kmeans",
            FeatureSource::DPMeans => "dpmeans",
            FeatureSource::Official => "official",
        }
    }
}

/// Hyperparameters for the trial harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr_learning_rate: f64,
    pub lr_epochs: usize,
    pub gda_ridge: f64,
    /// Candidate C values tried on a 10% validation split of the training
    /// portion; best validation accuracy wins, earlier entries on ties.
    pub svm_c_grid: Vec<f64>,
    pub svm_tol: f64,
    pub svm_max_passes: usize,
    pub test_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_learning_rate: crate::classify::DEFAULT_LEARNING_RATE,
            lr_epochs: crate::classify::DEFAULT_EPOCHS,
            gda_ridge: crate::classify::DEFAULT_RIDGE,
            svm_c_grid: vec![0.01, 0.1, 1.0, 10.0],
            svm_tol: crate::classify::DEFAULT_TOL,
            svm_max_passes: crate::classify::DEFAULT_MAX_PASSES,
            test_fraction: 0.1,
        }
    }
}

/// One train/test trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Wall time around training only; featurization and splitting excluded.
    pub train_time_s: f64,
}

/// Accuracy summary over repeated randomized trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub model_kind: ModelKind,
    pub feature_source: FeatureSource,
    pub trials: Vec<TrialRecord>,
    pub mean_train_acc: f64,
    pub mean_test_acc: f64,
    pub mean_train_time_s: f64,
}

/// Seeded shuffle followed by a split into (train, test).
///
/// The test side receives `round(n * test_fraction)` samples, clamped so
/// both sides stay nonempty.
pub fn holdout_split(
    samples: &[CompositionSample],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<CompositionSample>, Vec<CompositionSample>)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples to split, got {n}"
        )));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let test = order[..n_test].iter().map(|&i| samples[i].clone()).collect();
    let train = order[n_test..].iter().map(|&i| samples[i].clone()).collect();
    Ok((train, test))
}

/// As [`holdout_split`], re-drawing with follow-up seeds (up to 10 attempts)
/// until the training side contains both labels.
pub fn holdout_split_with_both_train_labels(
    samples: &[CompositionSample],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<CompositionSample>, Vec<CompositionSample>)> {
    for attempt in 0..10u64 {
        let s = seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (train, test) = holdout_split(samples, test_fraction, s)?;
        let pos = train.iter().filter(|s| s.y == 1).count();
        if pos > 0 && pos < train.len() {
            return Ok((train, test));
        }
    }
    Err(Error::Validation(
        "could not draw a training split containing both labels in 10 attempts".into(),
    ))
}

/// Fraction of samples whose predicted label equals the recorded one.
pub fn accuracy<F>(predict: F, samples: &[CompositionSample]) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<u8>,
{
    if samples.is_empty() {
        return Err(Error::InvalidInput("cannot score an empty sample set".into()));
    }
    let mut hits = 0usize;
    for s in samples {
        if predict(&s.features())? == s.y {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Trains one model of the requested kind, including the SVM's C selection
/// on an internal validation split.
pub fn train_model(
    kind: ModelKind,
    train: &[CompositionSample],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<OutcomeModel> {
    match kind {
        ModelKind::Lr => Ok(OutcomeModel::Lr(lr_train(
            train,
            cfg.lr_learning_rate,
            cfg.lr_epochs,
            seed,
        )?)),
        ModelKind::Gda => Ok(OutcomeModel::Gda(gda_fit(train, cfg.gda_ridge)?)),
        ModelKind::Svm => {
            if cfg.svm_c_grid.is_empty() {
                return Err(Error::InvalidInput("empty SVM C grid".into()));
            }
            let c = if cfg.svm_c_grid.len() == 1 {
                cfg.svm_c_grid[0]
            } else {
                let (sub_train, val) = holdout_split_with_both_train_labels(
                    train,
                    0.1,
                    seed ^ 0x5151_5151_5151_5151,
                )?;
                let mut best = (f64::NEG_INFINITY, cfg.svm_c_grid[0]);
                for &c in &cfg.svm_c_grid {
                    let model =
                        svm_train(&sub_train, c, cfg.svm_tol, cfg.svm_max_passes, seed)?;
                    let acc = accuracy(
                        |x| crate::classify::svm_predict_label(&model, x),
                        &val,
                    )?;
                    if acc > best.0 {
                        best = (acc, c);
                    }
                }
                best.1
            };
            Ok(OutcomeModel::Svm(svm_train(
                train,
                c,
                cfg.svm_tol,
                cfg.svm_max_passes,
                seed,
            )?))
        }
    }
}

/// Runs `n_trials` re-split/retrain/score rounds with seeds
/// `base_seed..base_seed + n_trials`.
pub fn run_trials(
    samples: &[CompositionSample],
    kind: ModelKind,
    source: FeatureSource,
    cfg: &TrainConfig,
    n_trials: usize,
    base_seed: u64,
) -> Result<TrialSummary> {
    if n_trials == 0 {
        return Err(Error::InvalidInput("n_trials must be >= 1".into()));
    }
    let mut trials = Vec::with_capacity(n_trials);
    for t in 0..n_trials {
        let seed = base_seed.wrapping_add(t as u64);
        let run = || -> Result<TrialRecord> {
            let (train, test) =
                holdout_split_with_both_train_labels(samples, cfg.test_fraction, seed)?;
            let started = Instant::now();
            let model = train_model(kind, &train, cfg, seed)?;
            let train_time_s = started.elapsed().as_secs_f64();
            let train_acc = accuracy(|x| model.predict_label(x), &train)?;
            let test_acc = accuracy(|x| model.predict_label(x), &test)?;
            Ok(TrialRecord {
                seed,
                train_acc,
                test_acc,
                train_time_s,
            })
        };
        trials.push(run().map_err(|e| Error::Trial {
            index: t,
            source: Box::new(e),
        })?);
    }
    let n = trials.len() as f64;
    Ok(TrialSummary {
        model_kind: kind,
        feature_source: source,
        mean_train_acc: trials.iter().map(|t| t.train_acc).sum::<f64>() / n,
        mean_test_acc: trials.iter().map(|t| t.test_acc).sum::<f64>() / n,
        mean_train_time_s: trials.iter().map(|t| t.train_time_s).sum::<f64>() / n,
        trials,
    })
}

/// Paired comparison of two trial summaries that used the same seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// (seed, ours - baseline) per trial, in trial order.
    pub per_seed_diffs: Vec<(u64, f64)>,
    pub mean_difference: f64,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

/// Pairs the test accuracies of `ours` against `baseline` by trial seed.
pub fn baseline_compare(
    ours: &TrialSummary,
    baseline: &TrialSummary,
) -> Result<ComparisonReport> {
    if ours.trials.len() != baseline.trials.len() {
        return Err(Error::InvalidInput(format!(
            "trial counts differ: {} vs {}",
            ours.trials.len(),
            baseline.trials.len()
        )));
    }
    let mut per_seed_diffs = Vec::with_capacity(ours.trials.len());
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (a, b) in ours.trials.iter().zip(baseline.trials.iter()) {
        if a.seed != b.seed {
            return Err(Error::Validation(format!(
                "summaries are not paired: seed {} vs {}",
                a.seed, b.seed
            )));
        }
        let diff = a.test_acc - b.test_acc;
        if diff > 0.0 {
            wins += 1;
        } else if diff < 0.0 {
            losses += 1;
        } else {
            ties += 1;
        }
        per_seed_diffs.push((a.seed, diff));
    }
    let mean_difference =
        per_seed_diffs.iter().map(|(_, d)| d).sum::<f64>() / per_seed_diffs.len() as f64;
    Ok(ComparisonReport {
        per_seed_diffs,
        mean_difference,
        wins,
        losses,
        ties,
    })
}
