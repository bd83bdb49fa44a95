//! Versioned on-disk artifacts: cluster/outcome model files (JSON), plus the
//! CSV tables the CLI emits. Floats are written in Rust's shortest
//! round-trip form so identical runs produce identical bytes.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{ClusterModel, CvCurve};
use crate::error::{Error, Result};
use crate::eval::{FeatureSource, ModelKind, TrialRecord, TrialSummary};
use crate::features::{ClassTable, CompositionSample};
use crate::preprocess::ColumnRanges;

/// Bumped whenever any serialized layout changes.
pub const FORMAT_VERSION: u32 = 1;

/// A trained cluster model together with everything needed to map new
/// players onto its styles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArtifact {
    pub format_version: u32,
    pub model: ClusterModel,
    pub normalization: ColumnRanges,
    pub column_names: Vec<String>,
}

/// Style provenance embedded in every outcome model so predictions are
/// self-contained: the hash ties the model back to the cluster file, and the
/// centroids plus ranges allow mapping unseen players without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleProvenance {
    pub source: FeatureSource,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_model_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterArtifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_table: Option<ClassTable>,
}

/// A trained outcome predictor with its style provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeArtifact {
    pub format_version: u32,
    pub model: crate::classify::OutcomeModel,
    pub provenance: StyleProvenance,
}

/// Sidecar manifest written next to a samples CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesManifest {
    pub format_version: u32,
    pub k: usize,
    pub source: FeatureSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_model_sha256: Option<String>,
}

/// Ground-truth sidecar for synthetic corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub format_version: u32,
    pub archetype_labels: Vec<usize>,
    pub outcome_weights: Vec<f64>,
    pub outcome_intercept: f64,
    pub per_match_prob: Vec<f64>,
    pub bayes_rate: f64,
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn check_version(found: u32, what: &str) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "{what} has format version {found}, this build reads {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

pub fn save_cluster_artifact(path: &Path, artifact: &ClusterArtifact) -> Result<()> {
    save_json(path, artifact)
}

pub fn load_cluster_artifact(path: &Path) -> Result<ClusterArtifact> {
    let artifact: ClusterArtifact = load_json(path)?;
    check_version(artifact.format_version, "cluster model file")?;
    Ok(artifact)
}

pub fn save_outcome_artifact(path: &Path, artifact: &OutcomeArtifact) -> Result<()> {
    save_json(path, artifact)
}

pub fn load_outcome_artifact(path: &Path) -> Result<OutcomeArtifact> {
    let artifact: OutcomeArtifact = load_json(path)?;
    check_version(artifact.format_version, "outcome model file")?;
    Ok(artifact)
}

/// Hex SHA-256 of a file's bytes, used to tie outcome models to the cluster
/// model they were featurized with.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Writes a CV curve as `param,mean_score,chosen` rows.
pub fn write_cv_curve_csv<W: Write>(mut w: W, curve: &CvCurve) -> Result<()> {
    writeln!(w, "param,mean_score,chosen")?;
    for (i, (p, s)) in curve.grid.iter().zip(curve.mean_scores.iter()).enumerate() {
        writeln!(w, "{p},{s},{}", u8::from(i == curve.chosen_index))?;
    }
    Ok(())
}

/// Writes PCA scores with per-row cluster labels as
/// `pc1,..,pcC,cluster_label` rows.
pub fn write_pca_scores_csv<W: Write>(
    mut w: W,
    scores: &ndarray::Array2<f64>,
    labels: &[usize],
) -> Result<()> {
    if scores.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.nrows(),
            got: labels.len(),
        });
    }
    let c = scores.ncols();
    let header: Vec<String> = (1..=c).map(|i| format!("pc{i}")).collect();
    writeln!(w, "{},cluster_label", header.join(","))?;
    for (row, &label) in scores.rows().into_iter().zip(labels.iter()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{},{label}", cells.join(","))?;
    }
    Ok(())
}

/// Writes composition samples as `t1_s0..t1_s{k-1},t2_s0..,label` rows.
pub fn write_samples_csv<W: Write>(
    mut w: W,
    samples: &[CompositionSample],
    k: usize,
) -> Result<()> {
    let mut header = Vec::with_capacity(2 * k + 1);
    for team in 1..=2 {
        for s in 0..k {
            header.push(format!("t{team}_s{s}"));
        }
    }
    header.push("label".into());
    writeln!(w, "{}", header.join(","))?;
    for sample in samples {
        if sample.x.len() != 2 * k {
            return Err(Error::DimensionMismatch {
                expected: 2 * k,
                got: sample.x.len(),
            });
        }
        let cells: Vec<String> = sample.x.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{},{}", cells.join(","), sample.y)?;
    }
    Ok(())
}

/// Reads a samples CSV produced by [`write_samples_csv`].
pub fn read_samples_csv<R: BufRead>(r: R) -> Result<Vec<CompositionSample>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Validation("empty samples CSV".into()))??;
    let columns = header.split(',').count();
    if columns < 3 || (columns - 1) % 2 != 0 {
        return Err(Error::Validation(format!(
            "samples CSV header has {columns} columns, expected 2k + 1"
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("{} cells, expected {columns}", cells.len()),
            });
        }
        let mut x = Vec::with_capacity(columns - 1);
        for cell in &cells[..columns - 1] {
            x.push(cell.parse::<u32>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad count `{cell}`: {e}"),
            })?);
        }
        let y = cells[columns - 1].parse::<u8>().map_err(|e| Error::Parse {
            line: lineno,
            msg: format!("bad label: {e}"),
        })?;
        if y > 1 {
            return Err(Error::Validation(format!("line {lineno}: label must be 0 or 1")));
        }
        out.push(CompositionSample { x, y });
    }
    Ok(out)
}

/// Writes per-player cluster labels as `player_id,label` rows.
pub fn write_assignment_csv<W: Write>(
    mut w: W,
    row_ids: &[String],
    labels: &[usize],
) -> Result<()> {
    if row_ids.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: row_ids.len(),
            got: labels.len(),
        });
    }
    writeln!(w, "player_id,label")?;
    for (id, label) in row_ids.iter().zip(labels.iter()) {
        writeln!(w, "{id},{label}")?;
    }
    Ok(())
}

/// Writes a trial summary as per-trial rows plus a trailing `mean` row.
pub fn write_trial_summary_csv<W: Write>(mut w: W, summary: &TrialSummary) -> Result<()> {
    writeln!(w, "model,features,trial,seed,train_acc,test_acc,train_time_s")?;
    for (i, t) in summary.trials.iter().enumerate() {
        writeln!(
            w,
            "{},{},{i},{},{},{},{}",
            summary.model_kind.name(),
            summary.feature_source.name(),
            t.seed,
            t.train_acc,
            t.test_acc,
            t.train_time_s
        )?;
    }
    writeln!(
        w,
        "{},{},mean,,{},{},{}",
        summary.model_kind.name(),
        summary.feature_source.name(),
        summary.mean_train_acc,
        summary.mean_test_acc,
        summary.mean_train_time_s
    )?;
    Ok(())
}

fn parse_model_kind(s: &str) -> Result<ModelKind> {
    match s {
        "lr" => Ok(ModelKind::Lr),
        "gda" => Ok(ModelKind::Gda),
        "svm" => Ok(ModelKind::Svm),
        other => Err(Error::Validation(format!("unknown model kind `{other}`"))),
    }
}

fn parse_feature_source(s: &str) -> Result<FeatureSource> {
    match s {
        "kmeans" => Ok(FeatureSource::KMeans),
        "dpmeans" => Ok(FeatureSource::DPMeans),
        "official" => Ok(FeatureSource::Official),
        other => Err(Error::Validation(format!("unknown feature source `{other}`"))),
    }
}

/// Reads a trial summary CSV produced by [`write_trial_summary_csv`].
pub fn read_trial_summary_csv<R: BufRead>(r: R) -> Result<TrialSummary> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Validation("empty summary CSV".into()))??;
    if header != "model,features,trial,seed,train_acc,test_acc,train_time_s" {
        return Err(Error::Validation(format!("unexpected summary header `{header}`")));
    }
    let mut kind = None;
    let mut source = None;
    let mut trials = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("{} cells, expected 7", cells.len()),
            });
        }
        kind = Some(parse_model_kind(cells[0])?);
        source = Some(parse_feature_source(cells[1])?);
        if cells[2] == "mean" {
            continue; // trailing aggregate row; recomputed below
        }
        let parse_f = |cell: &str, what: &str| -> Result<f64> {
            cell.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad {what} `{cell}`: {e}"),
            })
        };
        trials.push(TrialRecord {
            seed: cells[3].parse::<u64>().map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("bad seed: {e}"),
            })?,
            train_acc: parse_f(cells[4], "train accuracy")?,
            test_acc: parse_f(cells[5], "test accuracy")?,
            train_time_s: parse_f(cells[6], "time")?,
        });
    }
    if trials.is_empty() {
        return Err(Error::Validation("summary CSV has no trial rows".into()));
    }
    let n = trials.len() as f64;
    Ok(TrialSummary {
        model_kind: kind.expect("at least one row"),
        feature_source: source.expect("at least one row"),
        mean_train_acc: trials.iter().map(|t| t.train_acc).sum::<f64>() / n,
        mean_test_acc: trials.iter().map(|t| t.test_acc).sum::<f64>() / n,
        mean_train_time_s: trials.iter().map(|t| t.train_time_s).sum::<f64>() / n,
        trials,
    })
}
