//! Outcome predictors: logistic regression (stochastic gradient ascent),
//! Gaussian discriminant analysis (closed-form MLE), and a soft-margin
//! linear SVM (sequential minimal optimization).

mod gda;
mod logistic;
mod svm;

pub use gda::{
    gda_fit, gda_log_likelihood, gda_log_likelihood_params, gda_predict, gda_predict_label,
    GdaModel, DEFAULT_RIDGE,
};
pub use logistic::{
    lr_batch_gradient, lr_log_likelihood, lr_log_likelihood_at, lr_predict, lr_predict_label,
    lr_train, LrModel, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE,
};
pub use svm::{
    svm_decision, svm_predict_label, svm_train, svm_train_traced, SupportVector, SvmModel,
    DEFAULT_MAX_PASSES, DEFAULT_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Any of the three trained outcome predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutcomeModel {
    Lr(LrModel),
    Gda(GdaModel),
    Svm(SvmModel),
}

impl OutcomeModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            OutcomeModel::Lr(_) => "lr",
            OutcomeModel::Gda(_) => "gda",
            OutcomeModel::Svm(_) => "svm",
        }
    }

    /// Predicted binary label for a 2k count-feature vector.
    pub fn predict_label(&self, x: &[f64]) -> Result<u8> {
        match self {
            OutcomeModel::Lr(m) => lr_predict_label(m, x),
            OutcomeModel::Gda(m) => gda_predict_label(m, x),
            OutcomeModel::Svm(m) => svm_predict_label(m, x),
        }
    }

    /// A real-valued score: win probability for LR and GDA, the margin
    /// (decision value) for the SVM.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        match self {
            OutcomeModel::Lr(m) => lr_predict(m, x),
            OutcomeModel::Gda(m) => {
                let (label, posterior) = gda_predict(m, x)?;
                Ok(if label == 1 { posterior } else { 1.0 - posterior })
            }
            OutcomeModel::Svm(m) => svm_decision(m, x),
        }
    }
}
