//! Play-style clustering and team-composition outcome prediction for
//! five-versus-five multiplayer matches.
//!
//! The pipeline runs in stages, each of which is also a CLI subcommand:
//!
//! 1. [`ingest`] — parse line-delimited player-statistics and match files
//!    into a validated corpus (or generate one with [`synth`]).
//! 2. [`preprocess`] — stack the 21 per-player statistics into a matrix and
//!    range-normalize every column onto [0, 1].
//! 3. [`cluster`] — learn play styles with k-means or DP-means, pick k or
//!    the threshold distance by 10-fold cross-validation, and export a
//!    3-component PCA projection for plotting.
//! 4. [`features`] — encode each match as two concatenated per-team
//!    style-count vectors with a win/loss label.
//! 5. [`classify`] — train logistic regression, Gaussian discriminant
//!    analysis, or a soft-margin SVM on the encoded matches.
//! 6. [`eval`] — repeated hold-out trials and the paired comparison against
//!    the official-class baseline encoding.

pub mod classify;
pub mod cluster;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod persist;
pub mod preprocess;
pub mod synth;

pub use error::{Error, Result};
