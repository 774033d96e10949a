//! Offensive-language classification toolkit.
//!
//! The crate covers every stage that runs on a CPU without pretrained
//! transformer weights:
//!
//! - [`normalize`]: ordered tweet clean-up (HTML, `@user` runs, contractions,
//!   hashtag segmentation, emoji replacement, accent folding).
//! - [`corpus`]: OLID / confidence-scored dataset ingestion, label
//!   thresholding, seeded train/validation splits and cost-sensitive
//!   class weights `w = 1 / (N * C_i)`.
//! - [`features`]: the `OFSFEAT1` frozen-feature container and id-aligned
//!   concatenation of several encoders' features.
//! - [`neural`]: a dense aggregation head (`concat -> 256 -> 128 -> 1|3`)
//!   with dropout, weighted cross-entropy, Adam and early stopping on
//!   validation macro F1.
//! - [`ensemble`]: soft voting and a logistic-regression stacker.
//! - [`baseline_nb`]: tf-idf + multinomial naive Bayes reference baseline.
//! - [`metrics`]: confusion matrices and macro F1.
//! - [`cli`]: the subcommand front end used by the `offlang` binary.
//!
//! Feature extraction from pretrained encoders happens outside this crate;
//! it only has to emit `OFSFEAT1` files (see [`features`]).

pub mod baseline_nb;
mod binio;
pub mod cli;
pub mod corpus;
pub mod ensemble;
pub mod features;
pub mod metrics;
pub mod neural;
pub mod normalize;
pub mod types;

pub use binio::CheckpointError;
pub use types::{ExampleId, Label, Subtask, Tweet};

/// The crate version string, recorded in reproducibility lines.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
