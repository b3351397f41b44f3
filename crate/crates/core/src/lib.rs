//! Binary frame hashing on the hypersphere.
//!
//! The crate models Hamming distance between sign-binarized embeddings as a
//! binomial variable whose per-bit flip probability is the angle between the
//! embeddings divided by π. Around that model it provides:
//!
//! * [`geometry`]: normalization, binarization, bit-flip probabilities,
//!   log-space binomial CDFs and Monte Carlo checks on the hypersphere.
//! * [`loss`]: frame-pair classes, class weight tables and the pairwise
//!   log-likelihood hashing loss with its analytic gradient.
//! * [`multi_index`]: exact r-neighbor lookup via substring tables, a
//!   brute-force reference and an on-disk image.
//! * [`pipeline`]: embedding ingestion, pair-rate evaluation, ROC sweeps,
//!   radius selection and scene matching.
//! * [`trainer`]: hierarchical batches, the learning-rate schedule, batch
//!   standardization and a toy linear hash model trained on synthetic shots.
//! * [`cli`]: the `chasm` command-line front end.

mod binio;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod loss;
pub mod multi_index;
pub mod pipeline;
pub mod trainer;

pub use error::{Error, Result};
