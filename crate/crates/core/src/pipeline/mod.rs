//! Scene matching end to end: ingest frame embeddings, hash and index them,
//! measure per-class match rates over all frame pairs, pick a Hamming radius
//! from the ROC sweep, and turn per-frame lookups into matched time segments.

mod eval;
mod hashfile;
mod ingest;
pub mod report;
mod scene;
pub mod synthetic;

pub use eval::{
    evaluate_embedding_rates, evaluate_pair_rates, pair_distance_histogram, roc_sweep,
    select_radius, ClassRates, PairDistanceHistogram, RocPoint, DEFAULT_FP_PENALTY, DEFAULT_MIN_TP,
};
pub use hashfile::{read_hash_dataset, write_hash_dataset, HASH_MAGIC, HASH_VERSION};
pub use ingest::{hash_records, ingest_embeddings, write_embeddings, Dataset, EmbeddingRecord};
pub use scene::{match_scenes, SceneMatch, SceneParams};
