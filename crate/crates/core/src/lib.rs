//! Citation-graph document embeddings.
//!
//! Documents are embedded by factorizing a weighted context matrix whose
//! cells are shifted logs of expected visit counts of short random walks on
//! the undirected citation graph. Similar documents are then retrieved by
//! cosine similarity of the learned vectors.
//!
//! The pipeline is [`graph`] → [`context`] → [`trainer`] → [`similarity`],
//! with [`baselines`] and [`eval`] for comparison against co-occurrence
//! measures and gold-standard similarity.

pub mod baselines;
mod binio;
pub mod context;
pub mod error;
pub mod eval;
pub mod graph;
pub mod numfmt;
pub mod similarity;
pub mod synth;
pub mod trainer;

pub use context::{build_context_matrix, ContextConfig, ContextEntry, ContextMatrix, LambdaMode};
pub use error::{Error, Result};
pub use graph::{ingest_edges, CitationGraph, IdMap};
pub use similarity::{all_top_k, cosine, top_k, PaperVectors, RankingTable};
pub use trainer::{
    finalize, init_model, sgd_step, train, EmbeddingModel, LossTrace, Optimizer, TrainConfig,
};
