//! Link prediction on heterogeneous graphs with relational graph
//! convolutions and factorization scorers.
//!
//! The library is organized bottom-up:
//!
//! * [`rng`] — a deterministic, platform-independent pseudo-random
//!   generator with derived streams, so every run is reproducible from a
//!   single seed.
//! * [`tensor`] — dense row-major `f64` matrices.
//! * [`autodiff`] — reverse-mode differentiation over a deliberately
//!   closed set of matrix operations, plus a finite-difference checker.
//! * [`graph`] — typed multi-relational graphs, their text format, and
//!   node-map sidecars that pin node-id assignment.
//! * [`model`] — relational graph convolution encoder, a relation
//!   embedder that averages an MLP over support pairs (so unseen or
//!   sparse relations get embeddings from their instances), and the
//!   DistMult / ComplEx / RotatE scorers.
//! * [`training`] — logistic loss over positive and sampled negative
//!   triples, type-respecting negative sampling, and full-batch Adam.
//! * [`eval`] — ranking protocol (pessimistic ranks, raw or filtered
//!   candidates) and MRR / MR / Hits@N metrics.
//! * [`datasets`] — few-shot and percentage splits, a label-refinement
//!   transform that specializes relations by endpoint label, a synthetic
//!   generator with a planted rule, and feature loading.
//! * [`repurpose`] — per-query top-k ranking with hit counting against a
//!   validation set, plus a seeded random control.
//! * [`checkpoint`] — a binary parameter snapshot format.
//! * [`config`] — flat `key = value` run configuration.
//! * [`exec`] — sequential or data-parallel execution of independent
//!   per-item work, identical results either way.

pub mod autodiff;
pub mod checkpoint;
pub mod config;
pub mod datasets;
pub mod eval;
pub mod exec;
pub mod graph;
pub mod model;
pub mod repurpose;
pub mod rng;
pub mod tensor;
pub mod training;
pub mod verify;

/// Version tag written into checkpoint headers; bumped when the layout
/// changes incompatibly.
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Crate-wide error type. Every fallible operation returns one of these
/// variants with enough context to act on the message alone.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two operands (or an operand and an expectation) disagree on shape.
    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    Dim {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    /// A caller violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A text input could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Graph-level inconsistency (duplicate edges, conflicting endpoint
    /// types, unknown relations, ...).
    #[error("schema error: {0}")]
    Schema(String),
    /// An id or index is outside its valid range.
    #[error("index error: {0}")]
    Index(String),
    /// A name could not be resolved against the loaded graph.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// Negative sampling could not find an admissible corruption.
    #[error("negative sampling exhausted after {attempts} attempts for {triple}")]
    SamplingExhausted { triple: String, attempts: usize },
    /// The training loss left the finite range.
    #[error("training diverged at epoch {epoch}: loss is not finite (learning rate {lr})")]
    Divergence { epoch: usize, lr: f64 },
    /// A label-refinement transform was asked to do something impossible.
    #[error("transform error: {0}")]
    Transform(String),
    /// Synthetic-generator spec cannot be satisfied.
    #[error("generator error: {0}")]
    Synth(String),
    /// Run-configuration text is invalid.
    #[error("config error: {0}")]
    Config(String),
    /// Checkpoint bytes are invalid or incompatible.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
