use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arity {0}: k must be at least 2")]
    InvalidArity(usize),
    #[error("cannot shrink a tree from {current} to {requested} steps")]
    CannotShrink { current: u64, requested: u64 },
    #[error("tree has no internal node yet")]
    NoInternalNode,
    #[error("pruning arity {pruned} out of range for arity {arity}")]
    InvalidPruneArity { arity: usize, pruned: usize },
    #[error("node {0} is not an internal node")]
    NotInternal(usize),
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("leaf rank {0} does not exist")]
    InvalidRank(u64),
    #[error("marginal index {p} exceeds step count {n}")]
    MarginalOutOfRange { p: u64, n: u64 },
    #[error("invalid leaf ranking: {0}")]
    LeafRanking(String),
    #[error("invalid subtree: {0}")]
    InvalidSubtree(String),
    #[error("point or measure outside the tree: {0}")]
    DomainMismatch(String),
    #[error("mass function violates m(x-) = m(x) >= m(x+) at vertex {vertex}")]
    MassFunction { vertex: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("density is singular at the boundary point {0:?}")]
    Singular(Vec<f64>),
    #[error("incompatible embeddings: {0}")]
    IncompatibleEmbedding(String),
    #[error("enumeration bound exceeded: {0}")]
    EnumerationBound(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
