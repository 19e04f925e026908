use thiserror::Error;

use crate::graph::NodeId;

/// Structural problems with a graph or with a requested modification of one.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {node} does not exist")]
    UnknownNode { node: NodeId },
    #[error("node {node} is not an intermediate node")]
    NotIntermediate { node: NodeId },
    #[error("in-set of size {found} violates the in-degree bound d = {expected}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("single-layer graph cannot take intermediate {member} as an input")]
    LayerViolation { member: NodeId },
    #[error("inputs {first} and {second} have overlapping covers")]
    OverlappingCovers { first: NodeId, second: NodeId },
    #[error("node {node} appears twice in one in-set")]
    DuplicateMember { node: NodeId },
    #[error("cover of size {size} saves nothing; intermediates need at least two leaves")]
    CoverTooSmall { size: usize },
    #[error("intermediates {first} and {second} share the same cover")]
    DuplicateCover { first: NodeId, second: NodeId },
    #[error("intermediate {node} refers to a later intermediate {member}")]
    ForwardReference { node: NodeId, member: NodeId },
    #[error("intermediate {node} caches a cover that differs from its inputs")]
    StaleCover { node: NodeId },
    #[error("cycle among intermediate nodes")]
    Cycle,
    #[error("graphs disagree on node count ({left} vs {right})")]
    NodeCountMismatch { left: usize, right: usize },
}

/// Failures of the hypergraph matching layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchingError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("receiver {receiver}: hyperedge from intermediate {source_node} has {size} vertices, blossom needs 2")]
    HyperedgeTooLarge {
        receiver: NodeId,
        source_node: NodeId,
        size: usize,
    },
    #[error(
        "receiver {receiver} exceeds the brute-force cap ({vertices} vertices / {edges} hyperedges, cap {max_vertices} / {max_edges})"
    )]
    CapExceeded {
        receiver: NodeId,
        vertices: usize,
        edges: usize,
        max_vertices: usize,
        max_edges: usize,
    },
    #[error("receiver {receiver}: intermediate {source_node} is not a hyperedge of this receiver")]
    NotAHyperedge {
        receiver: NodeId,
        source_node: NodeId,
    },
    #[error("receiver {receiver}: selected hyperedges overlap, not a matching")]
    NotAMatching { receiver: NodeId },
    #[error("matching covers {found} receivers, instance has {expected}")]
    ReceiverCountMismatch { expected: usize, found: usize },
}

/// Failures of the optimizers and the exact oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid in-set sequence: {0}")]
    InvalidSequence(String),
    #[error("exhaustive search needs {required} completions, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("candidate value {candidate} exceeds optimal value {optimal}")]
    RatioOutOfRange { candidate: i64, optimal: i64 },
}

/// Failures of the aggregation executor.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("at least one round is required")]
    ZeroRounds,
    #[error("expected {expected} initial states, got {found}")]
    StateCount { expected: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Failures while reading or writing graphs.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("node {node}: stored cover {stored:?} does not match recomputed cover {computed:?}")]
    CoverMismatch {
        node: NodeId,
        stored: Vec<NodeId>,
        computed: Vec<NodeId>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Top-level error for the experiment harness and command-line tool.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Validation(String),
}
