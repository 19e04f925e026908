//! Hierarchical aggregation for GNN computation graphs.

pub mod error;
pub mod exact;
pub mod executor;
pub mod experiments;
pub mod graph;
pub mod greedy;
pub mod heuristics;
pub mod ingest;
pub mod matching;

pub use error::{Error, ExecError, GraphError, IngestError, MatchingError, OptimizeError};
pub use graph::{
    build_computation_graph, CostParams, DirectedGraph, GnnGraph, HagGraph, Intermediate,
    LayerMode, NodeId, PartialHag,
};
