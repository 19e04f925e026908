//! Per-receiver hypergraphs and their matchings.
//!
//! Given a partial HAG (intermediates with inputs but no receiver edges), every
//! receiver `r` gets a hypergraph on its requested senders whose hyperedges are
//! the covers of intermediates fitting inside that request. A matching picks,
//! per receiver, intermediates with pairwise disjoint covers; [`phi`] turns it
//! into a completed HAG and [`phi_inverse`] reads it back. The value of the
//! completed graph is the matching weight minus the fixed input cost of the
//! partial graph, so a maximum matching gives the best completion.

pub mod blossom;
mod brute_force;
mod completion;

pub use brute_force::max_matching_bruteforce;
pub use completion::{optimal_completion, phi, phi_inverse};

use crate::error::MatchingError;
pub use crate::graph::PartialHag;
use crate::graph::{GnnGraph, NodeId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hyperedge {
    /// Intermediate whose cover this is.
    pub source: NodeId,
    pub vertices: Vec<NodeId>,
    pub weight: u64,
}

/// The hypergraph `H_r` of one receiver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceiverHypergraph {
    pub receiver: NodeId,
    /// Senders requested by the receiver, ascending.
    pub vertices: Vec<NodeId>,
    /// Hyperedges in ascending source order.
    pub edges: Vec<Hyperedge>,
}

impl ReceiverHypergraph {
    pub fn edge(&self, source: NodeId) -> Option<&Hyperedge> {
        self.edges
            .binary_search_by_key(&source, |e| e.source)
            .ok()
            .map(|i| &self.edges[i])
    }
}

/// Disjoint union of all receiver hypergraphs, indexed by receiver id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypergraphInstance {
    receivers: Vec<ReceiverHypergraph>,
}

impl HypergraphInstance {
    pub fn receivers(&self) -> &[ReceiverHypergraph] {
        &self.receivers
    }

    pub fn receiver(&self, r: NodeId) -> &ReceiverHypergraph {
        &self.receivers[r as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.receivers.iter().map(|h| h.edges.len()).sum()
    }
}

/// Matching restricted to one receiver.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReceiverMatching {
    /// Selected intermediates, ascending.
    pub selected: Vec<NodeId>,
    pub value: u64,
}

/// A matching of the whole instance: one [`ReceiverMatching`] per receiver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    per_receiver: Vec<Vec<NodeId>>,
    value: u64,
}

impl Matching {
    /// Validates `per_receiver` against `instance` and computes its weight.
    pub fn new(
        instance: &HypergraphInstance,
        per_receiver: Vec<Vec<NodeId>>,
    ) -> Result<Self, MatchingError> {
        if per_receiver.len() != instance.receivers.len() {
            return Err(MatchingError::ReceiverCountMismatch {
                expected: instance.receivers.len(),
                found: per_receiver.len(),
            });
        }
        let mut per_receiver = per_receiver;
        let mut value = 0;
        for (h, selected) in instance.receivers.iter().zip(per_receiver.iter_mut()) {
            selected.sort_unstable();
            let mut used: Vec<NodeId> = Vec::new();
            for &s in selected.iter() {
                let e = h.edge(s).ok_or(MatchingError::NotAHyperedge {
                    receiver: h.receiver,
                    source_node: s,
                })?;
                used.extend_from_slice(&e.vertices);
                value += e.weight;
            }
            let before = used.len();
            used.sort_unstable();
            used.dedup();
            if used.len() != before {
                return Err(MatchingError::NotAMatching {
                    receiver: h.receiver,
                });
            }
        }
        Ok(Self {
            per_receiver,
            value,
        })
    }

    pub fn empty(instance: &HypergraphInstance) -> Self {
        Self {
            per_receiver: vec![Vec::new(); instance.receivers.len()],
            value: 0,
        }
    }

    pub(crate) fn from_receivers(parts: Vec<ReceiverMatching>) -> Self {
        let value = parts.iter().map(|p| p.value).sum();
        Self {
            per_receiver: parts.into_iter().map(|p| p.selected).collect(),
            value,
        }
    }

    pub(crate) fn from_parts_unchecked(per_receiver: Vec<Vec<NodeId>>, value: u64) -> Self {
        Self {
            per_receiver,
            value,
        }
    }

    /// Intermediates selected at receiver `r`, ascending.
    pub fn selected(&self, r: NodeId) -> &[NodeId] {
        &self.per_receiver[r as usize]
    }

    pub fn per_receiver(&self) -> &[Vec<NodeId>] {
        &self.per_receiver
    }

    /// Total weight of the selected hyperedges.
    pub fn value(&self) -> u64 {
        self.value
    }

    /// Number of selected hyperedges over all receivers.
    pub fn size(&self) -> usize {
        self.per_receiver.iter().map(Vec::len).sum()
    }
}

/// Limits on per-receiver exhaustive search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BruteForceCap {
    pub max_vertices: usize,
    pub max_edges: usize,
}

impl Default for BruteForceCap {
    fn default() -> Self {
        Self {
            max_vertices: 20,
            max_edges: 22,
        }
    }
}

/// How to solve each receiver's matching problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompletionMode {
    /// Maximum-cardinality blossom; every cover must have exactly two leaves.
    Blossom,
    /// Exhaustive branch and bound within the cap.
    BruteForce(BruteForceCap),
    /// Blossom when every hyperedge of the receiver has two vertices,
    /// brute force otherwise.
    Auto(BruteForceCap),
}

impl Default for CompletionMode {
    fn default() -> Self {
        CompletionMode::Auto(BruteForceCap::default())
    }
}

pub(crate) fn is_sorted_subset(small: &[NodeId], big: &[NodeId]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.by_ref().any(|y| y == x))
}

/// Builds `H_r` for receiver `r` requesting `requested` (ascending).
pub fn receiver_hypergraph(p: &PartialHag, r: NodeId, requested: &[NodeId]) -> ReceiverHypergraph {
    let edges = p
        .intermediates()
        .iter()
        .filter(|m| is_sorted_subset(m.cover(), requested))
        .map(|m| Hyperedge {
            source: m.id(),
            vertices: m.cover().to_vec(),
            weight: m.cover().len() as u64 - 1,
        })
        .collect();
    ReceiverHypergraph {
        receiver: r,
        vertices: requested.to_vec(),
        edges,
    }
}

pub fn build_matching_instance(
    p: &PartialHag,
    g: &GnnGraph,
) -> Result<HypergraphInstance, MatchingError> {
    check_same_leaves(p, g)?;
    let receivers = (0..g.node_count() as NodeId)
        .map(|r| receiver_hypergraph(p, r, g.in_neighbors(r)))
        .collect();
    Ok(HypergraphInstance { receivers })
}

pub(crate) fn check_same_leaves(p: &PartialHag, g: &GnnGraph) -> Result<(), MatchingError> {
    if p.node_count() != g.node_count() {
        return Err(crate::error::GraphError::NodeCountMismatch {
            left: p.node_count(),
            right: g.node_count(),
        }
        .into());
    }
    Ok(())
}

/// Maximum matching of a graph-shaped `H_r` (all hyperedges of size 2).
///
/// Uniform weights make this a maximum-cardinality problem. Among maximum
/// matchings the one whose sorted list of source intermediates is
/// lexicographically smallest is returned.
pub fn max_matching_blossom(h: &ReceiverHypergraph) -> Result<ReceiverMatching, MatchingError> {
    if let Some(e) = h.edges.iter().find(|e| e.vertices.len() != 2) {
        return Err(MatchingError::HyperedgeTooLarge {
            receiver: h.receiver,
            source_node: e.source,
            size: e.vertices.len(),
        });
    }
    if h.edges.is_empty() {
        return Ok(ReceiverMatching::default());
    }
    let local = |v: NodeId| {
        h.vertices
            .binary_search(&v)
            .unwrap_or_else(|_| panic!("vertex {v} outside H_r"))
    };
    let pairs: Vec<(usize, usize)> = h
        .edges
        .iter()
        .map(|e| (local(e.vertices[0]), local(e.vertices[1])))
        .collect();
    let n = h.vertices.len();
    let target = blossom::matching_size(n, &pairs);

    // pick the smallest feasible source at each position
    let mut used = vec![false; n];
    let mut selected = Vec::with_capacity(target);
    let mut value = 0;
    for (i, &(a, b)) in pairs.iter().enumerate() {
        if selected.len() == target {
            break;
        }
        if used[a] || used[b] {
            continue;
        }
        used[a] = true;
        used[b] = true;
        let rest: Vec<(usize, usize)> = pairs[i + 1..]
            .iter()
            .copied()
            .filter(|&(x, y)| !used[x] && !used[y])
            .collect();
        if selected.len() + 1 + blossom::matching_size(n, &rest) == target {
            selected.push(h.edges[i].source);
            value += h.edges[i].weight;
        } else {
            used[a] = false;
            used[b] = false;
        }
    }
    debug_assert_eq!(selected.len(), target);
    Ok(ReceiverMatching { selected, value })
}

/// Solves one receiver under `mode`.
pub fn solve_receiver(
    h: &ReceiverHypergraph,
    mode: CompletionMode,
) -> Result<ReceiverMatching, MatchingError> {
    match mode {
        CompletionMode::Blossom => max_matching_blossom(h),
        CompletionMode::BruteForce(cap) => max_matching_bruteforce(h, cap),
        CompletionMode::Auto(cap) => {
            if h.edges.iter().all(|e| e.vertices.len() == 2) {
                max_matching_blossom(h)
            } else {
                max_matching_bruteforce(h, cap)
            }
        }
    }
}

/// Maximum matching of the whole instance, receiver by receiver.
pub fn solve_instance(
    h: &HypergraphInstance,
    mode: CompletionMode,
) -> Result<Matching, MatchingError> {
    let parts = h
        .receivers
        .iter()
        .map(|hr| solve_receiver(hr, mode))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Matching::from_receivers(parts))
}

/// Classical greedy hypergraph matching: per receiver, scan `order` and keep
/// each hyperedge disjoint from those already kept. Sources missing from a
/// receiver's hypergraph are skipped.
pub fn greedy_matching(h: &HypergraphInstance, order: &[NodeId]) -> Matching {
    let mut value = 0;
    let per_receiver = h
        .receivers
        .iter()
        .map(|hr| {
            let mut used: Vec<NodeId> = Vec::new();
            let mut selected = Vec::new();
            for &v in order {
                let Some(e) = hr.edge(v) else { continue };
                if selected.contains(&v) || e.vertices.iter().any(|x| used.contains(x)) {
                    continue;
                }
                used.extend_from_slice(&e.vertices);
                selected.push(v);
                value += e.weight;
            }
            selected.sort_unstable();
            selected
        })
        .collect();
    Matching::from_parts_unchecked(per_receiver, value)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn hypergraph(vertices: &[NodeId], edges: &[(NodeId, &[NodeId])]) -> ReceiverHypergraph {
        ReceiverHypergraph {
            receiver: 0,
            vertices: vertices.to_vec(),
            edges: edges
                .iter()
                .map(|&(source, vs)| Hyperedge {
                    source,
                    vertices: vs.to_vec(),
                    weight: vs.len() as u64 - 1,
                })
                .collect(),
        }
    }

    /// Exhaustive maximum weight over all edge subsets, independent of the
    /// branch-and-bound solver.
    pub fn enumerate_best(h: &ReceiverHypergraph) -> (u64, Vec<NodeId>) {
        let m = h.edges.len();
        let mut best: (u64, Vec<NodeId>) = (0, Vec::new());
        for mask in 0u64..(1 << m) {
            let mut used = Vec::new();
            let mut ok = true;
            let mut value = 0;
            let mut sel = Vec::new();
            for (i, e) in h.edges.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    if e.vertices.iter().any(|v| used.contains(v)) {
                        ok = false;
                        break;
                    }
                    used.extend_from_slice(&e.vertices);
                    value += e.weight;
                    sel.push(e.source);
                }
            }
            if ok && (value > best.0 || (value == best.0 && sel < best.1)) {
                best = (value, sel);
            }
        }
        best
    }
}
