use super::{BruteForceCap, ReceiverHypergraph, ReceiverMatching};
use crate::error::MatchingError;
use crate::graph::NodeId;

/// Exact maximum-weight hypergraph matching by branch and bound over
/// hyperedge subsets. Ties go to the lexicographically smallest sorted list
/// of source intermediates.
pub fn max_matching_bruteforce(
    h: &ReceiverHypergraph,
    cap: BruteForceCap,
) -> Result<ReceiverMatching, MatchingError> {
    if h.vertices.len() > cap.max_vertices
        || h.edges.len() > cap.max_edges
        || h.vertices.len() > 128
    {
        return Err(MatchingError::CapExceeded {
            receiver: h.receiver,
            vertices: h.vertices.len(),
            edges: h.edges.len(),
            max_vertices: cap.max_vertices,
            max_edges: cap.max_edges,
        });
    }
    if h.edges.is_empty() {
        return Ok(ReceiverMatching::default());
    }
    let masks: Vec<u128> = h
        .edges
        .iter()
        .map(|e| {
            e.vertices.iter().fold(0u128, |acc, v| {
                let i = h
                    .vertices
                    .binary_search(v)
                    .unwrap_or_else(|_| panic!("vertex {v} outside H_r"));
                acc | 1 << i
            })
        })
        .collect();
    let weights: Vec<u64> = h.edges.iter().map(|e| e.weight).collect();
    let mut suffix = vec![0u64; weights.len() + 1];
    for i in (0..weights.len()).rev() {
        suffix[i] = suffix[i + 1] + weights[i];
    }
    let mut search = Search {
        masks: &masks,
        weights: &weights,
        suffix: &suffix,
        current: Vec::new(),
        best_value: 0,
        best: Vec::new(),
    };
    search.run(0, 0, 0);
    let selected: Vec<NodeId> = search.best.iter().map(|&i| h.edges[i].source).collect();
    Ok(ReceiverMatching {
        selected,
        value: search.best_value,
    })
}

struct Search<'a> {
    masks: &'a [u128],
    weights: &'a [u64],
    suffix: &'a [u64],
    current: Vec<usize>,
    best_value: u64,
    best: Vec<usize>,
}

impl Search<'_> {
    fn run(&mut self, i: usize, used: u128, value: u64) {
        if value + self.suffix[i] < self.best_value {
            return;
        }
        if i == self.masks.len() {
            // edge indices follow source order, so index lists compare like source lists
            if value > self.best_value || (value == self.best_value && self.current < self.best) {
                self.best_value = value;
                self.best.clone_from(&self.current);
            }
            return;
        }
        if used & self.masks[i] == 0 {
            self.current.push(i);
            self.run(i + 1, used | self.masks[i], value + self.weights[i]);
            self.current.pop();
        }
        self.run(i + 1, used, value);
    }
}
