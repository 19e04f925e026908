//! Fast pair heuristics producing single-layer HAGs with `d = 2`.

use std::collections::HashSet;
use std::time::Instant;

use crate::graph::{GnnGraph, HagGraph, LayerMode, NodeId};
use crate::greedy::{HagResult, RunStats, TraceStep};
use crate::matching::is_sorted_subset;

/// Degree used to rank senders.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DegreeRanking {
    #[default]
    Out,
    In,
    Total,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeuristicOptions {
    pub ranking: DegreeRanking,
    /// Skip covers that would feed fewer than two receivers.
    pub stop_on_nonpositive: bool,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        Self {
            ranking: DegreeRanking::Out,
            stop_on_nonpositive: true,
        }
    }
}

/// Senders by decreasing degree, ties by increasing id.
pub fn rank_senders(g: &GnnGraph, ranking: DegreeRanking) -> Vec<NodeId> {
    let n = g.node_count() as NodeId;
    let degree = |v: NodeId| match ranking {
        DegreeRanking::Out => g.out_neighbors(v).len(),
        DegreeRanking::In => g.in_neighbors(v).len(),
        DegreeRanking::Total => g.out_neighbors(v).len() + g.in_neighbors(v).len(),
    };
    let mut order: Vec<NodeId> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(degree(v)), v));
    order
}

struct Builder {
    hag: HagGraph,
    trace: Vec<TraceStep>,
    covers: HashSet<[NodeId; 2]>,
    evaluated: u64,
}

impl Builder {
    fn new(g: &GnnGraph) -> Self {
        Self {
            hag: HagGraph::from_gnn(g, LayerMode::Single, Some(2)),
            trace: Vec::new(),
            covers: HashSet::new(),
            evaluated: 0,
        }
    }

    fn attachable(&mut self, pair: [NodeId; 2]) -> Vec<NodeId> {
        self.evaluated += 1;
        (0..self.hag.node_count() as NodeId)
            .filter(|&r| is_sorted_subset(&pair, self.hag.receiver_inputs(r)))
            .collect()
    }

    fn insert(&mut self, pair: [NodeId; 2], receivers: &[NodeId]) {
        let node = self
            .hag
            .add_intermediate(&pair)
            .expect("pairs of distinct leaves are valid intermediates");
        self.covers.insert(pair);
        for &r in receivers {
            let mut inputs: Vec<NodeId> = self
                .hag
                .receiver_inputs(r)
                .iter()
                .copied()
                .filter(|v| !pair.contains(v))
                .collect();
            inputs.push(node);
            self.hag
                .set_receiver_inputs(r, inputs)
                .expect("rerouting keeps inputs valid");
        }
        let marginal = receivers.len() as i64 - 1;
        let cumulative = self.trace.last().map_or(0, |s| s.cumulative) + marginal;
        self.trace.push(TraceStep {
            in_set: pair.to_vec(),
            node,
            receivers: receivers.len(),
            marginal,
            cumulative,
        });
    }

    fn finish(self, start: Instant) -> HagResult {
        HagResult {
            graph: self.hag,
            trace: self.trace,
            stats: RunStats {
                candidates_evaluated: self.evaluated,
                elapsed: start.elapsed(),
            },
        }
    }
}

fn sorted(a: NodeId, b: NodeId) -> [NodeId; 2] {
    [a.min(b), a.max(b)]
}

/// Pairs the top `2k` senders as `(v1, v2), (v3, v4), ...` and feeds each
/// pair to every receiver that still reads both, in pair order.
pub fn degree_heuristic(g: &GnnGraph, k: usize, opts: HeuristicOptions) -> HagResult {
    let start = Instant::now();
    let mut b = Builder::new(g);
    let senders: Vec<NodeId> = rank_senders(g, opts.ranking)
        .into_iter()
        .filter(|&v| !g.out_neighbors(v).is_empty())
        .take(2 * k)
        .collect();
    for chunk in senders.chunks_exact(2) {
        let pair = sorted(chunk[0], chunk[1]);
        let receivers = b.attachable(pair);
        if opts.stop_on_nonpositive && receivers.len() < 2 {
            continue;
        }
        b.insert(pair, &receivers);
    }
    b.finish(start)
}

/// For each of the top `k` senders `v`, pairs `v` with the in-neighbour `u`
/// of `v` that the most receivers still read together with `v`. Earlier
/// assignments are never revisited.
pub fn hub_heuristic(g: &GnnGraph, k: usize, opts: HeuristicOptions) -> HagResult {
    let start = Instant::now();
    let mut b = Builder::new(g);
    for v in rank_senders(g, opts.ranking).into_iter().take(k) {
        let mut best: Option<([NodeId; 2], Vec<NodeId>)> = None;
        for &u in g.in_neighbors(v) {
            if u == v || b.covers.contains(&sorted(u, v)) {
                continue;
            }
            let pair = sorted(u, v);
            let receivers = b.attachable(pair);
            if best
                .as_ref()
                .is_none_or(|(_, rs)| receivers.len() > rs.len())
            {
                best = Some((pair, receivers));
            }
        }
        if let Some((pair, receivers)) = best {
            if receivers.len() >= 2 || !opts.stop_on_nonpositive {
                b.insert(pair, &receivers);
            }
        }
    }
    b.finish(start)
}
