//! Reference implementations used as oracles by the integration tests.
#![allow(dead_code)]

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hag_core::{DirectedGraph, GnnGraph, HagGraph, NodeId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Directed graph with each ordered pair `u != v` kept with probability `p`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> DirectedGraph {
    let mut edges = Vec::new();
    for u in 0..n as NodeId {
        for v in 0..n as NodeId {
            if u != v && rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    DirectedGraph::new(n, edges).unwrap()
}

/// Aggregation operations of a plain GNN round: `indeg − 1` per receiver.
pub fn gnn_ops(g: &GnnGraph) -> i64 {
    (0..g.node_count() as NodeId)
        .map(|r| (g.in_neighbors(r).len() as i64 - 1).max(0))
        .sum()
}

/// Aggregation operations of a HAG round, counted from its edges.
pub fn hag_ops(h: &HagGraph) -> i64 {
    let mut indeg = std::collections::HashMap::<NodeId, i64>::new();
    for (_, v) in h
        .edges_left_to_mid()
        .into_iter()
        .chain(h.edges_mid_to_mid())
        .chain(h.edges_mid_to_right())
        .chain(h.edges_left_to_right())
    {
        *indeg.entry(v).or_default() += 1;
    }
    indeg.values().map(|&c| (c - 1).max(0)).sum()
}

/// Value as operations saved against the plain graph.
pub fn saved_ops(g: &GnnGraph, h: &HagGraph) -> i64 {
    gnn_ops(g) - hag_ops(h)
}

fn subset(small: &[NodeId], big: &[NodeId]) -> bool {
    small.iter().all(|v| big.contains(v))
}

/// Most pairwise-disjoint members of `sets` inside `inputs`.
pub fn best_packing(inputs: &[NodeId], sets: &[Vec<NodeId>]) -> usize {
    let fits: Vec<&Vec<NodeId>> = sets.iter().filter(|s| subset(s, inputs)).collect();
    fn go(rest: &[&Vec<NodeId>], used: &mut Vec<NodeId>) -> usize {
        let Some((first, tail)) = rest.split_first() else {
            return 0;
        };
        let skip = go(tail, used);
        if first.iter().any(|v| used.contains(v)) {
            return skip;
        }
        let before = used.len();
        used.extend(first.iter());
        let take = 1 + go(tail, used);
        used.truncate(before);
        skip.max(take)
    }
    go(&fits, &mut Vec::new())
}

/// Every leaf `d`-set read together by at least one receiver.
pub fn co_occurring(g: &GnnGraph, d: usize) -> Vec<Vec<NodeId>> {
    (0..g.node_count() as NodeId)
        .flat_map(|r| {
            g.in_neighbors(r)
                .iter()
                .copied()
                .combinations(d)
                .collect::<Vec<_>>()
        })
        .sorted()
        .dedup()
        .collect()
}

/// `f(S) = (d − 1)·Σ_r best packing of S into Γ_in(r)`.
pub fn oracle_f(g: &GnnGraph, sets: &[Vec<NodeId>], d: usize) -> i64 {
    let total: usize = (0..g.node_count() as NodeId)
        .map(|r| best_packing(g.in_neighbors(r), sets))
        .sum();
    (d as i64 - 1) * total as i64
}

/// Completion value of `S`: `f(S) − (d − 1)|S|`.
pub fn oracle_completion(g: &GnnGraph, sets: &[Vec<NodeId>], d: usize) -> i64 {
    oracle_f(g, sets, d) - (d as i64 - 1) * sets.len() as i64
}

/// `h`: feed the sets in order, each taking every receiver whose remaining
/// leaves still contain it.
pub fn oracle_h(g: &GnnGraph, order: &[Vec<NodeId>], d: usize) -> i64 {
    let mut remaining: Vec<Vec<NodeId>> = (0..g.node_count() as NodeId)
        .map(|r| g.in_neighbors(r).to_vec())
        .collect();
    let mut uses = 0i64;
    for s in order {
        for rem in remaining.iter_mut() {
            if subset(s, rem) {
                rem.retain(|v| !s.contains(v));
                uses += 1;
            }
        }
    }
    (d as i64 - 1) * uses
}

/// Best single-layer value over families of at most `k` co-occurring
/// `d`-sets.
pub fn oracle_opt_value(g: &GnnGraph, k: usize, d: usize) -> i64 {
    let pool = co_occurring(g, d);
    (0..=k.min(pool.len()))
        .flat_map(|size| pool.iter().cloned().combinations(size))
        .map(|fam| oracle_completion(g, &fam, d))
        .max()
        .unwrap_or(0)
}

/// Best `value + |M|(d − 1)` over families of at most `k` `d`-sets.
pub fn oracle_opt_tilde(g: &GnnGraph, k: usize, d: usize) -> i64 {
    let pool = co_occurring(g, d);
    // monotone objective: only the largest families matter
    pool.iter()
        .cloned()
        .combinations(k.min(pool.len()))
        .map(|fam| oracle_f(g, &fam, d))
        .max()
        .unwrap_or(0)
}
