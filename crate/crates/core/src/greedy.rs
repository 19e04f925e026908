//! FullGreedy and PartialGreedy, plus the ordered and optimal matching
//! values `h` and `f` of a family of in-sets.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::time::{Duration, Instant};

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{MatchingError, OptimizeError};
use crate::graph::{GnnGraph, HagGraph, LayerMode, NodeId, PartialHag};
use crate::matching::{
    is_sorted_subset, optimal_completion, receiver_hypergraph, solve_receiver, CompletionMode,
    Hyperedge, ReceiverHypergraph,
};

/// How ties between equally good in-sets are broken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// Smallest sorted in-set by node id.
    #[default]
    Lexicographic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptimizerConfig {
    /// Budget on the number of intermediates.
    pub k: usize,
    /// In-degree of every intermediate.
    pub d: usize,
    pub layer_mode: LayerMode,
    /// Stop as soon as the best step would lose value.
    pub stop_on_nonpositive: bool,
    pub tie_break: TieBreak,
    /// PartialGreedy skips in-sets shared by fewer receivers than this.
    pub candidate_floor: usize,
    pub completion: CompletionMode,
}

impl OptimizerConfig {
    pub fn new(k: usize, d: usize) -> Self {
        Self {
            k,
            d,
            layer_mode: LayerMode::Single,
            stop_on_nonpositive: true,
            tie_break: TieBreak::Lexicographic,
            candidate_floor: 2,
            completion: CompletionMode::default(),
        }
    }

    pub fn with_layer_mode(mut self, layer_mode: LayerMode) -> Self {
        self.layer_mode = layer_mode;
        self
    }

    pub fn with_stop_on_nonpositive(mut self, stop: bool) -> Self {
        self.stop_on_nonpositive = stop;
        self
    }

    pub fn with_candidate_floor(mut self, floor: usize) -> Self {
        self.candidate_floor = floor;
        self
    }

    pub fn with_completion(mut self, completion: CompletionMode) -> Self {
        self.completion = completion;
        self
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.d < 2 {
            return Err(OptimizeError::Config(format!(
                "d must be at least 2, got {}",
                self.d
            )));
        }
        if self.candidate_floor == 0 {
            return Err(OptimizeError::Config(
                "candidate floor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One inserted intermediate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub in_set: Vec<NodeId>,
    pub node: NodeId,
    /// Receivers fed by the new node when it was inserted.
    pub receivers: usize,
    pub marginal: i64,
    pub cumulative: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub candidates_evaluated: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HagResult {
    pub graph: HagGraph,
    pub trace: Vec<TraceStep>,
    pub stats: RunStats,
}

impl HagResult {
    pub fn value(&self) -> i64 {
        self.graph.value()
    }

    pub fn k_used(&self) -> usize {
        self.graph.intermediate_count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CandidateSearch {
    /// Incremental pair co-occurrence counts; `d = 2` only.
    PairIndex,
    /// Recount every `d`-subset of every receiver's inputs each step.
    Recount,
}

/// Repeatedly inserts the `d`-set shared by the most receivers and reroutes
/// those receivers through it.
pub fn full_greedy(g: &GnnGraph, cfg: &OptimizerConfig) -> Result<HagResult, OptimizeError> {
    let search = if cfg.d == 2 {
        CandidateSearch::PairIndex
    } else {
        CandidateSearch::Recount
    };
    full_greedy_with(g, cfg, search)
}

pub(crate) fn full_greedy_with(
    g: &GnnGraph,
    cfg: &OptimizerConfig,
    search: CandidateSearch,
) -> Result<HagResult, OptimizeError> {
    cfg.validate()?;
    if search == CandidateSearch::PairIndex && cfg.d != 2 {
        return Err(OptimizeError::Config("pair index needs d = 2".into()));
    }
    let start = Instant::now();
    let mut state = FullState {
        hag: HagGraph::from_gnn(g, cfg.layer_mode, Some(cfg.d)),
        single: cfg.layer_mode == LayerMode::Single,
        covers: HashSet::new(),
    };
    let mut index = (search == CandidateSearch::PairIndex).then(|| PairIndex::build(&state));
    let mut trace = Vec::new();
    let mut evaluated = 0;
    let mut cumulative = 0;
    for _ in 0..cfg.k {
        let best = match index.as_mut() {
            Some(index) => index.best(&state, &mut evaluated),
            None => state.recount_best(cfg.d, &mut evaluated),
        };
        let in_set = match best {
            Some((c, count)) if count >= 2 || !cfg.stop_on_nonpositive => c,
            Some(_) => break,
            None if cfg.stop_on_nonpositive => break,
            None => match state.first_fresh(cfg.d) {
                Some(c) => c,
                None => break,
            },
        };
        let receivers = state.receivers_with(&in_set);
        let node = state.insert(&in_set, &receivers, index.as_mut());
        let marginal = (receivers.len() as i64 - 1) * (cfg.d as i64 - 1);
        cumulative += marginal;
        debug_assert_eq!(state.hag.value(), cumulative);
        trace.push(TraceStep {
            in_set,
            node,
            receivers: receivers.len(),
            marginal,
            cumulative,
        });
    }
    Ok(HagResult {
        graph: state.hag,
        trace,
        stats: RunStats {
            candidates_evaluated: evaluated,
            elapsed: start.elapsed(),
        },
    })
}

struct FullState {
    hag: HagGraph,
    single: bool,
    covers: HashSet<Vec<NodeId>>,
}

impl FullState {
    fn eligible(&self, r: NodeId) -> Vec<NodeId> {
        self.hag
            .receiver_inputs(r)
            .iter()
            .copied()
            .filter(|&v| !self.single || self.hag.is_leaf(v))
            .collect()
    }

    /// Whether `c` has disjoint covers whose union is not yet an intermediate.
    fn is_fresh(&self, c: &[NodeId]) -> bool {
        self.hag
            .partial()
            .union_cover(c)
            .is_ok_and(|u| !self.covers.contains(&u))
    }

    fn receivers_with(&self, c: &[NodeId]) -> Vec<NodeId> {
        (0..self.hag.node_count() as NodeId)
            .filter(|&r| is_sorted_subset(c, self.hag.receiver_inputs(r)))
            .collect()
    }

    fn recount_best(&self, d: usize, evaluated: &mut u64) -> Option<(Vec<NodeId>, usize)> {
        let mut counts: HashMap<Vec<NodeId>, usize> = HashMap::new();
        for r in 0..self.hag.node_count() as NodeId {
            for c in self.eligible(r).into_iter().combinations(d) {
                *evaluated += 1;
                *counts.entry(c).or_default() += 1;
            }
        }
        counts
            .into_iter()
            .filter(|(c, _)| self.is_fresh(c))
            .max_by(|(c1, n1), (c2, n2)| n1.cmp(n2).then_with(|| c2.cmp(c1)))
    }

    fn first_fresh(&self, d: usize) -> Option<Vec<NodeId>> {
        let pool = if self.single {
            self.hag.node_count() as NodeId
        } else {
            self.hag.partial().next_id()
        };
        (0..pool).combinations(d).find(|c| self.is_fresh(c))
    }

    fn insert(
        &mut self,
        c: &[NodeId],
        receivers: &[NodeId],
        mut index: Option<&mut PairIndex>,
    ) -> NodeId {
        let node = self
            .hag
            .add_intermediate(c)
            .expect("greedy in-sets are valid intermediates");
        let cover = self
            .hag
            .cover(node)
            .expect("node was just added")
            .into_owned();
        self.covers.insert(cover);
        for &r in receivers {
            if let Some(index) = index.as_deref_mut() {
                index.reroute(&self.eligible(r), c, (!self.single).then_some(node));
            }
            let mut inputs: Vec<NodeId> = self
                .hag
                .receiver_inputs(r)
                .iter()
                .copied()
                .filter(|v| !c.contains(v))
                .collect();
            inputs.push(node);
            self.hag
                .set_receiver_inputs(r, inputs)
                .expect("rerouting keeps inputs valid");
        }
        node
    }
}

fn pack(a: NodeId, b: NodeId) -> u64 {
    let (a, b) = (a.min(b), a.max(b));
    (a as u64) << 32 | b as u64
}

fn unpack(key: u64) -> (NodeId, NodeId) {
    ((key >> 32) as NodeId, key as NodeId)
}

/// Co-occurrence counts of input pairs across receivers, with a lazily
/// invalidated max-heap on `(count, smallest pair)`.
struct PairIndex {
    counts: HashMap<u64, u32>,
    heap: BinaryHeap<(u32, Reverse<u64>)>,
}

impl PairIndex {
    fn build(state: &FullState) -> Self {
        let mut counts: HashMap<u64, u32> = HashMap::new();
        for r in 0..state.hag.node_count() as NodeId {
            let inputs = state.eligible(r);
            for (i, &a) in inputs.iter().enumerate() {
                for &b in &inputs[i + 1..] {
                    *counts.entry(pack(a, b)).or_default() += 1;
                }
            }
        }
        let heap = counts.iter().map(|(&key, &c)| (c, Reverse(key))).collect();
        Self { counts, heap }
    }

    fn bump(&mut self, key: u64, up: bool) {
        let count = self.counts.entry(key).or_default();
        if up {
            *count += 1;
        } else {
            *count -= 1;
        }
        let count = *count;
        if count == 0 {
            self.counts.remove(&key);
        } else {
            self.heap.push((count, Reverse(key)));
        }
    }

    fn best(&mut self, state: &FullState, evaluated: &mut u64) -> Option<(Vec<NodeId>, usize)> {
        while let Some(&(count, Reverse(key))) = self.heap.peek() {
            *evaluated += 1;
            if self.counts.get(&key) != Some(&count) {
                self.heap.pop();
                continue;
            }
            let (a, b) = unpack(key);
            if !state.is_fresh(&[a, b]) {
                self.counts.remove(&key);
                self.heap.pop();
                continue;
            }
            return Some((vec![a, b], count as usize));
        }
        None
    }

    /// Updates counts for one receiver whose inputs `before` lose the pair
    /// `c` and, in multi-layer mode, gain `node`.
    fn reroute(&mut self, before: &[NodeId], c: &[NodeId], node: Option<NodeId>) {
        self.bump(pack(c[0], c[1]), false);
        for &x in before.iter().filter(|x| !c.contains(x)) {
            self.bump(pack(x, c[0]), false);
            self.bump(pack(x, c[1]), false);
            if let Some(node) = node {
                self.bump(pack(x, node), true);
            }
        }
    }
}

/// Repeatedly inserts the `d`-set whose best completion gains the most,
/// re-solving every receiver's matching so earlier out-edges can move.
pub fn partial_greedy(g: &GnnGraph, cfg: &OptimizerConfig) -> Result<HagResult, OptimizeError> {
    cfg.validate()?;
    check_regime(g, cfg)?;
    let start = Instant::now();
    let n = g.node_count();
    let mut p = PartialHag::new(n, cfg.layer_mode, Some(cfg.d));
    let mut hyper: Vec<ReceiverHypergraph> = (0..n as NodeId)
        .map(|r| receiver_hypergraph(&p, r, g.in_neighbors(r)))
        .collect();
    let mut best = vec![0u64; n];
    let mut covers: HashSet<Vec<NodeId>> = HashSet::new();
    let mut trace = Vec::new();
    let mut evaluated = 0;
    let mut value = 0;
    for _ in 0..cfg.k {
        let candidates = partial_candidates(g, &p, &hyper, cfg, &covers);
        evaluated += candidates.len() as u64;
        let next = p.next_id();
        let scored = candidates
            .into_par_iter()
            .map(|c| score(c, next, &hyper, &best, cfg))
            .collect::<Result<Vec<_>, _>>()?;
        let Some(choice) = scored.into_iter().max_by(|a, b| {
            a.marginal
                .cmp(&b.marginal)
                .then_with(|| b.in_set.cmp(&a.in_set))
        }) else {
            break;
        };
        if cfg.stop_on_nonpositive && choice.marginal < 0 {
            break;
        }
        let node = p.add_intermediate(&choice.in_set)?;
        let edge = Hyperedge {
            source: node,
            weight: choice.cover.len() as u64 - 1,
            vertices: choice.cover.clone(),
        };
        for &(r, v) in &choice.updates {
            hyper[r as usize].edges.push(edge.clone());
            best[r as usize] = v;
        }
        covers.insert(choice.cover);
        value += choice.marginal;
        trace.push(TraceStep {
            in_set: choice.in_set,
            node,
            receivers: choice.matched,
            marginal: choice.marginal,
            cumulative: value,
        });
    }
    let graph = optimal_completion(&p, g, cfg.completion)?;
    debug_assert_eq!(graph.value(), value);
    Ok(HagResult {
        graph,
        trace,
        stats: RunStats {
            candidates_evaluated: evaluated,
            elapsed: start.elapsed(),
        },
    })
}

fn check_regime(g: &GnnGraph, cfg: &OptimizerConfig) -> Result<(), OptimizeError> {
    let graph_case = cfg.d == 2 && cfg.layer_mode == LayerMode::Single;
    let cap = match cfg.completion {
        CompletionMode::Blossom if graph_case => return Ok(()),
        CompletionMode::Blossom => {
            return Err(OptimizeError::Config(
                "blossom completion needs d = 2 and a single layer".into(),
            ))
        }
        CompletionMode::Auto(_) if graph_case => return Ok(()),
        CompletionMode::Auto(cap) | CompletionMode::BruteForce(cap) => cap,
    };
    for r in 0..g.node_count() as NodeId {
        let deg = g.in_neighbors(r).len();
        if deg > cap.max_vertices {
            return Err(MatchingError::CapExceeded {
                receiver: r,
                vertices: deg,
                edges: 0,
                max_vertices: cap.max_vertices,
                max_edges: cap.max_edges,
            }
            .into());
        }
    }
    Ok(())
}

struct Candidate {
    in_set: Vec<NodeId>,
    cover: Vec<NodeId>,
    receivers: Vec<NodeId>,
}

struct Scored {
    in_set: Vec<NodeId>,
    cover: Vec<NodeId>,
    marginal: i64,
    matched: usize,
    updates: Vec<(NodeId, u64)>,
}

fn partial_candidates(
    g: &GnnGraph,
    p: &PartialHag,
    hyper: &[ReceiverHypergraph],
    cfg: &OptimizerConfig,
    covers: &HashSet<Vec<NodeId>>,
) -> Vec<Candidate> {
    let mut found: HashMap<Vec<NodeId>, Vec<NodeId>> = HashMap::new();
    for r in 0..g.node_count() as NodeId {
        let mut pool = g.in_neighbors(r).to_vec();
        if cfg.layer_mode == LayerMode::Multi {
            pool.extend(hyper[r as usize].edges.iter().map(|e| e.source));
        }
        for c in pool.into_iter().combinations(cfg.d) {
            found.entry(c).or_default().push(r);
        }
    }
    let mut candidates: Vec<Candidate> = found
        .into_iter()
        .filter(|(_, rs)| rs.len() >= cfg.candidate_floor)
        .filter_map(|(in_set, receivers)| {
            let cover = p.union_cover(&in_set).ok()?;
            (!covers.contains(&cover)).then_some(Candidate {
                in_set,
                cover,
                receivers,
            })
        })
        .collect();
    candidates.sort_unstable_by(|a, b| a.in_set.cmp(&b.in_set));
    candidates
}

fn score(
    c: Candidate,
    next: NodeId,
    hyper: &[ReceiverHypergraph],
    best: &[u64],
    cfg: &OptimizerConfig,
) -> Result<Scored, MatchingError> {
    let edge = Hyperedge {
        source: next,
        weight: c.cover.len() as u64 - 1,
        vertices: c.cover.clone(),
    };
    let mut gain = 0i64;
    let mut matched = 0;
    let mut updates = Vec::with_capacity(c.receivers.len());
    for &r in &c.receivers {
        let mut h = hyper[r as usize].clone();
        h.edges.push(edge.clone());
        let m = solve_receiver(&h, cfg.completion)?;
        gain += m.value as i64 - best[r as usize] as i64;
        matched += usize::from(m.selected.contains(&next));
        updates.push((r, m.value));
    }
    Ok(Scored {
        in_set: c.in_set,
        cover: c.cover,
        marginal: gain - (cfg.d as i64 - 1),
        matched,
        updates,
    })
}

/// An ordered list of distinct in-sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InSetSequence {
    sets: Vec<Vec<NodeId>>,
}

impl InSetSequence {
    /// Sorts each in-set; rejects repeated members and repeated sets.
    pub fn new(sets: Vec<Vec<NodeId>>) -> Result<Self, OptimizeError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(sets.len());
        for mut s in sets {
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(OptimizeError::InvalidSequence(format!(
                    "{s:?} repeats a member"
                )));
            }
            if !seen.insert(s.clone()) {
                return Err(OptimizeError::InvalidSequence(format!(
                    "{s:?} appears twice"
                )));
            }
            out.push(s);
        }
        Ok(Self { sets: out })
    }

    pub fn sets(&self) -> &[Vec<NodeId>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

fn check_leaf_sets(g: &GnnGraph, sets: &[Vec<NodeId>], d: usize) -> Result<(), OptimizeError> {
    for s in sets {
        if s.len() != d {
            return Err(OptimizeError::InvalidSequence(format!(
                "{s:?} does not have {d} members"
            )));
        }
        if let Some(v) = s.iter().find(|&&v| v as usize >= g.node_count()) {
            return Err(OptimizeError::InvalidSequence(format!(
                "{s:?}: {v} is not a leaf"
            )));
        }
    }
    Ok(())
}

/// The greedy single-layer HAG of a sequence: each in-set in turn becomes an
/// intermediate and takes over every receiver whose remaining leaf inputs
/// still contain it.
pub fn greedy_sequence(
    g: &GnnGraph,
    seq: &InSetSequence,
    d: usize,
) -> Result<HagGraph, OptimizeError> {
    check_leaf_sets(g, seq.sets(), d)?;
    let mut hag = HagGraph::from_gnn(g, LayerMode::Single, Some(d));
    for s in seq.sets() {
        let node = hag.add_intermediate(s)?;
        for r in 0..g.node_count() as NodeId {
            if is_sorted_subset(s, hag.receiver_inputs(r)) {
                let mut inputs: Vec<NodeId> = hag
                    .receiver_inputs(r)
                    .iter()
                    .copied()
                    .filter(|v| !s.contains(v))
                    .collect();
                inputs.push(node);
                hag.set_receiver_inputs(r, inputs)?;
            }
        }
    }
    Ok(hag)
}

/// Ordered matching value `h = (d − 1)·Σ out(m)` of the greedy HAG of `seq`.
pub fn greedy_sequence_value_h(
    g: &GnnGraph,
    seq: &InSetSequence,
    d: usize,
) -> Result<i64, OptimizeError> {
    let hag = greedy_sequence(g, seq, d)?;
    let out: usize = hag.receiver_out_degrees().iter().sum();
    Ok((d as i64 - 1) * out as i64)
}

/// Maximum matching value `f(S) = value(best completion) + (d − 1)·|S|`.
pub fn max_matching_value_f(
    g: &GnnGraph,
    sets: &[Vec<NodeId>],
    d: usize,
    mode: CompletionMode,
) -> Result<i64, OptimizeError> {
    check_leaf_sets(g, sets, d)?;
    let mut p = PartialHag::new(g.node_count(), LayerMode::Single, Some(d));
    for s in sets {
        p.add_intermediate(s)?;
    }
    let hag = optimal_completion(&p, g, mode)?;
    Ok(hag.value() + (d as i64 - 1) * sets.len() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_computation_graph, fixtures::*, DirectedGraph};
    use rand::{Rng, SeedableRng};

    fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> DirectedGraph {
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

    #[test]
    fn zero_budget_leaves_graph_alone() {
        let g = build_computation_graph(&twin_graph());
        for res in [
            full_greedy(&g, &OptimizerConfig::new(0, 2)).unwrap(),
            partial_greedy(&g, &OptimizerConfig::new(0, 2)).unwrap(),
        ] {
            assert_eq!(res.value(), 0);
            assert!(res.trace.is_empty());
            assert_eq!(
                res.graph,
                HagGraph::from_gnn(&g, LayerMode::Single, Some(2))
            );
        }
    }

    #[test]
    fn twin_graph_single_step() {
        let g = build_computation_graph(&twin_graph());
        let cfg = OptimizerConfig::new(1, 2);
        for search in [CandidateSearch::PairIndex, CandidateSearch::Recount] {
            let res = full_greedy_with(&g, &cfg, search).unwrap();
            assert_eq!(res.value(), 2);
            assert_eq!(res.trace[0].in_set, vec![A, B]);
            assert_eq!(res.trace[0].receivers, 3);
            assert_eq!(res.graph, twin_hag());
        }
        let res = partial_greedy(&g, &cfg).unwrap();
        assert_eq!(res.value(), 2);
        assert_eq!(res.graph, twin_hag());
        assert_eq!(res.trace[0].receivers, 3);
    }

    #[test]
    fn stop_rule() {
        // no pair of senders is shared by two receivers
        let src = DirectedGraph::new(4, [(0, 2), (1, 2), (0, 3)]).unwrap();
        let g = build_computation_graph(&src);
        let res = full_greedy(&g, &OptimizerConfig::new(2, 2)).unwrap();
        assert_eq!(res.k_used(), 0);
        let res = full_greedy(
            &g,
            &OptimizerConfig::new(2, 2).with_stop_on_nonpositive(false),
        )
        .unwrap();
        assert_eq!(res.k_used(), 2);
        assert_eq!(res.trace[0].in_set, vec![0, 1]);
        assert_eq!(res.trace[0].marginal, 0);
        assert_eq!(res.trace[1].in_set, vec![0, 2]);
        assert_eq!(res.trace[1].marginal, -1);
        assert_eq!(res.value(), -1);
        assert!(res.graph.verify_equivalence(&src).is_ok());
    }

    #[test]
    fn candidate_floor_two_loses_no_positive_step() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let n = rng.gen_range(3..=9);
            let p = rng.gen_range(0.2..0.8);
            let g = build_computation_graph(&random_graph(&mut rng, n, p));
            let d = rng.gen_range(2..=3);
            let cfg = OptimizerConfig::new(rng.gen_range(1..=4), d);
            let pruned = partial_greedy(&g, &cfg).unwrap();
            let full = partial_greedy(&g, &cfg.clone().with_candidate_floor(1)).unwrap();
            // the runs may part ways at a zero-marginal tie, never before
            for (a, b) in pruned.trace.iter().zip(&full.trace) {
                assert_eq!(a.marginal, b.marginal);
                if a.marginal == 0 {
                    break;
                }
                assert_eq!(a.in_set, b.in_set);
            }
            assert!(full.trace.len() >= pruned.trace.len());
        }
    }

    #[test]
    fn pair_index_matches_recount() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..60 {
            let n = rng.gen_range(3..=10);
            let p = rng.gen_range(0.2..0.8);
            let src = random_graph(&mut rng, n, p);
            let g = build_computation_graph(&src);
            let mode = if trial % 2 == 0 {
                LayerMode::Single
            } else {
                LayerMode::Multi
            };
            let cfg = OptimizerConfig::new(rng.gen_range(0..=6), 2)
                .with_layer_mode(mode)
                .with_stop_on_nonpositive(trial % 3 != 0);
            let a = full_greedy_with(&g, &cfg, CandidateSearch::PairIndex).unwrap();
            let b = full_greedy_with(&g, &cfg, CandidateSearch::Recount).unwrap();
            assert_eq!(a.graph, b.graph);
            assert_eq!(a.trace, b.trace);
            assert!(a.graph.verify_equivalence(&src).is_ok());
            a.graph.check_invariants().unwrap();
        }
    }

    #[test]
    fn multi_layer_reuses_intermediates() {
        // receivers 3..6 all read {0, 1, 2}
        let edges = (3..6).flat_map(|r| (0..3).map(move |u| (u, r)));
        let src = DirectedGraph::new(6, edges).unwrap();
        let g = build_computation_graph(&src);
        let cfg = OptimizerConfig::new(2, 2).with_layer_mode(LayerMode::Multi);
        let res = full_greedy(&g, &cfg).unwrap();
        assert_eq!(res.trace[1].in_set, vec![2, 6]);
        assert_eq!(res.value(), 4);
        assert_eq!(res.graph.edges_mid_to_mid(), vec![(6, 7)]);
        assert!(res.graph.verify_equivalence(&src).is_ok());

        let res = partial_greedy(&g, &cfg).unwrap();
        assert_eq!(res.value(), 4);
        assert!(res.graph.verify_equivalence(&src).is_ok());
    }

    #[test]
    fn trace_ends_at_final_value() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let src = random_graph(&mut rng, 8, 0.5);
            let g = build_computation_graph(&src);
            for d in [2, 3] {
                let cfg = OptimizerConfig::new(3, d);
                for res in [
                    full_greedy(&g, &cfg).unwrap(),
                    partial_greedy(&g, &cfg).unwrap(),
                ] {
                    let last = res.trace.last().map_or(0, |s| s.cumulative);
                    assert_eq!(last, res.value());
                    assert!(res
                        .trace
                        .windows(2)
                        .all(|w| w[0].cumulative <= w[1].cumulative));
                    assert!(res.graph.verify_equivalence(&src).is_ok());
                }
            }
        }
    }

    #[test]
    fn partial_greedy_regime_error_names_receiver() {
        let edges: Vec<_> = (1..=25).map(|u| (u, 0)).collect();
        let src = DirectedGraph::new(26, edges).unwrap();
        let g = build_computation_graph(&src);
        let err = partial_greedy(&g, &OptimizerConfig::new(1, 3)).unwrap_err();
        assert!(matches!(
            err,
            OptimizeError::Matching(MatchingError::CapExceeded {
                receiver: 0,
                vertices: 25,
                ..
            })
        ));
        assert!(partial_greedy(&g, &OptimizerConfig::new(1, 2)).is_ok());
        let blossom = OptimizerConfig::new(1, 3).with_completion(CompletionMode::Blossom);
        assert!(matches!(
            partial_greedy(&g, &blossom),
            Err(OptimizeError::Config(_))
        ));
    }

    #[test]
    fn config_validation() {
        let g = build_computation_graph(&twin_graph());
        assert!(full_greedy(&g, &OptimizerConfig::new(1, 1)).is_err());
        assert!(partial_greedy(&g, &OptimizerConfig::new(1, 2).with_candidate_floor(0)).is_err());
    }

    #[test]
    fn h_and_f_examples() {
        let g = build_computation_graph(&twin_graph());
        let empty = InSetSequence::default();
        assert_eq!(greedy_sequence_value_h(&g, &empty, 2).unwrap(), 0);
        assert_eq!(
            max_matching_value_f(&g, &[], 2, CompletionMode::default()).unwrap(),
            0
        );

        let seq = InSetSequence::new(vec![vec![B, A]]).unwrap();
        assert_eq!(greedy_sequence_value_h(&g, &seq, 2).unwrap(), 3);
        assert_eq!(greedy_sequence(&g, &seq, 2).unwrap().value(), 2);
        assert_eq!(
            max_matching_value_f(&g, seq.sets(), 2, CompletionMode::default()).unwrap(),
            3
        );
    }

    #[test]
    fn adversarial_order_halves_h() {
        // one receiver reading senders 1..=4; in-sets form a path
        let src = DirectedGraph::new(5, (1..5).map(|u| (u, 0))).unwrap();
        let g = build_computation_graph(&src);
        let seq = InSetSequence::new(vec![vec![2, 3], vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(greedy_sequence_value_h(&g, &seq, 2).unwrap(), 1);
        assert_eq!(
            max_matching_value_f(&g, seq.sets(), 2, CompletionMode::default()).unwrap(),
            2
        );
    }

    #[test]
    fn invalid_sequences() {
        assert!(InSetSequence::new(vec![vec![0, 1], vec![1, 0]]).is_err());
        assert!(InSetSequence::new(vec![vec![0, 0]]).is_err());
        let g = build_computation_graph(&twin_graph());
        let seq = InSetSequence::new(vec![vec![0, 1, 2]]).unwrap();
        assert!(greedy_sequence_value_h(&g, &seq, 2).is_err());
        let seq = InSetSequence::new(vec![vec![0, 9]]).unwrap();
        assert!(greedy_sequence_value_h(&g, &seq, 2).is_err());
    }
}
