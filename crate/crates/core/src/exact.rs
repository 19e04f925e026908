//! Exhaustive single-layer optimum, the reference for approximation ratios.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::time::Instant;

use itertools::Itertools;
use num_rational::Rational64;
use rayon::prelude::*;

use crate::error::OptimizeError;
use crate::graph::{GnnGraph, LayerMode, NodeId, PartialHag};
use crate::greedy::{HagResult, RunStats, TraceStep};
use crate::matching::{optimal_completion, CompletionMode};

/// What the oracle maximizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    #[default]
    Value,
    /// `value + |M|·(d − 1)`.
    ValueTilde,
}

impl Objective {
    /// Smallest receiver co-occurrence an in-set needs to matter.
    pub fn min_cooccurrence(self) -> usize {
        match self {
            Objective::Value => 2,
            Objective::ValueTilde => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactConfig {
    pub k: usize,
    pub d: usize,
    pub objective: Objective,
    /// Maximum number of in-set families to evaluate.
    pub budget: u64,
    pub completion: CompletionMode,
}

impl ExactConfig {
    pub fn new(k: usize, d: usize) -> Self {
        Self {
            k,
            d,
            objective: Objective::Value,
            budget: 10_000_000,
            completion: CompletionMode::default(),
        }
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }
}

/// Leaf `d`-sets read together by at least `min_cooccurrence` receivers,
/// in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSpace {
    d: usize,
    sets: Vec<Vec<NodeId>>,
}

impl CandidateSpace {
    pub fn new(g: &GnnGraph, d: usize, min_cooccurrence: usize) -> Self {
        let sets = if min_cooccurrence == 0 {
            (0..g.node_count() as NodeId).combinations(d).collect()
        } else {
            let mut counts: HashMap<Vec<NodeId>, usize> = HashMap::new();
            for r in 0..g.node_count() as NodeId {
                for c in g.in_neighbors(r).iter().copied().combinations(d) {
                    *counts.entry(c).or_default() += 1;
                }
            }
            let mut sets: Vec<_> = counts
                .into_iter()
                .filter(|&(_, n)| n >= min_cooccurrence)
                .map(|(c, _)| c)
                .collect();
            sets.sort_unstable();
            sets
        };
        Self { d, sets }
    }

    pub fn for_objective(g: &GnnGraph, d: usize, objective: Objective) -> Self {
        Self::new(g, d, objective.min_cooccurrence())
    }

    pub fn d(&self) -> usize {
        self.d
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

/// `Σ_{j ≤ k} C(n, j)`, saturating.
pub fn family_count(n: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for j in 0..=k.min(n) {
        total = total.saturating_add(term);
        term = term.saturating_mul((n - j) as u128) / (j as u128 + 1);
    }
    total
}

/// Best single-layer `d`-HAG with at most `k` intermediates.
pub fn optimal_single_layer(g: &GnnGraph, cfg: &ExactConfig) -> Result<HagResult, OptimizeError> {
    let space = CandidateSpace::for_objective(g, cfg.d, cfg.objective);
    optimal_in_space(g, &space, cfg)
}

/// Like [`optimal_single_layer`] but searching an explicit candidate space.
///
/// Families are ranked by objective, then fewer intermediates, then
/// lexicographic order.
pub fn optimal_in_space(
    g: &GnnGraph,
    space: &CandidateSpace,
    cfg: &ExactConfig,
) -> Result<HagResult, OptimizeError> {
    if cfg.d < 2 || space.d() != cfg.d {
        return Err(OptimizeError::Config(format!(
            "candidate space has d = {}, oracle asked for d = {}",
            space.d(),
            cfg.d
        )));
    }
    let n = g.node_count();
    if n > 128 {
        return Err(OptimizeError::Config(format!(
            "oracle supports at most 128 nodes, got {n}"
        )));
    }
    let required = family_count(space.len(), cfg.k);
    if required > cfg.budget as u128 {
        return Err(OptimizeError::BudgetExceeded {
            required,
            budget: cfg.budget,
        });
    }
    let start = Instant::now();
    let search = Search::new(g, space, cfg);
    let best = (0..space.len())
        .into_par_iter()
        .map(|first| search.best_from(first))
        .reduce(Best::empty, Best::better);

    let chosen: Vec<Vec<NodeId>> = best
        .family
        .iter()
        .map(|&i| space.sets()[i].clone())
        .collect();
    let mut p = PartialHag::new(n, LayerMode::Single, Some(cfg.d));
    let mut trace = Vec::with_capacity(chosen.len());
    for s in &chosen {
        let node = p.add_intermediate(s)?;
        let value = optimal_completion(&p, g, cfg.completion)?.value();
        let prev = trace.last().map_or(0, |t: &TraceStep| t.cumulative);
        trace.push(TraceStep {
            in_set: s.clone(),
            node,
            receivers: 0,
            marginal: value - prev,
            cumulative: value,
        });
    }
    let graph = optimal_completion(&p, g, cfg.completion)?;
    let out = graph.receiver_out_degrees();
    for (t, o) in trace.iter_mut().zip(out) {
        t.receivers = o;
    }
    let objective = match cfg.objective {
        Objective::Value => graph.value(),
        Objective::ValueTilde => graph.value_tilde(cfg.d)?,
    };
    assert_eq!(
        objective, best.score,
        "packing count disagrees with completion"
    );
    Ok(HagResult {
        graph,
        trace,
        stats: RunStats {
            candidates_evaluated: required as u64,
            elapsed: start.elapsed(),
        },
    })
}

#[derive(Clone, Debug)]
struct Best {
    score: i64,
    family: Vec<usize>,
}

impl Best {
    fn empty() -> Self {
        Self {
            score: 0,
            family: Vec::new(),
        }
    }

    fn rank(&self, other: &Self) -> Ordering {
        self.score
            .cmp(&other.score)
            .then_with(|| other.family.len().cmp(&self.family.len()))
            .then_with(|| other.family.cmp(&self.family))
    }

    fn better(a: Self, b: Self) -> Self {
        if b.rank(&a) == Ordering::Greater {
            b
        } else {
            a
        }
    }
}

struct Search {
    k: usize,
    weight: i64,
    tilde: bool,
    masks: Vec<u128>,
    /// Receivers reading every leaf of each candidate.
    readers: Vec<Vec<usize>>,
    receivers: usize,
}

impl Search {
    fn new(g: &GnnGraph, space: &CandidateSpace, cfg: &ExactConfig) -> Self {
        let masks: Vec<u128> = space
            .sets()
            .iter()
            .map(|s| s.iter().fold(0u128, |m, &v| m | 1 << v))
            .collect();
        let in_masks: Vec<u128> = (0..g.node_count() as NodeId)
            .map(|r| g.in_neighbors(r).iter().fold(0u128, |m, &v| m | 1 << v))
            .collect();
        let readers = masks
            .iter()
            .map(|&c| {
                (0..in_masks.len())
                    .filter(|&r| in_masks[r] & c == c)
                    .collect()
            })
            .collect();
        Self {
            k: cfg.k,
            weight: cfg.d as i64 - 1,
            tilde: cfg.objective == Objective::ValueTilde,
            masks,
            readers,
            receivers: g.node_count(),
        }
    }

    fn best_from(&self, first: usize) -> Best {
        let mut state = State {
            contained: vec![Vec::new(); self.receivers],
            packed: vec![0; self.receivers],
            total: 0,
            family: Vec::new(),
            best: Best::empty(),
        };
        if self.k > 0 {
            self.visit(first, &mut state);
        }
        state.best
    }

    fn visit(&self, i: usize, st: &mut State) {
        st.family.push(i);
        let mut saved = Vec::with_capacity(self.readers[i].len());
        for &r in &self.readers[i] {
            st.contained[r].push(self.masks[i]);
            let packed = max_packing(&st.contained[r], 0);
            saved.push(st.packed[r]);
            st.total += packed as i64 - st.packed[r] as i64;
            st.packed[r] = packed;
        }
        let mut score = self.weight * st.total;
        if !self.tilde {
            score -= self.weight * st.family.len() as i64;
        }
        let here = Best {
            score,
            family: st.family.clone(),
        };
        if here.rank(&st.best) == Ordering::Greater {
            st.best = here;
        }
        if st.family.len() < self.k {
            for j in i + 1..self.masks.len() {
                self.visit(j, st);
            }
        }
        for (&r, old) in self.readers[i].iter().zip(saved) {
            st.contained[r].pop();
            st.total += old as i64 - st.packed[r] as i64;
            st.packed[r] = old;
        }
        st.family.pop();
    }
}

struct State {
    contained: Vec<Vec<u128>>,
    packed: Vec<u32>,
    total: i64,
    family: Vec<usize>,
    best: Best,
}

/// Largest number of pairwise disjoint masks.
fn max_packing(masks: &[u128], used: u128) -> u32 {
    match masks.split_first() {
        None => 0,
        Some((&m, rest)) => {
            let skip = max_packing(rest, used);
            if used & m == 0 {
                skip.max(1 + max_packing(rest, used | m))
            } else {
                skip
            }
        }
    }
}

/// `α = candidate / optimal` and `1 − α`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApproximationRatio {
    pub alpha: Rational64,
    pub gap: Rational64,
}

/// Ratio of a heuristic value to the optimum; `α = 1` when both are zero.
pub fn approximation_ratio(
    candidate: i64,
    optimal: i64,
) -> Result<ApproximationRatio, OptimizeError> {
    if candidate < 0 || candidate > optimal {
        return Err(OptimizeError::RatioOutOfRange { candidate, optimal });
    }
    let alpha = if optimal == 0 {
        Rational64::from_integer(1)
    } else {
        Rational64::new(candidate, optimal)
    };
    Ok(ApproximationRatio {
        alpha,
        gap: Rational64::from_integer(1) - alpha,
    })
}
