//! Experiment harness behind the `hag` binary: single runs, comparisons,
//! random-graph studies, layer studies, and the property validator.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, OptimizeError};
use crate::exact::{approximation_ratio, optimal_single_layer, ExactConfig, Objective};
use crate::executor::{node_terms, run_gnn, run_hag, MultisetUnion};
use crate::graph::{
    build_computation_graph, CostParams, DirectedGraph, GnnGraph, HagGraph, LayerMode, NodeId,
    PartialHag,
};
use crate::greedy::{
    full_greedy, greedy_sequence_value_h, max_matching_value_f, partial_greedy, HagResult,
    InSetSequence, OptimizerConfig,
};
use crate::heuristics::{degree_heuristic, hub_heuristic, DegreeRanking, HeuristicOptions};
use crate::ingest::{
    gen_erdos_renyi, parse_snap_edge_list, serialize_hag, EdgeList, EdgeListFormat, ErConfig, Remap,
};
use crate::matching::{
    build_matching_instance, optimal_completion, phi, phi_inverse, CompletionMode, Matching,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Full,
    Partial,
    Degree,
    Hub,
    Optimal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Full,
        Algorithm::Partial,
        Algorithm::Degree,
        Algorithm::Hub,
        Algorithm::Optimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Full => "full",
            Algorithm::Partial => "partial",
            Algorithm::Degree => "degree",
            Algorithm::Hub => "hub",
            Algorithm::Optimal => "optimal",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown algorithm {s:?}; expected one of full, partial, degree, hub, optimal"
                )
            })
    }
}

/// Everything an algorithm run needs besides the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSettings {
    pub optimizer: OptimizerConfig,
    pub ranking: DegreeRanking,
    /// Work budget of the exact oracle.
    pub budget: u64,
}

impl RunSettings {
    pub fn new(optimizer: OptimizerConfig) -> Self {
        Self {
            optimizer,
            ranking: DegreeRanking::Out,
            budget: ExactConfig::new(0, 2).budget,
        }
    }
}

pub fn run_algorithm(
    g: &GnnGraph,
    algo: Algorithm,
    settings: &RunSettings,
) -> Result<HagResult, OptimizeError> {
    let cfg = &settings.optimizer;
    let pairs_only = || {
        if cfg.d != 2 || cfg.layer_mode != LayerMode::Single {
            Err(OptimizeError::Config(format!(
                "{algo} builds single-layer HAGs with d = 2"
            )))
        } else {
            Ok(HeuristicOptions {
                ranking: settings.ranking,
                stop_on_nonpositive: cfg.stop_on_nonpositive,
            })
        }
    };
    match algo {
        Algorithm::Full => full_greedy(g, cfg),
        Algorithm::Partial => partial_greedy(g, cfg),
        Algorithm::Degree => Ok(degree_heuristic(g, cfg.k, pairs_only()?)),
        Algorithm::Hub => Ok(hub_heuristic(g, cfg.k, pairs_only()?)),
        Algorithm::Optimal => {
            if cfg.layer_mode != LayerMode::Single {
                return Err(OptimizeError::Config(
                    "the exact oracle is single-layer only".into(),
                ));
            }
            let exact = ExactConfig {
                budget: settings.budget,
                completion: cfg.completion,
                ..ExactConfig::new(cfg.k, cfg.d)
            };
            optimal_single_layer(g, &exact)
        }
    }
}

pub fn load_graph(path: &Path, undirected: bool, remap: Remap) -> Result<EdgeList, Error> {
    let text = fs::read_to_string(path)?;
    let fmt = if undirected {
        EdgeListFormat::undirected()
    } else {
        EdgeListFormat::directed()
    };
    Ok(parse_snap_edge_list(
        &text,
        EdgeListFormat { remap, ..fmt },
    )?)
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeSummary {
    pub value: i64,
    pub k_used: usize,
    pub elapsed_ms: f64,
}

impl fmt::Display for OptimizeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "value={} k_used={} elapsed_ms={:.3}",
            self.value, self.k_used, self.elapsed_ms
        )
    }
}

#[derive(Debug, Serialize)]
struct TraceRow {
    step: usize,
    in_set: String,
    node: NodeId,
    receivers: usize,
    marginal: i64,
    cumulative: i64,
}

pub fn write_trace_csv(res: &HagResult, path: &Path) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    for (i, s) in res.trace.iter().enumerate() {
        w.serialize(TraceRow {
            step: i + 1,
            in_set: s.in_set.iter().join(" "),
            node: s.node,
            receivers: s.receivers,
            marginal: s.marginal,
            cumulative: s.cumulative,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Runs one algorithm on `g`, checks the result against `g`, and writes the
/// HAG and its trace when paths are given.
pub fn cmd_optimize(
    g: &DirectedGraph,
    algo: Algorithm,
    settings: &RunSettings,
    out: Option<&Path>,
    report: Option<&Path>,
) -> Result<(OptimizeSummary, HagResult), Error> {
    let gnn = build_computation_graph(g);
    let res = run_algorithm(&gnn, algo, settings)?;
    let eq = res.graph.verify_equivalence(g);
    if !eq.is_ok() {
        return Err(Error::Validation(format!(
            "{algo} produced a non-equivalent graph: {eq:?}"
        )));
    }
    if let Some(path) = out {
        fs::write(path, serialize_hag(&res.graph))?;
    }
    if let Some(path) = report {
        write_trace_csv(&res, path)?;
    }
    let summary = OptimizeSummary {
        value: res.value(),
        k_used: res.k_used(),
        elapsed_ms: millis(res.stats.elapsed),
    };
    Ok((summary, res))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub kind: &'static str,
    pub algorithm: String,
    pub baseline: String,
    pub value: Option<i64>,
    pub k_used: Option<usize>,
    pub elapsed_ms: Option<f64>,
    pub value_ratio: Option<f64>,
    pub runtime_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn algorithm_rows(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.kind == "algorithm")
    }

    /// Ratio row for `algorithm` against `baseline`.
    pub fn ratio(&self, algorithm: Algorithm, baseline: Algorithm) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| {
            r.kind == "ratio" && r.algorithm == algorithm.name() && r.baseline == baseline.name()
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), Error> {
        write_csv(path, &self.rows)
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `a / b` with `0 / 0 = 1`.
pub fn value_ratio(a: i64, b: i64) -> Option<f64> {
    match (a, b) {
        (0, 0) => Some(1.0),
        (_, 0) => None,
        _ => Some(a as f64 / b as f64),
    }
}

/// Runs each algorithm `repeats` times (runtime is the mean) and reports
/// every ordered pair of value and runtime ratios.
pub fn cmd_compare(
    g: &DirectedGraph,
    settings: &RunSettings,
    algorithms: &[Algorithm],
    repeats: usize,
) -> Result<ComparisonReport, Error> {
    let gnn = build_computation_graph(g);
    let mut results = Vec::new();
    for &algo in algorithms {
        let mut total = Duration::ZERO;
        let mut last = None;
        for _ in 0..repeats.max(1) {
            let res = run_algorithm(&gnn, algo, settings)?;
            total += res.stats.elapsed;
            last = Some(res);
        }
        let res = last.expect("at least one repeat");
        if !res.graph.verify_equivalence(g).is_ok() {
            return Err(Error::Validation(format!(
                "{algo} produced a non-equivalent graph"
            )));
        }
        results.push((
            algo,
            res.value(),
            res.k_used(),
            millis(total) / repeats.max(1) as f64,
        ));
    }
    let mut rows: Vec<ComparisonRow> = results
        .iter()
        .map(|&(algo, value, k_used, ms)| ComparisonRow {
            kind: "algorithm",
            algorithm: algo.name().into(),
            baseline: String::new(),
            value: Some(value),
            k_used: Some(k_used),
            elapsed_ms: Some(ms),
            value_ratio: None,
            runtime_ratio: None,
        })
        .collect();
    for (a, b) in results.iter().cartesian_product(&results) {
        if a.0 == b.0 && std::ptr::eq(a, b) {
            continue;
        }
        rows.push(ComparisonRow {
            kind: "ratio",
            algorithm: a.0.name().into(),
            baseline: b.0.name().into(),
            value: None,
            k_used: None,
            elapsed_ms: None,
            value_ratio: value_ratio(a.1, b.1),
            runtime_ratio: (b.3 > 0.0).then(|| a.3 / b.3),
        });
    }
    Ok(ComparisonReport { rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErExperiment {
    pub n: usize,
    pub p_grid: Vec<f64>,
    pub trials: usize,
    pub k_list: Vec<usize>,
    pub d: usize,
    pub seed: u64,
    pub undirected: bool,
    pub budget: u64,
    pub algorithms: Vec<Algorithm>,
    pub candidate_floor: usize,
    pub stop_on_nonpositive: bool,
}

impl ErExperiment {
    /// 50 trials on `G(15, p)` for `k ∈ {2, 3}`, `d = 2`.
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            n: 15,
            p_grid: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            trials: 50,
            k_list: vec![2, 3],
            d: 2,
            seed,
            undirected: false,
            budget: ExactConfig::new(0, 2).budget,
            algorithms: vec![Algorithm::Full, Algorithm::Partial],
            candidate_floor: 2,
            stop_on_nonpositive: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub algorithm: String,
    pub n: usize,
    pub p: f64,
    pub k: usize,
    pub d: usize,
    pub layer_mode: &'static str,
    pub trial: usize,
    pub seed: u64,
    pub value: i64,
    pub optimal: Option<i64>,
    pub alpha: Option<f64>,
    pub one_minus_alpha: Option<f64>,
    pub elapsed_ms: f64,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub algorithm: String,
    pub n: usize,
    pub p: f64,
    pub k: usize,
    pub d: usize,
    pub trials: usize,
    pub complete_trials: usize,
    pub mean_value: f64,
    pub mean_optimal: Option<f64>,
    pub mean_alpha: Option<f64>,
    pub mean_one_minus_alpha: Option<f64>,
    pub std_one_minus_alpha: Option<f64>,
    pub min_alpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub trials: Vec<TrialRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentReport {
    pub fn write_csv(&self, trials: &Path, aggregates: &Path) -> Result<(), Error> {
        write_csv(trials, &self.trials)?;
        write_csv(aggregates, &self.aggregates)
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Groups trial rows by `(algorithm, p, k)` in first-appearance order.
pub fn aggregate(trials: &[TrialRow]) -> Vec<AggregateRow> {
    let mut groups: Vec<(String, u64, usize, Vec<&TrialRow>)> = Vec::new();
    for t in trials {
        let key = (t.algorithm.clone(), t.p.to_bits(), t.k);
        match groups.iter_mut().find(|g| (g.0.clone(), g.1, g.2) == key) {
            Some(g) => g.3.push(t),
            None => groups.push((key.0, key.1, key.2, vec![t])),
        }
    }
    groups
        .into_iter()
        .map(|(algorithm, _, k, rows)| {
            let done: Vec<&TrialRow> = rows.iter().copied().filter(|r| r.complete).collect();
            let values: Vec<f64> = rows.iter().map(|r| r.value as f64).collect();
            let optimal: Vec<f64> = done
                .iter()
                .filter_map(|r| r.optimal)
                .map(|v| v as f64)
                .collect();
            let alphas: Vec<f64> = done.iter().filter_map(|r| r.alpha).collect();
            let gaps: Vec<f64> = done.iter().filter_map(|r| r.one_minus_alpha).collect();
            AggregateRow {
                algorithm,
                n: rows[0].n,
                p: rows[0].p,
                k,
                d: rows[0].d,
                trials: rows.len(),
                complete_trials: done.len(),
                mean_value: mean(&values).unwrap_or(0.0),
                mean_optimal: mean(&optimal),
                mean_alpha: mean(&alphas),
                mean_one_minus_alpha: mean(&gaps),
                std_one_minus_alpha: std_dev(&gaps),
                min_alpha: alphas.iter().copied().reduce(f64::min),
            }
        })
        .collect()
}

/// Random-graph study: every algorithm against the exact optimum on
/// `trials` graphs per `p`, with trial `t` seeded by `seed + t`.
pub fn cmd_experiment_er(exp: &ErExperiment) -> Result<ExperimentReport, Error> {
    let jobs: Vec<(f64, usize)> = exp
        .p_grid
        .iter()
        .flat_map(|&p| (0..exp.trials).map(move |t| (p, t)))
        .collect();
    let per_job = jobs
        .par_iter()
        .map(|&(p, t)| er_trial(exp, p, t))
        .collect::<Result<Vec<_>, Error>>()?;
    let trials: Vec<TrialRow> = per_job.into_iter().flatten().collect();
    let aggregates = aggregate(&trials);
    Ok(ExperimentReport { trials, aggregates })
}

fn er_trial(exp: &ErExperiment, p: f64, t: usize) -> Result<Vec<TrialRow>, Error> {
    let seed = exp.seed.wrapping_add(t as u64);
    let er = ErConfig {
        undirected: exp.undirected,
        ..ErConfig::new(exp.n, p, seed)
    };
    let g = gen_erdos_renyi(&er)?;
    let gnn = build_computation_graph(&g);
    let mut rows = Vec::new();
    for &k in &exp.k_list {
        let cfg = OptimizerConfig::new(k, exp.d)
            .with_candidate_floor(exp.candidate_floor)
            .with_stop_on_nonpositive(exp.stop_on_nonpositive);
        let settings = RunSettings {
            budget: exp.budget,
            ..RunSettings::new(cfg)
        };
        let optimal = match run_algorithm(&gnn, Algorithm::Optimal, &settings) {
            Ok(res) => Some(res.value()),
            Err(OptimizeError::BudgetExceeded { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        for &algo in &exp.algorithms {
            let res = run_algorithm(&gnn, algo, &settings)?;
            if !res.graph.verify_equivalence(&g).is_ok() {
                return Err(Error::Validation(format!(
                    "{algo} broke equivalence at p = {p}, trial {t}"
                )));
            }
            let ratio = optimal
                .map(|opt| approximation_ratio(res.value(), opt))
                .transpose()?;
            let to_f64 = |r: num_rational::Rational64| *r.numer() as f64 / *r.denom() as f64;
            rows.push(TrialRow {
                algorithm: algo.name().into(),
                n: exp.n,
                p,
                k,
                d: exp.d,
                layer_mode: "single",
                trial: t,
                seed,
                value: res.value(),
                optimal,
                alpha: ratio.map(|r| to_f64(r.alpha)),
                one_minus_alpha: ratio.map(|r| to_f64(r.gap)),
                elapsed_ms: millis(res.stats.elapsed),
                complete: optimal.is_some(),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayersRow {
    pub k: usize,
    pub single: i64,
    pub multi: i64,
    pub improvement_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayersReport {
    pub rows: Vec<LayersRow>,
    pub mean_single: f64,
    pub mean_multi: f64,
    /// Mean over `k` of the per-`k` percentage improvement.
    pub mean_improvement_pct: f64,
    pub std_improvement_pct: f64,
}

impl LayersReport {
    pub fn write_csv(&self, path: &Path) -> Result<(), Error> {
        write_csv(path, &self.rows)
    }
}

impl fmt::Display for LayersReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mean value single-layer: {:.2}", self.mean_single)?;
        writeln!(f, "mean value multi-layer: {:.2}", self.mean_multi)?;
        writeln!(f, "mean % improvement: {:.3}", self.mean_improvement_pct)?;
        write!(
            f,
            "std. dev. of % improvement: {:.6}",
            self.std_improvement_pct
        )
    }
}

/// FullGreedy single- against multi-layer for every budget `1..=k_max`.
///
/// FullGreedy is deterministic and never revisits a step, so the run with
/// budget `k` is the first `k` steps of the run with budget `k_max`.
pub fn cmd_experiment_layers(
    g: &GnnGraph,
    k_max: usize,
    d: usize,
) -> Result<LayersReport, OptimizeError> {
    let cfg = OptimizerConfig::new(k_max, d);
    let single = full_greedy(g, &cfg)?;
    let multi = full_greedy(g, &cfg.with_layer_mode(LayerMode::Multi))?;
    let value_at = |res: &HagResult, k: usize| {
        res.trace[..k.min(res.trace.len())]
            .last()
            .map_or(0, |s| s.cumulative)
    };
    let rows: Vec<LayersRow> = (1..=k_max)
        .map(|k| {
            let (s, m) = (value_at(&single, k), value_at(&multi, k));
            LayersRow {
                k,
                single: s,
                multi: m,
                improvement_pct: match (s, m) {
                    (0, 0) => Some(0.0),
                    (0, _) => None,
                    _ => Some(100.0 * (m - s) as f64 / s as f64),
                },
            }
        })
        .collect();
    let singles: Vec<f64> = rows.iter().map(|r| r.single as f64).collect();
    let multis: Vec<f64> = rows.iter().map(|r| r.multi as f64).collect();
    let pcts: Vec<f64> = rows.iter().filter_map(|r| r.improvement_pct).collect();
    Ok(LayersReport {
        mean_single: mean(&singles).unwrap_or(0.0),
        mean_multi: mean(&multis).unwrap_or(0.0),
        mean_improvement_pct: mean(&pcts).unwrap_or(0.0),
        std_improvement_pct: std_dev(&pcts).unwrap_or(0.0),
        rows,
    })
}

/// Published sizes of the SNAP graphs used in the layer and heuristic
/// studies, as `(name, nodes, edge lines, undirected)`.
pub const KNOWN_DATASETS: [(&str, usize, usize, bool); 3] = [
    ("facebook", 4039, 88234, true),
    ("amazon", 262111, 1234877, false),
    ("email-eu", 1005, 25571, false),
];

/// `F(S)`: value of the best completion of the single-layer partial HAG
/// with in-sets `sets`.
pub fn completion_value(
    g: &GnnGraph,
    sets: &[Vec<NodeId>],
    d: usize,
) -> Result<i64, OptimizeError> {
    let mut p = PartialHag::new(g.node_count(), LayerMode::Single, Some(d));
    for s in sets {
        p.add_intermediate(s)?;
    }
    Ok(optimal_completion(&p, g, CompletionMode::default())?.value())
}

/// Every graph whose first `senders` nodes send and whose next `receivers`
/// nodes each read a subset (size 0 or at least 2) of the senders. Receivers
/// are interchangeable, so in-sets are enumerated as non-decreasing tuples.
pub fn small_graph_family(senders: usize, receivers: usize) -> impl Iterator<Item = DirectedGraph> {
    let mut options: Vec<Vec<NodeId>> = vec![Vec::new()];
    for size in 2..=senders {
        options.extend((0..senders as NodeId).combinations(size));
    }
    let n = senders + receivers;
    (0..receivers)
        .map(|_| 0..options.len())
        .multi_cartesian_product()
        .filter(|idx| idx.windows(2).all(|w| w[0] <= w[1]))
        .map(move |idx| {
            let edges = idx.iter().enumerate().flat_map(|(j, &o)| {
                let r = (senders + j) as NodeId;
                options[o].iter().map(move |&u| (u, r)).collect::<Vec<_>>()
            });
            DirectedGraph::new(n, edges).expect("family graphs are valid")
        })
}

#[derive(Clone, Debug)]
pub struct GapInstance {
    pub graph: DirectedGraph,
    pub full: HagResult,
    pub partial: HagResult,
    pub optimal: HagResult,
}

/// First graph of the family on which FullGreedy reaches exactly
/// `full_value` without a losing step, the optimum is `optimal_value`, and
/// PartialGreedy reaches the optimum.
pub fn find_greedy_gap(
    senders: usize,
    receivers: usize,
    cfg: &OptimizerConfig,
    full_value: i64,
    optimal_value: i64,
) -> Result<Option<GapInstance>, OptimizeError> {
    for graph in small_graph_family(senders, receivers) {
        let g = build_computation_graph(&graph);
        let full = full_greedy(&g, cfg)?;
        if full.value() != full_value || full.trace.iter().any(|s| s.marginal < 0) {
            continue;
        }
        let optimal = optimal_single_layer(&g, &ExactConfig::new(cfg.k, cfg.d))?;
        if optimal.value() != optimal_value {
            continue;
        }
        let partial = partial_greedy(&g, cfg)?;
        if partial.value() == optimal_value {
            return Ok(Some(GapInstance {
                graph,
                full,
                partial,
                optimal,
            }));
        }
    }
    Ok(None)
}

/// In-sets `x`, `y`, `z` with `F(x, y, z) − F(x, y) > F(x, z) − F(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonSubmodularWitness {
    pub graph: DirectedGraph,
    pub x: Vec<NodeId>,
    pub y: Vec<NodeId>,
    pub z: Vec<NodeId>,
    pub f_x: i64,
    pub f_xy: i64,
    pub f_xz: i64,
    pub f_xyz: i64,
}

impl NonSubmodularWitness {
    pub fn late_gain(&self) -> i64 {
        self.f_xyz - self.f_xy
    }

    pub fn early_gain(&self) -> i64 {
        self.f_xz - self.f_x
    }
}

/// First witness in the family where adding `z` gains more after `{x, y}`
/// than after `{x}`, with `F(x) > 0` and neither `y` nor `z` hurting alone.
pub fn find_non_submodular(
    senders: usize,
    receivers: usize,
) -> Result<Option<NonSubmodularWitness>, OptimizeError> {
    for graph in small_graph_family(senders, receivers) {
        let g = build_computation_graph(&graph);
        let pairs: Vec<Vec<NodeId>> = (0..senders as NodeId)
            .combinations(2)
            .filter(|c| {
                (0..g.node_count() as NodeId)
                    .any(|r| c.iter().all(|v| g.in_neighbors(r).contains(v)))
            })
            .collect();
        for x in &pairs {
            let f_x = completion_value(&g, std::slice::from_ref(x), 2)?;
            for (y, z) in pairs
                .iter()
                .tuple_combinations::<(_, _)>()
                .flat_map(|(a, b)| [(a, b), (b, a)])
            {
                if y == x || z == x {
                    continue;
                }
                let f_xy = completion_value(&g, &[x.clone(), y.clone()], 2)?;
                let f_xz = completion_value(&g, &[x.clone(), z.clone()], 2)?;
                let f_xyz = completion_value(&g, &[x.clone(), y.clone(), z.clone()], 2)?;
                if f_x >= 1 && f_xy >= f_x && f_xz >= f_x && f_xyz - f_xy > f_xz - f_x {
                    return Ok(Some(NonSubmodularWitness {
                        graph,
                        x: x.clone(),
                        y: y.clone(),
                        z: z.clone(),
                        f_x,
                        f_xy,
                        f_xz,
                        f_xyz,
                    }));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidateConfig {
    pub seed: u64,
    pub instances: usize,
    pub max_n: usize,
    /// Corrupt one HAG so the equivalence check must fail.
    pub inject_fault: bool,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 200,
            max_n: 9,
            inject_fault: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures.is_empty())
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.failures.is_empty() {
                "PASS"
            } else {
                "FAIL"
            };
            writeln!(f, "{status} {} ({} cases)", c.name, c.cases)?;
            for msg in c.failures.iter().take(10) {
                writeln!(f, "    {msg}")?;
            }
        }
        Ok(())
    }
}

fn random_graph(rng: &mut ChaCha8Rng, max_n: usize) -> DirectedGraph {
    let n = rng.gen_range(3..=max_n.max(3));
    let p = rng.gen_range(0.2..0.9);
    gen_erdos_renyi(&ErConfig::new(n, p, rng.gen())).expect("p is in range")
}

/// Random distinct leaf `d`-sets co-occurring somewhere in `g`.
fn random_in_sets(rng: &mut ChaCha8Rng, g: &GnnGraph, d: usize, count: usize) -> Vec<Vec<NodeId>> {
    let mut pool: Vec<Vec<NodeId>> = (0..g.node_count() as NodeId)
        .flat_map(|r| {
            g.in_neighbors(r)
                .iter()
                .copied()
                .combinations(d)
                .collect::<Vec<_>>()
        })
        .collect();
    pool.sort_unstable();
    pool.dedup();
    pool.shuffle(rng);
    pool.truncate(count);
    pool
}

/// Every matching of the instance, receiver by receiver.
fn all_matchings(p: &PartialHag, g: &GnnGraph, limit: usize) -> Option<Vec<Vec<Vec<NodeId>>>> {
    let instance = build_matching_instance(p, g).ok()?;
    let per: Vec<Vec<Vec<NodeId>>> = instance
        .receivers()
        .iter()
        .map(|h| {
            h.edges
                .iter()
                .powerset()
                .filter(|sel| {
                    let mut seen: Vec<NodeId> = sel
                        .iter()
                        .flat_map(|e| e.vertices.iter().copied())
                        .collect();
                    let total = seen.len();
                    seen.sort_unstable();
                    seen.dedup();
                    seen.len() == total
                })
                .map(|sel| sel.iter().map(|e| e.source).collect())
                .collect()
        })
        .collect();
    let count = per.iter().try_fold(1usize, |acc, o| {
        acc.checked_mul(o.len()).filter(|&c| c <= limit)
    });
    count?;
    Some(per.into_iter().multi_cartesian_product().collect())
}

/// Runs the property suite on seeded random instances.
pub fn cmd_validate(cfg: &ValidateConfig) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut identity = CheckResult {
        name: "matching identity and round trip",
        cases: 0,
        failures: Vec::new(),
    };
    let mut sandwich = CheckResult {
        name: "ordered value between f/d and f",
        cases: 0,
        failures: Vec::new(),
    };
    let mut bound = CheckResult {
        name: "FullGreedy value~ within (1/d)(1-1/e) of optimum",
        cases: 0,
        failures: Vec::new(),
    };
    let mut equivalence = CheckResult {
        name: "optimizer outputs equivalent to input",
        cases: 0,
        failures: Vec::new(),
    };
    let mut cost = CheckResult {
        name: "cost difference equals value",
        cases: 0,
        failures: Vec::new(),
    };
    let mut exec = CheckResult {
        name: "executor states equal and savings equal value",
        cases: 0,
        failures: Vec::new(),
    };
    let floor = 1.0 - (-1.0f64).exp();
    for i in 0..cfg.instances {
        let src = random_graph(&mut rng, cfg.max_n);
        let g = build_computation_graph(&src);
        let d = if i % 2 == 0 { 2 } else { 3 };
        let k = 1 + i % 3;

        let count = rng.gen_range(0..=3);
        let sets = random_in_sets(&mut rng, &g, 2, count);
        let mut p = PartialHag::new(g.node_count(), LayerMode::Single, Some(2));
        for s in &sets {
            p.add_intermediate(s).expect("distinct leaf pairs");
        }
        if let (Some(all), Ok(instance)) = (
            all_matchings(&p, &g, 20_000),
            build_matching_instance(&p, &g),
        ) {
            for sel in all {
                identity.cases += 1;
                let m = match Matching::new(&instance, sel) {
                    Ok(m) => m,
                    Err(e) => {
                        identity.failures.push(format!("instance {i}: {e}"));
                        continue;
                    }
                };
                let hag = phi(&p, &g, &m).expect("valid matching");
                if hag.value() != m.value() as i64 - p.input_cost() || phi_inverse(&hag) != m {
                    identity.failures.push(format!(
                        "instance {i}: identity fails for {:?}",
                        m.per_receiver()
                    ));
                }
            }
        }

        let sets = random_in_sets(&mut rng, &g, d, k);
        let f =
            max_matching_value_f(&g, &sets, d, CompletionMode::default()).expect("small instance");
        for _ in 0..5 {
            let mut order = sets.clone();
            order.shuffle(&mut rng);
            let seq = InSetSequence::new(order).expect("distinct sets");
            let h = greedy_sequence_value_h(&g, &seq, d).expect("valid sequence");
            sandwich.cases += 1;
            if !(f <= d as i64 * h && h <= f) {
                sandwich
                    .failures
                    .push(format!("instance {i}: h = {h}, f = {f}, d = {d}"));
            }
        }

        let literal = OptimizerConfig::new(k, d).with_stop_on_nonpositive(false);
        let greedy = full_greedy(&g, &literal).expect("valid config");
        let exact = ExactConfig::new(k, d).with_objective(Objective::ValueTilde);
        if let Ok(opt) = optimal_single_layer(&g, &exact) {
            bound.cases += 1;
            let ours = greedy.graph.value_tilde(d).expect("d-HAG");
            let best = opt.graph.value_tilde(d).expect("d-HAG");
            if (d as f64) * (ours as f64) < floor * best as f64 {
                bound.failures.push(format!(
                    "instance {i}: greedy {ours}, optimum {best}, d = {d}"
                ));
            }
        }

        let settings = RunSettings::new(OptimizerConfig::new(k, 2));
        let mut outputs: Vec<(Algorithm, HagGraph)> = Algorithm::ALL
            .iter()
            .filter_map(|&a| run_algorithm(&g, a, &settings).ok().map(|r| (a, r.graph)))
            .collect();
        outputs.push((
            Algorithm::Full,
            full_greedy(
                &g,
                &OptimizerConfig::new(k, 2).with_layer_mode(LayerMode::Multi),
            )
            .expect("valid config")
            .graph,
        ));
        if cfg.inject_fault && i == 0 {
            if let Some(bad) = corrupt(&outputs[0].1) {
                outputs.push((Algorithm::Full, bad));
            }
        }
        let plain =
            run_gnn(&g, 3, &node_terms(g.node_count()), &MultisetUnion).expect("three rounds");
        for (algo, hag) in &outputs {
            equivalence.cases += 1;
            let report = hag.verify_equivalence(&src);
            if !report.is_ok() {
                equivalence.failures.push(format!(
                    "instance {i}: {algo} output has {} bad pairs",
                    report.violations.len()
                ));
                continue;
            }
            cost.cases += 1;
            let unit = CostParams::unit();
            if g.cost(&unit) - hag.cost(&unit)
                != num_rational::Rational64::from_integer(hag.value())
            {
                cost.failures
                    .push(format!("instance {i}: {algo} cost identity fails"));
            }
            exec.cases += 1;
            match run_hag(hag, 3, &node_terms(g.node_count()), &MultisetUnion) {
                Ok(fast) => {
                    let savings_ok = plain
                        .ops_per_round
                        .iter()
                        .zip(&fast.ops_per_round)
                        .all(|(a, b)| *a as i64 - *b as i64 == hag.value());
                    if fast.states != plain.states || !savings_ok {
                        exec.failures
                            .push(format!("instance {i}: {algo} execution differs"));
                    }
                }
                Err(e) => exec.failures.push(format!("instance {i}: {algo}: {e}")),
            }
        }
    }
    ValidationReport {
        checks: vec![identity, sandwich, bound, equivalence, cost, exec],
    }
}

/// Gives some receiver fed by an intermediate a second path from one of
/// the intermediate's leaves.
pub fn corrupt(hag: &HagGraph) -> Option<HagGraph> {
    let mut bad = hag.clone();
    for r in 0..hag.node_count() as NodeId {
        if let Some(&m) = hag.receiver_inputs(r).iter().find(|&&v| !hag.is_leaf(v)) {
            let leaf = hag.cover(m).ok()?[0];
            let mut inputs = hag.receiver_inputs(r).to_vec();
            inputs.push(leaf);
            bad.set_receiver_inputs(r, inputs).ok()?;
            return Some(bad);
        }
    }
    // no intermediate in use: add a duplicate edge path through a fresh node
    let r = (0..hag.node_count() as NodeId).find(|&r| hag.receiver_inputs(r).len() >= 2)?;
    let pair = hag.receiver_inputs(r)[..2].to_vec();
    let m = bad.add_intermediate(&pair).ok()?;
    let mut inputs = hag.receiver_inputs(r).to_vec();
    inputs.push(m);
    bad.set_receiver_inputs(r, inputs).ok()?;
    Some(bad)
}
