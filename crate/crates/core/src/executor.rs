//! Runs message-passing rounds over a plain computation graph and over a
//! HAG, counting pairwise aggregation operations.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Debug;

use crate::error::{ExecError, GraphError};
use crate::graph::{GnnGraph, HagGraph, NodeId};

/// A commutative, associative aggregation together with the update that
/// turns an aggregate and the previous state into the next state.
pub trait Aggregate {
    type State: Clone + PartialEq + Debug;
    type Acc: Clone + PartialEq + Debug;

    fn identity(&self) -> Self::Acc;
    fn lift(&self, state: &Self::State) -> Self::Acc;
    fn combine(&self, a: &Self::Acc, b: &Self::Acc) -> Self::Acc;
    fn update(&self, acc: &Self::Acc, prev: &Self::State) -> Self::State;
}

/// Wrapping integer sum. The update packs the pair `(a, h)` as
/// `a·1_000_003 + h`.
#[derive(Clone, Copy, Debug, Default)]
pub struct WrappingSum;

impl Aggregate for WrappingSum {
    type State = i64;
    type Acc = i64;

    fn identity(&self) -> i64 {
        0
    }

    fn lift(&self, state: &i64) -> i64 {
        *state
    }

    fn combine(&self, a: &i64, b: &i64) -> i64 {
        a.wrapping_add(*b)
    }

    fn update(&self, acc: &i64, prev: &i64) -> i64 {
        acc.wrapping_mul(1_000_003).wrapping_add(*prev)
    }
}

/// Symbolic state: a node label, or the pair formed from an aggregated
/// multiset and a previous state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Node(NodeId),
    Pair(Vec<Term>, Box<Term>),
}

/// Sorted multiset union; results are compared exactly.
#[derive(Clone, Copy, Debug, Default)]
pub struct MultisetUnion;

impl Aggregate for MultisetUnion {
    type State = Term;
    type Acc = Vec<Term>;

    fn identity(&self) -> Vec<Term> {
        Vec::new()
    }

    fn lift(&self, state: &Term) -> Vec<Term> {
        vec![state.clone()]
    }

    fn combine(&self, a: &Vec<Term>, b: &Vec<Term>) -> Vec<Term> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                out.push(a[i].clone());
                i += 1;
            } else {
                out.push(b[j].clone());
                j += 1;
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }

    fn update(&self, acc: &Vec<Term>, prev: &Term) -> Term {
        Term::Pair(acc.clone(), Box::new(prev.clone()))
    }
}

/// `h_v = Node(v)` for every node.
pub fn node_terms(n: usize) -> Vec<Term> {
    (0..n as NodeId).map(Term::Node).collect()
}

#[derive(Clone, Debug)]
pub struct RunReport<A: Aggregate> {
    /// `states[k][v]`; round 0 holds the initial states.
    pub states: Vec<Vec<A::State>>,
    /// `aggregates[k - 1][v]` is the aggregate formed in round `k`.
    pub aggregates: Vec<Vec<A::Acc>>,
    pub ops_per_round: Vec<u64>,
}

impl<A: Aggregate> PartialEq for RunReport<A> {
    fn eq(&self, other: &Self) -> bool {
        self.states == other.states
            && self.aggregates == other.aggregates
            && self.ops_per_round == other.ops_per_round
    }
}

impl<A: Aggregate> RunReport<A> {
    pub fn rounds(&self) -> usize {
        self.ops_per_round.len()
    }

    pub fn total_ops(&self) -> u64 {
        self.ops_per_round.iter().sum()
    }

    pub fn final_states(&self) -> &[A::State] {
        self.states.last().expect("round 0 is always present")
    }
}

fn fold<A: Aggregate>(agg: &A, items: impl IntoIterator<Item = A::Acc>, ops: &mut u64) -> A::Acc {
    let mut it = items.into_iter();
    let Some(first) = it.next() else {
        return agg.identity();
    };
    it.fold(first, |acc, x| {
        *ops += 1;
        agg.combine(&acc, &x)
    })
}

fn check_inputs<S>(n: usize, rounds: usize, init: &[S]) -> Result<(), ExecError> {
    if rounds == 0 {
        return Err(ExecError::ZeroRounds);
    }
    if init.len() != n {
        return Err(ExecError::StateCount {
            expected: n,
            found: init.len(),
        });
    }
    Ok(())
}

/// Plain rounds: every node aggregates its in-neighbours' previous states.
pub fn run_gnn<A: Aggregate>(
    g: &GnnGraph,
    rounds: usize,
    init: &[A::State],
    agg: &A,
) -> Result<RunReport<A>, ExecError> {
    let n = g.node_count();
    check_inputs(n, rounds, init)?;
    let mut report = RunReport {
        states: vec![init.to_vec()],
        aggregates: Vec::with_capacity(rounds),
        ops_per_round: Vec::with_capacity(rounds),
    };
    for _ in 0..rounds {
        let prev = report.states.last().expect("non-empty");
        let mut ops = 0;
        let accs: Vec<A::Acc> = (0..n as NodeId)
            .map(|v| {
                fold(
                    agg,
                    g.in_neighbors(v)
                        .iter()
                        .map(|&u| agg.lift(&prev[u as usize])),
                    &mut ops,
                )
            })
            .collect();
        let next = accs
            .iter()
            .zip(prev)
            .map(|(a, h)| agg.update(a, h))
            .collect();
        report.states.push(next);
        report.aggregates.push(accs);
        report.ops_per_round.push(ops);
    }
    Ok(report)
}

/// Rounds with intermediates: intermediates aggregate first in
/// topological order, then every receiver aggregates its inputs.
pub fn run_hag<A: Aggregate>(
    hag: &HagGraph,
    rounds: usize,
    init: &[A::State],
    agg: &A,
) -> Result<RunReport<A>, ExecError> {
    let n = hag.node_count();
    check_inputs(n, rounds, init)?;
    let order = topo_order_m(hag)?;
    let mut report = RunReport {
        states: vec![init.to_vec()],
        aggregates: Vec::with_capacity(rounds),
        ops_per_round: Vec::with_capacity(rounds),
    };
    for _ in 0..rounds {
        let prev = report.states.last().expect("non-empty");
        let mut ops = 0;
        let mut mid: Vec<Option<A::Acc>> = vec![None; hag.intermediate_count()];
        let input = |v: NodeId, mid: &[Option<A::Acc>]| -> A::Acc {
            if hag.is_leaf(v) {
                agg.lift(&prev[v as usize])
            } else {
                mid[v as usize - n].clone().expect("topological order")
            }
        };
        for &m in &order {
            let ins = hag.intermediate(m).expect("ordered ids exist").in_set();
            let acc = fold(agg, ins.iter().map(|&v| input(v, &mid)), &mut ops);
            mid[m as usize - n] = Some(acc);
        }
        let accs: Vec<A::Acc> = (0..n as NodeId)
            .map(|r| {
                fold(
                    agg,
                    hag.receiver_inputs(r).iter().map(|&v| input(v, &mid)),
                    &mut ops,
                )
            })
            .collect();
        let next = accs
            .iter()
            .zip(prev)
            .map(|(a, h)| agg.update(a, h))
            .collect();
        report.states.push(next);
        report.aggregates.push(accs);
        report.ops_per_round.push(ops);
    }
    Ok(report)
}

/// Intermediates ordered so that each follows its inputs; ties go to the
/// smaller id.
pub fn topo_order_m(hag: &HagGraph) -> Result<Vec<NodeId>, GraphError> {
    let in_sets: Vec<Vec<NodeId>> = hag
        .intermediates()
        .iter()
        .map(|m| m.in_set().to_vec())
        .collect();
    topo_order(hag.node_count(), &in_sets)
}

/// Kahn's algorithm over intermediates `n, n + 1, ...` with the given
/// in-sets; ids below `n` are leaves.
pub fn topo_order(n: usize, in_sets: &[Vec<NodeId>]) -> Result<Vec<NodeId>, GraphError> {
    let k = in_sets.len();
    let mut indegree = vec![0usize; k];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, ins) in in_sets.iter().enumerate() {
        for &v in ins {
            if (v as usize) < n {
                continue;
            }
            let j = v as usize - n;
            if j >= k {
                return Err(GraphError::UnknownNode { node: v });
            }
            indegree[i] += 1;
            users[j].push(i);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..k).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(k);
    while let Some(Reverse(i)) = ready.pop() {
        order.push((n + i) as NodeId);
        for &u in &users[i] {
            indegree[u] -= 1;
            if indegree[u] == 0 {
                ready.push(Reverse(u));
            }
        }
    }
    if order.len() < k {
        return Err(GraphError::Cycle);
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_computation_graph, fixtures::*, DirectedGraph, LayerMode};

    #[test]
    fn twin_graph_union() {
        let g = build_computation_graph(&twin_graph());
        let run = run_gnn(&g, 1, &node_terms(5), &MultisetUnion).unwrap();
        assert_eq!(run.aggregates[0][2], vec![Term::Node(A), Term::Node(B)]);
        assert_eq!(run.total_ops(), 3);
        assert_eq!(run.aggregates[0][A as usize], Vec::new());

        let hag = twin_hag();
        let fast = run_hag(&hag, 1, &node_terms(5), &MultisetUnion).unwrap();
        assert_eq!(fast.total_ops(), 1);
        assert_eq!(run.total_ops() - fast.total_ops(), hag.value() as u64);
        assert_eq!(fast.states, run.states);
    }

    #[test]
    fn no_edges() {
        let g = build_computation_graph(&DirectedGraph::empty(3));
        let run = run_gnn(&g, 2, &[1, 2, 3], &WrappingSum).unwrap();
        assert_eq!(run.total_ops(), 0);
        assert!(run.aggregates.iter().flatten().all(|&a| a == 0));
    }

    #[test]
    fn two_cycle_sum() {
        let g = build_computation_graph(&DirectedGraph::new(2, [(0, 1), (1, 0)]).unwrap());
        let run = run_gnn(&g, 2, &[1, 2], &WrappingSum).unwrap();
        // round 1: h0 = 2·c + 1, h1 = 1·c + 2 with c = 1_000_003
        let c = 1_000_003i64;
        assert_eq!(run.states[1], vec![2 * c + 1, c + 2]);
        assert_eq!(
            run.states[2],
            vec![(c + 2) * c + 2 * c + 1, (2 * c + 1) * c + c + 2]
        );
        assert_eq!(run.ops_per_round, vec![0, 0]);
    }

    #[test]
    fn empty_hag_matches_plain_run() {
        let g = build_computation_graph(&twin_graph());
        let hag = HagGraph::from_gnn(&g, LayerMode::Single, Some(2));
        let a = run_gnn(&g, 3, &node_terms(5), &MultisetUnion).unwrap();
        let b = run_hag(&hag, 3, &node_terms(5), &MultisetUnion).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_of_intermediates() {
        // receivers 3 and 4 read {0, 1, 2}
        let src = DirectedGraph::new(5, [(0, 3), (1, 3), (2, 3), (0, 4), (1, 4), (2, 4)]).unwrap();
        let g = build_computation_graph(&src);
        let mut hag = HagGraph::from_gnn(&g, LayerMode::Multi, Some(2));
        let m1 = hag.add_intermediate(&[0, 1]).unwrap();
        let m2 = hag.add_intermediate(&[m1, 2]).unwrap();
        hag.set_receiver_inputs(3, vec![m2]).unwrap();
        hag.set_receiver_inputs(4, vec![m2]).unwrap();
        assert!(hag.verify_equivalence(&src).is_ok());
        assert_eq!(topo_order_m(&hag).unwrap(), vec![m1, m2]);
        let a = run_gnn(&g, 3, &node_terms(5), &MultisetUnion).unwrap();
        let b = run_hag(&hag, 3, &node_terms(5), &MultisetUnion).unwrap();
        assert_eq!(a.states, b.states);
        for (x, y) in a.ops_per_round.iter().zip(&b.ops_per_round) {
            assert_eq!(x - y, hag.value() as u64);
        }
    }

    #[test]
    fn topo_order_cases() {
        assert_eq!(
            topo_order(3, &[vec![0, 1], vec![2, 0]]).unwrap(),
            vec![3, 4]
        );
        assert_eq!(
            topo_order(3, &[vec![4, 0], vec![1, 2]]).unwrap(),
            vec![4, 3]
        );
        assert_eq!(
            topo_order(3, &[vec![4, 0], vec![3, 1]]),
            Err(GraphError::Cycle)
        );
        assert_eq!(
            topo_order(3, &[vec![9, 0]]),
            Err(GraphError::UnknownNode { node: 9 })
        );
    }

    #[test]
    fn argument_errors() {
        let g = build_computation_graph(&twin_graph());
        assert_eq!(
            run_gnn(&g, 0, &[0; 5], &WrappingSum).unwrap_err(),
            ExecError::ZeroRounds
        );
        assert_eq!(
            run_hag(&twin_hag(), 1, &[0; 4], &WrappingSum).unwrap_err(),
            ExecError::StateCount {
                expected: 5,
                found: 4
            }
        );
    }
}
