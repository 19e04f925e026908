//! Graph types shared by every optimizer.
//!
//! A [`DirectedGraph`] is expanded into a bipartite [`GnnGraph`] whose left
//! side sends and whose right side aggregates. A [`HagGraph`] adds
//! intermediate aggregation nodes between the two sides.
//!
//! Node ids: leaves (the left copy of `V`) use ids `0..n`, intermediates use
//! `n, n + 1, ...` in creation order, and receivers (the right copy of `V`) are
//! addressed by their original vertex id through receiver-specific accessors.
//! An intermediate may only take leaves and earlier intermediates as inputs, so
//! creation order is always a topological order.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;

pub type NodeId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirectedGraph {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
}

impl DirectedGraph {
    /// Builds a graph from an edge iterator; duplicate edges collapse.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut edges: Vec<_> = edges.into_iter().collect();
        if let Some(&(u, v)) = edges
            .iter()
            .find(|&&(u, v)| u as usize >= node_count || v as usize >= node_count)
        {
            let node = if u as usize >= node_count { u } else { v };
            return Err(GraphError::UnknownNode { node });
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { node_count, edges })
    }

    pub fn empty(node_count: usize) -> Self {
        Self {
            node_count,
            edges: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Edges in ascending `(source, target)` order.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.binary_search(&(u, v)).is_ok()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for &(u, _) in &self.edges {
            deg[u as usize] += 1;
        }
        deg
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for &(_, v) in &self.edges {
            deg[v as usize] += 1;
        }
        deg
    }

    /// Renames node `i` to `perm[i]`. `perm` must be a permutation of `0..n`.
    pub fn relabel(&self, perm: &[NodeId]) -> Self {
        assert_eq!(perm.len(), self.node_count, "permutation length");
        let edges = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u as usize], perm[v as usize]));
        Self::new(self.node_count, edges).expect("permutation keeps ids in range")
    }
}

/// Bipartite `(L, R)` expansion of a directed graph: edge `(u, v)` becomes
/// `u_L -> v_R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GnnGraph {
    in_neighbors: Vec<Vec<NodeId>>,
    out_neighbors: Vec<Vec<NodeId>>,
    edge_count: usize,
}

pub fn build_computation_graph(g: &DirectedGraph) -> GnnGraph {
    let n = g.node_count();
    let mut in_neighbors = vec![Vec::new(); n];
    let mut out_neighbors = vec![Vec::new(); n];
    // edges are sorted by source, so in-neighbor lists come out sorted too
    for &(u, v) in g.edges() {
        in_neighbors[v as usize].push(u);
        out_neighbors[u as usize].push(v);
    }
    GnnGraph {
        in_neighbors,
        out_neighbors,
        edge_count: g.edge_count(),
    }
}

impl GnnGraph {
    pub fn node_count(&self) -> usize {
        self.in_neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Senders requested by receiver `r`, ascending.
    pub fn in_neighbors(&self, r: NodeId) -> &[NodeId] {
        &self.in_neighbors[r as usize]
    }

    /// Receivers requesting sender `l`, ascending.
    pub fn out_neighbors(&self, l: NodeId) -> &[NodeId] {
        &self.out_neighbors[l as usize]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.out_neighbors
            .iter()
            .enumerate()
            .flat_map(|(u, outs)| outs.iter().map(move |&v| (u as NodeId, v)))
    }

    pub fn to_directed(&self) -> DirectedGraph {
        DirectedGraph {
            node_count: self.node_count(),
            edges: self.edges().collect(),
        }
    }

    /// Aggregation cost with each vertex term clamped at zero.
    pub fn cost(&self, params: &CostParams) -> Rational64 {
        let agg_steps: i64 = self
            .in_neighbors
            .iter()
            .map(|ins| ins.len().saturating_sub(1) as i64)
            .sum();
        params.aggregate * agg_steps + params.update * self.node_count() as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LayerMode {
    /// Intermediates take only leaves as inputs (tripartite graph).
    #[default]
    Single,
    /// Intermediates may also take earlier intermediates as inputs.
    Multi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostParams {
    pub aggregate: Rational64,
    pub update: Rational64,
}

impl CostParams {
    pub fn new(aggregate: Rational64, update: Rational64) -> Self {
        assert!(
            aggregate > Rational64::from_integer(0),
            "aggregation cost must be positive"
        );
        assert!(
            update >= Rational64::from_integer(0),
            "update cost must be nonnegative"
        );
        Self { aggregate, update }
    }

    pub fn unit() -> Self {
        Self::new(Rational64::from_integer(1), Rational64::from_integer(1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Intermediate {
    id: NodeId,
    in_set: Vec<NodeId>,
    cover: Vec<NodeId>,
}

impl Intermediate {
    pub fn id(&self) -> NodeId {
        self.id
    }

    /// Inputs, ascending.
    pub fn in_set(&self) -> &[NodeId] {
        &self.in_set
    }

    /// Leaves reaching this node, ascending. Cached at creation.
    pub fn cover(&self) -> &[NodeId] {
        &self.cover
    }
}

/// The `L ∪ M` part of a HAG: intermediates with their inputs but no edges
/// into the receivers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialHag {
    node_count: usize,
    intermediates: Vec<Intermediate>,
    layer_mode: LayerMode,
    degree: Option<usize>,
}

impl PartialHag {
    pub fn new(node_count: usize, layer_mode: LayerMode, degree: Option<usize>) -> Self {
        Self {
            node_count,
            intermediates: Vec::new(),
            layer_mode,
            degree,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn layer_mode(&self) -> LayerMode {
        self.layer_mode
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree
    }

    pub fn intermediates(&self) -> &[Intermediate] {
        &self.intermediates
    }

    pub fn intermediate_count(&self) -> usize {
        self.intermediates.len()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        (id as usize) < self.node_count
    }

    /// Id the next intermediate will receive.
    pub fn next_id(&self) -> NodeId {
        (self.node_count + self.intermediates.len()) as NodeId
    }

    pub fn contains(&self, id: NodeId) -> bool {
        (id as usize) < self.node_count + self.intermediates.len()
    }

    pub fn intermediate(&self, id: NodeId) -> Option<&Intermediate> {
        (id as usize)
            .checked_sub(self.node_count)
            .and_then(|i| self.intermediates.get(i))
    }

    /// Leaves with a path to `id`; `{id}` for a leaf.
    pub fn cover(&self, id: NodeId) -> Result<Cow<'_, [NodeId]>, GraphError> {
        if self.is_leaf(id) {
            Ok(Cow::Owned(vec![id]))
        } else {
            self.intermediate(id)
                .map(|m| Cow::Borrowed(m.cover()))
                .ok_or(GraphError::UnknownNode { node: id })
        }
    }

    pub fn cover_len(&self, id: NodeId) -> usize {
        if self.is_leaf(id) {
            1
        } else {
            self.intermediate(id).map_or(0, |m| m.cover.len())
        }
    }

    /// Union of the covers of `in_set`, which must be pairwise disjoint.
    pub fn union_cover(&self, in_set: &[NodeId]) -> Result<Vec<NodeId>, GraphError> {
        let mut owner: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for &member in in_set {
            for &leaf in self.cover(member)?.iter() {
                if let Some(prev) = owner.insert(leaf, member) {
                    return Err(if prev == member {
                        GraphError::DuplicateMember { node: member }
                    } else {
                        GraphError::OverlappingCovers {
                            first: prev.min(member),
                            second: prev.max(member),
                        }
                    });
                }
            }
        }
        Ok(owner.into_keys().collect())
    }

    /// Appends an intermediate aggregating `in_set` and returns its id.
    ///
    /// Checks the in-degree bound, the layer mode, and that the inputs have
    /// pairwise disjoint covers. Duplicate covers are accepted here and caught
    /// by [`HagGraph::check_invariants`].
    pub fn add_intermediate(&mut self, in_set: &[NodeId]) -> Result<NodeId, GraphError> {
        let mut in_set = in_set.to_vec();
        in_set.sort_unstable();
        if let Some(w) = in_set.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateMember { node: w[0] });
        }
        if let Some(d) = self.degree {
            if in_set.len() != d {
                return Err(GraphError::DegreeMismatch {
                    expected: d,
                    found: in_set.len(),
                });
            }
        }
        for &member in &in_set {
            if !self.contains(member) {
                return Err(GraphError::UnknownNode { node: member });
            }
            if self.layer_mode == LayerMode::Single && !self.is_leaf(member) {
                return Err(GraphError::LayerViolation { member });
            }
        }
        let cover = self.union_cover(&in_set)?;
        if cover.len() < 2 {
            return Err(GraphError::CoverTooSmall { size: cover.len() });
        }
        let id = self.next_id();
        self.intermediates.push(Intermediate { id, in_set, cover });
        Ok(id)
    }

    /// `c(P)`: sum over intermediates of `|in| - 1`.
    pub fn input_cost(&self) -> i64 {
        self.intermediates
            .iter()
            .map(|m| m.in_set.len() as i64 - 1)
            .sum()
    }

    /// Pairs of intermediates sharing a cover, first id ascending.
    pub fn duplicate_covers(&self) -> Vec<(NodeId, NodeId)> {
        let mut seen: HashMap<&[NodeId], NodeId> = HashMap::new();
        let mut dups = Vec::new();
        for m in &self.intermediates {
            if let Some(&first) = seen.get(m.cover.as_slice()) {
                dups.push((first, m.id));
            } else {
                seen.insert(&m.cover, m.id);
            }
        }
        dups
    }

    pub(crate) fn recompute_cover(&self, id: NodeId) -> Result<Vec<NodeId>, GraphError> {
        let m = self
            .intermediate(id)
            .ok_or(GraphError::NotIntermediate { node: id })?;
        let mut cover = Vec::new();
        let mut stack: Vec<NodeId> = m.in_set.clone();
        while let Some(v) = stack.pop() {
            if self.is_leaf(v) {
                cover.push(v);
            } else {
                let inner = self
                    .intermediate(v)
                    .ok_or(GraphError::UnknownNode { node: v })?;
                stack.extend_from_slice(&inner.in_set);
            }
        }
        cover.sort_unstable();
        cover.dedup();
        Ok(cover)
    }
}

/// A HAG computation graph: leaves, intermediates, and receivers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HagGraph {
    partial: PartialHag,
    receiver_inputs: Vec<Vec<NodeId>>,
}

/// Result of comparing a HAG against its source graph path by path.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub node_count_mismatch: Option<(usize, usize)>,
    pub violations: Vec<PathViolation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathViolation {
    pub sender: NodeId,
    pub receiver: NodeId,
    /// Directed paths `sender_L -> receiver_R` found in the HAG.
    pub paths: u64,
    /// 1 if the source graph has the edge, else 0.
    pub expected: u64,
}

impl EquivalenceReport {
    pub fn is_ok(&self) -> bool {
        self.node_count_mismatch.is_none() && self.violations.is_empty()
    }
}

impl HagGraph {
    /// The plain computation graph seen as a HAG with no intermediates.
    pub fn from_gnn(g: &GnnGraph, layer_mode: LayerMode, degree: Option<usize>) -> Self {
        Self {
            partial: PartialHag::new(g.node_count(), layer_mode, degree),
            receiver_inputs: g.in_neighbors.clone(),
        }
    }

    /// Receivers start with no inputs; fill them with
    /// [`HagGraph::set_receiver_inputs`].
    pub fn from_partial(partial: PartialHag) -> Self {
        let n = partial.node_count;
        Self {
            partial,
            receiver_inputs: vec![Vec::new(); n],
        }
    }

    pub fn partial(&self) -> &PartialHag {
        &self.partial
    }

    pub fn into_partial(self) -> PartialHag {
        self.partial
    }

    pub fn node_count(&self) -> usize {
        self.partial.node_count
    }

    pub fn layer_mode(&self) -> LayerMode {
        self.partial.layer_mode
    }

    pub fn degree(&self) -> Option<usize> {
        self.partial.degree
    }

    pub fn intermediates(&self) -> &[Intermediate] {
        &self.partial.intermediates
    }

    pub fn intermediate(&self, id: NodeId) -> Option<&Intermediate> {
        self.partial.intermediate(id)
    }

    pub fn intermediate_count(&self) -> usize {
        self.partial.intermediates.len()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.partial.is_leaf(id)
    }

    pub fn cover(&self, id: NodeId) -> Result<Cow<'_, [NodeId]>, GraphError> {
        self.partial.cover(id)
    }

    pub fn add_intermediate(&mut self, in_set: &[NodeId]) -> Result<NodeId, GraphError> {
        self.partial.add_intermediate(in_set)
    }

    /// Inputs of receiver `r`, ascending.
    pub fn receiver_inputs(&self, r: NodeId) -> &[NodeId] {
        &self.receiver_inputs[r as usize]
    }

    pub fn set_receiver_inputs(
        &mut self,
        r: NodeId,
        inputs: Vec<NodeId>,
    ) -> Result<(), GraphError> {
        if r as usize >= self.node_count() {
            return Err(GraphError::UnknownNode { node: r });
        }
        let mut inputs = inputs;
        inputs.sort_unstable();
        if let Some(w) = inputs.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateMember { node: w[0] });
        }
        if let Some(&bad) = inputs.iter().find(|&&v| !self.partial.contains(v)) {
            return Err(GraphError::UnknownNode { node: bad });
        }
        self.receiver_inputs[r as usize] = inputs;
        Ok(())
    }

    /// Number of receivers fed by each intermediate, indexed by creation order.
    pub fn receiver_out_degrees(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut deg = vec![0; self.intermediate_count()];
        for inputs in &self.receiver_inputs {
            for &v in inputs {
                if v as usize >= n {
                    deg[v as usize - n] += 1;
                }
            }
        }
        deg
    }

    /// Receivers fed directly by `source`, ascending.
    pub fn out_receivers(&self, source: NodeId) -> Vec<NodeId> {
        self.receiver_inputs
            .iter()
            .enumerate()
            .filter(|(_, ins)| ins.binary_search(&source).is_ok())
            .map(|(r, _)| r as NodeId)
            .collect()
    }

    /// Leaf-to-intermediate edges `(leaf, m)`.
    pub fn edges_left_to_mid(&self) -> Vec<(NodeId, NodeId)> {
        self.mid_input_edges(true)
    }

    /// Intermediate-to-intermediate edges `(m', m)`.
    pub fn edges_mid_to_mid(&self) -> Vec<(NodeId, NodeId)> {
        self.mid_input_edges(false)
    }

    /// Intermediate-to-receiver edges `(m, r)`.
    pub fn edges_mid_to_right(&self) -> Vec<(NodeId, NodeId)> {
        self.receiver_edges(false)
    }

    /// Residual leaf-to-receiver edges `(leaf, r)`.
    pub fn edges_left_to_right(&self) -> Vec<(NodeId, NodeId)> {
        self.receiver_edges(true)
    }

    fn mid_input_edges(&self, leaves: bool) -> Vec<(NodeId, NodeId)> {
        self.intermediates()
            .iter()
            .flat_map(|m| {
                m.in_set
                    .iter()
                    .filter(move |&&v| self.is_leaf(v) == leaves)
                    .map(move |&v| (v, m.id))
            })
            .collect()
    }

    fn receiver_edges(&self, leaves: bool) -> Vec<(NodeId, NodeId)> {
        let mut edges: Vec<_> = self
            .receiver_inputs
            .iter()
            .enumerate()
            .flat_map(|(r, ins)| {
                ins.iter()
                    .filter(move |&&v| self.is_leaf(v) == leaves)
                    .map(move |&v| (v, r as NodeId))
            })
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Cost savings in units of the aggregation cost:
    /// `Σ_m |out_R(m)|·(|cover(m)| − 1) − (|in(m)| − 1)`.
    ///
    /// Only edges into receivers count toward `out_R`; edges feeding other
    /// intermediates are paid for by the consumer's own in-degree term.
    pub fn value(&self) -> i64 {
        let out = self.receiver_out_degrees();
        self.intermediates()
            .iter()
            .zip(out)
            .map(|(m, out)| out as i64 * (m.cover.len() as i64 - 1) - (m.in_set.len() as i64 - 1))
            .sum()
    }

    /// Single-layer form `Σ_m (|out(m)| − 1)(|in(m)| − 1)`; only meaningful
    /// when no intermediate feeds another.
    pub fn single_layer_value(&self) -> i64 {
        let out = self.receiver_out_degrees();
        self.intermediates()
            .iter()
            .zip(out)
            .map(|(m, out)| (out as i64 - 1) * (m.in_set.len() as i64 - 1))
            .sum()
    }

    /// `value + |M|·(d − 1)`; every intermediate must have in-degree `d`.
    pub fn value_tilde(&self, d: usize) -> Result<i64, GraphError> {
        if let Some(m) = self.intermediates().iter().find(|m| m.in_set.len() != d) {
            return Err(GraphError::DegreeMismatch {
                expected: d,
                found: m.in_set.len(),
            });
        }
        Ok(self.value() + self.intermediate_count() as i64 * (d as i64 - 1))
    }

    /// Aggregation cost with each vertex term clamped at zero.
    pub fn cost(&self, params: &CostParams) -> Rational64 {
        let mid: i64 = self
            .intermediates()
            .iter()
            .map(|m| m.in_set.len().saturating_sub(1) as i64)
            .sum();
        let right: i64 = self
            .receiver_inputs
            .iter()
            .map(|ins| ins.len().saturating_sub(1) as i64)
            .sum();
        params.aggregate * (mid + right) + params.update * self.node_count() as i64
    }

    /// Counts `u_L -> v_R` paths for every pair and compares with `g`.
    pub fn verify_equivalence(&self, g: &DirectedGraph) -> EquivalenceReport {
        let mut report = EquivalenceReport::default();
        if g.node_count() != self.node_count() {
            report.node_count_mismatch = Some((self.node_count(), g.node_count()));
            return report;
        }
        let n = self.node_count();
        // path multiplicities from each leaf, per intermediate (creation order is topological)
        let mut paths: Vec<BTreeMap<NodeId, u64>> = Vec::with_capacity(self.intermediate_count());
        for m in self.intermediates() {
            let mut acc = BTreeMap::new();
            for &v in &m.in_set {
                add_paths(&mut acc, v, n, &paths);
            }
            paths.push(acc);
        }
        let mut expected: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &(u, v) in g.edges() {
            expected[v as usize].push(u);
        }
        for (r, inputs) in self.receiver_inputs.iter().enumerate() {
            let mut acc = BTreeMap::new();
            for &v in inputs {
                add_paths(&mut acc, v, n, &paths);
            }
            let want = &expected[r];
            for (&sender, &count) in &acc {
                let exp = u64::from(want.binary_search(&sender).is_ok());
                if count != exp {
                    report.violations.push(PathViolation {
                        sender,
                        receiver: r as NodeId,
                        paths: count,
                        expected: exp,
                    });
                }
            }
            for &sender in want {
                if !acc.contains_key(&sender) {
                    report.violations.push(PathViolation {
                        sender,
                        receiver: r as NodeId,
                        paths: 0,
                        expected: 1,
                    });
                }
            }
        }
        report.violations.sort_by_key(|v| (v.receiver, v.sender));
        report
    }

    /// Checks every structural invariant: cached covers, in-degree bound,
    /// layer mode, backward references, distinct covers, valid receiver inputs.
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        let p = &self.partial;
        for m in p.intermediates() {
            if let Some(d) = p.degree {
                if m.in_set.len() != d {
                    return Err(GraphError::DegreeMismatch {
                        expected: d,
                        found: m.in_set.len(),
                    });
                }
            }
            for &v in &m.in_set {
                if v >= m.id {
                    return Err(GraphError::ForwardReference {
                        node: m.id,
                        member: v,
                    });
                }
                if p.layer_mode == LayerMode::Single && !p.is_leaf(v) {
                    return Err(GraphError::LayerViolation { member: v });
                }
            }
            let cover = p.recompute_cover(m.id)?;
            if cover != m.cover || p.union_cover(&m.in_set)? != cover {
                return Err(GraphError::StaleCover { node: m.id });
            }
            if cover.len() < 2 {
                return Err(GraphError::CoverTooSmall { size: cover.len() });
            }
        }
        if let Some(&(first, second)) = p.duplicate_covers().first() {
            return Err(GraphError::DuplicateCover { first, second });
        }
        for inputs in &self.receiver_inputs {
            if let Some(&bad) = inputs.iter().find(|&&v| !p.contains(v)) {
                return Err(GraphError::UnknownNode { node: bad });
            }
        }
        Ok(())
    }

    /// Merges intermediates with identical covers into the earliest one and
    /// renumbers the survivors densely. Out-edges of removed nodes move to the
    /// survivor, so equivalence is preserved and the value never drops.
    pub fn dedupe_intermediates(&self) -> HagGraph {
        let n = self.node_count();
        let mut survivor_of_cover: HashMap<&[NodeId], NodeId> = HashMap::new();
        let mut remap: Vec<NodeId> = Vec::with_capacity(self.intermediate_count());
        let mut out = PartialHag::new(n, self.layer_mode(), self.degree());
        let map_id = |v: NodeId, remap: &[NodeId]| -> NodeId {
            if (v as usize) < n {
                v
            } else {
                remap[v as usize - n]
            }
        };
        for m in self.intermediates() {
            if let Some(&survivor) = survivor_of_cover.get(m.cover.as_slice()) {
                remap.push(survivor);
                continue;
            }
            let mut in_set: Vec<NodeId> = m.in_set.iter().map(|&v| map_id(v, &remap)).collect();
            in_set.sort_unstable();
            let id = out.next_id();
            out.intermediates.push(Intermediate {
                id,
                in_set,
                cover: m.cover.clone(),
            });
            survivor_of_cover.insert(&m.cover, id);
            remap.push(id);
        }
        let receiver_inputs = self
            .receiver_inputs
            .iter()
            .map(|ins| {
                let mut mapped: Vec<NodeId> = ins.iter().map(|&v| map_id(v, &remap)).collect();
                mapped.sort_unstable();
                mapped.dedup();
                mapped
            })
            .collect();
        HagGraph {
            partial: out,
            receiver_inputs,
        }
    }
}

fn add_paths(
    acc: &mut BTreeMap<NodeId, u64>,
    v: NodeId,
    n: usize,
    paths: &[BTreeMap<NodeId, u64>],
) {
    if (v as usize) < n {
        *acc.entry(v).or_insert(0) += 1;
    } else if let Some(inner) = paths.get(v as usize - n) {
        for (&leaf, &c) in inner {
            *acc.entry(leaf).or_insert(0) += c;
        }
    }
}

/// Free-function form of [`PartialHag::cover`] for callers holding a HAG.
pub fn cover(g: &HagGraph, v: NodeId) -> Result<Vec<NodeId>, GraphError> {
    g.cover(v).map(Cow::into_owned)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn r(v: i64) -> Rational64 {
        Rational64::from_integer(v)
    }

    #[test]
    fn computation_graph_shapes() {
        let g = build_computation_graph(&DirectedGraph::empty(3));
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 0);

        let g = build_computation_graph(&DirectedGraph::new(2, [(0, 1)]).unwrap());
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);

        let g = build_computation_graph(&twin_graph());
        assert_eq!(g.edge_count(), 6);
        assert_eq!(g.in_neighbors(2), &[A, B]);
        assert_eq!(g.out_neighbors(A), &[2, 3, 4]);
        assert_eq!(g.to_directed(), twin_graph());
    }

    #[test]
    fn directed_graph_rejects_out_of_range_and_dedups() {
        assert_eq!(
            DirectedGraph::new(2, [(0, 2)]),
            Err(GraphError::UnknownNode { node: 2 })
        );
        let g = DirectedGraph::new(2, [(0, 1), (0, 1), (1, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 1)]);
    }

    #[test]
    fn cover_cases() {
        let g = build_computation_graph(&DirectedGraph::new(4, [(0, 3), (1, 3), (2, 3)]).unwrap());
        let mut hag = HagGraph::from_gnn(&g, LayerMode::Multi, Some(2));
        assert_eq!(cover(&hag, 2).unwrap(), vec![2]);
        let m1 = hag.add_intermediate(&[0, 1]).unwrap();
        assert_eq!(cover(&hag, m1).unwrap(), vec![0, 1]);
        let m2 = hag.add_intermediate(&[m1, 2]).unwrap();
        assert_eq!(cover(&hag, m2).unwrap(), vec![0, 1, 2]);
        assert_eq!(hag.partial().recompute_cover(m2).unwrap(), vec![0, 1, 2]);
        assert_eq!(cover(&hag, 99), Err(GraphError::UnknownNode { node: 99 }));
    }

    #[test]
    fn add_intermediate_validation() {
        let g = build_computation_graph(&twin_graph());
        let mut hag = HagGraph::from_gnn(&g, LayerMode::Single, Some(2));
        assert_eq!(
            hag.add_intermediate(&[0]),
            Err(GraphError::DegreeMismatch {
                expected: 2,
                found: 1
            })
        );
        assert_eq!(
            hag.add_intermediate(&[0, 0]),
            Err(GraphError::DuplicateMember { node: 0 })
        );
        let m = hag.add_intermediate(&[0, 1]).unwrap();
        assert_eq!(
            hag.add_intermediate(&[m, 2]),
            Err(GraphError::LayerViolation { member: m })
        );

        let mut multi = HagGraph::from_gnn(&g, LayerMode::Multi, Some(2));
        let m = multi.add_intermediate(&[0, 1]).unwrap();
        assert_eq!(
            multi.add_intermediate(&[m, 0]),
            Err(GraphError::OverlappingCovers {
                first: 0,
                second: m
            })
        );

        let mut free = HagGraph::from_gnn(&g, LayerMode::Single, None);
        assert_eq!(
            free.add_intermediate(&[3]),
            Err(GraphError::CoverTooSmall { size: 1 })
        );
    }

    #[test]
    fn cost_examples() {
        let unit = CostParams::unit();
        let g = build_computation_graph(&twin_graph());
        assert_eq!(g.cost(&unit), r(8));
        assert_eq!(twin_hag().cost(&unit), r(6));
        let no_update = CostParams::new(r(1), r(0));
        assert_eq!(
            build_computation_graph(&DirectedGraph::empty(4)).cost(&no_update),
            r(0)
        );
    }

    #[test]
    fn value_examples() {
        let g = build_computation_graph(&twin_graph());
        let empty = HagGraph::from_gnn(&g, LayerMode::Single, Some(2));
        assert_eq!(empty.value(), 0);
        assert_eq!(empty.value_tilde(2), Ok(0));

        let hag = twin_hag();
        assert_eq!(hag.value(), 2);
        assert_eq!(hag.single_layer_value(), 2);
        assert_eq!(hag.value_tilde(2), Ok(3));
        let unit = CostParams::unit();
        assert_eq!(g.cost(&unit) - hag.cost(&unit), r(hag.value()));

        let ps = build_computation_graph(&pair_share());
        let mut hag = HagGraph::from_gnn(&ps, LayerMode::Single, Some(2));
        let m = hag.add_intermediate(&[A, B]).unwrap();
        hag.set_receiver_inputs(2, vec![m]).unwrap();
        hag.set_receiver_inputs(3, vec![m]).unwrap();
        assert_eq!(hag.value(), 1);
        assert_eq!(hag.single_layer_value(), 1);
        assert_eq!(hag.value_tilde(2), Ok(2));
        assert_eq!(
            hag.value_tilde(3),
            Err(GraphError::DegreeMismatch {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn cost_identity_with_fractional_params() {
        let params = CostParams::new(Rational64::new(3, 2), Rational64::new(7, 3));
        let g = build_computation_graph(&twin_graph());
        let hag = twin_hag();
        assert_eq!(
            g.cost(&params) - hag.cost(&params),
            params.aggregate * hag.value()
        );
    }

    #[test]
    fn equivalence_examples() {
        let src = pair_share();
        let g = build_computation_graph(&src);
        let hag = HagGraph::from_gnn(&g, LayerMode::Single, Some(2));
        assert!(hag.verify_equivalence(&src).is_ok());

        let mut bad = hag.clone();
        let m = bad.add_intermediate(&[A, B]).unwrap();
        bad.set_receiver_inputs(2, vec![A, B, m]).unwrap();
        let report = bad.verify_equivalence(&src);
        assert!(!report.is_ok());
        assert!(report.violations.contains(&PathViolation {
            sender: A,
            receiver: 2,
            paths: 2,
            expected: 1
        }));

        assert!(twin_hag().verify_equivalence(&twin_graph()).is_ok());
        let report = twin_hag().verify_equivalence(&pair_share());
        assert_eq!(report.node_count_mismatch, Some((5, 4)));
    }

    #[test]
    fn edge_partitions() {
        let hag = twin_hag();
        assert_eq!(hag.edges_left_to_mid(), vec![(0, 5), (1, 5)]);
        assert!(hag.edges_mid_to_mid().is_empty());
        assert_eq!(hag.edges_mid_to_right(), vec![(5, 2), (5, 3), (5, 4)]);
        assert!(hag.edges_left_to_right().is_empty());
        assert_eq!(hag.out_receivers(5), vec![2, 3, 4]);
    }

    #[test]
    fn dedupe_identity_without_duplicates() {
        let hag = twin_hag();
        assert_eq!(hag.dedupe_intermediates(), hag);
    }

    #[test]
    fn dedupe_merges_disjoint_out_neighbourhoods() {
        let src = twin_graph();
        let g = build_computation_graph(&src);
        let mut hag = HagGraph::from_gnn(&g, LayerMode::Single, Some(2));
        let m1 = hag.add_intermediate(&[A, B]).unwrap();
        let m2 = hag.add_intermediate(&[A, B]).unwrap();
        hag.set_receiver_inputs(2, vec![m1]).unwrap();
        hag.set_receiver_inputs(3, vec![m2]).unwrap();
        hag.set_receiver_inputs(4, vec![m2]).unwrap();
        assert_eq!(
            hag.check_invariants(),
            Err(GraphError::DuplicateCover {
                first: m1,
                second: m2
            })
        );
        assert!(hag.verify_equivalence(&src).is_ok());

        let merged = hag.dedupe_intermediates();
        assert_eq!(merged.intermediate_count(), 1);
        assert_eq!(merged.out_receivers(m1), vec![2, 3, 4]);
        assert_eq!(merged.value(), hag.value() + 1);
        assert!(merged.verify_equivalence(&src).is_ok());
        assert_eq!(merged.check_invariants(), Ok(()));
    }

    #[test]
    fn dedupe_drops_unused_duplicate() {
        let mut hag = twin_hag();
        hag.add_intermediate(&[A, B]).unwrap();
        let merged = hag.dedupe_intermediates();
        assert_eq!(merged, twin_hag());
    }

    #[test]
    fn dedupe_reroutes_consumers_in_multi_layer() {
        let src = DirectedGraph::new(5, [(0, 3), (1, 3), (2, 3), (0, 4), (1, 4)]).unwrap();
        let g = build_computation_graph(&src);
        let mut hag = HagGraph::from_gnn(&g, LayerMode::Multi, Some(2));
        let m1 = hag.add_intermediate(&[0, 1]).unwrap();
        let m2 = hag.add_intermediate(&[0, 1]).unwrap();
        let m3 = hag.add_intermediate(&[m2, 2]).unwrap();
        hag.set_receiver_inputs(3, vec![m3]).unwrap();
        hag.set_receiver_inputs(4, vec![m1]).unwrap();
        assert!(hag.verify_equivalence(&src).is_ok());
        let merged = hag.dedupe_intermediates();
        assert_eq!(merged.intermediate_count(), 2);
        assert_eq!(merged.intermediates()[1].in_set(), &[2, m1]);
        assert!(merged.verify_equivalence(&src).is_ok());
        assert_eq!(merged.check_invariants(), Ok(()));
        assert_eq!(merged.value(), hag.value() + 1);
    }
}
