//! Edge lists, random graphs, and HAG files.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::graph::{DirectedGraph, HagGraph, LayerMode, NodeId, PartialHag};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Directedness {
    #[default]
    Directed,
    /// Each line adds both orientations.
    Undirected,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Remap {
    /// Dense ids in order of first appearance.
    #[default]
    FirstAppearance,
    /// Ids are used as-is; a `# nodes: N` header fixes the node count.
    Verbatim,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeListFormat {
    pub directedness: Directedness,
    pub remap: Remap,
}

impl EdgeListFormat {
    pub fn directed() -> Self {
        Self::default()
    }

    pub fn undirected() -> Self {
        Self {
            directedness: Directedness::Undirected,
            ..Self::default()
        }
    }
}

/// A parsed edge list and the original id of every dense node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeList {
    pub graph: DirectedGraph,
    pub original_ids: Vec<u64>,
}

const NODES_HEADER: &str = "# nodes:";

/// Parses whitespace-separated `u v` lines; `#` starts a comment line.
pub fn parse_snap_edge_list(text: &str, fmt: EdgeListFormat) -> Result<EdgeList, IngestError> {
    let mut dense: HashMap<u64, NodeId> = HashMap::new();
    let mut original_ids = Vec::new();
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix(NODES_HEADER) {
            if fmt.remap == Remap::Verbatim {
                declared = Some(rest.trim().parse().map_err(|_| IngestError::Malformed {
                    line: lineno,
                    message: format!("bad node count {:?}", rest.trim()),
                })?);
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(IngestError::Malformed {
                line: lineno,
                message: format!("expected two ids, found {} tokens", tokens.len()),
            });
        }
        let mut ids = [0u64; 2];
        for (slot, tok) in ids.iter_mut().zip(&tokens) {
            *slot = tok.parse().map_err(|_| IngestError::Malformed {
                line: lineno,
                message: format!("{tok:?} is not a non-negative integer"),
            })?;
        }
        if fmt.remap == Remap::Verbatim && ids.iter().any(|&id| id >= NodeId::MAX as u64) {
            return Err(IngestError::Malformed {
                line: lineno,
                message: "id out of range".into(),
            });
        }
        let [u, v] = ids.map(|id| match fmt.remap {
            Remap::Verbatim => id as NodeId,
            Remap::FirstAppearance => *dense.entry(id).or_insert_with(|| {
                original_ids.push(id);
                (original_ids.len() - 1) as NodeId
            }),
        });
        edges.push((u, v));
        if fmt.directedness == Directedness::Undirected {
            edges.push((v, u));
        }
    }
    let n = match fmt.remap {
        Remap::FirstAppearance => original_ids.len(),
        Remap::Verbatim => {
            let needed = edges
                .iter()
                .map(|&(u, v)| u.max(v) as usize + 1)
                .max()
                .unwrap_or(0);
            match declared {
                Some(n) if n < needed => {
                    return Err(IngestError::Schema(format!(
                        "header declares {n} nodes but ids reach {}",
                        needed - 1
                    )))
                }
                Some(n) => n,
                None => needed,
            }
        }
    };
    if fmt.remap == Remap::Verbatim {
        original_ids = (0..n as u64).collect();
    }
    let graph = DirectedGraph::new(n, edges)?;
    Ok(EdgeList {
        graph,
        original_ids,
    })
}

/// Writes `g` as an edge list readable with [`Remap::Verbatim`].
pub fn write_edge_list(g: &DirectedGraph) -> String {
    let mut out = format!("{NODES_HEADER} {}\n", g.node_count());
    for &(u, v) in g.edges() {
        writeln!(out, "{u} {v}").expect("writing to a string");
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErConfig {
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    /// Draw unordered pairs and add both orientations.
    pub undirected: bool,
}

impl ErConfig {
    pub fn new(n: usize, p: f64, seed: u64) -> Self {
        Self {
            n,
            p,
            seed,
            undirected: false,
        }
    }
}

/// `G(n, p)`: each ordered pair `u != v` is an edge with probability `p`.
pub fn gen_erdos_renyi(cfg: &ErConfig) -> Result<DirectedGraph, IngestError> {
    if !(0.0..=1.0).contains(&cfg.p) {
        return Err(IngestError::Schema(format!(
            "edge probability {} outside [0, 1]",
            cfg.p
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n as NodeId;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || (cfg.undirected && v < u) {
                continue;
            }
            if rng.gen_bool(cfg.p) {
                edges.push((u, v));
                if cfg.undirected {
                    edges.push((v, u));
                }
            }
        }
    }
    Ok(DirectedGraph::new(cfg.n, edges)?)
}

pub const HAG_FORMAT: &str = "hag-graph/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HagFile {
    format: String,
    node_count: usize,
    layer_mode: LayerMode,
    degree: Option<usize>,
    nodes: NodesSection,
    edges: EdgesSection,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodesSection {
    left: Vec<NodeId>,
    intermediates: Vec<IntermediateRecord>,
    right: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntermediateRecord {
    id: NodeId,
    in_set: Vec<NodeId>,
    cover: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgesSection {
    left_to_mid: Vec<(NodeId, NodeId)>,
    mid_to_mid: Vec<(NodeId, NodeId)>,
    mid_to_right: Vec<(NodeId, NodeId)>,
    left_to_right: Vec<(NodeId, NodeId)>,
}

/// Pretty-printed JSON with nodes, covers, and edges by partition.
pub fn serialize_hag(hag: &HagGraph) -> String {
    let n = hag.node_count() as NodeId;
    let file = HagFile {
        format: HAG_FORMAT.into(),
        node_count: hag.node_count(),
        layer_mode: hag.layer_mode(),
        degree: hag.degree(),
        nodes: NodesSection {
            left: (0..n).collect(),
            intermediates: hag
                .intermediates()
                .iter()
                .map(|m| IntermediateRecord {
                    id: m.id(),
                    in_set: m.in_set().to_vec(),
                    cover: m.cover().to_vec(),
                })
                .collect(),
            right: (0..n).collect(),
        },
        edges: EdgesSection {
            left_to_mid: hag.edges_left_to_mid(),
            mid_to_mid: hag.edges_mid_to_mid(),
            mid_to_right: hag.edges_mid_to_right(),
            left_to_right: hag.edges_left_to_right(),
        },
    };
    let mut text = serde_json::to_string_pretty(&file).expect("HAG files always serialize");
    text.push('\n');
    text
}

/// Reads a HAG written by [`serialize_hag`], rechecking every cover and the
/// consistency of the edge lists.
pub fn deserialize_hag(text: &str) -> Result<HagGraph, IngestError> {
    let file: HagFile = serde_json::from_str(text)?;
    if file.format != HAG_FORMAT {
        return Err(IngestError::Schema(format!(
            "unknown format {:?}",
            file.format
        )));
    }
    let n = file.node_count;
    let all: Vec<NodeId> = (0..n as NodeId).collect();
    if file.nodes.left != all || file.nodes.right != all {
        return Err(IngestError::Schema(format!(
            "left and right must both list 0..{n}"
        )));
    }
    let mut p = PartialHag::new(n, file.layer_mode, file.degree);
    for rec in &file.nodes.intermediates {
        if rec.id != p.next_id() {
            return Err(IngestError::Schema(format!(
                "intermediate {} listed where {} was expected",
                rec.id,
                p.next_id()
            )));
        }
        p.add_intermediate(&rec.in_set)?;
        let computed = p.cover(rec.id)?.into_owned();
        if computed != rec.cover {
            return Err(IngestError::CoverMismatch {
                node: rec.id,
                stored: rec.cover.clone(),
                computed,
            });
        }
    }
    let mut hag = HagGraph::from_partial(p);
    let mut inputs: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for &(v, r) in file
        .edges
        .mid_to_right
        .iter()
        .chain(&file.edges.left_to_right)
    {
        if r as usize >= n {
            return Err(IngestError::Schema(format!(
                "edge ({v}, {r}) targets a missing receiver"
            )));
        }
        inputs[r as usize].push(v);
    }
    for (r, ins) in inputs.into_iter().enumerate() {
        hag.set_receiver_inputs(r as NodeId, ins)?;
    }
    let sections = [
        (
            "left_to_mid",
            &file.edges.left_to_mid,
            hag.edges_left_to_mid(),
        ),
        ("mid_to_mid", &file.edges.mid_to_mid, hag.edges_mid_to_mid()),
        (
            "mid_to_right",
            &file.edges.mid_to_right,
            hag.edges_mid_to_right(),
        ),
        (
            "left_to_right",
            &file.edges.left_to_right,
            hag.edges_left_to_right(),
        ),
    ];
    for (name, stored, rebuilt) in sections {
        let mut stored = stored.clone();
        stored.sort_unstable();
        let mut rebuilt = rebuilt;
        rebuilt.sort_unstable();
        if stored != rebuilt {
            return Err(IngestError::Schema(format!(
                "edge section {name} is inconsistent with the nodes"
            )));
        }
    }
    hag.check_invariants()?;
    Ok(hag)
}

/// Spreadsheet-style names: `A`..`Z`, `AA`, `AB`, ...
pub fn default_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|mut i| {
            let mut name = Vec::new();
            loop {
                name.push(b'A' + (i % 26) as u8);
                if i < 26 {
                    break;
                }
                i = i / 26 - 1;
            }
            name.reverse();
            String::from_utf8(name).expect("ASCII letters")
        })
        .collect()
}

/// Graphviz rendering with leaves, intermediates, and receivers in separate
/// ranks. Intermediates are labelled by their cover, e.g. `A⊕B`.
pub fn export_dot(hag: &HagGraph, names: Option<&[String]>) -> String {
    let n = hag.node_count();
    let defaults;
    let names = match names {
        Some(names) if names.len() >= n => names,
        _ => {
            defaults = default_names(n);
            &defaults
        }
    };
    let mut out = String::from("digraph hag {\n  rankdir=LR;\n");
    let mut w = |s: String| out.push_str(&s);
    if n > 0 {
        w("  { rank=same;".into());
        for (v, name) in names.iter().enumerate().take(n) {
            w(format!(" l{v} [label=\"{name}\"];"));
        }
        w(" }\n".into());
    }
    if hag.intermediate_count() > 0 {
        w("  { rank=same;".into());
        for m in hag.intermediates() {
            let label = m
                .cover()
                .iter()
                .map(|&v| names[v as usize].as_str())
                .collect::<Vec<_>>()
                .join("⊕");
            w(format!(" m{} [label=\"{label}\"];", m.id()));
        }
        w(" }\n".into());
    }
    if n > 0 {
        w("  { rank=same;".into());
        for (v, name) in names.iter().enumerate().take(n) {
            w(format!(" r{v} [label=\"{name}\"];"));
        }
        w(" }\n".into());
    }
    let node = |v: NodeId| {
        if hag.is_leaf(v) {
            format!("l{v}")
        } else {
            format!("m{v}")
        }
    };
    for m in hag.intermediates() {
        for &v in m.in_set() {
            w(format!("  {} -> m{};\n", node(v), m.id()));
        }
    }
    for r in 0..n as NodeId {
        for &v in hag.receiver_inputs(r) {
            w(format!("  {} -> r{r};\n", node(v)));
        }
    }
    out.push_str("}\n");
    out
}
