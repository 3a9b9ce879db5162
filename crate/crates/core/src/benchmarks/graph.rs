use serde::{Deserialize, Serialize};

use super::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Undirected weighted graph with `u < v` on every edge and no duplicates.
///
/// On disk: `{"nodes": n, "edges": [[u, v, w], ...]}`, optionally with the
/// `load_scale` that produced it from a base graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct WeightedGraph {
    pub n_nodes: usize,
    pub edges: Vec<Edge>,
    pub load_scale: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    nodes: usize,
    edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    load_scale: Option<f64>,
}

impl TryFrom<GraphFile> for WeightedGraph {
    type Error = BenchError;

    fn try_from(f: GraphFile) -> Result<Self, Self::Error> {
        let edges = f
            .edges
            .into_iter()
            .map(|(u, v, w)| Edge { u, v, w })
            .collect();
        let mut g = WeightedGraph::new(f.nodes, edges)?;
        g.load_scale = f.load_scale;
        Ok(g)
    }
}

impl From<WeightedGraph> for GraphFile {
    fn from(g: WeightedGraph) -> Self {
        GraphFile {
            nodes: g.n_nodes,
            edges: g.edges.iter().map(|e| (e.u, e.v, e.w)).collect(),
            load_scale: g.load_scale,
        }
    }
}

impl WeightedGraph {
    /// Validates and normalizes edges so that `u < v`.
    pub fn new(n_nodes: usize, edges: Vec<Edge>) -> Result<Self, BenchError> {
        if n_nodes == 0 {
            return Err(BenchError::InvalidGraph("graph has no nodes".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for e in edges {
            let (u, v) = (e.u.min(e.v), e.u.max(e.v));
            if u == v {
                return Err(BenchError::InvalidGraph(format!("self-loop on node {u}")));
            }
            if v >= n_nodes {
                return Err(BenchError::InvalidGraph(format!(
                    "edge ({u}, {v}) exceeds {n_nodes} nodes"
                )));
            }
            if !e.w.is_finite() {
                return Err(BenchError::InvalidGraph(format!(
                    "edge ({u}, {v}) has non-finite weight"
                )));
            }
            if !seen.insert((u, v)) {
                return Err(BenchError::InvalidGraph(format!(
                    "duplicate edge ({u}, {v})"
                )));
            }
            out.push(Edge { u, v, w: e.w });
        }
        Ok(Self {
            n_nodes,
            edges: out,
            load_scale: None,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::InvalidGraph(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization is infallible")
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Weight of the cut induced by `assignment` (bit `k` = side of node `k`).
    pub fn cut_value(&self, assignment: usize) -> f64 {
        self.edges
            .iter()
            .filter(|e| (assignment >> e.u ^ assignment >> e.v) & 1 == 1)
            .map(|e| e.w)
            .sum()
    }

    /// Copy with every weight multiplied by `load_scale`.
    pub fn scaled(&self, load_scale: f64) -> Result<Self, BenchError> {
        if !(load_scale > 0.0) || !load_scale.is_finite() {
            return Err(BenchError::NonPositiveScale(load_scale));
        }
        Ok(Self {
            n_nodes: self.n_nodes,
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    w: e.w * load_scale,
                    ..*e
                })
                .collect(),
            load_scale: Some(self.load_scale.unwrap_or(1.0) * load_scale),
        })
    }
}

/// Mean over graphs and edges of the squared deviation from the per-edge mean
/// weight. All graphs must share node count and edge list order.
pub fn edge_weight_variance(graphs: &[WeightedGraph]) -> Result<f64, BenchError> {
    let first = graphs
        .first()
        .ok_or(BenchError::StructureMismatch("no graphs".into()))?;
    for g in graphs {
        let same = g.n_nodes == first.n_nodes
            && g.edges.len() == first.edges.len()
            && g.edges
                .iter()
                .zip(&first.edges)
                .all(|(a, b)| (a.u, a.v) == (b.u, b.v));
        if !same {
            return Err(BenchError::StructureMismatch(
                "graphs do not share an edge structure".into(),
            ));
        }
    }
    let m = first.edges.len();
    if m == 0 {
        return Ok(0.0);
    }
    let n = graphs.len() as f64;
    let mut total = 0.0;
    for k in 0..m {
        let mean = graphs.iter().map(|g| g.edges[k].w).sum::<f64>() / n;
        total += graphs
            .iter()
            .map(|g| (g.edges[k].w - mean).powi(2))
            .sum::<f64>();
    }
    Ok(total / (n * m as f64))
}

/// Deterministic stand-in for a small power-grid topology, used where a real
/// bus system is not at hand.
///
/// Nodes form a radial feeder `0 - 1 - ... - (n-1)`; every even node also
/// ties back two positions (`(i - 2, i)` for `i = 2, 4, 6, ...`), adding the
/// loops real grids have. The feeder edge `(i, i + 1)` weighs
/// `1 + 0.25 (i mod 3)` and each tie line `0.5`.
pub fn synthetic_grid(n_nodes: usize) -> Result<WeightedGraph, BenchError> {
    if n_nodes < 2 {
        return Err(BenchError::InvalidGraph(
            "synthetic grid needs at least 2 nodes".into(),
        ));
    }
    let mut edges: Vec<Edge> = (0..n_nodes - 1)
        .map(|i| Edge {
            u: i,
            v: i + 1,
            w: 1.0 + 0.25 * (i % 3) as f64,
        })
        .collect();
    edges.extend((2..n_nodes).step_by(2).map(|i| Edge {
        u: i - 2,
        v: i,
        w: 0.5,
    }));
    WeightedGraph::new(n_nodes, edges)
}
