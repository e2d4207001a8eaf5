//! Street graph, shortest routes and replanning around blocked edges.
//!
//! Edges are undirected. A blocked edge is never traversed (equivalent to an
//! infinite weight) but keeps its stored weight so it can be reported.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph schema: {0}")]
    Schema(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("no edge between `{0}` and `{1}`")]
    MissingEdge(String, String),
    #[error("`{dst}` unreachable from `{src}`")]
    Unreachable { src: String, dst: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub pos: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
    pub blocked: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub nodes: Vec<String>,
    pub total_cost: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: String,
    pos: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    u: String,
    v: String,
    w: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    blocked: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NavGraph {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    /// Per node: `(neighbor, edge index)`.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl NavGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| GraphError::Schema(e.to_string()))?;
        let mut g = Self::new();
        for n in file.nodes {
            g.add_node(n.id, n.pos)?;
        }
        for e in file.edges {
            g.add_edge(&e.u, &e.v, e.w)?;
            if e.blocked {
                g.block_edge(&e.u, &e.v)?;
            }
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeRecord {
                    id: n.id.clone(),
                    pos: n.pos,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    u: self.nodes[e.u].id.clone(),
                    v: self.nodes[e.v].id.clone(),
                    w: e.weight,
                    blocked: e.blocked,
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("graph serializes")
    }

    pub fn add_node(&mut self, id: impl Into<String>, pos: [f64; 2]) -> Result<(), GraphError> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(GraphError::Schema(format!("duplicate node `{id}`")));
        }
        if !(pos[0].is_finite() && pos[1].is_finite()) {
            return Err(GraphError::Schema(format!("node `{id}` has non-finite position")));
        }
        self.index.insert(id.clone(), self.nodes.len());
        self.nodes.push(Node { id, pos });
        self.adjacency.push(Vec::new());
        Ok(())
    }

    pub fn add_edge(&mut self, u: &str, v: &str, weight: f64) -> Result<(), GraphError> {
        let schema = |msg: String| GraphError::Schema(msg);
        let ui = *self.index.get(u).ok_or_else(|| schema(format!("edge {u}-{v} references unknown node `{u}`")))?;
        let vi = *self.index.get(v).ok_or_else(|| schema(format!("edge {u}-{v} references unknown node `{v}`")))?;
        if ui == vi {
            return Err(schema(format!("self-loop on `{u}`")));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(schema(format!("edge {u}-{v} has non-positive or non-finite weight {weight}")));
        }
        if self.edge_index(ui, vi).is_some() {
            return Err(schema(format!("duplicate edge {u}-{v}")));
        }
        let ei = self.edges.len();
        self.edges.push(Edge {
            u: ui,
            v: vi,
            weight,
            blocked: false,
        });
        self.adjacency[ui].push((vi, ei));
        self.adjacency[vi].push((ui, ei));
        Ok(())
    }

    fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency[u].iter().find(|(n, _)| *n == v).map(|&(_, e)| e)
    }

    fn node_index(&self, id: &str) -> Result<usize, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// `(weight, blocked)` of the edge joining `u` and `v`.
    pub fn edge(&self, u: &str, v: &str) -> Option<(f64, bool)> {
        let (ui, vi) = (self.index.get(u)?, self.index.get(v)?);
        self.edge_index(*ui, *vi).map(|e| (self.edges[e].weight, self.edges[e].blocked))
    }

    /// Marks the edge as impassable. Blocking twice is a no-op.
    pub fn block_edge(&mut self, u: &str, v: &str) -> Result<(), GraphError> {
        let (ui, vi) = (self.node_index(u)?, self.node_index(v)?);
        let e = self
            .edge_index(ui, vi)
            .ok_or_else(|| GraphError::MissingEdge(u.to_string(), v.to_string()))?;
        self.edges[e].blocked = true;
        Ok(())
    }

    /// Minimal-cost route over unblocked edges. Among equal-cost routes the
    /// lexicographically smallest node-id sequence is returned.
    pub fn shortest_path(&self, src: &str, dst: &str) -> Result<Route, GraphError> {
        let (si, di) = (self.node_index(src)?, self.node_index(dst)?);
        let dist = self.distances_to(di);
        if !dist[si].is_finite() {
            return Err(GraphError::Unreachable {
                src: src.to_string(),
                dst: dst.to_string(),
            });
        }
        // Walk forward along tight edges, always taking the smallest next id.
        // Every shortest route is a chain of tight edges, so this yields the
        // lexicographically smallest one.
        let mut path = vec![si];
        let mut cost = 0.0;
        let mut cur = si;
        while cur != di {
            let (next, w) = self.adjacency[cur]
                .iter()
                .filter(|&&(_, e)| !self.edges[e].blocked)
                .map(|&(n, e)| (n, self.edges[e].weight))
                .filter(|&(n, w)| dist[n] < dist[cur] && is_tight(dist[cur], w + dist[n]))
                .min_by(|a, b| self.nodes[a.0].id.cmp(&self.nodes[b.0].id))
                .expect("a finite distance always has a tight outgoing edge");
            cost += w;
            path.push(next);
            cur = next;
        }
        Ok(Route {
            nodes: path.into_iter().map(|i| self.nodes[i].id.clone()).collect(),
            total_cost: cost,
        })
    }

    /// Fresh shortest route from the current location under the graph's
    /// present blocked state.
    pub fn replan(&self, current: &str, dst: &str) -> Result<Route, GraphError> {
        self.shortest_path(current, dst)
    }

    /// Dijkstra from `target` over unblocked edges.
    fn distances_to(&self, target: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        dist[target] = 0.0;
        heap.push(Reverse((Cost(0.0), target)));
        while let Some(Reverse((Cost(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, e) in &self.adjacency[u] {
                let edge = &self.edges[e];
                if edge.blocked {
                    continue;
                }
                let nd = d + edge.weight;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((Cost(nd), v)));
                }
            }
        }
        dist
    }
}

fn is_tight(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub fn load_graph(path: &std::path::Path) -> Result<NavGraph, GraphError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GraphError::Schema(format!("{}: {e}", path.display())))?;
    NavGraph::from_json(&text)
}

/// Graph shared between one writer (edge blocking) and concurrent readers.
/// Readers work on an immutable snapshot taken when they ask for it.
#[derive(Clone, Debug, Default)]
pub struct SharedGraph {
    inner: Arc<RwLock<Arc<NavGraph>>>,
}

impl SharedGraph {
    pub fn new(graph: NavGraph) -> Self {
        Self {
            inner: Arc::new(RwLock::new(Arc::new(graph))),
        }
    }

    pub fn snapshot(&self) -> Arc<NavGraph> {
        self.inner.read().expect("graph lock poisoned").clone()
    }

    pub fn block_edge(&self, u: &str, v: &str) -> Result<(), GraphError> {
        let mut guard = self.inner.write().expect("graph lock poisoned");
        Arc::make_mut(&mut guard).block_edge(u, v)
    }
}
