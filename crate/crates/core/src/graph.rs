//! Graph storage and the transition operators built on top of it.
//!
//! A [`SparseGraph`] always stores `A + I`: every node carries a unit
//! self-loop in addition to whatever the input listed. Transition matrices
//! are derived from that augmented adjacency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    /// `A + I` in CSR form.
    adjacency: CsrMatrix,
    directed: bool,
    /// Number of distinct neighbours excluding the node itself.
    degrees: Vec<usize>,
}

impl SparseGraph {
    /// Builds a graph on `n` nodes from weighted edges. Undirected input is
    /// symmetrized; duplicates are summed and a unit self-loop is added to
    /// every node.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId, f64)], symmetrize: bool) -> Result<Self> {
        let mut triplets = Vec::with_capacity(edges.len() * 2 + n);
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::domain(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::domain(format!("edge ({u}, {v}) has invalid weight {w}")));
            }
            triplets.push((u, v, w));
            if symmetrize && u != v {
                triplets.push((v, u, w));
            }
        }
        triplets.extend((0..n).map(|u| (u, u, 1.0)));
        let adjacency = CsrMatrix::from_triplets(n, n, triplets);
        let degrees = (0..n)
            .map(|u| adjacency.row(u).0.iter().filter(|&&v| v != u).count())
            .collect();
        Ok(Self {
            adjacency,
            directed: !symmetrize,
            degrees,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.n_rows()
    }

    /// Edge count of the original graph, self-loops excluded. Undirected
    /// edges are counted once.
    pub fn num_edges(&self) -> usize {
        let arcs: usize = self.degrees.iter().sum();
        if self.directed {
            arcs
        } else {
            arcs / 2
        }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// The augmented adjacency `A + I`.
    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Neighbours of `u` excluding `u` itself, ascending.
    pub fn neighbors(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.row(u).0.iter().copied().filter(move |&v| v != u)
    }

    /// Edges of the original graph (self-loop weight from `I` removed).
    /// Undirected graphs yield each edge once with `u <= v`.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, f64)> {
        let mut out = Vec::new();
        for u in 0..self.num_nodes() {
            for (v, w) in self.adjacency.row_iter(u) {
                if !self.directed && v < u {
                    continue;
                }
                let w = if u == v { w - 1.0 } else { w };
                if w > 0.0 {
                    out.push((u, v, w));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionKind {
    /// `D^-1 (A + I)`
    RandomWalk,
    /// `D^-1/2 (A + I) D^-1/2`
    Symmetric,
    /// `D_T^-1 A_T` with triangle-count edge weights.
    Triangle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub kind: TransitionKind,
    pub matrix: CsrMatrix,
}

pub fn build_transition(graph: &SparseGraph, kind: TransitionKind) -> Result<TransitionMatrix> {
    let adj = graph.adjacency();
    let deg = adj.row_sums();
    let matrix = match kind {
        TransitionKind::RandomWalk => adj.map_values(|r, _, w| w / deg[r]),
        TransitionKind::Symmetric => {
            let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
            adj.map_values(|r, c, w| inv_sqrt[r] * w * inv_sqrt[c])
        }
        TransitionKind::Triangle => return build_triangle_adjacency(graph),
    };
    Ok(TransitionMatrix { kind, matrix })
}

/// Per-edge triangle counts of the undirected graph, without self-loops.
/// Entry `(u, v)` is the number of triangles containing edge `{u, v}`; edges
/// in no triangle are not stored.
pub fn triangle_counts(graph: &SparseGraph) -> Result<CsrMatrix> {
    if graph.is_directed() {
        return Err(Error::domain("triangle adjacency requires an undirected graph"));
    }
    let n = graph.num_nodes();
    let nbrs: Vec<Vec<NodeId>> = (0..n).map(|u| graph.neighbors(u).collect()).collect();
    let mut triplets = Vec::new();
    for u in 0..n {
        for &v in nbrs[u].iter().filter(|&&v| v > u) {
            let count = sorted_intersection_len(&nbrs[u], &nbrs[v]);
            if count > 0 {
                triplets.push((u, v, count as f64));
                triplets.push((v, u, count as f64));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, triplets))
}

fn sorted_intersection_len(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Row-normalized triangle-induced adjacency. Triangles are counted on `A`
/// alone; unit self-loops are added afterwards so every row stays stochastic.
pub fn build_triangle_adjacency(graph: &SparseGraph) -> Result<TransitionMatrix> {
    let counts = triangle_counts(graph)?;
    let with_loops = counts.add_scaled(&CsrMatrix::identity(graph.num_nodes()), 1.0);
    let deg = with_loops.row_sums();
    Ok(TransitionMatrix {
        kind: TransitionKind::Triangle,
        matrix: with_loops.map_values(|r, _, w| w / deg[r]),
    })
}
