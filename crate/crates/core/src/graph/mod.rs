//! Static, undirected, unweighted contact networks.
//!
//! A [`Graph`] is immutable after construction and can be shared across
//! simulation workers. Neighbor lists are kept sorted, which gives
//! deterministic iteration order and `O(log d)` membership tests.

mod generators;
mod io;

pub use generators::{
    generate_barabasi_albert, generate_community, generate_erdos_renyi, generate_watts_strogatz,
    CommunitySpec,
};
pub use io::{load_edge_list, parse_edge_list, write_edge_list};

use thiserror::Error;

/// Errors raised while building or loading a graph.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error("node id {node} out of range for a graph of {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("cannot read edge list: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected two integer node ids, found {found:?}")]
    Parse { line: usize, found: String },
}

/// An undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from an edge iterator. Edges are symmetrized,
    /// deduplicated, and self-loops are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(Self::from_adjacency(adjacency))
    }

    pub(crate) fn from_adjacency(mut adjacency: Vec<Vec<usize>>) -> Self {
        let mut degree_sum = 0;
        for (i, list) in adjacency.iter_mut().enumerate() {
            list.retain(|&j| j != i);
            list.sort_unstable();
            list.dedup();
            degree_sum += list.len();
        }
        debug_assert_eq!(degree_sum % 2, 0);
        Graph {
            adjacency,
            edge_count: degree_sum / 2,
        }
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count as f64 / self.node_count() as f64
    }

    /// Edges as `(min, max)` pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Checks symmetry, absence of self-loops, and the handshake identity.
    pub fn check_invariants(&self) -> bool {
        let n = self.node_count();
        let mut degree_sum = 0;
        for (i, list) in self.adjacency.iter().enumerate() {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &j in list {
                if j == i || j >= n || !self.has_edge(j, i) {
                    return false;
                }
            }
            degree_sum += list.len();
        }
        degree_sum == 2 * self.edge_count
    }

    /// Unweighted hop distances from `source`; `usize::MAX` marks unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}
