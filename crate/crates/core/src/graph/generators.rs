use std::collections::BTreeSet;

use rand::Rng;

use super::{Graph, GraphError};
use crate::rng::{self, Stream};

/// Barabási–Albert preferential attachment, grown from two connected nodes.
///
/// Every new node attaches to `m` distinct existing nodes drawn with
/// probability proportional to their current degree (duplicates are
/// rejected and redrawn). While fewer than `m` nodes exist, the new node
/// links to all of them.
pub fn generate_barabasi_albert(n: usize, m: usize, seed: u64) -> Result<Graph, GraphError> {
    if n < 2 || m == 0 || m >= n {
        return Err(GraphError::InvalidParameters(format!(
            "barabasi-albert requires n >= 2 and 1 <= m < n, got n={n}, m={m}"
        )));
    }
    let mut rng = rng::stream(seed, Stream::Generator);
    let mut adjacency = vec![Vec::new(); n];
    // each node appears once per incident edge endpoint
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * m * n);

    adjacency[0].push(1);
    adjacency[1].push(0);
    endpoints.extend([0, 1]);

    let mut chosen = Vec::with_capacity(m);
    for v in 2..n {
        chosen.clear();
        if m >= v {
            chosen.extend(0..v);
        } else {
            while chosen.len() < m {
                let target = endpoints[rng.random_range(0..endpoints.len())];
                if !chosen.contains(&target) {
                    chosen.push(target);
                }
            }
        }
        for &t in &chosen {
            adjacency[v].push(t);
            adjacency[t].push(v);
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    Ok(Graph::from_adjacency(adjacency))
}

/// Watts–Strogatz small world: a ring lattice where each node links to `m/2`
/// neighbors per side, then each lattice edge `(i, i+j)` is visited in ring
/// order (node `i` ascending, offset `j` ascending) and rewired with
/// probability `p` to a uniformly drawn node that is neither `i` nor an
/// existing neighbor of `i`.
pub fn generate_watts_strogatz(
    n: usize,
    m: usize,
    p: f64,
    seed: u64,
) -> Result<Graph, GraphError> {
    if !m.is_multiple_of(2) || m >= n || !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidParameters(format!(
            "watts-strogatz requires even m < n and p in [0, 1], got n={n}, m={m}, p={p}"
        )));
    }
    let mut rng = rng::stream(seed, Stream::Generator);
    let half = m / 2;
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in 1..=half {
            let v = (i + j) % n;
            sets[i].insert(v);
            sets[v].insert(i);
        }
    }
    for i in 0..n {
        for j in 1..=half {
            let v = (i + j) % n;
            // one draw per lattice edge, whether or not it is rewired
            let rewire = rng.random::<f64>() < p;
            if !rewire || sets[i].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != i && !sets[i].contains(&w) {
                    break w;
                }
            };
            sets[i].remove(&v);
            sets[v].remove(&i);
            sets[i].insert(w);
            sets[w].insert(i);
        }
    }
    let adjacency = sets.into_iter().map(|s| s.into_iter().collect()).collect();
    Ok(Graph::from_adjacency(adjacency))
}

/// Erdős–Rényi `G(n, p)`; pairs `(u, v)` with `u < v` are visited in
/// lexicographic order with one uniform draw each.
pub fn generate_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidParameters(format!(
            "erdos-renyi requires p in [0, 1], got {p}"
        )));
    }
    let mut rng = rng::stream(seed, Stream::Generator);
    let mut adjacency = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
    }
    Ok(Graph::from_adjacency(adjacency))
}

/// Shape of a hierarchical stochastic-block network.
///
/// `level_sizes[0]` is the number of nodes in a lowest-level group and
/// `level_sizes[l]` (for `l >= 1`) the number of level `l-1` groups merged
/// into one level `l` group; the top level spans the whole graph.
/// `level_probs[l]` is the edge probability for node pairs whose lowest
/// common group sits at level `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunitySpec {
    pub level_sizes: Vec<usize>,
    pub level_probs: Vec<f64>,
}

impl CommunitySpec {
    /// 4 high-level groups of 3 low-level groups of 100 nodes (N = 1200).
    pub const DEFAULT_SIZES: [usize; 3] = [100, 3, 4];
    /// Calibrated so that a budget of 17 resources contains the epidemic
    /// with beta = 3, rho = 125.
    pub const DEFAULT_PROBS: [f64; 3] = [0.06, 0.003, 0.0003];

    pub fn node_count(&self) -> usize {
        self.level_sizes.iter().product()
    }
}

impl Default for CommunitySpec {
    fn default() -> Self {
        CommunitySpec {
            level_sizes: Self::DEFAULT_SIZES.to_vec(),
            level_probs: Self::DEFAULT_PROBS.to_vec(),
        }
    }
}

/// Hierarchical Erdős–Rényi graph, see [`CommunitySpec`].
pub fn generate_community(
    level_sizes: &[usize],
    level_probs: &[f64],
    seed: u64,
) -> Result<Graph, GraphError> {
    if level_sizes.is_empty() || level_sizes.len() != level_probs.len() {
        return Err(GraphError::InvalidParameters(
            "community generator needs one probability per level".into(),
        ));
    }
    if level_sizes.contains(&0) {
        return Err(GraphError::InvalidParameters(
            "community level sizes must be positive".into(),
        ));
    }
    if level_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(GraphError::InvalidParameters(
            "community probabilities must lie in [0, 1]".into(),
        ));
    }
    if level_probs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(GraphError::InvalidParameters(format!(
            "community probabilities must strictly decrease with level, got {level_probs:?}"
        )));
    }
    let block_sizes: Vec<usize> = level_sizes
        .iter()
        .scan(1usize, |acc, &s| {
            *acc *= s;
            Some(*acc)
        })
        .collect();
    let n = *block_sizes.last().unwrap();
    let mut rng = rng::stream(seed, Stream::Generator);
    let mut adjacency = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            let level = block_sizes
                .iter()
                .position(|&b| u / b == v / b)
                .expect("top level spans every pair");
            if rng.random::<f64>() < level_probs[level] {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
    }
    Ok(Graph::from_adjacency(adjacency))
}
