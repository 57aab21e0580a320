use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;

use super::ScoringError;
use crate::graph::Graph;
use crate::rng::{self, Stream};

/// Default number of annealing proposals for [`optimize_plan`].
pub const DEFAULT_ANNEALING_BUDGET: usize = 200_000;

/// A total order over the nodes. `order[p]` is the node at 0-based position
/// `p`; the node at position 0 receives treatment first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityPlan {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl PriorityPlan {
    pub fn from_order(order: Vec<usize>) -> Result<Self, ScoringError> {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (p, &node) in order.iter().enumerate() {
            if node >= n || position[node] != usize::MAX {
                return Err(ScoringError::NotPermutation { n });
            }
            position[node] = p;
        }
        Ok(PriorityPlan { order, position })
    }

    pub fn identity(n: usize) -> Self {
        PriorityPlan {
            order: (0..n).collect(),
            position: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 0-based position of `node`.
    pub fn position(&self, node: usize) -> Option<usize> {
        self.position.get(node).copied()
    }
}

/// Per-gap cut sizes: entry `p` counts edges with one endpoint at a position
/// `<= p` and the other at a position `> p`, for `p` in `0..n-1`.
fn cut_profile(graph: &Graph, plan: &PriorityPlan) -> Vec<usize> {
    let n = plan.len();
    let mut cuts = Vec::with_capacity(n.saturating_sub(1));
    let mut running: i64 = 0;
    for p in 0..n.saturating_sub(1) {
        let node = plan.order[p];
        for &j in graph.neighbors(node) {
            running += if plan.position[j] > p { 1 } else { -1 };
        }
        cuts.push(running as usize);
    }
    cuts
}

/// Largest number of edges crossing any gap between consecutive positions
/// of the plan. Zero for graphs with fewer than two nodes.
pub fn compute_maxcut(graph: &Graph, plan: &PriorityPlan) -> Result<usize, ScoringError> {
    if plan.len() != graph.node_count() {
        return Err(ScoringError::NotPermutation {
            n: graph.node_count(),
        });
    }
    Ok(cut_profile(graph, plan).into_iter().max().unwrap_or(0))
}

/// Cuthill–McKee style seed: breadth-first from a pseudo-peripheral node of
/// each component, visiting lower-degree neighbors first.
fn bfs_seed_order(graph: &Graph) -> Vec<usize> {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let root = pseudo_peripheral(graph, start);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = graph
                .neighbors(u)
                .iter()
                .copied()
                .filter(|&v| !seen[v])
                .collect();
            next.sort_by_key(|&v| (graph.degree(v), v));
            for v in next {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    order
}

fn pseudo_peripheral(graph: &Graph, start: usize) -> usize {
    let mut root = start;
    let mut eccentricity = 0;
    for _ in 0..8 {
        let dist = graph.bfs_distances(root);
        let (far, d) = dist
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != usize::MAX)
            .max_by_key(|&(v, &d)| (d, std::cmp::Reverse(graph.degree(v))))
            .map(|(v, &d)| (v, d))
            .expect("root reaches itself");
        if d <= eccentricity {
            break;
        }
        root = far;
        eccentricity = d;
    }
    root
}

/// Mutable order plus gap cuts and a histogram of cut values, so the energy
/// `(max cut, #gaps at the max)` updates in time proportional to the gaps a
/// move touches.
struct Annealer<'g> {
    graph: &'g Graph,
    order: Vec<usize>,
    position: Vec<usize>,
    cuts: Vec<usize>,
    histogram: Vec<usize>,
    max: usize,
}

impl<'g> Annealer<'g> {
    fn new(graph: &'g Graph, plan: &PriorityPlan) -> Self {
        let cuts = cut_profile(graph, plan);
        let mut histogram = vec![0; graph.edge_count() + 1];
        for &c in &cuts {
            histogram[c] += 1;
        }
        let max = cuts.iter().copied().max().unwrap_or(0);
        Annealer {
            graph,
            order: plan.order.clone(),
            position: plan.position.clone(),
            cuts,
            histogram,
            max,
        }
    }

    fn energy(&self) -> f64 {
        let n = self.order.len().max(1) as f64;
        self.max as f64 + 0.5 * self.histogram[self.max] as f64 / n
    }

    /// Moves the block at `start..start+len` so that it begins at `dest`.
    fn move_block(&mut self, start: usize, len: usize, dest: usize) {
        let (lo, hi) = if dest < start {
            self.order[dest..start + len].rotate_right(len);
            (dest, start + len - 1)
        } else {
            self.order[start..dest + len].rotate_left(len);
            (start, dest + len - 1)
        };
        for p in lo..=hi {
            self.position[self.order[p]] = p;
        }
        self.recompute(lo, hi);
    }

    fn recompute(&mut self, lo: usize, hi: usize) {
        let gaps = self.cuts.len();
        if gaps == 0 {
            return;
        }
        let mut running = if lo == 0 { 0 } else { self.cuts[lo - 1] as i64 };
        for p in lo..=hi.min(gaps - 1) {
            for &j in self.graph.neighbors(self.order[p]) {
                running += if self.position[j] > p { 1 } else { -1 };
            }
            let new = running as usize;
            let old = self.cuts[p];
            if new != old {
                self.histogram[old] -= 1;
                self.histogram[new] += 1;
                self.cuts[p] = new;
                self.max = self.max.max(new);
            }
        }
        while self.max > 0 && self.histogram[self.max] == 0 {
            self.max -= 1;
        }
    }

    fn plan(&self) -> PriorityPlan {
        PriorityPlan {
            order: self.order.clone(),
            position: self.position.clone(),
        }
    }
}

/// Searches for a priority plan with a small max-cut.
///
/// Starts from a breadth-first order and runs simulated annealing over block
/// moves (adjacent swaps are blocks of length one) for `budget` proposals
/// with geometric cooling. Returns the best order visited, so the result
/// never has a larger max-cut than the breadth-first seed.
pub fn optimize_plan(graph: &Graph, budget: usize, seed: u64) -> PriorityPlan {
    let n = graph.node_count();
    let seed_plan = PriorityPlan::from_order(bfs_seed_order(graph)).expect("bfs covers all nodes");
    if n < 3 || budget == 0 {
        return seed_plan;
    }
    let mut rng = rng::stream(seed, Stream::Optimizer);
    let mut state = Annealer::new(graph, &seed_plan);
    let mut energy = state.energy();
    let mut best = (energy, state.plan());

    let t_start: f64 = 1.5;
    let t_end: f64 = 0.05;
    let cooling = (t_end / t_start).powf(1.0 / budget as f64);
    let max_block = (n / 10).clamp(1, 16);
    let mut temperature = t_start;

    for _ in 0..budget {
        let len = if rng.random::<f64>() < 0.5 {
            1
        } else {
            rng.random_range(1..=max_block.min(n - 1))
        };
        let start = rng.random_range(0..=n - len);
        let dest = if len == 1 && rng.random::<f64>() < 0.5 {
            // adjacent transposition
            if start + 1 < n {
                start + 1
            } else {
                start - 1
            }
        } else {
            rng.random_range(0..=n - len)
        };
        if dest == start {
            temperature *= cooling;
            continue;
        }
        state.move_block(start, len, dest);
        let candidate = state.energy();
        let delta = candidate - energy;
        if delta <= 0.0 || rng.random::<f64>() < (-delta / temperature).exp() {
            energy = candidate;
            if energy < best.0 {
                best = (energy, state.plan());
            }
        } else {
            state.move_block(dest, len, start);
        }
        temperature *= cooling;
    }
    best.1
}

/// Text form: a `maxcut=K` line followed by one node id per line in plan
/// order.
pub fn write_plan(graph: &Graph, plan: &PriorityPlan) -> Result<String, ScoringError> {
    let maxcut = compute_maxcut(graph, plan)?;
    let mut out = format!("maxcut={maxcut}\n");
    for &node in plan.order() {
        let _ = writeln!(out, "{node}");
    }
    Ok(out)
}

/// Parses the output of [`write_plan`]; returns the plan and the recorded
/// max-cut. Lines starting with `#` are skipped.
pub fn parse_plan(text: &str) -> Result<(PriorityPlan, usize), ScoringError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| ScoringError::MalformedPlan("empty file".into()))?;
    let maxcut = header
        .strip_prefix("maxcut=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| ScoringError::MalformedPlan(format!("bad header {header:?}")))?;
    let order = lines
        .map(|l| {
            l.parse::<usize>()
                .map_err(|_| ScoringError::MalformedPlan(format!("bad node id {l:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((PriorityPlan::from_order(order)?, maxcut))
}
