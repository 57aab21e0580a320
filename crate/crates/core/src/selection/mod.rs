//! Warm-started sequential selection.
//!
//! A round starts with up to `b` holders (the preselection) and a stream of
//! candidates revealed one at a time. Online rules accept or reject each
//! candidate immediately; an accept evicts the worst current holder. Free
//! resources behave like holders with score `-inf`.

mod cutoff;

pub use cutoff::{
    build_cutoff_cell, build_cutoff_table, q_bucket, CutoffCell, CutoffTable, CutoffTableError,
    DEFAULT_N_GRID, Q_GRID,
};

use std::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("preselection of {given} exceeds the budget {budget}")]
    PreselectionTooLarge { given: usize, budget: usize },
    #[error("node {node} appears more than once in the instance")]
    DuplicateNode { node: usize },
    #[error("cutoff {c} out of range for {n} candidates")]
    CutoffOutOfRange { c: usize, n: usize },
    #[error("score for node {node} is NaN")]
    NanScore { node: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub node: usize,
    pub score: f64,
}

impl Scored {
    pub fn new(node: usize, score: f64) -> Self {
        Scored { node, score }
    }
}

/// Higher score first, lower node id first on ties.
fn better(a: &Scored, b: &Scored) -> Ordering {
    b.score.total_cmp(&a.score).then(a.node.cmp(&b.node))
}

/// One round of warm-started sequential selection.
#[derive(Debug, Clone, PartialEq)]
pub struct WsspInstance {
    pub budget: usize,
    /// Holders at round start; `budget - preselection.len()` resources are free.
    pub preselection: Vec<Scored>,
    /// Candidates in arrival order.
    pub candidates: Vec<Scored>,
}

impl WsspInstance {
    pub fn new(
        budget: usize,
        preselection: Vec<Scored>,
        candidates: Vec<Scored>,
    ) -> Result<Self, SelectionError> {
        if preselection.len() > budget {
            return Err(SelectionError::PreselectionTooLarge {
                given: preselection.len(),
                budget,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for s in preselection.iter().chain(&candidates) {
            if s.score.is_nan() {
                return Err(SelectionError::NanScore { node: s.node });
            }
            if !seen.insert(s.node) {
                return Err(SelectionError::DuplicateNode { node: s.node });
            }
        }
        Ok(WsspInstance {
            budget,
            preselection,
            candidates,
        })
    }

    pub fn free_resources(&self) -> usize {
        self.budget - self.preselection.len()
    }

    /// Preselection followed by candidates.
    pub fn pool(&self) -> impl Iterator<Item = &Scored> {
        self.preselection.iter().chain(&self.candidates)
    }

    pub fn score_of(&self, node: usize) -> Option<f64> {
        self.pool().find(|s| s.node == node).map(|s| s.score)
    }
}

/// Number of pool entries `<= s`; ties count.
pub fn rank(s: f64, pool: &[f64]) -> usize {
    pool.iter().filter(|&&x| x <= s).count()
}

/// The `b` highest-scoring nodes of preselection and candidates, ties to the
/// lowest id. Returned sorted by node id.
pub fn offline_select(instance: &WsspInstance) -> Vec<usize> {
    top_nodes(instance.pool().copied(), instance.budget)
}

/// The `k` best entries of `items` by score (ties to lowest id), as sorted
/// node ids.
pub fn top_nodes(items: impl IntoIterator<Item = Scored>, k: usize) -> Vec<usize> {
    let mut all: Vec<Scored> = items.into_iter().collect();
    all.sort_by(better);
    let mut nodes: Vec<usize> = all.into_iter().take(k).map(|s| s.node).collect();
    nodes.sort_unstable();
    nodes
}

/// Online decision rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OnlineRule {
    /// Accept when the score beats the mean of the occupied holders.
    Mean,
    /// Accept when the score beats the lower median of the occupied holders.
    Median,
    /// Reject the first `cutoff` candidates, then accept when the score beats
    /// the current entry of the reference set.
    Ccm { cutoff: usize },
    /// Accept exactly the members of the offline selection.
    Oracle,
}

/// Result of an online pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Decisions {
    /// Per-candidate accept flag, in arrival order.
    pub accepted: Vec<bool>,
    /// Candidates that received a free resource after the stream ended.
    pub leftover: Vec<usize>,
    /// Holders after the round, sorted by node id.
    pub selected: Vec<usize>,
}

impl Decisions {
    pub fn accept_count(&self) -> usize {
        self.accepted.iter().filter(|&&a| a).count()
    }
}

/// Sorted ascending `b` best scores, padded with `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    scores: Vec<f64>,
    pointer: usize,
}

impl ReferenceSet {
    pub fn new(mut seen: Vec<f64>, b: usize) -> Self {
        seen.sort_by(|x, y| y.total_cmp(x));
        seen.truncate(b);
        seen.resize(b, f64::NEG_INFINITY);
        seen.reverse();
        ReferenceSet {
            scores: seen,
            pointer: 0,
        }
    }

    /// `+inf` once every entry has been used.
    pub fn threshold(&self) -> f64 {
        self.scores.get(self.pointer).copied().unwrap_or(f64::INFINITY)
    }

    pub fn advance(&mut self) {
        self.pointer = (self.pointer + 1).min(self.scores.len());
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn pointer(&self) -> usize {
        self.pointer
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn lower_median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

/// Index of the slot an accept would evict: a free slot if any, otherwise
/// the lowest score, ties to the highest node id.
fn worst_slot(slots: &[Option<Scored>]) -> usize {
    let mut worst = 0;
    for (k, slot) in slots.iter().enumerate().skip(1) {
        let replace = match (slot, &slots[worst]) {
            (None, Some(_)) => true,
            (Some(a), Some(w)) => better(a, w) == Ordering::Greater,
            _ => false,
        };
        if replace {
            worst = k;
        }
    }
    worst
}

/// Runs an online rule over the candidate stream, then hands any free
/// resources to the last candidates not holding one, latest first.
pub fn run_online(instance: &WsspInstance, rule: OnlineRule) -> Result<Decisions, SelectionError> {
    let b = instance.budget;
    let n = instance.candidates.len();
    if let OnlineRule::Ccm { cutoff } = rule {
        if cutoff > 0 && cutoff >= n {
            return Err(SelectionError::CutoffOutOfRange { c: cutoff, n });
        }
    }
    let offline = match rule {
        OnlineRule::Oracle => offline_select(instance),
        _ => Vec::new(),
    };
    let mut slots: Vec<Option<Scored>> = instance.preselection.iter().copied().map(Some).collect();
    slots.resize(b, None);
    let mut accepted = vec![false; n];
    let mut reference: Option<ReferenceSet> = None;

    for (j, cand) in instance.candidates.iter().enumerate() {
        if b == 0 {
            break;
        }
        let occupied: Vec<f64> = slots.iter().flatten().map(|s| s.score).collect();
        let accept = match rule {
            OnlineRule::Mean | OnlineRule::Median => {
                let threshold = if occupied.is_empty() {
                    f64::NEG_INFINITY
                } else if rule == OnlineRule::Mean {
                    mean(&occupied)
                } else {
                    lower_median(&occupied)
                };
                cand.score > threshold
            }
            OnlineRule::Ccm { cutoff } => {
                if j < cutoff {
                    false
                } else {
                    let refset = reference.get_or_insert_with(|| {
                        let learned = instance.candidates[..cutoff].iter().map(|s| s.score);
                        ReferenceSet::new(occupied.iter().copied().chain(learned).collect(), b)
                    });
                    cand.score > refset.threshold()
                }
            }
            OnlineRule::Oracle => offline.binary_search(&cand.node).is_ok(),
        };
        if accept {
            let k = worst_slot(&slots);
            slots[k] = Some(*cand);
            accepted[j] = true;
            if let Some(r) = reference.as_mut() {
                r.advance();
            }
        }
    }

    let mut leftover = Vec::new();
    let holding: std::collections::HashSet<usize> =
        slots.iter().flatten().map(|s| s.node).collect();
    let mut late = instance
        .candidates
        .iter()
        .rev()
        .filter(|c| !holding.contains(&c.node));
    for slot in slots.iter_mut().filter(|s| s.is_none()) {
        match late.next() {
            Some(c) => {
                *slot = Some(*c);
                leftover.push(c.node);
            }
            None => break,
        }
    }
    let mut selected: Vec<usize> = slots.iter().flatten().map(|s| s.node).collect();
    selected.sort_unstable();
    Ok(Decisions {
        accepted,
        leftover,
        selected,
    })
}

/// Offline score minus achieved score.
pub fn compute_cost(instance: &WsspInstance, selected: &[usize]) -> f64 {
    let sum = |nodes: &[usize]| -> f64 {
        nodes
            .iter()
            .map(|&i| instance.score_of(i).expect("selected node belongs to the instance"))
            .sum()
    };
    sum(&offline_select(instance)) - sum(selected)
}

/// Mean of `rank(score, pool) / (n + b)` over the selected nodes, clamped to
/// `[0.01, 0.99]`. An empty selection has quality 0.5.
pub fn compute_quality(instance: &WsspInstance, selected: &[usize]) -> f64 {
    if selected.is_empty() {
        return 0.5;
    }
    let pool: Vec<f64> = instance.pool().map(|s| s.score).collect();
    let denom = (instance.candidates.len() + instance.budget) as f64;
    let total: f64 = selected
        .iter()
        .map(|&i| rank(instance.score_of(i).expect("selected node in pool"), &pool) as f64 / denom)
        .sum();
    (total / selected.len() as f64).clamp(0.01, 0.99)
}

/// Half the L1 distance between two allocations given as node sets.
pub fn allocation_error(a: &[usize], b: &[usize]) -> f64 {
    let sa: std::collections::HashSet<_> = a.iter().collect();
    let sb: std::collections::HashSet<_> = b.iter().collect();
    let diff = sa.symmetric_difference(&sb).count();
    diff as f64 / 2.0
}
