//! Node-criticality scores. Higher scores mark nodes whose treatment helps
//! containment the most.
//!
//! * RAND: an i.i.d. uniform draw per query.
//! * LRIE: healthy minus infected neighbors, a local and dynamic score.
//! * LRSR: drop of the adjacency spectral radius when the node is removed.
//! * MCM: a static priority plan with low max-cut; earlier nodes score higher.

mod maxcut;
mod spectral;

pub use maxcut::{
    compute_maxcut, optimize_plan, parse_plan, write_plan, PriorityPlan, DEFAULT_ANNEALING_BUDGET,
};
pub use spectral::{lrsr_scores, score_lrsr, spectral_radius, SpectralOptions};

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::epidemic::EpidemicState;
use crate::graph::Graph;
use crate::rng::SimRng;

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("order is not a permutation of 0..{n}")]
    NotPermutation { n: usize },
    #[error("node {node} is not covered by a plan over {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("malformed plan file: {0}")]
    MalformedPlan(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScorerKind {
    Rand,
    Lrie,
    Lrsr,
    Mcm,
}

impl ScorerKind {
    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::Rand => "RAND",
            ScorerKind::Lrie => "LRIE",
            ScorerKind::Lrsr => "LRSR",
            ScorerKind::Mcm => "MCM",
        }
    }
}

/// Largest reduction in infectious edges: `#healthy - #infected` neighbors.
#[inline]
pub fn score_lrie(graph: &Graph, state: &EpidemicState, i: usize) -> f64 {
    graph.degree(i) as f64 - 2.0 * state.pressure(i) as f64
}

/// Uniform score in `[0, 1)`.
#[inline]
pub fn score_rand<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random()
}

/// Static priority score `N + 1 - l(i)` where `l(i)` is the 1-based rank of
/// `i` in the plan.
pub fn score_mcm(plan: &PriorityPlan, i: usize) -> Result<f64, ScoringError> {
    let n = plan.len();
    let pos = plan.position(i).ok_or(ScoringError::NodeOutOfRange { node: i, n })?;
    Ok((n - pos) as f64)
}

/// A run-local scoring function.
#[derive(Debug, Clone)]
pub enum Scorer {
    Rand(SimRng),
    Lrie,
    /// Precomputed per-node spectral drops.
    Lrsr(Arc<[f64]>),
    Mcm(Arc<PriorityPlan>),
}

impl Scorer {
    pub fn kind(&self) -> ScorerKind {
        match self {
            Scorer::Rand(_) => ScorerKind::Rand,
            Scorer::Lrie => ScorerKind::Lrie,
            Scorer::Lrsr(_) => ScorerKind::Lrsr,
            Scorer::Mcm(_) => ScorerKind::Mcm,
        }
    }

    pub fn score(&mut self, graph: &Graph, state: &EpidemicState, i: usize) -> f64 {
        match self {
            Scorer::Rand(rng) => score_rand(rng),
            Scorer::Lrie => score_lrie(graph, state, i),
            Scorer::Lrsr(table) => table[i],
            Scorer::Mcm(plan) => score_mcm(plan, i).expect("plan covers the graph"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn lrie_fully_infected_is_minus_degree() {
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = EpidemicState::fully_infected(&g);
        assert_eq!(score_lrie(&g, &s, 0), -3.0);
        assert_eq!(score_lrie(&g, &s, 1), -1.0);
    }

    #[test]
    fn lrie_with_healthy_neighbors_is_plus_degree() {
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = EpidemicState::new(&g, [0]);
        assert_eq!(score_lrie(&g, &s, 0), 3.0);
    }

    #[test]
    fn mcm_scores() {
        let plan = PriorityPlan::from_order((0..100).collect()).unwrap();
        assert_eq!(score_mcm(&plan, 0).unwrap(), 100.0);
        assert_eq!(score_mcm(&plan, 99).unwrap(), 1.0);
        assert!(score_mcm(&plan, 100).is_err());
    }

    #[test]
    fn mcm_scores_decrease_along_letter_plan() {
        // nodes A..E = 0..4, plan E, D, B, C, A
        let order = vec![4, 3, 1, 2, 0];
        let plan = PriorityPlan::from_order(order.clone()).unwrap();
        let scores: Vec<f64> = order.iter().map(|&i| score_mcm(&plan, i).unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(scores, vec![5.0, 4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn rand_scores_reproducible() {
        let g = Graph::empty(2);
        let s = EpidemicState::new(&g, [0, 1]);
        let mut a = Scorer::Rand(rng::seeded(3));
        let mut b = Scorer::Rand(rng::seeded(3));
        for _ in 0..10 {
            assert_eq!(a.score(&g, &s, 0), b.score(&g, &s, 0));
        }
    }

    #[test]
    fn rand_ranks_each_of_two_nodes_first_half_the_time() {
        let g = Graph::empty(2);
        let s = EpidemicState::new(&g, [0, 1]);
        let mut scorer = Scorer::Rand(rng::seeded(8));
        let rounds = 10_000;
        let first = (0..rounds)
            .filter(|_| scorer.score(&g, &s, 0) > scorer.score(&g, &s, 1))
            .count();
        let frac = first as f64 / rounds as f64;
        assert!((frac - 0.5).abs() < 4.0 * 0.5 / (rounds as f64).sqrt());
    }

    #[test]
    fn rand_scores_pass_ks_against_uniform() {
        let mut r = rng::seeded(2024);
        let n = 10_000;
        let mut xs: Vec<f64> = (0..n).map(|_| score_rand(&mut r)).collect();
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let hi = (k + 1) as f64 / n as f64 - x;
                let lo = x - k as f64 / n as f64;
                hi.max(lo)
            })
            .fold(0.0, f64::max);
        // asymptotic KS critical value at alpha = 0.01
        assert!(d < 1.628 / (n as f64).sqrt(), "D = {d}");
    }
}
