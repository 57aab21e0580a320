//! Exact continuous-time SIS dynamics under treatment.
//!
//! A healthy node becomes infected at rate `beta` times its number of
//! infected neighbors; an infected node recovers at rate `delta + rho * r_i`
//! where `r_i` marks a treatment. Events are drawn with the aggregate-rate
//! Gillespie method: exponential waiting time, then the category
//! (infection / recovery), then the node within the category, always in
//! that order so that the random stream is consumed identically by every
//! allocation strategy.
//!
//! [`EpidemicState`] caches the infected count, the treated count, the
//! per-node number of infected neighbors ("pressure") and the number of
//! ordered healthy-infected adjacent pairs; every cache is updated in
//! `O(degree)` per event.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error, PartialEq)]
pub enum EpidemicError {
    #[error("invalid epidemic parameters: {0}")]
    InvalidParams(String),
    #[error("total event rate is zero; the process cannot move")]
    Absorbing,
    #[error("event for node {node} is inconsistent with its state")]
    InconsistentEvent { node: usize },
    #[error("node {node} is not infected and cannot be treated")]
    TreatHealthy { node: usize },
    #[error("allocation of {given} resources exceeds the budget {budget}")]
    OverBudget { given: usize, budget: usize },
}

/// Homogeneous SIS rates and resource budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicParams {
    /// Per-edge infection rate.
    pub beta: f64,
    /// Self-recovery rate.
    pub delta: f64,
    /// Recovery boost of a treated node.
    pub rho: f64,
    /// Number of resources.
    pub budget: usize,
}

impl EpidemicParams {
    pub fn new(beta: f64, delta: f64, rho: f64, budget: usize) -> Result<Self, EpidemicError> {
        let p = EpidemicParams {
            beta,
            delta,
            rho,
            budget,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), EpidemicError> {
        let finite = self.beta.is_finite() && self.delta.is_finite() && self.rho.is_finite();
        if !finite || self.beta <= 0.0 || self.delta < 0.0 || self.rho < 0.0 {
            return Err(EpidemicError::InvalidParams(format!(
                "need beta > 0, delta >= 0, rho >= 0 (got beta={}, delta={}, rho={})",
                self.beta, self.delta, self.rho
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Infection,
    Recovery,
}

/// A sampled transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventDraw {
    pub node: usize,
    pub kind: EventKind,
    pub dt: f64,
}

/// Infection and resource state of one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicState {
    infected: Vec<bool>,
    treated: Vec<bool>,
    pressure: Vec<u32>,
    n_infected: usize,
    n_treated: usize,
    si_pairs: u64,
    time: f64,
    round: u64,
}

impl EpidemicState {
    /// State with the given nodes infected, nothing treated, at `t = 0`.
    pub fn new<I>(graph: &Graph, infected_nodes: I) -> Self
    where
        I: IntoIterator<Item = usize>,
    {
        let mut infected = vec![false; graph.node_count()];
        for i in infected_nodes {
            infected[i] = true;
        }
        Self::from_indicator(graph, infected)
    }

    pub fn fully_infected(graph: &Graph) -> Self {
        Self::from_indicator(graph, vec![true; graph.node_count()])
    }

    pub fn from_indicator(graph: &Graph, infected: Vec<bool>) -> Self {
        assert_eq!(infected.len(), graph.node_count());
        let n = graph.node_count();
        let mut state = EpidemicState {
            infected,
            treated: vec![false; n],
            pressure: vec![0; n],
            n_infected: 0,
            n_treated: 0,
            si_pairs: 0,
            time: 0.0,
            round: 0,
        };
        state.rebuild_caches(graph);
        state
    }

    fn rebuild_caches(&mut self, graph: &Graph) {
        self.n_infected = self.infected.iter().filter(|&&x| x).count();
        self.n_treated = self.treated.iter().filter(|&&r| r).count();
        for i in 0..graph.node_count() {
            self.pressure[i] = graph
                .neighbors(i)
                .iter()
                .filter(|&&j| self.infected[j])
                .count() as u32;
        }
        self.si_pairs = (0..graph.node_count())
            .filter(|&i| !self.infected[i])
            .map(|i| self.pressure[i] as u64)
            .sum();
    }

    /// Compares every cache with a from-scratch recomputation.
    pub fn caches_consistent(&self, graph: &Graph) -> bool {
        let mut fresh = self.clone();
        fresh.rebuild_caches(graph);
        fresh == *self && self.treated.iter().zip(&self.infected).all(|(&r, &x)| !r || x)
    }

    pub fn node_count(&self) -> usize {
        self.infected.len()
    }

    #[inline]
    pub fn is_infected(&self, i: usize) -> bool {
        self.infected[i]
    }

    #[inline]
    pub fn is_treated(&self, i: usize) -> bool {
        self.treated[i]
    }

    /// Number of infected neighbors of `i`.
    #[inline]
    pub fn pressure(&self, i: usize) -> u32 {
        self.pressure[i]
    }

    pub fn n_infected(&self) -> usize {
        self.n_infected
    }

    pub fn n_treated(&self) -> usize {
        self.n_treated
    }

    /// Ordered (healthy, infected) adjacent pairs.
    pub fn infectious_edges(&self) -> u64 {
        self.si_pairs
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn advance_round(&mut self) {
        self.round += 1;
    }

    pub fn infected_indicator(&self) -> &[bool] {
        &self.infected
    }

    pub fn treated_indicator(&self) -> &[bool] {
        &self.treated
    }

    pub fn infected_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.infected
            .iter()
            .enumerate()
            .filter(|(_, &x)| x)
            .map(|(i, _)| i)
    }

    pub fn treated_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.treated
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| i)
    }

    /// Replaces the resource allocation. Every node must be infected and the
    /// allocation may not exceed the budget.
    pub fn set_allocation(&mut self, nodes: &[usize], budget: usize) -> Result<(), EpidemicError> {
        if nodes.len() > budget {
            return Err(EpidemicError::OverBudget {
                given: nodes.len(),
                budget,
            });
        }
        if let Some(&node) = nodes.iter().find(|&&i| !self.infected[i]) {
            return Err(EpidemicError::TreatHealthy { node });
        }
        self.treated.iter_mut().for_each(|r| *r = false);
        for &i in nodes {
            self.treated[i] = true;
        }
        self.n_treated = self.treated.iter().filter(|&&r| r).count();
        Ok(())
    }

    /// Applies one transition and advances the clock. A treated node that
    /// recovers releases its resource.
    pub fn apply_event(&mut self, graph: &Graph, event: &EventDraw) -> Result<(), EpidemicError> {
        let i = event.node;
        if i >= self.node_count() || !(event.dt > 0.0) {
            return Err(EpidemicError::InconsistentEvent { node: i });
        }
        match (event.kind, self.infected[i]) {
            (EventKind::Infection, false) => {
                self.infected[i] = true;
                self.n_infected += 1;
                self.si_pairs -= self.pressure[i] as u64;
                for &j in graph.neighbors(i) {
                    self.pressure[j] += 1;
                    if !self.infected[j] {
                        self.si_pairs += 1;
                    }
                }
            }
            (EventKind::Recovery, true) => {
                if self.treated[i] {
                    self.treated[i] = false;
                    self.n_treated -= 1;
                }
                self.infected[i] = false;
                self.n_infected -= 1;
                for &j in graph.neighbors(i) {
                    self.pressure[j] -= 1;
                    if !self.infected[j] {
                        self.si_pairs -= 1;
                    }
                }
                self.si_pairs += self.pressure[i] as u64;
            }
            _ => return Err(EpidemicError::InconsistentEvent { node: i }),
        }
        self.time += event.dt;
        Ok(())
    }
}

/// Transition rate of node `i`.
pub fn node_rate(state: &EpidemicState, params: &EpidemicParams, i: usize) -> f64 {
    if state.is_infected(i) {
        params.delta + if state.is_treated(i) { params.rho } else { 0.0 }
    } else {
        params.beta * state.pressure(i) as f64
    }
}

/// `sum_i (delta + rho r_i) x_i`.
pub fn total_recovery_pressure(state: &EpidemicState, params: &EpidemicParams) -> f64 {
    params.delta * state.n_infected() as f64 + params.rho * state.n_treated() as f64
}

/// `beta * sum_ij A_ij (1 - x_i) x_j`.
pub fn total_infection_pressure(state: &EpidemicState, params: &EpidemicParams) -> f64 {
    params.beta * state.infectious_edges() as f64
}

pub fn total_rate(state: &EpidemicState, params: &EpidemicParams) -> f64 {
    total_infection_pressure(state, params) + total_recovery_pressure(state, params)
}

/// Draws the next transition: waiting time, then category, then node.
pub fn sample_next_event<R: Rng + ?Sized>(
    state: &EpidemicState,
    params: &EpidemicParams,
    rng: &mut R,
) -> Result<EventDraw, EpidemicError> {
    let infection = total_infection_pressure(state, params);
    let recovery = total_recovery_pressure(state, params);
    let lambda = infection + recovery;
    if !(lambda > 0.0) {
        return Err(EpidemicError::Absorbing);
    }
    let dt = loop {
        let e: f64 = Exp1.sample(rng);
        if e > 0.0 {
            break e / lambda;
        }
    };
    let category: f64 = rng.random();
    let pick: f64 = rng.random();
    let n = state.node_count();
    if category * lambda < infection {
        // integer scan over healthy nodes weighted by infected-neighbor count
        let target = ((pick * state.si_pairs as f64) as u64).min(state.si_pairs - 1);
        let mut acc = 0u64;
        for i in 0..n {
            if !state.infected[i] && state.pressure[i] > 0 {
                acc += state.pressure[i] as u64;
                if acc > target {
                    return Ok(EventDraw {
                        node: i,
                        kind: EventKind::Infection,
                        dt,
                    });
                }
            }
        }
        unreachable!("infectious edge count out of sync with pressures");
    } else {
        let target = pick * recovery;
        let mut acc = 0.0;
        let mut last = None;
        for i in 0..n {
            if !state.infected[i] {
                continue;
            }
            let w = node_rate(state, params, i);
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = Some(i);
            if acc > target {
                break;
            }
        }
        let node = last.expect("positive recovery pressure implies a recovering node");
        Ok(EventDraw {
            node,
            kind: EventKind::Recovery,
            dt,
        })
    }
}
