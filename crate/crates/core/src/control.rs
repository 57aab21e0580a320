//! The allocation loop: after every epidemic event a round reassigns the
//! resources, using a sample of the infected nodes.
//!
//! * DRA sees every untreated infected node and keeps the `b` best scores.
//! * RDRA does the same on a sample of `floor(alpha * N^I)` nodes.
//! * SDRA reveals the sample one node at a time to an online rule.
//!
//! The infection state is frozen during a round.

use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use thiserror::Error;

use crate::epidemic::{sample_next_event, EpidemicError, EpidemicParams, EpidemicState};
use crate::graph::Graph;
use crate::metrics::{RoundRow, RunRecord, StopReason};
use crate::rng::{self, SimRng, Stream};
use crate::scoring::{self, PriorityPlan, Scorer, ScorerKind, SpectralOptions};
use crate::selection::{
    compute_cost, compute_quality, offline_select, run_online, top_nodes, CutoffTable, OnlineRule,
    Scored, SelectionError, WsspInstance,
};

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error(transparent)]
    Epidemic(#[from] EpidemicError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("no cutoff tabulated for b={b}, n={n}")]
    MissingCutoff { b: usize, n: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Uniform,
    /// Without-replacement draws with weight `exp(score)`.
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub alpha: f64,
    pub mode: SampleMode,
}

impl SamplerConfig {
    pub fn uniform(alpha: f64) -> Self {
        SamplerConfig {
            alpha,
            mode: SampleMode::Uniform,
        }
    }

    /// `floor(alpha * n_infected)`.
    pub fn sample_size(&self, n_infected: usize) -> usize {
        (self.alpha * n_infected as f64 + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Dra,
    Rdra,
    Sdra,
}

/// How an SDRA strategy decides online.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OnlineAlgo {
    /// CCM with the tabulated cutoff for the previous round's quality.
    CcmStar,
    /// CCM with `c = round(sqrt(n) - 1)`.
    CcmSqrt,
    /// CCM with `c = floor(n / e)`.
    CcmNOverE,
    CcmFixed(usize),
    /// CCM with `c = floor(f * n)`.
    CcmFraction(f64),
    Mean,
    Median,
    /// Accepts exactly the offline selection.
    Oracle,
}

impl OnlineAlgo {
    pub fn name(&self) -> String {
        match self {
            OnlineAlgo::CcmStar => "CCM*".into(),
            OnlineAlgo::CcmSqrt => "CCM-sqrt".into(),
            OnlineAlgo::CcmNOverE => "CCM-n/e".into(),
            OnlineAlgo::CcmFixed(c) => format!("CCM-c{c}"),
            OnlineAlgo::CcmFraction(f) => format!("CCM-f{f}"),
            OnlineAlgo::Mean => "MEAN".into(),
            OnlineAlgo::Median => "MEDIAN".into(),
            OnlineAlgo::Oracle => "ORACLE".into(),
        }
    }

    /// Concrete rule for a round with `n` candidates.
    pub fn rule(
        &self,
        b: usize,
        n: usize,
        quality: f64,
        table: Option<&CutoffTable>,
    ) -> Result<OnlineRule, ControlError> {
        let clamp = |c: usize| c.min(n.saturating_sub(1));
        let cutoff = match *self {
            OnlineAlgo::Mean => return Ok(OnlineRule::Mean),
            OnlineAlgo::Median => return Ok(OnlineRule::Median),
            OnlineAlgo::Oracle => return Ok(OnlineRule::Oracle),
            OnlineAlgo::CcmStar => table
                .and_then(|t| t.lookup(b, n, quality))
                .ok_or(ControlError::MissingCutoff { b, n })?,
            OnlineAlgo::CcmSqrt => ((n as f64).sqrt() - 1.0).round().max(0.0) as usize,
            OnlineAlgo::CcmNOverE => (n as f64 / std::f64::consts::E).floor() as usize,
            OnlineAlgo::CcmFixed(c) => c,
            OnlineAlgo::CcmFraction(f) => (f * n as f64).floor() as usize,
        };
        Ok(OnlineRule::Ccm {
            cutoff: clamp(cutoff),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    pub family: Family,
    pub scorer: ScorerKind,
    /// Set iff `family` is SDRA.
    pub online: Option<OnlineAlgo>,
}

impl StrategyConfig {
    pub fn dra(scorer: ScorerKind) -> Self {
        StrategyConfig {
            family: Family::Dra,
            scorer,
            online: None,
        }
    }

    pub fn rdra(scorer: ScorerKind) -> Self {
        StrategyConfig {
            family: Family::Rdra,
            scorer,
            online: None,
        }
    }

    pub fn sdra(scorer: ScorerKind, algo: OnlineAlgo) -> Self {
        StrategyConfig {
            family: Family::Sdra,
            scorer,
            online: Some(algo),
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        match (self.family, self.online) {
            (Family::Sdra, None) => Err(ControlError::InvalidConfig(
                "SDRA needs an online algorithm".into(),
            )),
            (Family::Dra | Family::Rdra, Some(_)) => Err(ControlError::InvalidConfig(
                "online algorithm given for a batch strategy".into(),
            )),
            _ => Ok(()),
        }
    }

    /// The batch strategy with the same scorer and sample.
    pub fn offline_counterpart(&self) -> Self {
        match self.family {
            Family::Dra => *self,
            _ => StrategyConfig::rdra(self.scorer),
        }
    }

    pub fn name(&self) -> String {
        match (self.family, self.online) {
            (Family::Dra, _) => "DRA".into(),
            (Family::Rdra, _) => "RDRA".into(),
            (Family::Sdra, Some(a)) => format!("SDRA-{}", a.name()),
            (Family::Sdra, None) => "SDRA".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialInfection {
    All,
    /// `ceil(f * N)` uniformly chosen nodes.
    Fraction(f64),
    Nodes(Vec<usize>),
}

/// Stopping rule of a run; the first limit reached wins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub t_max: f64,
    pub max_rounds: u64,
    pub max_events: u64,
}

impl Horizon {
    pub fn time(t_max: f64) -> Self {
        Horizon {
            t_max,
            max_rounds: u64::MAX,
            max_events: 50_000_000,
        }
    }

    pub fn rounds(k: u64) -> Self {
        Horizon {
            t_max: f64::INFINITY,
            max_rounds: k,
            max_events: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: EpidemicParams,
    pub sampler: SamplerConfig,
    pub strategy: StrategyConfig,
    pub horizon: Horizon,
    pub initial: InitialInfection,
}

impl RunConfig {
    pub fn validate(&self, graph: &Graph) -> Result<(), ControlError> {
        self.params.validate()?;
        self.strategy.validate()?;
        if !(0.0..=1.0).contains(&self.sampler.alpha) {
            return Err(ControlError::InvalidConfig(format!(
                "alpha must lie in [0, 1], got {}",
                self.sampler.alpha
            )));
        }
        match &self.initial {
            InitialInfection::Fraction(f) if !(0.0..=1.0).contains(f) => {
                return Err(ControlError::InvalidConfig(format!(
                    "initial fraction must lie in [0, 1], got {f}"
                )))
            }
            InitialInfection::Nodes(v) if v.iter().any(|&i| i >= graph.node_count()) => {
                return Err(ControlError::InvalidConfig(
                    "initial node out of range".into(),
                ))
            }
            _ => {}
        }
        if !(self.horizon.t_max > 0.0) {
            return Err(ControlError::InvalidConfig("horizon must be positive".into()));
        }
        Ok(())
    }
}

/// Per-graph precomputation shared by all runs: spectral drops and the
/// priority plan.
#[derive(Debug, Clone, Default)]
pub struct ScoringContext {
    pub lrsr: Option<Arc<[f64]>>,
    pub plan: Option<Arc<PriorityPlan>>,
    /// Nodes whose spectral score fell back to the degree.
    pub lrsr_fallbacks: usize,
}

impl ScoringContext {
    /// Prepares whatever the listed scorers need.
    pub fn prepare(graph: &Graph, kinds: &[ScorerKind], plan_budget: usize, seed: u64) -> Self {
        let mut ctx = ScoringContext::default();
        if kinds.contains(&ScorerKind::Lrsr) {
            let (scores, fallbacks) = scoring::lrsr_scores(graph, SpectralOptions::default());
            ctx.lrsr = Some(scores.into());
            ctx.lrsr_fallbacks = fallbacks;
        }
        if kinds.contains(&ScorerKind::Mcm) {
            ctx.plan = Some(Arc::new(scoring::optimize_plan(graph, plan_budget, seed)));
        }
        ctx
    }

    pub fn with_plan(mut self, plan: PriorityPlan) -> Self {
        self.plan = Some(Arc::new(plan));
        self
    }

    /// A fresh scorer for one run.
    pub fn scorer(&self, kind: ScorerKind, seed: u64) -> Result<Scorer, ControlError> {
        match kind {
            ScorerKind::Rand => Ok(Scorer::Rand(rng::stream(seed, Stream::Scorer))),
            ScorerKind::Lrie => Ok(Scorer::Lrie),
            ScorerKind::Lrsr => self.lrsr.clone().map(Scorer::Lrsr).ok_or_else(|| {
                ControlError::InvalidConfig("LRSR scores were not prepared".into())
            }),
            ScorerKind::Mcm => self.plan.clone().map(Scorer::Mcm).ok_or_else(|| {
                ControlError::InvalidConfig("MCM plan was not prepared".into())
            }),
        }
    }
}

/// Currently treated (hence infected) nodes.
pub fn warm_start(state: &EpidemicState) -> Vec<usize> {
    state.treated_nodes().collect()
}

/// Infected nodes without a resource.
pub fn untreated_infected(state: &EpidemicState) -> Vec<usize> {
    state.infected_nodes().filter(|&i| !state.is_treated(i)).collect()
}

/// Draws `min(floor(alpha * N^I), #untreated infected)` distinct untreated
/// infected nodes.
pub fn draw_sample<R: Rng + ?Sized>(
    graph: &Graph,
    state: &EpidemicState,
    sampler: &SamplerConfig,
    scorer: &mut Scorer,
    rng: &mut R,
) -> Vec<usize> {
    let pool = untreated_infected(state);
    let k = sampler.sample_size(state.n_infected()).min(pool.len());
    if k == 0 {
        return Vec::new();
    }
    match sampler.mode {
        SampleMode::Uniform => index::sample(rng, pool.len(), k)
            .into_iter()
            .map(|p| pool[p])
            .collect(),
        SampleMode::Softmax => {
            let scores: Vec<f64> = pool.iter().map(|&i| scorer.score(graph, state, i)).collect();
            let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = scores.iter().map(|s| (s - top).exp().max(1e-300)).collect();
            index::sample_weighted(rng, pool.len(), |p| weights[p], k)
                .expect("weights are positive and finite")
                .into_iter()
                .map(|p| pool[p])
                .collect()
        }
    }
}

fn scored(
    graph: &Graph,
    state: &EpidemicState,
    scorer: &mut Scorer,
    nodes: &[usize],
) -> Vec<Scored> {
    nodes
        .iter()
        .map(|&i| Scored::new(i, scorer.score(graph, state, i)))
        .collect()
}

/// Batch reallocation: the `b` best of the current holders and the sample.
pub fn run_rdra_round(
    graph: &Graph,
    state: &EpidemicState,
    sample: &[usize],
    scorer: &mut Scorer,
    budget: usize,
) -> Vec<usize> {
    let mut nodes = warm_start(state);
    nodes.extend_from_slice(sample);
    top_nodes(scored(graph, state, scorer, &nodes), budget)
}

/// Allocation and statistics of one sequential round.
#[derive(Debug, Clone, PartialEq)]
pub struct SdraRound {
    pub instance: WsspInstance,
    pub allocation: Vec<usize>,
    pub offline: Vec<usize>,
    pub epsilon: f64,
    pub cost: f64,
    /// Quality of this round's outcome, used by the next round.
    pub quality: f64,
}

/// Sequential reallocation. The sample is shuffled with `arrival` and
/// revealed in that order; the offline pick on the same inputs gives the
/// error and cost.
#[allow(clippy::too_many_arguments)]
pub fn run_sdra_round<R: Rng + ?Sized>(
    graph: &Graph,
    state: &EpidemicState,
    sample: &[usize],
    scorer: &mut Scorer,
    budget: usize,
    algo: OnlineAlgo,
    quality: f64,
    table: Option<&CutoffTable>,
    arrival: &mut R,
) -> Result<SdraRound, ControlError> {
    let holders = warm_start(state);
    let mut order = sample.to_vec();
    order.shuffle(arrival);
    let instance = WsspInstance::new(
        budget,
        scored(graph, state, scorer, &holders),
        scored(graph, state, scorer, &order),
    )?;
    let rule = algo.rule(budget, order.len(), quality, table)?;
    let decisions = run_online(&instance, rule)?;
    let offline = offline_select(&instance);
    let epsilon = crate::selection::allocation_error(&decisions.selected, &offline);
    let cost = compute_cost(&instance, &decisions.selected);
    let quality = if order.is_empty() {
        quality
    } else {
        compute_quality(&instance, &decisions.selected)
    };
    Ok(SdraRound {
        allocation: decisions.selected,
        instance,
        offline,
        epsilon,
        cost,
        quality,
    })
}

fn initial_state(graph: &Graph, initial: &InitialInfection, rng: &mut SimRng) -> EpidemicState {
    match initial {
        InitialInfection::All => EpidemicState::fully_infected(graph),
        InitialInfection::Fraction(f) => {
            let n = graph.node_count();
            let k = ((f * n as f64).ceil() as usize).min(n);
            EpidemicState::new(graph, index::sample(rng, n, k))
        }
        InitialInfection::Nodes(v) => EpidemicState::new(graph, v.iter().copied()),
    }
}

/// Simulates one run from `seed`.
///
/// Every consumer of randomness owns a separate stream of the seed, so two
/// strategies started from the same seed share their initial condition and
/// the epidemic and sampling draws.
pub fn simulate(
    graph: &Graph,
    cfg: &RunConfig,
    scorer: &mut Scorer,
    table: Option<&CutoffTable>,
    seed: u64,
) -> Result<RunRecord, ControlError> {
    simulate_with(graph, cfg, scorer, table, seed, |_, _| {})
}

/// [`simulate`] with a hook called after every round.
pub fn simulate_with<F>(
    graph: &Graph,
    cfg: &RunConfig,
    scorer: &mut Scorer,
    table: Option<&CutoffTable>,
    seed: u64,
    mut on_round: F,
) -> Result<RunRecord, ControlError>
where
    F: FnMut(&EpidemicState, &RoundRow),
{
    cfg.validate(graph)?;
    let budget = cfg.params.budget;
    let mut init_rng = rng::stream(seed, Stream::Initial);
    let mut epidemic_rng = rng::stream(seed, Stream::Epidemic);
    let mut sampling_rng = rng::stream(seed, Stream::Sampling);
    let mut arrival_rng = rng::stream(seed, Stream::Arrival);

    let mut state = initial_state(graph, &cfg.initial, &mut init_rng);
    let infected: Vec<usize> = state.infected_nodes().collect();
    let k = budget.min(infected.len());
    let first: Vec<usize> = index::sample(&mut init_rng, infected.len(), k)
        .into_iter()
        .map(|p| infected[p])
        .collect();
    state.set_allocation(&first, budget)?;

    let mut quality = 0.5;
    let mut rows = Vec::new();
    let mut events: u64 = 0;
    let stop = loop {
        state.advance_round();
        let mut row = RoundRow {
            t: state.time(),
            n_infected: state.n_infected(),
            round: state.round(),
            epsilon: None,
            cost: None,
            quality: None,
        };
        let allocation = match cfg.strategy.family {
            Family::Dra => {
                let pool = untreated_infected(&state);
                run_rdra_round(graph, &state, &pool, scorer, budget)
            }
            Family::Rdra => {
                let sample = draw_sample(graph, &state, &cfg.sampler, scorer, &mut sampling_rng);
                run_rdra_round(graph, &state, &sample, scorer, budget)
            }
            Family::Sdra => {
                let algo = cfg.strategy.online.expect("validated");
                let sample = draw_sample(graph, &state, &cfg.sampler, scorer, &mut sampling_rng);
                let round = run_sdra_round(
                    graph,
                    &state,
                    &sample,
                    scorer,
                    budget,
                    algo,
                    quality,
                    table,
                    &mut arrival_rng,
                )?;
                row.epsilon = Some(round.epsilon);
                row.cost = Some(round.cost);
                row.quality = Some(round.quality);
                quality = round.quality;
                round.allocation
            }
        };
        state.set_allocation(&allocation, budget)?;
        on_round(&state, &row);
        rows.push(row);

        if rows.len() as u64 >= cfg.horizon.max_rounds {
            break StopReason::RoundLimit;
        }
        if events >= cfg.horizon.max_events {
            break StopReason::EventLimit;
        }
        let event = match sample_next_event(&state, &cfg.params, &mut epidemic_rng) {
            Ok(e) => e,
            Err(EpidemicError::Absorbing) if state.n_infected() == 0 => break StopReason::Extinct,
            Err(EpidemicError::Absorbing) => break StopReason::Frozen,
            Err(e) => return Err(e.into()),
        };
        if state.time() + event.dt > cfg.horizon.t_max {
            break StopReason::TimeHorizon;
        }
        state.apply_event(graph, &event)?;
        events += 1;
    };
    let t_end = match stop {
        StopReason::RoundLimit | StopReason::EventLimit => state.time(),
        _ => cfg.horizon.t_max,
    };
    Ok(RunRecord {
        node_count: graph.node_count(),
        budget,
        seed,
        rows,
        t_end,
        stop,
    })
}
