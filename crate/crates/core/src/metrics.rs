//! Run records and evaluation statistics.

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::control::{simulate, ControlError, RunConfig, ScoringContext};
use crate::graph::Graph;
use crate::selection::CutoffTable;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("run record has no rows")]
    EmptyRecord,
    #[error("horizon {0} precedes the first record time")]
    BadHorizon(f64),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("regression is degenerate: all A_e values coincide")]
    Degenerate,
}

/// State right after one allocation round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRow {
    pub t: f64,
    pub n_infected: usize,
    pub round: u64,
    /// Online selection error against the offline oracle (SDRA only).
    pub epsilon: Option<f64>,
    pub cost: Option<f64>,
    pub quality: Option<f64>,
}

/// Why a simulation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// No infected nodes remain.
    Extinct,
    /// Nonzero infection but no possible transition.
    Frozen,
    TimeHorizon,
    RoundLimit,
    EventLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub node_count: usize,
    pub budget: usize,
    pub seed: u64,
    /// One row per round; the first row sits at `t = 0`.
    pub rows: Vec<RoundRow>,
    /// End of the observed window.
    pub t_end: f64,
    pub stop: StopReason,
}

impl RunRecord {
    /// Infected count at time `t` (right-continuous step function).
    pub fn infected_at(&self, t: f64) -> Option<usize> {
        let idx = self.rows.partition_point(|r| r.t <= t);
        idx.checked_sub(1).map(|i| self.rows[i].n_infected)
    }

    /// Sum of the per-round errors, or 0 for batch strategies.
    pub fn total_error(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.epsilon).sum()
    }

    /// First round time with no infected node.
    pub fn extinction_time(&self) -> Option<f64> {
        self.rows.iter().find(|r| r.n_infected == 0).map(|r| r.t)
    }

    pub fn is_extinct(&self) -> bool {
        self.stop == StopReason::Extinct
    }
}

/// `int_0^T N^I_t / N dt` of the step trajectory, extended flat past the
/// last row.
pub fn auc_infection(record: &RunRecord, horizon: f64) -> Result<f64, MetricsError> {
    let first = record.rows.first().ok_or(MetricsError::EmptyRecord)?;
    if horizon < first.t {
        return Err(MetricsError::BadHorizon(horizon));
    }
    let n = record.node_count.max(1) as f64;
    let mut area = 0.0;
    for (k, row) in record.rows.iter().enumerate() {
        if row.t >= horizon {
            break;
        }
        let next = record.rows.get(k + 1).map_or(horizon, |r| r.t.min(horizon));
        area += (next - row.t) * row.n_infected as f64;
    }
    Ok(area / n)
}

/// Round-indexed area `sum_{k=1}^K N^I_k / N`. Rounds past the end of the
/// record repeat the last count.
pub fn auc_rounds(record: &RunRecord, rounds: usize) -> Result<f64, MetricsError> {
    let last = record.rows.last().ok_or(MetricsError::EmptyRecord)?;
    let n = record.node_count.max(1) as f64;
    let observed: usize = record.rows.iter().take(rounds).map(|r| r.n_infected).sum();
    let padded = rounds.saturating_sub(record.rows.len()) * last.n_infected;
    Ok((observed + padded) as f64 / n)
}

/// Half the L1 distance between two allocations.
pub fn online_error(online: &[usize], offline: &[usize]) -> f64 {
    crate::selection::allocation_error(online, offline)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub c1: f64,
    pub c2: f64,
    pub r2: f64,
    /// Standard error of the slope.
    pub c1_se: f64,
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares of `A_dN` on `A_e` over `(A_e, A_dN)` points.
pub fn fit_regression(points: &[(f64, f64)]) -> Result<RegressionFit, MetricsError> {
    if points.len() < 3 {
        return Err(MetricsError::TooFewPoints {
            need: 3,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(MetricsError::Degenerate);
    }
    let c1 = sxy / sxx;
    let c2 = my - c1 * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - c1 * p.0 - c2).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let c1_se = (sse / (n - 2.0) / sxx).sqrt();
    Ok(RegressionFit {
        c1,
        c2,
        r2,
        c1_se,
        points: points.to_vec(),
    })
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Paired t statistic on the differences `b - a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    pub mean_diff: f64,
    pub se: f64,
    pub t: f64,
    pub df: f64,
    /// One-sided p-value for `mean(b - a) > 0`.
    pub p_greater: f64,
    /// Two-sided p-value for `mean(b - a) != 0`.
    pub p_two_sided: f64,
}

/// Pairs `a[k]` with `b[k]`, e.g. two strategies under the same seed.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTest, MetricsError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(MetricsError::TooFewPoints {
            need: 2,
            got: a.len().min(b.len()),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let (mean_diff, se) = mean_se(&diffs);
    let df = (diffs.len() - 1) as f64;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let (t, p_greater, p_two_sided) = if se > 0.0 {
        let t = mean_diff / se;
        (t, 1.0 - dist.cdf(t), 2.0 * (1.0 - dist.cdf(t.abs())))
    } else if mean_diff > 0.0 {
        (f64::INFINITY, 0.0, 0.0)
    } else if mean_diff < 0.0 {
        (f64::NEG_INFINITY, 1.0, 0.0)
    } else {
        (0.0, 0.5, 1.0)
    };
    Ok(PairedTest {
        mean_diff,
        se,
        t,
        df,
        p_greater,
        p_two_sided,
    })
}

/// `sum_{k=1}^K eps_k / b` over the first `rounds` rounds.
pub fn error_auc(record: &RunRecord, rounds: usize) -> f64 {
    let total: f64 = record.rows.iter().take(rounds).filter_map(|r| r.epsilon).sum();
    total / record.budget.max(1) as f64
}

/// An online run and its batch counterpart from the same seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedRun {
    pub online: RunRecord,
    pub offline: RunRecord,
}

impl PairedRun {
    /// Round-indexed area of `N^I_online - N^I_offline`, over `N`.
    pub fn delta_auc_rounds(&self, rounds: usize) -> Result<f64, MetricsError> {
        Ok(auc_rounds(&self.online, rounds)? - auc_rounds(&self.offline, rounds)?)
    }

    pub fn error_auc(&self, rounds: usize) -> f64 {
        error_auc(&self.online, rounds)
    }
}

/// Simulates `cfg` and its batch counterpart under common random numbers.
/// The online record carries the per-round error against the offline pick
/// on the same round inputs.
pub fn paired_offline_run(
    graph: &Graph,
    cfg: &RunConfig,
    ctx: &ScoringContext,
    table: Option<&CutoffTable>,
    seed: u64,
) -> Result<PairedRun, ControlError> {
    let mut scorer = ctx.scorer(cfg.strategy.scorer, seed)?;
    let online = simulate(graph, cfg, &mut scorer, table, seed)?;
    let offline_cfg = RunConfig {
        strategy: cfg.strategy.offline_counterpart(),
        ..cfg.clone()
    };
    let mut scorer = ctx.scorer(cfg.strategy.scorer, seed)?;
    let offline = simulate(graph, &offline_cfg, &mut scorer, table, seed)?;
    Ok(PairedRun { online, offline })
}
