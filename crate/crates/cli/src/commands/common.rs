use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use sisctl_core::control::{OnlineAlgo, ScoringContext, StrategyConfig};
use sisctl_core::graph::Graph;
use sisctl_core::scoring::{parse_plan, ScorerKind};
use sisctl_core::selection::{build_cutoff_table, CutoffCell, CutoffTable, DEFAULT_N_GRID, Q_GRID};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{create_csv, finish, num};

/// Maps `f` over `items` on a pool of `threads` workers (all cores when
/// `None`), keeping the input order.
pub fn par_map<T, U, F>(threads: Option<usize>, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = threads {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(CliError::runtime)?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Display label: the strategy name, plus the scorer when it is not LRIE
/// and the sampling fraction when it overrides the global one.
pub fn label(s: &StrategyConfig, alpha: Option<f64>) -> String {
    let mut name = s.name();
    if s.scorer != ScorerKind::Lrie {
        name = format!("{name}[{}]", s.scorer.name());
    }
    if let Some(a) = alpha {
        name = format!("{name}@{a}");
    }
    name
}

pub fn needs_table<'a>(strategies: impl IntoIterator<Item = &'a StrategyConfig>) -> bool {
    strategies
        .into_iter()
        .any(|s| s.online == Some(OnlineAlgo::CcmStar))
}

/// Grid of sample sizes covering `1..=max_n`: the configured or default
/// grid up to and including the first point past `max_n`.
pub fn n_grid_up_to(cfg: &ExperimentConfig, max_n: usize) -> Vec<usize> {
    let grid = cfg.cutoff.n_grid.clone().unwrap_or_else(|| DEFAULT_N_GRID.to_vec());
    let mut out: Vec<usize> = grid.iter().copied().filter(|&n| n <= max_n).collect();
    if let Some(&next) = grid.iter().find(|&&n| n > max_n) {
        out.push(next);
    }
    out
}

#[derive(Debug, Deserialize)]
struct CellRow {
    b: usize,
    n: usize,
    q_bucket: f64,
    c_star: usize,
    est_cost: f64,
    replicas: usize,
    seed: u64,
}

pub fn load_cutoff_table(path: &Path) -> Result<CutoffTable> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::config(format!("cutoff table {}: {e}", path.display())))?;
    let cells = reader
        .deserialize::<CellRow>()
        .map(|row| {
            row.map(|r| CutoffCell {
                b: r.b,
                n: r.n,
                q_bucket: r.q_bucket,
                c_star: r.c_star,
                est_cost: r.est_cost,
                replicas: r.replicas,
                seed: r.seed,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::config(format!("cutoff table {}: {e}", path.display())))?;
    CutoffTable::from_cells(cells).map_err(CliError::config)
}

/// The table to use for CCM*: loaded from `cutoff.table` when given,
/// otherwise built for `budgets` and samples up to `max_n`.
pub fn provide_table(cfg: &ExperimentConfig, budgets: &[usize], max_n: usize) -> Result<CutoffTable> {
    if let Some(path) = &cfg.cutoff.table {
        return load_cutoff_table(&cfg.resolve(path));
    }
    let q_grid = cfg.cutoff.q_grid.clone().unwrap_or_else(|| Q_GRID.to_vec());
    build_cutoff_table(
        budgets,
        &n_grid_up_to(cfg, max_n.max(1)),
        &q_grid,
        cfg.cutoff.replicas,
        cfg.cutoff.seed,
    )
    .map_err(CliError::config)
}

pub fn write_cutoff_table(dir: &Path, digest: &str, table: &CutoffTable) -> Result<()> {
    let (path, mut w) = create_csv(
        dir,
        "cutoff_table.csv",
        digest,
        &["b", "n", "q_bucket", "c_star", "est_cost", "replicas", "seed"],
    )?;
    for c in table.cells() {
        w.write_record([
            c.b.to_string(),
            c.n.to_string(),
            num(c.q_bucket),
            c.c_star.to_string(),
            num(c.est_cost),
            c.replicas.to_string(),
            c.seed.to_string(),
        ])?;
    }
    finish(&path, w)
}

/// Scorer precomputation for one graph. A plan file is only accepted when
/// every run uses the same graph.
pub fn scoring_context(cfg: &ExperimentConfig, graph: &Graph, kinds: &[ScorerKind]) -> Result<ScoringContext> {
    match (&cfg.mcm.plan, kinds.contains(&ScorerKind::Mcm)) {
        (Some(path), true) => {
            if !cfg.shared_graph() {
                return Err(CliError::config(
                    "`mcm.plan` needs a fixed graph (`graph_seed` or an edge list)",
                ));
            }
            let path = cfg.resolve(path);
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::ConfigRead {
                path: path.clone(),
                source,
            })?;
            let (plan, _) = parse_plan(&text).map_err(CliError::config)?;
            if plan.len() != graph.node_count() {
                return Err(CliError::config(format!(
                    "plan covers {} nodes, graph has {}",
                    plan.len(),
                    graph.node_count()
                )));
            }
            let others: Vec<ScorerKind> = kinds.iter().copied().filter(|&k| k != ScorerKind::Mcm).collect();
            Ok(ScoringContext::prepare(graph, &others, 0, 0).with_plan(plan))
        }
        _ => Ok(ScoringContext::prepare(graph, kinds, cfg.mcm.budget, cfg.mcm.seed)),
    }
}
