use std::path::Path;

use sisctl_core::control::{simulate, RunConfig, StrategyConfig};
use sisctl_core::meanfield::{integrate, uniform_grid, IntegratorOptions, MomentParams, MomentState};
use sisctl_core::metrics::{auc_infection, mean_se, RunRecord};
use sisctl_core::scoring::ScorerKind;
use sisctl_core::selection::CutoffTable;

use super::common::{label, needs_table, par_map, provide_table, scoring_context};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{create_csv, ensure_dir, finish, num, opt, slug};

/// Points of the grid on which `eta_t` is averaged across seeds.
pub const ETA_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct AucSummary {
    pub strategy: String,
    pub auc_mean: f64,
    pub auc_se: f64,
    pub seeds: usize,
}

struct Plan {
    labels: Vec<String>,
    configs: Vec<RunConfig>,
    table: Option<CutoffTable>,
    kinds: Vec<ScorerKind>,
}

fn plan(cfg: &ExperimentConfig) -> Result<Plan> {
    cfg.validate_run()?;
    let mut labels = Vec::new();
    let mut configs = Vec::new();
    for s in &cfg.strategies {
        let rc = cfg.run_config(s)?;
        let name = label(&rc.strategy, s.alpha);
        if labels.contains(&name) {
            return Err(CliError::config(format!("strategy {name} is listed twice")));
        }
        labels.push(name);
        configs.push(rc);
    }
    let strategies: Vec<StrategyConfig> = configs.iter().map(|c| c.strategy).collect();
    let table = if needs_table(&strategies) {
        let n = cfg.graph_for(cfg.seed_offset)?.node_count();
        let alpha = configs.iter().map(|c| c.sampler.alpha).fold(0.0, f64::max);
        let max_n = (alpha * n as f64).floor() as usize;
        Some(provide_table(cfg, &[cfg.epidemic.budget], max_n)?)
    } else {
        None
    };
    let mut kinds: Vec<ScorerKind> = Vec::new();
    for s in &strategies {
        if !kinds.contains(&s.scorer) {
            kinds.push(s.scorer);
        }
    }
    Ok(Plan {
        labels,
        configs,
        table,
        kinds,
    })
}

/// Executes every (strategy, seed) run and writes the run records, the
/// AUC table, the averaged `eta_t` curves and, when configured, the
/// mean-field trajectories.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path, threads: Option<usize>) -> Result<Vec<AucSummary>> {
    let p = plan(cfg)?;
    let t_max = cfg.horizon.t_max.expect("validated");
    let digest = cfg.digest();
    let seeds: Vec<u64> = cfg.seeds().collect();

    let per_seed: Vec<Vec<RunRecord>> = par_map(threads, &seeds, |&seed| {
        let g = cfg.graph_for(seed)?;
        let ctx = scoring_context(cfg, &g, &p.kinds)?;
        p.configs
            .iter()
            .map(|rc| {
                let mut scorer = ctx.scorer(rc.strategy.scorer, seed).map_err(CliError::runtime)?;
                rc.validate(&g).map_err(CliError::config)?;
                simulate(&g, rc, &mut scorer, p.table.as_ref(), seed).map_err(CliError::runtime)
            })
            .collect()
    })?;

    ensure_dir(out)?;
    let runs_dir = out.join("runs");
    ensure_dir(&runs_dir)?;
    let grid = uniform_grid(t_max, ETA_POINTS);
    let (auc_path, mut auc_w) = create_csv(out, "auc.csv", &digest, &["strategy", "auc_mean", "auc_se", "seeds"])?;
    let (eta_path, mut eta_w) = create_csv(out, "eta.csv", &digest, &["strategy", "t", "eta_mean", "eta_se"])?;
    let mut summaries = Vec::new();
    for (k, name) in p.labels.iter().enumerate() {
        let mut aucs = Vec::with_capacity(seeds.len());
        let mut eta = vec![Vec::with_capacity(seeds.len()); grid.len()];
        for (seed, records) in seeds.iter().zip(&per_seed) {
            let rec = &records[k];
            write_record(&runs_dir, &format!("{}_seed{seed}.csv", slug(name)), &digest, rec)?;
            aucs.push(auc_infection(rec, t_max).map_err(CliError::runtime)?);
            for (i, &t) in grid.iter().enumerate() {
                let infected = rec.infected_at(t).unwrap_or(0);
                eta[i].push(infected as f64 / rec.node_count as f64);
            }
        }
        let (auc_mean, auc_se) = mean_se(&aucs);
        auc_w.write_record([name.clone(), num(auc_mean), num(auc_se), seeds.len().to_string()])?;
        for (t, values) in grid.iter().zip(&eta) {
            let (m, se) = mean_se(values);
            eta_w.write_record([name.clone(), num(*t), num(m), num(se)])?;
        }
        summaries.push(AucSummary {
            strategy: name.clone(),
            auc_mean,
            auc_se,
            seeds: seeds.len(),
        });
    }
    finish(&auc_path, auc_w)?;
    finish(&eta_path, eta_w)?;
    if cfg.meanfield.is_some() {
        write_meanfield(cfg, out, &digest)?;
    }
    Ok(summaries)
}

pub fn write_record(dir: &Path, name: &str, digest: &str, rec: &RunRecord) -> Result<()> {
    let (path, mut w) = create_csv(
        dir,
        name,
        digest,
        &["t", "n_infected", "round", "epsilon", "cost", "quality"],
    )?;
    for r in &rec.rows {
        w.write_record([
            num(r.t),
            r.n_infected.to_string(),
            r.round.to_string(),
            opt(r.epsilon),
            opt(r.cost),
            opt(r.quality),
        ])?;
    }
    finish(&path, w)
}

/// Moment trajectories for the first seed's graph, with its mean degree.
fn write_meanfield(cfg: &ExperimentConfig, out: &Path, digest: &str) -> Result<()> {
    let mf = cfg.meanfield.as_ref().expect("checked by caller");
    let g = cfg.graph_for(cfg.seed_offset)?;
    let n = g.node_count() as f64;
    let params = MomentParams {
        beta: cfg.epidemic.beta,
        delta: cfg.epidemic.delta,
        rho: cfg.epidemic.rho,
        budget: cfg.epidemic.budget as f64,
        kbar: g.mean_degree(),
        n,
    };
    let t_end = mf.t_end.or(cfg.horizon.t_max).unwrap_or(1.0);
    let grid = uniform_grid(t_end, mf.points);
    let s0 = MomentState::point(cfg.initial.count(g.node_count()));
    let (path, mut w) = create_csv(out, "trajectory.csv", digest, &["t", "m1", "m2", "closure"])?;
    for closure in &mf.closures {
        let traj = integrate(&params, closure.closure(), s0, &grid, IntegratorOptions::default())
            .map_err(CliError::runtime)?;
        for i in 0..traj.t.len() {
            w.write_record([
                num(traj.t[i]),
                num(traj.m1[i]),
                num(traj.m2[i]),
                traj.closure.name().to_string(),
            ])?;
        }
    }
    finish(&path, w)
}
