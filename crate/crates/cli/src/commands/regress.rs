use std::path::Path;

use sisctl_core::control::{Horizon, RunConfig, StrategyConfig};
use sisctl_core::metrics::{fit_regression, mean_se, paired_offline_run, RegressionFit};

use super::common::{needs_table, par_map, provide_table, scoring_context};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{create_csv, ensure_dir, finish, num};

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRow {
    pub alpha: f64,
    pub strategy: String,
    pub a_e: f64,
    pub a_dn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFit {
    pub alpha: f64,
    pub rows: Vec<RegressionRow>,
    /// `None` when the points do not determine a line.
    pub fit: Option<RegressionFit>,
}

/// Paired online/offline runs for every rule and sampling fraction, then
/// one least-squares line of `A_dN` on `A_e` per fraction.
pub fn cmd_regress(cfg: &ExperimentConfig, out: &Path, threads: Option<usize>) -> Result<Vec<AlphaFit>> {
    let spec = &cfg.regression;
    if spec.online.is_empty() || spec.alphas.is_empty() {
        return Err(CliError::config("`regression.online` and `regression.alphas` must not be empty"));
    }
    if spec.rounds == 0 || cfg.seeds == 0 {
        return Err(CliError::config("`regression.rounds` and `seeds` must be positive"));
    }
    let params = cfg.epidemic.params()?;
    let horizon = Horizon {
        max_rounds: spec.rounds,
        ..cfg.horizon.to_core()
    };
    let mut jobs: Vec<(f64, StrategyConfig)> = Vec::new();
    for &alpha in &spec.alphas {
        for o in &spec.online {
            let s = StrategyConfig::sdra(spec.scorer.kind(), o.algo());
            s.validate().map_err(CliError::config)?;
            jobs.push((alpha, s));
        }
    }
    let configs: Vec<RunConfig> = jobs
        .iter()
        .map(|&(alpha, strategy)| RunConfig {
            params,
            sampler: cfg.sampler.to_core(Some(alpha)),
            strategy,
            horizon,
            initial: cfg.initial.to_core(),
        })
        .collect();
    let first = cfg.graph_for(cfg.seed_offset)?;
    for rc in &configs {
        rc.validate(&first).map_err(CliError::config)?;
    }
    let table = if needs_table(jobs.iter().map(|(_, s)| s)) {
        let alpha = spec.alphas.iter().copied().fold(0.0, f64::max);
        let max_n = (alpha * first.node_count() as f64).floor() as usize;
        Some(provide_table(cfg, &[cfg.epidemic.budget], max_n)?)
    } else {
        None
    };
    let rounds = spec.rounds as usize;
    let seeds: Vec<u64> = cfg.seeds().collect();
    let kind = spec.scorer.kind();

    // per seed: (A_e, A_dN) for every job
    let per_seed: Vec<Vec<(f64, f64)>> = par_map(threads, &seeds, |&seed| {
        let g = cfg.graph_for(seed)?;
        let ctx = scoring_context(cfg, &g, &[kind])?;
        configs
            .iter()
            .map(|rc| {
                let pair = paired_offline_run(&g, rc, &ctx, table.as_ref(), seed).map_err(CliError::runtime)?;
                let dn = pair.delta_auc_rounds(rounds).map_err(CliError::runtime)?;
                Ok((pair.error_auc(rounds), dn))
            })
            .collect()
    })?;

    let mut fits = Vec::new();
    for &alpha in &spec.alphas {
        let mut rows = Vec::new();
        for (j, &(a, s)) in jobs.iter().enumerate() {
            if a != alpha {
                continue;
            }
            let a_e: Vec<f64> = per_seed.iter().map(|v| v[j].0).collect();
            let a_dn: Vec<f64> = per_seed.iter().map(|v| v[j].1).collect();
            rows.push(RegressionRow {
                alpha,
                strategy: s.name(),
                a_e: mean_se(&a_e).0,
                a_dn: mean_se(&a_dn).0,
            });
        }
        let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.a_e, r.a_dn)).collect();
        let fit = match fit_regression(&points) {
            Ok(f) => Some(f),
            Err(e) => {
                eprintln!("warning: alpha {alpha}: no regression line ({e})");
                None
            }
        };
        fits.push(AlphaFit { alpha, rows, fit });
    }

    ensure_dir(out)?;
    let digest = cfg.digest();
    let (path, mut w) = create_csv(
        out,
        "regression.csv",
        &digest,
        &["strategy", "A_e", "A_dN", "c1", "c2", "r2", "alpha"],
    )?;
    for f in &fits {
        let (c1, c2, r2) = match &f.fit {
            Some(fit) => (num(fit.c1), num(fit.c2), num(fit.r2)),
            None => Default::default(),
        };
        for r in &f.rows {
            w.write_record([
                r.strategy.clone(),
                num(r.a_e),
                num(r.a_dn),
                c1.clone(),
                c2.clone(),
                r2.clone(),
                num(f.alpha),
            ])?;
        }
    }
    finish(&path, w)?;
    Ok(fits)
}
