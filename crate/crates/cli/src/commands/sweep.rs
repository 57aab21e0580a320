use std::path::Path;

use sisctl_core::control::{simulate, RunConfig};
use sisctl_core::metrics::{auc_infection, mean_se};

use super::common::{needs_table, par_map, provide_table, scoring_context};
use crate::config::{ExperimentConfig, SweepType};
use crate::error::{CliError, Result};
use crate::output::{create_csv, ensure_dir, finish, num};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: SweepType,
    pub kbar: f64,
    pub alpha: f64,
    pub auc_mean: f64,
    pub auc_se: f64,
}

/// AUC of one strategy for every (network type, mean degree, alpha) cell.
/// Each seed draws a fresh graph of the cell's type.
pub fn cmd_sweep_alpha(cfg: &ExperimentConfig, out: &Path, threads: Option<usize>) -> Result<Vec<SweepRow>> {
    let spec = &cfg.sweep;
    let t_max = match cfg.horizon.t_max {
        Some(t) if t.is_finite() && t > 0.0 => t,
        _ => return Err(CliError::config("`horizon.t_max` must be a positive number")),
    };
    if spec.types.is_empty() || spec.kbars.is_empty() || spec.alphas.is_empty() || cfg.seeds == 0 {
        return Err(CliError::config("sweep needs types, kbars, alphas and seeds"));
    }
    let strategy = spec.strategy.to_core()?;
    let params = cfg.epidemic.params()?;
    let base = RunConfig {
        params,
        sampler: cfg.sampler.to_core(None),
        strategy,
        horizon: cfg.horizon.to_core(),
        initial: cfg.initial.to_core(),
    };
    let table = if needs_table([&strategy]) {
        let alpha = spec.alphas.iter().copied().fold(0.0, f64::max);
        Some(provide_table(cfg, &[cfg.epidemic.budget], (alpha * spec.n as f64).floor() as usize)?)
    } else {
        None
    };

    let mut cells = Vec::new();
    for &kind in &spec.types {
        for &kbar in &spec.kbars {
            let network = kind.network(spec.n, kbar, spec.rewire)?;
            for &alpha in &spec.alphas {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(CliError::config(format!("alpha {alpha} outside [0, 1]")));
                }
                cells.push((kind, kbar, network.clone(), alpha));
            }
        }
    }
    let seeds: Vec<u64> = cfg.seeds().collect();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let aucs: Vec<f64> = par_map(threads, &jobs, |&(c, seed)| {
        let (_, _, network, alpha) = &cells[c];
        let g = network.build(seed, &cfg.base_dir)?;
        let ctx = scoring_context(cfg, &g, &[strategy.scorer])?;
        let rc = RunConfig {
            sampler: cfg.sampler.to_core(Some(*alpha)),
            ..base.clone()
        };
        rc.validate(&g).map_err(CliError::config)?;
        let mut scorer = ctx.scorer(strategy.scorer, seed).map_err(CliError::runtime)?;
        let rec = simulate(&g, &rc, &mut scorer, table.as_ref(), seed).map_err(CliError::runtime)?;
        auc_infection(&rec, t_max).map_err(CliError::runtime)
    })?;

    ensure_dir(out)?;
    let (path, mut w) = create_csv(
        out,
        "sweep.csv",
        &cfg.digest(),
        &["type", "kbar", "alpha", "auc_mean", "auc_se"],
    )?;
    let mut rows = Vec::new();
    for (c, (kind, kbar, _, alpha)) in cells.iter().enumerate() {
        let chunk = &aucs[c * seeds.len()..(c + 1) * seeds.len()];
        let (auc_mean, auc_se) = mean_se(chunk);
        w.write_record([kind.label().to_string(), num(*kbar), num(*alpha), num(auc_mean), num(auc_se)])?;
        rows.push(SweepRow {
            kind: *kind,
            kbar: *kbar,
            alpha: *alpha,
            auc_mean,
            auc_se,
        });
    }
    finish(&path, w)?;
    Ok(rows)
}
