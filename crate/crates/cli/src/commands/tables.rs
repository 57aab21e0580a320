use std::path::Path;

use sisctl_core::selection::{build_cutoff_table, CutoffTable, DEFAULT_N_GRID, Q_GRID};

use super::common::write_cutoff_table;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::ensure_dir;

/// Builds the CCM* cutoff table for the configured budgets and grids.
pub fn cmd_cutoff_table(cfg: &ExperimentConfig, out: &Path) -> Result<CutoffTable> {
    let spec = &cfg.cutoff;
    let budgets = spec.budgets.clone().unwrap_or_else(|| vec![cfg.epidemic.budget]);
    let n_grid = spec.n_grid.clone().unwrap_or_else(|| DEFAULT_N_GRID.to_vec());
    let q_grid = spec.q_grid.clone().unwrap_or_else(|| Q_GRID.to_vec());
    let table = build_cutoff_table(&budgets, &n_grid, &q_grid, spec.replicas, spec.seed)
        .map_err(CliError::config)?;
    ensure_dir(out)?;
    write_cutoff_table(out, &cfg.digest(), &table)?;
    Ok(table)
}
