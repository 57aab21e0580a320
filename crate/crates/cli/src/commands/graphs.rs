use std::path::{Path, PathBuf};

use sisctl_core::graph::{write_edge_list, Graph};
use sisctl_core::scoring::{compute_maxcut, optimize_plan, write_plan};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::output::{ensure_dir, write_text};

fn graph(cfg: &ExperimentConfig) -> Result<Graph> {
    cfg.graph_for(cfg.seed_offset)
}

/// Writes the configured network as an edge list.
pub fn cmd_gen_graph(cfg: &ExperimentConfig, out: &Path) -> Result<(PathBuf, Graph)> {
    let g = graph(cfg)?;
    ensure_dir(out)?;
    let header = vec![
        format!("config_digest={}", cfg.digest()),
        format!("nodes={} edges={}", g.node_count(), g.edge_count()),
    ];
    let path = out.join("graph.edges");
    write_text(&path, &write_edge_list(&g, &header))?;
    Ok((path, g))
}

/// Optimizes an MCM priority plan for the configured network.
pub fn cmd_plan(cfg: &ExperimentConfig, out: &Path) -> Result<(PathBuf, usize)> {
    let g = graph(cfg)?;
    let plan = optimize_plan(&g, cfg.mcm.budget, cfg.mcm.seed);
    let maxcut = compute_maxcut(&g, &plan).map_err(CliError::runtime)?;
    let body = write_plan(&g, &plan).map_err(CliError::runtime)?;
    ensure_dir(out)?;
    let path = out.join("plan.txt");
    write_text(&path, &format!("# config_digest={}\n{body}", cfg.digest()))?;
    Ok((path, maxcut))
}
