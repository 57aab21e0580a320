use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use sisctl_cli::commands;
use sisctl_cli::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "sisctl", version, about = "Controlled SIS epidemic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every strategy over all seeds; write run records, AUC and eta summaries.
    Run(Common),
    /// Fit infection gap against online error for each sampling fraction.
    Regress(Common),
    /// Build the CCM* cutoff table.
    CutoffTable(Common),
    /// AUC of one strategy across network types, mean degrees and sampling fractions.
    SweepAlpha(Common),
    /// Write the configured network as an edge list.
    GenGraph(Common),
    /// Optimize an MCM priority plan for the configured network.
    Plan(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config. Optional for cutoff-table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of seeds, overriding the config.
    #[arg(long)]
    seeds: Option<u64>,
    /// Output directory, overriding the config (default: out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self, required: bool) -> Result<(ExperimentConfig, PathBuf), CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None if required => return Err(CliError::Config("--config is required".into())),
            None => ExperimentConfig::parse("{}").expect("empty config parses"),
        };
        if let Some(k) = self.seeds {
            cfg.seeds = k;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.out.as_ref().map(|p| cfg.resolve(p)))
            .unwrap_or_else(|| PathBuf::from("out"));
        cfg.out = Some(out.clone());
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(c) => {
            let (cfg, out) = c.load(true)?;
            let rows = commands::cmd_run(&cfg, &out, c.threads)?;
            for r in rows {
                println!("{:<24} auc {:.6} +- {:.6} ({} seeds)", r.strategy, r.auc_mean, r.auc_se, r.seeds);
            }
            println!("wrote {}", out.display());
        }
        Command::Regress(c) => {
            let (cfg, out) = c.load(true)?;
            for f in commands::cmd_regress(&cfg, &out, c.threads)? {
                match &f.fit {
                    Some(fit) => println!(
                        "alpha {}: c1 {:.4} c2 {:.4} r2 {:.4} ({} points)",
                        f.alpha,
                        fit.c1,
                        fit.c2,
                        fit.r2,
                        fit.points.len()
                    ),
                    None => println!("alpha {}: degenerate, no fit", f.alpha),
                }
            }
            println!("wrote {}", out.join("regression.csv").display());
        }
        Command::CutoffTable(c) => {
            let (cfg, out) = c.load(false)?;
            let table = commands::cmd_cutoff_table(&cfg, &out)?;
            println!("{} cells, wrote {}", table.len(), out.join("cutoff_table.csv").display());
        }
        Command::SweepAlpha(c) => {
            let (cfg, out) = c.load(true)?;
            let rows = commands::cmd_sweep_alpha(&cfg, &out, c.threads)?;
            println!("{} cells, wrote {}", rows.len(), out.join("sweep.csv").display());
        }
        Command::GenGraph(c) => {
            let (cfg, out) = c.load(true)?;
            let (path, g) = commands::cmd_gen_graph(&cfg, &out)?;
            println!("{} nodes, {} edges, wrote {}", g.node_count(), g.edge_count(), path.display());
        }
        Command::Plan(c) => {
            let (cfg, out) = c.load(true)?;
            let (path, maxcut) = commands::cmd_plan(&cfg, &out).context("plan optimization failed")?;
            println!("maxcut {maxcut}, wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .chain()
                .find_map(|c| c.downcast_ref::<CliError>())
                .map_or(3, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
