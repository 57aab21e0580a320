mod common;
mod graphs;
mod regress;
mod run;
mod sweep;
mod tables;

pub use common::{label, load_cutoff_table};
pub use graphs::{cmd_gen_graph, cmd_plan};
pub use regress::{cmd_regress, AlphaFit, RegressionRow};
pub use run::{cmd_run, write_record, AucSummary, ETA_POINTS};
pub use sweep::{cmd_sweep_alpha, SweepRow};
pub use tables::cmd_cutoff_table;
