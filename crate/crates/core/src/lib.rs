//! Simulation and control of SIS epidemics with a limited budget of
//! treatment resources.
//!
//! The crate couples an exact event-driven SIS simulator with allocation
//! strategies that reassign resources after every change of the infection
//! state: an unrestricted batch reallocation (DRA), a batch reallocation
//! restricted to a random sample of infected nodes (RDRA), and a sequential
//! online variant (SDRA) that decides on sampled nodes one at a time.

pub mod control;
pub mod epidemic;
pub mod graph;
pub mod meanfield;
pub mod metrics;
pub mod rng;
pub mod scoring;
pub mod selection;

pub use control::{Family, Horizon, InitialInfection, OnlineAlgo, RunConfig, SamplerConfig, StrategyConfig};
pub use epidemic::{EpidemicError, EpidemicParams, EpidemicState};
pub use graph::{Graph, GraphError};
pub use scoring::{PriorityPlan, Scorer, ScorerKind, ScoringError};
pub use selection::{CutoffTable, OnlineRule, Scored, SelectionError, WsspInstance};
pub use metrics::{PairedRun, RunRecord, StopReason};
