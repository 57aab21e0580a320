//! Experiment configuration: one JSON file per recipe.
//!
//! Every section has defaults, so a recipe only spells out what differs.
//! Unknown keys are rejected with their position in the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sisctl_core::control::{
    Horizon, InitialInfection, OnlineAlgo, RunConfig, SampleMode, SamplerConfig, StrategyConfig,
};
use sisctl_core::epidemic::EpidemicParams;
use sisctl_core::graph::{self, CommunitySpec, Graph};
use sisctl_core::meanfield::Closure;
use sisctl_core::scoring::ScorerKind;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub network: Option<NetworkSpec>,
    /// Fixed generator seed. When absent every run draws its own graph
    /// from the run seed.
    #[serde(default)]
    pub graph_seed: Option<u64>,
    #[serde(default)]
    pub epidemic: EpidemicSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub strategies: Vec<StrategySpec>,
    #[serde(default)]
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub horizon: HorizonSpec,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub seed_offset: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub cutoff: CutoffSpec,
    #[serde(default)]
    pub mcm: McmSpec,
    #[serde(default)]
    pub meanfield: Option<MeanfieldSpec>,
    #[serde(default)]
    pub regression: RegressionSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seeds() -> u64 {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSpec {
    /// Ring of `n` nodes with `m` neighbours in total (even), rewired with
    /// probability `p`.
    WattsStrogatz { n: usize, m: usize, p: f64 },
    BarabasiAlbert { n: usize, m: usize },
    /// Either `p` or the mean degree `kbar`.
    ErdosRenyi {
        n: usize,
        #[serde(default)]
        p: Option<f64>,
        #[serde(default)]
        kbar: Option<f64>,
    },
    Community {
        #[serde(default)]
        sizes: Option<Vec<usize>>,
        #[serde(default)]
        probs: Option<Vec<f64>>,
    },
    EdgeList { path: PathBuf },
}

impl NetworkSpec {
    pub fn build(&self, seed: u64, base_dir: &Path) -> Result<Graph> {
        let g = match self {
            NetworkSpec::WattsStrogatz { n, m, p } => graph::generate_watts_strogatz(*n, *m, *p, seed),
            NetworkSpec::BarabasiAlbert { n, m } => graph::generate_barabasi_albert(*n, *m, seed),
            NetworkSpec::ErdosRenyi { n, p, kbar } => {
                let p = match (p, kbar) {
                    (Some(p), None) => *p,
                    (None, Some(k)) if *n > 1 => k / (*n as f64 - 1.0),
                    _ => {
                        return Err(CliError::config(
                            "erdos_renyi needs exactly one of `p` and `kbar`",
                        ))
                    }
                };
                graph::generate_erdos_renyi(*n, p, seed)
            }
            NetworkSpec::Community { sizes, probs } => {
                let d = CommunitySpec::default();
                let sizes = sizes.clone().unwrap_or(d.level_sizes);
                let probs = probs.clone().unwrap_or(d.level_probs);
                graph::generate_community(&sizes, &probs, seed)
            }
            NetworkSpec::EdgeList { path } => {
                let path = base_dir.join(path);
                return graph::load_edge_list(&path).map_err(|e| {
                    CliError::config(format!("edge list {}: {e}", path.display()))
                });
            }
        };
        g.map_err(CliError::config)
    }

    /// Whether the graph depends on the seed.
    pub fn is_random(&self) -> bool {
        !matches!(self, NetworkSpec::EdgeList { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicSpec {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_beta() -> f64 {
    3.0
}

fn default_rho() -> f64 {
    125.0
}

fn default_budget() -> usize {
    5
}

impl Default for EpidemicSpec {
    fn default() -> Self {
        EpidemicSpec {
            beta: default_beta(),
            delta: 0.0,
            rho: default_rho(),
            budget: default_budget(),
        }
    }
}

impl EpidemicSpec {
    pub fn params(&self) -> Result<EpidemicParams> {
        EpidemicParams::new(self.beta, self.delta, self.rho, self.budget).map_err(CliError::config)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSpec {
    #[default]
    All,
    Fraction(f64),
    Nodes(Vec<usize>),
}

impl InitialSpec {
    pub fn to_core(&self) -> InitialInfection {
        match self {
            InitialSpec::All => InitialInfection::All,
            InitialSpec::Fraction(f) => InitialInfection::Fraction(*f),
            InitialSpec::Nodes(v) => InitialInfection::Nodes(v.clone()),
        }
    }

    /// Expected number of initially infected nodes.
    pub fn count(&self, n: usize) -> f64 {
        match self {
            InitialSpec::All => n as f64,
            InitialSpec::Fraction(f) => (f * n as f64).round(),
            InitialSpec::Nodes(v) => v.len() as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    Dra,
    Rdra,
    Sdra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerSpec {
    Rand,
    #[default]
    Lrie,
    Lrsr,
    Mcm,
}

impl ScorerSpec {
    pub fn kind(self) -> ScorerKind {
        match self {
            ScorerSpec::Rand => ScorerKind::Rand,
            ScorerSpec::Lrie => ScorerKind::Lrie,
            ScorerSpec::Lrsr => ScorerKind::Lrsr,
            ScorerSpec::Mcm => ScorerKind::Mcm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnlineSpec {
    CcmStar,
    CcmSqrt,
    CcmNOverE,
    CcmFixed(usize),
    CcmFraction(f64),
    Mean,
    Median,
    Oracle,
}

impl OnlineSpec {
    pub fn algo(self) -> OnlineAlgo {
        match self {
            OnlineSpec::CcmStar => OnlineAlgo::CcmStar,
            OnlineSpec::CcmSqrt => OnlineAlgo::CcmSqrt,
            OnlineSpec::CcmNOverE => OnlineAlgo::CcmNOverE,
            OnlineSpec::CcmFixed(c) => OnlineAlgo::CcmFixed(c),
            OnlineSpec::CcmFraction(f) => OnlineAlgo::CcmFraction(f),
            OnlineSpec::Mean => OnlineAlgo::Mean,
            OnlineSpec::Median => OnlineAlgo::Median,
            OnlineSpec::Oracle => OnlineAlgo::Oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub family: FamilySpec,
    #[serde(default)]
    pub scorer: ScorerSpec,
    #[serde(default)]
    pub online: Option<OnlineSpec>,
    /// Overrides the global sampling fraction for this strategy.
    #[serde(default)]
    pub alpha: Option<f64>,
}

impl StrategySpec {
    pub fn to_core(&self) -> Result<StrategyConfig> {
        let scorer = self.scorer.kind();
        let s = match (self.family, self.online) {
            (FamilySpec::Dra, None) => StrategyConfig::dra(scorer),
            (FamilySpec::Rdra, None) => StrategyConfig::rdra(scorer),
            (FamilySpec::Sdra, Some(o)) => StrategyConfig::sdra(scorer, o.algo()),
            (FamilySpec::Sdra, None) => {
                return Err(CliError::config("an sdra strategy needs an `online` rule"))
            }
            (_, Some(_)) => {
                return Err(CliError::config("`online` only applies to sdra strategies"))
            }
        };
        s.validate().map_err(CliError::config)?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    #[default]
    Uniform,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub mode: ModeSpec,
}

fn one() -> f64 {
    1.0
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec {
            alpha: 1.0,
            mode: ModeSpec::Uniform,
        }
    }
}

impl SamplerSpec {
    pub fn to_core(&self, alpha: Option<f64>) -> SamplerConfig {
        SamplerConfig {
            alpha: alpha.unwrap_or(self.alpha),
            mode: match self.mode {
                ModeSpec::Uniform => SampleMode::Uniform,
                ModeSpec::Softmax => SampleMode::Softmax,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSpec {
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub rounds: Option<u64>,
    #[serde(default)]
    pub max_events: Option<u64>,
}

impl HorizonSpec {
    pub fn to_core(&self) -> Horizon {
        let mut h = Horizon::time(self.t_max.unwrap_or(f64::INFINITY));
        if let Some(k) = self.rounds {
            h.max_rounds = k;
        }
        if let Some(e) = self.max_events {
            h.max_events = e;
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    /// Budgets to tabulate; defaults to the epidemic budget.
    #[serde(default)]
    pub budgets: Option<Vec<usize>>,
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub q_grid: Option<Vec<f64>>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_cutoff_seed")]
    pub seed: u64,
    /// Precomputed table CSV; skips the Monte Carlo build.
    #[serde(default)]
    pub table: Option<PathBuf>,
}

fn default_replicas() -> usize {
    1000
}

fn default_cutoff_seed() -> u64 {
    7
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec {
            budgets: None,
            n_grid: None,
            q_grid: None,
            replicas: default_replicas(),
            seed: default_cutoff_seed(),
            table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmSpec {
    /// Annealing moves.
    #[serde(default = "default_anneal")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    /// Plan file written by `sisctl plan`.
    #[serde(default)]
    pub plan: Option<PathBuf>,
}

fn default_anneal() -> usize {
    sisctl_core::scoring::DEFAULT_ANNEALING_BUDGET
}

impl Default for McmSpec {
    fn default() -> Self {
        McmSpec {
            budget: default_anneal(),
            seed: 0,
            plan: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureSpec {
    Normal,
    Lognormal,
    Deterministic,
}

impl ClosureSpec {
    pub fn closure(self) -> Closure {
        match self {
            ClosureSpec::Normal => Closure::Normal,
            ClosureSpec::Lognormal => Closure::Lognormal,
            ClosureSpec::Deterministic => Closure::Deterministic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldSpec {
    #[serde(default = "all_closures")]
    pub closures: Vec<ClosureSpec>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Integration horizon; defaults to `horizon.t_max`.
    #[serde(default)]
    pub t_end: Option<f64>,
}

fn all_closures() -> Vec<ClosureSpec> {
    vec![ClosureSpec::Normal, ClosureSpec::Lognormal, ClosureSpec::Deterministic]
}

fn default_points() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    #[serde(default = "default_regression_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_rounds")]
    pub rounds: u64,
    #[serde(default = "default_online")]
    pub online: Vec<OnlineSpec>,
    #[serde(default)]
    pub scorer: ScorerSpec,
}

fn default_regression_alphas() -> Vec<f64> {
    vec![1.0, 0.5, 0.4, 0.2]
}

fn default_rounds() -> u64 {
    301
}

fn default_online() -> Vec<OnlineSpec> {
    vec![
        OnlineSpec::CcmStar,
        OnlineSpec::CcmSqrt,
        OnlineSpec::CcmNOverE,
        OnlineSpec::Mean,
        OnlineSpec::Median,
    ]
}

impl Default for RegressionSpec {
    fn default() -> Self {
        RegressionSpec {
            alphas: default_regression_alphas(),
            rounds: default_rounds(),
            online: default_online(),
            scorer: ScorerSpec::Lrie,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepType {
    Er,
    Sf,
    Sw,
}

impl SweepType {
    pub fn label(self) -> &'static str {
        match self {
            SweepType::Er => "ER",
            SweepType::Sf => "SF",
            SweepType::Sw => "SW",
        }
    }

    /// Network of this type with mean degree close to `kbar`.
    pub fn network(self, n: usize, kbar: f64, rewire: f64) -> Result<NetworkSpec> {
        let half = (kbar / 2.0).round() as usize;
        if half == 0 && self != SweepType::Er {
            return Err(CliError::config(format!("kbar {kbar} is too small for {}", self.label())));
        }
        Ok(match self {
            SweepType::Er => NetworkSpec::ErdosRenyi {
                n,
                p: None,
                kbar: Some(kbar),
            },
            SweepType::Sf => NetworkSpec::BarabasiAlbert { n, m: half },
            SweepType::Sw => NetworkSpec::WattsStrogatz {
                n,
                m: 2 * half,
                p: rewire,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_types")]
    pub types: Vec<SweepType>,
    #[serde(default = "default_kbars")]
    pub kbars: Vec<f64>,
    #[serde(default = "default_sweep_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_sweep_n")]
    pub n: usize,
    #[serde(default = "default_rewire")]
    pub rewire: f64,
    #[serde(default = "default_sweep_strategy")]
    pub strategy: StrategySpec,
}

fn default_types() -> Vec<SweepType> {
    vec![SweepType::Er, SweepType::Sf, SweepType::Sw]
}

fn default_kbars() -> Vec<f64> {
    vec![2.0, 10.0]
}

fn default_sweep_alphas() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

fn default_sweep_n() -> usize {
    100
}

fn default_rewire() -> f64 {
    0.05
}

fn default_sweep_strategy() -> StrategySpec {
    StrategySpec {
        family: FamilySpec::Sdra,
        scorer: ScorerSpec::Lrie,
        online: Some(OnlineSpec::CcmStar),
        alpha: None,
    }
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            types: default_types(),
            kbars: default_kbars(),
            alphas: default_sweep_alphas(),
            n: default_sweep_n(),
            rewire: default_rewire(),
            strategy: default_sweep_strategy(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text).map_err(|e| CliError::ConfigSyntax {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// First 16 hex digits of the SHA-256 of the effective config. The
    /// output directory is left out so moving results keeps the digest.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))[..16].to_string()
    }

    pub fn network(&self) -> Result<&NetworkSpec> {
        self.network
            .as_ref()
            .ok_or_else(|| CliError::config("this command needs a `network` section"))
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + Clone {
        self.seed_offset..self.seed_offset + self.seeds
    }

    /// The graph used by run `seed`.
    pub fn graph_for(&self, seed: u64) -> Result<Graph> {
        self.network()?
            .build(self.graph_seed.unwrap_or(seed), &self.base_dir)
    }

    /// Whether all runs share one graph.
    pub fn shared_graph(&self) -> bool {
        self.graph_seed.is_some() || self.network.as_ref().is_some_and(|n| !n.is_random())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn run_config(&self, strategy: &StrategySpec) -> Result<RunConfig> {
        Ok(RunConfig {
            params: self.epidemic.params()?,
            sampler: self.sampler.to_core(strategy.alpha),
            strategy: strategy.to_core()?,
            horizon: self.horizon.to_core(),
            initial: self.initial.to_core(),
        })
    }

    /// Checks that do not need a graph.
    pub fn validate_run(&self) -> Result<()> {
        self.network()?;
        if self.strategies.is_empty() {
            return Err(CliError::config("`strategies` must not be empty"));
        }
        if self.seeds == 0 {
            return Err(CliError::config("`seeds` must be positive"));
        }
        match self.horizon.t_max {
            Some(t) if t.is_finite() && t > 0.0 => {}
            _ => return Err(CliError::config("`horizon.t_max` must be a positive number")),
        }
        for s in &self.strategies {
            self.run_config(s)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "network": {"type": "watts_strogatz", "n": 100, "m": 4, "p": 0.05},
        "strategies": [
            {"family": "rdra"},
            {"family": "sdra", "online": "ccm_star"},
            {"family": "sdra", "online": {"ccm_fixed": 3}, "scorer": "rand"}
        ],
        "horizon": {"t_max": 1.0}
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.epidemic, EpidemicSpec::default());
        assert_eq!(c.initial, InitialSpec::All);
        assert_eq!(c.seeds, 20);
        assert_eq!(c.strategies[2].online, Some(OnlineSpec::CcmFixed(3)));
        c.validate_run().unwrap();
    }

    #[test]
    fn unknown_key_is_located() {
        let text = "{\n  \"network\": {\"type\": \"barabasi_albert\", \"n\": 10, \"m\": 2},\n  \"bogus\": 1\n}";
        let err = ExperimentConfig::parse(text).unwrap_err();
        assert_eq!(err.line(), 3);
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn unknown_network_field_rejected() {
        let text = r#"{"network": {"type": "barabasi_albert", "n": 10, "m": 2, "p": 0.1}}"#;
        assert!(ExperimentConfig::parse(text).is_err());
    }

    #[test]
    fn empty_strategy_list_is_a_config_error() {
        let mut c = ExperimentConfig::parse(MINIMAL).unwrap();
        c.strategies.clear();
        assert_eq!(c.validate_run().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn sdra_without_rule_rejected() {
        let s = StrategySpec {
            family: FamilySpec::Sdra,
            scorer: ScorerSpec::Lrie,
            online: None,
            alpha: None,
        };
        assert!(s.to_core().is_err());
    }

    #[test]
    fn digest_ignores_output_dir_only() {
        let a = ExperimentConfig::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        b.out = Some("elsewhere".into());
        assert_eq!(a.digest(), b.digest());
        b.seeds += 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
    }

    #[test]
    fn erdos_renyi_needs_one_density() {
        let n = NetworkSpec::ErdosRenyi {
            n: 50,
            p: Some(0.1),
            kbar: Some(3.0),
        };
        assert!(n.build(0, Path::new(".")).is_err());
        let n = NetworkSpec::ErdosRenyi {
            n: 101,
            p: None,
            kbar: Some(10.0),
        };
        let g = n.build(0, Path::new(".")).unwrap();
        assert!((g.mean_degree() - 10.0).abs() < 2.0);
    }

    #[test]
    fn sweep_types_hit_requested_degree() {
        for t in default_types() {
            let g = t.network(200, 10.0, 0.05).unwrap().build(3, Path::new(".")).unwrap();
            assert!((g.mean_degree() - 10.0).abs() < 1.5, "{} {}", t.label(), g.mean_degree());
        }
        assert!(SweepType::Sw.network(100, 0.5, 0.05).is_err());
    }
}
