//! Experiment configuration: which chef and waiter play, on which scenarios.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use hybs_core::agents::{EmbeddingSelector, StagingVariant};
use hybs_core::planning::{MctsConfig, DEFAULT_NODE_CAP};
use hybs_core::{load_layout, TileMap, DEFAULT_LAYOUT};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Environment variable that overrides the service bind address.
pub const BIND_ENV: &str = "HYBS_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:7878";
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, PartialEq)]
pub enum ChefSpec {
    Heuristic(StagingVariant),
    Apprentice { artifact: PathBuf, selector: EmbeddingSelector },
    /// Replay the chef actions and recommendations of logs in a directory,
    /// one log per scenario seed (`game_<seed>.jsonl`).
    Replay { dir: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaiterSpec {
    Greedy,
    Random,
    /// A person connected through the session service.
    Interactive,
}

fn bad(spec: &str, why: &str) -> HarnessError {
    HarnessError::Config(format!("invalid policy `{spec}`: {why}"))
}

impl FromStr for ChefSpec {
    type Err = HarnessError;

    /// `heuristic:tomato`, `heuristic:onion`, `apprentice:<artifact>` with an
    /// optional `#user=<id>`, `#cluster=<k>` or `#embedding=a,b,c`, and
    /// `replay:<dir>`.
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "heuristic" => match arg {
                "" | "tomato" => Ok(ChefSpec::Heuristic(StagingVariant::TomatoStaging)),
                "onion" => Ok(ChefSpec::Heuristic(StagingVariant::OnionStaging)),
                _ => Err(bad(s, "staging variant must be tomato or onion")),
            },
            "apprentice" => {
                let (path, sel) = arg.split_once('#').unwrap_or((arg, "cluster=0"));
                if path.is_empty() {
                    return Err(bad(s, "artifact path missing"));
                }
                let selector = match sel.split_once('=') {
                    Some(("user", u)) => EmbeddingSelector::User(u.to_string()),
                    Some(("cluster", c)) => {
                        EmbeddingSelector::Cluster(c.parse().map_err(|_| bad(s, "cluster must be an integer"))?)
                    }
                    Some(("embedding", e)) => {
                        let v: Vec<f64> = e
                            .split(',')
                            .map(|x| x.trim().parse::<f64>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| bad(s, "embedding must be three numbers"))?;
                        let arr: [f64; 3] = v.try_into().map_err(|_| bad(s, "embedding must be three numbers"))?;
                        EmbeddingSelector::Explicit(arr)
                    }
                    _ => return Err(bad(s, "selector must be user=, cluster= or embedding=")),
                };
                Ok(ChefSpec::Apprentice { artifact: path.into(), selector })
            }
            "replay" if !arg.is_empty() => Ok(ChefSpec::Replay { dir: arg.into() }),
            _ => Err(bad(s, "expected heuristic:<variant>, apprentice:<path> or replay:<dir>")),
        }
    }
}

impl fmt::Display for ChefSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChefSpec::Heuristic(StagingVariant::TomatoStaging) => write!(f, "heuristic:tomato"),
            ChefSpec::Heuristic(StagingVariant::OnionStaging) => write!(f, "heuristic:onion"),
            ChefSpec::Apprentice { artifact, selector } => {
                write!(f, "apprentice:{}#", artifact.display())?;
                match selector {
                    EmbeddingSelector::User(u) => write!(f, "user={u}"),
                    EmbeddingSelector::Cluster(c) => write!(f, "cluster={c}"),
                    EmbeddingSelector::Explicit(e) => write!(f, "embedding={},{},{}", e[0], e[1], e[2]),
                }
            }
            ChefSpec::Replay { dir } => write!(f, "replay:{}", dir.display()),
        }
    }
}

impl FromStr for WaiterSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "greedy" => Ok(WaiterSpec::Greedy),
            "random" => Ok(WaiterSpec::Random),
            "interactive" => Ok(WaiterSpec::Interactive),
            _ => Err(bad(s, "waiter must be greedy, random or interactive")),
        }
    }
}

impl fmt::Display for WaiterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WaiterSpec::Greedy => "greedy",
            WaiterSpec::Random => "random",
            WaiterSpec::Interactive => "interactive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanningCaps {
    /// Iterations for the apprentice's goal expansion.
    pub mcts_iterations: usize,
    pub mcts_exploration: f64,
    pub goap_node_cap: usize,
    /// Iterations for each of the heuristic chef's feasibility probes.
    pub probe_iterations: usize,
}

impl Default for PlanningCaps {
    fn default() -> Self {
        PlanningCaps {
            mcts_iterations: 10_000,
            mcts_exploration: std::f64::consts::SQRT_2,
            goap_node_cap: DEFAULT_NODE_CAP,
            probe_iterations: 300,
        }
    }
}

impl PlanningCaps {
    pub fn search(&self, seed: u64) -> MctsConfig {
        MctsConfig {
            iterations: self.mcts_iterations,
            exploration: self.mcts_exploration,
            node_cap: self.goap_node_cap,
            seed,
            ..MctsConfig::default()
        }
    }
}

/// The on-disk form of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Layout file; the built-in kitchen when absent.
    pub layout: Option<PathBuf>,
    /// First scenario seed; a batch of `n` uses `seed..seed + n`.
    pub seed: u64,
    pub n: usize,
    /// Explicit scenario seeds, used instead of `seed` and `n` when present.
    pub seeds: Option<Vec<u64>>,
    pub chef: String,
    pub waiter: String,
    pub planning: PlanningCaps,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            layout: None,
            seed: 0,
            n: 10,
            seeds: None,
            chef: "heuristic:tomato".into(),
            waiter: "greedy".into(),
            planning: PlanningCaps::default(),
            out: "out".into(),
        }
    }
}

/// A checked configuration with its layout loaded and policies parsed.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub layout: Arc<TileMap>,
    pub chef: ChefSpec,
    pub waiter: WaiterSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Fails for seeds above `i64::MAX`, which TOML integers cannot hold.
    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string_pretty(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn scenario_seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => (self.seed..self.seed + self.n as u64).collect(),
        }
    }

    /// Parse the policies, load the layout and check that every path exists.
    pub fn validate(&self) -> Result<Experiment, HarnessError> {
        let chef: ChefSpec = self.chef.parse()?;
        let waiter: WaiterSpec = self.waiter.parse()?;
        let layout = match &self.layout {
            None => load_layout(DEFAULT_LAYOUT),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| HarnessError::io(p, e))?;
                load_layout(&text)
            }
        }
        .map_err(|e| HarnessError::Config(format!("layout: {e}")))?;
        match &chef {
            ChefSpec::Apprentice { artifact, .. } if !artifact.is_file() => {
                return Err(HarnessError::Config(format!("apprentice artifact {} not found", artifact.display())))
            }
            ChefSpec::Replay { dir } if !dir.is_dir() => {
                return Err(HarnessError::Config(format!("replay directory {} not found", dir.display())))
            }
            _ => {}
        }
        if self.seeds.as_ref().map_or(self.n == 0, |s| s.is_empty()) {
            return Err(HarnessError::Config("at least one scenario is required".into()));
        }
        if self.seeds.is_none() && self.seed.checked_add(self.n as u64).is_none() {
            return Err(HarnessError::Config(format!("{} seeds from {} overflow", self.n, self.seed)));
        }
        if self.planning.mcts_iterations == 0 || self.planning.probe_iterations == 0 || self.planning.goap_node_cap == 0 {
            return Err(HarnessError::Config("planning caps must be positive".into()));
        }
        Ok(Experiment { config: self.clone(), layout: Arc::new(layout), chef, waiter })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shipped_config_is_valid() {
        let cfg = ExperimentConfig::from_toml(DEFAULT_CONFIG).unwrap();
        let exp = cfg.validate().unwrap();
        assert_eq!(exp.chef, ChefSpec::Heuristic(StagingVariant::TomatoStaging));
        assert_eq!(exp.waiter, WaiterSpec::Greedy);
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        let huge = ExperimentConfig { seed: u64::MAX, n: 1, ..Default::default() };
        assert!(huge.to_toml().is_err());
        assert!(huge.validate().is_err());
    }

    #[test]
    fn policy_specs_round_trip() {
        for s in ["heuristic:tomato", "heuristic:onion", "apprentice:a.json#user=u7", "apprentice:m.json#cluster=2", "replay:logs"] {
            let spec: ChefSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        let e: ChefSpec = "apprentice:m.json#embedding=0.5, 0.25,1".parse().unwrap();
        assert!(matches!(e, ChefSpec::Apprentice { selector: EmbeddingSelector::Explicit([0.5, 0.25, 1.0]), .. }));
        for bad in ["heuristic:potato", "apprentice:", "apprentice:x#user", "apprentice:x#embedding=1,2", "replay:", "human"] {
            assert!(bad.parse::<ChefSpec>().is_err(), "{bad}");
        }
        assert!("lazy".parse::<WaiterSpec>().is_err());
    }

    #[test]
    fn validation_rejects_missing_paths() {
        let mut cfg = ExperimentConfig { chef: "apprentice:/nonexistent/model.json".into(), ..Default::default() };
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
        cfg.chef = "heuristic:onion".into();
        cfg.layout = Some("/nonexistent/kitchen.map".into());
        assert!(cfg.validate().is_err());
        cfg.layout = None;
        cfg.n = 0;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml("chef = 3").is_err());
        assert!(ExperimentConfig::from_toml("unknown_key = 1").is_err());
    }

    #[test]
    fn explicit_seeds_win() {
        let cfg = ExperimentConfig { seed: 7, n: 3, ..Default::default() };
        assert_eq!(cfg.scenario_seeds(), vec![7, 8, 9]);
        let cfg = ExperimentConfig { seeds: Some(vec![4, 2]), ..cfg };
        assert_eq!(cfg.scenario_seeds(), vec![4, 2]);
    }

    fn chef_spec() -> impl Strategy<Value = ChefSpec> {
        let selector = prop_oneof![
            "[a-z0-9_]{1,8}".prop_map(EmbeddingSelector::User),
            (0usize..10).prop_map(EmbeddingSelector::Cluster),
            prop::array::uniform3(-1e3f64..1e3).prop_map(EmbeddingSelector::Explicit),
        ];
        prop_oneof![
            Just(ChefSpec::Heuristic(StagingVariant::TomatoStaging)),
            Just(ChefSpec::Heuristic(StagingVariant::OnionStaging)),
            ("[a-z_./]{1,12}", selector).prop_map(|(p, selector)| ChefSpec::Apprentice { artifact: p.into(), selector }),
            "[a-z_./]{1,12}".prop_map(|d| ChefSpec::Replay { dir: d.into() }),
        ]
    }

    proptest! {
        #[test]
        fn any_chef_spec_round_trips(spec in chef_spec()) {
            prop_assert_eq!(spec.to_string().parse::<ChefSpec>().unwrap(), spec);
        }

        #[test]
        fn any_config_round_trips_through_toml(
            seed in 0..=i64::MAX as u64,
            n in 1usize..1000,
            seeds in prop::option::of(prop::collection::vec(0..=i64::MAX as u64, 1..6)),
            spec in chef_spec(),
            iterations in 1usize..20_000,
        ) {
            let cfg = ExperimentConfig {
                seed,
                n,
                seeds,
                chef: spec.to_string(),
                planning: PlanningCaps { mcts_iterations: iterations, ..PlanningCaps::default() },
                ..Default::default()
            };
            prop_assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        }
    }
}
