//! Policy construction, single episodes and seeded batches.

use std::collections::{BTreeMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hybs_core::agents::{
    ApprenticeChef, ApprenticeModel, ChefPolicy, HeuristicChef, HeuristicChefConfig, ScriptedWaiter, WaiterPolicy,
};
use hybs_core::planning::MctsConfig;
use hybs_core::{
    sample_scenario, ChefAction, ChefObservation, Episode, EpisodeLog, Phase, RuleConfig, ScenarioConfig, TileMap,
    WaiterObservation, WaiterRecommendation,
};
use serde::{Deserialize, Serialize};

use crate::config::{ChefSpec, Experiment, PlanningCaps, WaiterSpec};
use crate::frames::{Turn, TurnRecorder};
use crate::metrics::{aggregate, summarize, summary_table, Aggregate, MetricsSummary};
use crate::HarnessError;

pub type BoxedChef = Box<dyn ChefPolicy + Send>;
pub type BoxedWaiter = Box<dyn WaiterPolicy + Send>;

/// Path of the log for a scenario seed inside a batch output directory.
pub fn log_file(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("game_{seed}.jsonl"))
}

/// Replays the chef actions a log recorded, round by round.
#[derive(Debug, Clone)]
pub struct ReplayChef {
    actions: BTreeMap<u8, VecDeque<ChefAction>>,
}

impl ReplayChef {
    pub fn from_log(log: &EpisodeLog) -> Result<ReplayChef, HarnessError> {
        let mut actions: BTreeMap<u8, VecDeque<ChefAction>> = BTreeMap::new();
        for (round, a) in log.chef_actions().map_err(|e| HarnessError::MalformedLog(e.to_string()))? {
            actions.entry(round).or_default().push_back(a);
        }
        Ok(ReplayChef { actions })
    }
}

impl ChefPolicy for ReplayChef {
    fn act(&mut self, obs: &ChefObservation) -> Option<ChefAction> {
        self.actions.get_mut(&obs.round)?.pop_front()
    }
}

/// Makes a fresh chef for each game of an experiment.
#[derive(Clone)]
pub struct ChefFactory {
    spec: ChefSpec,
    caps: PlanningCaps,
    model: Option<Arc<ApprenticeModel>>,
}

impl ChefFactory {
    pub fn new(spec: &ChefSpec, caps: PlanningCaps) -> Result<ChefFactory, HarnessError> {
        let model = match spec {
            ChefSpec::Apprentice { artifact, selector } => {
                let m = ApprenticeModel::load(artifact).map_err(|e| HarnessError::Config(e.to_string()))?;
                m.embedding(selector).map_err(|e| HarnessError::Config(e.to_string()))?;
                Some(Arc::new(m))
            }
            _ => None,
        };
        Ok(ChefFactory { spec: spec.clone(), caps, model })
    }

    pub fn spec(&self) -> &ChefSpec {
        &self.spec
    }

    pub fn make(&self, seed: u64) -> Result<BoxedChef, HarnessError> {
        Ok(match &self.spec {
            ChefSpec::Heuristic(variant) => {
                let defaults = HeuristicChefConfig::default();
                Box::new(HeuristicChef::new(HeuristicChefConfig {
                    staging_variant: *variant,
                    search: MctsConfig {
                        iterations: self.caps.probe_iterations,
                        exploration: self.caps.mcts_exploration,
                        node_cap: self.caps.goap_node_cap,
                        ..defaults.search
                    },
                    ..defaults
                }))
            }
            ChefSpec::Apprentice { selector, .. } => {
                let model = self.model.as_ref().expect("apprentice factories hold a model");
                let embedding = model.embedding(selector).map_err(|e| HarnessError::Config(e.to_string()))?;
                Box::new(ApprenticeChef::new(model.predictor.clone(), embedding, self.caps.search(seed)))
            }
            ChefSpec::Replay { dir } => {
                let path = log_file(dir, seed);
                let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
                let log = EpisodeLog::from_jsonl(&text).map_err(|e| HarnessError::MalformedLog(e.to_string()))?;
                Box::new(ReplayChef::from_log(&log)?)
            }
        })
    }
}

pub fn make_waiter(spec: WaiterSpec, seed: u64) -> Result<BoxedWaiter, HarnessError> {
    match spec {
        WaiterSpec::Greedy => Ok(Box::new(ScriptedWaiter::greedy())),
        WaiterSpec::Random => Ok(Box::new(ScriptedWaiter::random(seed))),
        WaiterSpec::Interactive => {
            Err(HarnessError::Config("an interactive waiter plays through the session service".into()))
        }
    }
}

fn policy_failure(what: &str, panic: Box<dyn std::any::Any + Send>) -> HarnessError {
    let msg = panic
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| panic.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into());
    HarnessError::PolicyFailure(format!("{what} panicked: {msg}"))
}

/// Let the chef act until it ends its turn, then close the round.
pub fn play_chef_turn(ep: &mut Episode, chef: &mut dyn ChefPolicy) -> Result<Turn, HarnessError> {
    let mut rec = TurnRecorder::begin(ep);
    loop {
        let obs = ep.state.observe_chef();
        let action = catch_unwind(AssertUnwindSafe(|| chef.act(&obs))).map_err(|p| policy_failure("chef", p))?;
        let Some(action) = action else { break };
        rec.act(ep, action)
            .map_err(|e| HarnessError::PolicyFailure(format!("chef chose {action:?}: {e}")))?;
    }
    rec.end(ep).map_err(|e| HarnessError::PolicyFailure(e.to_string()))
}

pub fn ask_waiter(waiter: &mut dyn WaiterPolicy, obs: &WaiterObservation) -> Result<WaiterRecommendation, HarnessError> {
    catch_unwind(AssertUnwindSafe(|| waiter.recommend(obs))).map_err(|p| policy_failure("waiter", p))
}

#[derive(Debug, Clone)]
pub struct EpisodeFailure {
    pub seed: u64,
    pub error: HarnessError,
    /// Everything logged up to the failure.
    pub log: EpisodeLog,
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub log: EpisodeLog,
    pub summary: MetricsSummary,
}

/// Play one game through all seven rounds.
pub fn run_episode(
    layout: Arc<TileMap>,
    scenario: ScenarioConfig,
    seed: u64,
    rules: RuleConfig,
    chef: &mut dyn ChefPolicy,
    waiter: &mut dyn WaiterPolicy,
) -> Result<EpisodeOutcome, EpisodeFailure> {
    let mut ep = Episode::start(layout, scenario, seed, rules);
    let mut drive = || -> Result<(), HarnessError> {
        while !ep.is_finished() {
            if ep.state.phase == Phase::WaiterTurn {
                let rec = ask_waiter(waiter, &ep.state.observe_waiter())?;
                ep.recommend(rec).map_err(|e| HarnessError::PolicyFailure(format!("waiter: {e}")))?;
            } else {
                play_chef_turn(&mut ep, chef)?;
            }
        }
        Ok(())
    };
    let result = drive().and_then(|()| summarize(&format!("game_{seed}"), &ep.log));
    match result {
        Ok(summary) => Ok(EpisodeOutcome { seed, log: ep.log, summary }),
        Err(error) => Err(EpisodeFailure { seed, error, log: ep.log }),
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub condition: String,
    pub games: Vec<EpisodeOutcome>,
    pub failures: Vec<EpisodeFailure>,
    pub aggregate: Option<Aggregate>,
}

impl BatchResult {
    pub fn summaries(&self) -> Vec<MetricsSummary> {
        self.games.iter().map(|g| g.summary.clone()).collect()
    }

    /// One value per completed game, ready for the analysis tests.
    pub fn normalized_tips(&self) -> Vec<f64> {
        self.games.iter().map(|g| g.summary.normalized_tip).collect()
    }
}

pub fn condition_label(exp: &Experiment) -> String {
    format!("{}/{}", exp.chef, exp.waiter)
}

/// Play every scenario seed of an experiment in order. A failed game is
/// reported and the batch carries on.
pub fn run_batch(exp: &Experiment, rules: RuleConfig) -> Result<BatchResult, HarnessError> {
    let factory = ChefFactory::new(&exp.chef, exp.config.planning)?;
    make_waiter(exp.waiter, 0)?;
    let mut games = Vec::new();
    let mut failures = Vec::new();
    for seed in exp.config.scenario_seeds() {
        let outcome = factory.make(seed).and_then(|c| Ok((c, make_waiter(exp.waiter, seed)?)));
        let (mut chef, mut waiter) = match outcome {
            Ok(p) => p,
            Err(error) => {
                failures.push(EpisodeFailure { seed, error, log: EpisodeLog::default() });
                continue;
            }
        };
        match run_episode(exp.layout.clone(), sample_scenario(seed), seed, rules, chef.as_mut(), waiter.as_mut()) {
            Ok(g) => games.push(g),
            Err(f) => failures.push(f),
        }
    }
    let condition = condition_label(exp);
    let summaries: Vec<MetricsSummary> = games.iter().map(|g| g.summary.clone()).collect();
    let aggregate = aggregate(&condition, &summaries, failures.len());
    Ok(BatchResult { condition, games, failures, aggregate })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureReport {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    pub condition: String,
    pub games: Vec<MetricsSummary>,
    pub failures: Vec<FailureReport>,
    pub aggregate: Option<Aggregate>,
}

impl MetricsFile {
    pub fn of(batch: &BatchResult) -> MetricsFile {
        MetricsFile {
            condition: batch.condition.clone(),
            games: batch.summaries(),
            failures: batch.failures.iter().map(|f| FailureReport { seed: f.seed, error: f.error.to_string() }).collect(),
            aggregate: batch.aggregate.clone(),
        }
    }
}

pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_TEXT: &str = "metrics.txt";

/// Write logs under `out/logs` and the metrics as JSON and aligned text.
pub fn write_batch(batch: &BatchResult, out: &Path) -> Result<(), HarnessError> {
    let logs = out.join("logs");
    std::fs::create_dir_all(&logs).map_err(|e| HarnessError::io(&logs, e))?;
    let write = |path: PathBuf, text: String| std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e));
    for g in &batch.games {
        write(log_file(&logs, g.seed), g.log.to_jsonl())?;
    }
    for f in &batch.failures {
        if !f.log.records.is_empty() {
            write(logs.join(format!("failed_{}.jsonl", f.seed)), f.log.to_jsonl())?;
        }
    }
    let file = MetricsFile::of(batch);
    write(out.join(METRICS_JSON), serde_json::to_string_pretty(&file).expect("metrics serialize") + "\n")?;
    let mut text = summary_table(&file.games, file.aggregate.as_ref());
    for f in &file.failures {
        text.push_str(&format!("failed seed {}: {}\n", f.seed, f.error));
    }
    write(out.join(METRICS_TEXT), text)
}
