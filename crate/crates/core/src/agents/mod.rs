//! Chef and waiter agents.

pub mod apprentice;
pub mod features;
pub mod heuristic;
pub mod labels;
pub mod model;
pub mod waiter;

pub use apprentice::{argmax_goal, expand_goal, ApprenticeChef};
pub use features::{chef_features, feature_len, GoalLabel, GOAL_COUNT};
pub use model::{
    batch_loss, batch_loss_and_grad, cluster_embedding, train_apprentice, ApprenticeModel, EmbeddingDecoder,
    EmbeddingSelector, GoalPredictor, Gradients, Mlp, PersonalizedEmbedding, TrainConfig, EMBEDDING_DIM,
};
pub use labels::{balance_dataset, label_goals, LabeledDataset, Sample};
pub use heuristic::{heuristic_select_goals, HeuristicChef, HeuristicChefConfig, Selection, StagingVariant};
pub use waiter::{scripted_waiter, GreedyTieBreak, ScriptedWaiter, ScriptedWaiterKind};

use std::sync::Arc;

use thiserror::Error;

use crate::game::{ChefObservation, GameError, Phase, RuleConfig, WaiterObservation, WaiterRecommendation};
use crate::layout::TileMap;
use crate::log::Episode;
use crate::scenario::ScenarioConfig;
use crate::world::ChefAction;

/// A chef that chooses one primitive action at a time.
pub trait ChefPolicy {
    /// The next action, or `None` to end the turn.
    fn act(&mut self, obs: &ChefObservation) -> Option<ChefAction>;
}

pub trait WaiterPolicy {
    fn recommend(&mut self, obs: &WaiterObservation) -> WaiterRecommendation;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error("cluster {0} has no games")]
    EmptyCluster(usize),
    #[error("user {0:?} has no cluster")]
    UnmappedUser(String),
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("loss became non-finite at step {step}; reduce the step size")]
    NonFiniteLoss { step: usize },
    #[error("model artifact: {0}")]
    Artifact(String),
}

/// Play a whole game between two policies, logging everything.
pub fn play_episode(
    layout: Arc<TileMap>,
    scenario: ScenarioConfig,
    seed: u64,
    rules: RuleConfig,
    chef: &mut dyn ChefPolicy,
    waiter: &mut dyn WaiterPolicy,
) -> Result<Episode, GameError> {
    let mut ep = Episode::start(layout, scenario, seed, rules);
    while !ep.is_finished() {
        match ep.state.phase {
            Phase::WaiterTurn => {
                let rec = waiter.recommend(&ep.state.observe_waiter());
                ep.recommend(rec)?;
            }
            _ => {
                while let Some(a) = chef.act(&ep.state.observe_chef()) {
                    ep.act(a)?;
                }
                ep.end_round()?;
            }
        }
    }
    Ok(ep)
}
