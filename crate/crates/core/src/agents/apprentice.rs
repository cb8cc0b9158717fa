//! The apprentice chef: predicts one high-level goal at a time from its
//! embedding and the current state, then lets the planner carry it out.

use std::collections::VecDeque;

use super::features::{chef_features, GoalLabel, GOAL_COUNT};
use super::heuristic::execute_chain;
use super::model::{GoalPredictor, PersonalizedEmbedding};
use super::ChefPolicy;
use crate::game::ChefObservation;
use crate::planning::{mcts_plan, Goal, MctsConfig, ServeValues};
use crate::world::{ChefAction, SeatStatus};

/// Primitive actions that achieve `goal` from `obs`, or `None` when the
/// planner finds no way to do it.
pub fn expand_goal(obs: &ChefObservation, goal: GoalLabel, search: &MctsConfig) -> Option<Vec<ChefAction>> {
    if obs.world.ap_remaining == 0 {
        return None;
    }
    let (target, values) = match goal {
        GoalLabel::Idle => return Some(vec![ChefAction::Wait]),
        GoalLabel::Serve { seat, dish } => {
            let c = obs.world.seat_customer(seat).filter(|c| c.status == SeatStatus::Waiting)?;
            (Goal::serve(c.id, dish), ServeValues::from([((c.id, dish), 1.0)]))
        }
        GoalLabel::Stage(k) => (Goal::stage(k, obs.world.staged(k) + 1), ServeValues::new()),
    };
    let targets = [target];
    let cfg = MctsConfig { stop_when_complete: true, ..*search };
    let plan = mcts_plan(&obs.layout, &obs.world, &targets, &values, &cfg).ok()?;
    if !plan.satisfies_all(&targets) || plan.chain.is_empty() {
        return None;
    }
    Some(execute_chain(obs, &plan.chain, search.node_cap))
}

/// Most probable goal not in `masked`; ties go to the lower index.
pub fn argmax_goal(probs: &[f64], masked: &[bool; GOAL_COUNT]) -> Option<GoalLabel> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in probs.iter().enumerate() {
        if masked[i] {
            continue;
        }
        if best.map_or(true, |(_, b)| *p > b) {
            best = Some((i, *p));
        }
    }
    best.and_then(|(i, _)| GoalLabel::from_index(i))
}

#[derive(Debug, Clone)]
pub struct ApprenticeChef {
    pub predictor: GoalPredictor,
    pub embedding: PersonalizedEmbedding,
    pub search: MctsConfig,
    round: Option<u8>,
    queue: VecDeque<ChefAction>,
    masked: [bool; GOAL_COUNT],
    goals: Vec<(u8, GoalLabel)>,
}

impl ApprenticeChef {
    pub fn new(predictor: GoalPredictor, embedding: PersonalizedEmbedding, search: MctsConfig) -> Self {
        ApprenticeChef {
            predictor,
            embedding,
            search,
            round: None,
            queue: VecDeque::new(),
            masked: [false; GOAL_COUNT],
            goals: Vec::new(),
        }
    }

    /// Goals started so far with the game round of each, in order.
    pub fn executed_goals(&self) -> &[(u8, GoalLabel)] {
        &self.goals
    }
}

impl ChefPolicy for ApprenticeChef {
    fn act(&mut self, obs: &ChefObservation) -> Option<ChefAction> {
        if self.round != Some(obs.round) {
            self.round = Some(obs.round);
            self.queue.clear();
            self.masked = [false; GOAL_COUNT];
        }
        if obs.world.ap_remaining == 0 {
            return None;
        }
        if let Some(a) = self.queue.pop_front() {
            return Some(a);
        }
        let features = chef_features(obs);
        let probs = self.predictor.probabilities(&features, &self.embedding);
        loop {
            let goal = argmax_goal(&probs, &self.masked)?;
            match expand_goal(obs, goal, &self.search) {
                Some(actions) if !actions.is_empty() => {
                    if goal != GoalLabel::Idle {
                        self.masked = [false; GOAL_COUNT];
                    }
                    self.goals.push((obs.round, goal));
                    self.queue = actions.into();
                    return self.queue.pop_front();
                }
                _ => self.masked[goal.index()] = true,
            }
        }
    }
}
