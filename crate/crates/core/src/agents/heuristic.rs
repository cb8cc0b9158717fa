//! Rule-based chef that follows the waiter's recommendations in priority
//! order, keeping each one only if everything accepted so far can still be
//! planned, and spends leftover time staging ingredients for later rounds.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ChefPolicy;
use crate::game::ChefObservation;
use crate::planning::{expand_macro, mcts_plan_cached, ExpansionCache, Goal, MacroAction, MacroPlan, MctsConfig, ServeValues};
use crate::rules::{DishType, Ingredient};
use crate::world::{ChefAction, ChefWorld, CustomerId, SeatStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StagingVariant {
    #[default]
    TomatoStaging,
    OnionStaging,
}

impl StagingVariant {
    pub fn ingredient(self) -> Ingredient {
        match self {
            StagingVariant::TomatoStaging => Ingredient::Tomato,
            StagingVariant::OnionStaging => Ingredient::Onion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicChefConfig {
    pub staging_variant: StagingVariant,
    /// Search settings for each feasibility probe.
    pub search: MctsConfig,
    /// Most ingredients of the variant kind to keep staged.
    pub max_staged: u32,
    /// Consider at most this many recommendation entries.
    pub service_limit: Option<usize>,
    /// Extra simulations spent shortening the accepted plan; 0 keeps the
    /// first plan found.
    pub refine_iterations: usize,
}

impl Default for HeuristicChefConfig {
    fn default() -> Self {
        HeuristicChefConfig {
            staging_variant: StagingVariant::default(),
            search: MctsConfig { iterations: 300, stop_when_complete: true, ..MctsConfig::default() },
            max_staged: 4,
            service_limit: None,
            refine_iterations: 0,
        }
    }
}

/// Goals the heuristic commits to for a round, with the macro plan that
/// achieves all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub goals: Vec<Goal>,
    pub accepted: Vec<(CustomerId, DishType)>,
    pub plan: Option<MacroPlan>,
}

/// Choose this round's goals from the current observation.
pub fn heuristic_select_goals(obs: &ChefObservation, cfg: &HeuristicChefConfig) -> Selection {
    let layout = &*obs.layout;
    let world = &obs.world;
    let mut probes = 0u64;
    let mut cache = ExpansionCache::new();
    let mut probe = |goals: &[Goal], values: &ServeValues| -> Option<MacroPlan> {
        probes += 1;
        let search = MctsConfig {
            stop_when_complete: true,
            seed: cfg.search.seed ^ (u64::from(obs.round) << 40) ^ (probes << 20),
            ..cfg.search
        };
        mcts_plan_cached(layout, world, goals, values, &search, &mut cache)
            .ok()
            .filter(|p| p.satisfies_all(goals))
    };

    let mut goals: Vec<Goal> = Vec::new();
    let mut accepted = Vec::new();
    let mut values = ServeValues::new();
    let mut plan = None;

    let limit = cfg.service_limit.unwrap_or(usize::MAX);
    for entry in obs.recommendation.entries.iter().take(limit) {
        let waiting = world
            .customer(entry.customer_id)
            .is_some_and(|c| c.status == SeatStatus::Waiting);
        if !waiting {
            continue;
        }
        let mut trial = goals.clone();
        trial.push(Goal::serve(entry.customer_id, entry.dish));
        let mut trial_values = values.clone();
        trial_values.insert((entry.customer_id, entry.dish), 1.0);
        if let Some(p) = probe(&trial, &trial_values) {
            goals = trial;
            values = trial_values;
            accepted.push((entry.customer_id, entry.dish));
            plan = Some(p);
        }
    }

    let kind = cfg.staging_variant.ingredient();
    let mut staged = None;
    let mut n = world.staged(kind);
    while n < cfg.max_staged {
        let mut trial = goals.clone();
        trial.push(Goal::stage(kind, n + 1));
        trial.push(Goal::at_center());
        match probe(&trial, &values) {
            Some(p) => {
                n += 1;
                staged = Some(n);
                plan = Some(p);
            }
            None => break,
        }
    }
    if let Some(n) = staged {
        goals.push(Goal::stage(kind, n));
        goals.push(Goal::at_center());
    } else {
        let mut trial = goals.clone();
        trial.push(Goal::at_center());
        if let Some(p) = probe(&trial, &values) {
            goals = trial;
            plan = Some(p);
        }
    }

    if cfg.refine_iterations > 0 && plan.is_some() {
        let search = MctsConfig {
            iterations: cfg.refine_iterations,
            stop_when_complete: false,
            seed: cfg.search.seed ^ (u64::from(obs.round) << 40),
            ..cfg.search
        };
        if let Ok(p) = mcts_plan_cached(layout, world, &goals, &values, &search, &mut cache) {
            let current = plan.as_ref().map_or(u32::MAX, |q| q.expected_cost);
            if p.satisfies_all(&goals) && p.expected_cost < current {
                plan = Some(p);
            }
        }
    }

    Selection { goals, accepted, plan }
}

/// Expand a macro chain into primitive actions, falling back to walking to
/// the center if some macro no longer expands.
pub fn execute_chain(obs: &ChefObservation, chain: &[MacroAction], node_cap: usize) -> Vec<ChefAction> {
    let layout = &*obs.layout;
    let mut world: ChefWorld = obs.world.clone();
    let mut out = Vec::new();
    for m in chain {
        match expand_macro(layout, &world, *m, node_cap) {
            Ok(p) => {
                for a in p.actions {
                    world.step(layout, a).expect("planned actions are legal");
                    out.push(a);
                }
            }
            Err(_) => {
                if let Ok(p) = expand_macro(layout, &world, MacroAction::ReturnToCenter, node_cap) {
                    out.extend(p.actions);
                }
                break;
            }
        }
    }
    out
}

/// The heuristic chef as a step-by-step policy. It plans once at the start
/// of each round and then plays the plan out.
#[derive(Debug, Clone, Default)]
pub struct HeuristicChef {
    pub config: HeuristicChefConfig,
    round: Option<u8>,
    queue: VecDeque<ChefAction>,
    last: Option<Selection>,
}

impl HeuristicChef {
    pub fn new(config: HeuristicChefConfig) -> Self {
        HeuristicChef { config, round: None, queue: VecDeque::new(), last: None }
    }

    /// Goals chosen for the round in progress.
    pub fn last_selection(&self) -> Option<&Selection> {
        self.last.as_ref()
    }
}

impl ChefPolicy for HeuristicChef {
    fn act(&mut self, obs: &ChefObservation) -> Option<ChefAction> {
        if self.round != Some(obs.round) {
            self.round = Some(obs.round);
            let sel = heuristic_select_goals(obs, &self.config);
            let chain = sel.plan.as_ref().map(|p| p.chain.clone()).unwrap_or_default();
            self.queue = execute_chain(obs, &chain, self.config.search.node_cap).into();
            self.last = Some(sel);
        }
        if obs.world.ap_remaining == 0 {
            return None;
        }
        self.queue.pop_front()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameState, Phase, RuleConfig, WaiterRecommendation};
    use crate::layout::{load_layout, DEFAULT_LAYOUT};
    use crate::planning::Fact;
    use crate::rules::CustomerProfile;
    use crate::scenario::ScenarioConfig;
    use std::sync::Arc;

    fn game(potatoes: u32) -> GameState {
        let layout = Arc::new(load_layout(DEFAULT_LAYOUT).unwrap());
        let scenario = ScenarioConfig::uniform(potatoes, CustomerProfile::Tourist, 120);
        GameState::new(layout, scenario, 1, RuleConfig::default())
    }

    fn play_round(g: &mut GameState, chef: &mut HeuristicChef) {
        while let Some(a) = chef.act(&g.observe_chef()) {
            g.apply_action(a).unwrap();
        }
        g.advance_round().unwrap();
    }

    #[test]
    fn prep_round_stages_the_variant() {
        for variant in [StagingVariant::TomatoStaging, StagingVariant::OnionStaging] {
            let mut g = game(2);
            let mut chef = HeuristicChef::new(HeuristicChefConfig { staging_variant: variant, ..Default::default() });
            play_round(&mut g, &mut chef);
            assert!(g.world.staged(variant.ingredient()) >= 1, "{variant:?}");
            assert_eq!(g.phase, Phase::WaiterTurn);
        }
    }

    #[test]
    fn follows_a_simple_recommendation() {
        let mut g = game(2);
        let mut chef = HeuristicChef::default();
        play_round(&mut g, &mut chef);
        let rec = WaiterRecommendation::new([(CustomerId(0), DishType::P), (CustomerId(1), DishType::TTTT)]);
        g.submit_recommendation(rec).unwrap();
        play_round(&mut g, &mut chef);
        let served: Vec<_> = g
            .customers
            .iter()
            .filter_map(|c| match c.status {
                crate::game::CustomerStatus::Served { dish, .. } => Some((c.id, dish)),
                _ => None,
            })
            .collect();
        assert_eq!(served, vec![(CustomerId(0), DishType::P), (CustomerId(1), DishType::TTTT)]);
    }

    #[test]
    fn impossible_entries_are_skipped() {
        let mut g = game(0);
        let mut chef = HeuristicChef::default();
        play_round(&mut g, &mut chef);
        let rec = WaiterRecommendation::new([(CustomerId(0), DishType::PP), (CustomerId(1), DishType::P)]);
        g.submit_recommendation(rec).unwrap();
        let sel = heuristic_select_goals(&g.observe_chef(), &chef.config);
        assert!(sel.accepted.is_empty());
        assert!(sel.goals.iter().all(|goal| !goal.facts.iter().any(|f| matches!(f, Fact::Served(..)))));
    }

    #[test]
    fn single_entry_limit() {
        let mut g = game(2);
        let mut chef = HeuristicChef::new(HeuristicChefConfig { service_limit: Some(1), ..Default::default() });
        play_round(&mut g, &mut chef);
        let rec = WaiterRecommendation::new([(CustomerId(0), DishType::P), (CustomerId(1), DishType::P)]);
        g.submit_recommendation(rec).unwrap();
        let sel = heuristic_select_goals(&g.observe_chef(), &chef.config);
        assert_eq!(sel.accepted, vec![(CustomerId(0), DishType::P)]);
    }

    #[test]
    fn potato_shortage_drops_the_double_potato_dish() {
        let mut g = game(1);
        let mut chef = HeuristicChef::default();
        g.advance_round().unwrap();
        let rec = WaiterRecommendation::new([(CustomerId(0), DishType::PP), (CustomerId(1), DishType::P)]);
        g.submit_recommendation(rec).unwrap();
        let sel = heuristic_select_goals(&g.observe_chef(), &chef.config);
        assert_eq!(sel.accepted, vec![(CustomerId(1), DishType::P)]);
        play_round(&mut g, &mut chef);
        assert!(matches!(g.customers[1].status, crate::game::CustomerStatus::Served { dish: DishType::P, .. }));
    }

    #[test]
    fn empty_recommendation_stages_then_returns_to_center() {
        let mut g = game(2);
        g.advance_round().unwrap();
        g.submit_recommendation(WaiterRecommendation::default()).unwrap();
        let cfg = HeuristicChefConfig { staging_variant: StagingVariant::OnionStaging, ..Default::default() };
        let sel = heuristic_select_goals(&g.observe_chef(), &cfg);
        assert_eq!(sel.goals, vec![Goal::stage(Ingredient::Onion, cfg.max_staged), Goal::at_center()]);
        let world = sel.plan.unwrap().final_world.unwrap();
        assert_eq!(world.staged(Ingredient::Onion), cfg.max_staged);
        assert_eq!(world.staged(Ingredient::Tomato), 0);
    }

    #[test]
    fn acting_is_deterministic_and_within_budget() {
        let run = || {
            let mut g = game(3);
            let mut chef = HeuristicChef::default();
            play_round(&mut g, &mut chef);
            let rec = WaiterRecommendation::new((0..4).map(|i| (CustomerId(i), DishType::ALL[i as usize])));
            g.submit_recommendation(rec).unwrap();
            let mut stream = Vec::new();
            while let Some(a) = chef.act(&g.observe_chef()) {
                g.apply_action(a).unwrap();
                stream.push(a);
            }
            stream
        };
        let a = run();
        assert!(a.len() <= 135);
        assert_eq!(a, run());
    }
}
