//! Authoritative game state, round structure and the two partial views.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::TileMap;
use crate::rules::{compute_tip, CustomerProfile, DishType, CHEF_BUDGET, PREP_BUDGET, ROUNDS};
use crate::scenario::ScenarioConfig;
use crate::world::{ChefAction, ChefWorld, CustomerId, SeatStatus, SeatedCustomer, WorldError, WorldEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Prep,
    WaiterTurn,
    ChefTurn,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CustomerStatus {
    Waiting,
    Served { dish: DishType, tip: u32 },
    Left,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Customer {
    pub id: CustomerId,
    /// Chef performance round, 1..=3.
    pub round: u8,
    pub seat: u8,
    pub profile: CustomerProfile,
    pub patience: u32,
    pub status: CustomerStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecommendationEntry {
    pub customer_id: CustomerId,
    pub dish: DishType,
}

/// Waiter's dish assignments, highest priority first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WaiterRecommendation {
    pub entries: Vec<RecommendationEntry>,
}

impl WaiterRecommendation {
    pub fn new(entries: impl IntoIterator<Item = (CustomerId, DishType)>) -> Self {
        WaiterRecommendation {
            entries: entries
                .into_iter()
                .map(|(customer_id, dish)| RecommendationEntry { customer_id, dish })
                .collect(),
        }
    }

    pub fn dish_for(&self, id: CustomerId) -> Option<DishType> {
        self.entries.iter().find(|e| e.customer_id == id).map(|e| e.dish)
    }
}

/// Budgets, overridable for experiments that need unconstrained rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleConfig {
    pub prep_budget: u32,
    pub chef_budget: u32,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig { prep_budget: PREP_BUDGET, chef_budget: CHEF_BUDGET }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("operation not allowed during {0:?}")]
    Phase(Phase),
    #[error(transparent)]
    IllegalAction(#[from] WorldError),
    #[error("invalid recommendation: {0}")]
    InvalidRecommendation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameState {
    #[serde(skip)]
    pub layout: Arc<TileMap>,
    pub round: u8,
    pub phase: Phase,
    pub world: ChefWorld,
    pub customers: Vec<Customer>,
    pub active_recommendation: Option<WaiterRecommendation>,
    pub tips_total: u32,
    pub rng_seed: u64,
    pub scenario: ScenarioConfig,
    pub rules: RuleConfig,
}

/// Everything the waiter is shown: the next chef round's customers in full
/// and the profile kinds of customers in later rounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaiterObservation {
    pub round: u8,
    pub upcoming: Vec<UpcomingCustomer>,
    pub later: Vec<LaterCustomer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpcomingCustomer {
    pub id: CustomerId,
    pub seat: u8,
    pub profile: CustomerProfile,
    pub patience: u32,
    /// Tips in PP, P, O, TTTT order.
    pub tips: [u32; 4],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaterCustomer {
    pub chef_round: u8,
    pub seat: u8,
    pub profile: CustomerProfile,
}

/// The chef's view: the physical kitchen plus the waiter's recommendation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChefObservation {
    #[serde(skip)]
    pub layout: Arc<TileMap>,
    pub round: u8,
    pub phase: Phase,
    pub world: ChefWorld,
    pub recommendation: WaiterRecommendation,
}

/// Chef round index (1..=3) for a game round, if it is a chef performance round.
pub fn chef_round_of(round: u8) -> Option<u8> {
    matches!(round, 3 | 5 | 7).then(|| (round - 1) / 2)
}

pub fn new_game(layout: Arc<TileMap>, scenario: ScenarioConfig, seed: u64) -> GameState {
    GameState::new(layout, scenario, seed, RuleConfig::default())
}

impl GameState {
    pub fn new(layout: Arc<TileMap>, scenario: ScenarioConfig, seed: u64, rules: RuleConfig) -> GameState {
        let customers = (0..scenario.profiles.len())
            .map(|i| {
                let id = CustomerId(i as u8);
                Customer {
                    id,
                    round: id.chef_round(),
                    seat: id.seat(),
                    profile: scenario.profiles[i],
                    patience: scenario.patience[i],
                    status: CustomerStatus::Waiting,
                }
            })
            .collect();
        let mut world = ChefWorld::new(&layout, scenario.potatoes);
        world.start_round(rules.prep_budget, Vec::new(), false);
        GameState {
            layout,
            round: 1,
            phase: Phase::Prep,
            world,
            customers,
            active_recommendation: None,
            tips_total: 0,
            rng_seed: seed,
            scenario,
            rules,
        }
    }

    pub fn chef_round(&self) -> Option<u8> {
        chef_round_of(self.round)
    }

    fn check_chef_phase(&self) -> Result<(), GameError> {
        match self.phase {
            Phase::Prep | Phase::ChefTurn => Ok(()),
            p => Err(GameError::Phase(p)),
        }
    }

    pub fn legal_actions(&self) -> Result<Vec<ChefAction>, GameError> {
        self.check_chef_phase()?;
        Ok(self.world.legal_actions(&self.layout))
    }

    pub fn apply_action(&mut self, action: ChefAction) -> Result<Vec<WorldEvent>, GameError> {
        self.check_chef_phase()?;
        let events = self.world.step(&self.layout, action)?;
        for ev in &events {
            match *ev {
                WorldEvent::Served { customer, dish, actions_used, .. } => {
                    let c = &mut self.customers[customer.0 as usize];
                    let tip = compute_tip(c.profile, dish, actions_used, c.patience);
                    c.status = CustomerStatus::Served { dish, tip };
                    self.tips_total += tip;
                }
                WorldEvent::CustomerLeft { customer, .. } => {
                    self.customers[customer.0 as usize].status = CustomerStatus::Left;
                }
                _ => {}
            }
        }
        Ok(events)
    }

    /// The customers the next (or current) chef round serves.
    pub fn round_customers(&self, chef_round: u8) -> impl Iterator<Item = &Customer> {
        self.customers.iter().filter(move |c| c.round == chef_round)
    }

    pub fn validate_recommendation(&self, rec: &WaiterRecommendation) -> Result<(), GameError> {
        let upcoming = chef_round_of(self.round + 1)
            .ok_or_else(|| GameError::InvalidRecommendation("no upcoming chef round".into()))?;
        let mut seen = BTreeSet::new();
        for e in &rec.entries {
            let c = self
                .customers
                .get(e.customer_id.0 as usize)
                .ok_or_else(|| GameError::InvalidRecommendation(format!("unknown customer {}", e.customer_id)))?;
            if c.round != upcoming {
                return Err(GameError::InvalidRecommendation(format!(
                    "customer {} belongs to chef round {}, not {upcoming}",
                    e.customer_id, c.round
                )));
            }
            if !seen.insert(e.customer_id) {
                return Err(GameError::InvalidRecommendation(format!("duplicate customer {}", e.customer_id)));
            }
        }
        Ok(())
    }

    pub fn submit_recommendation(&mut self, rec: WaiterRecommendation) -> Result<(), GameError> {
        if self.phase != Phase::WaiterTurn {
            return Err(GameError::Phase(self.phase));
        }
        self.validate_recommendation(&rec)?;
        self.round += 1;
        self.phase = Phase::ChefTurn;
        let chef_round = self.chef_round().expect("waiter turn precedes a chef round");
        let seats = self
            .round_customers(chef_round)
            .map(|c| SeatedCustomer { id: c.id, seat: c.seat, patience: c.patience, status: SeatStatus::Waiting })
            .collect();
        self.world.start_round(self.rules.chef_budget, seats, true);
        self.active_recommendation = Some(rec);
        Ok(())
    }

    /// End the current chef-acting round (prep or performance).
    pub fn advance_round(&mut self) -> Result<Vec<WorldEvent>, GameError> {
        self.check_chef_phase()?;
        let events = self.world.end_round();
        for ev in &events {
            if let WorldEvent::CustomerLeft { customer, .. } = ev {
                self.customers[customer.0 as usize].status = CustomerStatus::Left;
            }
        }
        self.world.seats.clear();
        self.world.patience_clock = false;
        self.active_recommendation = None;
        if self.round >= ROUNDS {
            self.phase = Phase::Finished;
        } else {
            self.round += 1;
            self.phase = Phase::WaiterTurn;
        }
        Ok(events)
    }

    pub fn observe_waiter(&self) -> WaiterObservation {
        let next = match self.phase {
            Phase::WaiterTurn => chef_round_of(self.round + 1),
            _ => self.chef_round(),
        };
        let Some(next) = next else {
            return WaiterObservation { round: self.round, upcoming: Vec::new(), later: Vec::new() };
        };
        let upcoming = self
            .round_customers(next)
            .map(|c| UpcomingCustomer {
                id: c.id,
                seat: c.seat,
                profile: c.profile,
                patience: c.patience,
                tips: c.profile.tip_table(),
            })
            .collect();
        let later = self
            .customers
            .iter()
            .filter(|c| c.round > next)
            .map(|c| LaterCustomer { chef_round: c.round, seat: c.seat, profile: c.profile })
            .collect();
        WaiterObservation { round: self.round, upcoming, later }
    }

    pub fn observe_chef(&self) -> ChefObservation {
        ChefObservation {
            layout: self.layout.clone(),
            round: self.round,
            phase: self.phase,
            world: self.world.clone(),
            recommendation: self.active_recommendation.clone().unwrap_or_default(),
        }
    }

    pub fn served_tips(&self) -> u32 {
        self.customers
            .iter()
            .map(|c| match c.status {
                CustomerStatus::Served { tip, .. } => tip,
                _ => 0,
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{load_layout, Direction, Pos, Pose, DEFAULT_LAYOUT};
    use crate::world::HeldItem;

    fn game(scenario: ScenarioConfig) -> GameState {
        new_game(Arc::new(load_layout(DEFAULT_LAYOUT).unwrap()), scenario, 9)
    }

    fn to_first_chef_round(g: &mut GameState) {
        g.advance_round().unwrap();
        g.submit_recommendation(WaiterRecommendation::default()).unwrap();
    }

    #[test]
    fn new_game_contract() {
        let g = game(ScenarioConfig::uniform(5, CustomerProfile::Tourist, 70));
        assert_eq!((g.round, g.phase), (1, Phase::Prep));
        assert_eq!(g.world.ap_remaining, 15);
        assert_eq!(g.world.potato_inventory, 5);
        assert_eq!(g.world.chef.pose.pos, g.layout.center());
        assert_eq!(g.tips_total, 0);
        assert_eq!(g, game(ScenarioConfig::uniform(5, CustomerProfile::Tourist, 70)));
    }

    #[test]
    fn serving_pp_to_executive_in_time() {
        let mut g = game(ScenarioConfig::uniform(5, CustomerProfile::Executive, 70));
        to_first_chef_round(&mut g);
        g.world.actions_this_round = 49;
        g.world.chef.pose = Pose { pos: Pos::new(3, 5), facing: Direction::S };
        g.world.chef.held = HeldItem::Dish(DishType::PP, 1);
        g.apply_action(ChefAction::Interact).unwrap();
        assert_eq!(g.tips_total, 100);
        assert_eq!(g.customers[0].status, CustomerStatus::Served { dish: DishType::PP, tip: 100 });
    }

    #[test]
    fn late_serve_finds_customer_gone() {
        let mut g = game(ScenarioConfig::uniform(5, CustomerProfile::Tourist, 70));
        to_first_chef_round(&mut g);
        g.world.chef.pose = Pose { pos: Pos::new(3, 5), facing: Direction::S };
        g.world.chef.held = HeldItem::Dish(DishType::O, 1);
        for _ in 0..71 {
            g.apply_action(ChefAction::Wait).unwrap();
        }
        assert_eq!(g.customers[0].status, CustomerStatus::Left);
        let events = g.apply_action(ChefAction::Interact).unwrap();
        assert!(matches!(events[0], WorldEvent::ServeRejected { .. }));
        assert_eq!(g.tips_total, 0);
    }

    #[test]
    fn hipster_tips_nothing_for_onion_soup() {
        let mut g = game(ScenarioConfig::uniform(5, CustomerProfile::Hipster, 120));
        to_first_chef_round(&mut g);
        g.world.chef.pose = Pose { pos: Pos::new(3, 5), facing: Direction::S };
        g.world.chef.held = HeldItem::Dish(DishType::O, 1);
        g.apply_action(ChefAction::Interact).unwrap();
        assert_eq!(g.customers[0].status, CustomerStatus::Served { dish: DishType::O, tip: 0 });
    }

    #[test]
    fn recommendation_validation() {
        let mut g = game(ScenarioConfig::uniform(5, CustomerProfile::Tourist, 70));
        assert_eq!(
            g.submit_recommendation(WaiterRecommendation::default()),
            Err(GameError::Phase(Phase::Prep))
        );
        g.advance_round().unwrap();
        let wrong_round = WaiterRecommendation::new([(CustomerId(4), DishType::P)]);
        assert!(matches!(g.submit_recommendation(wrong_round), Err(GameError::InvalidRecommendation(_))));
        let dup = WaiterRecommendation::new([(CustomerId(0), DishType::P), (CustomerId(0), DishType::O)]);
        assert!(matches!(g.submit_recommendation(dup), Err(GameError::InvalidRecommendation(_))));
        let rec = WaiterRecommendation::new((0..4).map(|i| (CustomerId(i), DishType::O)));
        g.submit_recommendation(rec.clone()).unwrap();
        assert_eq!(g.phase, Phase::ChefTurn);
        assert_eq!(g.round, 3);
        assert_eq!(g.world.actions_this_round, 0);
        assert_eq!(g.observe_chef().recommendation, rec);
    }

    #[test]
    fn empty_recommendation_is_accepted() {
        let mut g = game(ScenarioConfig::uniform(5, CustomerProfile::Tourist, 70));
        to_first_chef_round(&mut g);
        assert!(g.observe_chef().recommendation.entries.is_empty());
    }

    #[test]
    fn waiter_view_in_round_two() {
        let mut g = game(ScenarioConfig::uniform(5, CustomerProfile::Hipster, 70));
        g.advance_round().unwrap();
        let obs = g.observe_waiter();
        let ids: Vec<u8> = obs.upcoming.iter().map(|c| c.id.0).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert!(obs.upcoming.iter().all(|c| c.tips == [20, 20, 0, 10]));
        assert_eq!(obs.later.len(), 8);
        assert!(obs.later.iter().all(|c| c.chef_round > 1));
        let json = serde_json::to_string(&obs).unwrap();
        assert!(!json.contains("potato"));
        assert!(!json.contains("counters"));
    }

    #[test]
    fn chef_view_has_no_profiles() {
        let g = game(ScenarioConfig::uniform(5, CustomerProfile::Executive, 70));
        let json = serde_json::to_string(&g.observe_chef()).unwrap();
        assert!(!json.contains("profile"));
        assert!(!json.contains("Executive"));
    }

    #[test]
    fn phase_errors() {
        let mut g = game(ScenarioConfig::uniform(5, CustomerProfile::Tourist, 70));
        g.advance_round().unwrap();
        assert_eq!(g.legal_actions(), Err(GameError::Phase(Phase::WaiterTurn)));
        assert_eq!(g.advance_round(), Err(GameError::Phase(Phase::WaiterTurn)));
        for _ in 0..3 {
            g.submit_recommendation(WaiterRecommendation::default()).unwrap();
            g.advance_round().unwrap();
        }
        assert_eq!(g.phase, Phase::Finished);
        assert_eq!(g.apply_action(ChefAction::Wait), Err(GameError::Phase(Phase::Finished)));
    }

    #[test]
    fn pots_are_cleared_between_rounds() {
        let mut g = game(ScenarioConfig::uniform(5, CustomerProfile::Tourist, 70));
        to_first_chef_round(&mut g);
        g.world.pots[0].contents = crate::rules::Contents::of(crate::rules::Ingredient::Onion, 1);
        g.world.pots[0].ready = Some(DishType::O);
        g.advance_round().unwrap();
        assert!(g.world.pots[0].contents.is_empty());
        assert!(g.customers[..4].iter().all(|c| c.status == CustomerStatus::Left));
    }
}
