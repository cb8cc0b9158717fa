//! Scripted waiter baselines.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::WaiterPolicy;
use crate::game::{UpcomingCustomer, WaiterObservation, WaiterRecommendation};
use crate::rules::DishType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedWaiterKind {
    /// Each customer gets their highest-tipping dish.
    Greedy,
    /// Each customer gets a uniformly random dish, in random order.
    Random,
}

/// How greedy breaks ties between equally tipping dishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyTieBreak {
    /// Fewer ingredients first, then shorter cook time.
    #[default]
    FewestIngredients,
    /// Shorter cook time first, then fewer ingredients.
    ShortestCook,
    /// First in PP, P, O, TTTT order.
    MenuOrder,
}

impl GreedyTieBreak {
    fn key(self, d: DishType) -> (u32, u32, usize) {
        let ingredients = d.recipe().total() as u32;
        match self {
            GreedyTieBreak::FewestIngredients => (ingredients, d.cook_time(), d.index()),
            GreedyTieBreak::ShortestCook => (d.cook_time(), ingredients, d.index()),
            GreedyTieBreak::MenuOrder => (0, 0, d.index()),
        }
    }
}

/// The dish greedy assigns a customer.
pub fn greedy_dish(c: &UpcomingCustomer, tie: GreedyTieBreak) -> DishType {
    DishType::ALL
        .into_iter()
        .min_by_key(|d| (std::cmp::Reverse(c.tips[d.index()]), tie.key(*d)))
        .expect("menu is non-empty")
}

/// Recommendation from a scripted policy. Greedy lists entries by tip,
/// highest first, seat order breaking ties; random shuffles them.
pub fn scripted_waiter(
    obs: &WaiterObservation,
    kind: ScriptedWaiterKind,
    tie: GreedyTieBreak,
    seed: u64,
) -> WaiterRecommendation {
    match kind {
        ScriptedWaiterKind::Greedy => {
            let mut entries: Vec<_> = obs.upcoming.iter().map(|c| (c, greedy_dish(c, tie))).collect();
            entries.sort_by_key(|(c, d)| (std::cmp::Reverse(c.tips[d.index()]), c.seat));
            WaiterRecommendation::new(entries.into_iter().map(|(c, d)| (c.id, d)))
        }
        ScriptedWaiterKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(obs.round) << 32));
            let mut entries: Vec<_> = obs
                .upcoming
                .iter()
                .map(|c| (c.id, DishType::ALL[rng.gen_range(0..DishType::ALL.len())]))
                .collect();
            entries.shuffle(&mut rng);
            WaiterRecommendation::new(entries)
        }
    }
}

/// A scripted waiter bound to a seed.
#[derive(Debug, Clone)]
pub struct ScriptedWaiter {
    pub kind: ScriptedWaiterKind,
    pub tie_break: GreedyTieBreak,
    pub seed: u64,
}

impl ScriptedWaiter {
    pub fn greedy() -> Self {
        ScriptedWaiter { kind: ScriptedWaiterKind::Greedy, tie_break: GreedyTieBreak::default(), seed: 0 }
    }

    pub fn random(seed: u64) -> Self {
        ScriptedWaiter { kind: ScriptedWaiterKind::Random, tie_break: GreedyTieBreak::default(), seed }
    }
}

impl WaiterPolicy for ScriptedWaiter {
    fn recommend(&mut self, obs: &WaiterObservation) -> WaiterRecommendation {
        scripted_waiter(obs, self.kind, self.tie_break, self.seed)
    }
}
