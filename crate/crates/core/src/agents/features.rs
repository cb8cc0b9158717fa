//! Fixed-length chef state features and the apprentice's goal vocabulary.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::game::{ChefObservation, Phase};
use crate::layout::{Direction, TileMap};
use crate::rules::{DishType, Ingredient, CHEF_BUDGET, SEATS};
use crate::world::{HeldItem, SeatStatus};

/// High-level goal predicted by the apprentice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GoalLabel {
    Serve { seat: u8, dish: DishType },
    Stage(Ingredient),
    Idle,
}

pub const GOAL_COUNT: usize = SEATS * 4 + 3 + 1;

impl GoalLabel {
    pub fn index(self) -> usize {
        match self {
            GoalLabel::Serve { seat, dish } => (seat as usize - 1) * 4 + dish.index(),
            GoalLabel::Stage(k) => SEATS * 4 + k.index(),
            GoalLabel::Idle => GOAL_COUNT - 1,
        }
    }

    pub fn from_index(i: usize) -> Option<GoalLabel> {
        match i {
            i if i < SEATS * 4 => Some(GoalLabel::Serve { seat: (i / 4) as u8 + 1, dish: DishType::ALL[i % 4] }),
            i if i < SEATS * 4 + 3 => Some(GoalLabel::Stage(Ingredient::ALL[i - SEATS * 4])),
            i if i == GOAL_COUNT - 1 => Some(GoalLabel::Idle),
            _ => None,
        }
    }

    /// All labels in index order.
    pub fn vocabulary() -> Vec<GoalLabel> {
        (0..GOAL_COUNT).filter_map(GoalLabel::from_index).collect()
    }
}

impl fmt::Display for GoalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalLabel::Serve { seat, dish } => write!(f, "serve_seat{seat}_{dish}"),
            GoalLabel::Stage(k) => write!(f, "stage_{}", format!("{k:?}").to_lowercase()),
            GoalLabel::Idle => f.write_str("idle"),
        }
    }
}

/// Item code: 0 empty, 1..=3 ingredients, 4 plate, 5..=8 dishes.
pub fn item_code(item: HeldItem) -> usize {
    match item {
        HeldItem::Nothing => 0,
        HeldItem::Ingredient(k) => 1 + k.index(),
        HeldItem::Plate => 4,
        HeldItem::Dish(d, _) => 5 + d.index(),
    }
}

const ITEM_CODES: usize = 9;
const POT_FEATURES: usize = 5;

/// Length of the feature vector for a layout.
pub fn feature_len(layout: &TileMap) -> usize {
    let tiles = layout.width() * layout.height();
    tiles + 4 + tiles + POT_FEATURES * layout.pots().len() + ITEM_CODES + SEATS * 5 + SEATS * 2 + 6
}

/// Features of the chef's view: location and facing, per-tile item codes,
/// pot contents, held item, recommended dish and status per seat, and a few
/// budget and stock scalars.
pub fn chef_features(obs: &ChefObservation) -> Vec<f64> {
    let layout = &obs.layout;
    let w = &obs.world;
    let tiles = layout.width() * layout.height();
    let mut out = Vec::with_capacity(feature_len(layout));

    let mut loc = vec![0.0; tiles];
    loc[layout.tile_index(w.chef.pose.pos)] = 1.0;
    out.extend(loc);
    out.extend(Direction::ALL.iter().map(|d| f64::from(u8::from(*d == w.chef.pose.facing))));

    let mut placed = vec![0.0; tiles];
    for (pos, item) in &w.counters {
        placed[layout.tile_index(*pos)] = item_code(*item) as f64 / (ITEM_CODES - 1) as f64;
    }
    out.extend(placed);

    for pot in &w.pots {
        for k in Ingredient::ALL {
            out.push(pot.contents.count(k) as f64 / 4.0);
        }
        let progress = pot.recipe().map_or(0.0, |d| pot.progress as f64 / d.cook_time() as f64);
        out.push(progress);
        out.push(f64::from(u8::from(pot.ready.is_some())));
    }

    let mut held = [0.0; ITEM_CODES];
    held[item_code(w.chef.held)] = 1.0;
    out.extend(held);

    for seat in 1..=SEATS as u8 {
        let mut code = [0.0; 5];
        let dish = w
            .seat_customer(seat)
            .and_then(|c| obs.recommendation.dish_for(c.id));
        code[dish.map_or(0, |d| 1 + d.index())] = 1.0;
        out.extend(code);
    }
    for seat in 1..=SEATS as u8 {
        let status = w.seat_customer(seat).map(|c| c.status);
        out.push(f64::from(u8::from(matches!(status, Some(SeatStatus::Served(_))))));
        out.push(f64::from(u8::from(status == Some(SeatStatus::Waiting))));
    }

    out.push(w.ap_remaining as f64 / CHEF_BUDGET as f64);
    out.push(w.potato_inventory as f64 / 5.0);
    for k in Ingredient::ALL {
        out.push(w.staged(k) as f64 / 4.0);
    }
    out.push(f64::from(u8::from(obs.phase == Phase::Prep)));
    debug_assert_eq!(out.len(), feature_len(layout));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameState;
    use crate::layout::{load_layout, DEFAULT_LAYOUT};
    use crate::scenario::sample_scenario;
    use std::sync::Arc;

    #[test]
    fn vocabulary_round_trips() {
        let vocab = GoalLabel::vocabulary();
        assert_eq!(vocab.len(), GOAL_COUNT);
        for (i, g) in vocab.iter().enumerate() {
            assert_eq!(g.index(), i);
        }
        assert_eq!(GoalLabel::from_index(GOAL_COUNT), None);
    }

    #[test]
    fn features_have_fixed_length() {
        let layout = Arc::new(load_layout(DEFAULT_LAYOUT).unwrap());
        let state = GameState::new(layout.clone(), sample_scenario(1), 1, Default::default());
        let f = chef_features(&state.observe_chef());
        assert_eq!(f.len(), feature_len(&layout));
        assert!(f.iter().all(|x| x.is_finite()));
    }
}
