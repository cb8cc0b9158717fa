//! Per-action state records recovered from a finished game's log.

use std::collections::BTreeSet;

use hybs_core::game::chef_round_of;
use hybs_core::log::{kinds, replay, replay_prefix};
use hybs_core::{ChefAction, CustomerId, DishType, EpisodeLog, HeldItem, Ingredient, WaiterRecommendation, WorldEvent};
use serde::{Deserialize, Serialize};

use crate::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    Move,
    Interact,
    Clear,
    Wait,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [ActionKind::Move, ActionKind::Interact, ActionKind::Clear, ActionKind::Wait];

    pub fn of(action: ChefAction) -> Self {
        match action {
            ChefAction::Move(_) => ActionKind::Move,
            ChefAction::Interact => ActionKind::Interact,
            ChefAction::Clear => ActionKind::Clear,
            ChefAction::Wait => ActionKind::Wait,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HeldKind {
    Nothing,
    Ingredient,
    Dish,
    Plate,
}

impl HeldKind {
    pub const ALL: [HeldKind; 4] = [HeldKind::Nothing, HeldKind::Ingredient, HeldKind::Dish, HeldKind::Plate];

    pub fn of(item: HeldItem) -> Self {
        match item {
            HeldItem::Nothing => HeldKind::Nothing,
            HeldItem::Ingredient(_) => HeldKind::Ingredient,
            HeldItem::Dish(..) => HeldKind::Dish,
            HeldItem::Plate => HeldKind::Plate,
        }
    }
}

/// The chef's situation just before one action, and what that action did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateActionRecord {
    pub round: u8,
    /// Actions already taken this round.
    pub step: u32,
    pub action: ActionKind,
    pub held: HeldKind,
    /// Seats (1..=4) already served this round.
    pub served: BTreeSet<u8>,
    /// Recommended dish per seat, index 0 for seat 1.
    pub assigned: [Option<DishType>; 4],
    /// Dish this action served, if any.
    pub served_dish: Option<DishType>,
    /// Ingredient this action put down on a counter, if any.
    pub staged: Option<Ingredient>,
}

fn malformed(e: impl std::fmt::Display) -> AnalysisError {
    AnalysisError::MalformedLog(e.to_string())
}

fn assigned(round: u8, rec: Option<&WaiterRecommendation>) -> [Option<DishType>; 4] {
    let mut out = [None; 4];
    if let (Some(cr), Some(rec)) = (chef_round_of(round), rec) {
        for seat in 1..=4u8 {
            let id = CustomerId::from_round_seat(cr, seat);
            out[seat as usize - 1] = rec.entries.iter().find(|e| e.customer_id == id).map(|e| e.dish);
        }
    }
    out
}

/// One record per chef action of a completed game, in order.
pub fn extract_records(log: &EpisodeLog) -> Result<Vec<StateActionRecord>, AnalysisError> {
    if !log.is_complete() {
        return Err(malformed("log does not end with game_over"));
    }
    replay(log).map_err(malformed)?;
    let head = EpisodeLog { records: log.records[..1].to_vec() };
    let mut ep = replay_prefix(&head).map_err(malformed)?;

    let mut out = Vec::new();
    let mut served = BTreeSet::new();
    for r in &log.records[1..] {
        match r.event_kind.as_str() {
            kinds::CHEF_ACTION => {
                let action: ChefAction = r
                    .payload
                    .get("action")
                    .cloned()
                    .ok_or_else(|| malformed("chef_action without action"))
                    .and_then(|v| serde_json::from_value(v).map_err(malformed))?;
                let s = &ep.state;
                let mut rec = StateActionRecord {
                    round: s.round,
                    step: s.world.actions_this_round,
                    action: ActionKind::of(action),
                    held: HeldKind::of(s.world.chef.held),
                    served: served.clone(),
                    assigned: assigned(s.round, s.active_recommendation.as_ref()),
                    served_dish: None,
                    staged: None,
                };
                for ev in ep.act(action).map_err(malformed)? {
                    match ev {
                        WorldEvent::Served { seat, dish, .. } => {
                            served.insert(seat);
                            rec.served_dish = Some(dish);
                        }
                        WorldEvent::Placed { item: HeldItem::Ingredient(k), .. } => rec.staged = Some(k),
                        _ => {}
                    }
                }
                out.push(rec);
            }
            kinds::RECOMMENDATION => {
                let entries = r
                    .payload
                    .get("entries")
                    .cloned()
                    .ok_or_else(|| malformed("recommendation without entries"))
                    .and_then(|v| serde_json::from_value(v).map_err(malformed))?;
                ep.recommend(WaiterRecommendation { entries }).map_err(malformed)?;
            }
            kinds::ROUND_ENDED => {
                ep.end_round().map_err(malformed)?;
                served.clear();
            }
            _ => {}
        }
    }
    Ok(out)
}
