//! Render states for replaying a chef turn one action at a time.
//!
//! A frame shows only what is visible in the kitchen: no potato supply and
//! no customer profiles.

use hybs_core::log::{kinds, replay_prefix};
use hybs_core::{
    ChefAction, DishType, Episode, EpisodeLog, GameState, HeldItem, Pos, Pose, RecommendationEntry,
    WaiterRecommendation, WorldEvent,
};
use hybs_core::world::SeatedCustomer;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterView {
    pub at: Pos,
    pub item: HeldItem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotView {
    pub at: Pos,
    /// Onions, tomatoes and potatoes in the pot.
    pub contents: [u8; 3],
    pub cooking: Option<DishType>,
    /// Ticks until the dish is ready.
    pub remaining: Option<u32>,
    pub ready: Option<DishType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderState {
    pub round: u8,
    pub ap_remaining: u32,
    pub actions_this_round: u32,
    pub chef: Pose,
    pub held: HeldItem,
    pub counters: Vec<CounterView>,
    pub pots: Vec<PotView>,
    pub seats: Vec<SeatedCustomer>,
    pub tips_total: u32,
}

impl RenderState {
    pub fn of(state: &GameState) -> RenderState {
        let w = &state.world;
        RenderState {
            round: state.round,
            ap_remaining: w.ap_remaining,
            actions_this_round: w.actions_this_round,
            chef: w.chef.pose,
            held: w.chef.held,
            counters: w.counters.iter().map(|(at, item)| CounterView { at: *at, item: *item }).collect(),
            pots: w
                .pots
                .iter()
                .zip(state.layout.pots())
                .map(|(p, at)| PotView {
                    at: *at,
                    contents: p.contents.0,
                    cooking: p.is_cooking().then(|| p.recipe()).flatten(),
                    remaining: p.remaining(),
                    ready: p.ready,
                })
                .collect(),
            seats: w.seats.clone(),
            tips_total: state.tips_total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub step: u32,
    pub action: ChefAction,
    pub events: Vec<WorldEvent>,
    pub state: RenderState,
}

/// One chef-acting round as a replayable sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub round: u8,
    pub initial: RenderState,
    pub frames: Vec<Frame>,
    /// Events raised when the round closed, such as customers leaving.
    pub closing: Vec<WorldEvent>,
    pub round_tips: u32,
    pub tips_total: u32,
}

/// Builds a [`Turn`] while an episode is driven through a chef round.
pub struct TurnRecorder {
    turn: Turn,
    tips_before: u32,
}

impl TurnRecorder {
    pub fn begin(ep: &Episode) -> TurnRecorder {
        TurnRecorder {
            turn: Turn {
                round: ep.state.round,
                initial: RenderState::of(&ep.state),
                frames: Vec::new(),
                closing: Vec::new(),
                round_tips: 0,
                tips_total: ep.state.tips_total,
            },
            tips_before: ep.state.tips_total,
        }
    }

    pub fn act(&mut self, ep: &mut Episode, action: ChefAction) -> Result<(), hybs_core::GameError> {
        let events = ep.act(action)?;
        self.record(ep, action, events);
        Ok(())
    }

    fn record(&mut self, ep: &Episode, action: ChefAction, events: Vec<WorldEvent>) {
        let step = self.turn.frames.len() as u32 + 1;
        self.turn.frames.push(Frame { step, action, events, state: RenderState::of(&ep.state) });
    }

    pub fn end(mut self, ep: &mut Episode) -> Result<Turn, hybs_core::GameError> {
        let before = ep.log.records.len();
        let tips = ep.state.tips_total;
        ep.end_round()?;
        self.turn.closing = closing_events(&ep.log.records[before..]);
        self.turn.round_tips = tips - self.tips_before;
        self.turn.tips_total = ep.state.tips_total;
        Ok(self.turn)
    }
}

fn closing_events(records: &[hybs_core::LogRecord]) -> Vec<WorldEvent> {
    records
        .iter()
        .filter(|r| ![kinds::ROUND_ENDED, kinds::GAME_OVER].contains(&r.event_kind.as_str()))
        .filter_map(|r| {
            let mut payload = r.payload.clone();
            payload.as_object_mut()?.insert("kind".into(), r.event_kind.clone().into());
            serde_json::from_value(payload).ok()
        })
        .collect()
}

/// Every chef turn of a log, rebuilt by replay. The log must replay exactly.
pub fn turns_from_log(log: &EpisodeLog) -> Result<Vec<Turn>, HarnessError> {
    let malformed = |e: hybs_core::log::LogError| HarnessError::MalformedLog(e.to_string());
    let head = EpisodeLog { records: log.records.iter().take(1).cloned().collect() };
    let mut ep = replay_prefix(&head).map_err(malformed)?;
    let mut turns = Vec::new();
    let mut current: Option<TurnRecorder> = None;
    let game = |e: hybs_core::GameError| HarnessError::MalformedLog(format!("replay rejected input: {e}"));
    for r in log.records.iter().skip(1) {
        match r.event_kind.as_str() {
            kinds::CHEF_ACTION => {
                let action: ChefAction = serde_json::from_value(r.payload.get("action").cloned().unwrap_or_default())
                    .map_err(|e| HarnessError::MalformedLog(format!("bad action: {e}")))?;
                current.get_or_insert_with(|| TurnRecorder::begin(&ep)).act(&mut ep, action).map_err(game)?;
            }
            kinds::RECOMMENDATION => {
                let entries: Vec<RecommendationEntry> =
                    serde_json::from_value(r.payload.get("entries").cloned().unwrap_or_default())
                        .map_err(|e| HarnessError::MalformedLog(format!("bad entries: {e}")))?;
                ep.recommend(WaiterRecommendation { entries }).map_err(game)?;
            }
            kinds::ROUND_ENDED => {
                let rec = current.take().unwrap_or_else(|| TurnRecorder::begin(&ep));
                turns.push(rec.end(&mut ep).map_err(game)?);
            }
            _ => {}
        }
    }
    if ep.log != *log {
        return Err(HarnessError::MalformedLog("log does not replay exactly".into()));
    }
    Ok(turns)
}
