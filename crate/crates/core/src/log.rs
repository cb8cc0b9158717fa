//! Append-only episode logs and deterministic replay.
//!
//! A log is a sequence of JSON records, one per line. The `game_started`
//! record carries everything needed to rebuild the initial state; chef
//! actions, recommendations and round ends are the inputs; every other
//! record is a consequence that replay regenerates and checks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::game::{GameError, GameState, Phase, RuleConfig, WaiterRecommendation};
use crate::layout::{load_layout, TileMap};
use crate::scenario::ScenarioConfig;
use crate::world::{ChefAction, WorldEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    System,
    Chef,
    Waiter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: u64,
    pub round: u8,
    pub phase: Phase,
    pub actor: Actor,
    pub event_kind: String,
    pub payload: Value,
}

pub mod kinds {
    pub const GAME_STARTED: &str = "game_started";
    pub const CHEF_ACTION: &str = "chef_action";
    pub const RECOMMENDATION: &str = "recommendation";
    pub const ROUND_ENDED: &str = "round_ended";
    pub const GAME_OVER: &str = "game_over";
    pub const SERVED: &str = "served";
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("malformed log: {0}")]
    Malformed(String),
    #[error("log line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
}

impl From<GameError> for LogError {
    fn from(e: GameError) -> Self {
        LogError::Malformed(format!("replay rejected input: {e}"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EpisodeLog {
    pub records: Vec<LogRecord>,
}

impl EpisodeLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("log records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<EpisodeLog, LogError> {
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|source| LogError::Json { line: i + 1, source }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EpisodeLog { records })
    }

    pub fn iter(&self) -> impl Iterator<Item = &LogRecord> {
        self.records.iter()
    }

    /// Chef actions in order, with the round each was taken in.
    pub fn chef_actions(&self) -> Result<Vec<(u8, ChefAction)>, LogError> {
        self.records
            .iter()
            .filter(|r| r.event_kind == kinds::CHEF_ACTION)
            .map(|r| Ok((r.round, parse_field(&r.payload, "action")?)))
            .collect()
    }

    /// Final tips as recorded by the `game_over` record.
    pub fn final_tips(&self) -> Option<u32> {
        self.records
            .iter()
            .rev()
            .find(|r| r.event_kind == kinds::GAME_OVER)
            .and_then(|r| r.payload.get("tips_total")?.as_u64())
            .map(|t| t as u32)
    }

    pub fn is_complete(&self) -> bool {
        self.records.last().is_some_and(|r| r.event_kind == kinds::GAME_OVER)
    }
}

fn parse_field<T: for<'de> Deserialize<'de>>(payload: &Value, key: &str) -> Result<T, LogError> {
    let v = payload
        .get(key)
        .ok_or_else(|| LogError::Malformed(format!("payload missing {key:?}")))?;
    serde_json::from_value(v.clone()).map_err(|e| LogError::Malformed(format!("bad {key:?}: {e}")))
}

/// A game together with the log of everything that happened in it.
#[derive(Debug, Clone)]
pub struct Episode {
    pub state: GameState,
    pub log: EpisodeLog,
}

impl Episode {
    pub fn start(layout: Arc<TileMap>, scenario: ScenarioConfig, seed: u64, rules: RuleConfig) -> Episode {
        let layout_text = layout.to_text();
        let state = GameState::new(layout, scenario, seed, rules);
        let mut ep = Episode { state, log: EpisodeLog::default() };
        let payload = json!({
            "seed": seed,
            "scenario": ep.state.scenario,
            "rules": rules,
            "layout": layout_text,
        });
        ep.push(Actor::System, kinds::GAME_STARTED, payload);
        ep
    }

    fn push(&mut self, actor: Actor, kind: &str, payload: Value) {
        let t = self.log.records.len() as u64;
        self.log.records.push(LogRecord {
            t,
            round: self.state.round,
            phase: self.state.phase,
            actor,
            event_kind: kind.to_string(),
            payload,
        });
    }

    fn push_world_events(&mut self, events: &[WorldEvent]) {
        for ev in events {
            let mut payload = match serde_json::to_value(ev).expect("world events serialize") {
                Value::Object(m) => m,
                _ => Map::new(),
            };
            let kind = payload
                .remove("kind")
                .and_then(|k| k.as_str().map(str::to_string))
                .unwrap_or_default();
            if let WorldEvent::Served { customer, .. } = ev {
                let tip = match self.state.customers[customer.0 as usize].status {
                    crate::game::CustomerStatus::Served { tip, .. } => tip,
                    _ => 0,
                };
                payload.insert("tip".into(), json!(tip));
            }
            self.push(Actor::System, &kind, Value::Object(payload));
        }
    }

    pub fn act(&mut self, action: ChefAction) -> Result<Vec<WorldEvent>, GameError> {
        let events = self.state.apply_action(action)?;
        self.push(Actor::Chef, kinds::CHEF_ACTION, json!({ "action": action }));
        self.push_world_events(&events);
        Ok(events)
    }

    pub fn recommend(&mut self, rec: WaiterRecommendation) -> Result<(), GameError> {
        self.state.submit_recommendation(rec.clone())?;
        self.push(Actor::Waiter, kinds::RECOMMENDATION, json!({ "entries": rec.entries }));
        Ok(())
    }

    /// End the current chef-acting round; emits `game_over` after round 7.
    pub fn end_round(&mut self) -> Result<(), GameError> {
        let ending = self.state.round;
        let events = self.state.advance_round()?;
        self.push_world_events(&events);
        self.push(Actor::System, kinds::ROUND_ENDED, json!({ "ended_round": ending }));
        if self.state.phase == Phase::Finished {
            let tips = self.state.tips_total;
            self.push(Actor::System, kinds::GAME_OVER, json!({ "tips_total": tips }));
        }
        Ok(())
    }

    pub fn is_finished(&self) -> bool {
        self.state.phase == Phase::Finished
    }
}

/// Rebuild an episode from its log, re-deriving every consequence record and
/// requiring the result to match the input exactly.
pub fn replay(log: &EpisodeLog) -> Result<Episode, LogError> {
    let mut ep = replay_prefix(log)?;
    if ep.log != *log {
        let at = ep
            .log
            .records
            .iter()
            .zip(&log.records)
            .position(|(a, b)| a != b)
            .unwrap_or(ep.log.records.len().min(log.records.len()));
        return Err(LogError::Malformed(format!("replay diverges from log at record {at}")));
    }
    ep.log = log.clone();
    Ok(ep)
}

/// Replay the inputs of a log, possibly incomplete, without the final
/// consistency check.
pub fn replay_prefix(log: &EpisodeLog) -> Result<Episode, LogError> {
    let first = log
        .records
        .first()
        .filter(|r| r.event_kind == kinds::GAME_STARTED)
        .ok_or_else(|| LogError::Malformed("log must start with game_started".into()))?;
    let seed: u64 = parse_field(&first.payload, "seed")?;
    let scenario: ScenarioConfig = parse_field(&first.payload, "scenario")?;
    scenario
        .validate()
        .map_err(|e| LogError::Malformed(e.to_string()))?;
    let rules: RuleConfig = parse_field(&first.payload, "rules")?;
    let layout_text: String = parse_field(&first.payload, "layout")?;
    let layout = load_layout(&layout_text).map_err(|e| LogError::Malformed(e.to_string()))?;
    let mut ep = Episode::start(Arc::new(layout), scenario, seed, rules);
    for r in &log.records[1..] {
        match r.event_kind.as_str() {
            kinds::CHEF_ACTION => {
                ep.act(parse_field(&r.payload, "action")?)?;
            }
            kinds::RECOMMENDATION => {
                let entries = parse_field(&r.payload, "entries")?;
                ep.recommend(WaiterRecommendation { entries })?;
            }
            kinds::ROUND_ENDED => ep.end_round()?,
            _ => {}
        }
    }
    Ok(ep)
}
