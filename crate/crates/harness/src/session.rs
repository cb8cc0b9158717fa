//! Waiter sessions against an agent chef, as a message-in, messages-out
//! state machine. The network layer lives in `server`.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use hybs_core::game::chef_round_of;
use hybs_core::{normalize_tip, sample_scenario, Episode, Phase, RuleConfig, TileMap, WaiterRecommendation};
use serde::Serialize;

use crate::frames::Turn;
use crate::protocol::{
    codes, types, Ack, ChefTurnResult, CreateSession, Envelope, ErrorPayload, GameOver, SessionCreated, StateSnapshot,
    SubmitRecommendations, Totals,
};
use crate::runner::{play_chef_turn, BoxedChef, ChefFactory};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifecycle {
    Lobby,
    InGame,
    Finished,
}

/// Immutable settings shared by every session.
#[derive(Clone)]
pub struct ServiceConfig {
    pub layout: Arc<TileMap>,
    pub chef: ChefFactory,
    pub rules: RuleConfig,
    pub default_seed: u64,
    /// Where finished games are written as `<session id>.jsonl`.
    pub log_dir: Option<PathBuf>,
}

pub struct Session {
    pub id: String,
    pub lifecycle: Lifecycle,
    pub episode: Episode,
    chef: BoxedChef,
    client_seq: u64,
    server_seq: u64,
    last_reply: Vec<Envelope>,
    round_tips: [u32; 3],
    /// Frames of the most recent chef turn, kept until the next one.
    pub pending_turn: Option<Turn>,
}

/// What the transport should do with a handled message.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reply {
    pub messages: Vec<Envelope>,
    pub close_connection: bool,
}

struct Violation {
    code: &'static str,
    detail: String,
    /// Whether the session ends because of it.
    fatal: bool,
}

fn violation(detail: impl Into<String>) -> Violation {
    Violation { code: codes::PROTOCOL_VIOLATION, detail: detail.into(), fatal: true }
}

impl Session {
    fn send(&mut self, out: &mut Vec<Envelope>, kind: &str, payload: impl Serialize) {
        self.server_seq += 1;
        out.push(Envelope::new(kind, Some(&self.id), self.server_seq, payload));
    }

    fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            observation: self.episode.state.observe_waiter(),
            tips_total: self.episode.state.tips_total,
            round_tips: self.round_tips,
        }
    }

    fn totals(&self) -> Totals {
        Totals { tips_total: self.episode.state.tips_total, round_tips: self.round_tips }
    }

    /// Run the chef through its turn and report it, then either hand the
    /// waiter the next round or finish the game.
    fn chef_turn(&mut self, out: &mut Vec<Envelope>) -> Result<(), Violation> {
        let turn = play_chef_turn(&mut self.episode, self.chef.as_mut())
            .map_err(|e| Violation { code: codes::ENGINE_ERROR, detail: e.to_string(), fatal: true })?;
        if let Some(r) = chef_round_of(turn.round) {
            self.round_tips[r as usize - 1] += turn.round_tips;
        }
        let result = ChefTurnResult {
            round: turn.round,
            initial: turn.initial.clone(),
            frames: turn.frames.clone(),
            round_tips: turn.round_tips,
            totals: self.totals(),
        };
        self.pending_turn = Some(turn);
        self.send(out, types::CHEF_TURN_RESULT, result);
        if self.episode.is_finished() {
            self.lifecycle = Lifecycle::Finished;
            let tips_total = self.episode.state.tips_total;
            let normalized_tip = normalize_tip(tips_total, &self.episode.state.scenario)
                .map_err(|e| Violation { code: codes::ENGINE_ERROR, detail: e.to_string(), fatal: true })?;
            self.send(out, types::GAME_OVER, GameOver { tips_total, normalized_tip });
        } else {
            let snap = self.snapshot();
            self.send(out, types::STATE_SNAPSHOT, snap);
        }
        Ok(())
    }

    fn submit(&mut self, msg: &Envelope, out: &mut Vec<Envelope>) -> Result<(), Violation> {
        if self.lifecycle != Lifecycle::InGame || self.episode.state.phase != Phase::WaiterTurn {
            return Err(violation(format!("recommendations are not expected in {:?}", self.lifecycle)));
        }
        let body: SubmitRecommendations =
            msg.payload_as().map_err(|e| violation(format!("bad submit_recommendations payload: {e}")))?;
        let rec = WaiterRecommendation { entries: body.entries };
        self.episode.state.validate_recommendation(&rec).map_err(|e| Violation {
            code: codes::INVALID_RECOMMENDATION,
            detail: e.to_string(),
            fatal: false,
        })?;
        self.episode
            .recommend(rec)
            .map_err(|e| Violation { code: codes::ENGINE_ERROR, detail: e.to_string(), fatal: true })?;
        self.send(out, types::ACK, Ack { ack_seq: msg.seq });
        self.chef_turn(out)
    }
}

/// Every open session, each behind its own lock so messages for one session
/// are handled one at a time while different sessions proceed in parallel.
pub struct SessionManager {
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

fn error_envelope(session_id: Option<&str>, seq: u64, code: &str, detail: impl Into<String>) -> Envelope {
    Envelope::new(types::ERROR, session_id, seq, ErrorPayload { code: code.to_string(), detail: detail.into() })
}

impl SessionManager {
    pub fn new(config: ServiceConfig) -> SessionManager {
        SessionManager { config, sessions: Mutex::new(HashMap::new()), next_id: AtomicU64::new(1) }
    }

    pub fn open_sessions(&self) -> usize {
        self.sessions.lock().expect("session table lock").len()
    }

    fn lookup(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.lock().expect("session table lock").get(id).cloned()
    }

    fn remove(&self, id: &str) {
        self.sessions.lock().expect("session table lock").remove(id);
    }

    fn persist(&self, session: &Session) -> Result<(), HarnessError> {
        let Some(dir) = &self.config.log_dir else { return Ok(()) };
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let path = dir.join(format!("{}.jsonl", session.id));
        std::fs::write(&path, session.episode.log.to_jsonl()).map_err(|e| HarnessError::io(&path, e))
    }

    /// Handle one line from a client.
    pub fn handle_line(&self, line: &str) -> Reply {
        match serde_json::from_str::<Envelope>(line) {
            Ok(msg) => self.handle(&msg),
            Err(e) => Reply {
                messages: vec![error_envelope(None, 0, codes::PROTOCOL_VIOLATION, format!("malformed message: {e}"))],
                close_connection: true,
            },
        }
    }

    pub fn handle(&self, msg: &Envelope) -> Reply {
        match msg.kind.as_str() {
            types::CREATE_SESSION => self.create(msg),
            types::SUBMIT_RECOMMENDATIONS | types::END_SESSION => {
                let Some(id) = msg.session_id.as_deref() else {
                    return self.reject(None, "session_id is required");
                };
                let Some(cell) = self.lookup(id) else {
                    return self.reject(Some(id), format!("no open session {id}"));
                };
                let mut guard = match cell.lock() {
                    Ok(g) => g,
                    Err(_) => {
                        self.remove(id);
                        return Reply {
                            messages: vec![error_envelope(Some(id), 0, codes::ENGINE_ERROR, "session state was lost")],
                            close_connection: true,
                        };
                    }
                };
                self.continue_session(&mut guard, msg)
            }
            other => self.reject(msg.session_id.as_deref(), format!("unknown message type {other:?}")),
        }
    }

    fn reject(&self, session_id: Option<&str>, detail: impl Into<String>) -> Reply {
        Reply {
            messages: vec![error_envelope(session_id, 0, codes::PROTOCOL_VIOLATION, detail)],
            close_connection: true,
        }
    }

    fn create(&self, msg: &Envelope) -> Reply {
        let body: CreateSession = if msg.payload.is_null() {
            CreateSession::default()
        } else {
            match msg.payload_as() {
                Ok(b) => b,
                Err(e) => return self.reject(None, format!("bad create_session payload: {e}")),
            }
        };
        let seed = body.seed.unwrap_or(self.config.default_seed);
        let chef = match self.config.chef.make(seed) {
            Ok(c) => c,
            Err(e) => {
                return Reply { messages: vec![error_envelope(None, 0, codes::ENGINE_ERROR, e.to_string())], close_connection: true }
            }
        };
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let episode = Episode::start(self.config.layout.clone(), sample_scenario(seed), seed, self.config.rules);
        let mut session = Session {
            id: id.clone(),
            lifecycle: Lifecycle::Lobby,
            episode,
            chef,
            client_seq: msg.seq,
            server_seq: 0,
            last_reply: Vec::new(),
            round_tips: [0; 3],
            pending_turn: None,
        };
        let mut out = Vec::new();
        let created = SessionCreated {
            session_id: id.clone(),
            seed,
            layout: self.config.layout.to_text(),
            prep_budget: self.config.rules.prep_budget,
            chef_budget: self.config.rules.chef_budget,
        };
        session.send(&mut out, types::SESSION_CREATED, created);
        session.lifecycle = Lifecycle::InGame;
        if let Err(v) = session.chef_turn(&mut out) {
            let _ = self.persist(&session);
            session.send(&mut out, types::ERROR, ErrorPayload { code: v.code.into(), detail: v.detail });
            return Reply { messages: out, close_connection: true };
        }
        session.last_reply = out.clone();
        self.sessions.lock().expect("session table lock").insert(id, Arc::new(Mutex::new(session)));
        Reply { messages: out, close_connection: false }
    }

    fn continue_session(&self, session: &mut Session, msg: &Envelope) -> Reply {
        if msg.seq == session.client_seq {
            return Reply { messages: session.last_reply.clone(), close_connection: false };
        }
        if msg.seq < session.client_seq {
            let detail = format!("seq {} is not after {}", msg.seq, session.client_seq);
            return self.close_with(session, codes::PROTOCOL_VIOLATION, detail);
        }
        session.client_seq = msg.seq;
        let mut out = Vec::new();
        let result = match msg.kind.as_str() {
            types::SUBMIT_RECOMMENDATIONS => session.submit(msg, &mut out),
            _ => {
                session.send(&mut out, types::SESSION_CLOSED, serde_json::json!({ "lifecycle": format!("{:?}", session.lifecycle) }));
                self.remove(&session.id);
                return Reply { messages: out, close_connection: false };
            }
        };
        match result {
            Ok(()) => {
                if session.lifecycle == Lifecycle::Finished {
                    if let Err(e) = self.persist(session) {
                        session.send(&mut out, types::ERROR, ErrorPayload { code: codes::ENGINE_ERROR.into(), detail: e.to_string() });
                    }
                }
                session.last_reply = out.clone();
                Reply { messages: out, close_connection: false }
            }
            Err(v) if !v.fatal => {
                session.send(&mut out, types::ERROR, ErrorPayload { code: v.code.into(), detail: v.detail });
                session.last_reply = out.clone();
                Reply { messages: out, close_connection: false }
            }
            Err(v) => {
                let mut reply = self.close_with(session, v.code, v.detail);
                out.append(&mut reply.messages);
                Reply { messages: out, close_connection: true }
            }
        }
    }

    fn close_with(&self, session: &mut Session, code: &str, detail: String) -> Reply {
        let mut out = Vec::new();
        session.send(&mut out, types::ERROR, ErrorPayload { code: code.into(), detail });
        if code == codes::ENGINE_ERROR {
            let _ = self.persist(session);
        }
        self.remove(&session.id);
        Reply { messages: out, close_connection: true }
    }
}
