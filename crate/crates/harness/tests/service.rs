//! The session service over TCP with a scripted waiter client.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::Path;
use std::sync::Arc;
use std::thread;

use hybs_core::agents::{ScriptedWaiter, StagingVariant};
use hybs_core::{load_layout, replay, EpisodeLog, RuleConfig, WaiterObservation, DEFAULT_LAYOUT};
use hybs_harness::protocol::{codes, ChefTurnResult, Envelope, GameOver, StateSnapshot};
use hybs_harness::runner::log_file;
use hybs_harness::{run_batch, write_batch, ChefFactory, ChefSpec, ExperimentConfig, PlanningCaps, ServiceConfig, SessionManager};
use serde_json::{json, Value};

fn start(spec: ChefSpec, log_dir: &Path) -> SocketAddr {
    let manager = SessionManager::new(ServiceConfig {
        layout: Arc::new(load_layout(DEFAULT_LAYOUT).unwrap()),
        chef: ChefFactory::new(&spec, PlanningCaps::default()).unwrap(),
        rules: RuleConfig::default(),
        default_seed: 0,
        log_dir: Some(log_dir.into()),
    });
    let listener = hybs_harness::server::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || hybs_harness::server::serve(listener, Arc::new(manager)));
    addr
}

struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    seq: u64,
    received: Vec<Envelope>,
}

impl Client {
    fn connect(addr: SocketAddr) -> Client {
        let s = TcpStream::connect(addr).unwrap();
        Client { reader: BufReader::new(s.try_clone().unwrap()), writer: s, seq: 0, received: Vec::new() }
    }

    fn send_raw(&mut self, line: &str) {
        self.writer.write_all(line.as_bytes()).unwrap();
        self.writer.write_all(b"\n").unwrap();
    }

    fn send(&mut self, kind: &str, session: Option<&str>, payload: Value) {
        self.seq += 1;
        let msg = json!({"type": kind, "session_id": session, "seq": self.seq, "payload": payload});
        self.send_raw(&msg.to_string());
    }

    /// Read until a message of one of `until` arrives.
    fn read_until(&mut self, until: &[&str]) -> Vec<Envelope> {
        let mut got = Vec::new();
        loop {
            let mut line = String::new();
            assert!(self.reader.read_line(&mut line).unwrap() > 0, "connection closed after {got:?}");
            let e: Envelope = serde_json::from_str(line.trim_end()).unwrap();
            got.push(e.clone());
            self.received.push(e.clone());
            if until.contains(&e.kind.as_str()) {
                return got;
            }
        }
    }

    fn at_eof(&mut self) -> bool {
        let mut line = String::new();
        self.reader.read_line(&mut line).map(|n| n == 0).unwrap_or(true)
    }
}

fn greedy_entries(obs: &WaiterObservation) -> Value {
    let rec = hybs_core::agents::scripted_waiter(
        obs,
        hybs_core::agents::ScriptedWaiterKind::Greedy,
        Default::default(),
        0,
    );
    json!({ "entries": rec.entries })
}

struct Played {
    session: String,
    tips_total: u32,
}

/// One full game as a waiter following the greedy script.
fn play_session(client: &mut Client, seed: u64) -> Played {
    client.send("create_session", None, json!({ "seed": seed, "client": "scripted" }));
    let first = client.read_until(&["state_snapshot"]);
    let kinds: Vec<&str> = first.iter().map(|e| e.kind.as_str()).collect();
    assert_eq!(kinds, ["session_created", "chef_turn_result", "state_snapshot"]);
    let session = first[0].session_id.clone().unwrap();
    let mut snap: StateSnapshot = first[2].payload_as().unwrap();
    let mut tips = 0;
    loop {
        client.send("submit_recommendations", Some(&session), greedy_entries(&snap.observation));
        let got = client.read_until(&["state_snapshot", "game_over", "error"]);
        assert_eq!(got[0].kind, "ack");
        let turn: ChefTurnResult = got[1].payload_as().unwrap();
        tips += turn.round_tips;
        assert_eq!(turn.totals.tips_total, tips);
        assert_eq!(turn.frames.last().map_or(turn.initial.tips_total, |f| f.state.tips_total), tips);
        match got[2].kind.as_str() {
            "state_snapshot" => {
                snap = got[2].payload_as().unwrap();
                assert_eq!(snap.tips_total, tips);
                assert_eq!(snap.round_tips, turn.totals.round_tips);
            }
            "game_over" => {
                let over: GameOver = got[2].payload_as().unwrap();
                assert_eq!(over.tips_total, tips);
                assert!((0.0..=1.0).contains(&over.normalized_tip));
                return Played { session, tips_total: tips };
            }
            other => panic!("unexpected {other}: {:?}", got[2]),
        }
    }
}

fn read_log(path: &Path) -> EpisodeLog {
    EpisodeLog::from_jsonl(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn scripted_client_completes_a_game() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(ChefSpec::Heuristic(StagingVariant::TomatoStaging), dir.path());
    let mut client = Client::connect(addr);
    let played = play_session(&mut client, 11);

    let server_seqs: Vec<u64> = client.received.iter().map(|e| e.seq).collect();
    assert!(server_seqs.windows(2).all(|w| w[0] < w[1]));
    let turns: Vec<ChefTurnResult> =
        client.received.iter().filter(|e| e.kind == "chef_turn_result").map(|e| e.payload_as().unwrap()).collect();
    assert_eq!(turns.iter().map(|t| t.round).collect::<Vec<_>>(), [1, 3, 5, 7]);
    assert!(turns[1..].iter().all(|t| t.frames.len() <= 135) && turns[0].frames.len() <= 15);

    // The waiter never learns the potato supply, and frames carry no profiles.
    for e in &client.received {
        let text = e.payload.to_string();
        assert!(!text.contains("potato_inventory") && !text.contains("potatoes"), "{}", e.kind);
        if e.kind == "chef_turn_result" {
            assert!(!text.contains("profile"));
        }
    }

    let log = read_log(&dir.path().join(format!("{}.jsonl", played.session)));
    assert_eq!(replay(&log).unwrap().state.tips_total, played.tips_total);

    // The service plays exactly the game a greedy batch plays on that seed.
    let layout = Arc::new(load_layout(DEFAULT_LAYOUT).unwrap());
    let mut chef = ChefFactory::new(&ChefSpec::Heuristic(StagingVariant::TomatoStaging), PlanningCaps::default())
        .unwrap()
        .make(11)
        .unwrap();
    let offline = hybs_harness::run_episode(
        layout,
        hybs_core::sample_scenario(11),
        11,
        RuleConfig::default(),
        chef.as_mut(),
        &mut ScriptedWaiter::greedy(),
    )
    .unwrap();
    assert_eq!(offline.log, log);
}

#[test]
fn concurrent_sessions_match_serial_play() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(ChefSpec::Heuristic(StagingVariant::OnionStaging), dir.path());
    let seeds = [21u64, 22, 23];

    let serial: BTreeMap<u64, EpisodeLog> = seeds
        .iter()
        .map(|&s| {
            let mut c = Client::connect(addr);
            let p = play_session(&mut c, s);
            (s, read_log(&dir.path().join(format!("{}.jsonl", p.session))))
        })
        .collect();

    let handles: Vec<_> = seeds
        .iter()
        .map(|&s| {
            thread::spawn(move || {
                let mut c = Client::connect(addr);
                (s, play_session(&mut c, s).session)
            })
        })
        .collect();
    for h in handles {
        let (seed, session) = h.join().unwrap();
        assert_eq!(read_log(&dir.path().join(format!("{session}.jsonl"))), serial[&seed]);
    }

    // Two sessions interleaved on one connection.
    let mut c = Client::connect(addr);
    c.send("create_session", None, json!({"seed": 21}));
    let a = c.read_until(&["state_snapshot"]);
    c.send("create_session", None, json!({"seed": 23}));
    let b = c.read_until(&["state_snapshot"]);
    let ids = [a[0].session_id.clone().unwrap(), b[0].session_id.clone().unwrap()];
    let mut snaps: Vec<StateSnapshot> = vec![a[2].payload_as().unwrap(), b[2].payload_as().unwrap()];
    for _ in 0..3 {
        for i in 0..2 {
            c.send("submit_recommendations", Some(&ids[i]), greedy_entries(&snaps[i].observation));
            let got = c.read_until(&["state_snapshot", "game_over"]);
            if got[2].kind == "state_snapshot" {
                snaps[i] = got[2].payload_as().unwrap();
            }
        }
    }
    for (id, seed) in ids.iter().zip([21, 23]) {
        assert_eq!(read_log(&dir.path().join(format!("{id}.jsonl"))), serial[&seed]);
    }
}

#[test]
fn violations_close_and_engine_errors_stay_contained() {
    let dir = tempfile::tempdir().unwrap();
    let replays = dir.path().join("replays");
    let cfg = ExperimentConfig { seeds: Some(vec![1, 2]), out: replays.clone(), ..Default::default() };
    let batch = run_batch(&cfg.validate().unwrap(), RuleConfig::default()).unwrap();
    write_batch(&batch, &replays).unwrap();
    let logs = replays.join("logs");
    // Seed 2's chef tries to act far past its round budget.
    let mut broken = read_log(&log_file(&logs, 2));
    let at = broken.records.iter().position(|r| r.event_kind == "chef_action" && r.round == 3).unwrap();
    let mut wait = broken.records[at].clone();
    wait.payload = json!({"action": "Wait"});
    for _ in 0..136 {
        broken.records.insert(at, wait.clone());
    }
    std::fs::write(log_file(&logs, 2), broken.to_jsonl()).unwrap();

    let addr = start(ChefSpec::Replay { dir: logs.clone() }, &dir.path().join("sessions"));

    let mut bad = Client::connect(addr);
    bad.send("create_session", None, json!({"seed": 2}));
    let created = bad.read_until(&["state_snapshot"]);
    let bad_id = created[0].session_id.clone().unwrap();
    let mut good = Client::connect(addr);
    good.send("create_session", None, json!({"seed": 1}));
    let good_first = good.read_until(&["state_snapshot"]);
    let good_id = good_first[0].session_id.clone().unwrap();

    let snap: StateSnapshot = created[2].payload_as().unwrap();
    bad.send("submit_recommendations", Some(&bad_id), greedy_entries(&snap.observation));
    let got = bad.read_until(&["error"]);
    assert_eq!(got[0].kind, "ack");
    assert_eq!(got.last().unwrap().payload["code"], codes::ENGINE_ERROR);
    assert!(bad.at_eof());

    let mut snap: StateSnapshot = good_first[2].payload_as().unwrap();
    for _ in 0..3 {
        good.send("submit_recommendations", Some(&good_id), greedy_entries(&snap.observation));
        let got = good.read_until(&["state_snapshot", "game_over"]);
        if let Some(s) = got.iter().find(|e| e.kind == "state_snapshot") {
            snap = s.payload_as().unwrap();
        }
    }
    assert_eq!(good.received.last().unwrap().kind, "game_over");
    let over: GameOver = good.received.last().unwrap().payload_as().unwrap();
    assert_eq!(over.tips_total, batch.games[0].summary.tips_total);

    let mut junk = Client::connect(addr);
    junk.send_raw("this is not json");
    let got = junk.read_until(&["error"]);
    assert_eq!(got[0].payload["code"], codes::PROTOCOL_VIOLATION);
    assert!(junk.at_eof());

    let mut invalid = Client::connect(addr);
    invalid.send("create_session", None, json!({"seed": 1}));
    let first = invalid.read_until(&["state_snapshot"]);
    let id = first[0].session_id.clone().unwrap();
    invalid.send("submit_recommendations", Some(&id), json!({"entries": [{"customer_id": 0, "dish": "O"}, {"customer_id": 0, "dish": "P"}]}));
    let got = invalid.read_until(&["error"]);
    assert_eq!(got[0].payload["code"], codes::INVALID_RECOMMENDATION);
    invalid.send("submit_recommendations", Some(&id), json!({"entries": []}));
    let got = invalid.read_until(&["state_snapshot"]);
    assert_eq!(got[0].kind, "ack");
    invalid.send("end_session", Some(&id), Value::Null);
    assert_eq!(invalid.read_until(&["session_closed"]).len(), 1);
}
