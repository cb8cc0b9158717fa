//! The `hybs` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use hybs_analysis::one_way_anova;
use hybs_core::{replay, EpisodeLog};
use hybs_harness::runner::{MetricsFile, METRICS_JSON, METRICS_TEXT};
use hybs_harness::{summarize, ChefSpec, ExperimentConfig};

fn hybs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybs")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = hybs(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn metrics(dir: &Path) -> MetricsFile {
    serde_json::from_str(&std::fs::read_to_string(dir.join(METRICS_JSON)).unwrap()).unwrap()
}

fn logs(dir: &Path) -> Vec<(String, EpisodeLog)> {
    let mut files: Vec<_> = std::fs::read_dir(dir.join("logs")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let log = EpisodeLog::from_jsonl(&std::fs::read_to_string(&p).unwrap()).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), log)
        })
        .collect()
}

#[test]
fn exit_codes() {
    let layout = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/layouts/default.map");
    assert!(ok(&["validate-layout", layout]).contains("pots"));
    assert_eq!(hybs(&["bake"]).status.code(), Some(2));
    assert_eq!(hybs(&["simulate", "--n", "-"]).status.code(), Some(2));
    assert_eq!(hybs(&["validate-layout", "/nonexistent.map"]).status.code(), Some(1));
    let bad = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(bad.path(), "#####\n#   #\n#####\n").unwrap();
    assert_eq!(hybs(&["validate-layout", bad.path().to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn config_file_and_paired_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        seeds: Some(vec![3, 30]),
        chef: "heuristic:onion".into(),
        out: dir.path().join("run"),
        ..Default::default()
    };
    let cfg_path = dir.path().join("exp.toml");
    std::fs::write(&cfg_path, cfg.to_toml().unwrap()).unwrap();
    let stdout = ok(&["simulate", "--config", cfg_path.to_str().unwrap(), "--compare", "heuristic:tomato"]);
    assert!(stdout.contains("heuristic:onion/greedy") && stdout.contains("heuristic:tomato/greedy"));

    let run = dir.path().join("run");
    let onion = metrics(&run);
    let tomato = metrics(&run.join("compare"));
    assert_eq!(onion.games.iter().map(|g| g.seed).collect::<Vec<_>>(), [3, 30]);
    assert_eq!(tomato.games.iter().map(|g| g.seed).collect::<Vec<_>>(), [3, 30]);
    let paired = std::fs::read_to_string(run.join("paired.txt")).unwrap();
    assert_eq!(paired.lines().count(), 5);

    // Log completeness: every summary is recomputable from its log alone.
    for (dir, m) in [(run.clone(), &onion), (run.join("compare"), &tomato)] {
        for ((stem, log), s) in logs(&dir).iter().zip(&m.games) {
            assert_eq!(&summarize(stem, log).unwrap(), s);
            assert_eq!(replay(log).unwrap().state.tips_total, s.tips_total);
        }
    }

    // Batch metrics go straight into the analysis tests.
    let groups: Vec<Vec<f64>> =
        [&onion, &tomato].iter().map(|m| m.games.iter().map(|g| g.normalized_tip).collect()).collect();
    let anova = one_way_anova(&groups).unwrap();
    assert!(anova.p_value.is_nan() || (0.0..=1.0).contains(&anova.p_value));

    let text = std::fs::read_to_string(run.join(METRICS_TEXT)).unwrap();
    assert!(text.contains("compliance") && text.lines().count() > 3);
}

#[test]
fn replay_dumps_every_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["simulate", "--seed", "12", "--n", "1", "--waiter", "random", "--out", out]);
    let log_path = dir.path().join("logs/game_12.jsonl");
    let log = EpisodeLog::from_jsonl(&std::fs::read_to_string(&log_path).unwrap()).unwrap();
    let dump = ok(&["replay", log_path.to_str().unwrap()]);
    let lines: Vec<serde_json::Value> = dump.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), log.chef_actions().unwrap().len() + 4);
    assert_eq!(lines.iter().filter(|l| l["step"] == 0).count(), 4);
    assert!(!dump.contains("potato_inventory") && !dump.contains("profile"));

    let frames_dir = dir.path().join("frames");
    let msg = ok(&["replay", log_path.to_str().unwrap(), "--out", frames_dir.to_str().unwrap()]);
    assert!(msg.contains(&format!("tips_total {}", log.final_tips().unwrap())));
    assert_eq!(std::fs::read_to_string(frames_dir.join("frames.jsonl")).unwrap(), dump);

    let replayed = dir.path().join("again");
    let spec = ChefSpec::Replay { dir: dir.path().join("logs") }.to_string();
    ok(&["simulate", "--seed", "12", "--n", "1", "--waiter", "random", "--chef", &spec, "--out", replayed.to_str().unwrap()]);
    assert_eq!(metrics(&replayed).games[0].tips_total, log.final_tips().unwrap());
}

#[test]
fn cluster_train_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let demos = dir.path().join("demos");
    for (user, chef, seeds) in [("tomato", "heuristic:tomato", "40,41,42"), ("onion", "heuristic:onion", "40,41,42")] {
        let out = dir.path().join(user);
        ok(&["simulate", "--chef", chef, "--seeds", seeds, "--out", out.to_str().unwrap()]);
        std::fs::rename(out.join("logs"), demos.join(user)).unwrap_or_else(|_| {
            std::fs::create_dir_all(&demos).unwrap();
            std::fs::rename(out.join("logs"), demos.join(user)).unwrap();
        });
    }

    let clusters = dir.path().join("clusters");
    let report = ok(&["cluster", "--logs", demos.to_str().unwrap(), "--k", "2", "--out", clusters.to_str().unwrap()]);
    assert!(report.contains("silhouette"));
    let users: std::collections::BTreeMap<String, usize> =
        serde_json::from_str(&std::fs::read_to_string(clusters.join("user_clusters.json")).unwrap()).unwrap();
    let full: hybs_analysis::ClusterReport =
        serde_json::from_str(&std::fs::read_to_string(clusters.join("clusters.json")).unwrap()).unwrap();
    assert_eq!(full.embeddings.len(), 6);
    for (u, name) in full.matching.users.iter().enumerate() {
        let c = users[name];
        assert!(full.matching.counts.iter().all(|row| row[u] <= full.matching.counts[c][u]));
    }

    let model_dir = dir.path().join("model");
    let msg = ok(&[
        "train-apprentice",
        "--logs",
        demos.to_str().unwrap(),
        "--clusters",
        clusters.join("user_clusters.json").to_str().unwrap(),
        "--epochs",
        "3",
        "--seed",
        "5",
        "--out",
        model_dir.to_str().unwrap(),
    ]);
    assert!(msg.contains("trained on 2 users"));
    let artifact = model_dir.join("apprentice.json");
    let model = hybs_core::agents::ApprenticeModel::load(&artifact).unwrap();
    assert_eq!(model.user_clusters, users);

    let stats_dir = dir.path().join("stats");
    let text = ok(&[
        "stats",
        &format!("TOM={}", dir.path().join("tomato").display()),
        &format!("ONI={}", dir.path().join("onion").join(METRICS_JSON).display()),
        "--out",
        stats_dir.to_str().unwrap(),
    ]);
    assert!(text.contains("ONI - TOM") && text.contains("F value"));
    assert!(stats_dir.join("stats.json").is_file());
}
