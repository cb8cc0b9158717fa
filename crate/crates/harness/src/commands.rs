//! The work behind each `hybs` subcommand, free of argument parsing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hybs_analysis::{
    anova_table, cluster_report, comparison_table, encode_trajectories, extract_records, metric_report, normality_table,
    ClusterReport, GameTrajectory, MetricReport, PrincipalEncoder,
};
use hybs_core::agents::{balance_dataset, label_goals, train_apprentice, ApprenticeModel, Sample, TrainConfig};
use hybs_core::{load_layout, replay, ChefAction, EpisodeLog, RuleConfig, WorldEvent};
use serde::Serialize;

use crate::config::{ChefSpec, Experiment};
use crate::frames::{turns_from_log, RenderState};
use crate::metrics::paired_table;
use crate::runner::{run_batch, write_batch, BatchResult, MetricsFile, METRICS_JSON};
use crate::HarnessError;

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn read_log(path: &Path) -> Result<EpisodeLog, HarnessError> {
    EpisodeLog::from_jsonl(&read(path)?).map_err(|e| HarnessError::MalformedLog(format!("{}: {e}", path.display())))
}

/// Run a batch into the experiment's output directory. With a second chef,
/// that condition goes to `compare/` and a paired table to `paired.txt`.
pub fn simulate(exp: &Experiment, compare: Option<&ChefSpec>) -> Result<Vec<BatchResult>, HarnessError> {
    let out = &exp.config.out;
    let first = run_batch(exp, RuleConfig::default())?;
    write_batch(&first, out)?;
    let mut batches = vec![first];
    if let Some(spec) = compare {
        let other = Experiment { chef: spec.clone(), ..exp.clone() };
        let second = run_batch(&other, RuleConfig::default())?;
        write_batch(&second, &out.join("compare"))?;
        let table = paired_table(
            (&batches[0].condition, &batches[0].summaries()),
            (&second.condition, &second.summaries()),
        );
        write(&out.join("paired.txt"), &table)?;
        batches.push(second);
    }
    Ok(batches)
}

/// Logs grouped by demonstrator. Each subdirectory of `dir` is one user;
/// logs directly inside `dir` belong to a user named after `dir`.
pub fn load_user_logs(dir: &Path) -> Result<BTreeMap<String, Vec<(String, EpisodeLog)>>, HarnessError> {
    let mut out: BTreeMap<String, Vec<(String, EpisodeLog)>> = BTreeMap::new();
    let own_name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "user".into());
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| HarnessError::io(dir, e)))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            let user = path.file_name().unwrap().to_string_lossy().into_owned();
            let mut files: Vec<PathBuf> = std::fs::read_dir(&path)
                .map_err(|e| HarnessError::io(&path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            files.sort();
            for f in files {
                let game = format!("{user}/{}", f.file_stem().unwrap().to_string_lossy());
                out.entry(user.clone()).or_default().push((game, read_log(&f)?));
            }
        } else if path.extension().is_some_and(|x| x == "jsonl") {
            let game = format!("{own_name}/{}", path.file_stem().unwrap().to_string_lossy());
            out.entry(own_name.clone()).or_default().push((game, read_log(&path)?));
        }
    }
    out.retain(|_, games| !games.is_empty());
    if out.is_empty() {
        return Err(HarnessError::Config(format!("no .jsonl logs under {}", dir.display())));
    }
    Ok(out)
}

fn trajectories(logs: &BTreeMap<String, Vec<(String, EpisodeLog)>>) -> Result<Vec<GameTrajectory>, HarnessError> {
    let mut games = Vec::new();
    for (user, list) in logs {
        for (game_id, log) in list {
            let records = extract_records(log).map_err(|e| HarnessError::MalformedLog(format!("{game_id}: {e}")))?;
            games.push(GameTrajectory { game_id: game_id.clone(), user_id: user.clone(), records });
        }
    }
    Ok(games)
}

/// Candidate cluster counts for `n` games: 2 through 6, below `n`.
pub fn default_ks(n: usize) -> Vec<usize> {
    (2..=6).filter(|&k| k < n).collect()
}

pub fn cluster_logs(dir: &Path, ks: &[usize], seed: u64) -> Result<ClusterReport, HarnessError> {
    let games = trajectories(&load_user_logs(dir)?)?;
    let embeddings = encode_trajectories(&games, &PrincipalEncoder { seed, ..PrincipalEncoder::default() })?;
    Ok(cluster_report(embeddings, ks, seed)?)
}

/// Each user's cluster: the one holding most of their games, lower index on
/// ties.
pub fn user_clusters(report: &ClusterReport) -> BTreeMap<String, usize> {
    report
        .matching
        .users
        .iter()
        .enumerate()
        .map(|(u, name)| {
            let (c, _) = report
                .matching
                .counts
                .iter()
                .enumerate()
                .fold((0, 0), |best, (c, row)| if row[u] > best.1 { (c, row[u]) } else { best });
            (name.clone(), c)
        })
        .collect()
}

pub fn write_cluster_outputs(report: &ClusterReport, out: &Path) -> Result<(), HarnessError> {
    write(&out.join("clusters.txt"), &report.to_text())?;
    write(&out.join("clusters.json"), &(serde_json::to_string_pretty(report).expect("report serializes") + "\n"))?;
    let users = serde_json::to_string_pretty(&user_clusters(report)).expect("map serializes") + "\n";
    write(&out.join("user_clusters.json"), &users)
}

/// Train an apprentice on the logs under `dir`. Without a user-to-cluster
/// map, users are clustered from their games first.
pub fn train(
    dir: &Path,
    clusters: Option<&Path>,
    cfg: &TrainConfig,
    artifact: &Path,
) -> Result<ApprenticeModel, HarnessError> {
    let logs = load_user_logs(dir)?;
    let clusters: BTreeMap<String, usize> = match clusters {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?,
        None => {
            let n: usize = logs.values().map(Vec::len).sum();
            let ks = default_ks(n);
            if ks.is_empty() {
                logs.keys().map(|u| (u.clone(), 0)).collect()
            } else {
                let games = trajectories(&logs)?;
                let embeddings = encode_trajectories(&games, &PrincipalEncoder::default())?;
                user_clusters(&cluster_report(embeddings, &ks, cfg.seed)?)
            }
        }
    };
    let mut per_user: BTreeMap<String, Vec<Vec<Sample>>> = BTreeMap::new();
    for (user, list) in &logs {
        for (game_id, log) in list {
            let samples = label_goals(log).map_err(|e| HarnessError::MalformedLog(format!("{game_id}: {e}")))?;
            per_user.entry(user.clone()).or_default().push(samples);
        }
    }
    let agent = |e: hybs_core::agents::AgentError| HarnessError::Config(e.to_string());
    let data = balance_dataset(&per_user, &clusters, cfg.seed).map_err(agent)?;
    let model = train_apprentice(&data, cfg).map_err(agent)?;
    if let Some(parent) = artifact.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    model.save(artifact).map_err(agent)?;
    Ok(model)
}

/// A condition for the statistics battery: a name and a metrics file.
pub fn parse_condition(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) => (name.to_string(), path.into()),
        None => {
            let p = PathBuf::from(arg);
            let name = p
                .parent()
                .and_then(|d| d.file_name())
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (name, p)
        }
    }
}

fn metrics_file(path: &Path) -> Result<MetricsFile, HarnessError> {
    let path = if path.is_dir() { path.join(METRICS_JSON) } else { path.to_path_buf() };
    serde_json::from_str(&read(&path)?).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// Normality, variance, ANOVA and Tukey-Kramer for raw and normalized tips.
pub fn stats(conditions: &[(String, PathBuf)], alpha: f64) -> Result<(Vec<MetricReport>, String), HarnessError> {
    let files: Vec<(String, MetricsFile)> =
        conditions.iter().map(|(n, p)| Ok((n.clone(), metrics_file(p)?))).collect::<Result<_, HarnessError>>()?;
    let metric = |f: fn(&crate::MetricsSummary) -> f64| -> Vec<(String, Vec<f64>)> {
        files.iter().map(|(n, m)| (n.clone(), m.games.iter().map(f).collect())).collect()
    };
    let reports = vec![
        metric_report("tips", &metric(|s| s.tips_total as f64), alpha)?,
        metric_report("normalized tip", &metric(|s| s.normalized_tip), alpha)?,
    ];
    let mut text = String::new();
    writeln!(text, "Normality and equal variance\n{}", normality_table(&reports)).unwrap();
    writeln!(text, "One-way ANOVA\n{}", anova_table(&reports)).unwrap();
    writeln!(text, "Tukey-Kramer (alpha = {alpha})\n{}", comparison_table(&reports)).unwrap();
    Ok((reports, text))
}

/// A short description of a layout file, after checking that it loads.
pub fn validate_layout(path: &Path) -> Result<String, HarnessError> {
    let map = load_layout(&read(path)?).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    for (_, kind) in map.tiles() {
        *counts.entry(kind.glyph()).or_default() += 1;
    }
    let mut s = format!("{}: {}x{} kitchen, {} pots\n", path.display(), map.width(), map.height(), map.pots().len());
    for (glyph, n) in counts {
        writeln!(s, "  {glyph:?} x{n}").unwrap();
    }
    Ok(s)
}

#[derive(Debug, Serialize)]
struct DumpLine<'a> {
    round: u8,
    step: u32,
    action: Option<ChefAction>,
    events: &'a [WorldEvent],
    state: &'a RenderState,
}

/// One JSON line per render state of every chef turn in a log, each turn
/// starting with its state before the first action.
pub fn replay_dump(log: &EpisodeLog) -> Result<(String, u32), HarnessError> {
    let ep = replay(log).map_err(|e| HarnessError::MalformedLog(e.to_string()))?;
    let turns = turns_from_log(log)?;
    let mut out = String::new();
    for t in &turns {
        let first = DumpLine { round: t.round, step: 0, action: None, events: &[], state: &t.initial };
        out.push_str(&serde_json::to_string(&first).expect("frames serialize"));
        out.push('\n');
        for f in &t.frames {
            let line = DumpLine { round: t.round, step: f.step, action: Some(f.action), events: &f.events, state: &f.state };
            out.push_str(&serde_json::to_string(&line).expect("frames serialize"));
            out.push('\n');
        }
    }
    Ok((out, ep.state.tips_total))
}
