//! Per-game metrics, recomputed from an episode log and nothing else.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hybs_core::log::kinds;
use hybs_core::{normalize_tip, CustomerId, DishType, EpisodeLog, RecommendationEntry, ScenarioConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub game_id: String,
    pub seed: u64,
    pub tips_total: u32,
    pub normalized_tip: f64,
    /// Tips earned in each of the three chef rounds.
    pub round_tips: [u32; 3],
    /// Serves of PP, P, O and TTTT.
    pub serves_by_dish: [u32; 4],
    pub recommended: u32,
    pub fulfilled: u32,
    pub compliance: f64,
}

fn malformed(why: impl Into<String>) -> HarnessError {
    HarnessError::MalformedLog(why.into())
}

fn field<T: for<'de> Deserialize<'de>>(payload: &Value, key: &str) -> Result<T, HarnessError> {
    let v = payload.get(key).ok_or_else(|| malformed(format!("payload missing {key:?}")))?;
    serde_json::from_value(v.clone()).map_err(|e| malformed(format!("bad {key:?}: {e}")))
}

struct Serve {
    customer: CustomerId,
    dish: DishType,
    tip: u32,
}

fn serves(log: &EpisodeLog) -> Result<Vec<Serve>, HarnessError> {
    log.iter()
        .filter(|r| r.event_kind == kinds::SERVED)
        .map(|r| {
            Ok(Serve {
                customer: field(&r.payload, "customer")?,
                dish: field(&r.payload, "dish")?,
                tip: field(&r.payload, "tip")?,
            })
        })
        .collect()
}

/// The recommended dish for every customer a recommendation named.
fn recommended_dishes(log: &EpisodeLog) -> Result<BTreeMap<CustomerId, DishType>, HarnessError> {
    let mut out = BTreeMap::new();
    for r in log.iter().filter(|r| r.event_kind == kinds::RECOMMENDATION) {
        let entries: Vec<RecommendationEntry> = field(&r.payload, "entries")?;
        for e in entries {
            out.insert(e.customer_id, e.dish);
        }
    }
    Ok(out)
}

/// Fraction of recommended (customer, dish) pairs that were served as
/// recommended; 1.0 when nothing was recommended.
pub fn compliance(log: &EpisodeLog) -> Result<f64, HarnessError> {
    let (fulfilled, recommended) = compliance_counts(log)?;
    Ok(if recommended == 0 { 1.0 } else { fulfilled as f64 / recommended as f64 })
}

fn compliance_counts(log: &EpisodeLog) -> Result<(u32, u32), HarnessError> {
    if !log.is_complete() {
        return Err(malformed("log does not end with game_over"));
    }
    let recs = recommended_dishes(log)?;
    let fulfilled = serves(log)?.iter().filter(|s| recs.get(&s.customer) == Some(&s.dish)).count();
    Ok((fulfilled as u32, recs.len() as u32))
}

/// Summary of a completed game.
pub fn summarize(game_id: &str, log: &EpisodeLog) -> Result<MetricsSummary, HarnessError> {
    let start = log
        .records
        .first()
        .filter(|r| r.event_kind == kinds::GAME_STARTED)
        .ok_or_else(|| malformed("log must start with game_started"))?;
    let seed: u64 = field(&start.payload, "seed")?;
    let scenario: ScenarioConfig = field(&start.payload, "scenario")?;
    let tips_total = log.final_tips().ok_or_else(|| malformed("log has no game_over"))?;
    let (fulfilled, recommended) = compliance_counts(log)?;

    let mut round_tips = [0; 3];
    let mut serves_by_dish = [0; 4];
    for s in serves(log)? {
        let r = s.customer.chef_round() as usize - 1;
        *round_tips.get_mut(r).ok_or_else(|| malformed(format!("customer {} out of range", s.customer.0)))? += s.tip;
        serves_by_dish[s.dish.index()] += 1;
    }
    if round_tips.iter().sum::<u32>() != tips_total {
        return Err(malformed("served tips do not add up to tips_total"));
    }
    Ok(MetricsSummary {
        game_id: game_id.to_string(),
        seed,
        tips_total,
        normalized_tip: normalize_tip(tips_total, &scenario).map_err(|e| malformed(e.to_string()))?,
        round_tips,
        serves_by_dish,
        recommended,
        fulfilled,
        compliance: if recommended == 0 { 1.0 } else { fulfilled as f64 / recommended as f64 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<MeanStd> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(MeanStd { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub condition: String,
    pub games: usize,
    pub failures: usize,
    pub tips_total: MeanStd,
    pub normalized_tip: MeanStd,
    pub compliance: MeanStd,
    pub serves_by_dish: [u32; 4],
}

pub fn aggregate(condition: &str, summaries: &[MetricsSummary], failures: usize) -> Option<Aggregate> {
    Some(Aggregate {
        condition: condition.to_string(),
        games: summaries.len(),
        failures,
        tips_total: MeanStd::of(summaries.iter().map(|s| s.tips_total as f64))?,
        normalized_tip: MeanStd::of(summaries.iter().map(|s| s.normalized_tip))?,
        compliance: MeanStd::of(summaries.iter().map(|s| s.compliance))?,
        serves_by_dish: summaries.iter().fold([0; 4], |mut acc, s| {
            for (a, n) in acc.iter_mut().zip(s.serves_by_dish) {
                *a += n;
            }
            acc
        }),
    })
}

/// Aligned-column text of per-game summaries followed by the aggregate.
pub fn summary_table(summaries: &[MetricsSummary], agg: Option<&Aggregate>) -> String {
    let mut out = String::new();
    writeln!(out, "{:<24} {:>6} {:>6} {:>9} {:>5} {:>5} {:>5} {:>3} {:>3} {:>3} {:>4} {:>10}", "game", "seed", "tips", "norm", "r1", "r2", "r3", "PP", "P", "O", "TTTT", "compliance").unwrap();
    for s in summaries {
        writeln!(
            out,
            "{:<24} {:>6} {:>6} {:>9.4} {:>5} {:>5} {:>5} {:>3} {:>3} {:>3} {:>4} {:>10.4}",
            s.game_id,
            s.seed,
            s.tips_total,
            s.normalized_tip,
            s.round_tips[0],
            s.round_tips[1],
            s.round_tips[2],
            s.serves_by_dish[0],
            s.serves_by_dish[1],
            s.serves_by_dish[2],
            s.serves_by_dish[3],
            s.compliance
        )
        .unwrap();
    }
    if let Some(a) = agg {
        writeln!(out).unwrap();
        writeln!(out, "condition   {}", a.condition).unwrap();
        writeln!(out, "games       {} ({} failed)", a.games, a.failures).unwrap();
        writeln!(out, "tips        {:.4} ± {:.4}", a.tips_total.mean, a.tips_total.std).unwrap();
        writeln!(out, "normalized  {:.4} ± {:.4}", a.normalized_tip.mean, a.normalized_tip.std).unwrap();
        writeln!(out, "compliance  {:.4} ± {:.4}", a.compliance.mean, a.compliance.std).unwrap();
    }
    out
}

/// Side-by-side tips of two conditions on the scenario seeds both completed.
pub fn paired_table(a: (&str, &[MetricsSummary]), b: (&str, &[MetricsSummary])) -> String {
    let by_seed: BTreeMap<u64, &MetricsSummary> = b.1.iter().map(|s| (s.seed, s)).collect();
    let mut out = String::new();
    writeln!(out, "{:>6} {:>12} {:>12} {:>8}", "seed", a.0, b.0, "diff").unwrap();
    let mut diffs = Vec::new();
    for sa in a.1 {
        if let Some(sb) = by_seed.get(&sa.seed) {
            let d = sb.tips_total as i64 - sa.tips_total as i64;
            diffs.push(d as f64);
            writeln!(out, "{:>6} {:>12} {:>12} {:>8}", sa.seed, sa.tips_total, sb.tips_total, d).unwrap();
        }
    }
    if let Some(m) = MeanStd::of(diffs) {
        writeln!(out, "{:>6} {:>12} {:>12} {:>8.3}", "mean", "", "", m.mean).unwrap();
        writeln!(out, "{:>6} {:>12} {:>12} {:>8.3}", "std", "", "", m.std).unwrap();
    }
    out
}
