//! Goal labels recovered from episode logs, and per-cluster balancing of
//! the resulting demonstrations.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{chef_features, GoalLabel};
use super::AgentError;
use crate::game::WaiterRecommendation;
use crate::log::{kinds, replay, replay_prefix, EpisodeLog};
use crate::world::{ChefAction, HeldItem, WorldEvent};

/// One featurized chef state with the goal the chef was pursuing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub goal: GoalLabel,
}

/// Demonstrations grouped by user, with each user's behaviour cluster.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub users: BTreeMap<String, Vec<Sample>>,
    pub clusters: BTreeMap<String, usize>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.users.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn malformed(e: impl std::fmt::Display) -> AgentError {
    AgentError::MalformedLog(e.to_string())
}

/// Pair every chef state in a completed game with the goal its segment ends
/// in. A segment closes when the chef serves a customer or puts an
/// ingredient down on a counter; whatever is still open when a round ends
/// is labelled idle.
pub fn label_goals(log: &EpisodeLog) -> Result<Vec<Sample>, AgentError> {
    if !log.is_complete() {
        return Err(malformed("log does not end with game_over"));
    }
    replay(log).map_err(malformed)?;
    let head = EpisodeLog { records: log.records[..1].to_vec() };
    let mut ep = replay_prefix(&head).map_err(malformed)?;

    let mut out = Vec::new();
    let mut pending: Vec<Vec<f64>> = Vec::new();
    let close = |pending: &mut Vec<Vec<f64>>, goal: GoalLabel, out: &mut Vec<Sample>| {
        out.extend(pending.drain(..).map(|features| Sample { features, goal }));
    };
    for r in &log.records[1..] {
        match r.event_kind.as_str() {
            kinds::CHEF_ACTION => {
                let action: ChefAction = r
                    .payload
                    .get("action")
                    .cloned()
                    .ok_or_else(|| malformed("chef_action without action"))
                    .and_then(|v| serde_json::from_value(v).map_err(malformed))?;
                pending.push(chef_features(&ep.state.observe_chef()));
                for ev in ep.act(action).map_err(malformed)? {
                    let goal = match ev {
                        WorldEvent::Served { seat, dish, .. } => Some(GoalLabel::Serve { seat, dish }),
                        WorldEvent::Placed { item: HeldItem::Ingredient(k), .. } => Some(GoalLabel::Stage(k)),
                        _ => None,
                    };
                    if let Some(goal) = goal {
                        close(&mut pending, goal, &mut out);
                    }
                }
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
                close(&mut pending, GoalLabel::Idle, &mut out);
                ep.end_round().map_err(malformed)?;
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Draw the same number of games from every cluster: the size of the
/// smallest one, sampled without replacement.
pub fn balance_dataset(
    per_user_games: &BTreeMap<String, Vec<Vec<Sample>>>,
    clusters: &BTreeMap<String, usize>,
    seed: u64,
) -> Result<LabeledDataset, AgentError> {
    let mut by_cluster: BTreeMap<usize, Vec<(&String, usize)>> = BTreeMap::new();
    for c in clusters.values() {
        by_cluster.entry(*c).or_default();
    }
    for (user, games) in per_user_games {
        let c = *clusters.get(user).ok_or_else(|| AgentError::UnmappedUser(user.clone()))?;
        by_cluster
            .get_mut(&c)
            .expect("every cluster was inserted")
            .extend((0..games.len()).map(|g| (user, g)));
    }
    if let Some((c, _)) = by_cluster.iter().find(|(_, games)| games.is_empty()) {
        return Err(AgentError::EmptyCluster(*c));
    }
    let quota = by_cluster.values().map(Vec::len).min().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = LabeledDataset::default();
    for games in by_cluster.values() {
        let mut picked: Vec<_> = games.choose_multiple(&mut rng, quota).copied().collect();
        picked.sort();
        for (user, g) in picked {
            data.users
                .entry(user.clone())
                .or_default()
                .extend(per_user_games[user][g].iter().cloned());
            data.clusters.insert(user.clone(), clusters[user]);
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::RuleConfig;
    use crate::layout::{load_layout, DEFAULT_LAYOUT};
    use crate::log::Episode;
    use crate::rules::{CustomerProfile, DishType, Ingredient};
    use crate::scenario::ScenarioConfig;
    use crate::world::CustomerId;
    use std::sync::Arc;

    fn episode() -> Episode {
        let layout = Arc::new(load_layout(DEFAULT_LAYOUT).unwrap());
        Episode::start(layout, ScenarioConfig::uniform(2, CustomerProfile::Tourist, 120), 4, RuleConfig::default())
    }

    fn finish(ep: &mut Episode) {
        while !ep.is_finished() {
            ep.end_round().unwrap();
            if !ep.is_finished() {
                ep.recommend(WaiterRecommendation::default()).unwrap();
            }
        }
    }

    #[test]
    fn waiting_only_is_all_idle() {
        let mut ep = episode();
        for _ in 0..5 {
            ep.act(ChefAction::Wait).unwrap();
        }
        finish(&mut ep);
        let samples = label_goals(&ep.log).unwrap();
        assert_eq!(samples.len(), 5);
        assert!(samples.iter().all(|s| s.goal == GoalLabel::Idle));
    }

    #[test]
    fn stage_and_serve_segments() {
        use ChefAction::*;
        let mut ep = episode();
        let map = ep.state.layout.clone();
        // Walk to the tomato dispenser, take one and set it on a counter.
        let tomato = map.dispenser(Ingredient::Tomato);
        let start = ep.state.world.chef.pose;
        let target = map.poses_facing(tomato).min_by_key(|p| map.pose_distance(start, *p)).unwrap();
        let walk = map.path(start, target).unwrap();
        for d in &walk {
            ep.act(Move(*d)).unwrap();
        }
        ep.act(Interact).unwrap();
        let here = ep.state.world.chef.pose;
        let (counter_pose, _) = map
            .usable_counters()
            .into_iter()
            .flat_map(|c| map.poses_facing(c).map(move |p| (p, c)))
            .min_by_key(|(p, _)| map.pose_distance(here, *p))
            .unwrap();
        for d in map.path(here, counter_pose).unwrap() {
            ep.act(Move(d)).unwrap();
        }
        ep.act(Interact).unwrap();
        let staged_len = ep.log.chef_actions().unwrap().len();
        ep.act(Wait).unwrap();
        ep.end_round().unwrap();

        // Round 3: cook and serve a potato to seat 2.
        ep.recommend(WaiterRecommendation::new([(CustomerId(1), DishType::P)])).unwrap();
        let w = ep.state.world.clone();
        let goal = crate::planning::Goal::serve(CustomerId(1), DishType::P);
        let plan = crate::planning::goap_plan(&map, &w, &goal, 200_000).unwrap();
        for a in &plan.actions {
            ep.act(*a).unwrap();
        }
        ep.act(Wait).unwrap();
        finish(&mut ep);

        let samples = label_goals(&ep.log).unwrap();
        let labels: Vec<GoalLabel> = samples.iter().map(|s| s.goal).collect();
        let n_serve = plan.actions.len();
        let mut expected = vec![GoalLabel::Stage(Ingredient::Tomato); staged_len];
        expected.push(GoalLabel::Idle);
        expected.extend(std::iter::repeat(GoalLabel::Serve { seat: 2, dish: DishType::P }).take(n_serve));
        expected.push(GoalLabel::Idle);
        assert_eq!(labels, expected);
    }

    #[test]
    fn tampered_log_is_rejected() {
        let mut ep = episode();
        ep.act(ChefAction::Wait).unwrap();
        finish(&mut ep);
        let mut log = ep.log.clone();
        assert!(label_goals(&EpisodeLog { records: log.records[..3].to_vec() }).is_err());
        log.records[1].payload = serde_json::json!({ "action": "Interact" });
        assert!(matches!(label_goals(&log), Err(AgentError::MalformedLog(_))));
    }

    fn games(n: usize, tag: f64) -> Vec<Vec<Sample>> {
        (0..n)
            .map(|i| vec![Sample { features: vec![tag, i as f64], goal: GoalLabel::Idle }])
            .collect()
    }

    #[test]
    fn balancing_takes_the_smallest_cluster_size() {
        let per_user: BTreeMap<String, Vec<Vec<Sample>>> = [
            ("a".to_string(), games(27, 0.0)),
            ("b".to_string(), games(25, 1.0)),
            ("c".to_string(), games(15, 1.0)),
            ("d".to_string(), games(55, 2.0)),
        ]
        .into();
        let clusters: BTreeMap<String, usize> =
            [("a".into(), 0), ("b".into(), 1), ("c".into(), 1), ("d".into(), 2)].into();
        let data = balance_dataset(&per_user, &clusters, 1).unwrap();
        let mut per_cluster = [0usize; 3];
        for (user, samples) in &data.users {
            per_cluster[clusters[user]] += samples.len();
        }
        assert_eq!(per_cluster, [27, 27, 27]);
        assert_eq!(data, balance_dataset(&per_user, &clusters, 1).unwrap());
        assert_ne!(data, balance_dataset(&per_user, &clusters, 2).unwrap());
    }

    #[test]
    fn balancing_equal_clusters_keeps_everything() {
        let per_user: BTreeMap<String, Vec<Vec<Sample>>> =
            [("a".to_string(), games(4, 0.0)), ("b".to_string(), games(4, 1.0))].into();
        let clusters: BTreeMap<String, usize> = [("a".into(), 0), ("b".into(), 1)].into();
        let data = balance_dataset(&per_user, &clusters, 9).unwrap();
        assert_eq!(data.len(), 8);
    }

    #[test]
    fn balancing_rejects_empty_clusters() {
        let per_user: BTreeMap<String, Vec<Vec<Sample>>> = [("a".to_string(), games(4, 0.0))].into();
        let clusters: BTreeMap<String, usize> = [("a".into(), 0), ("b".into(), 1)].into();
        assert_eq!(balance_dataset(&per_user, &clusters, 0), Err(AgentError::EmptyCluster(1)));
        let unmapped: BTreeMap<String, usize> = BTreeMap::new();
        assert!(matches!(balance_dataset(&per_user, &unmapped, 0), Err(AgentError::UnmappedUser(_))));
    }
}
